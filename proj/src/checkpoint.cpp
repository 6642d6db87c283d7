#include "popnet/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace popnet {

namespace {

constexpr char kMagic[4] = {'P', 'N', 'C', 'K'};
constexpr uint32_t kVersion = 1;

struct NamedTensor {
    std::string name;
    ad::Tensor<float>* t;
};

std::vector<NamedTensor> state_tensors(PopNetModel& model) {
    std::vector<NamedTensor> out;
    for (Param* p : model.params()) {
        out.push_back({p->name, &p->value});
        out.push_back({"adam.m." + p->name, &p->m});
        out.push_back({"adam.v." + p->name, &p->v});
    }
    for (auto& [name, t] : model.buffers()) out.push_back({name, t});
    return out;
}

}  // namespace

void save_checkpoint(const std::string& path, PopNetModel& model, const TrainConfig& cfg,
                     const TrainerState& state) {
    auto tensors = state_tensors(model);
    nlohmann::json manifest;
    manifest["format_version"] = kVersion;
    manifest["config"] = nlohmann::json::parse(config_to_json(cfg));
    manifest["config_hash"] = config_hash(cfg);
    manifest["step"] = state.step;
    manifest["seed"] = cfg.seed;
    manifest["rng_state"] = state.rng_state;
    manifest["permutation"] = state.permutation;
    manifest["cursor"] = state.cursor;
    nlohmann::json dir = nlohmann::json::array();
    uint64_t offset = 0;
    for (const auto& nt : tensors) {
        dir.push_back({{"name", nt.name},
                       {"shape", {nt.t->n, nt.t->c, nt.t->h, nt.t->w}},
                       {"offset", offset}});
        offset += static_cast<uint64_t>(nt.t->size()) * sizeof(float);
    }
    manifest["tensors"] = dir;
    const std::string mjson = manifest.dump();

    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write checkpoint: " + path);
    f.write(kMagic, 4);
    const uint32_t version = kVersion;
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t mlen = mjson.size();
    f.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    f.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
    for (const auto& nt : tensors)
        f.write(reinterpret_cast<const char*>(nt.t->data()),
                static_cast<std::streamsize>(nt.t->size() * sizeof(float)));
    if (!f) throw DataError("short write while saving checkpoint: " + path);
}

namespace {

nlohmann::json read_manifest(std::ifstream& f, const std::string& path) {
    char magic[4];
    uint32_t version = 0;
    uint64_t mlen = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    f.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a popnet checkpoint: " + path);
    if (version != kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " +
                        path);
    std::string mjson(mlen, '\0');
    f.read(mjson.data(), static_cast<std::streamsize>(mlen));
    if (!f) throw DataError("truncated checkpoint manifest: " + path);
    return nlohmann::json::parse(mjson);
}

}  // namespace

TrainConfig peek_checkpoint_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint: " + path);
    const auto manifest = read_manifest(f, path);
    return config_from_json(manifest.at("config").dump());
}

void load_checkpoint(const std::string& path, PopNetModel& model, const TrainConfig& expected,
                     TrainerState* state) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint: " + path);
    const auto manifest = read_manifest(f, path);

    const std::string stored_hash = manifest.at("config_hash");
    if (stored_hash != config_hash(expected))
        throw DataError("checkpoint config hash " + stored_hash +
                        " does not match the requested config " + config_hash(expected));

    auto tensors = state_tensors(model);
    const auto& dir = manifest.at("tensors");
    if (dir.size() != tensors.size())
        throw DataError("checkpoint tensor count mismatch: " + path);
    const std::streampos payload_start = f.tellg();
    for (size_t i = 0; i < tensors.size(); ++i) {
        const auto& entry = dir.at(i);
        if (entry.at("name") != tensors[i].name)
            throw DataError("checkpoint tensor order mismatch at '" + tensors[i].name + "'");
        const auto shape = entry.at("shape");
        ad::Tensor<float>& t = *tensors[i].t;
        if (shape.at(0) != t.n || shape.at(1) != t.c || shape.at(2) != t.h ||
            shape.at(3) != t.w)
            throw DataError("checkpoint tensor shape mismatch at '" + tensors[i].name + "'");
        f.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<uint64_t>()));
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(float)));
        if (!f) throw DataError("truncated checkpoint payload: " + path);
    }
    if (state) {
        state->step = manifest.at("step");
        state->rng_state = manifest.at("rng_state");
        state->permutation = manifest.at("permutation").get<std::vector<int>>();
        state->cursor = manifest.at("cursor");
    }
}

}  // namespace popnet
