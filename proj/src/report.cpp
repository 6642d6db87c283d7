#include "popnet/report.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "popnet/errors.hpp"

namespace popnet {

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["per_image"] = nlohmann::json::array();
    for (const auto& e : report.per_image)
        j["per_image"].push_back({{"stem", e.stem},
                                  {"M", e.m.mae},
                                  {"Fm", e.m.max_f},
                                  {"Sm", e.m.s_measure},
                                  {"Em", e.m.max_e}});
    j["mean"] = {{"M", report.mean.mae},
                 {"Fm", report.mean.max_f},
                 {"Sm", report.mean.s_measure},
                 {"Em", report.mean.max_e}};
    j["skipped"] = report.skipped;
    return j.dump(2);
}

void write_report(const std::string& json_path, const MetricsReport& report) {
    const auto parent = std::filesystem::path(json_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    {
        std::ofstream f(json_path);
        if (!f) throw DataError("cannot write report: " + json_path);
        f << report_to_json(report) << "\n";
    }
    std::filesystem::path csv_path(json_path);
    csv_path.replace_extension(".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write report csv: " + csv_path.string());
    csv << "stem,M,Fm,Sm,Em\n";
    char line[256];
    for (const auto& e : report.per_image) {
        snprintf(line, sizeof(line), "%s,%.9f,%.9f,%.9f,%.9f\n", e.stem.c_str(), e.m.mae,
                 e.m.max_f, e.m.s_measure, e.m.max_e);
        csv << line;
    }
    snprintf(line, sizeof(line), "mean,%.9f,%.9f,%.9f,%.9f\n", report.mean.mae,
             report.mean.max_f, report.mean.s_measure, report.mean.max_e);
    csv << line;
}

MetricsReport read_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open report: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed report " + path + ": " + e.what());
    }
    MetricsReport r;
    try {
        for (const auto& e : j.at("per_image"))
            r.per_image.push_back(
                {e.at("stem"), {e.at("M"), e.at("Fm"), e.at("Sm"), e.at("Em")}});
        const auto& m = j.at("mean");
        r.mean = {m.at("M"), m.at("Fm"), m.at("Sm"), m.at("Em")};
        if (j.contains("skipped"))
            r.skipped = j.at("skipped").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed report " + path + ": " + e.what());
    }
    return r;
}

}  // namespace popnet
