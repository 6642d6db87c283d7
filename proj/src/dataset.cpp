#include "popnet/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "popnet/errors.hpp"
#include "popnet/rng.hpp"

namespace fs = std::filesystem;

namespace popnet {

namespace {

cv::Mat read_or_throw(const std::string& path, int flags) {
    cv::Mat m = cv::imread(path, flags);
    if (m.empty()) throw DataError("cannot read image: " + path);
    return m;
}

void write_or_throw(const std::string& path, const cv::Mat& m) {
    fs::create_directories(fs::path(path).parent_path());
    if (!cv::imwrite(path, m)) throw DataError("cannot write image: " + path);
}

}  // namespace

std::vector<std::string> list_png_stems(const std::string& dir) {
    std::vector<std::string> stems;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto p = entry.path();
        if (p.extension() == ".png") stems.push_back(p.stem().string());
    }
    std::sort(stems.begin(), stems.end());
    return stems;
}

RgbImage load_rgb_png(const std::string& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_COLOR);  // BGR, 8-bit
    Gridf r(m.rows, m.cols), g(m.rows, m.cols), b(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x) {
            b.at(y, x) = row[x][0] / 255.0f;
            g.at(y, x) = row[x][1] / 255.0f;
            r.at(y, x) = row[x][2] / 255.0f;
        }
    }
    return RgbImage(std::move(r), std::move(g), std::move(b));
}

DepthMap load_depth_png(const std::string& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_UNCHANGED);
    if (m.channels() != 1) throw DataError("depth png must be single channel: " + path);
    Gridf d(m.rows, m.cols);
    if (m.depth() == CV_16U) {
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) d.at(y, x) = m.at<uint16_t>(y, x) / 65535.0f;
    } else if (m.depth() == CV_8U) {
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) d.at(y, x) = m.at<uint8_t>(y, x) / 255.0f;
    } else {
        throw DataError("depth png must be 8- or 16-bit: " + path);
    }
    return DepthMap(std::move(d));
}

BinaryMask load_mask_png(const std::string& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_GRAYSCALE);
    Gridu8 g(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) g.at(y, x) = m.at<uint8_t>(y, x) > 127 ? 1 : 0;
    return BinaryMask(std::move(g));
}

SoftMask load_soft_mask_png(const std::string& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_GRAYSCALE);
    Gridf g(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) g.at(y, x) = m.at<uint8_t>(y, x) / 255.0f;
    return SoftMask(std::move(g));
}

void save_rgb_png(const std::string& path, const RgbImage& img) {
    cv::Mat m(img.h(), img.w(), CV_8UC3);
    auto q = [](float v) {
        return static_cast<uint8_t>(std::clamp(std::lround(v * 255.0f), 0l, 255l));
    };
    for (int y = 0; y < img.h(); ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.w(); ++x)
            row[x] = {q(img.b.at(y, x)), q(img.g.at(y, x)), q(img.r.at(y, x))};
    }
    write_or_throw(path, m);
}

void save_depth_png(const std::string& path, const Gridf& depth) {
    cv::Mat m(depth.h, depth.w, CV_16UC1);
    for (int y = 0; y < depth.h; ++y)
        for (int x = 0; x < depth.w; ++x)
            m.at<uint16_t>(y, x) = static_cast<uint16_t>(
                std::clamp(std::lround(depth.at(y, x) * 65535.0f), 0l, 65535l));
    write_or_throw(path, m);
}

void save_gray8_png(const std::string& path, const Gridf& values) {
    cv::Mat m(values.h, values.w, CV_8UC1);
    for (int y = 0; y < values.h; ++y)
        for (int x = 0; x < values.w; ++x)
            m.at<uint8_t>(y, x) = static_cast<uint8_t>(
                std::clamp(std::lround(values.at(y, x) * 255.0f), 0l, 255l));
    write_or_throw(path, m);
}

void save_mask_png(const std::string& path, const BinaryMask& mask) {
    cv::Mat m(mask.h(), mask.w(), CV_8UC1);
    for (int y = 0; y < mask.h(); ++y)
        for (int x = 0; x < mask.w(); ++x) m.at<uint8_t>(y, x) = mask.data.at(y, x) ? 255 : 0;
    write_or_throw(path, m);
}

DatasetIndex index_dataset(const std::string& root) {
    DatasetIndex idx;
    idx.root = root;
    const std::string images = root + "/images";
    const std::string depths = root + "/depths";
    const std::string masks = root + "/masks";
    const std::string surfaces = root + "/surfaces";
    if (!fs::is_directory(images) || !fs::is_directory(depths) || !fs::is_directory(masks))
        throw DataError("dataset root must contain images/, depths/, masks/: " + root);
    idx.stems = list_png_stems(images);
    if (idx.stems.empty()) throw DataError("dataset has no images: " + images);
    idx.has_surfaces = fs::is_directory(surfaces);

    std::string missing;
    for (const auto& stem : idx.stems) {
        for (const auto* sub : {"depths", "masks"}) {
            const std::string p = root + "/" + sub + "/" + stem + ".png";
            if (!fs::exists(p)) missing += "\n  " + p;
        }
        if (idx.has_surfaces && !fs::exists(surfaces + "/" + stem + ".png"))
            missing += "\n  " + surfaces + "/" + stem + ".png";
    }
    if (!missing.empty()) throw DataError("dataset is missing modality files:" + missing);
    return idx;
}

SceneSample load_sample(const DatasetIndex& index, const std::string& stem) {
    SceneSample s;
    s.stem = stem;
    s.rgb = load_rgb_png(index.root + "/images/" + stem + ".png");
    s.depth = load_depth_png(index.root + "/depths/" + stem + ".png");
    s.mask = load_mask_png(index.root + "/masks/" + stem + ".png");
    if (index.has_surfaces) {
        s.surface = ContactSurface(
            load_depth_png(index.root + "/surfaces/" + stem + ".png").data);
        s.has_surface = true;
    }
    if (!s.rgb.r.same_shape(s.depth.data) || s.rgb.h() != s.mask.h() || s.rgb.w() != s.mask.w())
        throw DataError("sample modalities disagree on shape: " + stem);
    return s;
}

uint64_t file_checksum(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for checksum: " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (f) {
        f.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<size_t>(f.gcount()), h);
    }
    return h;
}

}  // namespace popnet
