#pragma once

// Dataset layout shared by the synthetic generator and real-data ingestion:
//   root/images/*.png    8-bit 3-channel RGB, value/255
//   root/depths/*.png    16-bit single channel, value/65535 (nearness)
//   root/masks/*.png     8-bit single channel, >127 -> 1
//   root/surfaces/*.png  optional, 16-bit single channel
//   root/manifest.json
// Matching stems across subdirectories identify one sample.

#include <optional>
#include <string>
#include <vector>

#include "popnet/grid.hpp"

namespace popnet {

// Sorted stems (filenames without extension) of *.png files in a directory.
std::vector<std::string> list_png_stems(const std::string& dir);

RgbImage load_rgb_png(const std::string& path);
DepthMap load_depth_png(const std::string& path);      // 16-bit gray
BinaryMask load_mask_png(const std::string& path);     // 8-bit gray, >127
SoftMask load_soft_mask_png(const std::string& path);  // 8-bit gray, /255

void save_rgb_png(const std::string& path, const RgbImage& img);
void save_depth_png(const std::string& path, const Gridf& depth);     // 16-bit
void save_gray8_png(const std::string& path, const Gridf& values);    // 8-bit, value*255
void save_mask_png(const std::string& path, const BinaryMask& mask);  // 8-bit, 0/255

struct DatasetIndex {
    std::string root;
    std::vector<std::string> stems;
    bool has_surfaces = false;
};

// Scans root and verifies every stem has all required modalities. Missing
// files are reported together in the error message.
DatasetIndex index_dataset(const std::string& root);

SceneSample load_sample(const DatasetIndex& index, const std::string& stem);

uint64_t file_checksum(const std::string& path);

}  // namespace popnet
