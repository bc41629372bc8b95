#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcxl/image.hpp"
#include "fcxl/mask.hpp"

namespace fcxl {

struct DatasetRecord {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path mask;
  std::optional<std::filesystem::path> initial_mask;
};

struct Sample {
  std::string id;
  RgbImage image;
  BinaryMask gt;
  std::optional<BinaryMask> initial_mask;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<Sample> samples;        // sorted by id
  std::vector<std::string> skipped;   // ids dropped for an empty ground truth
};

/// Reads root/index.json: either an array of records or {"samples": [...]},
/// each {id, image, mask, initial_mask?} with paths relative to root. Masks
/// are 8-bit PNGs binarized at 128. Samples with an all-zero mask are skipped
/// with a warning; missing files, duplicate ids and size mismatches are hard
/// errors naming the sample.
Dataset load_dataset(const std::filesystem::path& root);

std::vector<DatasetRecord> read_index(const std::filesystem::path& root);
void write_index(const std::filesystem::path& root, const std::vector<DatasetRecord>& records);

}  // namespace fcxl
