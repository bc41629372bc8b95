#include "fcxl/dataset.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fcxl/image_io.hpp"

namespace fcxl {

namespace fs = std::filesystem;

namespace {

template <typename F>
auto with_sample(const std::string& id, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DatasetError&) {
    throw;
  } catch (const Error& e) {
    throw DatasetError(e.code(), "sample '" + id + "': " + e.what());
  }
}

}  // namespace

std::vector<DatasetRecord> read_index(const fs::path& root) {
  const fs::path index = root / "index.json";
  if (!fs::exists(index)) throw DatasetError("missing-index", "no index.json under " + root.string());
  nlohmann::json j;
  try {
    const Bytes raw = read_file(index);
    j = nlohmann::json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("bad-index", index.string() + ": " + e.what());
  }
  const nlohmann::json& list = j.is_object() && j.contains("samples") ? j["samples"] : j;
  if (!list.is_array()) throw DatasetError("bad-index", "index.json must list sample records");
  std::vector<DatasetRecord> out;
  std::set<std::string> seen;
  for (const auto& r : list) {
    try {
      DatasetRecord rec{r.at("id").get<std::string>(), r.at("image").get<std::string>(),
                        r.at("mask").get<std::string>(), std::nullopt};
      if (r.contains("initial_mask") && !r["initial_mask"].is_null()) {
        rec.initial_mask = r["initial_mask"].get<std::string>();
      }
      if (!seen.insert(rec.id).second) throw DatasetError("duplicate-id", "sample id '" + rec.id + "' repeats");
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("bad-index", std::string("malformed record: ") + e.what());
    }
  }
  return out;
}

void write_index(const fs::path& root, const std::vector<DatasetRecord>& records) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j{{"id", r.id}, {"image", r.image.generic_string()}, {"mask", r.mask.generic_string()}};
    if (r.initial_mask) j["initial_mask"] = r.initial_mask->generic_string();
    list.push_back(std::move(j));
  }
  write_file_atomic(root / "index.json", nlohmann::json{{"samples", list}}.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& root) {
  Dataset ds;
  ds.root = root;
  for (const auto& rec : read_index(root)) {
    auto require = [&](const fs::path& rel) {
      const fs::path p = root / rel;
      if (!fs::exists(p)) throw DatasetError("missing-file", "sample '" + rec.id + "': " + p.string() + " not found");
      return p;
    };
    Sample s;
    s.id = rec.id;
    s.image = with_sample(rec.id, [&] { return load_image(require(rec.image)); });
    s.gt = with_sample(rec.id, [&] { return load_mask(require(rec.mask)); });
    if (s.gt.size() != s.image.size()) {
      throw DatasetError("dim-mismatch", "sample '" + rec.id + "': mask size differs from image size");
    }
    if (rec.initial_mask) {
      s.initial_mask = with_sample(rec.id, [&] { return load_mask(require(*rec.initial_mask)); });
      if (s.initial_mask->size() != s.image.size()) {
        throw DatasetError("dim-mismatch", "sample '" + rec.id + "': initial mask size differs from image size");
      }
    }
    if (!s.gt.any()) {
      spdlog::warn("skipping sample '{}': ground-truth mask is empty", rec.id);
      ds.skipped.push_back(rec.id);
      continue;
    }
    ds.samples.push_back(std::move(s));
  }
  std::sort(ds.samples.begin(), ds.samples.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  std::sort(ds.skipped.begin(), ds.skipped.end());
  return ds;
}

}  // namespace fcxl
