#pragma once

// Persistent location -> codebook store held by the surface-controller
// agent. File format: one JSON document
//   {"version":1,"entries":{"<location_id>":"<codebook text>"}}
// written atomically (temp file + rename) so a crash mid-save never
// truncates the previous store.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rislab/core.hpp"

namespace rislab {

inline constexpr int kStoreFormatVersion = 1;
inline constexpr std::size_t kMaxLocationIdLength = 64;

inline void validate_location_id(const std::string& id) {
  if (id.empty()) throw std::invalid_argument("location id must be nonempty");
  if (id.size() > kMaxLocationIdLength)
    throw std::invalid_argument("location id exceeds " +
                                std::to_string(kMaxLocationIdLength) + " characters");
}

class CodebookStore {
 public:
  CodebookStore() = default;

  // Missing file -> empty store; a present but unreadable/invalid file is
  // an error (never silently discard user codebooks).
  static CodebookStore load(const std::string& path) {
    CodebookStore store;
    if (!std::filesystem::exists(path)) return store;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open store file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("store file " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("version") || !doc.contains("entries"))
      throw std::runtime_error("store file " + path + " missing version/entries");
    if (!doc["version"].is_number_integer() ||
        doc["version"].get<int>() != kStoreFormatVersion)
      throw std::runtime_error("store file " + path + " has unsupported version");
    if (!doc["entries"].is_object())
      throw std::runtime_error("store file " + path + " entries must be an object");
    for (const auto& [id, text] : doc["entries"].items()) {
      validate_location_id(id);
      if (!text.is_string())
        throw std::runtime_error("store entry \"" + id + "\" must be a codebook text");
      store.entries_.emplace(id, parse_text(text.get<std::string>()));
    }
    return store;
  }

  void save(const std::string& path) const {
    nlohmann::ordered_json doc;
    doc["version"] = kStoreFormatVersion;
    nlohmann::ordered_json entries = nlohmann::ordered_json::object();
    for (const auto& [id, cb] : entries_) entries[id] = to_text(cb);
    doc["entries"] = entries;

    const std::filesystem::path target(path);
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write store file " + tmp.string());
      out << doc.dump(2) << "\n";
      out.flush();
      if (!out) throw std::runtime_error("short write to store file " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("cannot rename store file into place: " + target.string());
    }
  }

  void put(const std::string& id, Codebook cb) {
    validate_location_id(id);
    entries_.insert_or_assign(id, std::move(cb));
  }

  const Codebook* find(const std::string& id) const {
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool erase(const std::string& id) { return entries_.erase(id) > 0; }

  // Sorted, as the list_cb reply requires.
  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [id, cb] : entries_) out.push_back(id);
    return out;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, Codebook> entries_;
};

}  // namespace rislab
