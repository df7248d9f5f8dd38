#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "autoad/error.hpp"
#include "autoad/serialize.hpp"

namespace autoad {

/// JSON documents and append-only CSV files under one data directory.
class FileStore {
 public:
  explicit FileStore(std::filesystem::path root) : root_(std::move(root)) {
    for (const char* sub : {"jobs", "models", "scores", "health", "tuning"})
      std::filesystem::create_directories(root_ / sub);
  }

  const std::filesystem::path& root() const { return root_; }

  /// Write-to-temp then rename, so readers never see a partial document.
  void write_json(const std::filesystem::path& rel, const json& doc) const {
    const auto target = root_ / rel;
    std::filesystem::create_directories(target.parent_path());
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
      out << doc.dump(2) << '\n';
      if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
  }

  bool exists(const std::filesystem::path& rel) const { return std::filesystem::exists(root_ / rel); }

  json read_json(const std::filesystem::path& rel) const {
    std::ifstream in(root_ / rel);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + (root_ / rel).string());
    try {
      return json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Io, (root_ / rel).string() + ": " + e.what());
    }
  }

  /// Appends one line; `header` is written first when the file is new.
  void append_line(const std::filesystem::path& rel, const std::string& line, const std::string& header = {}) const {
    const auto target = root_ / rel;
    std::filesystem::create_directories(target.parent_path());
    const bool fresh = !std::filesystem::exists(target);
    std::ofstream out(target, std::ios::app);
    if (!out) throw Error(ErrorKind::Io, "cannot append to " + target.string());
    if (fresh && !header.empty()) out << header << '\n';
    out << line << '\n';
  }

  /// Sorted file names (without directory) in a subdirectory with the given extension.
  std::vector<std::string> list(const std::filesystem::path& sub, const std::string& ext) const {
    std::vector<std::string> names;
    const auto dir = root_ / sub;
    if (!std::filesystem::exists(dir)) return names;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ext) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
  }

 private:
  std::filesystem::path root_;
};

}  // namespace autoad
