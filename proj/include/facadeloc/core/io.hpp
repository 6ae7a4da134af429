#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "facadeloc/core/errors.hpp"

namespace facadeloc {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes a group of files so that either all of them appear or none does:
// everything goes to temporaries next to the targets first, then each is
// renamed into place.
class AtomicWriter {
 public:
  void add(std::filesystem::path target, std::string contents) {
    pending_.emplace_back(std::move(target), std::move(contents));
  }

  void commit() {
    namespace fs = std::filesystem;
    std::vector<fs::path> temps;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
    };
    for (const auto& [target, contents] : pending_) {
      const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
      std::error_code ec;
      if (!fs::is_directory(dir, ec)) {
        cleanup();
        throw IoError("output directory does not exist: " + dir.string());
      }
      fs::path tmp = target;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) {
        cleanup();
        throw IoError("cannot write " + tmp.string());
      }
      temps.push_back(tmp);
      out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
      out.close();
      if (!out) {
        cleanup();
        throw IoError("short write on " + tmp.string());
      }
    }
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      std::filesystem::rename(temps[i], pending_[i].first);
    }
    pending_.clear();
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> pending_;
};

inline void write_file_atomic(const std::filesystem::path& path, std::string contents) {
  AtomicWriter w;
  w.add(path, std::move(contents));
  w.commit();
}

}  // namespace facadeloc
