#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "dataref/dictionary.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return DATAREF_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return DATAREF_FIXTURE_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream(path, std::ios::binary | std::ios::trunc) << content;
}

/// Bundled word lists and seeds; the blacklist is left empty.
inline const dataref::WordLists& default_wordlists() {
  static const dataref::WordLists lists =
      dataref::load_wordlists(data_dir() / "wordlists", data_dir() / "seeds.txt");
  return lists;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "dataref-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::size_t uniform(std::mt19937& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <class T>
const T& pick(std::mt19937& rng, const std::vector<T>& items) {
  return items[uniform(rng, 0, items.size() - 1)];
}

inline std::string random_word(std::mt19937& rng, const std::string& alphabet, std::size_t min_len,
                               std::size_t max_len) {
  std::string w;
  const std::size_t n = uniform(rng, min_len, max_len);
  for (std::size_t i = 0; i < n; ++i) w += alphabet[uniform(rng, 0, alphabet.size() - 1)];
  return w;
}

}  // namespace testing_support
