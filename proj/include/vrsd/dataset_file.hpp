#pragma once

#include <zlib.h>

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vrsd/dataset.hpp"

namespace vrsd {

/// Reads a whole file; `.gz` files are decompressed transparently.
inline std::string read_text_file(const std::string& path) {
  const bool gz = path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string out;
    char buf[1 << 16];
    int got = 0;
    while ((got = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(got));
    const bool failed = got < 0;
    gzclose(f);
    if (failed) throw std::runtime_error("gzip decode failed for " + path);
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Dataset load_libsvm_file(const std::string& path,
                                std::optional<std::size_t> expected_dim = std::nullopt) {
  Dataset ds = parse_libsvm(read_text_file(path), expected_dim);
  ds.set_id(path);
  return ds;
}

}  // namespace vrsd
