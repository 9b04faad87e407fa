#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>

#include <openssl/evp.h>

#include "mde/config.hpp"
#include "mde/error.hpp"

#ifndef MDE_VERSION
#define MDE_VERSION "0.0.0"
#endif

namespace mde {

inline constexpr const char* kVersion = MDE_VERSION;
inline constexpr const char* kManifestFile = "manifest.txt";

// Hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for checksumming");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw DataError("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

// Resolved config (key=value, loadable as a config file) plus comment lines
// recording the code version and dataset checksums.
inline void write_run_manifest(std::ostream& os, const TrainConfig& cfg) {
  os << "# mde " << kVersion << " run manifest\n";
  for (const std::string* path : {&cfg.train_path, &cfg.valid_path,
                                  &cfg.test_path}) {
    if (!path->empty()) os << "# sha256 " << sha256_file(*path) << "  " << *path << '\n';
  }
  write_config(os, cfg);
}

}  // namespace mde
