#pragma once

// Checkpoint directory: manifest.json lists named arrays with shape and
// byte offset; params.bin holds their little-endian f64 values back to
// back. The manifest also records the blob length and FNV-1a hash, and
// carries free-form metadata (config echo, training state).

#include "disco/common.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace disco {

struct Checkpoint {
  std::vector<std::pair<std::string, Mat>> arrays;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  void add(std::string name, Mat value) { arrays.emplace_back(std::move(name), std::move(value)); }
  bool contains(const std::string& name) const;
  /// Throws if absent.
  const Mat& get(const std::string& name) const;
};

std::uint64_t fnv1a64(const unsigned char* data, std::size_t n);

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
/// Verifies blob length and hash before decoding.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace disco
