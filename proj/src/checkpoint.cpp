#include "disco/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace disco {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kBlob = "params.bin";

void put_le(std::vector<unsigned char>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& [n, m] : arrays) {
    if (n == name) return true;
  }
  return false;
}

const Mat& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, m] : arrays) {
    if (n == name) return m;
  }
  throw Error("checkpoint has no array '" + name + "'");
}

std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  std::vector<unsigned char> blob;
  json entries = json::array();
  for (const auto& [name, m] : ckpt.arrays) {
    json e;
    e["name"] = name;
    e["shape"] = {m.rows(), m.cols()};
    e["dtype"] = "f64";
    e["offset"] = blob.size();
    entries.push_back(e);
    for (Index i = 0; i < m.size(); ++i) put_le(blob, m.data()[i]);
  }
  json manifest;
  manifest["format"] = "disco-checkpoint";
  manifest["version"] = 1;
  manifest["byte_order"] = "little";
  manifest["blob"] = kBlob;
  manifest["blob_bytes"] = blob.size();
  manifest["blob_fnv1a64"] = hex64(fnv1a64(blob.data(), blob.size()));
  manifest["entries"] = entries;
  manifest["meta"] = ckpt.meta;

  std::ofstream b(dir / kBlob, std::ios::binary | std::ios::trunc);
  b.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!b) throw Error("cannot write " + (dir / kBlob).string());
  std::ofstream m(dir / kManifest, std::ios::trunc);
  m << manifest.dump(2) << '\n';
  if (!m) throw Error("cannot write " + (dir / kManifest).string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream m(dir / kManifest);
  if (!m) throw Error("missing checkpoint manifest " + (dir / kManifest).string());
  json manifest;
  try {
    manifest = json::parse(m);
  } catch (const json::exception& e) {
    throw Error((dir / kManifest).string() + ": " + e.what());
  }
  try {
    if (manifest.at("format") != "disco-checkpoint") throw Error("not a disco checkpoint: " + dir.string());
    std::ifstream b(dir / manifest.at("blob").get<std::string>(), std::ios::binary);
    if (!b) throw Error("missing checkpoint blob in " + dir.string());
    std::vector<unsigned char> blob((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    const auto expected = manifest.at("blob_bytes").get<std::uint64_t>();
    std::uint64_t declared = 0;
    for (const auto& e : manifest.at("entries")) {
      declared += 8ULL * e.at("shape")[0].get<std::uint64_t>() * e.at("shape")[1].get<std::uint64_t>();
    }
    if (declared != expected) {
      throw Error("corrupt checkpoint manifest: entries cover " + std::to_string(declared) + " bytes, blob_bytes says " +
                  std::to_string(expected));
    }
    if (blob.size() != expected) {
      throw Error("corrupt checkpoint blob: expected " + std::to_string(expected) + " bytes, found " +
                  std::to_string(blob.size()));
    }
    if (hex64(fnv1a64(blob.data(), blob.size())) != manifest.at("blob_fnv1a64").get<std::string>()) {
      throw Error("checkpoint hash mismatch between manifest and blob in " + dir.string());
    }
    Checkpoint ckpt;
    for (const auto& e : manifest.at("entries")) {
      const auto rows = e.at("shape")[0].get<Index>();
      const auto cols = e.at("shape")[1].get<Index>();
      const auto off = e.at("offset").get<std::size_t>();
      if (off + static_cast<std::size_t>(rows * cols) * 8 > blob.size()) throw Error("checkpoint entry out of range");
      Mat v(rows, cols);
      for (Index i = 0; i < v.size(); ++i) v.data()[i] = get_le(blob.data() + off + 8 * static_cast<std::size_t>(i));
      ckpt.add(e.at("name").get<std::string>(), std::move(v));
    }
    ckpt.meta = manifest.value("meta", json::object());
    return ckpt;
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace disco
