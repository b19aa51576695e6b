#include "norad/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "norad/errors.hpp"

namespace norad {

namespace {

namespace fs = std::filesystem;

std::uint64_t bswap64(std::uint64_t x) {
  x = ((x & 0x00ff00ff00ff00ffULL) << 8) | ((x >> 8) & 0x00ff00ff00ff00ffULL);
  x = ((x & 0x0000ffff0000ffffULL) << 16) | ((x >> 16) & 0x0000ffff0000ffffULL);
  return (x << 32) | (x >> 32);
}

std::string blob_path_for(const std::string& manifest_path, const std::string& blob_name) {
  return (fs::path(manifest_path).parent_path() / blob_name).string();
}

void write_le_doubles(std::ofstream& out, const double* data, std::size_t count) {
  static_assert(sizeof(double) == 8);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], 8);
    if constexpr (std::endian::native == std::endian::big) bits = bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
}

void read_le_doubles(std::ifstream& in, double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    char buf[8];
    in.read(buf, 8);
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = bswap64(bits);
    std::memcpy(&data[i], &bits, 8);
  }
}

}  // namespace

void save_checkpoint(const std::string& manifest_path, const Checkpoint& cp) {
  const std::string blob_name = fs::path(manifest_path).stem().string() + ".bin";
  nlohmann::json manifest;
  manifest["version"] = kCheckpointVersion;
  manifest["config"] = cp.config;
  manifest["blob"] = blob_name;

  nlohmann::json plist = nlohmann::json::array();
  std::size_t offset = 0;
  for (const Parameter& p : cp.params.items()) {
    plist.push_back({{"name", p.name},
                     {"shape", p.tensor.shape()},
                     {"offset", offset},
                     {"numel", p.tensor.numel()},
                     {"trainable", p.trainable}});
    offset += p.tensor.numel() * 8;
  }
  manifest["parameters"] = std::move(plist);
  manifest["blob_bytes"] = offset;

  std::ofstream blob(blob_path_for(manifest_path, blob_name), std::ios::binary);
  if (!blob) throw IoError("cannot write checkpoint blob next to " + manifest_path);
  for (const Parameter& p : cp.params.items()) {
    write_le_doubles(blob, p.tensor.data(), p.tensor.numel());
  }
  blob.close();
  if (!blob) throw IoError("failed writing checkpoint blob for " + manifest_path);

  std::ofstream mf(manifest_path);
  if (!mf) throw IoError("cannot write checkpoint manifest " + manifest_path);
  mf << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw IoError("cannot open checkpoint manifest " + manifest_path);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint manifest " + manifest_path + ": " + e.what());
  }

  if (!manifest.contains("version") || !manifest["version"].is_number_integer()) {
    throw ParseError("checkpoint manifest " + manifest_path + ": missing version");
  }
  const int version = manifest["version"].get<int>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) +
                       " not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }

  Checkpoint cp;
  cp.config = manifest.value("config", nlohmann::json::object());

  const std::string blob_path =
      blob_path_for(manifest_path, manifest.at("blob").get<std::string>());
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("cannot open checkpoint blob " + blob_path);
  blob.seekg(0, std::ios::end);
  const std::uint64_t blob_bytes = static_cast<std::uint64_t>(blob.tellg());
  blob.seekg(0);
  if (manifest.contains("blob_bytes") &&
      manifest["blob_bytes"].get<std::uint64_t>() != blob_bytes) {
    throw ConsistencyError("checkpoint blob " + blob_path + " has " +
                           std::to_string(blob_bytes) + " bytes, manifest expects " +
                           std::to_string(manifest["blob_bytes"].get<std::uint64_t>()));
  }

  for (const auto& entry : manifest.at("parameters")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto numel = entry.at("numel").get<std::uint64_t>();
    Tensor t(shape);
    if (t.numel() != numel || offset + numel * 8 > blob_bytes) {
      throw ConsistencyError("checkpoint parameter " + name + " inconsistent with blob");
    }
    blob.seekg(static_cast<std::streamoff>(offset));
    read_le_doubles(blob, t.data(), t.numel());
    if (!blob) throw IoError("failed reading checkpoint blob " + blob_path);
    cp.params.add(name, std::move(t), entry.value("trainable", true));
  }
  return cp;
}

}  // namespace norad
