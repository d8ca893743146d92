#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "loglo/operator.hpp"

namespace loglo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMagic = "LOGLO-CKPT/1";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

}  // namespace

std::string save_checkpoint(const LogloModel& m, const std::string& dir, Index epoch) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  const std::string stem = "checkpoint_" + std::to_string(epoch);
  const fs::path bin_path = fs::path(dir) / (stem + ".bin");
  const fs::path json_path = fs::path(dir) / (stem + ".json");

  json entries = json::array();
  std::int64_t offset = 0;
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write " + bin_path.string());
  for (const auto& p : m.params()) {
    entries.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", offset}, {"count", p.value.size()}});
    bin.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    offset += p.value.size() * static_cast<std::int64_t>(sizeof(double));
  }
  bin.close();
  if (!bin) throw IoError("failed writing " + bin_path.string());

  json manifest{{"magic", kMagic},
                {"epoch", epoch},
                {"config", m.config().to_json()},
                {"blob", bin_path.filename().string()},
                {"blob_bytes", offset},
                {"params", entries}};
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + json_path.string());
  return json_path.string();
}

LogloModel load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected) {
  fs::path manifest_path(path);
  if (manifest_path.extension() == ".bin") manifest_path.replace_extension(".json");
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open checkpoint manifest " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!manifest.is_object() || manifest.value("magic", "") != kMagic) {
    throw FormatError("not a checkpoint manifest: " + manifest_path.string());
  }

  ModelConfig config;
  try {
    config = ModelConfig::from_json(manifest.at("config"));
  } catch (const json::exception& e) {
    throw FormatError("checkpoint config unreadable: " + std::string(e.what()));
  }
  if (expected && !(*expected == config)) {
    throw ConfigError("checkpoint config does not match the requested model config");
  }

  LogloModel model(config, 0);
  const fs::path blob = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
  std::ifstream bin(blob, std::ios::binary | std::ios::ate);
  if (!bin) throw IoError("cannot open checkpoint blob " + blob.string());
  const auto bytes = static_cast<std::int64_t>(bin.tellg());
  try {
    const json& entries = manifest.at("params");
    if (!entries.is_array() || entries.size() != model.params().size()) {
      throw FormatError("checkpoint parameter list does not match the model");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      NamedParam& p = model.params()[i];
      const json& e = entries[i];
      if (e.at("name").get<std::string>() != p.name || e.at("shape").get<Shape>() != p.value.shape()) {
        throw FormatError("checkpoint entry " + std::to_string(i) + " does not match parameter " + p.name);
      }
      const auto offset = e.at("offset").get<std::int64_t>();
      const std::int64_t n = p.value.size() * static_cast<std::int64_t>(sizeof(double));
      if (offset < 0 || offset + n > bytes) throw FormatError("checkpoint blob truncated at " + p.name);
      bin.seekg(offset);
      bin.read(reinterpret_cast<char*>(p.value.data()), n);
      if (!bin) throw FormatError("failed reading " + p.name + " from checkpoint blob");
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  return model;
}

}  // namespace loglo
