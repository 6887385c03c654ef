#include "repscore/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>

#include "repscore/errors.hpp"
#include "repscore/exports.hpp"

namespace repscore {

namespace {

using DigestCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

void digest_file(EVP_MD_CTX* ctx, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
  }
}

}  // namespace

std::string file_sha256(const std::filesystem::path& path) {
  DigestCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "sha256 unavailable");
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string rel = std::filesystem::relative(f, path).generic_string();
      EVP_DigestUpdate(ctx.get(), rel.data(), rel.size());
      digest_file(ctx.get(), f);
    }
  } else {
    digest_file(ctx.get(), path);
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xF];
  }
  return hex;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), file_sha256(path));
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& [p, d] : inputs) in.push_back({{"path", p}, {"sha256", d}});
  return {{"command", command}, {"tool_version", kToolVersion}, {"seed", seed},
          {"config", config},   {"inputs", in},                  {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.config = j.value("config", nlohmann::json::object());
    for (const auto& e : j.value("inputs", nlohmann::json::array()))
      m.inputs.emplace_back(e.at("path").get<std::string>(), e.at("sha256").get<std::string>());
    m.outputs = j.value("outputs", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_json(m.to_json(), path);
}

RunManifest read_manifest(const std::filesystem::path& path) {
  return RunManifest::from_json(read_json(path));
}

}  // namespace repscore
