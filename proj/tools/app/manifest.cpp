#include "app/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>

#include "spdelab/errors.hpp"
#include "spdelab/version.hpp"

namespace spdelab::app {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256: init failed");
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw IoError("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw IoError("sha256: final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 0xf];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open '" + file.string() + "' for hashing");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  return h.hex();
}

RunOutputs::RunOutputs(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw IoError("cannot create output directory '" + root_.string() + "': " + ec.message());
}

std::filesystem::path RunOutputs::add(const std::string& relative) {
  const auto path = root_ / relative;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  if (std::find(files_.begin(), files_.end(), relative) == files_.end()) files_.push_back(relative);
  return path;
}

void write_manifest(const RunOutputs& outputs, const RunRecord& record) {
  nlohmann::ordered_json j;
  j["schema"] = "spdelab-run/1";
  j["command"] = record.command;
  j["version"] = {{"spdelab", kVersion}, {"fftw", fft_backend_version()}};
  j["config_hash"] = sha256_hex(record.config_text);
  j["config"] = record.config_text;
  j["seeds"] = {{"base_seed", record.base_seed},
                {"n_paths", record.n_paths},
                {"derivation", "path i uses splitmix64(base_seed + (i + 1) * 0x9e3779b97f4a7c15)"}};
  j["timestamp"] = utc_timestamp();
  auto files = nlohmann::ordered_json::array();
  for (const auto& rel : outputs.files()) {
    const auto path = outputs.root() / rel;
    files.push_back({{"path", rel}, {"bytes", std::filesystem::file_size(path)}, {"sha256", sha256_file(path)}});
  }
  j["files"] = files;
  std::ofstream os(outputs.root() / "manifest.json");
  if (!os) throw IoError("cannot write manifest.json");
  os << j.dump(2) << "\n";
}

}  // namespace spdelab::app
