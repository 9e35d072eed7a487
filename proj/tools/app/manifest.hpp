#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spdelab::app {

/// Hex SHA-256 of a byte string / a file's content.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

/// Output directory of one command run. Files registered through `add` are
/// listed, with their hashes, in manifest.json.
class RunOutputs {
 public:
  explicit RunOutputs(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  /// Creates the parent directory of root/relative and registers the file.
  std::filesystem::path add(const std::string& relative);
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

struct RunRecord {
  std::string command;
  std::string config_text;  // canonical serialization
  std::uint64_t base_seed = 0;
  int n_paths = 0;
};

/// Writes root/manifest.json:
///   {"schema": "spdelab-run/1", "command", "version": {"spdelab", "fftw"},
///    "config_hash": sha256 of the canonical config, "config",
///    "seeds": {"base_seed", "n_paths", "derivation"}, "timestamp" (UTC ISO 8601),
///    "files": [{"path", "bytes", "sha256"}]}
/// Everything except "timestamp" is a function of command, config and seed.
void write_manifest(const RunOutputs& outputs, const RunRecord& record);

}  // namespace spdelab::app
