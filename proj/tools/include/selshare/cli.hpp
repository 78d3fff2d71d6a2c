#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace selshare::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kInputError = 2,
  kConvergenceFailure = 3,
  kIdentificationError = 4,
};

/// Runs the command line `args` (without the program name). Diagnostics go to `err`,
/// progress to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

struct RunManifest {
  std::string command;
  std::string config_hash;  ///< SHA-256 of the resolved configuration
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string started;   ///< UTC, ISO 8601
  std::string finished;  ///< UTC, ISO 8601
  std::vector<std::pair<std::string, std::string>> inputs;   ///< (path, sha256)
  std::vector<std::pair<std::string, std::string>> outputs;  ///< (path, sha256)

  nlohmann::json to_json() const;
};

/// UTC timestamp for manifests.
std::string utc_now();

}  // namespace selshare::cli
