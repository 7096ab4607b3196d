#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kdlseg {

/// Every tunable of a run. Serialized as flat "key = value" lines.
struct RunConfig {
  double gamma = 0.35;
  std::size_t atoms = 32;
  std::size_t sparsity = 3;
  std::size_t selected = 1000;  // per class
  std::size_t max_iters = 20;
  double tol = 1e-4;
  std::uint64_t seed = 1;
  double sigma = 0.8;
  std::size_t radius = 2;
  std::size_t glcm_levels = 8;
  bool scaling = true;
  bool inverted_rule = false;  // inverted decision rule
  std::size_t block_size = 64;
  std::size_t threads = 0;  // 0 = KDLSEG_THREADS or all cores
  double threshold_fraction = 0.05;
  std::size_t train_count = 8;
  std::size_t test_count = 4;
  std::size_t phantom_size = 96;

  /// Throws InvalidArgument naming the first field outside its range.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Names of all keys, in serialization order.
const std::vector<std::string>& config_keys();

/// Sets one field from its textual value. Unknown keys and unparsable values
/// throw InvalidArgument.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
/// `origin` prefixes error messages.
RunConfig parse_config(std::string_view text, const RunConfig& base = {}, const std::string& origin = "config");
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

/// All keys with their values; doubles round-trip exactly.
std::string format_config(const RunConfig& config);
void save_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace kdlseg
