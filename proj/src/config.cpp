#include "kdlseg/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "kdlseg/binary_io.hpp"
#include "kdlseg/error.hpp"

namespace kdlseg {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw InvalidArgument("config key '" + std::string(key) + "': '" + std::string(value) + "' is not " + expected);
}

template <class T>
T parse_unsigned(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "a non-negative integer");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  bad_value(key, value, "a boolean (true/false)");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field size_field(T RunConfig::*member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { c.*member = parse_unsigned<T>(k, v); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(double RunConfig::*member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { c.*member = parse_double(k, v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

Field bool_field(bool RunConfig::*member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { c.*member = parse_bool(k, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table{
      {"gamma", double_field(&RunConfig::gamma)},
      {"atoms", size_field(&RunConfig::atoms)},
      {"sparsity", size_field(&RunConfig::sparsity)},
      {"selected", size_field(&RunConfig::selected)},
      {"max_iters", size_field(&RunConfig::max_iters)},
      {"tol", double_field(&RunConfig::tol)},
      {"seed", size_field(&RunConfig::seed)},
      {"sigma", double_field(&RunConfig::sigma)},
      {"radius", size_field(&RunConfig::radius)},
      {"glcm_levels", size_field(&RunConfig::glcm_levels)},
      {"scaling", bool_field(&RunConfig::scaling)},
      {"inverted_rule", bool_field(&RunConfig::inverted_rule)},
      {"block_size", size_field(&RunConfig::block_size)},
      {"threads", size_field(&RunConfig::threads)},
      {"threshold_fraction", double_field(&RunConfig::threshold_fraction)},
      {"train_count", size_field(&RunConfig::train_count)},
      {"test_count", size_field(&RunConfig::test_count)},
      {"phantom_size", size_field(&RunConfig::phantom_size)},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("config: ") + what);
  };
  require(gamma > 0.0, "gamma must be positive");
  require(atoms >= 1, "atoms must be at least 1");
  require(sparsity >= 1 && sparsity <= atoms, "sparsity must lie in [1, atoms]");
  require(selected >= 1, "selected must be at least 1");
  require(tol >= 0.0, "tol must be non-negative");
  require(sigma > 0.0, "sigma must be positive");
  require(radius >= 1 && radius <= 32, "radius must lie in [1, 32]");
  require(glcm_levels >= 2 && glcm_levels <= 256, "glcm_levels must lie in [2, 256]");
  require(block_size >= 1, "block_size must be at least 1");
  require(threads <= 1024, "threads must lie in [0, 1024]");
  require(threshold_fraction >= 0.0 && threshold_fraction < 1.0, "threshold_fraction must lie in [0, 1)");
  require(train_count >= 1, "train_count must be at least 1");
  require(phantom_size >= 32 && phantom_size <= 4096, "phantom_size must lie in [32, 4096]");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"gamma",        "atoms",       "sparsity",    "selected",
                                             "max_iters",    "tol",         "seed",        "sigma",
                                             "radius",       "glcm_levels", "scaling",     "inverted_rule",
                                             "block_size",   "threads",     "threshold_fraction",
                                             "train_count",  "test_count",  "phantom_size"};
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw InvalidArgument("unknown config key '" + std::string(key) + "'");
  it->second.set(config, key, trim(value));
}

RunConfig parse_config(std::string_view text, const RunConfig& base, const std::string& origin) {
  RunConfig config = base;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string_view::npos) throw InvalidArgument("expected 'key = value'");
      set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  const std::vector<std::uint8_t> bytes = io::read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  return parse_config(text, base, path.string());
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const std::string& key : config_keys()) out += key + " = " + fields().find(key)->second.get(config) + "\n";
  return out;
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
  io::write_file_atomic(path, format_config(config));
}

}  // namespace kdlseg
