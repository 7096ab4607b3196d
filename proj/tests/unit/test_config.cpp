#include <doctest.h>

#include <cstdio>
#include <string>

#include "kdlseg/config.hpp"
#include "kdlseg/error.hpp"
#include "oracles.hpp"

using namespace kdlseg;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_config(text, {}, "run.cfg");
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.gamma == 0.35);
  CHECK(c.atoms == 32);
  CHECK(c.sparsity == 3);
  CHECK(c.selected == 1000);
  CHECK(c.scaling);
  CHECK(!c.inverted_rule);
  CHECK(c.train_count == 8);
  CHECK(c.test_count == 4);
  CHECK(c.phantom_size == 96);
  CHECK_NOTHROW(c.validate());
  CHECK(config_keys().size() == 18);
}

TEST_CASE("format and parse round trip exactly") {
  RunConfig c;
  c.gamma = 0.1 + 0.2;  // not representable as a short decimal
  c.tol = 1e-300;
  c.sigma = 1.0 / 3.0;
  c.seed = 18446744073709551615ull;
  c.scaling = false;
  c.inverted_rule = true;
  c.threads = 3;
  const std::string text = format_config(c);
  const RunConfig back = parse_config(text);
  CHECK(back == c);
  CHECK(format_config(back) == text);
  // one line per key, in key order
  std::size_t pos = 0;
  for (const std::string& key : config_keys()) {
    const std::size_t at = text.find(key + " = ", pos);
    REQUIRE(at != std::string::npos);
    pos = at;
  }
}

TEST_CASE("parsing") {
  const RunConfig c = parse_config("# experiment\n\n atoms = 64 # inline\nscaling=off\r\ngamma =0.5\n");
  CHECK(c.atoms == 64);
  CHECK(!c.scaling);
  CHECK(c.gamma == 0.5);
  CHECK(c.sparsity == 3);

  RunConfig base;
  base.atoms = 7;
  CHECK(parse_config("seed = 9", base).atoms == 7);

  CHECK(error_of("atoms = 1\natom = 3\n").find("run.cfg:2:") == 0);
  CHECK(error_of("atom = 3").find("unknown config key 'atom'") != std::string::npos);
  CHECK(error_of("atoms = -1").find("atoms") != std::string::npos);
  CHECK(!error_of("atoms = 3x").empty());
  CHECK(!error_of("gamma = nan").empty());
  CHECK(!error_of("scaling = maybe").empty());
  CHECK(error_of("just words").find("run.cfg:1:") == 0);
  CHECK(error_of("atoms = 4").empty());
}

TEST_CASE("validation names the field") {
  const auto message = [](RunConfig c) -> std::string {
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      return e.what();
    }
    return {};
  };
  RunConfig c;
  c.gamma = 0.0;
  CHECK(message(c).find("gamma") != std::string::npos);
  c = {};
  c.sparsity = 40;
  CHECK(message(c).find("sparsity") != std::string::npos);
  c = {};
  c.glcm_levels = 1;
  CHECK(message(c).find("glcm_levels") != std::string::npos);
  c = {};
  c.threshold_fraction = 1.0;
  CHECK(message(c).find("threshold_fraction") != std::string::npos);
  c = {};
  c.phantom_size = 16;
  CHECK(message(c).find("phantom_size") != std::string::npos);
}

TEST_CASE("files") {
  const auto dir = oracle::scratch_dir("config_files");
  RunConfig c;
  c.atoms = 11;
  c.sigma = 0.1;
  save_config(dir / "a.cfg", c);
  CHECK(load_config(dir / "a.cfg") == c);
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), IoError);
  {
    std::FILE* f = std::fopen((dir / "bad.cfg").c_str(), "wb");
    std::fputs("atoms = 2\nbogus = 1\n", f);
    std::fclose(f);
  }
  try {
    load_config(dir / "bad.cfg");
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find((dir / "bad.cfg").string() + ":2:") == 0);
  }
}
