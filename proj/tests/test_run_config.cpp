#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "risbf/run_config.hpp"

using namespace risbf;

namespace {

std::string write_config(const char* name, const std::string& body) {
  const std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::trunc);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("defaults follow the scenario and training recipe") {
  RunConfig cfg;
  CHECK(cfg.scenario.d_ar == 8.0);
  CHECK(cfg.scenario.d0_max == 8.0);
  CHECK(cfg.scenario.d1_min == 1.0);
  CHECK(cfg.scenario.d1_max == 6.0);
  CHECK(cfg.scenario.snr_db == 10.0);
  CHECK(cfg.train.batch_size == 5000);
  CHECK(cfg.train.init_lr == 0.001);
  CHECK(cfg.train.max_epochs == 1000);
  CHECK(cfg.train.early_stop_patience == 30);
  CHECK(cfg.train.plateau_patience == 15);
  CHECK(cfg.train.lr_decay == 0.33);
  CHECK(cfg.solver.trials == 100);
  CHECK(cfg.solver.restarts == 20);
  CHECK(cfg.solver.max_iters == 5000);
  cfg.validate();
}

TEST_CASE("file parsing with comments and overrides") {
  const std::string path = write_config("risbf_cfg_ok.cfg",
                                        "# scenario\n"
                                        "M = 2\n"
                                        "N = 16   # elements\n"
                                        "snr_db = 12.5\n"
                                        "\n"
                                        "batch_size = 100\n"
                                        "seed = 7\n");
  RunConfig cfg;
  cfg.apply_file(path);
  CHECK(cfg.scenario.M == 2);
  CHECK(cfg.scenario.N == 16);
  CHECK(cfg.scenario.snr_db == 12.5);
  CHECK(cfg.train.batch_size == 100);
  CHECK(cfg.seed == 7);
  cfg.apply("N", "32");  // flag-style override wins
  CHECK(cfg.scenario.N == 32);
  std::remove(path.c_str());
}

TEST_CASE("unknown keys and bad values are named") {
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cfg.apply("bogus", "1"),
                       doctest::Contains("unknown key 'bogus'"),
                       std::invalid_argument);
  CHECK_THROWS_AS(cfg.apply("M", "two"), std::invalid_argument);
  const std::string path =
      write_config("risbf_cfg_bad.cfg", "M = 2\nwidgets = 9\n");
  RunConfig cfg2;
  CHECK_THROWS_WITH_AS(cfg2.apply_file(path),
                       doctest::Contains("widgets"), std::invalid_argument);
  std::remove(path.c_str());
  CHECK_THROWS_AS(cfg.apply_file("/nonexistent/risbf.cfg"),
                  std::runtime_error);
}

TEST_CASE("malformed lines are rejected with their line number") {
  const std::string path =
      write_config("risbf_cfg_malformed.cfg", "M = 2\njust words\n");
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cfg.apply_file(path), doctest::Contains("line 2"),
                       std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("echo covers every known key") {
  RunConfig cfg;
  const auto lines = cfg.echo();
  CHECK(lines.size() == RunConfig::known_keys().size());
  for (const auto& key : RunConfig::known_keys()) {
    bool found = false;
    for (const auto& line : lines) {
      if (line.rfind(key + " = ", 0) == 0) found = true;
    }
    CHECK_MESSAGE(found, "missing echo for ", key);
  }
}

TEST_CASE("validation rejects out-of-range fields") {
  RunConfig cfg;
  cfg.apply("lr_decay", "1.5");
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  RunConfig cfg2;
  cfg2.apply("sdr_trials", "0");
  CHECK_THROWS_AS(cfg2.validate(), std::invalid_argument);
}
