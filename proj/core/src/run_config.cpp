#include "risbf/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace risbf {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for '" + key +
                                "': " + value);
  }
}

int64_t parse_int(const std::string& key, const std::string& value) {
  int64_t v = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("config: bad integer value for '" + key +
                                "': " + value);
  }
  return v;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  uint64_t v = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("config: bad unsigned value for '" + key +
                                "': " + value);
  }
  return v;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "M",        "N",          "d_ar",          "d0_min",
      "d0_max",   "d1_min",     "d1_max",        "d_ref",
      "snr_db",   "sigma2",     "batch_size",    "init_lr",
      "max_epochs", "early_stop_patience", "plateau_patience", "lr_decay",
      "sdr_trials", "sdr_tol",  "sdr_restarts",  "sdr_max_iters",
      "seed",     "threads",
  };
  return keys;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "M") scenario.M = static_cast<int>(parse_int(key, value));
  else if (key == "N") scenario.N = static_cast<int>(parse_int(key, value));
  else if (key == "d_ar") scenario.d_ar = parse_double(key, value);
  else if (key == "d0_min") scenario.d0_min = parse_double(key, value);
  else if (key == "d0_max") scenario.d0_max = parse_double(key, value);
  else if (key == "d1_min") scenario.d1_min = parse_double(key, value);
  else if (key == "d1_max") scenario.d1_max = parse_double(key, value);
  else if (key == "d_ref") scenario.d_ref = parse_double(key, value);
  else if (key == "snr_db") scenario.snr_db = parse_double(key, value);
  else if (key == "sigma2") scenario.sigma2 = parse_double(key, value);
  else if (key == "batch_size") train.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "init_lr") train.init_lr = parse_double(key, value);
  else if (key == "max_epochs") train.max_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "early_stop_patience") {
    train.early_stop_patience = static_cast<int>(parse_int(key, value));
  } else if (key == "plateau_patience") {
    train.plateau_patience = static_cast<int>(parse_int(key, value));
  } else if (key == "lr_decay") train.lr_decay = parse_double(key, value);
  else if (key == "sdr_trials") solver.trials = static_cast<int>(parse_int(key, value));
  else if (key == "sdr_tol") solver.tol = parse_double(key, value);
  else if (key == "sdr_restarts") solver.restarts = static_cast<int>(parse_int(key, value));
  else if (key == "sdr_max_iters") solver.max_iters = static_cast<int>(parse_int(key, value));
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "threads") threads = static_cast<int>(parse_int(key, value));
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
    }
    apply(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

std::vector<std::string> RunConfig::echo() const {
  std::ostringstream os;
  std::vector<std::string> lines;
  auto add = [&](const std::string& key, auto value) {
    std::ostringstream line;
    line << key << " = " << value;
    lines.push_back(line.str());
  };
  add("M", scenario.M);
  add("N", scenario.N);
  add("d_ar", scenario.d_ar);
  add("d0_min", scenario.d0_min);
  add("d0_max", scenario.d0_max);
  add("d1_min", scenario.d1_min);
  add("d1_max", scenario.d1_max);
  add("d_ref", scenario.d_ref);
  add("snr_db", scenario.snr_db);
  add("sigma2", scenario.sigma2);
  add("batch_size", train.batch_size);
  add("init_lr", train.init_lr);
  add("max_epochs", train.max_epochs);
  add("early_stop_patience", train.early_stop_patience);
  add("plateau_patience", train.plateau_patience);
  add("lr_decay", train.lr_decay);
  add("sdr_trials", solver.trials);
  add("sdr_tol", solver.tol);
  add("sdr_restarts", solver.restarts);
  add("sdr_max_iters", solver.max_iters);
  add("seed", seed);
  add("threads", threads);
  return lines;
}

void RunConfig::validate() const {
  scenario.validate();
  train.validate();
  if (solver.trials < 1) throw std::invalid_argument("config: sdr_trials must be >= 1");
  if (solver.restarts < 1) throw std::invalid_argument("config: sdr_restarts must be >= 1");
  if (solver.max_iters < 1) throw std::invalid_argument("config: sdr_max_iters must be >= 1");
  if (!(solver.tol > 0.0)) throw std::invalid_argument("config: sdr_tol must be > 0");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
}

}  // namespace risbf
