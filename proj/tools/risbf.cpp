// risbf: dataset generation, training, evaluation, benchmarking, sweeps, and
// coherence-time computation for reflecting-surface phase-shift design.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "risbf/baselines.hpp"
#include "risbf/channel.hpp"
#include "risbf/experiment.hpp"
#include "risbf/network.hpp"
#include "risbf/run_config.hpp"
#include "risbf/sdr.hpp"

namespace {

using risbf::RunConfig;

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::string> config_path;
  std::vector<std::pair<std::string, std::string>> values;
};

/// Registers --config plus one override flag per config key; values land in
/// `ov` and are applied over the file in CLI order.
void add_config_options(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path,
                  "config file ('key = value' lines, '#' comments)");
  for (const auto& key : RunConfig::known_keys()) {
    std::string flag = "--" + key;
    const std::string dashed = [&] {
      std::string d = key;
      for (char& c : d) {
        if (c == '_') c = '-';
      }
      return "--" + d;
    }();
    if (dashed != flag) flag += "," + dashed;
    // Special-case spec'd dashed names for the solver flags.
    cmd->add_option_function<std::string>(
           flag,
           [&ov, key](const std::string& value) {
             ov.values.emplace_back(key, value);
           },
           "override config key '" + key + "'")
        ->expected(1);
  }
}

RunConfig resolve_config(const Overrides& ov) {
  RunConfig cfg;
  if (ov.config_path) cfg.apply_file(*ov.config_path);
  bool seed_overridden = false;
  for (const auto& [key, value] : ov.values) {
    cfg.apply(key, value);
    if (key == "seed") seed_overridden = true;
  }
  // Environment seed is the last resort: file and flags win.
  if (!seed_overridden && !ov.config_path) {
    if (const char* env = std::getenv("RISBF_SEED")) {
      cfg.apply("seed", env);
    }
  } else if (!seed_overridden && ov.config_path) {
    // A config file may or may not carry a seed; only fall back to the
    // environment when it did not.
    RunConfig file_only;
    file_only.apply_file(*ov.config_path);
    RunConfig defaults;
    if (file_only.seed == defaults.seed) {
      if (const char* env = std::getenv("RISBF_SEED")) cfg.apply("seed", env);
    }
  }
  cfg.validate();
  return cfg;
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  uint64_t hash = 1469598103934665603ull;
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ull;
    }
  }
  return hash;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<risbf::MethodSpec> build_methods(
    const std::vector<std::string>& names, const RunConfig& cfg,
    const std::shared_ptr<const risbf::NetworkParams>& model) {
  std::vector<risbf::MethodSpec> methods;
  for (const auto& name : names) {
    risbf::MethodSpec spec;
    spec.kind = risbf::method_from_name(name);
    spec.sdr = cfg.solver;
    if (spec.kind == risbf::Method::kNn) {
      if (!model) {
        throw std::invalid_argument("method 'nn' requires --model");
      }
      spec.model = model;
    }
    methods.push_back(std::move(spec));
  }
  return methods;
}

std::size_t find_reference(const std::vector<std::string>& names,
                           const std::string& reference) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == reference) return i;
  }
  throw std::invalid_argument("reference method '" + reference +
                              "' is not among --methods");
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int cmd_gen_data(const RunConfig& cfg, std::size_t count,
                 const std::string& out_path) {
  const risbf::Dataset dataset =
      risbf::generate_dataset(cfg.scenario, count, cfg.seed, cfg.threads);
  risbf::save_dataset(dataset, out_path);
  std::cout << "wrote " << out_path << ": " << dataset.samples.size()
            << " samples (M=" << cfg.scenario.M << ", N=" << cfg.scenario.N
            << ", seed=" << cfg.seed << "), checksum " << std::hex
            << std::setw(16) << std::setfill('0') << fnv1a64_file(out_path)
            << std::dec << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& train_path,
              const std::string& val_path, const std::string& model_out,
              std::string history_out) {
  const risbf::Dataset train_set = risbf::load_dataset(train_path);
  const risbf::Dataset val_set = risbf::load_dataset(val_path);
  if (train_set.config.M != val_set.config.M ||
      train_set.config.N != val_set.config.N) {
    throw std::invalid_argument("train/val datasets disagree on (M, N)");
  }
  cfg.scenario.M = train_set.config.M;
  cfg.scenario.N = train_set.config.N;
  const auto spec = risbf::ArchitectureSpec::standard(train_set.config.M,
                                                      train_set.config.N);
  risbf::TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  const risbf::TrainResult result = risbf::train(train_set, val_set, spec, tc);
  risbf::save_model(result.params, model_out);

  if (history_out.empty()) history_out = model_out + ".history.csv";
  std::ostringstream csv;
  csv << "# risbf train history v1\n";
  for (const auto& line : cfg.echo()) csv << "# " << line << "\n";
  csv << "# best_epoch = " << result.history.best_epoch << "\n";
  csv << "epoch,train_loss,val_loss,learning_rate\n" << std::setprecision(10);
  for (std::size_t e = 0; e < result.history.val_loss.size(); ++e) {
    csv << e << ',' << result.history.train_loss[e] << ','
        << result.history.val_loss[e] << ','
        << result.history.learning_rate[e] << '\n';
  }
  write_text_file(history_out, csv.str());
  std::cout << "wrote " << model_out << " (best epoch "
            << result.history.best_epoch << ", val loss "
            << result.history.val_loss[static_cast<std::size_t>(
                   result.history.best_epoch)]
            << ") and " << history_out << "\n";
  return 0;
}

int cmd_eval(RunConfig cfg, const std::string& test_path,
             const std::vector<std::string>& method_names,
             const std::string& reference, const std::string& model_path,
             const std::string& out_path) {
  risbf::Dataset test = risbf::load_dataset(test_path);
  // The file pins (M, N); the run config owns the SNR used for rates.
  cfg.scenario.M = test.config.M;
  cfg.scenario.N = test.config.N;
  test.config.snr_db = cfg.scenario.snr_db;
  test.config.sigma2 = cfg.scenario.sigma2;
  std::shared_ptr<const risbf::NetworkParams> model;
  if (!model_path.empty()) {
    model = std::make_shared<risbf::NetworkParams>(risbf::load_model(model_path));
  }
  const auto methods = build_methods(method_names, cfg, model);
  const std::size_t ref_index = find_reference(method_names, reference);
  risbf::EvalOptions opts;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;
  const risbf::ExperimentReport report =
      risbf::evaluate_methods(methods, test, ref_index, opts);

  std::ostringstream csv;
  std::vector<std::string> provenance = cfg.echo();
  provenance.push_back("test = " + test_path);
  risbf::write_report_csv(csv, {report}, provenance);
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out_path, csv.str());
    std::cout << "wrote " << out_path << "\n";
  }
  for (const auto& s : report.methods) {
    std::cout << s.name << ": mean gain " << s.mean_gain << ", ratio "
              << std::fixed << std::setprecision(2) << s.ratio_pct
              << "%, rate ratio " << s.ratio_rate_pct << "%"
              << std::defaultfloat << std::setprecision(6) << ", mean "
              << s.mean_ms << " ms/instance";
    if (s.nonconverged > 0) {
      std::cout << " [warning: " << s.nonconverged
                << " solver runs hit the iteration cap]";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& configs,
              const std::vector<std::string>& method_names, int reps,
              const std::string& out_path) {
  std::vector<std::pair<int, int>> mn;
  for (const auto& token : split_csv(configs)) {
    const auto x = token.find('x');
    if (x == std::string::npos) {
      throw std::invalid_argument("bad --configs entry (want MxN): " + token);
    }
    mn.emplace_back(std::stoi(token.substr(0, x)),
                    std::stoi(token.substr(x + 1)));
  }
  if (mn.empty()) throw std::invalid_argument("--configs is empty");

  std::vector<risbf::TimingRow> rows;
  for (const auto& [antennas, elements] : mn) {
    std::vector<risbf::MethodSpec> methods;
    for (const auto& name : method_names) {
      risbf::MethodSpec spec;
      spec.kind = risbf::method_from_name(name);
      spec.sdr = cfg.solver;
      if (spec.kind == risbf::Method::kNn) {
        // Timing only depends on the architecture, not on trained weights;
        // a freshly initialized model of the right shape is representative.
        auto params = std::make_shared<risbf::NetworkParams>();
        params->spec = risbf::ArchitectureSpec::standard(antennas, elements);
        risbf::Philox init =
            risbf::make_stream(cfg.seed, risbf::StreamPurpose::kNetworkInit);
        params->net = risbf::init_mlp<float>(params->spec, init);
        const auto len = risbf::feature_length(antennas, elements);
        params->standardizer.mean =
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(len));
        params->standardizer.std =
            Eigen::VectorXd::Ones(static_cast<Eigen::Index>(len));
        spec.model = std::move(params);
      }
      methods.push_back(std::move(spec));
    }
    auto config_rows = risbf::benchmark_runtime(
        methods, {{antennas, elements}}, reps, cfg.seed);
    rows.insert(rows.end(), config_rows.begin(), config_rows.end());
  }

  std::ostringstream csv;
  risbf::write_timing_csv(csv, rows, cfg.echo());
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out_path, csv.str());
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis_name,
              const std::vector<int>& values,
              const std::vector<std::string>& method_names,
              const std::string& reference, std::size_t count,
              const std::vector<std::string>& model_paths,
              const std::string& out_path, const std::string& plot_path) {
  const risbf::SweepAxis axis = [&] {
    if (axis_name == "N") return risbf::SweepAxis::kElements;
    if (axis_name == "M") return risbf::SweepAxis::kAntennas;
    throw std::invalid_argument("--axis must be N or M");
  }();
  if (!model_paths.empty() && model_paths.size() != values.size()) {
    throw std::invalid_argument("--models must list one model per axis value");
  }
  std::vector<std::shared_ptr<const risbf::NetworkParams>> models;
  for (const auto& path : model_paths) {
    models.push_back(
        std::make_shared<risbf::NetworkParams>(risbf::load_model(path)));
  }
  const std::size_t ref_index = find_reference(method_names, reference);
  risbf::EvalOptions opts;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;

  auto methods_for = [&](int axis_value) {
    std::shared_ptr<const risbf::NetworkParams> model;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] == axis_value && !models.empty()) model = models[i];
    }
    return build_methods(method_names, cfg, model);
  };
  const auto points = risbf::sweep(axis, values, cfg.scenario, count, cfg.seed,
                                   methods_for, ref_index, opts);

  std::ostringstream csv;
  risbf::write_sweep_csv(csv, axis, points, cfg.echo());
  write_text_file(out_path, csv.str());
  std::cout << "wrote " << out_path << "\n";
  if (!plot_path.empty()) {
    std::ostringstream plot;
    risbf::write_sweep_plot_script(plot, axis, points, out_path);
    write_text_file(plot_path, plot.str());
    std::cout << "wrote " << plot_path << "\n";
  }
  // Monotonicity diagnostics along the axis, per method.
  for (std::size_t m = 0; m < method_names.size(); ++m) {
    bool increasing = true;
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (points[i].report.methods[m].mean_gain <
          points[i - 1].report.methods[m].mean_gain) {
        increasing = false;
      }
    }
    std::cout << method_names[m] << ": mean gain "
              << (increasing ? "increasing" : "NOT monotone") << " along "
              << axis_name << "\n";
  }
  return 0;
}

int cmd_coherence(double v_mps, double fc_hz) {
  const double tc = risbf::coherence_time(v_mps, fc_hz);
  std::cout << "T_c = " << std::fixed << std::setprecision(2) << tc * 1e3
            << " ms\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"passive beamforming toolkit: dataset generation, phase-shift "
               "design (closed form, SDR, neural), evaluation, benchmarks"};
  app.require_subcommand(1);

  Overrides ov;

  // gen-data -------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a channel dataset file");
  std::size_t gen_count = 0;
  std::string gen_out;
  add_config_options(gen, ov);
  gen->add_option("--count", gen_count, "number of realizations")->required();
  gen->add_option("--out", gen_out, "output dataset path")->required();

  // train ------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train the phase-shift predictor");
  std::string tr_train, tr_val, tr_model_out, tr_history_out;
  add_config_options(tr, ov);
  tr->add_option("--train", tr_train, "training dataset")->required();
  tr->add_option("--val", tr_val, "validation dataset")->required();
  tr->add_option("--model-out", tr_model_out, "output model path")->required();
  tr->add_option("--history-out", tr_history_out,
                 "per-epoch history CSV (default: <model>.history.csv)");

  // eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "compare methods on a test dataset");
  std::string ev_test, ev_methods = "sdr,random", ev_reference = "sdr";
  std::string ev_model, ev_out;
  add_config_options(ev, ov);
  ev->add_option("--test", ev_test, "test dataset")->required();
  ev->add_option("--methods", ev_methods,
                 "comma list of closed-form,random,sdr,nn");
  ev->add_option("--reference", ev_reference, "ratio reference method");
  ev->add_option("--model", ev_model, "model file for method 'nn'");
  ev->add_option("--out", ev_out, "report CSV path (default: stdout)");

  // bench ------------------------------------------------------------------
  auto* be = app.add_subcommand("bench", "per-instance runtime comparison");
  std::string be_configs, be_methods = "nn,sdr", be_out;
  int be_reps = 50;
  add_config_options(be, ov);
  be->add_option("--configs", be_configs, "comma list of MxN, e.g. 2x16,4x32")
      ->required();
  be->add_option("--methods", be_methods, "methods to time");
  be->add_option("--reps", be_reps, "timed repetitions per method (>= 10)");
  be->add_option("--out", be_out, "timing CSV path (default: stdout)");

  // sweep ------------------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "evaluate along an N or M axis");
  std::string sw_axis = "N", sw_methods = "sdr,random", sw_reference = "sdr";
  std::string sw_values, sw_models, sw_out = "sweep.csv", sw_plot;
  std::size_t sw_count = 500;
  add_config_options(sw, ov);
  sw->add_option("--axis", sw_axis, "sweep axis: N or M");
  sw->add_option("--values", sw_values, "comma list of axis values")->required();
  sw->add_option("--methods", sw_methods, "methods to evaluate");
  sw->add_option("--reference", sw_reference, "ratio reference method");
  sw->add_option("--count", sw_count, "test instances per axis point");
  sw->add_option("--models", sw_models,
                 "comma list of model files, one per axis value (for 'nn')");
  sw->add_option("--out", sw_out, "sweep CSV path");
  sw->add_option("--plot-out", sw_plot, "gnuplot script path");

  // coherence ----------------------------------------------------------
  auto* co = app.add_subcommand("coherence", "Clarke-model coherence time");
  double co_v = 1.5, co_fc = 2.6e9;
  co->add_option("--v", co_v, "maximal speed [m/s]");
  co->add_option("--fc", co_fc, "carrier frequency [Hz]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (co->parsed()) return cmd_coherence(co_v, co_fc);
    const RunConfig cfg = resolve_config(ov);
    if (gen->parsed()) return cmd_gen_data(cfg, gen_count, gen_out);
    if (tr->parsed()) {
      return cmd_train(cfg, tr_train, tr_val, tr_model_out, tr_history_out);
    }
    if (ev->parsed()) {
      return cmd_eval(cfg, ev_test, split_csv(ev_methods), ev_reference,
                      ev_model, ev_out);
    }
    if (be->parsed()) {
      RunConfig bench_cfg = cfg;
      bench_cfg.threads = 1;  // timing runs are pinned single-threaded
      return cmd_bench(bench_cfg, be_configs, split_csv(be_methods), be_reps,
                       be_out);
    }
    if (sw->parsed()) {
      std::vector<int> values;
      for (const auto& v : split_csv(sw_values)) values.push_back(std::stoi(v));
      return cmd_sweep(cfg, sw_axis, values, split_csv(sw_methods),
                       sw_reference, sw_count, split_csv(sw_models), sw_out,
                       sw_plot);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
