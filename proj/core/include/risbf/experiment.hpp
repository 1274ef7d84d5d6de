#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "risbf/channel.hpp"
#include "risbf/network.hpp"
#include "risbf/sdr.hpp"

namespace risbf {

enum class Method { kClosedForm, kRandom, kSdr, kNn };

std::string method_name(Method m);
/// Accepts "closed-form", "random", "sdr", "nn"; throws on anything else.
Method method_from_name(const std::string& name);

struct MethodSpec {
  Method kind = Method::kRandom;
  SolverOptions sdr;                            // used when kind == kSdr
  std::shared_ptr<const NetworkParams> model;   // required when kind == kNn

  std::string label() const { return method_name(kind); }
};

/// Runs one method on one realization. rng feeds the stochastic methods
/// (random phase, SDR randomization); deterministic methods ignore it.
/// Returns the chosen phases plus an SDR convergence flag.
struct MethodRun {
  PhaseVector theta;
  bool sdr_converged = true;
};
MethodRun run_method(const MethodSpec& spec, const ChannelRealization& ch,
                     Philox& rng);

struct MethodStats {
  std::string name;
  double mean_gain = 0.0;
  double std_gain = 0.0;
  double mean_rate = 0.0;        // log2(1 + snr) under the matched beamformer
  double ratio_pct = 100.0;      // mean gain as % of the reference method's
  double ratio_rate_pct = 100.0; // mean rate as % of the reference method's
  double mean_ms = 0.0;          // wall clock per instance
  double median_ms = 0.0;
  int nonconverged = 0;          // SDR solves that hit the iteration cap
};

struct ExperimentReport {
  int M = 0;
  int N = 0;
  std::size_t count = 0;
  uint64_t dataset_seed = 0;
  uint64_t eval_seed = 0;
  std::string reference;
  std::vector<MethodStats> methods;
};

struct EvalOptions {
  uint64_t seed = 0;  // per-instance streams derive from (seed, method, i)
  int threads = 0;    // 0: hardware concurrency
};

/// Per-instance channel gain for every method over the test ensemble;
/// ratios are mean(method)/mean(reference) * 100.
ExperimentReport evaluate_methods(const std::vector<MethodSpec>& methods,
                                  const Dataset& test, std::size_t reference,
                                  const EvalOptions& opts);

enum class SweepAxis { kElements, kAntennas };

struct SweepPoint {
  int axis_value = 0;
  ExperimentReport report;
};

/// One report per axis point. Each point generates its own test ensemble
/// (seed derived from dataset_seed and the axis value) and may carry its own
/// method list, e.g. a per-size neural model.
std::vector<SweepPoint> sweep(
    SweepAxis axis, const std::vector<int>& values,
    const ScenarioConfig& base, std::size_t count, uint64_t dataset_seed,
    const std::function<std::vector<MethodSpec>(int axis_value)>& methods_for,
    std::size_t reference, const EvalOptions& opts);

struct TimingRow {
  int M = 0;
  int N = 0;
  std::string method;
  std::size_t repetitions = 0;
  double mean_ms = 0.0;    // single-instance wall clock (latency)
  double median_ms = 0.0;
  // Per-instance cost of a 256-instance batched run, for methods that can
  // batch (the neural predictor); equals mean_ms for the others.
  double amortized_ms = 0.0;
};

/// Mean/median wall clock per instance, warm-up iterations excluded, dataset
/// generation and model setup excluded. Runs single-threaded.
std::vector<TimingRow> benchmark_runtime(
    const std::vector<MethodSpec>& methods,
    const std::vector<std::pair<int, int>>& mn_configs, int repetitions,
    uint64_t seed);

/// Clarke-model coherence time 9/(16 pi f_d) with Doppler f_d = v f_c / c.
double coherence_time(double v_max_mps, double f_c_hz);

// CSV and plot emission. Every writer puts a format-version comment first and
// echoes the provided provenance lines as further "# " comments.
void write_report_csv(std::ostream& out,
                      const std::vector<ExperimentReport>& reports,
                      const std::vector<std::string>& provenance);
void write_sweep_csv(std::ostream& out, SweepAxis axis,
                     const std::vector<SweepPoint>& points,
                     const std::vector<std::string>& provenance);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows,
                      const std::vector<std::string>& provenance);
/// gnuplot script with one mean-gain plot and one mean-rate plot over the
/// sweep axis, reading the long-format sweep CSV.
void write_sweep_plot_script(std::ostream& out, SweepAxis axis,
                             const std::vector<SweepPoint>& points,
                             const std::string& csv_path);

}  // namespace risbf
