#include "risbf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "risbf/baselines.hpp"
#include "risbf/parallel.hpp"

namespace risbf {

std::string method_name(Method m) {
  switch (m) {
    case Method::kClosedForm: return "closed-form";
    case Method::kRandom: return "random";
    case Method::kSdr: return "sdr";
    case Method::kNn: return "nn";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "closed-form") return Method::kClosedForm;
  if (name == "random") return Method::kRandom;
  if (name == "sdr") return Method::kSdr;
  if (name == "nn") return Method::kNn;
  throw std::invalid_argument("unknown method: " + name);
}

MethodRun run_method(const MethodSpec& spec, const ChannelRealization& ch,
                     Philox& rng) {
  MethodRun run;
  switch (spec.kind) {
    case Method::kClosedForm:
      run.theta = closed_form_single_antenna(ch);
      break;
    case Method::kRandom:
      run.theta = random_phase(rng, ch.elements());
      break;
    case Method::kSdr: {
      SdrResult sdr = sdr_beamform(ch, spec.sdr, rng);
      run.theta = std::move(sdr.theta);
      run.sdr_converged = sdr.solution.converged;
      break;
    }
    case Method::kNn:
      if (!spec.model) {
        throw std::invalid_argument("run_method: nn method needs a model");
      }
      run.theta = predict(*spec.model, ch);
      break;
  }
  return run;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void check_method_compat(const MethodSpec& spec, const Dataset& test) {
  if (spec.kind == Method::kClosedForm && test.config.M != 1) {
    throw std::invalid_argument(
        "closed-form method requires a single-antenna ensemble");
  }
  if (spec.kind == Method::kNn) {
    if (!spec.model) throw std::invalid_argument("nn method needs a model");
    if (spec.model->spec.M != test.config.M ||
        spec.model->spec.N != test.config.N) {
      throw std::invalid_argument("nn model shape does not match the ensemble");
    }
  }
}

}  // namespace

ExperimentReport evaluate_methods(const std::vector<MethodSpec>& methods,
                                  const Dataset& test, std::size_t reference,
                                  const EvalOptions& opts) {
  if (methods.empty()) throw std::invalid_argument("evaluate_methods: no methods");
  if (reference >= methods.size()) {
    throw std::invalid_argument("evaluate_methods: reference index out of range");
  }
  if (test.samples.empty()) {
    throw std::invalid_argument("evaluate_methods: empty test set");
  }
  for (const auto& m : methods) check_method_compat(m, test);

  const std::size_t count = test.samples.size();
  ExperimentReport report;
  report.M = test.config.M;
  report.N = test.config.N;
  report.count = count;
  report.dataset_seed = test.seed;
  report.eval_seed = opts.seed;
  report.reference = methods[reference].label();

  std::vector<std::vector<double>> gains(methods.size());
  std::vector<std::vector<double>> rates(methods.size());
  std::vector<std::vector<double>> times(methods.size());
  std::vector<std::vector<uint8_t>> converged(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    gains[m].resize(count);
    rates[m].resize(count);
    times[m].resize(count);
    converged[m].assign(count, 1);
  }

  const double snr_scale = test.config.snr_linear();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto& spec = methods[m];
    parallel_for(count, opts.threads, [&](std::size_t i) {
      // Stream ids partition by (method, instance) so the draws seen by one
      // method never depend on which others run.
      Philox rng = make_stream(opts.seed, StreamPurpose::kEvalInstance,
                               (static_cast<uint64_t>(m) << 40) | i);
      const auto t0 = std::chrono::steady_clock::now();
      const MethodRun run = run_method(spec, test.samples[i], rng);
      const auto t1 = std::chrono::steady_clock::now();
      times[m][i] =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      gains[m][i] = channel_gain(test.samples[i], run.theta);
      rates[m][i] = rate_bps_hz(snr_scale * gains[m][i]);
      converged[m][i] = run.sdr_converged ? 1 : 0;
    });
  }

  double reference_mean = 0.0;
  double reference_rate = 0.0;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodStats stats;
    stats.name = methods[m].label();
    stats.mean_gain = mean_of(gains[m]);
    stats.std_gain = std_of(gains[m], stats.mean_gain);
    stats.mean_rate = mean_of(rates[m]);
    stats.mean_ms = mean_of(times[m]);
    stats.median_ms = median_of(times[m]);
    stats.nonconverged = static_cast<int>(
        std::count(converged[m].begin(), converged[m].end(), uint8_t{0}));
    report.methods.push_back(std::move(stats));
    if (m == reference) {
      reference_mean = report.methods.back().mean_gain;
      reference_rate = report.methods.back().mean_rate;
    }
  }
  for (auto& stats : report.methods) {
    stats.ratio_pct = reference_mean > 0.0
                          ? stats.mean_gain / reference_mean * 100.0
                          : 100.0;
    stats.ratio_rate_pct = reference_rate > 0.0
                               ? stats.mean_rate / reference_rate * 100.0
                               : 100.0;
  }
  return report;
}

std::vector<SweepPoint> sweep(
    SweepAxis axis, const std::vector<int>& values,
    const ScenarioConfig& base, std::size_t count, uint64_t dataset_seed,
    const std::function<std::vector<MethodSpec>(int axis_value)>& methods_for,
    std::size_t reference, const EvalOptions& opts) {
  if (values.empty()) throw std::invalid_argument("sweep: empty axis");
  std::vector<SweepPoint> points;
  points.reserve(values.size());
  for (int value : values) {
    ScenarioConfig config = base;
    if (axis == SweepAxis::kElements) {
      config.N = value;
    } else {
      config.M = value;
    }
    // Distinct, reproducible ensemble per point.
    const uint64_t point_seed =
        dataset_seed ^ (static_cast<uint64_t>(value) << 32) ^
        (axis == SweepAxis::kElements ? 0x5eedu : 0xa17e5u);
    const Dataset test = generate_dataset(config, count, point_seed, opts.threads);
    points.push_back(SweepPoint{
        value, evaluate_methods(methods_for(value), test, reference, opts)});
  }
  return points;
}

std::vector<TimingRow> benchmark_runtime(
    const std::vector<MethodSpec>& methods,
    const std::vector<std::pair<int, int>>& mn_configs, int repetitions,
    uint64_t seed) {
  if (repetitions < 10) {
    throw std::invalid_argument("benchmark_runtime: repetitions must be >= 10");
  }
  if (mn_configs.empty()) {
    throw std::invalid_argument("benchmark_runtime: no configurations");
  }
  constexpr int kWarmup = 3;
  std::vector<TimingRow> rows;
  for (const auto& [antennas, elements] : mn_configs) {
    ScenarioConfig config;
    config.M = antennas;
    config.N = elements;
    const Dataset instances = generate_dataset(
        config, static_cast<std::size_t>(repetitions + kWarmup), seed, 1);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      check_method_compat(methods[m], instances);
      std::vector<double> ms;
      ms.reserve(static_cast<std::size_t>(repetitions));
      for (int rep = 0; rep < repetitions + kWarmup; ++rep) {
        Philox rng = make_stream(seed, StreamPurpose::kEvalInstance,
                                 (static_cast<uint64_t>(m) << 40) |
                                     static_cast<uint64_t>(rep));
        const auto& ch = instances.samples[static_cast<std::size_t>(rep)];
        const auto t0 = std::chrono::steady_clock::now();
        const MethodRun run = run_method(methods[m], ch, rng);
        const auto t1 = std::chrono::steady_clock::now();
        // The gain read keeps the optimizer from eliding the solve.
        volatile double sink = channel_gain(ch, run.theta);
        (void)sink;
        if (rep >= kWarmup) {
          ms.push_back(
              std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
      }
      TimingRow row;
      row.M = antennas;
      row.N = elements;
      row.method = methods[m].label();
      row.repetitions = ms.size();
      row.mean_ms = mean_of(ms);
      row.median_ms = median_of(ms);
      row.amortized_ms = row.mean_ms;
      if (methods[m].kind == Method::kNn) {
        // Throughput view: one forward pass over a batch, cost split per
        // instance. This is how deployed predictors actually run.
        constexpr std::size_t kBatch = 256;
        std::vector<ChannelRealization> batch;
        batch.reserve(kBatch);
        for (std::size_t b = 0; b < kBatch; ++b) {
          batch.push_back(
              instances.samples[b % instances.samples.size()]);
        }
        (void)predict_batch(*methods[m].model, batch);  // warm-up
        const auto t0 = std::chrono::steady_clock::now();
        const auto thetas = predict_batch(*methods[m].model, batch);
        const auto t1 = std::chrono::steady_clock::now();
        volatile double sink = thetas.back().theta(0).real();
        (void)sink;
        row.amortized_ms =
            std::chrono::duration<double, std::milli>(t1 - t0).count() /
            static_cast<double>(kBatch);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

double coherence_time(double v_max_mps, double f_c_hz) {
  if (!(v_max_mps > 0.0) || !(f_c_hz > 0.0)) {
    throw std::domain_error("coherence_time: inputs must be positive");
  }
  constexpr double kSpeedOfLight = 2.99792458e8;
  const double doppler = v_max_mps * f_c_hz / kSpeedOfLight;
  return 9.0 / (16.0 * Philox::pi() * doppler);
}

namespace {

void write_provenance(std::ostream& out,
                      const std::vector<std::string>& provenance) {
  for (const auto& line : provenance) out << "# " << line << "\n";
}

const char* axis_label(SweepAxis axis) {
  return axis == SweepAxis::kElements ? "N" : "M";
}

}  // namespace

void write_report_csv(std::ostream& out,
                      const std::vector<ExperimentReport>& reports,
                      const std::vector<std::string>& provenance) {
  out << "# risbf report v1\n";
  write_provenance(out, provenance);
  out << "M,N,count,dataset_seed,eval_seed,method,mean_gain,std_gain,"
         "mean_rate,ratio_pct,ratio_rate_pct,mean_ms,median_ms,nonconverged\n";
  out << std::setprecision(10);
  for (const auto& report : reports) {
    for (const auto& s : report.methods) {
      out << report.M << ',' << report.N << ',' << report.count << ','
          << report.dataset_seed << ',' << report.eval_seed << ',' << s.name
          << ',' << s.mean_gain << ',' << s.std_gain << ',' << s.mean_rate
          << ',' << s.ratio_pct << ',' << s.ratio_rate_pct << ',' << s.mean_ms
          << ',' << s.median_ms << ',' << s.nonconverged << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, SweepAxis axis,
                     const std::vector<SweepPoint>& points,
                     const std::vector<std::string>& provenance) {
  out << "# risbf sweep v1\n";
  write_provenance(out, provenance);
  out << "axis,axis_value,M,N,count,method,mean_gain,std_gain,mean_rate,"
         "ratio_pct,ratio_rate_pct,mean_ms\n";
  out << std::setprecision(10);
  for (const auto& point : points) {
    for (const auto& s : point.report.methods) {
      out << axis_label(axis) << ',' << point.axis_value << ','
          << point.report.M << ',' << point.report.N << ','
          << point.report.count << ',' << s.name << ',' << s.mean_gain << ','
          << s.std_gain << ',' << s.mean_rate << ',' << s.ratio_pct << ','
          << s.ratio_rate_pct << ',' << s.mean_ms << '\n';
    }
  }
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows,
                      const std::vector<std::string>& provenance) {
  out << "# risbf timing v1\n";
  write_provenance(out, provenance);
  out << "M,N,method,repetitions,mean_ms,median_ms\n";
  out << std::setprecision(10);
  for (const auto& row : rows) {
    out << row.M << ',' << row.N << ',' << row.method << ','
        << row.repetitions << ',' << row.mean_ms << ',' << row.median_ms
        << '\n';
  }
}

void write_sweep_plot_script(std::ostream& out, SweepAxis axis,
                             const std::vector<SweepPoint>& points,
                             const std::string& csv_path) {
  std::vector<std::string> names;
  for (const auto& point : points) {
    for (const auto& s : point.report.methods) {
      if (std::find(names.begin(), names.end(), s.name) == names.end()) {
        names.push_back(s.name);
      }
    }
  }
  const char* label = axis_label(axis);
  out << "# gnuplot script generated by risbf sweep\n";
  out << "set datafile separator comma\n";
  out << "set key top left\n";
  out << "set xlabel '" << label << "'\n";
  out << "set terminal pngcairo size 900,600\n";
  out << "set output 'sweep_gain.png'\n";
  out << "set ylabel 'mean channel gain'\n";
  out << "plot \\\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << "  '" << csv_path << "' using 2:(strcol(6) eq '" << names[i]
        << "' ? column(7) : NaN) with linespoints title '" << names[i] << "'"
        << (i + 1 < names.size() ? ", \\\n" : "\n");
  }
  out << "set output 'sweep_rate.png'\n";
  out << "set ylabel 'mean rate [bits/s/Hz]'\n";
  out << "plot \\\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << "  '" << csv_path << "' using 2:(strcol(6) eq '" << names[i]
        << "' ? column(9) : NaN) with linespoints title '" << names[i] << "'"
        << (i + 1 < names.size() ? ", \\\n" : "\n");
  }
}

}  // namespace risbf
