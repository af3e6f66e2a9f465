#include "airtune/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <system_error>

#include "airtune/error.hpp"
#include "airtune/rng.hpp"

namespace airtune::harness {

namespace {

// Stream tags keep probe seeds apart from the matched run seeds.
constexpr std::uint64_t kProbeStream = 0x9e0b;

std::string fixed(double x, int digits) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

double mean_of(const std::vector<RunResult>& runs, double RunResult::*field) {
  double sum = 0.0;
  for (const RunResult& r : runs) sum += r.*field;
  return sum / static_cast<double>(runs.size());
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::system_error(errno, std::generic_category(), "error writing " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

mac::SimSeeds run_seeds(const ScenarioConfig& cfg, std::size_t run) {
  return {derive_seed(cfg.seeds.traffic, run), derive_seed(cfg.seeds.channel, run)};
}

double airtime_throughput(const ScenarioConfig& cfg, double frm_bytes, std::size_t run) {
  return mac::measure_throughput(cfg.mac, cfg.resolved_traffic(), mac::AggregationPolicy::airtime_equalizing(),
                                 frm_bytes, cfg.channel, cfg.duration_s, run_seeds(cfg, run))
      .throughput_mbps;
}

double fifo_throughput(const ScenarioConfig& cfg, std::size_t run) {
  return mac::measure_throughput(cfg.mac, cfg.resolved_traffic(), mac::AggregationPolicy::fifo(cfg.mac.fifo_max_mpdus),
                                 0.0, cfg.channel, cfg.duration_s, run_seeds(cfg, run))
      .throughput_mbps;
}

SweepResult sweep_max_throughput(const ScenarioConfig& cfg, std::size_t run) {
  if (cfg.sweep_grid.empty()) throw InvalidParameter("sweep grid is empty");
  SweepResult result;
  result.thr_max = -std::numeric_limits<double>::infinity();
  for (double frm : cfg.sweep_grid) {
    const double thr = airtime_throughput(cfg, frm, run);
    result.curve.push_back({frm, thr});
    if (thr > result.thr_max) {
      result.thr_max = thr;
      result.frm_opt = frm;
    }
  }
  return result;
}

controller::ProbeFn simulator_probe(const ScenarioConfig& cfg, std::size_t run) {
  const traffic::TrafficModel traffic = cfg.resolved_traffic();
  const mac::SimSeeds base = run_seeds(cfg, run);
  return [cfg, traffic, base](double frm, std::uint64_t sample) {
    const mac::SimSeeds seeds{derive_seed(base.traffic, kProbeStream, sample),
                              derive_seed(base.channel, kProbeStream, sample)};
    return mac::measure_throughput(cfg.mac, traffic, mac::AggregationPolicy::airtime_equalizing(), frm, cfg.channel,
                                   cfg.sample_window_s, seeds)
        .throughput_mbps;
  };
}

controller::OnlineResult optimize(const ScenarioConfig& cfg, std::size_t run) {
  controller::ControllerParams params = cfg.controller;
  params.init_seed = derive_seed(cfg.seeds.init, run);
  params.shuffle_seed = derive_seed(cfg.seeds.shuffle, run);
  return controller::online_loop(simulator_probe(cfg, run), params, cfg.thr_max_mbps(),
                                 [&cfg, run](double frm) { return airtime_throughput(cfg, frm, run); });
}

CellResult run_cell(const ScenarioConfig& cell, const CellOptions& options) {
  if (options.runs == 0) throw InvalidParameter("need at least one run per cell");
  cell.validate();
  CellResult result;
  result.tag = cell.tag();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (options.sweep) {
    result.curve.reserve(cell.sweep_grid.size());
    for (double frm : cell.sweep_grid) result.curve.push_back({frm, 0.0});
  }

  for (std::size_t run = 0; run < options.runs; ++run) {
    RunResult r;
    r.fifo_mbps = fifo_throughput(cell, run);
    if (options.sweep) {
      const SweepResult sweep = sweep_max_throughput(cell, run);
      r.max_mbps = sweep.thr_max;
      r.sweep_frm_opt = sweep.frm_opt;
      for (std::size_t i = 0; i < sweep.curve.size(); ++i) result.curve[i].thr_mbps += sweep.curve[i].thr_mbps;
    } else {
      r.max_mbps = nan;
      r.sweep_frm_opt = nan;
    }
    controller::OnlineResult ml = optimize(cell, run);
    r.ml_mbps = ml.final_thr;
    r.ml_frm = ml.final_frm;
    if (run == 0) result.trajectory = std::move(ml.history);
    result.runs.push_back(r);
  }
  for (controller::Sample& s : result.curve) s.thr_mbps /= static_cast<double>(options.runs);

  ComparisonRow& row = result.row;
  row.traffic_model = cell.traffic.kind;
  row.snr_db = cell.channel.snr_db();
  row.num_sta = cell.mac.num_sta;
  row.fifo_mbps = mean_of(result.runs, &RunResult::fifo_mbps);
  row.max_mbps = mean_of(result.runs, &RunResult::max_mbps);
  row.ml_mbps = mean_of(result.runs, &RunResult::ml_mbps);
  row.ml_over_max_ratio = row.max_mbps > 0.0 ? row.ml_mbps / row.max_mbps : nan;
  row.frm_opt_bytes = mean_of(result.runs, &RunResult::ml_frm);
  return result;
}

std::vector<CellResult> run_comparison(const ScenarioConfig& cfg,
                                       const std::function<void(const std::string&)>& progress) {
  std::vector<CellResult> cells;
  for (traffic::TrafficKind model : cfg.compare.models)
    for (double snr : cfg.compare.snr_db)
      for (std::size_t n : cfg.compare.num_sta) {
        const ScenarioConfig cell = cfg.with_cell(model, snr, n);
        if (progress) progress(cell.tag());
        cells.push_back(run_cell(cell, {cfg.compare.runs, true}));
      }
  return cells;
}

double guarded_relative_error(double a, double b, double floor) noexcept {
  const double diff = std::abs(a - b);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(a), std::abs(b), floor});
}

GradcheckResult gradcheck(std::size_t trials, std::uint64_t seed, const GradientFn& gradient) {
  if (trials == 0) throw InvalidParameter("gradcheck needs at least one trial");
  constexpr double h = 1e-5;
  Rng rng(seed);
  auto draw = [&rng] { return 4.0 * rng.uniform() - 2.0; };
  GradcheckResult result;
  result.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    neural::Weights w;
    for (std::size_t j = 0; j < neural::kHidden; ++j) {
      w.input[j] = draw();
      w.hidden_bias[j] = draw();
      w.output[j] = t % 8 == 7 ? 0.0 : draw();
    }
    w.output_bias = draw();
    const double x = rng.uniform();

    neural::Mlp mlp(w);
    const double numeric = (mlp.forward(x + h) - mlp.forward(x - h)) / (2.0 * h);
    mlp.forward(x);
    const double analytic = gradient ? gradient(mlp) : mlp.tuning_gradient();
    result.max_rel_err = std::max(result.max_rel_err, guarded_relative_error(analytic, numeric));
  }
  result.pass = result.max_rel_err < 1e-3;
  return result;
}

void write_comparison_csv(std::ostream& out, std::vector<ComparisonRow> rows) {
  std::ranges::sort(rows, [](const ComparisonRow& a, const ComparisonRow& b) {
    const std::string_view ma = traffic::to_string(a.traffic_model);
    const std::string_view mb = traffic::to_string(b.traffic_model);
    if (ma != mb) return ma < mb;
    if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
    return a.num_sta < b.num_sta;
  });
  out << "traffic_model,snr_db,num_sta,fifo_mbps,max_mbps,ml_mbps,ml_over_max_ratio,frm_opt_bytes\n";
  for (const ComparisonRow& r : rows) {
    out << traffic::to_string(r.traffic_model) << ',' << scenario::format_number(r.snr_db) << ',' << r.num_sta << ','
        << fixed(r.fifo_mbps, 4) << ',' << fixed(r.max_mbps, 4) << ',' << fixed(r.ml_mbps, 4) << ','
        << fixed(r.ml_over_max_ratio, 6) << ',' << fixed(r.frm_opt_bytes, 0) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<controller::Sample>& curve) {
  out << "frm_bytes,thr_mbps\n";
  for (const controller::Sample& s : curve) out << fixed(s.frm_bytes, 0) << ',' << fixed(s.thr_mbps, 4) << '\n';
}

void write_trajectory_csv(std::ostream& out, const std::vector<controller::HistoryEntry>& history) {
  out << "round,frm_bytes,thr_mbps,gradient,mse,epochs\n";
  char grad[64];
  char mse[64];
  for (const controller::HistoryEntry& h : history) {
    std::snprintf(grad, sizeof grad, "%.9e", h.gradient);
    std::snprintf(mse, sizeof mse, "%.6e", h.mse);
    out << h.round << ',' << fixed(h.frm_bytes, 0) << ',' << fixed(h.measured_thr_mbps, 4) << ',' << grad << ','
        << mse << ',' << h.epochs << '\n';
  }
}

void write_trace_header(std::ostream& out) { out << "txop_id,duration_us,wasted_us,delivered_bytes\n"; }

void write_trace_row(std::ostream& out, std::uint64_t txop_id, const mac::TxopReport& report) {
  out << txop_id << ',' << fixed(report.txop_duration_s * 1e6, 3) << ',' << fixed(report.wasted_airtime_s * 1e6, 3)
      << ',' << report.bytes_delivered() << '\n';
}

std::vector<std::filesystem::path> emit_reports(const std::vector<CellResult>& cells,
                                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  const std::filesystem::path comparison = out_dir / "comparison.csv";
  {
    std::ofstream out = open_for_write(comparison);
    std::vector<ComparisonRow> rows;
    for (const CellResult& c : cells) rows.push_back(c.row);
    write_comparison_csv(out, rows);
    check_written(out, comparison);
  }
  written.push_back(comparison);

  for (const CellResult& c : cells) {
    if (!c.curve.empty()) {
      const std::filesystem::path path = out_dir / ("sweep_" + c.tag + ".csv");
      std::ofstream out = open_for_write(path);
      write_sweep_csv(out, c.curve);
      check_written(out, path);
      written.push_back(path);
    }
    const std::filesystem::path path = out_dir / ("trajectory_" + c.tag + ".csv");
    std::ofstream out = open_for_write(path);
    write_trajectory_csv(out, c.trajectory);
    check_written(out, path);
    written.push_back(path);
  }
  return written;
}

std::filesystem::path output_dir(const ScenarioConfig& cfg) {
  const char* env = std::getenv("AIRTUNE_OUT");
  if (env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

std::string summarize_reports(const std::filesystem::path& dir) {
  const std::filesystem::path comparison = dir / "comparison.csv";
  std::ifstream in(comparison);
  if (!in) throw InvalidParameter("no comparison.csv in '" + dir.string() + "'");

  const std::vector<std::string> expected{"traffic_model", "snr_db",  "num_sta",           "fifo_mbps",
                                          "max_mbps",      "ml_mbps", "ml_over_max_ratio", "frm_opt_bytes"};
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != expected)
    throw InvalidParameter(comparison.string() + ": unexpected header");

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %6s %4s %10s %10s %10s %8s %10s\n", "model", "snr_db", "sta", "fifo", "max",
                "ml", "ml/max", "frm_opt");
  os << buf;
  std::size_t rows = 0;
  std::size_t ml_beats_fifo = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> c = split_csv(line);
    if (c.size() != expected.size())
      throw InvalidParameter(comparison.string() + ": row " + std::to_string(rows + 1) + " has " +
                             std::to_string(c.size()) + " fields");
    ++rows;
    const double fifo = std::stod(c[3]);
    const double ml = std::stod(c[5]);
    const double ratio = std::stod(c[6]);
    if (ml > fifo) ++ml_beats_fifo;
    if (!std::isnan(ratio)) worst_ratio = std::min(worst_ratio, ratio);
    std::snprintf(buf, sizeof buf, "%-8s %6s %4s %10.2f %10.2f %10.2f %8.4f %10s\n", c[0].c_str(), c[1].c_str(),
                  c[2].c_str(), fifo, std::stod(c[4]), ml, ratio, c[7].c_str());
    os << buf;
  }
  os << rows << " cells; ML above FIFO in " << ml_beats_fifo << '\n';
  if (rows > 0 && std::isfinite(worst_ratio)) os << "lowest ML/max ratio " << fixed(worst_ratio, 4) << '\n';

  std::vector<std::filesystem::path> sweeps;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("sweep_") && name.ends_with(".csv")) sweeps.push_back(entry.path());
  }
  std::ranges::sort(sweeps);
  for (const std::filesystem::path& p : sweeps) {
    std::ifstream s(p);
    std::getline(s, line);
    double best = -1.0;
    std::string best_frm;
    while (std::getline(s, line)) {
      const std::vector<std::string> c = split_csv(line);
      if (c.size() != 2) continue;
      const double thr = std::stod(c[1]);
      if (thr > best) {
        best = thr;
        best_frm = c[0];
      }
    }
    os << p.filename().string() << ": peak " << fixed(best, 2) << " Mbps at " << best_frm << " bytes\n";
  }
  return os.str();
}

}  // namespace airtune::harness
