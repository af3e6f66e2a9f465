#pragma once

// Experiment drivers: the exhaustive sweep oracle, the FIFO baseline, the
// online optimizer against the simulator, the comparison matrix, the
// gradient self-check and CSV report emission.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "airtune/controller.hpp"
#include "airtune/mac.hpp"
#include "airtune/neural.hpp"
#include "airtune/scenario.hpp"

namespace airtune::harness {

using scenario::ScenarioConfig;

/// Seeds shared by every arm of one run: FIFO, each sweep point and the final
/// ML evaluation all see the same arrivals and error draws.
[[nodiscard]] mac::SimSeeds run_seeds(const ScenarioConfig& cfg, std::size_t run);

/// One AirtimeEqualizing measurement over cfg.duration_s with the run's seeds.
[[nodiscard]] double airtime_throughput(const ScenarioConfig& cfg, double frm_bytes, std::size_t run);
[[nodiscard]] double fifo_throughput(const ScenarioConfig& cfg, std::size_t run);

struct SweepResult {
  double frm_opt = 0.0;
  double thr_max = 0.0;
  std::vector<controller::Sample> curve;
};

/// Simulates every grid point; ties go to the smaller frame size.
[[nodiscard]] SweepResult sweep_max_throughput(const ScenarioConfig& cfg, std::size_t run = 0);

/// Probe for the controller: each call simulates sample_window_s with a
/// seed derived from (run, sample).
[[nodiscard]] controller::ProbeFn simulator_probe(const ScenarioConfig& cfg, std::size_t run);

/// Online loop against the simulator; the final frame size is re-measured
/// over cfg.duration_s on the run's matched seeds.
[[nodiscard]] controller::OnlineResult optimize(const ScenarioConfig& cfg, std::size_t run = 0);

struct ComparisonRow {
  traffic::TrafficKind traffic_model = traffic::TrafficKind::Pareto;
  double snr_db = 0.0;
  std::size_t num_sta = 0;
  double fifo_mbps = 0.0;
  double max_mbps = 0.0;
  double ml_mbps = 0.0;
  double ml_over_max_ratio = 0.0;
  double frm_opt_bytes = 0.0;  // mean final frame size chosen by the controller
};

struct RunResult {
  double fifo_mbps = 0.0;
  double max_mbps = 0.0;
  double sweep_frm_opt = 0.0;
  double ml_mbps = 0.0;
  double ml_frm = 0.0;
};

struct CellResult {
  std::string tag;
  ComparisonRow row;                               // means over runs
  std::vector<RunResult> runs;
  std::vector<controller::Sample> curve;           // sweep curve averaged over runs
  std::vector<controller::HistoryEntry> trajectory;  // run 0
};

struct CellOptions {
  std::size_t runs = 5;
  /// Without the sweep, max_mbps and the ratio are NaN and the curve is empty.
  bool sweep = true;
};

[[nodiscard]] CellResult run_cell(const ScenarioConfig& cell, const CellOptions& options);

/// Every (model, snr, num_sta) cell of cfg.compare, runs from cfg.compare.runs.
/// `progress`, when set, is told each cell's tag before it starts.
[[nodiscard]] std::vector<CellResult> run_comparison(const ScenarioConfig& cfg,
                                                     const std::function<void(const std::string&)>& progress = {});

/// |a - b| / max(|a|, |b|, floor). Two exact zeros give 0.
[[nodiscard]] double guarded_relative_error(double a, double b, double floor = 1e-6) noexcept;

/// Analytic input gradient of a network whose cache is fresh.
using GradientFn = std::function<double(const neural::Mlp&)>;

struct GradcheckResult {
  std::size_t trials = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Random networks (weights uniform in [-2, 2], every eighth trial with zero
/// output weights) and inputs in [0, 1], compared against a central difference
/// with h = 1e-5. Passes iff the worst relative error is below 1e-3.
[[nodiscard]] GradcheckResult gradcheck(std::size_t trials, std::uint64_t seed, const GradientFn& gradient = {});

// CSV writers. Headers are fixed; numbers use fixed precision so repeated
// runs are byte-identical.
void write_comparison_csv(std::ostream& out, std::vector<ComparisonRow> rows);
void write_sweep_csv(std::ostream& out, const std::vector<controller::Sample>& curve);
void write_trajectory_csv(std::ostream& out, const std::vector<controller::HistoryEntry>& history);
void write_trace_header(std::ostream& out);
void write_trace_row(std::ostream& out, std::uint64_t txop_id, const mac::TxopReport& report);

/// comparison.csv plus sweep_<tag>.csv and trajectory_<tag>.csv per cell.
/// Returns the files written.
std::vector<std::filesystem::path> emit_reports(const std::vector<CellResult>& cells,
                                                const std::filesystem::path& out_dir);

/// AIRTUNE_OUT when set, else the configured directory.
[[nodiscard]] std::filesystem::path output_dir(const ScenarioConfig& cfg);

/// Human-readable summary of the CSVs in a report directory.
[[nodiscard]] std::string summarize_reports(const std::filesystem::path& dir);

}  // namespace airtune::harness
