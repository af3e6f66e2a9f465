// airtune: command-line front end for the simulator, the sweep oracle, the
// online optimizer and the comparison matrix.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "airtune/error.hpp"
#include "airtune/harness.hpp"
#include "airtune/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using airtune::scenario::ScenarioConfig;

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int cmd_simulate(const ScenarioConfig& cfg) {
  const fs::path dir = airtune::harness::output_dir(cfg);
  std::ofstream trace;
  fs::path trace_path;
  airtune::mac::TxopObserver observer;
  if (cfg.trace) {
    trace_path = dir / ("txop_trace_" + cfg.tag() + ".csv");
    trace = open_output(trace_path);
    airtune::harness::write_trace_header(trace);
    observer = [&trace](std::uint64_t id, const airtune::mac::TxopReport& r) {
      if (!r.idle) airtune::harness::write_trace_row(trace, id, r);
    };
  }
  const airtune::mac::Measurement m =
      airtune::mac::measure_throughput(cfg.mac, cfg.resolved_traffic(), cfg.aggregation_policy(), cfg.frm_bytes,
                                       cfg.channel, cfg.duration_s, airtune::harness::run_seeds(cfg, 0), observer);
  std::printf("scenario %s\n", cfg.tag().c_str());
  std::printf("policy %s\n", cfg.policy == airtune::mac::PolicyKind::FifoBaseline ? "fifo" : "airtime");
  std::printf("throughput_mbps %.4f\n", m.throughput_mbps);
  std::printf("offered_mbps %.4f\n", m.offered_mbps);
  std::printf("txops %llu\n", static_cast<unsigned long long>(m.txops));
  std::printf("wasted_airtime_s %.6f\n", m.wasted_airtime_s);
  std::printf("dropped_overflow_bytes %llu\n", static_cast<unsigned long long>(m.counters.dropped_overflow));
  std::printf("dropped_retry_bytes %llu\n", static_cast<unsigned long long>(m.counters.dropped_retry));
  if (cfg.trace) {
    trace.flush();
    if (!trace) throw std::runtime_error("error writing " + trace_path.string());
    std::printf("trace %s\n", trace_path.string().c_str());
  }
  return 0;
}

int cmd_sweep(const ScenarioConfig& cfg) {
  const airtune::harness::SweepResult r = airtune::harness::sweep_max_throughput(cfg, 0);
  const fs::path path = airtune::harness::output_dir(cfg) / ("sweep_" + cfg.tag() + ".csv");
  std::ofstream out = open_output(path);
  airtune::harness::write_sweep_csv(out, r.curve);
  std::printf("frm_opt_bytes %.0f\nthr_max_mbps %.4f\nwrote %s\n", r.frm_opt, r.thr_max, path.string().c_str());
  return 0;
}

int cmd_optimize(const ScenarioConfig& cfg) {
  const airtune::controller::OnlineResult r = airtune::harness::optimize(cfg, 0);
  const fs::path dir = airtune::harness::output_dir(cfg);
  const fs::path traj = dir / ("trajectory_" + cfg.tag() + ".csv");
  const fs::path weights = dir / ("weights_" + cfg.tag() + ".txt");
  {
    std::ofstream out = open_output(traj);
    airtune::harness::write_trajectory_csv(out, r.history);
  }
  {
    std::ofstream out = open_output(weights);
    out << r.model.save();
  }
  std::printf("final_frm_bytes %.0f\nfinal_thr_mbps %.4f\nrounds %zu\nwrote %s\nwrote %s\n", r.final_frm,
              r.final_thr, r.history.size(), traj.string().c_str(), weights.string().c_str());
  return 0;
}

int cmd_compare(const ScenarioConfig& cfg) {
  const auto cells = airtune::harness::run_comparison(
      cfg, [](const std::string& tag) { std::fprintf(stderr, "running %s\n", tag.c_str()); });
  for (const fs::path& p : airtune::harness::emit_reports(cells, airtune::harness::output_dir(cfg)))
    std::printf("wrote %s\n", p.string().c_str());
  return 0;
}

int cmd_gradcheck(std::size_t trials, std::uint64_t seed) {
  const airtune::harness::GradcheckResult r = airtune::harness::gradcheck(trials, seed);
  std::printf("trials %zu\nmax_rel_err %.3e\n%s\n", r.trials, r.max_rel_err, r.pass ? "PASS" : "FAIL");
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WLAN MU-MIMO frame aggregation simulator with an online frame-size optimizer"};
  app.require_subcommand(1);

  std::string config;
  std::string report_dir;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;

  auto* simulate = app.add_subcommand("simulate", "measure one policy at one frame size");
  auto* sweep = app.add_subcommand("sweep", "exhaustive frame-size sweep (Maximum Throughput oracle)");
  auto* optimize = app.add_subcommand("optimize", "run the online optimizer against the simulator");
  auto* compare = app.add_subcommand("compare", "FIFO vs Maximum vs ML over the configured matrix");
  for (CLI::App* sub : {simulate, sweep, optimize, compare})
    sub->add_option("config", config, "scenario config file")->required()->check(CLI::ExistingFile);
  auto* gradcheck = app.add_subcommand("gradcheck", "check the tuning-pass gradient against finite differences");
  gradcheck->add_option("--trials", trials, "random networks to test")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", seed, "generator seed");
  auto* report = app.add_subcommand("report", "summarize the CSVs in a report directory");
  report->add_option("dir", report_dir, "report directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gradcheck) return cmd_gradcheck(trials, seed);
    if (*report) {
      std::cout << airtune::harness::summarize_reports(report_dir);
      return 0;
    }
    const ScenarioConfig cfg = airtune::scenario::load_config(config);
    if (*simulate) return cmd_simulate(cfg);
    if (*sweep) return cmd_sweep(cfg);
    if (*optimize) return cmd_optimize(cfg);
    if (*compare) return cmd_compare(cfg);
  } catch (const airtune::InvalidParameter& e) {
    std::fprintf(stderr, "airtune: invalid configuration: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "airtune: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
