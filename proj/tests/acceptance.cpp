// Acceptance run: one line per criterion, [PASS] or [FAIL], followed by the
// measured quantities. Exit status is nonzero if any criterion fails.
//
// The simulator criteria are expensive (about 20 minutes on one core); they
// share one set of runs so every cell is simulated once per seed.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "airtune/controller.hpp"
#include "airtune/harness.hpp"
#include "airtune/mac.hpp"
#include "airtune/neural.hpp"
#include "airtune/rng.hpp"
#include "airtune/scenario.hpp"
#include "airtune/traffic.hpp"

namespace {

namespace fs = std::filesystem;
using namespace airtune;
using traffic::TrafficKind;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

void progress(const std::string& what) {
  std::fprintf(stderr, "  .. %s\n", what.c_str());
  std::fflush(stderr);
}

// ---------------------------------------------------------------------------

void criterion_gradcheck() {
  const auto t0 = Clock::now();
  const harness::GradcheckResult r = harness::gradcheck(1000, 1);
  const double elapsed = seconds_since(t0);
  report(1, r.pass && r.max_rel_err < 1e-3 && elapsed < 1.0,
         format("tuning gradient vs central difference: max_rel_err=%.3e over %zu networks, %.3f s (need < 1e-3, < 1 s)",
                r.max_rel_err, r.trials, elapsed));
}

void criterion_equivalent_forms() {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  Rng rng(2024);
  double worst = 0.0;  // in units of eps * magnitude of the summands
  for (int t = 0; t < 1000; ++t) {
    neural::Weights w;
    for (std::size_t j = 0; j < neural::kHidden; ++j) {
      w.input[j] = 4.0 * rng.uniform() - 2.0;
      w.hidden_bias[j] = 4.0 * rng.uniform() - 2.0;
      w.output[j] = 4.0 * rng.uniform() - 2.0;
    }
    w.output_bias = 4.0 * rng.uniform() - 2.0;
    neural::Mlp mlp(w);
    mlp.forward(rng.uniform());
    const double summed = mlp.tuning_gradient();
    const double factored = mlp.tuning_gradient_factored();
    const auto lambda = mlp.hidden_local_gradients();
    double scale = 0.0;
    for (std::size_t j = 0; j < neural::kHidden; ++j) scale += std::abs(lambda[j] * w.input[j]);
    const double diff = std::abs(summed - factored);
    if (diff == 0.0) continue;
    worst = std::max(worst, diff / (eps * scale));
  }
  report(2, worst <= 10.0,
         format("summed vs factored tuning gradient: worst difference %.2f ulp of the summand scale over 1000 cases "
                "(need <= 10)",
                worst));
}

void criterion_training() {
  const auto t0 = Clock::now();
  std::vector<neural::TrainingPattern> patterns;
  for (int i = 0; i < 50; ++i) {
    const double f = i / 49.0;
    patterns.push_back({f, 0.1 + 0.8 * f});
  }
  int converged = 0;
  std::size_t worst_epochs = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    neural::Mlp mlp = neural::Mlp::random(derive_seed(11, s));
    neural::TrainOptions opts;
    opts.shuffle_seed = derive_seed(12, s);
    const neural::TrainResult r = neural::train(mlp, patterns, opts);
    if (r.converged && r.final_mse < 1e-5 && r.epochs_used <= 1000) {
      ++converged;
      worst_epochs = std::max(worst_epochs, r.epochs_used);
    }
  }
  const double elapsed = seconds_since(t0);
  report(3, converged >= 18 && elapsed < 10.0,
         format("linear map 0.1+0.8f: %d/20 seeds reach MSE < 1e-5 within 1000 epochs (slowest %zu), %.2f s "
                "(need >= 18, < 10 s)",
                converged, worst_epochs, elapsed));
}

void criterion_bump() {
  const auto t0 = Clock::now();
  int hits = 0;
  double worst = 0.0;
  std::size_t max_rounds = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    controller::ControllerParams p;
    p.frm_start = 200000.0;
    p.rounds = 200;
    p.mu_norm = 0.005;
    p.settle_tolerance = 1e-3;
    p.settle_rounds = 5;
    p.init_seed = derive_seed(11, s);
    p.shuffle_seed = derive_seed(12, s);
    auto bump = [](double frm, std::uint64_t) {
      const double x = (frm - 1e6) / 4e5;
      return 800.0 * std::exp(-x * x);
    };
    const controller::OnlineResult r = controller::online_loop(bump, p, 1000.0);
    const double miss = std::abs(r.final_frm - 1e6) / (p.frm_max - p.frm_min);
    worst = std::max(worst, miss);
    max_rounds = std::max(max_rounds, r.history.size());
    if (miss <= 0.05 && r.history.size() <= 200) ++hits;
  }
  const double elapsed = seconds_since(t0);
  report(4, hits >= 18 && elapsed < 30.0,
         format("Gaussian bump, argmax 1e6 B: %d/20 seeds within 5%% of range (worst %.2f%%, at most %zu rounds), "
                "%.2f s (need >= 18, < 30 s)",
                hits, 100.0 * worst, max_rounds, elapsed));
}

// ---------------------------------------------------------------------------
// Simulator criteria 5-9 share one set of runs.

struct CellRuns {
  std::vector<double> fifo;
  std::vector<double> ml;
  double max_run0 = 0.0;
  double ml_run0 = 0.0;

  [[nodiscard]] double mean_ml() const { return mean(ml); }
  [[nodiscard]] double mean_fifo() const { return mean(fifo); }
  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
};

constexpr std::size_t kRuns = 5;
const std::vector<TrafficKind> kModels{TrafficKind::Pareto, TrafficKind::Weibull, TrafficKind::Fbm};
const std::vector<double> kSnrs{3.0, 10.0, 20.0};

using CellKey = std::tuple<TrafficKind, double, std::size_t>;

void extend_runs(const scenario::ScenarioConfig& cell, CellRuns& runs) {
  for (std::size_t run = runs.ml.size(); run < kRuns; ++run) {
    runs.fifo.push_back(harness::fifo_throughput(cell, run));
    runs.ml.push_back(harness::optimize(cell, run).final_thr);
  }
}

void simulator_criteria() {
  const scenario::ScenarioConfig base = scenario::default_config();
  std::map<CellKey, CellRuns> cells;

  // 5: run 0 of every 4-STA cell against the sweep on matched seeds.
  const auto t5 = Clock::now();
  double worst_ratio = std::numeric_limits<double>::infinity();
  std::string worst_cell;
  bool all_ok = true;
  for (TrafficKind model : kModels)
    for (double snr : kSnrs) {
      const scenario::ScenarioConfig cell = base.with_cell(model, snr, 4);
      progress("sweep + online " + cell.tag());
      const harness::CellResult r = harness::run_cell(cell, {1, true});
      CellRuns& runs = cells[{model, snr, 4}];
      runs.fifo.push_back(r.runs[0].fifo_mbps);
      runs.ml.push_back(r.runs[0].ml_mbps);
      runs.max_run0 = r.runs[0].max_mbps;
      runs.ml_run0 = r.runs[0].ml_mbps;
      const double ratio = r.runs[0].ml_mbps / r.runs[0].max_mbps;
      std::fprintf(stderr, "     ml %.3f max %.3f ratio %.5f frm %.0f (sweep %.0f)\n", r.runs[0].ml_mbps,
                   r.runs[0].max_mbps, ratio, r.runs[0].ml_frm, r.runs[0].sweep_frm_opt);
      if (!(ratio >= 0.98)) all_ok = false;
      if (ratio < worst_ratio) {
        worst_ratio = ratio;
        worst_cell = cell.tag();
      }
    }
  const double elapsed5 = seconds_since(t5);
  report(5, all_ok && elapsed5 < 900.0,
         format("ML vs exhaustive sweep over 9 cells at 4 STAs: lowest ratio %.5f (%s), %.0f s (need >= 0.98 in "
                "every cell, < 900 s)",
                worst_ratio, worst_cell.c_str(), elapsed5));

  // Remaining seeds of the 4-STA matrix, then the 2- and 3-STA cells at 10 dB.
  for (TrafficKind model : kModels)
    for (double snr : kSnrs) {
      const scenario::ScenarioConfig cell = base.with_cell(model, snr, 4);
      progress("seeds 1-4 " + cell.tag());
      extend_runs(cell, cells[{model, snr, 4}]);
    }
  for (TrafficKind model : kModels)
    for (std::size_t n : {2u, 3u}) {
      const scenario::ScenarioConfig cell = base.with_cell(model, 10.0, n);
      progress("seeds 0-4 " + cell.tag());
      extend_runs(cell, cells[{model, 10.0, n}]);
    }

  // 6
  {
    int wins = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (TrafficKind model : kModels)
      for (double snr : kSnrs) {
        const CellRuns& c = cells[{model, snr, 4}];
        if (c.mean_ml() > c.mean_fifo()) ++wins;
        tightest = std::min(tightest, c.mean_ml() - c.mean_fifo());
      }
    report(6, wins == 9,
           format("ML above FIFO (mean of %zu seeds) in %d/9 cells, smallest margin %.3f Mbps", kRuns, wins,
                  tightest));
  }

  // 7
  {
    bool ok = true;
    std::ostringstream detail;
    detail << "mean ML Mbps at 3/10/20 dB:";
    for (TrafficKind model : kModels) {
      const double a = cells[{model, 3.0, 4}].mean_ml();
      const double b = cells[{model, 10.0, 4}].mean_ml();
      const double c = cells[{model, 20.0, 4}].mean_ml();
      ok = ok && a < b && b < c;
      detail << format(" %s %.1f/%.1f/%.1f", std::string(traffic::to_string(model)).c_str(), a, b, c);
    }
    report(7, ok, detail.str() + " (need strictly increasing)");
  }

  // 8
  {
    bool ok = true;
    std::ostringstream detail;
    detail << "mean ML Mbps at 2/3/4 STAs, 10 dB:";
    for (TrafficKind model : kModels) {
      const double a = cells[{model, 10.0, 2}].mean_ml();
      const double b = cells[{model, 10.0, 3}].mean_ml();
      const double c = cells[{model, 10.0, 4}].mean_ml();
      ok = ok && a < b && b < c;
      detail << format(" %s %.1f/%.1f/%.1f", std::string(traffic::to_string(model)).c_str(), a, b, c);
    }
    report(8, ok, detail.str() + " (need strictly increasing)");
  }

  // 9
  {
    const double weibull = cells[{TrafficKind::Weibull, 10.0, 4}].mean_ml();
    const double pareto = cells[{TrafficKind::Pareto, 10.0, 4}].mean_ml();
    bool lowest = true;
    std::ostringstream cvs;
    for (double bin : {1e-3, 10e-3, 100e-3}) {
      std::map<TrafficKind, double> cv;
      for (TrafficKind model : kModels) {
        const scenario::ScenarioConfig c = base.with_cell(model, 10.0, 4);
        cv[model] = traffic::count_cv(traffic::Generator(c.resolved_traffic(), 0, 99), bin, 60.0);
      }
      lowest = lowest && cv[TrafficKind::Weibull] < cv[TrafficKind::Pareto] &&
               cv[TrafficKind::Weibull] < cv[TrafficKind::Fbm];
      cvs << format(" %gms P/W/F %.3f/%.3f/%.3f", bin * 1e3, cv[TrafficKind::Pareto], cv[TrafficKind::Weibull],
                    cv[TrafficKind::Fbm]);
    }
    report(9, weibull > pareto && lowest,
           format("10 dB, 4 STAs: ML Weibull %.2f vs Pareto %.2f Mbps; count CV", weibull, pareto) + cvs.str() +
               " (need Weibull > Pareto and Weibull lowest)");
  }
}

// ---------------------------------------------------------------------------

void criterion_conservation() {
  Rng rng(77);
  int scenarios = 0;
  int violations = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (violations++ == 0) first = what;
  };

  for (int t = 0; t < 60; ++t) {
    mac::MacConfig mac;
    mac.num_sta = 2 + static_cast<std::size_t>(rng.uniform() * 3.0);
    mac.retry_limit = static_cast<std::size_t>(rng.uniform() * 6.0);
    mac.buffer_packets = 16 + static_cast<std::size_t>(rng.uniform() * 512.0);
    traffic::TrafficModel tm;
    tm.kind = kModels[static_cast<std::size_t>(rng.uniform() * 3.0)];
    tm.target_load_mbps = 5.0 + rng.uniform() * 500.0;
    std::vector<mac::Link> links;
    const double snr = -5.0 + 30.0 * rng.uniform();
    const channel::ChannelProfile profile(snr);
    for (std::size_t i = 0; i < mac.num_sta; ++i)
      links.push_back({profile.rate_table()[static_cast<std::size_t>(rng.uniform() * 5.0)].phy_rate_mbps,
                       rng.uniform() < 0.3 ? 0.0 : std::pow(10.0, -3.0 - 5.0 * rng.uniform())});
    const mac::AggregationPolicy policy =
        rng.uniform() < 0.3 ? mac::AggregationPolicy::fifo() : mac::AggregationPolicy::airtime_equalizing();
    const double frm = 65536.0 + rng.uniform() * (4194304.0 - 65536.0);
    const double duration = 0.2 + rng.uniform();
    const std::uint64_t seed = derive_seed(5, t);

    double capacity = 0.0;
    for (const mac::Link& l : links) capacity += l.rate_mbps;
    double tx_wasted = 0.0;
    bool negative_waste = false;
    const mac::Measurement m = mac::measure_throughput(
        mac, tm, policy, frm, links, duration, seed, [&](std::uint64_t, const mac::TxopReport& r) {
          if (r.wasted_airtime_s < 0.0) negative_waste = true;
          tx_wasted += r.wasted_airtime_s;
        });
    ++scenarios;
    const mac::Counters& c = m.counters;
    const std::string tag = format("scenario %d", t);
    if (!(c.delivered <= c.enqueued && c.enqueued <= c.generated)) fail(tag + ": counter order");
    if (c.generated != c.enqueued + c.dropped_overflow) fail(tag + ": overflow accounting");
    if (!(m.throughput_mbps <= m.offered_mbps)) fail(tag + ": throughput above offered load");
    if (!(m.throughput_mbps <= capacity)) fail(tag + ": throughput above PHY capacity");
    if (negative_waste || m.wasted_airtime_s < 0.0) fail(tag + ": negative wasted airtime");
  }

  // ber = 0, equal rates, queues deeper than their budgets: the only waste is
  // the packet-granularity remainder, under one on-air MPDU per stream.
  for (int t = 0; t < 40; ++t) {
    mac::MacConfig mac;
    mac.num_sta = 2 + static_cast<std::size_t>(rng.uniform() * 3.0);
    mac.buffer_packets = 1 << 20;
    const double rate = channel::ChannelProfile::default_rate_table()[static_cast<std::size_t>(rng.uniform() * 5.0)]
                            .phy_rate_mbps;
    const std::vector<mac::Link> links(mac.num_sta, mac::Link{rate, 0.0});
    const double frm = 65536.0 + rng.uniform() * (4194304.0 - 65536.0);
    mac::ApState ap(mac);
    const std::size_t per_queue = static_cast<std::size_t>(3.0 * frm / 100.0 / static_cast<double>(mac.num_sta));
    for (std::size_t i = 0; i < mac.num_sta; ++i)
      for (std::size_t k = 0; k < per_queue; ++k) {
        const auto cls = rng.uniform() < 0.5 ? traffic::PacketClass::Voip : traffic::PacketClass::Video;
        ap.admit({0.0, traffic::payload_bytes(cls), static_cast<std::uint16_t>(i), cls});
      }
    const double bound = static_cast<double>(mac.num_sta - 1) *
                         static_cast<double>(traffic::kVideoPayloadBytes + mac.mpdu_header_bytes) * 8.0 /
                         (rate * 1e6);
    Rng err(derive_seed(6, t));
    for (int txop = 0; txop < 2; ++txop) {
      const mac::TxopReport r =
          mac::run_txop(ap, mac::AggregationPolicy::airtime_equalizing(), frm, links, err);
      if (r.wasted_airtime_s < 0.0 || r.wasted_airtime_s > bound)
        fail(format("saturated scenario %d: waste %.3e s above the one-MPDU bound %.3e s", t, r.wasted_airtime_s,
                    bound));
      if (r.bytes_delivered() != r.bytes_attempted()) fail(format("saturated scenario %d: loss at ber 0", t));
    }
    ++scenarios;
    if (!(ap.counters.delivered <= ap.counters.enqueued && ap.counters.enqueued <= ap.counters.generated))
      fail(format("saturated scenario %d: counter order", t));
  }
  report(10, violations == 0,
         format("conservation over %d randomized scenarios: %d violations%s", scenarios, violations,
                violations ? (", first: " + first).c_str() : ""));
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& cli, const fs::path& config, const fs::path& out) {
  const std::string cmd =
      "AIRTUNE_OUT='" + out.string() + "' '" + cli + "' compare '" + config.string() + "' >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_determinism(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / format("airtune_accept_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = root / "tiny.ini";
  {
    std::ofstream out(config);
    out << "[mac]\nduration_s = 2\n"
           "[controller]\nrounds = 3\nsamples_per_round = 12\nsample_window_s = 0.25\n"
           "[sweep]\npoints = 6\n"
           "[compare]\nmodels = pareto,fbm\nsnr_db = 3,20\nnum_sta = 2\nruns = 2\n";
  }
  const int rc1 = run_cli(cli, config, root / "a");
  const int rc2 = run_cli(cli, config, root / "b");
  std::size_t files = 0;
  std::size_t differ = 0;
  if (rc1 == 0 && rc2 == 0) {
    for (const auto& entry : fs::directory_iterator(root / "a")) {
      ++files;
      const fs::path other = root / "b" / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differ;
    }
    for (const auto& entry : fs::directory_iterator(root / "b"))
      if (!fs::exists(root / "a" / entry.path().filename())) ++differ;
  }
  fs::remove_all(root);
  report(11, rc1 == 0 && rc2 == 0 && files > 0 && differ == 0,
         format("two `compare` runs of one config: exit %d/%d, %zu files, %zu differing", rc1, rc2, files, differ));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "airtune";
  const auto t0 = Clock::now();
  criterion_gradcheck();
  criterion_equivalent_forms();
  criterion_training();
  criterion_bump();
  simulator_criteria();
  criterion_conservation();
  criterion_determinism(cli);
  std::printf("%d criteria failed, %.0f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
