#pragma once

// Online frame-size optimizer: collect (frm, Thr) probes, fit the surrogate,
// read its input gradient from the tuning pass, and take a clamped gradient
// ascent step.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "airtune/neural.hpp"

namespace airtune::controller {

struct HistoryEntry {
  std::size_t round = 0;
  double frm_bytes = 0.0;          // frame size in force during the round
  double measured_thr_mbps = 0.0;  // measured at the probe closest to frm
  double gradient = 0.0;           // Mbps per byte
  double mse = 0.0;
  std::size_t epochs = 0;
};

class ControllerState {
 public:
  /// `mu` scales the gradient in Mbps/byte into a step in bytes.
  ControllerState(double frm_start, double mu, double frm_min, double frm_max);

  /// frm <- clamp(frm + mu * gradient). Appends a history entry.
  double step(double gradient);
  double step(double gradient, HistoryEntry entry);

  [[nodiscard]] double frm() const noexcept { return frm_; }
  [[nodiscard]] double mu() const noexcept { return mu_; }
  [[nodiscard]] double frm_min() const noexcept { return frm_min_; }
  [[nodiscard]] double frm_max() const noexcept { return frm_max_; }
  [[nodiscard]] const std::vector<HistoryEntry>& history() const noexcept { return history_; }

 private:
  double frm_;
  double mu_;
  double frm_min_;
  double frm_max_;
  std::vector<HistoryEntry> history_;
};

/// Measured throughput for a frame size. `sample` numbers every probe the
/// controller issues so the caller can derive a fresh seed per probe.
using ProbeFn = std::function<double(double frm_bytes, std::uint64_t sample)>;

struct Sample {
  double frm_bytes;
  double thr_mbps;
};

/// n frame sizes spaced evenly over center +/- spread * (frm_max - frm_min),
/// clipped to the bounds.
[[nodiscard]] std::vector<double> probe_points(double center, double frm_min, double frm_max, double spread,
                                               std::size_t n);

/// Probes every point from probe_points once. `first_sample` is the sample
/// index of the first probe.
[[nodiscard]] std::vector<Sample> collect_patterns(const ProbeFn& probe, double center, double frm_min,
                                                   double frm_max, double spread, std::size_t n,
                                                   std::uint64_t first_sample = 0);

struct ControllerParams {
  double frm_min = 65536.0;
  double frm_max = 4194304.0;
  double frm_start = 262144.0;
  /// Step scale in bytes per (Mbps/byte). Unset: mu_norm * range^2 * (1 - 2 margin) / thr_max,
  /// i.e. a step of mu_norm * range per unit normalized gradient.
  std::optional<double> mu;
  double mu_norm = 0.05;
  double probe_spread = 0.05;
  std::size_t samples_per_round = 50;
  std::size_t rounds = 20;
  double margin = 0.05;
  /// Stop before `rounds` once |step| < settle_tolerance * range for
  /// settle_rounds consecutive rounds. Zero disables.
  double settle_tolerance = 0.0;
  std::size_t settle_rounds = 5;
  std::uint64_t init_seed = 3;
  std::uint64_t shuffle_seed = 4;
  neural::TrainOptions train;
};

[[nodiscard]] double resolve_mu(const ControllerParams& params, double thr_max);

struct OnlineResult {
  double final_frm = 0.0;
  double final_thr = 0.0;
  std::vector<HistoryEntry> history;
  neural::Mlp model;
  bool settled = false;
};

/// Runs `rounds` of collect -> normalize -> train (warm-started) -> forward at
/// frm -> tuning gradient -> denormalize -> step. `evaluate`, when given,
/// measures the final frame size; otherwise the last round's measurement is
/// reported.
OnlineResult online_loop(const ProbeFn& probe, const ControllerParams& params, double thr_max,
                         const std::function<double(double)>& evaluate = {});

}  // namespace airtune::controller
