#include "airtune/controller.hpp"

#include <algorithm>
#include <cmath>

#include "airtune/error.hpp"
#include "airtune/rng.hpp"

namespace airtune::controller {

ControllerState::ControllerState(double frm_start, double mu, double frm_min, double frm_max)
    : frm_(frm_start), mu_(mu), frm_min_(frm_min), frm_max_(frm_max) {
  if (!(frm_min < frm_max)) throw InvalidParameter("controller needs frm_min < frm_max");
  if (!std::isfinite(mu)) throw InvalidParameter("mu must be finite");
  frm_ = std::clamp(frm_start, frm_min_, frm_max_);
}

double ControllerState::step(double gradient) {
  HistoryEntry entry;
  entry.round = history_.empty() ? 0 : history_.back().round + 1;
  return step(gradient, entry);
}

double ControllerState::step(double gradient, HistoryEntry entry) {
  if (!std::isfinite(gradient)) throw InvalidParameter("gradient must be finite");
  if (!history_.empty() && entry.round <= history_.back().round)
    throw InvalidParameter("history rounds must be strictly increasing");
  entry.frm_bytes = frm_;
  entry.gradient = gradient;
  history_.push_back(entry);
  frm_ = std::clamp(frm_ + mu_ * gradient, frm_min_, frm_max_);
  return frm_;
}

std::vector<double> probe_points(double center, double frm_min, double frm_max, double spread, std::size_t n) {
  if (n < 2) throw InvalidParameter("need at least two probes per round");
  const double half = spread * (frm_max - frm_min);
  const double lo = std::max(frm_min, center - half);
  const double hi = std::min(frm_max, center + half);
  std::vector<double> points(n);
  for (std::size_t i = 0; i < n; ++i)
    points[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return points;
}

std::vector<Sample> collect_patterns(const ProbeFn& probe, double center, double frm_min, double frm_max,
                                     double spread, std::size_t n, std::uint64_t first_sample) {
  std::vector<Sample> samples;
  samples.reserve(n);
  std::uint64_t index = first_sample;
  for (double frm : probe_points(center, frm_min, frm_max, spread, n))
    samples.push_back({frm, probe(frm, index++)});
  return samples;
}

double resolve_mu(const ControllerParams& params, double thr_max) {
  if (params.mu) return *params.mu;
  const double range = params.frm_max - params.frm_min;
  return params.mu_norm * range * range * (1.0 - 2.0 * params.margin) / thr_max;
}

OnlineResult online_loop(const ProbeFn& probe, const ControllerParams& params, double thr_max,
                         const std::function<double(double)>& evaluate) {
  if (params.rounds < 1) throw InvalidParameter("online loop needs at least one round");
  const neural::Normalizer norm(params.frm_min, params.frm_max, thr_max, params.margin);
  ControllerState state(params.frm_start, resolve_mu(params, thr_max), params.frm_min, params.frm_max);
  neural::Mlp mlp = neural::Mlp::random(params.init_seed);

  std::vector<neural::TrainingPattern> patterns;
  double last_measured = 0.0;
  std::size_t quiet = 0;
  bool settled = false;
  const double settle_bytes = params.settle_tolerance * (params.frm_max - params.frm_min);
  for (std::size_t round = 0; round < params.rounds; ++round) {
    const double frm = state.frm();
    const std::vector<Sample> samples =
        collect_patterns(probe, frm, params.frm_min, params.frm_max, params.probe_spread,
                         params.samples_per_round, static_cast<std::uint64_t>(round) * params.samples_per_round);

    patterns.clear();
    for (const Sample& s : samples) patterns.push_back(norm.normalize(s.frm_bytes, s.thr_mbps));

    neural::TrainOptions opts = params.train;
    opts.shuffle_seed = derive_seed(params.shuffle_seed, round);
    const neural::TrainResult fit = neural::train(mlp, patterns, opts);

    mlp.forward(norm.normalize_frm(frm));
    const double gradient = norm.denorm_gradient(mlp.tuning_gradient());

    const auto nearest = std::ranges::min_element(
        samples, {}, [frm](const Sample& s) { return std::abs(s.frm_bytes - frm); });
    last_measured = nearest->thr_mbps;

    HistoryEntry entry;
    entry.round = round;
    entry.measured_thr_mbps = last_measured;
    entry.mse = fit.final_mse;
    entry.epochs = fit.epochs_used;
    const double next = state.step(gradient, entry);
    quiet = std::abs(next - frm) < settle_bytes ? quiet + 1 : 0;
    if (settle_bytes > 0.0 && quiet >= params.settle_rounds) {
      settled = true;
      break;
    }
  }

  OnlineResult result;
  result.final_frm = state.frm();
  result.final_thr = evaluate ? evaluate(result.final_frm) : last_measured;
  result.history = state.history();
  result.model = mlp;
  result.settled = settled;
  return result;
}

}  // namespace airtune::controller
