#include "airtune/traffic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>

#include "airtune/error.hpp"

namespace airtune::traffic {

namespace {

constexpr std::size_t kFgnBlockSlots = std::size_t{1} << 14;

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

ComplexBuffer alloc_complex(std::size_t n) {
  return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

Plan make_plan(std::size_t n, fftw_complex* in, fftw_complex* out) {
  std::lock_guard lock(planner_mutex());
  return Plan(fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, FFTW_ESTIMATE));
}

}  // namespace

std::string_view to_string(TrafficKind kind) {
  switch (kind) {
    case TrafficKind::Pareto: return "pareto";
    case TrafficKind::Weibull: return "weibull";
    case TrafficKind::Fbm: return "fbm";
  }
  return "unknown";
}

TrafficKind parse_traffic_kind(std::string_view name) {
  std::string lower(name);
  std::ranges::transform(lower, lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "pareto") return TrafficKind::Pareto;
  if (lower == "weibull") return TrafficKind::Weibull;
  if (lower == "fbm") return TrafficKind::Fbm;
  throw InvalidParameter("unknown traffic model '" + std::string(name) + "'");
}

void TrafficModel::validate() const {
  if (!(target_load_mbps > 0.0) || !std::isfinite(target_load_mbps))
    throw InvalidParameter("traffic load must be > 0 Mbps");
  switch (kind) {
    case TrafficKind::Pareto:
      if (!(pareto_alpha > 1.0) || !std::isfinite(pareto_alpha))
        throw InvalidParameter("pareto alpha must be > 1");
      break;
    case TrafficKind::Weibull:
      if (!(weibull_k > 0.0) || !std::isfinite(weibull_k))
        throw InvalidParameter("weibull k must be > 0");
      break;
    case TrafficKind::Fbm:
      if (!(hurst >= 0.5 && hurst < 1.0)) throw InvalidParameter("fbm hurst must be in [0.5, 1)");
      if (!(fbm_cv >= 0.0) || !std::isfinite(fbm_cv)) throw InvalidParameter("fbm cv must be >= 0");
      if (!(fbm_slot_s > 0.0)) throw InvalidParameter("fbm slot must be > 0");
      break;
  }
}

double fgn_autocovariance(double hurst, std::size_t k) {
  const double h2 = 2.0 * hurst;
  const auto kd = static_cast<double>(k);
  return 0.5 * (std::pow(kd + 1.0, h2) - 2.0 * std::pow(kd, h2) + std::pow(std::abs(kd - 1.0), h2));
}

std::vector<double> fgn_block(std::size_t n, double hurst, Rng& rng) {
  if (n == 0 || (n & (n - 1)) != 0) throw InvalidParameter("fgn block length must be a power of two");
  const std::size_t m = 2 * n;

  // Eigenvalues of the circulant embedding of the autocovariance.
  auto row = alloc_complex(m);
  auto eig = alloc_complex(m);
  for (std::size_t j = 0; j <= n; ++j) {
    row[j][0] = fgn_autocovariance(hurst, j);
    row[j][1] = 0.0;
  }
  for (std::size_t j = n + 1; j < m; ++j) {
    row[j][0] = row[m - j][0];
    row[j][1] = 0.0;
  }
  Plan plan = make_plan(m, row.get(), eig.get());
  fftw_execute(plan.get());

  // Y = F(sqrt(lambda/m) (Z1 + i Z2)); Re(Y) has the target covariance.
  for (std::size_t k = 0; k < m; ++k) {
    const double a = std::sqrt(std::max(eig[k][0], 0.0) / static_cast<double>(m));
    row[k][0] = a * rng.normal();
    row[k][1] = a * rng.normal();
  }
  fftw_execute_dft(plan.get(), row.get(), eig.get());

  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = eig[k][0];
  return out;
}

Generator::Generator(const TrafficModel& model, std::size_t sta_id, std::uint64_t seed)
    : model_(model), sta_id_(sta_id), rng_(derive_seed(seed, sta_id)) {
  model_.validate();
  mean_gap_s_ = kMeanPayloadBytes * 8.0 / (model_.target_load_mbps * 1e6);
  switch (model_.kind) {
    case TrafficKind::Pareto:
      scale_s_ = mean_gap_s_ * (model_.pareto_alpha - 1.0) / model_.pareto_alpha;
      break;
    case TrafficKind::Weibull:
      scale_s_ = mean_gap_s_ / std::tgamma(1.0 + 1.0 / model_.weibull_k);
      break;
    case TrafficKind::Fbm:
      scale_s_ = 0.0;
      break;
  }
}

double Generator::draw_gap() {
  const double u = rng_.uniform_open();
  if (model_.kind == TrafficKind::Pareto) return scale_s_ * std::pow(u, -1.0 / model_.pareto_alpha);
  return scale_s_ * std::pow(-std::log(u), 1.0 / model_.weibull_k);
}

void Generator::refill_fbm_block() {
  std::vector<double> rate = fgn_block(kFgnBlockSlots, model_.hurst, rng_);
  for (double& r : rate) r = std::max(0.0, 1.0 + model_.fbm_cv * r);
  const double mean = std::accumulate(rate.begin(), rate.end(), 0.0) / static_cast<double>(rate.size());
  const double per_slot = model_.fbm_slot_s / mean_gap_s_;
  for (double& r : rate) r = mean > 0.0 ? per_slot * r / mean : per_slot;
  slot_packets_ = std::move(rate);
  slot_index_ = 0;
}

double Generator::next_fbm_arrival() {
  while (slot_emitted_ >= slot_count_) {
    if (slot_index_ >= slot_packets_.size()) refill_fbm_block();
    slot_start_ = static_cast<double>(slots_consumed_++) * model_.fbm_slot_s;
    credit_ += slot_packets_[slot_index_++];
    const double whole = std::floor(credit_);
    credit_ -= whole;
    slot_count_ = static_cast<std::size_t>(whole);
    slot_emitted_ = 0;
  }
  const double offset = (static_cast<double>(slot_emitted_) + 0.5) / static_cast<double>(slot_count_);
  ++slot_emitted_;
  return slot_start_ + offset * model_.fbm_slot_s;
}

double Generator::peek_arrival() {
  if (!has_lookahead_) {
    lookahead_ = next_packet();
    has_lookahead_ = true;
  }
  return lookahead_.arrival;
}

Packet Generator::next_packet() {
  if (has_lookahead_) {
    has_lookahead_ = false;
    return lookahead_;
  }
  Packet p;
  p.sta_id = static_cast<std::uint16_t>(sta_id_);
  p.cls = rng_.bernoulli(0.5) ? PacketClass::Video : PacketClass::Voip;
  p.payload = payload_bytes(p.cls);
  if (model_.kind == TrafficKind::Fbm) {
    p.arrival = next_fbm_arrival();
  } else {
    clock_ += draw_gap();
    p.arrival = clock_;
  }
  return p;
}

double offered_load(std::span<const Packet> packets, double start, double window_s) {
  double bits = 0.0;
  for (const Packet& p : packets)
    if (p.arrival >= start && p.arrival < start + window_s) bits += 8.0 * p.payload;
  return bits / window_s / 1e6;
}

double offered_load(Generator gen, double window_s) {
  double bits = 0.0;
  while (gen.peek_arrival() < window_s) bits += 8.0 * gen.next_packet().payload;
  return bits / window_s / 1e6;
}

double count_cv(Generator gen, double bin_s, double horizon_s) {
  const auto bins = static_cast<std::size_t>(horizon_s / bin_s);
  std::vector<double> counts(bins, 0.0);
  while (true) {
    const double t = gen.peek_arrival();
    const auto b = static_cast<std::size_t>(t / bin_s);
    if (b >= bins) break;
    counts[b] += 1.0;
    gen.next_packet();
  }
  const double n = static_cast<double>(bins);
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  var /= n;
  return mean > 0.0 ? std::sqrt(var) / mean : 0.0;
}

}  // namespace airtune::traffic
