#include "airtune/mac.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "airtune/error.hpp"

namespace airtune::mac {

namespace {

// Error probability for the two payload sizes seen on a link, computed once.
class ErrorTable {
 public:
  ErrorTable(double ber, std::size_t header_bytes) : ber_(ber), header_(header_bytes) {}

  double operator()(std::uint32_t payload) {
    for (std::size_t i = 0; i < 2; ++i)
      if (sizes_[i] == payload) return probs_[i];
    const double p = channel::mpdu_error_prob(static_cast<double>(payload + header_), ber_);
    sizes_[next_] = payload;
    probs_[next_] = p;
    next_ ^= 1U;
    return p;
  }

 private:
  double ber_;
  std::size_t header_;
  std::uint32_t sizes_[2] = {0, 0};
  double probs_[2] = {0.0, 0.0};
  unsigned next_ = 0;
};

std::vector<traffic::Generator> make_generators(const traffic::TrafficModel& traffic, std::size_t num_sta,
                                                std::uint64_t seed) {
  std::vector<traffic::Generator> gens;
  gens.reserve(num_sta);
  for (std::size_t i = 0; i < num_sta; ++i) gens.emplace_back(traffic, i, seed);
  return gens;
}

}  // namespace

void MacConfig::validate() const {
  if (num_sta == 0) throw InvalidParameter("num_sta must be >= 1");
  if (num_sta > n_antennas)
    throw InvalidParameter("num_sta (" + std::to_string(num_sta) + ") exceeds n_antennas (" +
                           std::to_string(n_antennas) + ")");
  if (fifo_max_mpdus == 0) throw InvalidParameter("fifo_max_mpdus must be >= 1");
  if (buffer_packets == 0) throw InvalidParameter("buffer_packets must be >= 1");
  if (!(idle_slot_s > 0.0)) throw InvalidParameter("idle slot must be > 0");
  if (overheads.preamble_us < 0 || overheads.sifs_us < 0 || overheads.block_ack_us < 0)
    throw InvalidParameter("overheads must be >= 0");
}

ApState::ApState(const MacConfig& config) : config_(config), queues_(config.num_sta) { config_.validate(); }

void ApState::advance(double dt) {
  if (dt < 0.0) throw InvalidParameter("clock cannot move backwards");
  clock_ += dt;
}

bool ApState::all_empty() const noexcept {
  return std::ranges::all_of(queues_, [](const Queue& q) { return q.empty(); });
}

bool ApState::admit(const traffic::Packet& p) {
  counters.generated += p.payload;
  Queue& q = queues_.at(p.sta_id);
  if (q.size() >= config_.buffer_packets) {
    counters.dropped_overflow += p.payload;
    return false;
  }
  q.push_back({p, 0});
  counters.enqueued += p.payload;
  return true;
}

std::vector<Link> links_for(const channel::ChannelProfile& profile, std::size_t num_sta) {
  return std::vector<Link>(num_sta, Link{channel::phy_rate(profile), channel::ber(profile)});
}

std::uint64_t TxopReport::bytes_delivered() const noexcept {
  return std::accumulate(per_stream.begin(), per_stream.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const StreamReport& s) { return acc + s.bytes_delivered; });
}

std::uint64_t TxopReport::bytes_attempted() const noexcept {
  return std::accumulate(per_stream.begin(), per_stream.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const StreamReport& s) { return acc + s.bytes_attempted; });
}

std::size_t enqueue_arrivals(ApState& ap, std::span<traffic::Generator> generators, double until) {
  if (until < ap.clock()) throw InvalidParameter("enqueue horizon precedes the AP clock");
  std::size_t admitted = 0;
  for (traffic::Generator& gen : generators) {
    while (gen.peek_arrival() <= until)
      if (ap.admit(gen.next_packet())) ++admitted;
  }
  return admitted;
}

std::vector<QueuedPacket> fifo_aggregate(Queue& queue, std::size_t max_mpdus) {
  const std::size_t n = std::min(max_mpdus, queue.size());
  std::vector<QueuedPacket> out(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(n));
  queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

std::vector<double> stream_budgets(double frm_bytes, std::span<const double> rates_mbps) {
  const double total = std::accumulate(rates_mbps.begin(), rates_mbps.end(), 0.0);
  std::vector<double> budgets(rates_mbps.size(), 0.0);
  if (total <= 0.0) return budgets;
  for (std::size_t i = 0; i < rates_mbps.size(); ++i) budgets[i] = frm_bytes * rates_mbps[i] / total;
  return budgets;
}

std::vector<std::vector<QueuedPacket>> airtime_equalizing_aggregate(std::span<Queue> queues, double frm_bytes,
                                                                    std::span<const double> rates_mbps,
                                                                    std::size_t header_bytes) {
  if (queues.size() != rates_mbps.size()) throw InvalidParameter("one rate per queue required");
  const std::vector<double> budgets = stream_budgets(frm_bytes, rates_mbps);
  std::vector<std::vector<QueuedPacket>> out(queues.size());
  for (std::size_t i = 0; i < queues.size(); ++i) {
    Queue& q = queues[i];
    double used = 0.0;
    std::size_t n = 0;
    for (const QueuedPacket& qp : q) {
      const double len = static_cast<double>(qp.packet.payload + header_bytes);
      if (used + len > budgets[i]) break;
      used += len;
      ++n;
    }
    out[i].assign(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(n));
    q.erase(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

TxopReport run_txop(ApState& ap, const AggregationPolicy& policy, double frm_bytes, std::span<const Link> links,
                    Rng& rng) {
  const MacConfig& cfg = ap.config();
  if (links.size() != cfg.num_sta) throw InvalidParameter("one link per station required");
  TxopReport report;
  if (ap.all_empty()) {
    report.idle = true;
    report.txop_duration_s = cfg.idle_slot_s;
    ap.advance(cfg.idle_slot_s);
    return report;
  }

  std::vector<std::vector<QueuedPacket>> batches;
  if (policy.kind == PolicyKind::FifoBaseline) {
    if (policy.fifo_max_mpdus == 0) throw InvalidParameter("fifo_max_mpdus must be >= 1");
    batches.reserve(cfg.num_sta);
    for (Queue& q : ap.queues()) batches.push_back(fifo_aggregate(q, policy.fifo_max_mpdus));
  } else {
    if (!(frm_bytes > 0.0)) throw InvalidParameter("frame size must be > 0 bytes");
    std::vector<double> rates(links.size());
    std::ranges::transform(links, rates.begin(), [](const Link& l) { return l.rate_mbps; });
    batches = airtime_equalizing_aggregate(ap.queues(), frm_bytes, rates, cfg.mpdu_header_bytes);
  }

  report.per_stream.resize(cfg.num_sta);
  double max_airtime = 0.0;
  for (std::size_t i = 0; i < cfg.num_sta; ++i) {
    StreamReport& s = report.per_stream[i];
    s.sta_id = i;
    ErrorTable error_prob(links[i].ber, cfg.mpdu_header_bytes);
    std::uint64_t on_air = 0;
    std::vector<QueuedPacket> failed;
    for (QueuedPacket& qp : batches[i]) {
      const std::uint32_t payload = qp.packet.payload;
      ++s.mpdus;
      s.bytes_attempted += payload;
      on_air += payload + cfg.mpdu_header_bytes;
      if (rng.bernoulli(error_prob(payload))) {
        ++s.mpdu_errors;
        if (++qp.retries > cfg.retry_limit) {
          ap.counters.dropped_retry += payload;
        } else {
          failed.push_back(qp);
        }
      } else {
        s.bytes_delivered += payload;
      }
    }
    Queue& q = ap.queues()[i];
    q.insert(q.begin(), failed.begin(), failed.end());
    s.airtime_s = static_cast<double>(on_air) * 8.0 / (links[i].rate_mbps * 1e6);
    max_airtime = std::max(max_airtime, s.airtime_s);
    ap.counters.delivered += s.bytes_delivered;
  }
  for (const StreamReport& s : report.per_stream) report.wasted_airtime_s += max_airtime - s.airtime_s;
  report.txop_duration_s = max_airtime + cfg.overheads.total_s();
  ap.advance(report.txop_duration_s);
  return report;
}

TxopReport run_txop(ApState& ap, const AggregationPolicy& policy, double frm_bytes,
                    const channel::ChannelProfile& profile, Rng& rng) {
  const std::vector<Link> links = links_for(profile, ap.config().num_sta);
  return run_txop(ap, policy, frm_bytes, links, rng);
}

SimSeeds SimSeeds::from(std::uint64_t seed) noexcept {
  return {derive_seed(seed, 0x7aU), derive_seed(seed, 0xc4U)};
}

Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes,
                               const channel::ChannelProfile& profile, double duration_s, std::uint64_t seed,
                               const TxopObserver& observer) {
  return measure_throughput(mac, traffic, policy, frm_bytes, profile, duration_s, SimSeeds::from(seed), observer);
}

Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes, std::span<const Link> links,
                               double duration_s, std::uint64_t seed, const TxopObserver& observer) {
  return measure_throughput(mac, traffic, policy, frm_bytes, links, duration_s, SimSeeds::from(seed), observer);
}

Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes,
                               const channel::ChannelProfile& profile, double duration_s, SimSeeds seeds,
                               const TxopObserver& observer) {
  const std::vector<Link> links = links_for(profile, mac.num_sta);
  return measure_throughput(mac, traffic, policy, frm_bytes, links, duration_s, seeds, observer);
}

Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes, std::span<const Link> links,
                               double duration_s, SimSeeds seeds, const TxopObserver& observer) {
  if (!(duration_s > 0.0)) throw InvalidParameter("duration must be > 0");
  ApState ap(mac);
  std::vector<traffic::Generator> gens = make_generators(traffic, mac.num_sta, seeds.traffic);
  Rng error_rng(seeds.channel);

  Measurement m;
  m.duration_s = duration_s;
  double delivered = 0.0;
  while (ap.clock() < duration_s) {
    enqueue_arrivals(ap, gens, ap.clock());
    const double start = ap.clock();
    const TxopReport report = run_txop(ap, policy, frm_bytes, links, error_rng);
    // A TXOP straddling the end of the window is credited by the fraction of
    // its duration inside the window, so long TXOPs are not penalized.
    const double inside = ap.clock() <= duration_s ? 1.0 : (duration_s - start) / report.txop_duration_s;
    delivered += inside * static_cast<double>(report.bytes_delivered());
    m.wasted_airtime_s += inside * report.wasted_airtime_s;
    if (observer) observer(m.txops, report);
    ++m.txops;
  }
  std::uint64_t generated_in_window = ap.counters.generated;
  for (traffic::Generator& gen : gens)
    while (gen.peek_arrival() < duration_s) generated_in_window += gen.next_packet().payload;
  m.counters = ap.counters;
  m.delivered_bytes = delivered;
  m.throughput_mbps = delivered * 8.0 / duration_s / 1e6;
  m.offered_mbps = static_cast<double>(generated_in_window) * 8.0 / duration_s / 1e6;
  return m;
}

}  // namespace airtune::mac
