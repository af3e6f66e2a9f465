#pragma once

// Downlink MU-MIMO transmission engine: one FIFO queue per station at the AP,
// one spatial stream per station, per-TXOP aggregation under a policy, and
// per-MPDU error/retry accounting.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "airtune/channel.hpp"
#include "airtune/rng.hpp"
#include "airtune/traffic.hpp"

namespace airtune::mac {

struct Overheads {
  double preamble_us = 40.0;
  double sifs_us = 16.0;
  double block_ack_us = 32.0;

  [[nodiscard]] double total_s() const noexcept { return (preamble_us + sifs_us + block_ack_us) * 1e-6; }
};

struct MacConfig {
  std::size_t num_sta = 4;
  std::size_t n_antennas = 4;
  std::size_t retry_limit = 4;
  std::size_t fifo_max_mpdus = 64;
  /// Delimiter + MAC header added to every MPDU payload on air.
  std::size_t mpdu_header_bytes = 40;
  /// Per-station queue capacity in packets; arrivals to a full queue are dropped.
  std::size_t buffer_packets = 256;
  double idle_slot_s = 100e-6;
  Overheads overheads;

  void validate() const;
};

struct QueuedPacket {
  traffic::Packet packet;
  std::uint32_t retries = 0;
};

using Queue = std::deque<QueuedPacket>;

/// Byte counters, all payload bytes.
struct Counters {
  std::uint64_t generated = 0;
  std::uint64_t enqueued = 0;
  std::uint64_t dropped_overflow = 0;
  std::uint64_t dropped_retry = 0;
  std::uint64_t delivered = 0;
};

class ApState {
 public:
  explicit ApState(const MacConfig& config);

  [[nodiscard]] const MacConfig& config() const noexcept { return config_; }
  [[nodiscard]] double clock() const noexcept { return clock_; }
  void advance(double dt);

  [[nodiscard]] std::span<Queue> queues() noexcept { return queues_; }
  [[nodiscard]] std::span<const Queue> queues() const noexcept { return queues_; }
  [[nodiscard]] bool all_empty() const noexcept;

  /// Tail-drops when the station's queue is at capacity. Returns true if admitted.
  bool admit(const traffic::Packet& p);

  Counters counters;

 private:
  MacConfig config_;
  std::vector<Queue> queues_;
  double clock_ = 0.0;
};

enum class PolicyKind { FifoBaseline, AirtimeEqualizing };

struct AggregationPolicy {
  PolicyKind kind = PolicyKind::AirtimeEqualizing;
  std::size_t fifo_max_mpdus = 64;

  static AggregationPolicy fifo(std::size_t max_mpdus = 64) { return {PolicyKind::FifoBaseline, max_mpdus}; }
  static AggregationPolicy airtime_equalizing() { return {PolicyKind::AirtimeEqualizing, 64}; }
};

/// Per-station link: PHY rate of its spatial stream and its bit error rate.
struct Link {
  double rate_mbps;
  double ber;
};

[[nodiscard]] std::vector<Link> links_for(const channel::ChannelProfile& profile, std::size_t num_sta);

struct StreamReport {
  std::size_t sta_id = 0;
  std::uint64_t mpdus = 0;
  std::uint64_t bytes_attempted = 0;  // payload
  std::uint64_t bytes_delivered = 0;  // payload
  double airtime_s = 0.0;
  std::uint64_t mpdu_errors = 0;
};

struct TxopReport {
  std::vector<StreamReport> per_stream;
  double txop_duration_s = 0.0;
  double wasted_airtime_s = 0.0;
  bool idle = false;

  [[nodiscard]] std::uint64_t bytes_delivered() const noexcept;
  [[nodiscard]] std::uint64_t bytes_attempted() const noexcept;
};

/// Moves every pending arrival with arrival <= until into its station queue.
/// `generators[i]` feeds station i. Returns the number of packets admitted.
std::size_t enqueue_arrivals(ApState& ap, std::span<traffic::Generator> generators, double until);

/// Up to max_mpdus head-of-line packets, regardless of rate or other streams.
std::vector<QueuedPacket> fifo_aggregate(Queue& queue, std::size_t max_mpdus);

/// Byte budget per stream, proportional to its rate; the budgets sum to frm.
[[nodiscard]] std::vector<double> stream_budgets(double frm_bytes, std::span<const double> rates_mbps);

/// Per stream, dequeues whole MPDUs (payload + header_bytes on air) while
/// they fit in the stream's budget.
std::vector<std::vector<QueuedPacket>> airtime_equalizing_aggregate(std::span<Queue> queues, double frm_bytes,
                                                                    std::span<const double> rates_mbps,
                                                                    std::size_t header_bytes);

/// One downlink transmission opportunity. Errored MPDUs go back to the queue
/// head until they exceed retry_limit retransmissions, then are dropped. With
/// every queue empty the clock advances by one idle slot.
TxopReport run_txop(ApState& ap, const AggregationPolicy& policy, double frm_bytes, std::span<const Link> links,
                    Rng& rng);
TxopReport run_txop(ApState& ap, const AggregationPolicy& policy, double frm_bytes,
                    const channel::ChannelProfile& profile, Rng& rng);

struct Measurement {
  double throughput_mbps = 0.0;
  double offered_mbps = 0.0;
  double duration_s = 0.0;
  std::uint64_t txops = 0;
  /// Payload delivered inside the window; a TXOP cut by the window end
  /// contributes in proportion to its duration inside.
  double delivered_bytes = 0.0;
  double wasted_airtime_s = 0.0;
  Counters counters;
};

using TxopObserver = std::function<void(std::uint64_t txop_id, const TxopReport&)>;

/// Independent seeds for packet arrivals and MPDU errors.
struct SimSeeds {
  std::uint64_t traffic = 0;
  std::uint64_t channel = 0;

  /// Both streams derived from one seed.
  [[nodiscard]] static SimSeeds from(std::uint64_t seed) noexcept;
};

/// Runs arrivals and TXOPs over [0, duration). Deterministic in the seeds.
Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes, std::span<const Link> links,
                               double duration_s, SimSeeds seeds, const TxopObserver& observer = {});

Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes,
                               const channel::ChannelProfile& profile, double duration_s, SimSeeds seeds,
                               const TxopObserver& observer = {});

Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes,
                               const channel::ChannelProfile& profile, double duration_s, std::uint64_t seed,
                               const TxopObserver& observer = {});

Measurement measure_throughput(const MacConfig& mac, const traffic::TrafficModel& traffic,
                               const AggregationPolicy& policy, double frm_bytes, std::span<const Link> links,
                               double duration_s, std::uint64_t seed, const TxopObserver& observer = {});

}  // namespace airtune::mac
