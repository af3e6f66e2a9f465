#pragma once

// Per-station downlink arrival processes (Pareto, Weibull, fractional Gaussian
// noise) with a 50/50 VoIP/video payload mix and a calibrated offered load.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "airtune/rng.hpp"

namespace airtune::traffic {

enum class TrafficKind { Pareto, Weibull, Fbm };

enum class PacketClass : std::uint8_t { Voip, Video };

inline constexpr std::uint32_t kVoipPayloadBytes = 100;
inline constexpr std::uint32_t kVideoPayloadBytes = 1000;
inline constexpr double kMeanPayloadBytes = 0.5 * (kVoipPayloadBytes + kVideoPayloadBytes);

[[nodiscard]] constexpr std::uint32_t payload_bytes(PacketClass cls) noexcept {
  return cls == PacketClass::Voip ? kVoipPayloadBytes : kVideoPayloadBytes;
}

[[nodiscard]] std::string_view to_string(TrafficKind kind);
/// Accepts "pareto", "weibull", "fbm" (case-insensitive).
[[nodiscard]] TrafficKind parse_traffic_kind(std::string_view name);

struct TrafficModel {
  TrafficKind kind = TrafficKind::Weibull;
  double pareto_alpha = 1.5;
  double weibull_k = 0.8;
  double hurst = 0.8;
  /// Standard deviation of the fGn rate process relative to its mean.
  double fbm_cv = 0.5;
  /// Length of one fGn rate slot.
  double fbm_slot_s = 1e-3;
  /// Offered load per station.
  double target_load_mbps = 100.0;

  /// Throws InvalidParameter when a shape or load invariant is violated.
  void validate() const;
};

struct Packet {
  double arrival = 0.0;  // seconds
  std::uint32_t payload = 0;  // bytes
  std::uint16_t sta_id = 0;
  PacketClass cls = PacketClass::Voip;

  friend bool operator==(const Packet&, const Packet&) = default;
};

/// Deterministic packet stream for one station. Copyable; a copy continues
/// the same sequence independently.
class Generator {
 public:
  Generator(const TrafficModel& model, std::size_t sta_id, std::uint64_t seed);

  Packet next_packet();

  /// Arrival time of the packet next_packet() would return.
  [[nodiscard]] double peek_arrival();

  [[nodiscard]] const TrafficModel& model() const noexcept { return model_; }
  [[nodiscard]] std::size_t sta_id() const noexcept { return sta_id_; }

  /// Mean inter-arrival time implied by the target load and the payload mix.
  [[nodiscard]] double mean_interarrival_s() const noexcept { return mean_gap_s_; }
  /// Pareto x_m or Weibull lambda; zero for fBM.
  [[nodiscard]] double scale_s() const noexcept { return scale_s_; }

 private:
  double draw_gap();
  double next_fbm_arrival();
  void refill_fbm_block();

  TrafficModel model_;
  std::size_t sta_id_;
  Rng rng_;
  double mean_gap_s_ = 0.0;
  double scale_s_ = 0.0;
  double clock_ = 0.0;
  bool has_lookahead_ = false;
  Packet lookahead_{};

  // fBM slot state
  std::vector<double> slot_packets_;  // expected packets per slot, current block
  std::size_t slot_index_ = 0;
  std::uint64_t slots_consumed_ = 0;
  double slot_start_ = 0.0;
  double credit_ = 0.0;
  std::size_t slot_count_ = 0;
  std::size_t slot_emitted_ = 0;
};

/// Bits arriving in [start, start + window) divided by window, in Mbps.
[[nodiscard]] double offered_load(std::span<const Packet> packets, double start, double window_s);

/// Offered load over [0, window) of the stream `gen` would produce from its
/// current position; the generator is taken by value and left untouched.
[[nodiscard]] double offered_load(Generator gen, double window_s);

/// Coefficient of variation of packet counts in fixed-width bins over
/// [0, horizon). Used as the burstiness metric.
[[nodiscard]] double count_cv(Generator gen, double bin_s, double horizon_s);

/// Fractional Gaussian noise with unit variance by circulant embedding.
/// Returns `n` samples (n must be a power of two).
[[nodiscard]] std::vector<double> fgn_block(std::size_t n, double hurst, Rng& rng);

/// Autocovariance of unit-variance fGn at integer lag k.
[[nodiscard]] double fgn_autocovariance(double hurst, std::size_t k);

}  // namespace airtune::traffic
