#pragma once

// Experiment description and its INI-style config file.
//
// Sections: [traffic] [channel] [mac] [controller] [sweep] [seeds], plus
// [compare] for the comparison matrix and [output] for the report directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "airtune/channel.hpp"
#include "airtune/controller.hpp"
#include "airtune/mac.hpp"
#include "airtune/traffic.hpp"

namespace airtune::scenario {

struct Seeds {
  std::uint64_t traffic = 1;
  std::uint64_t channel = 2;
  std::uint64_t init = 3;
  std::uint64_t shuffle = 4;
};

struct CompareSpec {
  std::vector<traffic::TrafficKind> models{traffic::TrafficKind::Pareto, traffic::TrafficKind::Weibull,
                                           traffic::TrafficKind::Fbm};
  std::vector<double> snr_db{3.0, 10.0, 20.0};
  std::vector<std::size_t> num_sta{4};
  std::size_t runs = 5;
};

struct ScenarioConfig {
  traffic::TrafficModel traffic;
  /// Per-station offered load. Unset: load_factor * per-stream PHY rate.
  std::optional<double> load_mbps;
  double load_factor = 0.85;

  channel::ChannelProfile channel{10.0};
  mac::MacConfig mac;
  /// Measurement window for FIFO, sweep points and the final ML evaluation.
  double duration_s = 60.0;

  controller::ControllerParams controller;
  /// MAC time simulated per controller probe.
  double sample_window_s = 1.0;

  std::vector<double> sweep_grid;
  Seeds seeds;

  // `simulate` subcommand.
  mac::PolicyKind policy = mac::PolicyKind::AirtimeEqualizing;
  double frm_bytes = 262144.0;
  bool trace = false;

  CompareSpec compare;
  std::filesystem::path output_dir = "out";

  /// Per-station load in Mbps after resolving load_factor.
  [[nodiscard]] double station_load_mbps() const;
  /// Traffic model with the resolved load.
  [[nodiscard]] traffic::TrafficModel resolved_traffic() const;
  /// Normalizer ceiling: sum of per-stream PHY rates.
  [[nodiscard]] double thr_max_mbps() const;
  [[nodiscard]] mac::AggregationPolicy aggregation_policy() const;
  /// "<model>_snr<snr>_sta<n>", used in report file names.
  [[nodiscard]] std::string tag() const;

  /// Copy retargeted at one comparison cell.
  [[nodiscard]] ScenarioConfig with_cell(traffic::TrafficKind model, double snr_db, std::size_t num_sta) const;

  /// Throws InvalidParameter naming the offending setting.
  void validate() const;
};

/// n log-spaced points from lo to hi inclusive, rounded to whole bytes.
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Defaults plus the default sweep grid.
[[nodiscard]] ScenarioConfig default_config();

/// Parses and validates. Unknown sections or keys are rejected so typos
/// surface instead of silently falling back to defaults.
[[nodiscard]] ScenarioConfig parse_config(std::istream& in);
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path);

[[nodiscard]] std::string format_number(double x);

}  // namespace airtune::scenario
