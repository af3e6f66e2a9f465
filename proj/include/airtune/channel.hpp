#pragma once

#include <vector>

namespace airtune::channel {

struct RateRung {
  double min_snr_db;
  double phy_rate_mbps;
};

struct BerPoint {
  double snr_db;
  double ber;
};

enum class BerModel { Table, ExpApprox };

/// SNR to per-stream PHY rate and bit error rate. Immutable once built.
class ChannelProfile {
 public:
  /// Default rung table and default BER table at the given SNR.
  explicit ChannelProfile(double snr_db);
  ChannelProfile(double snr_db, std::vector<RateRung> rate_table, std::vector<BerPoint> ber_table);
  /// ExpApprox: ber = c1 * exp(-c2 * snr_linear), clamped to [0, 0.5].
  ChannelProfile(double snr_db, std::vector<RateRung> rate_table, double c1, double c2);

  [[nodiscard]] double snr_db() const noexcept { return snr_db_; }
  [[nodiscard]] BerModel ber_model() const noexcept { return ber_model_; }
  [[nodiscard]] const std::vector<RateRung>& rate_table() const noexcept { return rate_table_; }
  [[nodiscard]] const std::vector<BerPoint>& ber_table() const noexcept { return ber_table_; }
  [[nodiscard]] double exp_c1() const noexcept { return c1_; }
  [[nodiscard]] double exp_c2() const noexcept { return c2_; }

  /// Same tables, different operating SNR.
  [[nodiscard]] ChannelProfile with_snr(double snr_db) const;

  static std::vector<RateRung> default_rate_table();
  static std::vector<BerPoint> default_ber_table();

 private:
  void validate() const;

  double snr_db_;
  std::vector<RateRung> rate_table_;
  BerModel ber_model_ = BerModel::Table;
  std::vector<BerPoint> ber_table_;
  double c1_ = 0.5;
  double c2_ = 0.25;
};

/// Rate of the highest rung with min_snr_db <= snr; the lowest rung below the table.
[[nodiscard]] double phy_rate(const ChannelProfile& profile);

[[nodiscard]] double ber(const ChannelProfile& profile);

/// 1 - (1 - ber)^(8 * len_bytes): independent bit errors over the MPDU.
[[nodiscard]] double mpdu_error_prob(double len_bytes, double ber);

}  // namespace airtune::channel
