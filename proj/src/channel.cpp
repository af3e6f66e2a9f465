#include "airtune/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "airtune/error.hpp"

namespace airtune::channel {

std::vector<RateRung> ChannelProfile::default_rate_table() {
  return {{0.0, 65.0}, {5.0, 130.0}, {10.0, 195.0}, {15.0, 260.0}, {20.0, 390.0}};
}

std::vector<BerPoint> ChannelProfile::default_ber_table() {
  return {{3.0, 2e-5}, {10.0, 1e-6}, {20.0, 1e-8}};
}

ChannelProfile::ChannelProfile(double snr_db)
    : ChannelProfile(snr_db, default_rate_table(), default_ber_table()) {}

ChannelProfile::ChannelProfile(double snr_db, std::vector<RateRung> rate_table,
                               std::vector<BerPoint> ber_table)
    : snr_db_(snr_db),
      rate_table_(std::move(rate_table)),
      ber_model_(BerModel::Table),
      ber_table_(std::move(ber_table)) {
  validate();
}

ChannelProfile::ChannelProfile(double snr_db, std::vector<RateRung> rate_table, double c1, double c2)
    : snr_db_(snr_db), rate_table_(std::move(rate_table)), ber_model_(BerModel::ExpApprox), c1_(c1), c2_(c2) {
  validate();
}

ChannelProfile ChannelProfile::with_snr(double snr_db) const {
  ChannelProfile copy = *this;
  copy.snr_db_ = snr_db;
  copy.validate();
  return copy;
}

void ChannelProfile::validate() const {
  if (!std::isfinite(snr_db_)) throw InvalidParameter("snr_db must be finite");
  if (rate_table_.empty()) throw InvalidParameter("rate table is empty");
  for (std::size_t i = 0; i < rate_table_.size(); ++i) {
    if (!(rate_table_[i].phy_rate_mbps > 0.0)) throw InvalidParameter("phy rates must be positive");
    if (i > 0 && !(rate_table_[i].min_snr_db > rate_table_[i - 1].min_snr_db &&
                   rate_table_[i].phy_rate_mbps > rate_table_[i - 1].phy_rate_mbps))
      throw InvalidParameter("rate table rungs must be strictly increasing in snr and rate");
  }
  if (ber_model_ == BerModel::Table) {
    if (ber_table_.empty()) throw InvalidParameter("ber table is empty");
    for (std::size_t i = 0; i < ber_table_.size(); ++i) {
      const double b = ber_table_[i].ber;
      if (!(b > 0.0 && b <= 1.0)) throw InvalidParameter("ber table values must be in (0, 1]");
      if (i > 0 && !(ber_table_[i].snr_db > ber_table_[i - 1].snr_db))
        throw InvalidParameter("ber table snr points must be strictly increasing");
    }
  } else if (!(c1_ >= 0.0 && c1_ <= 1.0 && c2_ >= 0.0)) {
    throw InvalidParameter("ber_exp needs c1 in [0, 1] and c2 >= 0");
  }
}

double phy_rate(const ChannelProfile& profile) {
  const auto& table = profile.rate_table();
  double rate = table.front().phy_rate_mbps;
  for (const RateRung& rung : table)
    if (rung.min_snr_db <= profile.snr_db()) rate = rung.phy_rate_mbps;
  return rate;
}

double ber(const ChannelProfile& profile) {
  const double snr = profile.snr_db();
  if (profile.ber_model() == BerModel::ExpApprox) {
    if (std::isinf(snr) && snr > 0) return 0.0;
    const double b = profile.exp_c1() * std::exp(-profile.exp_c2() * std::pow(10.0, snr / 10.0));
    return std::clamp(b, 0.0, 0.5);
  }
  const auto& t = profile.ber_table();
  if (snr <= t.front().snr_db) return t.front().ber;
  if (snr >= t.back().snr_db) return t.back().ber;
  const auto hi = std::ranges::find_if(t, [snr](const BerPoint& p) { return p.snr_db > snr; });
  const auto lo = hi - 1;
  const double f = (snr - lo->snr_db) / (hi->snr_db - lo->snr_db);
  return std::exp(std::log(lo->ber) + f * (std::log(hi->ber) - std::log(lo->ber)));
}

double mpdu_error_prob(double len_bytes, double ber) {
  if (ber <= 0.0 || len_bytes <= 0.0) return 0.0;
  if (ber >= 1.0) return 1.0;
  return -std::expm1(8.0 * len_bytes * std::log1p(-ber));
}

}  // namespace airtune::channel
