#include "airtune/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "airtune/error.hpp"

namespace airtune::scenario {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() == 1 && parts.front().empty()) parts.clear();
  return parts;
}

// Reads one section, remembering which keys were used so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  [[nodiscard]] std::optional<std::string> raw(const std::string& key) {
    known_.insert(key);
    if (tree_ == nullptr) return std::nullopt;
    const auto child = tree_->get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return trim(child->data());
  }

  [[nodiscard]] std::optional<double> real(const std::string& key) {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    return to_real(key, *text);
  }

  [[nodiscard]] std::optional<std::uint64_t> uint(const std::string& key) {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    std::uint64_t value = 0;
    const auto* end = text->data() + text->size();
    const auto [ptr, ec] = std::from_chars(text->data(), end, value);
    if (ec != std::errc() || ptr != end || text->empty()) fail(key, "expected a non-negative integer, got '" + *text + "'");
    return value;
  }

  [[nodiscard]] std::optional<bool> flag(const std::string& key) {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    std::string lower = *text;
    std::ranges::transform(lower, lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "true" || lower == "yes" || lower == "on" || lower == "1") return true;
    if (lower == "false" || lower == "no" || lower == "off" || lower == "0") return false;
    fail(key, "expected true or false, got '" + *text + "'");
  }

  [[nodiscard]] std::optional<std::vector<double>> reals(const std::string& key) {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    std::vector<double> out;
    for (const std::string& part : split(*text, ',')) out.push_back(to_real(key, part));
    return out;
  }

  // "x:y, x:y" pairs.
  [[nodiscard]] std::optional<std::vector<std::pair<double, double>>> pairs(const std::string& key) {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    std::vector<std::pair<double, double>> out;
    for (const std::string& part : split(*text, ',')) {
      const std::vector<std::string> xy = split(part, ':');
      if (xy.size() != 2) fail(key, "expected snr:value pairs, got '" + part + "'");
      out.emplace_back(to_real(key, xy[0]), to_real(key, xy[1]));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw InvalidParameter("[" + name_ + "] " + key + ": " + why);
  }

  void reject_unknown() const {
    if (tree_ == nullptr) return;
    for (const auto& [key, value] : *tree_)
      if (!known_.contains(key)) throw InvalidParameter("[" + name_ + "] unknown key '" + key + "'");
  }

 private:
  double to_real(const std::string& key, const std::string& text) const {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(value))
      fail(key, "expected a number, got '" + text + "'");
    return value;
  }

  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> known_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidParameter(message);
}

}  // namespace

std::string format_number(double x) {
  if (x == std::floor(x) && std::abs(x) < 1e15) return std::to_string(static_cast<long long>(x));
  std::ostringstream os;
  os << x;
  return os.str();
}

double ScenarioConfig::station_load_mbps() const {
  return load_mbps ? *load_mbps : load_factor * channel::phy_rate(channel);
}

traffic::TrafficModel ScenarioConfig::resolved_traffic() const {
  traffic::TrafficModel t = traffic;
  t.target_load_mbps = station_load_mbps();
  return t;
}

double ScenarioConfig::thr_max_mbps() const {
  return channel::phy_rate(channel) * static_cast<double>(mac.num_sta);
}

mac::AggregationPolicy ScenarioConfig::aggregation_policy() const {
  return policy == mac::PolicyKind::FifoBaseline ? mac::AggregationPolicy::fifo(mac.fifo_max_mpdus)
                                                 : mac::AggregationPolicy::airtime_equalizing();
}

std::string ScenarioConfig::tag() const {
  return std::string(traffic::to_string(traffic.kind)) + "_snr" + format_number(channel.snr_db()) + "_sta" +
         std::to_string(mac.num_sta);
}

ScenarioConfig ScenarioConfig::with_cell(traffic::TrafficKind model, double snr_db, std::size_t num_sta) const {
  ScenarioConfig cell = *this;
  cell.traffic.kind = model;
  cell.channel = channel.with_snr(snr_db);
  cell.mac.num_sta = num_sta;
  return cell;
}

void ScenarioConfig::validate() const {
  require(load_factor > 0.0, "[traffic] load_factor must be > 0");
  require(!load_mbps || *load_mbps > 0.0, "[traffic] load_mbps must be > 0");
  resolved_traffic().validate();
  mac.validate();
  require(mac.num_sta >= 2, "[mac] num_sta must be >= 2 for a multi-user transmission");
  require(duration_s > 0.0, "[mac] duration_s must be > 0");
  require(sample_window_s > 0.0, "[controller] sample_window_s must be > 0");

  const controller::ControllerParams& c = controller;
  require(c.frm_min > 0.0 && c.frm_min < c.frm_max, "[controller] need 0 < frm_min < frm_max");
  require(c.frm_start >= c.frm_min && c.frm_start <= c.frm_max, "[controller] frm_start outside [frm_min, frm_max]");
  require(c.rounds >= 1, "[controller] rounds must be >= 1");
  require(c.samples_per_round >= 2, "[controller] samples_per_round must be >= 2");
  require(c.probe_spread > 0.0 && c.probe_spread <= 1.0, "[controller] probe_spread must be in (0, 1]");
  require(c.margin >= 0.0 && c.margin < 0.5, "[controller] margin must be in [0, 0.5)");
  require(!c.mu || std::isfinite(*c.mu), "[controller] mu must be finite");
  require(c.mu_norm >= 0.0, "[controller] mu_norm must be >= 0");
  require(c.settle_tolerance >= 0.0, "[controller] settle_tolerance must be >= 0");
  require(c.train.max_epochs >= 1, "[controller] max_epochs must be >= 1");
  require(c.train.mse_threshold >= 0.0, "[controller] mse_threshold must be >= 0");
  require(c.train.adam_rate > 0.0, "[controller] adam_rate must be > 0");

  require(!sweep_grid.empty(), "[sweep] grid is empty");
  for (std::size_t i = 0; i < sweep_grid.size(); ++i) {
    require(sweep_grid[i] >= c.frm_min && sweep_grid[i] <= c.frm_max, "[sweep] grid point " +
                                                                           format_number(sweep_grid[i]) +
                                                                           " outside [frm_min, frm_max]");
    require(i == 0 || sweep_grid[i] > sweep_grid[i - 1], "[sweep] grid must be strictly increasing");
  }

  require(frm_bytes > 0.0, "[mac] frm_bytes must be > 0");
  require(compare.runs >= 1, "[compare] runs must be >= 1");
  require(!compare.models.empty() && !compare.snr_db.empty() && !compare.num_sta.empty(),
          "[compare] models, snr_db and num_sta must be non-empty");
  for (std::size_t n : compare.num_sta)
    require(n >= 2 && n <= mac.n_antennas, "[compare] num_sta values must be in [2, n_antennas]");
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> grid(n);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < n; ++i)
    grid[i] = std::round(lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1)));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

ScenarioConfig default_config() {
  ScenarioConfig cfg;
  cfg.sweep_grid = log_grid(cfg.controller.frm_min, cfg.controller.frm_max, 32);
  return cfg;
}

ScenarioConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidParameter("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::set<std::string> sections{"traffic", "channel",  "mac",     "controller",
                                               "sweep",   "seeds",    "compare", "output"};
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty())
      throw InvalidParameter("config key '" + name + "' must live inside a section");
    if (!sections.contains(name)) throw InvalidParameter("unknown config section [" + name + "]");
  }
  auto section = [&tree](const char* name) {
    const auto child = tree.get_child_optional(name);
    return Section(name, child ? &*child : nullptr);
  };

  ScenarioConfig cfg = default_config();

  Section seeds = section("seeds");
  if (auto v = seeds.uint("traffic")) cfg.seeds.traffic = *v;
  if (auto v = seeds.uint("channel")) cfg.seeds.channel = *v;
  if (auto v = seeds.uint("init")) cfg.seeds.init = *v;
  if (auto v = seeds.uint("shuffle")) cfg.seeds.shuffle = *v;
  seeds.reject_unknown();

  Section tr = section("traffic");
  if (auto v = tr.raw("model")) cfg.traffic.kind = traffic::parse_traffic_kind(*v);
  if (auto v = tr.real("alpha")) cfg.traffic.pareto_alpha = *v;
  if (auto v = tr.real("k")) cfg.traffic.weibull_k = *v;
  if (auto v = tr.real("hurst")) cfg.traffic.hurst = *v;
  if (auto v = tr.real("fbm_cv")) cfg.traffic.fbm_cv = *v;
  if (auto v = tr.real("fbm_slot_s")) cfg.traffic.fbm_slot_s = *v;
  if (auto v = tr.real("load_mbps")) cfg.load_mbps = *v;
  if (auto v = tr.real("load_factor")) cfg.load_factor = *v;
  if (auto v = tr.uint("seed")) cfg.seeds.traffic = *v;
  tr.reject_unknown();

  Section ch = section("channel");
  const double snr = ch.real("snr_db").value_or(10.0);
  std::vector<channel::RateRung> rates = channel::ChannelProfile::default_rate_table();
  if (auto v = ch.pairs("rate_table")) {
    rates.clear();
    for (auto [s, r] : *v) rates.push_back({s, r});
  }
  const auto ber_table = ch.pairs("ber_table");
  const auto ber_exp = ch.reals("ber_exp");
  if (auto v = ch.uint("seed")) cfg.seeds.channel = *v;
  ch.reject_unknown();
  if (ber_table && ber_exp) throw InvalidParameter("[channel] give ber_table or ber_exp, not both");
  if (ber_exp) {
    if (ber_exp->size() != 2) throw InvalidParameter("[channel] ber_exp needs two values: c1, c2");
    cfg.channel = channel::ChannelProfile(snr, rates, (*ber_exp)[0], (*ber_exp)[1]);
  } else {
    std::vector<channel::BerPoint> points = channel::ChannelProfile::default_ber_table();
    if (ber_table) {
      points.clear();
      for (auto [s, b] : *ber_table) points.push_back({s, b});
    }
    cfg.channel = channel::ChannelProfile(snr, rates, points);
  }

  Section mc = section("mac");
  if (auto v = mc.uint("num_sta")) cfg.mac.num_sta = *v;
  if (auto v = mc.uint("n_antennas")) cfg.mac.n_antennas = *v;
  if (auto v = mc.uint("retry_limit")) cfg.mac.retry_limit = *v;
  if (auto v = mc.uint("fifo_max_mpdus")) cfg.mac.fifo_max_mpdus = *v;
  if (auto v = mc.uint("mpdu_header_bytes")) cfg.mac.mpdu_header_bytes = *v;
  if (auto v = mc.uint("buffer_packets")) cfg.mac.buffer_packets = *v;
  if (auto v = mc.real("idle_slot_us")) cfg.mac.idle_slot_s = *v * 1e-6;
  if (auto v = mc.reals("overheads")) {
    if (v->size() != 3) mc.fail("overheads", "expected preamble_us, sifs_us, block_ack_us");
    cfg.mac.overheads = {(*v)[0], (*v)[1], (*v)[2]};
  }
  if (auto v = mc.real("duration_s")) cfg.duration_s = *v;
  if (auto v = mc.uint("seed")) {
    const mac::SimSeeds s = mac::SimSeeds::from(*v);
    cfg.seeds.traffic = s.traffic;
    cfg.seeds.channel = s.channel;
  }
  if (auto v = mc.raw("policy")) {
    if (*v == "fifo") {
      cfg.policy = mac::PolicyKind::FifoBaseline;
    } else if (*v == "airtime") {
      cfg.policy = mac::PolicyKind::AirtimeEqualizing;
    } else {
      mc.fail("policy", "expected fifo or airtime, got '" + *v + "'");
    }
  }
  if (auto v = mc.real("frm_bytes")) cfg.frm_bytes = *v;
  if (auto v = mc.flag("trace")) cfg.trace = *v;
  mc.reject_unknown();

  Section co = section("controller");
  controller::ControllerParams& c = cfg.controller;
  if (auto v = co.uint("rounds")) c.rounds = *v;
  if (auto v = co.real("mu")) c.mu = *v;
  if (auto v = co.real("mu_norm")) c.mu_norm = *v;
  if (auto v = co.real("frm_min")) c.frm_min = *v;
  if (auto v = co.real("frm_max")) c.frm_max = *v;
  if (auto v = co.real("frm_start")) c.frm_start = *v;
  if (auto v = co.real("probe_spread")) c.probe_spread = *v;
  if (auto v = co.uint("samples_per_round")) c.samples_per_round = *v;
  if (auto v = co.real("sample_window_s")) cfg.sample_window_s = *v;
  if (auto v = co.real("margin")) c.margin = *v;
  if (auto v = co.real("settle_tolerance")) c.settle_tolerance = *v;
  if (auto v = co.uint("settle_rounds")) c.settle_rounds = *v;
  if (auto v = co.real("mse_threshold")) c.train.mse_threshold = *v;
  if (auto v = co.uint("max_epochs")) c.train.max_epochs = *v;
  if (auto v = co.raw("learning_rule")) {
    if (*v == "adam") {
      c.train.rule = neural::LearningRule::Adam;
    } else if (*v == "bold_driver") {
      c.train.rule = neural::LearningRule::BoldDriver;
    } else {
      co.fail("learning_rule", "expected adam or bold_driver, got '" + *v + "'");
    }
  }
  if (auto v = co.real("adam_rate")) c.train.adam_rate = *v;
  co.reject_unknown();

  Section sw = section("sweep");
  const auto grid = sw.reals("grid");
  const auto points = sw.uint("points");
  sw.reject_unknown();
  if (grid && points) throw InvalidParameter("[sweep] give grid or points, not both");
  if (grid) {
    cfg.sweep_grid = *grid;
  } else {
    cfg.sweep_grid = log_grid(c.frm_min, c.frm_max, points.value_or(32));
  }

  Section cm = section("compare");
  if (auto v = cm.raw("models")) {
    cfg.compare.models.clear();
    for (const std::string& m : split(*v, ',')) cfg.compare.models.push_back(traffic::parse_traffic_kind(m));
  }
  if (auto v = cm.reals("snr_db")) cfg.compare.snr_db = *v;
  if (auto v = cm.reals("num_sta")) {
    cfg.compare.num_sta.clear();
    for (double n : *v) {
      if (n < 0.0 || n != std::floor(n)) cm.fail("num_sta", "expected whole station counts");
      cfg.compare.num_sta.push_back(static_cast<std::size_t>(n));
    }
  }
  if (auto v = cm.uint("runs")) cfg.compare.runs = *v;
  cm.reject_unknown();

  Section out = section("output");
  if (auto v = out.raw("dir")) cfg.output_dir = *v;
  out.reject_unknown();

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

}  // namespace airtune::scenario
