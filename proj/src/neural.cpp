#include "airtune/neural.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "airtune/error.hpp"
#include "airtune/rng.hpp"

namespace airtune::neural {

double sigmoid(double v) noexcept { return 1.0 / (1.0 + std::exp(-v)); }

double sigmoid_prime(double v) noexcept {
  const double s = sigmoid(v);
  return s * (1.0 - s);
}

FlatWeights flatten(const Weights& w) noexcept {
  FlatWeights flat{};
  for (std::size_t j = 0; j < kHidden; ++j) {
    flat[j] = w.input[j];
    flat[kHidden + j] = w.hidden_bias[j];
    flat[2 * kHidden + j] = w.output[j];
  }
  flat[3 * kHidden] = w.output_bias;
  return flat;
}

Weights unflatten(const FlatWeights& flat) noexcept {
  Weights w;
  for (std::size_t j = 0; j < kHidden; ++j) {
    w.input[j] = flat[j];
    w.hidden_bias[j] = flat[kHidden + j];
    w.output[j] = flat[2 * kHidden + j];
  }
  w.output_bias = flat[3 * kHidden];
  return w;
}

Mlp::Mlp(const Weights& w, double learning_rate) : w_(w), eta_(learning_rate) {}

Mlp Mlp::random(std::uint64_t seed, double learning_rate) {
  Rng rng(seed);
  auto draw = [&rng] { return rng.uniform() - 0.5; };
  Weights w;
  for (std::size_t j = 0; j < kHidden; ++j) {
    w.input[j] = draw();
    w.hidden_bias[j] = draw();
    w.output[j] = draw();
  }
  w.output_bias = draw();
  return Mlp(w, learning_rate);
}

void Mlp::set_weights(const Weights& w) noexcept {
  w_ = w;
  cache_fresh_ = false;
}

void Mlp::require_fresh() const {
  if (!cache_fresh_) throw StaleCache();
}

double Mlp::forward(double frm_norm) {
  cache_.input = frm_norm;
  double v2 = w_.output_bias;
  for (std::size_t j = 0; j < kHidden; ++j) {
    cache_.v1[j] = w_.input[j] * frm_norm + w_.hidden_bias[j];
    cache_.y1[j] = sigmoid(cache_.v1[j]);
    v2 += w_.output[j] * cache_.y1[j];
  }
  cache_.v2 = v2;
  cache_.y2 = sigmoid(v2);
  cache_fresh_ = true;
  return cache_.y2;
}

Weights Mlp::descent_direction(double target) const {
  require_fresh();
  const double delta2 = (target - cache_.y2) * cache_.y2 * (1.0 - cache_.y2);
  Weights d;
  for (std::size_t j = 0; j < kHidden; ++j) {
    const double y = cache_.y1[j];
    const double delta1 = delta2 * w_.output[j] * y * (1.0 - y);
    d.output[j] = delta2 * y;
    d.input[j] = delta1 * cache_.input;
    d.hidden_bias[j] = delta1;
  }
  d.output_bias = delta2;
  return d;
}

double Mlp::backward(double target) {
  const Weights d = descent_direction(target);
  const double e = target - cache_.y2;
  for (std::size_t j = 0; j < kHidden; ++j) {
    w_.output[j] += eta_ * d.output[j];
    w_.input[j] += eta_ * d.input[j];
    w_.hidden_bias[j] += eta_ * d.hidden_bias[j];
  }
  w_.output_bias += eta_ * d.output_bias;
  cache_fresh_ = false;
  return e * e;
}

double Mlp::output_local_gradient() const {
  require_fresh();
  return cache_.y2 * (1.0 - cache_.y2);
}

std::array<double, kHidden> Mlp::hidden_local_gradients() const {
  const double lambda2 = output_local_gradient();
  std::array<double, kHidden> lambda1{};
  for (std::size_t j = 0; j < kHidden; ++j) {
    const double y = cache_.y1[j];
    lambda1[j] = lambda2 * w_.output[j] * (y * (1.0 - y));
  }
  return lambda1;
}

double Mlp::tuning_gradient() const {
  const std::array<double, kHidden> lambda1 = hidden_local_gradients();
  double g = 0.0;
  for (std::size_t j = 0; j < kHidden; ++j) g += lambda1[j] * w_.input[j];
  return g;
}

double Mlp::tuning_gradient_factored() const {
  const double lambda2 = output_local_gradient();
  double dv2 = 0.0;
  for (std::size_t j = 0; j < kHidden; ++j) {
    const double y = cache_.y1[j];
    dv2 += w_.output[j] * (y * (1.0 - y)) * w_.input[j];
  }
  return lambda2 * dv2;
}

std::string Mlp::save() const {
  std::ostringstream os;
  os << std::setprecision(17);
  auto put = [&os, first = true](double x) mutable {
    if (!first) os << ' ';
    os << x;
    first = false;
  };
  for (double x : w_.input) put(x);
  for (double x : w_.hidden_bias) put(x);
  for (double x : w_.output) put(x);
  put(w_.output_bias);
  os << '\n';
  return os.str();
}

Mlp Mlp::load(std::string_view record, double learning_rate) {
  std::vector<double> values;
  std::istringstream is{std::string(record)};
  double x = 0.0;
  while (is >> x) values.push_back(x);
  if (!is.eof()) throw InvalidParameter("weight record contains a non-numeric token");
  if (values.size() != kParams)
    throw InvalidParameter("weight record needs " + std::to_string(kParams) + " values, got " +
                           std::to_string(values.size()));
  FlatWeights flat{};
  std::copy(values.begin(), values.end(), flat.begin());
  return Mlp(unflatten(flat), learning_rate);
}

namespace {

// Flat-weight evaluation used by the training loop; mirrors Mlp::forward and
// Mlp::descent_direction without touching the network's cache.
double flat_forward(const FlatWeights& w, double x, std::array<double, kHidden>& y1) {
  double v2 = w[3 * kHidden];
  for (std::size_t j = 0; j < kHidden; ++j) {
    y1[j] = sigmoid(w[j] * x + w[kHidden + j]);
    v2 += w[2 * kHidden + j] * y1[j];
  }
  return sigmoid(v2);
}

void flat_descent(const FlatWeights& w, const TrainingPattern& p, FlatWeights& g) {
  std::array<double, kHidden> y1{};
  const double y2 = flat_forward(w, p.frm_norm, y1);
  const double delta2 = (p.thr_norm - y2) * y2 * (1.0 - y2);
  for (std::size_t j = 0; j < kHidden; ++j) {
    const double delta1 = delta2 * w[2 * kHidden + j] * y1[j] * (1.0 - y1[j]);
    g[j] = delta1 * p.frm_norm;
    g[kHidden + j] = delta1;
    g[2 * kHidden + j] = delta2 * y1[j];
  }
  g[3 * kHidden] = delta2;
}

double flat_mse(const FlatWeights& w, std::span<const TrainingPattern> patterns) {
  std::array<double, kHidden> y1{};
  double sum = 0.0;
  for (const TrainingPattern& p : patterns) {
    const double e = p.thr_norm - flat_forward(w, p.frm_norm, y1);
    sum += e * e;
  }
  return sum / static_cast<double>(patterns.size());
}

// Online Adam: one moment update and one step per pattern.
class AdamStepper {
 public:
  explicit AdamStepper(const TrainOptions& o) : o_(o) {}

  void step(FlatWeights& w, const TrainingPattern& p) {
    FlatWeights g;
    flat_descent(w, p, g);
    p1_ *= o_.adam_beta1;
    p2_ *= o_.adam_beta2;
    // Bias corrections folded into one scale and one divide per weight.
    const double rate = o_.adam_rate / (1.0 - p1_);
    const double inv_root = 1.0 / std::sqrt(1.0 - p2_);
    for (std::size_t k = 0; k < kParams; ++k) {
      m_[k] = o_.adam_beta1 * m_[k] + (1.0 - o_.adam_beta1) * g[k];
      v_[k] = o_.adam_beta2 * v_[k] + (1.0 - o_.adam_beta2) * g[k] * g[k];
      w[k] += rate * m_[k] / (std::sqrt(v_[k]) * inv_root + o_.adam_epsilon);
    }
  }

 private:
  const TrainOptions& o_;
  FlatWeights m_{};
  FlatWeights v_{};
  double p1_ = 1.0;  // beta1^t
  double p2_ = 1.0;
};

}  // namespace

TrainResult train(Mlp& mlp, std::span<const TrainingPattern> patterns, const TrainOptions& options) {
  if (patterns.empty()) throw std::invalid_argument("training needs at least one pattern");
  std::vector<std::size_t> order(patterns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(options.shuffle_seed);

  const bool adam = options.rule == LearningRule::Adam;
  AdamStepper stepper(options);
  TrainResult result;
  const double eta_in = mlp.learning_rate();
  double eta = options.adaptive ? std::clamp(eta_in, options.eta_min, options.eta_max) : eta_in;
  double previous = std::numeric_limits<double>::infinity();
  FlatWeights w = flatten(mlp.weights());

  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const FlatWeights snapshot = w;
    for (std::size_t idx : order) {
      if (adam) {
        stepper.step(w, patterns[idx]);
      } else {
        FlatWeights g;
        flat_descent(w, patterns[idx], g);
        for (std::size_t k = 0; k < kParams; ++k) w[k] += eta * g[k];
      }
    }
    const double mse = flat_mse(w, patterns);
    result.epochs_used = epoch;
    result.final_mse = mse;
    if (mse < options.mse_threshold) {
      result.converged = true;
      break;
    }
    if (!adam && options.adaptive) {
      if (mse > previous * (1.0 + options.reject_ratio) + options.reject_tolerance) {
        w = snapshot;
        eta = std::max(options.eta_min, eta * options.shrink);
        result.final_mse = previous;
        continue;
      }
      if (mse < previous) eta = std::min(options.eta_max, eta * options.grow);
    }
    previous = mse;
  }
  mlp.set_weights(unflatten(w));
  mlp.set_learning_rate(adam ? eta_in : eta);
  result.learning_rate = adam ? options.adam_rate : eta;
  return result;
}

Normalizer::Normalizer(double frm_min, double frm_max, double thr_max, double margin)
    : frm_min_(frm_min), frm_max_(frm_max), thr_max_(thr_max), margin_(margin) {
  if (!(frm_min < frm_max)) throw InvalidParameter("normalizer needs frm_min < frm_max");
  if (!(thr_max > 0.0)) throw InvalidParameter("normalizer needs thr_max > 0");
  if (!(margin >= 0.0 && margin < 0.5)) throw InvalidParameter("normalizer margin must be in [0, 0.5)");
}

double Normalizer::normalize_frm(double frm_bytes) const noexcept {
  return (frm_bytes - frm_min_) / (frm_max_ - frm_min_);
}

double Normalizer::denormalize_frm(double frm_norm) const noexcept {
  return frm_min_ + frm_norm * (frm_max_ - frm_min_);
}

double Normalizer::denormalize_thr(double thr_norm) const noexcept {
  return (thr_norm - margin_) * thr_max_ / (1.0 - 2.0 * margin_);
}

TrainingPattern Normalizer::normalize(double frm_bytes, double thr_mbps) const {
  if (thr_mbps > thr_max_ || thr_mbps < 0.0)
    throw OutOfRange("throughput " + std::to_string(thr_mbps) + " Mbps outside [0, " + std::to_string(thr_max_) +
                     "]");
  return {normalize_frm(frm_bytes), margin_ + (1.0 - 2.0 * margin_) * thr_mbps / thr_max_};
}

double Normalizer::denorm_gradient(double g_norm) const noexcept {
  return g_norm * (thr_max_ / (1.0 - 2.0 * margin_)) / (frm_max_ - frm_min_);
}

}  // namespace airtune::neural
