#pragma once

// 1-input / 4-hidden / 1-output sigmoid perceptron with three passes:
// forward (prediction), backward (online training), and tuning (the
// derivative of the prediction with respect to the input, weights frozen).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace airtune::neural {

/// Raised when backward or tuning runs without a forward pass since the last
/// weight change.
class StaleCache : public std::logic_error {
 public:
  StaleCache() : std::logic_error("network cache is stale; call forward() first") {}
};

[[nodiscard]] double sigmoid(double v) noexcept;
[[nodiscard]] double sigmoid_prime(double v) noexcept;

inline constexpr std::size_t kHidden = 4;
inline constexpr std::size_t kParams = 3 * kHidden + 1;

struct Weights {
  std::array<double, kHidden> input{};        // w_j1 (layer 1)
  std::array<double, kHidden> hidden_bias{};  // b_j (layer 1)
  std::array<double, kHidden> output{};       // w_1j (layer 2)
  double output_bias = 0.0;

  friend bool operator==(const Weights&, const Weights&) = default;
};

/// Weights in snapshot order: input, hidden biases, output, output bias.
using FlatWeights = std::array<double, kParams>;
[[nodiscard]] FlatWeights flatten(const Weights& w) noexcept;
[[nodiscard]] Weights unflatten(const FlatWeights& flat) noexcept;

/// Pre-activations v and activations y of the most recent forward pass.
struct Activations {
  double input = 0.0;
  std::array<double, kHidden> v1{};
  std::array<double, kHidden> y1{};
  double v2 = 0.0;
  double y2 = 0.0;
};

class Mlp {
 public:
  static constexpr double kDefaultLearningRate = 0.5;

  /// All weights and biases zero.
  Mlp() = default;
  explicit Mlp(const Weights& w, double learning_rate = kDefaultLearningRate);

  /// Weights and biases uniform in [-0.5, 0.5].
  [[nodiscard]] static Mlp random(std::uint64_t seed, double learning_rate = kDefaultLearningRate);

  double forward(double frm_norm);

  /// Negative gradient of e^2/2 with respect to every weight, e = target - output,
  /// at the cached forward pass. Pure.
  [[nodiscard]] Weights descent_direction(double target) const;

  /// One online update toward `target` using the cached forward pass.
  /// Returns the squared error before the update. Invalidates the cache.
  double backward(double target);

  /// dThr/dfrm at the cached input: sum_j lambda_j^(1) * w_j1, where
  /// lambda_1^(2) = sigma'(v2) and lambda_j^(1) = lambda_1^(2) * w_1j * sigma'(v1_j).
  [[nodiscard]] double tuning_gradient() const;

  /// The same derivative factored as lambda_1^(2) * dv2/dfrm.
  [[nodiscard]] double tuning_gradient_factored() const;

  /// Local gradients lambda_j^(1) of the hidden layer at the cached input.
  [[nodiscard]] std::array<double, kHidden> hidden_local_gradients() const;
  [[nodiscard]] double output_local_gradient() const;

  [[nodiscard]] const Weights& weights() const noexcept { return w_; }
  void set_weights(const Weights& w) noexcept;
  [[nodiscard]] const Activations& cache() const noexcept { return cache_; }
  [[nodiscard]] bool cache_fresh() const noexcept { return cache_fresh_; }

  [[nodiscard]] double learning_rate() const noexcept { return eta_; }
  void set_learning_rate(double eta) noexcept { eta_ = eta; }

  /// Flat text record: w1[4], hidden biases[4], w2[4], output bias.
  [[nodiscard]] std::string save() const;
  [[nodiscard]] static Mlp load(std::string_view record, double learning_rate = kDefaultLearningRate);

 private:
  void require_fresh() const;

  Weights w_{};
  Activations cache_{};
  bool cache_fresh_ = false;
  double eta_ = kDefaultLearningRate;
};

struct TrainingPattern {
  double frm_norm;
  double thr_norm;
};

enum class LearningRule {
  // Per-weight step sizes from running moments of the online gradient.
  Adam,
  // One global rate scaled once per epoch; rejected epochs are rolled back.
  BoldDriver,
};

struct TrainOptions {
  double mse_threshold = 1e-5;
  std::size_t max_epochs = 1000;
  std::uint64_t shuffle_seed = 0;
  LearningRule rule = LearningRule::Adam;
  double adam_rate = 0.03;
  double adam_beta1 = 0.95;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Bold driver: with adaptive = false the rate stays at the network's own.
  bool adaptive = true;
  double grow = 1.05;
  double shrink = 0.5;
  double reject_tolerance = 1e-4;
  double reject_ratio = 0.0;
  double eta_min = 0.01;
  double eta_max = 2.0;
};

struct TrainResult {
  double final_mse = 0.0;
  std::size_t epochs_used = 0;
  bool converged = false;
  double learning_rate = 0.0;  // final bold-driver rate, or the Adam base rate
};

/// Shuffled online epochs until the epoch MSE falls below the threshold or
/// max_epochs is reached. The epoch MSE is measured after the epoch's updates
/// with the weights held fixed. Throws std::invalid_argument on an empty set.
TrainResult train(Mlp& mlp, std::span<const TrainingPattern> patterns, const TrainOptions& options = {});

/// Maps raw (bytes, Mbps) samples into the network's (0, 1) working range.
class Normalizer {
 public:
  Normalizer(double frm_min, double frm_max, double thr_max, double margin = 0.05);

  [[nodiscard]] TrainingPattern normalize(double frm_bytes, double thr_mbps) const;
  [[nodiscard]] double normalize_frm(double frm_bytes) const noexcept;
  [[nodiscard]] double denormalize_frm(double frm_norm) const noexcept;
  [[nodiscard]] double denormalize_thr(double thr_norm) const noexcept;
  /// dThr/dfrm in Mbps per byte from the derivative in normalized units.
  [[nodiscard]] double denorm_gradient(double g_norm) const noexcept;

  [[nodiscard]] double frm_min() const noexcept { return frm_min_; }
  [[nodiscard]] double frm_max() const noexcept { return frm_max_; }
  [[nodiscard]] double thr_max() const noexcept { return thr_max_; }
  [[nodiscard]] double margin() const noexcept { return margin_; }

 private:
  double frm_min_;
  double frm_max_;
  double thr_max_;
  double margin_;
};

}  // namespace airtune::neural
