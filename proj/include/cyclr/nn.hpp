#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "cyclr/common.hpp"

namespace cyclr {

/// Fully connected network with tanh hidden layers and an identity output.
///
/// All parameters live in one flat vector. Layer l occupies a row-major
/// weight block of shape (sizes[l+1], sizes[l]) followed by its bias.
/// Gradients returned by backward() use the same layout, so parameters and
/// gradients can be handed to the optimizer directly.
class Mlp {
 public:
  /// Per-sample intermediate values needed by backward().
  struct Cache {
    std::vector<std::vector<double>> activations;  // activations[0] is the input
  };

  Mlp() = default;
  /// Zero-initialized network. Requires at least two sizes, all positive.
  explicit Mlp(std::vector<std::size_t> layer_sizes);

  /// Orthogonal rows/columns scaled by `hidden_gain` on hidden layers and by
  /// `output_gain` on the last layer; biases zero.
  static Mlp orthogonal(std::vector<std::size_t> layer_sizes, double hidden_gain,
                        double output_gain, Rng& rng);

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t num_params() const { return params_.size(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  std::span<const double> params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }

  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;

  /// Throws std::invalid_argument on input dimension mismatch.
  std::vector<double> forward(std::span<const double> input) const;
  /// Same as forward() but keeps the activations for backward_accumulate().
  std::span<const double> forward(std::span<const double> input, Cache& cache) const;

  /// Gradient of dot(output, upstream) with respect to every parameter.
  std::vector<double> backward(std::span<const double> input,
                               std::span<const double> upstream) const;
  /// Adds the parameter gradient for a cached forward pass into `grad`.
  void backward_accumulate(const Cache& cache, std::span<const double> upstream,
                           std::span<double> grad) const;

  bool all_finite() const;

  bool operator==(const Mlp&) const = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Plain-text checkpoint: "cyclr-mlp 1", the layer count, one line per
/// layer with "inputs outputs", then every parameter on its own line in
/// the flat layout above, printed with round-trip precision.
void save_mlp(std::ostream& out, const Mlp& net);
/// Throws std::runtime_error on malformed input.
Mlp load_mlp(std::istream& in);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct Categorical {
  std::vector<double> logits;
};

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> log_std;  // kept within [kLogStdMin, kLogStdMax]
};

using DistParams = std::variant<Categorical, DiagGaussian>;

std::vector<double> softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> logits);

/// Throws std::invalid_argument for an out-of-range discrete action or an
/// action whose type does not match the distribution.
double log_prob(const DistParams& dist, const Action& action);
double entropy(const DistParams& dist);

/// Gradient of log_prob with respect to the distribution parameters, laid out
/// as the logits (categorical) or as mean followed by log_std (Gaussian).
std::vector<double> log_prob_grad(const DistParams& dist, const Action& action);
/// Gradient of entropy, same layout as log_prob_grad.
std::vector<double> entropy_grad(const DistParams& dist);

struct ActionSample {
  Action action;
  double log_prob;
};

ActionSample sample_action(const DistParams& dist, Rng& rng);

}  // namespace cyclr
