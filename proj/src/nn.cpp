#include "cyclr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cyclr {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Orthonormalizes the rows (rows <= cols) or columns (cols < rows) of a
// row-major Gaussian matrix with modified Gram-Schmidt.
void orthonormalize(std::span<double> w, std::size_t rows, std::size_t cols) {
  const bool by_rows = rows <= cols;
  const std::size_t count = by_rows ? rows : cols;
  const std::size_t len = by_rows ? cols : rows;
  auto at = [&](std::size_t v, std::size_t i) -> double& {
    return by_rows ? w[v * cols + i] : w[i * cols + v];
  };
  for (std::size_t v = 0; v < count; ++v) {
    for (std::size_t u = 0; u < v; ++u) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += at(v, i) * at(u, i);
      for (std::size_t i = 0; i < len; ++i) at(v, i) -= dot * at(u, i);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < len; ++i) norm += at(v, i) * at(v, i);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < len; ++i) at(v, i) /= norm;
  }
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) {
    throw std::invalid_argument("an MLP needs at least an input and an output size");
  }
  if (std::any_of(sizes_.begin(), sizes_.end(), [](std::size_t s) { return s == 0; })) {
    throw std::invalid_argument("layer sizes must be positive");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

Mlp Mlp::orthogonal(std::vector<std::size_t> layer_sizes, double hidden_gain, double output_gain,
                    Rng& rng) {
  Mlp net(std::move(layer_sizes));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto w = net.weights(l);
    for (double& x : w) x = rng.normal();
    const std::size_t rows = net.sizes_[l + 1];
    const std::size_t cols = net.sizes_[l];
    orthonormalize(w, rows, cols);
    const double gain = l + 1 == net.num_layers() ? output_gain : hidden_gain;
    for (double& x : w) x *= gain;
  }
  return net;
}

std::span<double> Mlp::weights(std::size_t layer) {
  return {params_.data() + weight_offset(layer), sizes_[layer] * sizes_[layer + 1]};
}

std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

std::span<const double> Mlp::weights(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer] * sizes_[layer + 1]};
}

std::span<const double> Mlp::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Cache cache;
  auto out = forward(input, cache);
  return {out.begin(), out.end()};
}

std::span<const double> Mlp::forward(std::span<const double> input, Cache& cache) const {
  if (input.size() != input_dim()) {
    throw std::invalid_argument("MLP input has dimension " + std::to_string(input.size()) +
                                ", expected " + std::to_string(input_dim()));
  }
  cache.activations.resize(sizes_.size());
  cache.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const std::vector<double>& x = cache.activations[l];
    std::vector<double>& y = cache.activations[l + 1];
    y.resize(out);
    const bool hidden = l + 1 < num_layers();
    for (std::size_t r = 0; r < out; ++r) {
      double acc = b[r];
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) acc += row[c] * x[c];
      y[r] = hidden ? std::tanh(acc) : acc;
    }
  }
  return cache.activations.back();
}

std::vector<double> Mlp::backward(std::span<const double> input,
                                  std::span<const double> upstream) const {
  Cache cache;
  forward(input, cache);
  std::vector<double> grad(params_.size(), 0.0);
  backward_accumulate(cache, upstream, grad);
  return grad;
}

void Mlp::backward_accumulate(const Cache& cache, std::span<const double> upstream,
                              std::span<double> grad) const {
  if (upstream.size() != output_dim() || grad.size() != params_.size() ||
      cache.activations.size() != sizes_.size()) {
    throw std::invalid_argument("MLP backward shape mismatch");
  }
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> next;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const std::vector<double>& x = cache.activations[l];
    const double* w = params_.data() + weight_offset(l);
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = delta[r];
      gb[r] += d;
      double* grow = gw + r * in;
      for (std::size_t c = 0; c < in; ++c) grow[c] += d * x[c];
    }
    if (l == 0) break;
    // x = tanh(pre) for every non-input activation.
    next.assign(in, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = delta[r];
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) next[c] += row[c] * d;
    }
    for (std::size_t c = 0; c < in; ++c) next[c] *= 1.0 - x[c] * x[c];
    delta.swap(next);
  }
}

bool Mlp::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double x) { return std::isfinite(x); });
}

void save_mlp(std::ostream& out, const Mlp& net) {
  out << "cyclr-mlp 1\n" << net.num_layers() << "\n";
  const auto& sizes = net.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    out << sizes[l] << " " << sizes[l + 1] << "\n";
  }
  const auto old = out.precision(17);
  for (double p : net.params()) out << p << "\n";
  out.precision(old);
}

Mlp load_mlp(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t layers = 0;
  if (!(in >> magic >> version >> layers) || magic != "cyclr-mlp" || version != 1 || layers == 0) {
    throw std::runtime_error("not a cyclr-mlp checkpoint");
  }
  std::vector<std::size_t> sizes;
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t a = 0, b = 0;
    if (!(in >> a >> b)) throw std::runtime_error("truncated layer table");
    if (l == 0) sizes.push_back(a);
    if (sizes.back() != a) throw std::runtime_error("inconsistent layer dimensions");
    sizes.push_back(b);
  }
  Mlp net(sizes);
  for (double& p : net.mutable_params()) {
    if (!(in >> p)) throw std::runtime_error("truncated parameter list");
  }
  return net;
}

double log_sum_exp(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  return m + std::log(sum);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

namespace {

int discrete_action(const Categorical& c, const Action& action) {
  const int* a = std::get_if<int>(&action);
  if (a == nullptr) throw std::invalid_argument("categorical distribution needs a discrete action");
  if (*a < 0 || static_cast<std::size_t>(*a) >= c.logits.size()) {
    throw std::invalid_argument("discrete action " + std::to_string(*a) + " out of range");
  }
  return *a;
}

const std::vector<double>& continuous_action(const DiagGaussian& g, const Action& action) {
  const auto* a = std::get_if<std::vector<double>>(&action);
  if (a == nullptr || a->size() != g.mean.size()) {
    throw std::invalid_argument("Gaussian distribution needs a continuous action of matching size");
  }
  return *a;
}

}  // namespace

double log_prob(const DistParams& dist, const Action& action) {
  if (const auto* c = std::get_if<Categorical>(&dist)) {
    const int a = discrete_action(*c, action);
    return c->logits[a] - log_sum_exp(c->logits);
  }
  const auto& g = std::get<DiagGaussian>(dist);
  const auto& a = continuous_action(g, action);
  double lp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double z = (a[i] - g.mean[i]) * std::exp(-g.log_std[i]);
    lp += -0.5 * z * z - g.log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

double entropy(const DistParams& dist) {
  if (const auto* c = std::get_if<Categorical>(&dist)) {
    const double lse = log_sum_exp(c->logits);
    double h = 0.0;
    for (double z : c->logits) {
      const double logp = z - lse;
      h -= std::exp(logp) * logp;
    }
    return std::max(h, 0.0);
  }
  const auto& g = std::get<DiagGaussian>(dist);
  double h = 0.0;
  for (double ls : g.log_std) h += 0.5 * (kLog2Pi + 1.0) + ls;
  return h;
}

std::vector<double> log_prob_grad(const DistParams& dist, const Action& action) {
  if (const auto* c = std::get_if<Categorical>(&dist)) {
    const int a = discrete_action(*c, action);
    std::vector<double> grad = softmax(c->logits);
    for (double& x : grad) x = -x;
    grad[a] += 1.0;
    return grad;
  }
  const auto& g = std::get<DiagGaussian>(dist);
  const auto& a = continuous_action(g, action);
  const std::size_t n = a.size();
  std::vector<double> grad(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double inv_std = std::exp(-g.log_std[i]);
    const double z = (a[i] - g.mean[i]) * inv_std;
    grad[i] = z * inv_std;
    grad[n + i] = z * z - 1.0;
  }
  return grad;
}

std::vector<double> entropy_grad(const DistParams& dist) {
  if (const auto* c = std::get_if<Categorical>(&dist)) {
    const double lse = log_sum_exp(c->logits);
    const double h = entropy(dist);
    std::vector<double> grad(c->logits.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double logp = c->logits[i] - lse;
      grad[i] = -std::exp(logp) * (logp + h);
    }
    return grad;
  }
  const auto& g = std::get<DiagGaussian>(dist);
  std::vector<double> grad(2 * g.mean.size(), 0.0);
  std::fill(grad.begin() + static_cast<std::ptrdiff_t>(g.mean.size()), grad.end(), 1.0);
  return grad;
}

ActionSample sample_action(const DistParams& dist, Rng& rng) {
  if (const auto* c = std::get_if<Categorical>(&dist)) {
    const std::vector<double> p = softmax(c->logits);
    const double u = rng.uniform(0.0, 1.0);
    double acc = 0.0;
    int chosen = static_cast<int>(p.size()) - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        chosen = static_cast<int>(i);
        break;
      }
    }
    // Skip zero-probability tail entries that floating-point slack could select.
    while (chosen > 0 && p[chosen] == 0.0) --chosen;
    Action a = chosen;
    return {a, log_prob(dist, a)};
  }
  const auto& g = std::get<DiagGaussian>(dist);
  std::vector<double> x(g.mean.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.mean[i] + std::exp(g.log_std[i]) * rng.normal();
  Action a = std::move(x);
  const double lp = log_prob(dist, a);
  return {std::move(a), lp};
}

}  // namespace cyclr
