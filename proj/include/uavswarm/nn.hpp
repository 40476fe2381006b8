#ifndef UAVSWARM_NN_HPP
#define UAVSWARM_NN_HPP

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavswarm/config.hpp"
#include "uavswarm/rng.hpp"

namespace uavswarm::nn {

/// A parameter tensor and its gradient, both contiguous.
struct ParamBlock {
  std::span<double> value;
  std::span<double> grad;
};

/// Fully connected layer y = W x + b over column batches.
struct Dense {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Eigen::MatrixXd weight_grad;
  Eigen::VectorXd bias_grad;

  Dense(int in, int out)
      : weight(Eigen::MatrixXd::Zero(out, in)),
        bias(Eigen::VectorXd::Zero(out)),
        weight_grad(Eigen::MatrixXd::Zero(out, in)),
        bias_grad(Eigen::VectorXd::Zero(out)) {}

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
};

/// Orthogonal init scaled by `gain`, zero bias.
inline void orthogonal_init(Dense& layer, double gain, Rng& rng) {
  const int rows = layer.out();
  const int cols = layer.in();
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd g(big, small);
  for (int i = 0; i < big; ++i) {
    for (int j = 0; j < small; ++j) g(i, j) = standard_normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // sign fix makes the result uniformly distributed over orthogonal matrices
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  layer.weight = gain * (rows >= cols ? q : Eigen::MatrixXd(q.transpose()));
  layer.bias.setZero();
}

/// Stack of dense layers with ReLU between them (and optionally after the last).
class Mlp {
 public:
  Mlp() = default;

  /// `sizes` = {in, hidden..., out}.
  Mlp(const std::vector<int>& sizes, bool relu_output) : relu_output_(relu_output) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) layers_.emplace_back(sizes[i], sizes[i + 1]);
  }

  /// Hidden layers get `hidden_gain`, the last layer `output_gain`.
  void init(double hidden_gain, double output_gain, Rng& rng) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      orthogonal_init(layers_[i], i + 1 == layers_.size() ? output_gain : hidden_gain, rng);
    }
  }

  int input_dim() const { return layers_.front().in(); }
  int output_dim() const { return layers_.back().out(); }
  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

  /// Pure evaluation; safe to call concurrently on a shared instance.
  Eigen::MatrixXd infer(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Eigen::MatrixXd z = layers_[i].weight * a;
      z.colwise() += layers_[i].bias;
      a = activate(i) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  /// Evaluation that records activations for a following `backward`.
  const Eigen::MatrixXd& forward(const Eigen::MatrixXd& x) {
    acts_.resize(layers_.size() + 1);
    acts_[0] = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      acts_[i + 1].noalias() = layers_[i].weight * acts_[i];
      acts_[i + 1].colwise() += layers_[i].bias;
      if (activate(i)) acts_[i + 1] = acts_[i + 1].cwiseMax(0.0);
    }
    return acts_.back();
  }

  /// Accumulates parameter gradients for d(loss)/d(output) = `grad_out` and
  /// returns d(loss)/d(input).
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) {
    if (acts_.size() != layers_.size() + 1) throw std::logic_error("Mlp::backward without forward");
    Eigen::MatrixXd g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (activate(i)) g = g.cwiseProduct((acts_[i + 1].array() > 0.0).cast<double>().matrix());
      layers_[i].weight_grad.noalias() += g * acts_[i].transpose();
      layers_[i].bias_grad += g.rowwise().sum();
      Eigen::MatrixXd next = layers_[i].weight.transpose() * g;
      g.swap(next);
    }
    return g;
  }

  void zero_grad() {
    for (auto& l : layers_) {
      l.weight_grad.setZero();
      l.bias_grad.setZero();
    }
  }

  void append_params(std::vector<ParamBlock>& out) {
    for (auto& l : layers_) {
      out.push_back({{l.weight.data(), static_cast<std::size_t>(l.weight.size())},
                     {l.weight_grad.data(), static_cast<std::size_t>(l.weight_grad.size())}});
      out.push_back({{l.bias.data(), static_cast<std::size_t>(l.bias.size())},
                     {l.bias_grad.data(), static_cast<std::size_t>(l.bias_grad.size())}});
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

 private:
  bool activate(std::size_t i) const { return i + 1 < layers_.size() || relu_output_; }

  std::vector<Dense> layers_;
  bool relu_output_ = false;
  std::vector<Eigen::MatrixXd> acts_;
};

inline double grad_norm(std::span<const ParamBlock> blocks) {
  double s = 0.0;
  for (const auto& b : blocks) {
    for (double g : b.grad) s += g * g;
  }
  return std::sqrt(s);
}

/// Rescales all gradients so their global norm is at most `max_norm`. Returns the pre-clip norm.
inline double clip_grad_norm(std::span<const ParamBlock> blocks, double max_norm) {
  const double norm = grad_norm(blocks);
  if (!std::isfinite(norm)) throw NumericalFault("non-finite gradient norm");
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& b : blocks) {
      for (double& g : b.grad) g *= scale;
    }
  }
  return norm;
}

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<const ParamBlock> blocks) = 0;
  double lr = 0.0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double learning_rate) { lr = learning_rate; }

  void step(std::span<const ParamBlock> blocks) override {
    for (const auto& b : blocks) {
      for (std::size_t i = 0; i < b.value.size(); ++i) b.value[i] -= lr * b.grad[i];
    }
  }
};

class Adam final : public Optimizer {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    lr = learning_rate;
  }

  void step(std::span<const ParamBlock> blocks) override {
    if (m_.empty()) {
      for (const auto& b : blocks) {
        m_.emplace_back(b.value.size(), 0.0);
        v_.emplace_back(b.value.size(), 0.0);
      }
    }
    if (m_.size() != blocks.size()) throw std::logic_error("Adam: parameter layout changed between steps");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      const auto& b = blocks[j];
      auto& m = m_[j];
      auto& v = v_[j];
      for (std::size_t i = 0; i < b.value.size(); ++i) {
        const double g = b.grad[i];
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        b.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      }
    }
  }

 private:
  double beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

inline std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double lr) {
  if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>(lr);
  return std::make_unique<Adam>(lr);
}

}  // namespace uavswarm::nn

#endif  // UAVSWARM_NN_HPP
