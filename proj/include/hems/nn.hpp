#pragma once

// Small fully connected networks with hand-written backpropagation and Adam.
// Batches are column-major: one sample per column.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hems::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputActivation { Tanh, Linear };

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Rectifier hidden layers; tanh or identity on the output layer.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> pre;     // pre-activations of each layer
    Matrix output;
  };

  Mlp() = default;

  Mlp(std::vector<int> sizes, OutputActivation out) : sizes_(std::move(sizes)), out_(out) {
    if (sizes_.size() < 2) throw std::invalid_argument("mlp needs at least two layer sizes");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      biases_.push_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  /// Glorot-uniform hidden weights, small uniform output layer, zero hidden biases.
  void initialize(std::mt19937_64& rng, double output_range = 3e-3) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const bool last = l + 1 == weights_.size();
      const double limit =
          last ? output_range : std::sqrt(6.0 / static_cast<double>(weights_[l].rows() + weights_[l].cols()));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Eigen::Index j = 0; j < weights_[l].cols(); ++j)
        for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) weights_[l](i, j) = u(rng);
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l](i) = last ? u(rng) : 0.0;
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  OutputActivation output_activation() const { return out_; }
  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  std::size_t layers() const { return weights_.size(); }
  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    if (x.rows() != inputs()) throw std::invalid_argument("mlp: input has wrong row count");
    Matrix a = x;
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = weights_[l] * a;
      z.colwise() += biases_[l];
      if (cache) {
        cache->inputs.push_back(a);
        cache->pre.push_back(z);
      }
      if (l + 1 < weights_.size()) a = z.cwiseMax(0.0);
      else a = out_ == OutputActivation::Tanh ? Matrix(z.array().tanh()) : z;
    }
    if (cache) cache->output = a;
    return a;
  }

  /// Gradients of a loss with respect to parameters given its gradient with
  /// respect to the network output; optionally also with respect to the input.
  Gradients backward(const Cache& cache, const Matrix& grad_output, Matrix* grad_input = nullptr) const {
    Gradients g;
    g.weights.resize(weights_.size());
    g.biases.resize(weights_.size());
    Matrix dz = grad_output;
    if (out_ == OutputActivation::Tanh)
      dz = (grad_output.array() * (1.0 - cache.output.array().square())).matrix();
    for (std::size_t l = weights_.size(); l-- > 0;) {
      g.weights[l] = dz * cache.inputs[l].transpose();
      g.biases[l] = dz.rowwise().sum();
      if (l == 0 && !grad_input) break;
      Matrix da = weights_[l].transpose() * dz;
      if (l == 0) {
        *grad_input = std::move(da);
        break;
      }
      dz = (da.array() * (cache.pre[l - 1].array() > 0.0).cast<double>()).matrix();
    }
    return g;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    return n;
  }

  std::vector<double> parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.insert(out.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
      out.insert(out.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
    }
    return out;
  }

  void set_parameters(const std::vector<double>& p) {
    if (p.size() != parameter_count()) throw std::invalid_argument("mlp: parameter count mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      std::copy_n(p.begin() + static_cast<long>(k), weights_[l].size(), weights_[l].data());
      k += static_cast<std::size_t>(weights_[l].size());
      std::copy_n(p.begin() + static_cast<long>(k), biases_[l].size(), biases_[l].data());
      k += static_cast<std::size_t>(biases_[l].size());
    }
  }

  static std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      out.insert(out.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
      out.insert(out.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
    }
    return out;
  }

  bool same_shape(const Mlp& other) const { return sizes_ == other.sizes_ && out_ == other.out_; }

  bool finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
  }

  void write(std::ostream& out) const {
    out << "mlp " << sizes_.size();
    for (int s : sizes_) out << ' ' << s;
    out << ' ' << (out_ == OutputActivation::Tanh ? "tanh" : "linear") << '\n';
    char buf[32];
    for (double v : parameters()) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out << buf;
    }
  }

  static Mlp read(std::istream& in) {
    std::string tag, act;
    std::size_t n = 0;
    in >> tag >> n;
    if (tag != "mlp" || n < 2 || n > 16) throw std::runtime_error("checkpoint: bad network header");
    std::vector<int> sizes(n);
    for (auto& s : sizes) in >> s;
    in >> act;
    if (act != "tanh" && act != "linear") throw std::runtime_error("checkpoint: bad activation");
    Mlp net(sizes, act == "tanh" ? OutputActivation::Tanh : OutputActivation::Linear);
    std::vector<double> p(net.parameter_count());
    for (auto& v : p) {
      std::string token;
      if (!(in >> token)) throw std::runtime_error("checkpoint: truncated parameters");
      v = std::stod(token);
    }
    net.set_parameters(p);
    return net;
  }

 private:
  std::vector<int> sizes_;
  OutputActivation out_ = OutputActivation::Linear;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

/// target <- tau * online + (1 - tau) * target, element-wise.
inline void soft_update(const Mlp& online, Mlp& target, double tau) {
  if (!online.same_shape(target)) throw std::invalid_argument("soft_update: shape mismatch");
  for (std::size_t l = 0; l < online.layers(); ++l) {
    target.weights()[l] = tau * online.weights()[l] + (1.0 - tau) * target.weights()[l];
    target.biases()[l] = tau * online.biases()[l] + (1.0 - tau) * target.biases()[l];
  }
}

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (std::size_t l = 0; l < net.layers(); ++l) {
      mw_.push_back(Matrix::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
      vw_.push_back(mw_.back());
      mb_.push_back(Vector::Zero(net.biases()[l].size()));
      vb_.push_back(mb_.back());
    }
  }

  void step(Mlp& net, const Gradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto apply = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = beta1_ * m + (1.0 - beta1_) * grad;
      v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
      param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    };
    for (std::size_t l = 0; l < net.layers(); ++l) {
      apply(net.weights()[l], g.weights[l], mw_[l], vw_[l]);
      apply(net.biases()[l], g.biases[l], mb_[l], vb_[l]);
    }
  }

  long steps() const { return t_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
};

}  // namespace hems::nn
