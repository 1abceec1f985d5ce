#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hems/nn.hpp"

using namespace hems::nn;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

// Loss = sum(weights .* output) so that dL/dY = weights.
double weighted_output(const Mlp& net, const Matrix& x, const Matrix& w) {
  return net.forward(x).cwiseProduct(w).sum();
}

}  // namespace

TEST(Mlp, ParameterGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> width(2, 9), batch(1, 12);
    auto act = trial % 2 ? OutputActivation::Tanh : OutputActivation::Linear;
    Mlp net({width(rng), width(rng), width(rng), width(rng)}, act);
    net.initialize(rng, 0.5);
    for (auto& b : net.biases()) b = random_matrix(static_cast<int>(b.size()), 1, rng, 0.3);
    Matrix x = random_matrix(net.inputs(), batch(rng), rng);
    Matrix w = random_matrix(net.outputs(), static_cast<int>(x.cols()), rng);
    Mlp::Cache cache;
    net.forward(x, &cache);
    auto analytic = Mlp::flatten(net.backward(cache, w));
    auto p = net.parameters();
    std::vector<double> numeric(p.size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto q = p;
      q[i] = p[i] + h;
      net.set_parameters(q);
      double up = weighted_output(net, x, w);
      q[i] = p[i] - h;
      net.set_parameters(q);
      double down = weighted_output(net, x, w);
      numeric[i] = (up - down) / (2 * h);
    }
    net.set_parameters(p);
    EXPECT_LE(relative_error(analytic, numeric), 1e-4) << "trial " << trial;
  }
}

TEST(Mlp, InputGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  Mlp net({5, 7, 6, 1}, OutputActivation::Linear);
  net.initialize(rng, 0.5);
  Matrix x = random_matrix(5, 4, rng);
  Matrix w = Matrix::Ones(1, 4);
  Mlp::Cache cache;
  net.forward(x, &cache);
  Matrix dx;
  net.backward(cache, w, &dx);
  std::vector<double> analytic(dx.data(), dx.data() + dx.size()), numeric;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Matrix up = x, down = x;
      up(i, j) += 1e-6;
      down(i, j) -= 1e-6;
      numeric.push_back((weighted_output(net, up, w) - weighted_output(net, down, w)) / 2e-6);
    }
  EXPECT_LE(relative_error(analytic, numeric), 1e-4);
}

TEST(Mlp, InitializationIsSeedDeterministic) {
  std::mt19937_64 a(3), b(3);
  Mlp x({8, 16, 32, 2}, OutputActivation::Tanh), y({8, 16, 32, 2}, OutputActivation::Tanh);
  x.initialize(a);
  y.initialize(b);
  EXPECT_EQ(x.parameters(), y.parameters());
  // output layer stays small
  EXPECT_LE(x.weights().back().cwiseAbs().maxCoeff(), 3e-3);
}

TEST(SoftUpdate, Exactness) {
  Mlp online({2, 3, 3, 1}, OutputActivation::Linear), target = online;
  std::mt19937_64 rng(1);
  online.initialize(rng);
  target.initialize(rng);
  auto before = target.parameters();
  soft_update(online, target, 0.0);
  EXPECT_EQ(target.parameters(), before);
  soft_update(online, target, 1.0);
  EXPECT_EQ(target.parameters(), online.parameters());

  Mlp ones({1, 1, 1, 1}, OutputActivation::Linear), zeros = ones;
  ones.set_parameters(std::vector<double>(ones.parameter_count(), 1.0));
  soft_update(ones, zeros, 0.001);
  for (double v : zeros.parameters()) EXPECT_EQ(v, 0.001);

  Mlp other({2, 4, 3, 1}, OutputActivation::Linear);
  EXPECT_THROW(soft_update(online, other, 0.5), std::invalid_argument);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Mlp net({1, 1, 1, 1}, OutputActivation::Linear);
  net.set_parameters(std::vector<double>(net.parameter_count(), 0.5));
  Adam opt(net, 0.01);
  Gradients g;
  for (std::size_t l = 0; l < net.layers(); ++l) {
    g.weights.push_back(Matrix::Constant(1, 1, 3.0));
    g.biases.push_back(Vector::Constant(1, -2.0));
  }
  opt.step(net, g);
  auto p = net.parameters();
  for (std::size_t i = 0; i < p.size(); i += 2) {
    EXPECT_NEAR(p[i], 0.49, 1e-9);
    EXPECT_NEAR(p[i + 1], 0.51, 1e-9);
  }
}

TEST(Mlp, TextRoundTripIsExact) {
  std::mt19937_64 rng(4);
  Mlp net({8, 5, 6, 2}, OutputActivation::Tanh);
  net.initialize(rng);
  std::stringstream ss;
  net.write(ss);
  auto back = Mlp::read(ss);
  EXPECT_TRUE(back.same_shape(net));
  EXPECT_EQ(back.parameters(), net.parameters());
}
