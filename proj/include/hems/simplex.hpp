#pragma once

// Dense bounded-variable primal simplex (two-phase, tableau form).
//
//   minimize  c'x   subject to  A x = b,  lower <= x <= upper
//
// Upper bounds are handled implicitly (bound flips) so they do not add rows.
// Dantzig pricing, switching to Bland's rule during long degenerate streaks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hems::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparse builder for an equality-form LP.
class Problem {
 public:
  int add_variable(double cost, double lower = 0.0, double upper = kInf) {
    if (!std::isfinite(lower)) throw std::invalid_argument("lp: lower bounds must be finite");
    if (upper < lower) throw std::invalid_argument("lp: upper bound below lower bound");
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return static_cast<int>(cost_.size()) - 1;
  }

  int add_row(std::vector<std::pair<int, double>> coeffs, double rhs) {
    for (const auto& [j, v] : coeffs)
      if (j < 0 || j >= variables()) throw std::out_of_range("lp: bad variable index");
    rows_.push_back(std::move(coeffs));
    rhs_.push_back(rhs);
    return static_cast<int>(rows_.size()) - 1;
  }

  int variables() const { return static_cast<int>(cost_.size()); }
  int constraints() const { return static_cast<int>(rows_.size()); }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::vector<std::pair<int, double>>>& rows() const { return rows_; }
  const std::vector<double>& rhs() const { return rhs_; }

  double objective(const std::vector<double>& x) const {
    double v = 0.0;
    for (int j = 0; j < variables(); ++j) v += cost_[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    return v;
  }

  /// Largest absolute violation of equalities and bounds at x.
  double primal_residual(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      double lhs = 0.0;
      for (const auto& [j, v] : rows_[i]) lhs += v * x[static_cast<std::size_t>(j)];
      worst = std::max(worst, std::abs(lhs - rhs_[i]));
    }
    for (std::size_t j = 0; j < cost_.size(); ++j) {
      worst = std::max(worst, lower_[j] - x[j]);
      if (std::isfinite(upper_[j])) worst = std::max(worst, x[j] - upper_[j]);
    }
    return worst;
  }

 private:
  std::vector<double> cost_, lower_, upper_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  std::vector<double> rhs_;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
  Status status = Status::Optimal;
  std::vector<double> x;
  double objective = 0.0;
  long iterations = 0;
  double residual = 0.0;
};

struct Options {
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-7;
  long max_iterations = 0;  // 0 = automatic
  int refresh_every = 100;
  int degenerate_limit = 50;
};

namespace detail {

class Tableau {
 public:
  Tableau(const Problem& p, const Options& opt) : opt_(opt) {
    m_ = p.constraints();
    n_ = p.variables();
    width_ = n_ + m_;
    t_.assign(static_cast<std::size_t>(m_) * width_, 0.0);
    range_.assign(static_cast<std::size_t>(width_), kInf);
    rhs_.assign(static_cast<std::size_t>(m_), 0.0);
    for (int j = 0; j < n_; ++j) range_[j] = p.upper()[j] - p.lower()[j];
    for (int i = 0; i < m_; ++i) {
      double b = p.rhs()[i];
      for (const auto& [j, v] : p.rows()[i]) {
        at(i, j) += v;
        b -= v * p.lower()[j];
      }
      if (b < 0) {
        for (int j = 0; j < n_; ++j) at(i, j) = -at(i, j);
        b = -b;
      }
      at(i, n_ + i) = 1.0;
      rhs_[i] = b;
    }
    basis_.resize(m_);
    xb_ = rhs_;
    for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
    at_upper_.assign(static_cast<std::size_t>(width_), false);
    is_basic_.assign(static_cast<std::size_t>(width_), false);
    for (int i = 0; i < m_; ++i) is_basic_[n_ + i] = true;
    cost_.assign(static_cast<std::size_t>(width_), 0.0);
    lower_ = p.lower();
  }

  Status run_phase(const std::vector<double>& cost, bool allow_artificial, long& iterations,
                   long max_iterations) {
    cost_ = cost;
    refresh();
    int degenerate = 0;
    long since_refresh = 0;
    while (true) {
      if (iterations >= max_iterations)
        throw SolverError("simplex: iteration limit " + std::to_string(max_iterations) +
                          " reached (rows " + std::to_string(m_) + ", cols " +
                          std::to_string(n_) + ")");
      bool bland = degenerate > opt_.degenerate_limit;
      int enter = -1;
      double best = 0.0;
      const int limit = allow_artificial ? width_ : n_;
      for (int j = 0; j < limit; ++j) {
        if (is_basic_[j] || range_[j] <= 0.0) continue;
        double dj = d_[j];
        bool eligible = at_upper_[j] ? dj > opt_.optimality_tol : dj < -opt_.optimality_tol;
        if (!eligible) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
        }
      }
      if (enter < 0) return Status::Optimal;
      ++iterations;

      const double dir = at_upper_[enter] ? -1.0 : 1.0;
      double theta = range_[enter];  // distance to the entering variable's other bound
      int leave = -1;
      bool leave_to_upper = false;
      double leave_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = at(i, enter) * dir;
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const int bi = basis_[i];
        double lim;
        bool to_upper;
        if (a > 0) {
          lim = std::max(0.0, xb_[i]) / a;
          to_upper = false;
        } else {
          if (!std::isfinite(range_[bi])) continue;
          lim = std::max(0.0, range_[bi] - xb_[i]) / (-a);
          to_upper = true;
        }
        bool take = lim < theta - 1e-12;
        if (!take && leave >= 0 && lim <= theta + 1e-12)
          take = bland ? bi < basis_[leave] : std::abs(a) > std::abs(leave_alpha);
        if (take) {
          theta = std::min(theta, lim);
          leave = i;
          leave_to_upper = to_upper;
          leave_alpha = a;
        }
      }
      if (!std::isfinite(theta)) return Status::Unbounded;
      degenerate = theta <= 1e-12 ? degenerate + 1 : 0;

      for (int i = 0; i < m_; ++i) xb_[i] -= at(i, enter) * dir * theta;
      const double enter_value = (at_upper_[enter] ? range_[enter] : 0.0) + dir * theta;
      if (leave < 0) {
        at_upper_[enter] = !at_upper_[enter];
        continue;
      }
      pivot(leave, enter);
      const int out = basis_[leave];
      is_basic_[out] = false;
      at_upper_[out] = leave_to_upper;
      basis_[leave] = enter;
      is_basic_[enter] = true;
      at_upper_[enter] = false;
      xb_[leave] = enter_value;
      if (++since_refresh >= opt_.refresh_every) {
        refresh();
        since_refresh = 0;
      }
    }
  }

  /// Pivots zero-level artificial variables out of the basis; rows where that
  /// is impossible are redundant and keep their artificial fixed at zero.
  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      int enter = -1;
      double best = opt_.pivot_tol * 100;
      for (int j = 0; j < n_; ++j) {
        if (is_basic_[j]) continue;
        if (std::abs(at(r, j)) > best) {
          best = std::abs(at(r, j));
          enter = j;
        }
      }
      if (enter < 0) {
        range_[basis_[r]] = 0.0;
        continue;
      }
      const double value = at_upper_[enter] ? range_[enter] : 0.0;
      pivot(r, enter);
      const int out = basis_[r];
      is_basic_[out] = false;
      at_upper_[out] = false;
      basis_[r] = enter;
      is_basic_[enter] = true;
      at_upper_[enter] = false;
      xb_[r] = value;
    }
    for (int j = n_; j < width_; ++j)
      if (!is_basic_[j]) range_[j] = 0.0;
    refresh();
  }

  double artificial_sum() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_) s += std::abs(xb_[i]);
    return s;
  }

  std::vector<double> values() const {
    std::vector<double> x(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) x[j] = lower_[j] + (at_upper_[j] ? range_[j] : 0.0);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = lower_[basis_[i]] + xb_[i];
    return x;
  }

  int structural() const { return n_; }
  int width() const { return width_; }

 private:
  double& at(int i, int j) { return t_[static_cast<std::size_t>(i) * width_ + j]; }
  double at(int i, int j) const { return t_[static_cast<std::size_t>(i) * width_ + j]; }

  void pivot(int r, int c) {
    double* row = &t_[static_cast<std::size_t>(r) * width_];
    const double inv = 1.0 / row[c];
    nz_.clear();
    for (int j = 0; j < width_; ++j) {
      if (row[j] != 0.0) {
        row[j] *= inv;
        if (std::abs(row[j]) < 1e-14) row[j] = 0.0;
        else nz_.push_back(j);
      }
    }
    row[c] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* other = &t_[static_cast<std::size_t>(i) * width_];
      const double f = other[c];
      if (f == 0.0) continue;
      for (int j : nz_) other[j] -= f * row[j];
      other[c] = 0.0;
    }
    const double f = d_[c];
    if (f != 0.0) {
      for (int j : nz_) d_[j] -= f * row[j];
      d_[c] = 0.0;
    }
  }

  /// Recomputes basic values from B^-1 (the artificial block) and reduced costs.
  void refresh() {
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      for (int k = 0; k < m_; ++k) v += at(i, n_ + k) * rhs_[k];
      for (int j = 0; j < width_; ++j)
        if (!is_basic_[j] && at_upper_[j]) v -= at(i, j) * range_[j];
      xb_[i] = v;
    }
    d_ = cost_;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &t_[static_cast<std::size_t>(i) * width_];
      for (int j = 0; j < width_; ++j) d_[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  Options opt_;
  int m_ = 0, n_ = 0, width_ = 0;
  std::vector<double> t_;
  std::vector<double> range_, rhs_, xb_, d_, cost_, lower_;
  std::vector<int> basis_;
  std::vector<bool> at_upper_, is_basic_;
  std::vector<int> nz_;
};

}  // namespace detail

inline Solution solve(const Problem& p, const Options& opt = {}) {
  Solution sol;
  detail::Tableau tab(p, opt);
  const long max_iter =
      opt.max_iterations > 0 ? opt.max_iterations : 50L * (p.variables() + p.constraints()) + 1000;

  std::vector<double> phase1(static_cast<std::size_t>(tab.width()), 0.0);
  for (int j = tab.structural(); j < tab.width(); ++j) phase1[j] = 1.0;
  if (p.constraints() > 0) {
    tab.run_phase(phase1, true, sol.iterations, max_iter);
    if (tab.artificial_sum() > opt.feasibility_tol) {
      sol.status = Status::Infeasible;
      return sol;
    }
    tab.drive_out_artificials();
  }
  std::vector<double> phase2(static_cast<std::size_t>(tab.width()), 0.0);
  for (int j = 0; j < p.variables(); ++j) phase2[j] = p.cost()[j];
  Status st = tab.run_phase(phase2, false, sol.iterations, max_iter);
  sol.status = st;
  if (st != Status::Optimal) return sol;
  sol.x = tab.values();
  sol.objective = p.objective(sol.x);
  sol.residual = p.primal_residual(sol.x);
  if (sol.residual > opt.feasibility_tol)
    throw SolverError("simplex: primal residual " + std::to_string(sol.residual) + " after " +
                      std::to_string(sol.iterations) + " iterations");
  return sol;
}

}  // namespace hems::lp
