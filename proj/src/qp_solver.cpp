// Copyright 2026 The dualgrasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dualgrasp/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dualgrasp::qp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRankTol = 1e-10;
constexpr double kDualTol = 1e-11;

double bound_of(const QpProblem& p, const ActiveBound& b) {
  return b.upper ? p.ub[b.row] : p.lb[b.row];
}

MatrixXd working_matrix(const QpProblem& p, const std::vector<ActiveBound>& w) {
  const int n = p.num_variables();
  const int m_eq = static_cast<int>(p.A_eq.rows());
  MatrixXd A(m_eq + static_cast<int>(w.size()), n);
  if (m_eq > 0) A.topRows(m_eq) = p.A_eq;
  for (size_t j = 0; j < w.size(); ++j) A.row(m_eq + j) = p.A_in.row(w[j].row);
  return A;
}

bool full_row_rank(const MatrixXd& A) {
  if (A.rows() == 0) return true;
  if (A.rows() > A.cols()) return false;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
  qr.setThreshold(kRankTol);
  return qr.rank() == A.rows();
}

struct EqpStep {
  VectorXd step;
  VectorXd multipliers;  // for the stacked working matrix, at x + step
};

// Null-space step for min 1/2 p'Hp + grad'p s.t. A p = 0.
EqpStep solve_eqp(const MatrixXd& H, const VectorXd& grad, const MatrixXd& A) {
  const Eigen::Index n = H.rows();
  const Eigen::Index m = A.rows();
  EqpStep out;
  if (m == 0) {
    out.step = -H.llt().solve(grad);
    out.multipliers.resize(0);
    return out;
  }
  Eigen::HouseholderQR<MatrixXd> qr(A.transpose());
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
  const MatrixXd R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  if (m < n) {
    const MatrixXd Z = Q.rightCols(n - m);
    const MatrixXd Hz = Z.transpose() * H * Z;
    out.step = -Z * Hz.llt().solve(Z.transpose() * grad);
  } else {
    out.step = VectorXd::Zero(n);
  }
  const VectorXd grad_new = grad + H * out.step;
  out.multipliers = R.triangularView<Eigen::Upper>().solve(
      Q.leftCols(m).transpose() * grad_new);
  return out;
}

// Particular solution of A_eq x = b_eq with minimum norm.
VectorXd equality_point(const QpProblem& p) {
  const int n = p.num_variables();
  if (p.A_eq.rows() == 0) return VectorXd::Zero(n);
  return p.A_eq.completeOrthogonalDecomposition().solve(p.b_eq);
}

double max_violation(const QpProblem& p, const VectorXd& x) {
  double v = 0.0;
  if (p.A_eq.rows() > 0) v = (p.A_eq * x - p.b_eq).lpNorm<Eigen::Infinity>();
  if (p.A_in.rows() > 0) {
    const VectorXd ax = p.A_in * x;
    for (Eigen::Index r = 0; r < ax.size(); ++r) {
      v = std::max({v, p.lb[r] - ax[r], ax[r] - p.ub[r]});
    }
  }
  return v;
}

struct CoreResult {
  VectorXd x;
  std::vector<ActiveBound> working;
  VectorXd multipliers;
  int iterations = 0;
  bool converged = false;
};

void try_add(const QpProblem& p, std::vector<ActiveBound>* w,
             const ActiveBound& b) {
  for (const auto& e : *w) {
    if (e.row == b.row) return;
  }
  w->push_back(b);
  if (!full_row_rank(working_matrix(p, *w))) w->pop_back();
}

// Primal active-set iterations from a feasible x.
CoreResult active_set_core(const QpProblem& p, const MatrixXd& H, VectorXd x,
                           std::vector<ActiveBound> w, int max_iterations) {
  const int m_eq = static_cast<int>(p.A_eq.rows());
  const int m_in = static_cast<int>(p.A_in.rows());
  CoreResult out;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    out.iterations = iter;
    const VectorXd grad = H * x + p.g;
    const EqpStep eqp = solve_eqp(H, grad, working_matrix(p, w));
    const double step_norm = eqp.step.lpNorm<Eigen::Infinity>();

    double alpha = 1.0;
    int blocking = -1;
    bool blocking_upper = false;
    if (step_norm > 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      const VectorXd ax = p.A_in * x;
      const VectorXd ap = p.A_in * eqp.step;
      for (int r = 0; r < m_in; ++r) {
        const bool in_working = std::any_of(
            w.begin(), w.end(), [r](const ActiveBound& b) { return b.row == r; });
        if (in_working) continue;
        const double scale = 1e-12 * (1.0 + p.A_in.row(r).lpNorm<Eigen::Infinity>() *
                                                step_norm);
        double candidate = kInf;
        bool upper = false;
        if (ap[r] < -scale && std::isfinite(p.lb[r])) {
          candidate = std::max(0.0, (p.lb[r] - ax[r]) / ap[r]);
        } else if (ap[r] > scale && std::isfinite(p.ub[r])) {
          candidate = std::max(0.0, (p.ub[r] - ax[r]) / ap[r]);
          upper = true;
        }
        if (candidate < alpha) {
          alpha = candidate;
          blocking = r;
          blocking_upper = upper;
        }
      }
      x += alpha * eqp.step;
    }
    if (blocking >= 0) {
      w.push_back({blocking, blocking_upper});
      continue;
    }

    // x now minimizes over the working set; the multipliers refer to it.
    {
      int drop = -1;
      double worst = -kDualTol * (1.0 + grad.lpNorm<Eigen::Infinity>());
      for (size_t j = 0; j < w.size(); ++j) {
        const double mu = eqp.multipliers[m_eq + j];
        const double signed_mu = w[j].upper ? -mu : mu;
        if (signed_mu < worst) {
          worst = signed_mu;
          drop = static_cast<int>(j);
        }
      }
      if (drop < 0) {
        out.x = x;
        out.working = w;
        out.multipliers = eqp.multipliers;
        out.converged = true;
        return out;
      }
      w.erase(w.begin() + drop);
    }
  }
  out.x = x;
  out.working = w;
  out.multipliers = VectorXd::Zero(m_eq + static_cast<Eigen::Index>(w.size()));
  return out;
}

MatrixXd regularized(const MatrixXd& H, double reg) {
  MatrixXd out = 0.5 * (H + H.transpose());
  // relative to the objective scale so that solutions are scale invariant
  const double scale = out.diagonal().cwiseAbs().maxCoeff();
  out.diagonal().array() += reg * (scale > 0.0 ? scale : 1.0);
  return out;
}

// Elastic problem: original objective plus penalty * t + t^2 / 2 with every
// inequality relaxed by a shared slack t >= 0.
QpProblem elastic_problem(const QpProblem& p, double penalty) {
  const int n = p.num_variables();
  const int m_eq = static_cast<int>(p.A_eq.rows());
  const int m_in = static_cast<int>(p.A_in.rows());
  QpProblem e(n + 1, m_eq, 2 * m_in + 1);
  e.H.topLeftCorner(n, n) = p.H;
  e.H(n, n) = 1.0;
  e.g.head(n) = p.g;
  e.g[n] = penalty;
  if (m_eq > 0) {
    e.A_eq.leftCols(n) = p.A_eq;
    e.b_eq = p.b_eq;
  }
  for (int r = 0; r < m_in; ++r) {
    e.A_in.row(r).head(n) = p.A_in.row(r);
    e.A_in(r, n) = 1.0;
    e.lb[r] = p.lb[r];
    e.ub[r] = kInf;
    e.A_in.row(m_in + r).head(n) = p.A_in.row(r);
    e.A_in(m_in + r, n) = -1.0;
    e.lb[m_in + r] = -kInf;
    e.ub[m_in + r] = p.ub[r];
  }
  e.A_in(2 * m_in, n) = 1.0;
  e.lb[2 * m_in] = 0.0;
  e.ub[2 * m_in] = kInf;
  return e;
}

}  // namespace

QpProblem::QpProblem(int num_vars, int num_eq, int num_in)
    : H(MatrixXd::Zero(num_vars, num_vars)),
      g(VectorXd::Zero(num_vars)),
      A_eq(MatrixXd::Zero(num_eq, num_vars)),
      b_eq(VectorXd::Zero(num_eq)),
      A_in(MatrixXd::Zero(num_in, num_vars)),
      lb(VectorXd::Constant(num_in, -kInf)),
      ub(VectorXd::Constant(num_in, kInf)) {}

void QpProblem::validate() const {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n) throw std::invalid_argument("H must be n x n");
  if (A_eq.cols() != n && A_eq.rows() > 0) throw std::invalid_argument("A_eq has wrong width");
  if (A_eq.rows() != b_eq.size()) throw std::invalid_argument("b_eq size mismatch");
  if (A_in.cols() != n && A_in.rows() > 0) throw std::invalid_argument("A_in has wrong width");
  if (A_in.rows() != lb.size() || A_in.rows() != ub.size()) {
    throw std::invalid_argument("bound size mismatch");
  }
  if ((H - H.transpose()).lpNorm<Eigen::Infinity>() >
      1e-12 * (1.0 + H.lpNorm<Eigen::Infinity>())) {
    throw std::invalid_argument("H must be symmetric");
  }
  for (Eigen::Index r = 0; r < lb.size(); ++r) {
    if (lb[r] > ub[r]) throw std::invalid_argument("lb must not exceed ub");
  }
  if (!full_row_rank(A_eq)) throw std::invalid_argument("A_eq must have full row rank");
}

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kMaxIter:
      return "max_iter";
  }
  return "unknown";
}

double kkt_residual(const QpProblem& p, const VectorXd& x,
                    const VectorXd& eq_multipliers,
                    const VectorXd& in_multipliers, double regularization) {
  VectorXd stationarity = regularized(p.H, regularization) * x + p.g;
  if (p.A_eq.rows() > 0) stationarity -= p.A_eq.transpose() * eq_multipliers;
  if (p.A_in.rows() > 0) stationarity -= p.A_in.transpose() * in_multipliers;
  double res = stationarity.lpNorm<Eigen::Infinity>();
  res = std::max(res, max_violation(p, x));
  if (p.A_in.rows() > 0) {
    const VectorXd ax = p.A_in * x;
    for (Eigen::Index r = 0; r < ax.size(); ++r) {
      const double mu = in_multipliers[r];
      if (mu > 0.0) {
        res = std::max(res, std::isfinite(p.lb[r]) ? mu * std::abs(ax[r] - p.lb[r]) : mu);
      } else if (mu < 0.0) {
        res = std::max(res, std::isfinite(p.ub[r]) ? -mu * std::abs(ax[r] - p.ub[r]) : -mu);
      }
    }
  }
  return res;
}

QpSolution solve(const QpProblem& problem, const QpWarmStart* warm_start,
                 const QpOptions& options) {
  problem.validate();
  const int n = problem.num_variables();
  const int m_eq = static_cast<int>(problem.A_eq.rows());
  const int m_in = static_cast<int>(problem.A_in.rows());
  const MatrixXd H = regularized(problem.H, options.regularization);

  QpSolution sol;
  VectorXd x;
  std::vector<ActiveBound> working;
  int iterations = 0;

  if (warm_start != nullptr && warm_start->x.size() == n &&
      max_violation(problem, warm_start->x) <= options.tol_feas) {
    x = warm_start->x;
    const VectorXd ax = problem.A_in * x;
    for (const auto& b : warm_start->active_set) {
      if (b.row < 0 || b.row >= m_in) continue;
      if (std::abs(ax[b.row] - bound_of(problem, b)) <= options.tol_feas) {
        try_add(problem, &working, b);
      }
    }
  } else {
    // Equality-feasible minimizer, then an elastic phase if it violates bounds.
    x = equality_point(problem);
    const EqpStep s = solve_eqp(H, H * x + problem.g, problem.A_eq);
    x += s.step;
    const double violation = max_violation(problem, x);
    if (violation > options.tol_feas) {
      double penalty = 1e3 * (1.0 + problem.g.lpNorm<Eigen::Infinity>() +
                              H.lpNorm<Eigen::Infinity>() *
                                  (1.0 + x.lpNorm<Eigen::Infinity>()));
      VectorXd y(n + 1);
      y.head(n) = x;
      y[n] = violation;
      std::vector<ActiveBound> w_elastic;
      bool feasible = false;
      for (; penalty < 1e18; penalty *= 1e3) {
        const QpProblem e = elastic_problem(problem, penalty);
        CoreResult r = active_set_core(e, regularized(e.H, options.regularization),
                                       y, w_elastic,
                                       options.max_iterations - iterations);
        iterations += r.iterations;
        y = r.x;
        w_elastic = r.working;
        if (!r.converged) {
          sol.x = y.head(n);
          sol.status = QpStatus::kMaxIter;
          sol.iterations = iterations;
          sol.eq_multipliers = VectorXd::Zero(m_eq);
          sol.in_multipliers = VectorXd::Zero(m_in);
          sol.kkt_residual = kInf;
          return sol;
        }
        if (y[n] <= options.tol_feas) {
          feasible = true;
          break;
        }
      }
      if (!feasible) {
        sol.x = y.head(n);
        sol.status = QpStatus::kInfeasible;
        sol.iterations = iterations;
        sol.eq_multipliers = VectorXd::Zero(m_eq);
        sol.in_multipliers = VectorXd::Zero(m_in);
        sol.kkt_residual = kInf;
        return sol;
      }
      x = y.head(n);
      for (const auto& b : w_elastic) {
        if (b.row < m_in) {
          try_add(problem, &working, {b.row, false});
        } else if (b.row < 2 * m_in) {
          try_add(problem, &working, {b.row - m_in, true});
        }
      }
    }
  }

  CoreResult r = active_set_core(problem, H, x, working,
                                 std::max(1, options.max_iterations - iterations));
  sol.x = r.x;
  sol.iterations = iterations + r.iterations;
  sol.active_set = r.working;
  sol.eq_multipliers = VectorXd::Zero(m_eq);
  sol.in_multipliers = VectorXd::Zero(m_in);
  if (r.converged) {
    sol.eq_multipliers = r.multipliers.head(m_eq);
    for (size_t j = 0; j < r.working.size(); ++j) {
      sol.in_multipliers[r.working[j].row] = r.multipliers[m_eq + j];
    }
  }
  sol.kkt_residual = kkt_residual(problem, sol.x, sol.eq_multipliers,
                                  sol.in_multipliers, options.regularization);
  if (!r.converged) {
    sol.status = QpStatus::kMaxIter;
  } else {
    sol.status = QpStatus::kOptimal;
  }
  return sol;
}

void write_problem(std::ostream& os, const QpProblem& p) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n");
  os << "# n " << p.num_variables() << " m_eq " << p.A_eq.rows() << " m_in "
     << p.A_in.rows() << "\n";
  os << "H\n" << p.H.format(fmt) << "\n";
  os << "g\n" << p.g.transpose().format(fmt) << "\n";
  os << "A_eq\n" << p.A_eq.format(fmt) << "\n";
  os << "b_eq\n" << p.b_eq.transpose().format(fmt) << "\n";
  os << "A_in\n" << p.A_in.format(fmt) << "\n";
  os << "lb\n" << p.lb.transpose().format(fmt) << "\n";
  os << "ub\n" << p.ub.transpose().format(fmt) << "\n";
}

}  // namespace dualgrasp::qp
