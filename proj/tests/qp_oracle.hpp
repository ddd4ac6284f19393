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


#ifndef DUALGRASP_TESTS_QP_ORACLE_HPP_
#define DUALGRASP_TESTS_QP_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dualgrasp/qp_solver.hpp"

namespace dualgrasp::qp::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Strictly convex random QP: box rows on every variable (some one-sided),
// optionally one equality and two general two-sided rows.
inline QpProblem random_problem(std::mt19937& rng, int n, bool with_equality,
                         bool with_general_rows) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  const int m_eq = with_equality ? 1 : 0;
  const int m_gen = with_general_rows ? 2 : 0;
  QpProblem p(n, m_eq, n + m_gen);
  MatrixXd B(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) B(r, c) = nd(rng);
  p.H = B.transpose() * B + 0.05 * MatrixXd::Identity(n, n);
  for (int r = 0; r < n; ++r) p.g[r] = 3.0 * nd(rng);
  if (with_equality) {
    for (int c = 0; c < n; ++c) p.A_eq(0, c) = nd(rng);
    p.b_eq[0] = 0.2 * nd(rng);
  }
  for (int r = 0; r < n; ++r) {
    p.A_in(r, r) = 1.0;
    const double a = ud(rng);
    const double b = ud(rng);
    p.lb[r] = std::min(a, b) - 0.5;
    p.ub[r] = std::max(a, b);
    if (r % 3 == 2) p.lb[r] = -kInf;
  }
  for (int r = n; r < n + m_gen; ++r) {
    for (int c = 0; c < n; ++c) p.A_in(r, c) = nd(rng);
    p.lb[r] = -1.0 - std::abs(nd(rng));
    p.ub[r] = 1.0 + std::abs(nd(rng));
  }
  return p;
}

inline double objective(const QpProblem& p, const VectorXd& x) {
  return 0.5 * x.dot(p.H * x) + p.g.dot(x);
}

// Enumerates every (inactive | lower | upper) assignment, solves the KKT
// system of each, and keeps the best primal-feasible point.
inline VectorXd brute_force(const QpProblem& p, bool* found) {
  const int n = p.num_variables();
  const int m_eq = static_cast<int>(p.A_eq.rows());
  const int m_in = static_cast<int>(p.A_in.rows());
  int combos = 1;
  for (int r = 0; r < m_in; ++r) combos *= 3;
  double best = kInf;
  VectorXd best_x;
  for (int code = 0; code < combos; ++code) {
    std::vector<int> rows;
    std::vector<double> rhs;
    int c = code;
    bool valid = true;
    for (int r = 0; r < m_in; ++r) {
      const int s = c % 3;
      c /= 3;
      if (s == 1) {
        if (!std::isfinite(p.lb[r])) valid = false;
        rows.push_back(r);
        rhs.push_back(p.lb[r]);
      } else if (s == 2) {
        if (!std::isfinite(p.ub[r])) valid = false;
        rows.push_back(r);
        rhs.push_back(p.ub[r]);
      }
    }
    const int m = m_eq + static_cast<int>(rows.size());
    if (!valid || m > n) continue;
    MatrixXd K = MatrixXd::Zero(n + m, n + m);
    VectorXd k = VectorXd::Zero(n + m);
    K.topLeftCorner(n, n) = p.H;
    k.head(n) = -p.g;
    MatrixXd A(m, n);
    VectorXd b(m);
    if (m_eq > 0) {
      A.topRows(m_eq) = p.A_eq;
      b.head(m_eq) = p.b_eq;
    }
    for (size_t j = 0; j < rows.size(); ++j) {
      A.row(m_eq + j) = p.A_in.row(rows[j]);
      b[m_eq + j] = rhs[j];
    }
    K.topRightCorner(n, m) = A.transpose();
    K.bottomLeftCorner(m, n) = A;
    k.tail(m) = b;
    Eigen::FullPivLU<MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const VectorXd x = lu.solve(k).head(n);
    bool feasible = true;
    if (m_eq > 0 && (p.A_eq * x - p.b_eq).lpNorm<Eigen::Infinity>() > 1e-9) feasible = false;
    const VectorXd ax = p.A_in * x;
    for (int r = 0; r < m_in && feasible; ++r) {
      if (ax[r] < p.lb[r] - 1e-10 || ax[r] > p.ub[r] + 1e-10) feasible = false;
    }
    if (feasible && objective(p, x) < best) {
      best = objective(p, x);
      best_x = x;
    }
  }
  *found = std::isfinite(best);
  return best_x;
}

}  // namespace dualgrasp::qp::oracle

#endif  // DUALGRASP_TESTS_QP_ORACLE_HPP_
