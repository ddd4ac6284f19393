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

#ifndef DUALGRASP_QP_SOLVER_HPP_
#define DUALGRASP_QP_SOLVER_HPP_

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace dualgrasp::qp {

// minimize 1/2 x'Hx + g'x  s.t.  A_eq x = b_eq,  lb <= A_in x <= ub.
// Infinite bounds are allowed. A_eq must have full row rank.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  QpProblem() = default;
  QpProblem(int num_vars, int num_eq, int num_in);

  int num_variables() const { return static_cast<int>(g.size()); }
  void validate() const;
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIter };

const char* to_string(QpStatus status);

struct ActiveBound {
  int row = 0;
  bool upper = false;

  bool operator==(const ActiveBound&) const = default;
};

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::kMaxIter;
  double kkt_residual = 0.0;
  std::vector<ActiveBound> active_set;
  Eigen::VectorXd eq_multipliers;
  // Signed: positive pushes along +a_r (lower bound active), negative for
  // an active upper bound, zero when inactive.
  Eigen::VectorXd in_multipliers;
  int iterations = 0;
};

struct QpWarmStart {
  Eigen::VectorXd x;
  std::vector<ActiveBound> active_set;
};

struct QpOptions {
  int max_iterations = 200;
  double regularization = 1e-9;
  double tol_kkt = 1e-8;
  double tol_feas = 1e-8;
};

QpSolution solve(const QpProblem& problem, const QpWarmStart* warm_start = nullptr,
                 const QpOptions& options = {});

// Stationarity, primal/dual feasibility and complementarity of `x` with the
// given multipliers, as a max-norm. Uses H + regularization I.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& eq_multipliers,
                    const Eigen::VectorXd& in_multipliers,
                    double regularization);

// Plain-text matrix dump for offline inspection.
void write_problem(std::ostream& os, const QpProblem& problem);

}  // namespace dualgrasp::qp

#endif  // DUALGRASP_QP_SOLVER_HPP_
