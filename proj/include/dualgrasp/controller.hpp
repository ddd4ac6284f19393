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


#ifndef DUALGRASP_CONTROLLER_HPP_
#define DUALGRASP_CONTROLLER_HPP_

#include <array>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualgrasp/contact.hpp"
#include "dualgrasp/dynamics.hpp"
#include "dualgrasp/fields.hpp"
#include "dualgrasp/predictor.hpp"
#include "dualgrasp/qp_solver.hpp"

namespace dualgrasp {

enum class Phase { kAnte = 0, kInterim = 1, kPost = 2 };
const char* to_string(Phase phase);

// kNoImpactMap: the post-impact field is the pure attractor.
// kNoInterim: stay in the ante-impact QP until contact is complete.
enum class Variant { kProposed, kNoImpactMap, kNoInterim };
const char* to_string(Variant variant);
Variant parse_variant(const std::string& name);

// kGap uses the simulator's gap sign, kForce a 1 N normal-force threshold.
enum class ImpactDetector { kGap, kForce };

struct ControllerGains {
  double k_sync_pp = 50.0;
  double k_sync_pd = 10.0;
  double k_a_p = 20.0;
  double k_a_theta = 20.0;
  double k_int_p = 100.0;
  double k_int_theta = 100.0;
  double k_p_p = 20.0;
  double k_p_theta = 20.0;
  double w_a_p = 1.0;
  double w_a_theta = 1.0;
  double w_a_s = 2.0;
  double w_p_p = 1.0;
  double w_p_theta = 1.0;
  double w_p_lambda = 0.1;
  double w_p_n = 1e-4;
  double tau_min = -40.0;
  double tau_max = 40.0;
  double dt = 1e-3;
  double mu_est = 0.5;
  double eps_n = 2.0;     // lower bound on the commanded normal forces
  double t_hold = 0.005;  // full-contact debounce
  double force_threshold = 1.0;
  // Gains must be positive; weights may be zero to switch a task off.
  void validate(double mu) const;
};

struct PostFieldSettings {
  Pose2 goal{};
  double linear_gain = 2.0;
  double angular_gain = 2.0;
  double r_max_cap = 0.05;
};

// Everything the controller knows about the world. Box quantities are the
// a-priori estimate, never the true box.
struct ControllerSetup {
  std::array<RobotParams, kNumRobots> robots{};
  BoxParams box{};
  Pose2 box_estimate{};
  AnteFieldParams ante{};
  PostFieldSettings post{};
  ControllerGains gains{};
  Variant variant = Variant::kProposed;
  ImpactDetector detector = ImpactDetector::kGap;
  // Never leave the ante-impact phase (offline impact sampling).
  bool ante_only = false;
  const RbfModel* predictor = nullptr;
  void validate(double mu) const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PhaseState {
  Phase phase = Phase::kAnte;
  double t_int = kNaN;
  std::array<Vec2, kNumRobots> p_int{Vec2::Zero(), Vec2::Zero()};
  std::array<double, kNumRobots> theta_int{0.0, 0.0};
  std::array<double, kNumRobots> impact_times{kNaN, kNaN};
  double full_contact_since = kNaN;
  double t_post = kNaN;
  // Frozen at post-impact entry.
  Vec2 y_minus = Vec2::Zero();
  Vec2 p_b_plus = Vec2::Zero();
  Vec3 dq_b_plus = Vec3::Zero();
  PostFieldParams post{};
  std::array<Vec3, kNumRobots> last_tau{Vec3::Zero(), Vec3::Zero()};
  bool fault = false;
  qp::QpWarmStart warm{};
  Phase warm_phase = Phase::kAnte;
};

// Decision vector layouts.
namespace layout {
inline constexpr int kAnteVars = 12;  // ddq1, ddq2, tau1, tau2
inline int ante_ddq(int robot) { return 3 * robot; }
inline int ante_tau(int robot) { return 6 + 3 * robot; }
inline constexpr int kPostVars = 23;  // ddq1, ddq2, ddqb, tau1, tau2, lN, lT
inline int post_ddq(int robot) { return 3 * robot; }
inline constexpr int kPostDdqb = 6;
inline int post_tau(int robot) { return 9 + 3 * robot; }
inline constexpr int kPostLambdaN = 15;
inline constexpr int kPostLambdaT = 19;
}  // namespace layout

// A least-squares task w |A x - b|^2.
struct Task {
  std::string name;
  double weight = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct ControlQp {
  qp::QpProblem problem;
  std::vector<Task> tasks;
};

// Adds w |A x - b|^2 to 1/2 x'Hx + g'x.
void add_task(const Task& task, qp::QpProblem* problem);

// p_2m = T_s (p_2 - p_b) + p_b, T_s the reflection across the box y axis.
Vec2 mirror_pose(const Vec2& p2, const Pose2& box_estimate, Mat2* T_s = nullptr);

ControlQp build_ante_qp(const ControllerSetup& setup,
                        const std::array<RobotState, kNumRobots>& states);

// One explicit Euler step of the interim position/orientation references
// along the ante-impact fields.
void update_interim_ref(const AnteFieldParams& fields, double dt,
                        PhaseState* state);

// [J_p; J_theta]^-1 [field_p; field_theta]. Falls back to damped least
// squares (and sets `damped`) near singular configurations.
Vec3 nominal_joint_velocity(const RobotParams& params, const Vec3& q, int robot,
                            const AnteFieldParams& fields,
                            bool* damped = nullptr);

// Depends on the measured configurations only, never on measured velocities.
ControlQp build_interim_qp(const ControllerSetup& setup,
                           const std::array<RobotState, kNumRobots>& states,
                           const PhaseState& phase_state);

// Midpoint of the end effectors; robot 2's angle is shifted by pi before
// averaging.
BoxState estimate_box_state(const std::array<RobotParams, kNumRobots>& robots,
                            const std::array<RobotState, kNumRobots>& states);

ControlQp build_post_qp(const ControllerSetup& setup,
                        const std::array<RobotState, kNumRobots>& states,
                        const PostFieldParams& fields);

bool contact_closed(const ContactPoint& c, const ControllerSetup& setup);

// Advances the phase machine; returns true when post-impact was entered.
bool phase_switch(const ControllerSetup& setup, const ContactSet& contacts,
                  double t, PhaseState* state);

struct ControlOutput {
  std::array<Vec3, kNumRobots> tau{Vec3::Zero(), Vec3::Zero()};
  Phase phase = Phase::kAnte;
  qp::QpStatus status = qp::QpStatus::kOptimal;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool fault = false;
  // References seen by the active QP, for logging.
  std::array<Vec2, kNumRobots> ee_velocity_ref{Vec2::Zero(), Vec2::Zero()};
  std::array<double, kNumRobots> ee_angular_ref{0.0, 0.0};
  BoxState box_estimate{};
  Vec3 box_ref = Vec3::Zero();
  std::vector<std::pair<std::string, double>> task_errors;
  Eigen::VectorXd solution;
};

// One controller period: phase switching, interim bookkeeping, QP build and
// solve. Holds the previous torque and flags a fault if the QP fails.
ControlOutput control_step(const ControllerSetup& setup, double t,
                           const std::array<RobotState, kNumRobots>& states,
                           const ContactSet& contacts, PhaseState* state);

}  // namespace dualgrasp

#endif  // DUALGRASP_CONTROLLER_HPP_
