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


#ifndef DUALGRASP_SIM_HPP_
#define DUALGRASP_SIM_HPP_

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualgrasp/contact.hpp"
#include "dualgrasp/controller.hpp"
#include "dualgrasp/dynamics.hpp"

namespace dualgrasp {

enum class SimMode { kRigid, kFlexible };
const char* to_string(SimMode mode);
SimMode parse_sim_mode(const std::string& name);

// The true world. In flexible mode the commanded torque is the desired joint
// torque of the low-level loop; in rigid mode it acts on the links directly.
struct WorldParams {
  std::array<RobotParams, kNumRobots> robots{};
  BoxParams box{};
  ContactParams contact{};
  FlexibleJointParams flexible{};
  SimMode mode = SimMode::kRigid;
  double tau_min = -40.0;
  double tau_max = 40.0;
};

struct WorldState {
  double t = 0.0;
  std::array<RobotState, kNumRobots> robots{};
  BoxState box{};
};

struct SimConfig {
  double dt_integrator = 1e-4;
  double dt_control = 1e-3;
  double horizon = 3.0;
  SimMode mode = SimMode::kFlexible;
  // Applied to the true box only.
  double perturb_angle = 0.0;  // rad
  double perturb_y = 0.0;      // m
  double success_tolerance = 2e-3;
  double success_angle_tolerance = kPi / 180.0;
  double success_hold = 0.1;
  bool stop_on_success = true;
  int substeps() const;
  void validate() const;
};

class NonFiniteState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ContactSet world_contacts(const WorldParams& params, const WorldState& state);

// Generalised accelerations of both arms and the box (and motor
// accelerations in flexible mode) for a held torque command.
struct WorldRates {
  std::array<Vec3, kNumRobots> ddq{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, kNumRobots> motor_ddq{Vec3::Zero(), Vec3::Zero()};
  Vec3 ddq_b = Vec3::Zero();
  ContactSet contacts{};
};
WorldRates world_rates(const WorldParams& params, const WorldState& state,
                       const std::array<Vec3, kNumRobots>& tau);

// One classical RK4 step. Throws NonFiniteState on blow-up.
WorldState step(const WorldParams& params, const WorldState& state,
                const std::array<Vec3, kNumRobots>& tau, double dt);

// Task error columns of the log; a column is zero when its task is inactive.
inline constexpr std::array<const char*, 9> kTaskColumns{
    "p1", "p2", "theta1", "theta2", "sync", "box_p", "box_theta", "lambda",
    "normal"};

struct LogRecord {
  double t = 0.0;
  Phase phase = Phase::kAnte;
  std::array<RobotState, kNumRobots> robots{};
  std::array<Vec2, kNumRobots> ee_p{};
  std::array<double, kNumRobots> ee_theta{};
  std::array<Vec2, kNumRobots> ee_v{};
  std::array<double, kNumRobots> ee_w{};
  std::array<Vec2, kNumRobots> ee_v_ref{};
  BoxState box{};
  BoxState box_estimate{};
  Vec3 box_ref = Vec3::Zero();
  ContactSet contacts{};
  std::array<Vec3, kNumRobots> tau{};
  std::array<double, kTaskColumns.size()> task_errors{};
  qp::QpStatus status = qp::QpStatus::kOptimal;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool fault = false;
};

struct EpisodeLog {
  std::vector<LogRecord> records;
  bool success = false;
  double success_time = kNaN;
  bool fault = false;
  std::string fault_message;
  PhaseState final_phase{};
};

// Success test on the estimated box pose: within tolerance of the goal,
// in the post phase, for at least the hold time.
class GoalMonitor {
 public:
  GoalMonitor(const Pose2& goal, const SimConfig& sim);
  // Feed records in time order; true once the hold time has elapsed.
  bool update(const LogRecord& rec);

 private:
  Pose2 goal_;
  double tolerance_;
  double angle_tolerance_;
  double hold_;
  double since_ = kNaN;
};

struct EpisodeSetup {
  WorldParams world{};
  SimConfig sim{};
  ControllerSetup controller{};
  WorldState initial{};
};

// Controller every dt_control, RK4 substeps in between. Stops at the horizon,
// after the box estimate has stayed at the goal for success_hold, or on a
// controller fault / non-finite state.
EpisodeLog run_episode(const EpisodeSetup& setup);

void write_log_csv(std::ostream& os, const EpisodeLog& log);
// Inverse of write_log_csv for the logged columns (robot motor states and
// the summary flags are not restored).
EpisodeLog read_log_csv(std::istream& is);

}  // namespace dualgrasp

#endif  // DUALGRASP_SIM_HPP_
