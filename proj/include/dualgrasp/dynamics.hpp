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

#ifndef DUALGRASP_DYNAMICS_HPP_
#define DUALGRASP_DYNAMICS_HPP_

#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace dualgrasp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat13 = Eigen::Matrix<double, 1, 3>;
using Mat43 = Eigen::Matrix<double, 4, 3>;

inline constexpr int kNumRobots = 2;
inline constexpr int kNumContacts = 4;
inline constexpr double kPi = 3.14159265358979323846;

// Planar rotation by angle.
inline Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// 90 degree rotation, S * v = (-v.y, v.x).
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

// Scalar 2D cross product a x b.
inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
};

// Geometry and inertia of one planar 3-DOF arm. Joint j rotates link j about
// the distal end of link j-1; link 0 starts at the base.
struct RobotParams {
  std::array<double, 3> link_lengths{0.3, 0.3, 0.15};
  std::array<double, 3> link_masses{2.0, 1.5, 0.5};
  // About the link COM. Defaults are slender rods, m l^2 / 12.
  std::array<double, 3> link_inertias{0.015, 0.01125, 0.0009375};
  // Distance of the COM from the proximal joint, along the link.
  std::array<double, 3> com_offsets{0.15, 0.15, 0.075};
  Pose2 base{};
  // Half the distance between the two contact points on the end-effector face.
  double ee_half_width = 0.05;
  std::array<double, 3> joint_damping{0.05, 0.05, 0.05};

  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct BoxParams {
  double width = 0.3;
  double height = 0.2;
  double mass = 1.0;
  double inertia = 1.0 * (0.3 * 0.3 + 0.2 * 0.2) / 12.0;
  // Signed gravity along world y, shared by box and links.
  double gravity = 0.0;

  void validate() const;
};

// Elastic transmission between motor and link plus the low-level joint torque
// loop u = tau_d + K_T (tau_d - tau_J) - K_S dtau_J.
struct FlexibleJointParams {
  double stiffness = 5000.0;
  double damping = 5.0;
  double torque_gain = 2.0;
  double torque_rate_gain = 0.01;
  double motor_inertia = 0.005;

  void validate() const;
};

// Link-side joint state. The motor-side entries are only integrated in the
// flexible model; in rigid mode they mirror the link side.
struct RobotState {
  Vec3 q = Vec3::Zero();
  Vec3 dq = Vec3::Zero();
  Vec3 motor_q = Vec3::Zero();
  Vec3 motor_dq = Vec3::Zero();
};

struct BoxState {
  Vec2 p = Vec2::Zero();
  double theta = 0.0;
  Vec2 dp = Vec2::Zero();
  double dtheta = 0.0;

  Vec3 pose() const { return {p.x(), p.y(), theta}; }
  Vec3 twist() const { return {dp.x(), dp.y(), dtheta}; }
};

struct EndEffectorPose {
  Vec2 p = Vec2::Zero();
  double theta = 0.0;
};

struct RobotJacobians {
  Mat23 J_p = Mat23::Zero();
  Mat13 J_theta = Mat13::Zero();
  Mat23 dJ_p = Mat23::Zero();
  Mat13 dJ_theta = Mat13::Zero();
};

struct MassBias {
  Mat3 M = Mat3::Zero();
  Vec3 h = Vec3::Zero();
};

EndEffectorPose forward_kinematics(const RobotParams& params, const Vec3& q);

RobotJacobians jacobians(const RobotParams& params, const Vec3& q,
                         const Vec3& dq);

// M(q) and h(q, dq) = Coriolis/centrifugal + gravity + viscous damping.
MassBias mass_bias(const RobotParams& params, const Vec3& q, const Vec3& dq,
                   double gravity);

MassBias box_mass_bias(const BoxParams& params);

// Kinetic plus potential energy of one arm (damping ignored).
double mechanical_energy(const RobotParams& params, const Vec3& q,
                         const Vec3& dq, double gravity);

// Analytic inverse kinematics for a desired end-effector pose. `elbow` picks
// the sign of q2. Returns false when the wrist point is out of reach.
bool inverse_kinematics(const RobotParams& params, const EndEffectorPose& pose,
                        double elbow, Vec3* q);

// Low-level joint torque law of the flexible model. Returns the saturated
// motor torque.
Vec3 flexible_joint_step_inputs(const FlexibleJointParams& params,
                                const RobotState& state, const Vec3& tau_desired,
                                double tau_min, double tau_max);

// Transmission torque K_s (q_m - q) + D_s (dq_m - dq).
Vec3 transmission_torque(const FlexibleJointParams& params,
                         const RobotState& state);

// ---------------------------------------------------------------------------
// Contact kinematics.
//
// Contact points 1, 2 (indices 0, 1) sit on robot 1's end-effector face and
// 3, 4 (indices 2, 3) on robot 2's, at +/- ee_half_width along the end-effector
// y axis (first point of each pair at +). Robot 1 presses on the box face
// with outward normal -x_b, robot 2 on the face with outward normal +x_b.
//
// Gap rate and slip rate are
//   dgamma_k = J_N,i dq_i - J_N,b dq_b,   dsigma_k = J_T,i dq_i - J_T,b dq_b,
// so a normal force lambda_N >= 0 enters the equations of motion as
// +J_N,i^T lambda_N on the robot and -J_N,b^T lambda_N on the box. Tangential
// forces enter with the opposite signs (-J_T,i^T on the robot, +J_T,b^T on
// the box) so that a positive friction law value opposes positive slip.
// ---------------------------------------------------------------------------

struct ContactKinematics {
  std::array<Vec2, kNumContacts> point{};       // world position on the robot
  std::array<Vec2, kNumContacts> normal{};      // outward box-face normal
  std::array<double, kNumContacts> gap{};       // signed, negative = penetration
  std::array<double, kNumContacts> tangent_coord{};  // along the face, box frame
  std::array<double, kNumContacts> gap_rate{};
  std::array<double, kNumContacts> slip_rate{};
  // Rows k of J_N,i / J_T,i are zero unless contact k belongs to robot i.
  std::array<Mat43, kNumRobots> J_N{};
  std::array<Mat43, kNumRobots> J_T{};
  Mat43 J_Nb = Mat43::Zero();
  Mat43 J_Tb = Mat43::Zero();
  // dJ * dq terms: d2gamma = J_N,i ddq_i - J_N,b ddq_b + gap_drift.
  Eigen::Vector4d gap_drift = Eigen::Vector4d::Zero();
  Eigen::Vector4d slip_drift = Eigen::Vector4d::Zero();
};

inline int robot_of_contact(int k) { return k / 2; }

ContactKinematics contact_jacobians(const std::array<RobotParams, 2>& robots,
                                    const std::array<RobotState, 2>& states,
                                    const BoxParams& box,
                                    const BoxState& box_state);

}  // namespace dualgrasp

#endif  // DUALGRASP_DYNAMICS_HPP_
