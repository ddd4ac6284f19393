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

#include "dualgrasp/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dualgrasp {
namespace {

Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// Cumulative joint angles phi_j = theta_base + q_0 + ... + q_j.
std::array<double, 3> absolute_angles(const RobotParams& params,
                                      const Vec3& q) {
  std::array<double, 3> phi{};
  double acc = params.base.theta;
  for (int j = 0; j < 3; ++j) {
    acc += q[j];
    phi[j] = acc;
  }
  return phi;
}

std::array<double, 3> absolute_rates(const Vec3& dq) {
  return {dq[0], dq[0] + dq[1], dq[0] + dq[1] + dq[2]};
}

// World positions of the three joint axes.
std::array<Vec2, 3> joint_positions(const RobotParams& params,
                                    const std::array<double, 3>& phi) {
  std::array<Vec2, 3> joints;
  joints[0] = params.base.position();
  for (int j = 1; j < 3; ++j) {
    joints[j] = joints[j - 1] + params.link_lengths[j - 1] * unit(phi[j - 1]);
  }
  return joints;
}

}  // namespace

void RobotParams::validate() const {
  for (int j = 0; j < 3; ++j) {
    require(link_lengths[j] > 0.0, "link lengths must be positive");
    require(link_masses[j] > 0.0, "link masses must be positive");
    require(link_inertias[j] > 0.0, "link inertias must be positive");
    require(joint_damping[j] >= 0.0, "joint damping must be nonnegative");
  }
  require(ee_half_width > 0.0, "ee_half_width must be positive");
}

void BoxParams::validate() const {
  require(width > 0.0 && height > 0.0, "box dimensions must be positive");
  require(mass > 0.0 && inertia > 0.0, "box mass and inertia must be positive");
}

void FlexibleJointParams::validate() const {
  require(stiffness > 0.0, "transmission stiffness must be positive");
  require(damping >= 0.0 && torque_gain >= 0.0 && torque_rate_gain >= 0.0,
          "flexible joint gains must be nonnegative");
  require(motor_inertia > 0.0, "motor inertia must be positive");
}

EndEffectorPose forward_kinematics(const RobotParams& params, const Vec3& q) {
  const auto phi = absolute_angles(params, q);
  Vec2 p = params.base.position();
  for (int j = 0; j < 3; ++j) p += params.link_lengths[j] * unit(phi[j]);
  return {p, phi[2]};
}

RobotJacobians jacobians(const RobotParams& params, const Vec3& q,
                         const Vec3& dq) {
  const auto phi = absolute_angles(params, q);
  const auto dphi = absolute_rates(dq);
  const auto joints = joint_positions(params, phi);
  const Vec2 p = forward_kinematics(params, q).p;

  RobotJacobians out;
  out.J_theta << 1.0, 1.0, 1.0;
  for (int k = 0; k < 3; ++k) {
    out.J_p.col(k) = perp(p - joints[k]);
    // d/dt of sum_{j>=k} l_j perp(u_j) = -sum_{j>=k} l_j dphi_j u_j
    Vec2 d = Vec2::Zero();
    for (int j = k; j < 3; ++j) {
      d -= params.link_lengths[j] * dphi[j] * unit(phi[j]);
    }
    out.dJ_p.col(k) = d;
  }
  return out;
}

MassBias mass_bias(const RobotParams& params, const Vec3& q, const Vec3& dq,
                   double gravity) {
  const auto phi = absolute_angles(params, q);
  const auto dphi = absolute_rates(dq);
  const auto joints = joint_positions(params, phi);
  const Vec2 g(0.0, gravity);

  MassBias out;
  for (int j = 0; j < 3; ++j) {
    const Vec2 com = joints[j] + params.com_offsets[j] * unit(phi[j]);
    Mat23 J_c = Mat23::Zero();
    Mat13 J_w = Mat13::Zero();
    for (int k = 0; k <= j; ++k) {
      J_c.col(k) = perp(com - joints[k]);
      J_w(0, k) = 1.0;
    }
    // Centripetal part of the COM acceleration, dJ_c * dq.
    Vec2 drift = -params.com_offsets[j] * dphi[j] * dphi[j] * unit(phi[j]);
    for (int m = 0; m < j; ++m) {
      drift -= params.link_lengths[m] * dphi[m] * dphi[m] * unit(phi[m]);
    }
    const double m = params.link_masses[j];
    out.M += m * J_c.transpose() * J_c +
             params.link_inertias[j] * J_w.transpose() * J_w;
    out.h += m * J_c.transpose() * (drift - g);
  }
  for (int j = 0; j < 3; ++j) out.h[j] += params.joint_damping[j] * dq[j];
  return out;
}

MassBias box_mass_bias(const BoxParams& params) {
  MassBias out;
  out.M = Vec3(params.mass, params.mass, params.inertia).asDiagonal();
  out.h = Vec3(0.0, -params.mass * params.gravity, 0.0);
  return out;
}

double mechanical_energy(const RobotParams& params, const Vec3& q,
                         const Vec3& dq, double gravity) {
  RobotParams undamped = params;
  undamped.joint_damping = {0.0, 0.0, 0.0};
  const MassBias mb = mass_bias(undamped, q, dq, 0.0);
  const auto phi = absolute_angles(params, q);
  const auto joints = joint_positions(params, phi);
  double potential = 0.0;
  for (int j = 0; j < 3; ++j) {
    const Vec2 com = joints[j] + params.com_offsets[j] * unit(phi[j]);
    potential -= params.link_masses[j] * gravity * com.y();
  }
  return 0.5 * dq.dot(mb.M * dq) + potential;
}

bool inverse_kinematics(const RobotParams& params, const EndEffectorPose& pose,
                        double elbow, Vec3* q) {
  const double l1 = params.link_lengths[0];
  const double l2 = params.link_lengths[1];
  const Vec2 wrist = pose.p - params.link_lengths[2] * unit(pose.theta);
  const Vec2 d =
      rotation(params.base.theta).transpose() * (wrist - params.base.position());
  const double c2 = (d.squaredNorm() - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  if (c2 < -1.0 || c2 > 1.0) return false;
  const double q2 = (elbow >= 0.0 ? 1.0 : -1.0) * std::acos(c2);
  const double q1 = std::atan2(d.y(), d.x()) -
                    std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
  double q3 = pose.theta - params.base.theta - q1 - q2;
  q3 = std::remainder(q3, 2.0 * kPi);
  *q = Vec3(q1, q2, q3);
  return true;
}

Vec3 transmission_torque(const FlexibleJointParams& params,
                         const RobotState& state) {
  return params.stiffness * (state.motor_q - state.q) +
         params.damping * (state.motor_dq - state.dq);
}

Vec3 flexible_joint_step_inputs(const FlexibleJointParams& params,
                                const RobotState& state, const Vec3& tau_desired,
                                double tau_min, double tau_max) {
  const Vec3 tau_j = transmission_torque(params, state);
  // Rate of the elastic part only; the damper rate would need accelerations.
  const Vec3 dtau_j = params.stiffness * (state.motor_dq - state.dq);
  Vec3 u = tau_desired + params.torque_gain * (tau_desired - tau_j) -
           params.torque_rate_gain * dtau_j;
  return u.cwiseMax(tau_min).cwiseMin(tau_max);
}

ContactKinematics contact_jacobians(const std::array<RobotParams, 2>& robots,
                                    const std::array<RobotState, 2>& states,
                                    const BoxParams& box,
                                    const BoxState& box_state) {
  ContactKinematics out;
  for (auto& m : out.J_N) m.setZero();
  for (auto& m : out.J_T) m.setZero();

  const Mat2 R_b = rotation(box_state.theta);
  const double omega = box_state.dtheta;

  for (int i = 0; i < kNumRobots; ++i) {
    const RobotParams& params = robots[i];
    const RobotState& s = states[i];
    const EndEffectorPose ee = forward_kinematics(params, s.q);
    const RobotJacobians jac = jacobians(params, s.q, s.dq);
    const Vec2 x_ee = unit(ee.theta);
    const Vec2 y_ee = perp(x_ee);
    const double theta_rate = jac.J_theta.dot(s.dq);
    const Vec2 n = R_b * Vec2(i == 0 ? -1.0 : 1.0, 0.0);
    const Vec2 t = perp(n);

    for (int side = 0; side < 2; ++side) {
      const int k = 2 * i + side;
      const double offset = (side == 0 ? 1.0 : -1.0) * params.ee_half_width;
      const Vec2 c = ee.p + offset * y_ee;
      const Mat23 J_c = jac.J_p - offset * x_ee * jac.J_theta;
      const Vec2 c_dot = J_c * s.dq;
      const Vec2 c_drift =
          jac.dJ_p * s.dq - offset * theta_rate * theta_rate * y_ee;

      const Vec2 r = c - box_state.p;
      const Vec2 r_dot = c_dot - box_state.dp;

      out.point[k] = c;
      out.normal[k] = n;
      out.gap[k] = n.dot(r) - 0.5 * box.width;
      out.tangent_coord[k] = t.dot(r);

      out.J_N[i].row(k) = n.transpose() * J_c;
      out.J_T[i].row(k) = t.transpose() * J_c;
      out.J_Nb.row(k) << n.x(), n.y(), cross2(r, n);
      out.J_Tb.row(k) << t.x(), t.y(), n.dot(r);

      out.gap_rate[k] = n.dot(r_dot) + omega * t.dot(r);
      out.slip_rate[k] = t.dot(r_dot) - omega * n.dot(r);
      out.gap_drift[k] = n.dot(c_drift) + 2.0 * omega * t.dot(r_dot) -
                         omega * omega * n.dot(r);
      out.slip_drift[k] = t.dot(c_drift) - 2.0 * omega * n.dot(r_dot) -
                          omega * omega * t.dot(r);
    }
  }
  return out;
}

}  // namespace dualgrasp
