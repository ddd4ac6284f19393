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

#include "dualgrasp/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualgrasp {

void AnteFieldParams::validate() const {
  double reach = 0.0;
  for (int i = 0; i < kNumRobots; ++i) {
    reach = std::max(reach, (impact_position[i] - box_position).norm());
    if (!(impact_velocity[i].norm() > 0.0)) {
      throw std::invalid_argument("impact velocity must be nonzero");
    }
  }
  if (!(r_max > r_min && r_min > reach)) {
    throw std::invalid_argument("ante field needs r_max > r_min > |p_imp - p_b|");
  }
  if (!(shaping > 0.0 && angular_gain > 0.0)) {
    throw std::invalid_argument("ante field gains must be positive");
  }
}

void PostFieldParams::validate() const {
  if (!(linear_gain > 0.0 && angular_gain > 0.0)) {
    throw std::invalid_argument("post field gains must be positive");
  }
  if (r_max < 0.0 || r_max > (goal_position - entry_position).norm() + 1e-12) {
    throw std::invalid_argument("post field needs 0 < r_max <= |p_bf - p_b+|");
  }
}

AnteFieldParams make_ante_field(const BoxParams& box, const Pose2& box_estimate,
                                double impact_speed, double approach_tilt,
                                double shaping, double angular_gain) {
  AnteFieldParams f;
  const Mat2 R = rotation(box_estimate.theta);
  f.box_position = box_estimate.position();
  f.box_angle = box_estimate.theta;
  for (int i = 0; i < kNumRobots; ++i) {
    const double side = i == 0 ? -1.0 : 1.0;
    f.impact_position[i] =
        f.box_position + R * Vec2(side * 0.5 * box.width, 0.0);
    const Vec2 inward(-side * std::cos(approach_tilt), std::sin(approach_tilt));
    f.impact_velocity[i] = impact_speed * (R * inward);
  }
  double reach = 0.0;
  for (const auto& p : f.impact_position) {
    reach = std::max(reach, (p - f.box_position).norm());
  }
  f.shaping = shaping;
  f.angular_gain = angular_gain;
  f.r_min = 1.2 * reach;
  f.r_max = 1.5 * f.r_min;
  return f;
}

PostFieldParams make_post_field(const Pose2& goal, const Vec2& entry_position,
                                const Vec3& predicted_twist, double linear_gain,
                                double angular_gain, double r_max_cap,
                                bool use_prediction) {
  PostFieldParams f;
  f.goal_position = goal.position();
  f.goal_angle = goal.theta;
  f.linear_gain = linear_gain;
  f.angular_gain = angular_gain;
  f.entry_position = entry_position;
  f.predicted_velocity = predicted_twist.head<2>();
  f.predicted_angular_velocity = predicted_twist[2];
  f.r_max = std::min(r_max_cap, (f.goal_position - entry_position).norm());
  f.use_prediction = use_prediction;
  return f;
}

double smoothstep(double r, double r_min, double r_max) {
  if (r <= r_min) return 0.0;
  if (r >= r_max) return 1.0;
  const double w = (r - r_min) / (r_max - r_min);
  return w * w * (3.0 - 2.0 * w);
}

FieldValue ante_linear_field(const Vec2& p, int robot,
                             const AnteFieldParams& params) {
  const Vec2& p_imp = params.impact_position[robot];
  const Vec2& v_imp = params.impact_velocity[robot];
  const double beta =
      smoothstep((p - params.box_position).norm(), params.r_min, params.r_max);
  if (beta == 0.0) return {v_imp, false};

  const double speed = v_imp.norm();
  const Vec2 target = p_imp - v_imp * (p_imp - p).norm() / speed;
  const Vec2 direction = v_imp + params.shaping * (target - p);
  const double len = direction.norm();
  if (len < 1e-9) return {v_imp, true};
  return {beta * (speed / len) * direction + (1.0 - beta) * v_imp, false};
}

double desired_angle(double theta, int robot, const AnteFieldParams& params) {
  const double nominal = params.box_angle + (robot == 0 ? 0.0 : kPi);
  double error = std::remainder(nominal - theta, 2.0 * kPi);
  if (error <= -kPi) error += 2.0 * kPi;
  return theta + error;
}

double ante_angular_field(double theta, int robot,
                          const AnteFieldParams& params) {
  return params.angular_gain * (desired_angle(theta, robot, params) - theta);
}

double ante_angular_acceleration(double theta, int robot,
                                 const AnteFieldParams& params) {
  return -params.angular_gain * ante_angular_field(theta, robot, params);
}

Eigen::VectorXd field_acceleration(const VectorField& field,
                                   const Eigen::VectorXd& x, double step) {
  const Eigen::VectorXd f = field(x);
  const Eigen::Index n = x.size();
  Eigen::MatrixXd jac(f.size(), n);
  Eigen::VectorXd xp = x;
  Eigen::VectorXd xm = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    jac.col(j) = (field(xp) - field(xm)) / (2.0 * step);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return jac * f;
}

Vec2 ante_linear_acceleration(const Vec2& p, int robot,
                              const AnteFieldParams& params, bool* singular) {
  bool flagged = false;
  const VectorField field = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const FieldValue v = ante_linear_field(Vec2(x[0], x[1]), robot, params);
    flagged = flagged || v.singular;
    return v.v;
  };
  const Eigen::VectorXd a = field_acceleration(field, p);
  if (singular != nullptr) *singular = flagged;
  if (flagged) return Vec2::Zero();
  return a;
}

double post_blend(const Vec2& p_b, const PostFieldParams& params) {
  if (!params.use_prediction || params.r_max <= 0.0) return 1.0;
  return smoothstep((params.entry_position - p_b).norm(), 0.0, params.r_max);
}

Vec2 post_linear_field(const Vec2& p_b, const PostFieldParams& params) {
  const double beta = post_blend(p_b, params);
  const Vec2 attractor = params.linear_gain * (params.goal_position - p_b);
  return beta * attractor + (1.0 - beta) * params.predicted_velocity;
}

double post_angular_field(const Vec2& p_b, double theta_b,
                          const PostFieldParams& params) {
  const double beta = post_blend(p_b, params);
  const double attractor = params.angular_gain * (params.goal_angle - theta_b);
  return beta * attractor + (1.0 - beta) * params.predicted_angular_velocity;
}

Vec3 post_field(const Vec3& pose, const PostFieldParams& params) {
  const Vec2 p = pose.head<2>();
  const Vec2 v = post_linear_field(p, params);
  return {v.x(), v.y(), post_angular_field(p, pose[2], params)};
}

Vec3 post_field_acceleration(const Vec3& pose, const PostFieldParams& params) {
  const VectorField field = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return post_field(Vec3(x[0], x[1], x[2]), params);
  };
  return field_acceleration(field, pose);
}

}  // namespace dualgrasp
