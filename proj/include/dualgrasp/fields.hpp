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

#ifndef DUALGRASP_FIELDS_HPP_
#define DUALGRASP_FIELDS_HPP_

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "dualgrasp/dynamics.hpp"

namespace dualgrasp {

// Time-invariant reference velocity fields.
//
// Ante-impact: per end effector, a field that steers onto the nominal approach
// ray through the desired impact point and is blended (smoothstep over the
// annulus r_min..r_max around the estimated box centre) into the constant
// impact velocity near the box. Post-impact: a box field blending the
// predicted post-impact velocity into an attractor towards the goal pose.

struct AnteFieldParams {
  std::array<Vec2, kNumRobots> impact_position{};
  std::array<Vec2, kNumRobots> impact_velocity{};
  double shaping = 3.0;  // alpha, 1/s
  double r_min = 0.18;
  double r_max = 0.27;
  double angular_gain = 4.0;  // 1/s
  Vec2 box_position = Vec2::Zero();
  double box_angle = 0.0;

  void validate() const;
};

struct PostFieldParams {
  Vec2 goal_position = Vec2::Zero();
  double goal_angle = 0.0;
  double linear_gain = 2.0;   // 1/s
  double angular_gain = 2.0;  // 1/s
  double r_max = 0.05;
  Vec2 entry_position = Vec2::Zero();
  Vec2 predicted_velocity = Vec2::Zero();
  double predicted_angular_velocity = 0.0;
  // False reproduces the pure attractor (no impact map).
  bool use_prediction = true;

  void validate() const;
};

struct FieldValue {
  Vec2 v = Vec2::Zero();
  bool singular = false;
};

// Face centres as impact points and impact velocities along the inward face
// normals, tilted by `approach_tilt` towards +y_b (mirror symmetric).
// r_min = 1.2 max|p_imp - p_b|, r_max = 1.5 r_min.
AnteFieldParams make_ante_field(const BoxParams& box, const Pose2& box_estimate,
                                double impact_speed, double approach_tilt,
                                double shaping, double angular_gain);

// r_max = min(cap, |p_goal - p_entry|).
PostFieldParams make_post_field(const Pose2& goal, const Vec2& entry_position,
                                const Vec3& predicted_twist, double linear_gain,
                                double angular_gain, double r_max_cap,
                                bool use_prediction);

double smoothstep(double r, double r_min, double r_max);

FieldValue ante_linear_field(const Vec2& p, int robot,
                             const AnteFieldParams& params);

// theta_d = theta_b,est + robot * pi + 2 z pi with z chosen so that
// theta_d - theta lies in (-pi, pi].
double desired_angle(double theta, int robot, const AnteFieldParams& params);

double ante_angular_field(double theta, int robot,
                          const AnteFieldParams& params);

// d/dt of the angular field along itself: -kappa * dtheta_d.
double ante_angular_acceleration(double theta, int robot,
                                 const AnteFieldParams& params);

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline constexpr double kFieldFdStep = 1e-6;

// (d field / dx) * field, Jacobian by per-coordinate central differences.
Eigen::VectorXd field_acceleration(const VectorField& field,
                                   const Eigen::VectorXd& x,
                                   double step = kFieldFdStep);

Vec2 ante_linear_acceleration(const Vec2& p, int robot,
                              const AnteFieldParams& params,
                              bool* singular = nullptr);

double post_blend(const Vec2& p_b, const PostFieldParams& params);

Vec2 post_linear_field(const Vec2& p_b, const PostFieldParams& params);

double post_angular_field(const Vec2& p_b, double theta_b,
                          const PostFieldParams& params);

// (dp, dtheta) reference and its directional derivative along itself in
// (p, theta) space.
Vec3 post_field(const Vec3& pose, const PostFieldParams& params);
Vec3 post_field_acceleration(const Vec3& pose, const PostFieldParams& params);

}  // namespace dualgrasp

#endif  // DUALGRASP_FIELDS_HPP_
