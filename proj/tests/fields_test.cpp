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

#include <cmath>
#include <random>

#include "gtest/gtest.h"

namespace dualgrasp {
namespace {

AnteFieldParams default_ante(double tilt = 0.0) {
  return make_ante_field(BoxParams{}, Pose2{}, 0.4, tilt, 3.0, 4.0);
}

TEST(Smoothstep, Endpoints) {
  EXPECT_EQ(smoothstep(0.1, 0.1, 0.3), 0.0);
  EXPECT_EQ(smoothstep(0.3, 0.1, 0.3), 1.0);
  EXPECT_NEAR(smoothstep(0.2, 0.1, 0.3), 0.5, 1e-15);
  EXPECT_EQ(smoothstep(-1.0, 0.1, 0.3), 0.0);
  EXPECT_EQ(smoothstep(5.0, 0.1, 0.3), 1.0);
}

TEST(AnteField, DefaultsSatisfyInvariants) {
  const auto f = default_ante(0.3);
  EXPECT_NO_THROW(f.validate());
  EXPECT_NEAR(f.r_min, 0.18, 1e-12);
  EXPECT_NEAR(f.r_max, 0.27, 1e-12);
  EXPECT_NEAR(f.impact_velocity[0].norm(), 0.4, 1e-15);
  // Mirror symmetry of the impact velocities about the box y axis.
  EXPECT_NEAR(f.impact_velocity[0].x(), -f.impact_velocity[1].x(), 1e-15);
  EXPECT_NEAR(f.impact_velocity[0].y(), f.impact_velocity[1].y(), 1e-15);
}

TEST(AnteField, NominalRayGivesImpactVelocity) {
  const auto f = default_ante(0.4);
  for (int i = 0; i < 2; ++i) {
    const Vec2 dir = f.impact_velocity[i].normalized();
    const Vec2 p = f.impact_position[i] - 0.5 * dir;
    ASSERT_GT((p - f.box_position).norm(), f.r_max);
    const auto v = ante_linear_field(p, i, f);
    EXPECT_LT((v.v - f.impact_velocity[i]).norm(), 1e-12);
    EXPECT_FALSE(v.singular);
  }
}

TEST(AnteField, InsideInnerBallIsImpactVelocity) {
  const auto f = default_ante(0.2);
  for (int i = 0; i < 2; ++i) {
    const Vec2 p = f.impact_position[i] + Vec2(0.0, 0.05);
    const auto v = ante_linear_field(p, i, f);
    EXPECT_EQ(v.v, f.impact_velocity[i]);
  }
}

TEST(AnteField, SpeedBoundedByImpactSpeed) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  const auto f = default_ante(0.3);
  for (int k = 0; k < 5000; ++k) {
    const Vec2 p(u(rng), u(rng));
    for (int i = 0; i < 2; ++i) {
      const auto v = ante_linear_field(p, i, f);
      EXPECT_LE(v.v.norm(), 0.4 + 1e-12);
      if ((p - f.box_position).norm() >= f.r_max && !v.singular) {
        EXPECT_NEAR(v.v.norm(), 0.4, 1e-12);
      }
    }
  }
}

TEST(AnteField, SingularPointFallsBackToImpactVelocity) {
  auto f = default_ante(0.0);
  // v_imp + alpha (p_t - p) = 0 for p straight ahead of p_imp at distance
  // d = |v_imp| / (2 alpha) past the impact point... solve along the ray.
  const Vec2 dir = f.impact_velocity[0].normalized();
  const double d = 0.4 / (2.0 * f.shaping);
  const Vec2 p = f.impact_position[0] + d * dir;
  f.r_min = 0.01;
  f.r_max = 0.02;
  const auto v = ante_linear_field(p, 0, f);
  EXPECT_TRUE(v.singular);
  EXPECT_EQ(v.v, f.impact_velocity[0]);
}

TEST(AnteField, ContinuouslyDifferentiableAcrossCircles) {
  const auto f = default_ante(0.3);
  const double h = 1e-7;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (double radius : {f.r_min, f.r_max}) {
    for (int k = 0; k < 50; ++k) {
      const double a = angle(rng);
      const Vec2 d(std::cos(a), std::sin(a));
      const Vec2 p = f.box_position + radius * d;
      for (int i = 0; i < 2; ++i) {
        const Vec2 f0 = ante_linear_field(p, i, f).v;
        const Vec2 inner = (f0 - ante_linear_field(p - h * d, i, f).v) / h;
        const Vec2 outer = (ante_linear_field(p + h * d, i, f).v - f0) / h;
        EXPECT_LT((inner - outer).norm(), 1e-4) << "radius " << radius;
      }
    }
  }
}

TEST(AngularField, Examples) {
  AnteFieldParams f = default_ante();
  f.angular_gain = 2.0;
  EXPECT_EQ(ante_angular_field(0.0, 0, f), 0.0);
  EXPECT_NEAR(ante_angular_field(-0.1, 0, f), 0.2, 1e-15);
  EXPECT_NEAR(ante_angular_field(kPi + 0.1, 1, f), -0.2, 1e-12);
  // Wrap: robot 2 near -pi picks theta_d = -pi.
  EXPECT_NEAR(desired_angle(-kPi + 0.2, 1, f), -kPi, 1e-12);
  // Error in (-pi, pi]: exactly opposite picks +pi.
  EXPECT_NEAR(desired_angle(-kPi, 0, f) - (-kPi), kPi, 1e-12);
  EXPECT_NEAR(desired_angle(4 * kPi + 0.3, 0, f), 4 * kPi, 1e-12);
}

TEST(FieldAcceleration, ConstantFieldHasNone) {
  const VectorField c = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd(Eigen::Vector2d(0.3, -0.1));
  };
  EXPECT_LT(field_acceleration(c, Eigen::Vector2d(1.0, 2.0)).norm(), 1e-12);
}

TEST(FieldAcceleration, LinearFieldClosedForm) {
  const double kappa = 2.5;
  const Eigen::Vector2d target(0.4, -0.2);
  const VectorField lin = [&](const Eigen::VectorXd& p) {
    return Eigen::VectorXd(kappa * (target - p));
  };
  const Eigen::Vector2d p(-0.3, 0.7);
  const Eigen::VectorXd a = field_acceleration(lin, p);
  EXPECT_LT((a - (-kappa * kappa * (target - p))).norm(), 1e-8);
}

TEST(FieldAcceleration, AnteFieldMatchesDirectionalOracle) {
  const auto f = default_ante(0.3);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 200) {
    const Vec2 p(u(rng), u(rng));
    for (int i = 0; i < 2; ++i) {
      const auto v = ante_linear_field(p, i, f);
      if (v.singular || v.v.norm() < 1e-6) continue;
      const Vec2 dir = v.v.normalized();
      const Vec2 oracle = (ante_linear_field(p + h * dir, i, f).v -
                           ante_linear_field(p - h * dir, i, f).v) *
                          v.v.norm() / (2 * h);
      EXPECT_LT((ante_linear_acceleration(p, i, f) - oracle).norm(), 1e-5);
      ++checked;
    }
  }
}

PostFieldParams default_post() {
  return make_post_field({0.1, -0.05, 0.2}, Vec2(0.0, 0.0), Vec3(0.05, 0.1, -0.3),
                         2.0, 2.0, 0.05, true);
}

TEST(PostField, EntryGivesPredictedVelocity) {
  const auto f = default_post();
  EXPECT_EQ(post_linear_field(f.entry_position, f), f.predicted_velocity);
  EXPECT_EQ(post_angular_field(f.entry_position, 0.7, f),
            f.predicted_angular_velocity);
}

TEST(PostField, FarFromEntryIsAttractor) {
  const auto f = default_post();
  const Vec2 p(0.3, 0.2);
  EXPECT_LT((post_linear_field(p, f) - 2.0 * (f.goal_position - p)).norm(), 1e-15);
  EXPECT_LT(post_linear_field(f.goal_position, f).norm(), 1e-15);
  EXPECT_EQ(post_angular_field(f.goal_position, f.goal_angle, f), 0.0);
}

TEST(PostField, BlendMidpointIsConvexCombination) {
  const auto f = default_post();
  const Vec2 p = f.entry_position + Vec2(0.0, 0.5 * f.r_max);
  const double theta = -0.4;
  EXPECT_NEAR(post_angular_field(p, theta, f),
              0.5 * 2.0 * (f.goal_angle - theta) + 0.5 * f.predicted_angular_velocity,
              1e-15);
}

TEST(PostField, WithoutPredictionIsPureAttractor) {
  auto f = default_post();
  f.use_prediction = false;
  EXPECT_LT((post_linear_field(f.entry_position, f) -
             2.0 * (f.goal_position - f.entry_position)).norm(), 1e-15);
}

TEST(PostField, RadiusCappedByGoalDistance) {
  const auto f = make_post_field({0.01, 0.0, 0.0}, Vec2::Zero(), Vec3::Zero(),
                                 2.0, 2.0, 0.05, true);
  EXPECT_NEAR(f.r_max, 0.01, 1e-15);
  EXPECT_NO_THROW(f.validate());
}

}  // namespace
}  // namespace dualgrasp
