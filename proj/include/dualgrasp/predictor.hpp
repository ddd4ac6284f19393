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


#ifndef DUALGRASP_PREDICTOR_HPP_
#define DUALGRASP_PREDICTOR_HPP_

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualgrasp/dynamics.hpp"

namespace dualgrasp {

struct Config;

// One offline impact experiment: vertical offsets of both end effectors with
// respect to the box (box frame) and the resulting box velocity once contact
// is fully established.
struct ImpactSample {
  Vec2 y_minus = Vec2::Zero();
  Vec3 dq_b_plus = Vec3::Zero();
  bool ok = false;
};

struct ImpactGrid {
  int points_per_axis = 5;
  double half_range = 0.04;  // m
  void validate() const;
};

// Initial condition of one offline simulation.
struct ImpactConfig {
  Vec2 y_minus = Vec2::Zero();
  std::array<RobotState, kNumRobots> robots{};
  BoxState box{};
};

// Gaussian RBF interpolant of the post-impact box twist,
//   dq_b+(y) = sum_j w_j exp(-(rho |y - y_j|)^2).
struct RbfModel {
  std::vector<Vec2> nodes;
  Eigen::Matrix<double, 3, Eigen::Dynamic> W;
  double rho = 20.0;
  ImpactGrid grid{};
  bool regularized = false;
  double condition = 1.0;

  int size() const { return static_cast<int>(nodes.size()); }
};

inline double rbf_kernel(double r, double rho) {
  return std::exp(-(rho * r) * (rho * r));
}

// Offsets in the order (y1, y2) with y2 varying fastest.
std::vector<Vec2> grid_offsets(const ImpactGrid& grid);

// Robots placed against both faces at gap 0 with the impact velocities of
// the ante-impact field and zero angular velocity. Offsets the arms cannot
// reach are skipped (with a message on stderr).
std::vector<ImpactConfig> sample_impact_configs(const Config& config,
                                                const ImpactGrid& grid);

// Runs the ante-impact controller from each configuration until all four
// contacts have been closed for the hold time (or the horizon runs out).
std::vector<ImpactSample> run_offline_sims(const Config& config,
                                           const std::vector<ImpactConfig>& configs);

// Throws std::runtime_error when Phi is too badly conditioned.
RbfModel fit_rbf(const std::vector<ImpactSample>& samples, double rho,
                 const ImpactGrid& grid = {});

// Twist (dp_x, dp_y, dtheta). `extrapolated` is set when the query lies
// outside the bounding box of the nodes.
Vec3 predict_post_velocity(const RbfModel& model, const Vec2& y_minus,
                           bool* extrapolated = nullptr);

// Sampling + fit with the settings from the config.
RbfModel fit_from_config(const Config& config,
                         std::vector<ImpactSample>* samples = nullptr);

void save_model(std::ostream& os, const RbfModel& model);
RbfModel load_model(std::istream& is);
void save_model_file(const std::string& path, const RbfModel& model);
RbfModel load_model_file(const std::string& path);

}  // namespace dualgrasp

#endif  // DUALGRASP_PREDICTOR_HPP_
