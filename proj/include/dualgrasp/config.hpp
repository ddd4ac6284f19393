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


#ifndef DUALGRASP_CONFIG_HPP_
#define DUALGRASP_CONFIG_HPP_

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualgrasp/contact.hpp"
#include "dualgrasp/controller.hpp"
#include "dualgrasp/dynamics.hpp"
#include "dualgrasp/predictor.hpp"
#include "dualgrasp/sim.hpp"

namespace dualgrasp {

struct FieldSettings {
  double impact_speed = 0.4;
  // Impact velocities are tilted from the inward face normal towards +y_b.
  double approach_tilt = 30.0 * kPi / 180.0;
  double shaping = 3.0;
  double angular_gain = 4.0;
};

struct PredictorSettings {
  ImpactGrid grid{};
  double rho = 20.0;
  double t_hold = 0.02;
  double horizon = 0.3;
  SimMode mode = SimMode::kRigid;
  // Impact velocities of the samples: the (extended) field the controller
  // tracks, or the unextended approach field evaluated at the sample point.
  bool unextended_velocity = false;
  std::string model_file;
};

struct ScenarioConfig {
  std::string name = "default";
  Variant variant = Variant::kProposed;
  std::array<EndEffectorPose, kNumRobots> start{};
  std::array<double, kNumRobots> elbow{1.0, -1.0};
  // Overrides the start poses when set.
  std::array<std::optional<Vec3>, kNumRobots> start_q{};
};

struct SuiteSettings {
  std::vector<Variant> variants{Variant::kProposed, Variant::kNoImpactMap,
                                Variant::kNoInterim};
  // Adds a proposed run with the synchronisation task switched off.
  bool sync_ablation = true;
};

struct Config {
  std::array<RobotParams, kNumRobots> robots{};
  BoxParams box{};
  Pose2 box_estimate{};
  ContactParams contact{};
  FlexibleJointParams flexible{};
  FieldSettings fields{};
  PostFieldSettings post{};
  ControllerGains gains{};
  ImpactDetector detector = ImpactDetector::kGap;
  PredictorSettings predictor{};
  SimConfig sim{};
  ScenarioConfig scenario{};
  SuiteSettings suite{};

  void validate() const;
};

// The built-in validation scenario.
Config default_config();

// INI file with sections [robot1] [robot2] [box] [contact] [flexible]
// [fields] [controller] [predictor] [sim] [scenario] [suite]. Missing keys
// keep their defaults; unknown keys are an error.
Config load_config(const std::string& path);
Config parse_config(std::istream& is);
// Every key, fully resolved, in the same format.
void write_config(std::ostream& os, const Config& config);

AnteFieldParams ante_field_params(const Config& config);
ControllerSetup controller_setup(const Config& config, const RbfModel* model);
WorldParams world_params(const Config& config, SimMode mode);
// Robots at the scenario start (inverse kinematics), true box perturbed.
WorldState initial_world(const Config& config);
EpisodeSetup episode_setup(const Config& config, const RbfModel* model);

}  // namespace dualgrasp

#endif  // DUALGRASP_CONFIG_HPP_
