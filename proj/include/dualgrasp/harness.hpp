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


#ifndef DUALGRASP_HARNESS_HPP_
#define DUALGRASP_HARNESS_HPP_

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dualgrasp/config.hpp"
#include "dualgrasp/controller.hpp"
#include "dualgrasp/predictor.hpp"
#include "dualgrasp/sim.hpp"

namespace dualgrasp {

struct Scenario {
  std::string name;
  Variant variant = Variant::kProposed;
  SimMode mode = SimMode::kFlexible;
  double perturb_angle = 0.0;  // rad, applied to the true box
  double perturb_y = 0.0;      // m
  std::array<EndEffectorPose, kNumRobots> start{};
  std::array<double, kNumRobots> elbow{1.0, -1.0};
  std::array<std::optional<Vec3>, kNumRobots> start_q{};
  // Replaces the synchronisation weight when set.
  std::optional<double> sync_weight;
};

// The scenario described by the [scenario] and [sim] sections.
Scenario scenario_from_config(const Config& config);
Config apply_scenario(Config config, const Scenario& scenario);

// One scenario per configured variant, plus the synchronisation ablation.
std::vector<Scenario> suite_scenarios(const Config& config);

struct Metrics {
  std::array<double, kNumRobots> impact_time{kNaN, kNaN};  // first gap <= 0
  double impact_time_gap = kNaN;                          // s
  double post_entry_time = kNaN;                          // s
  double max_torque_jump_at_post_entry = kNaN;            // N m
  double interim_torque_rate_peak = kNaN;                 // N m / s
  double post_velocity_mismatch = kNaN;                   // m/s
  double peak_torque = kNaN;                              // N m
  bool torque_bound_violated = false;
  bool success = false;
  double success_time = kNaN;
  // Final box pose error against the goal, estimated and true.
  double final_estimate_error = kNaN;
  double final_estimate_angle_error = kNaN;
  double final_true_error = kNaN;
  double final_true_angle_error = kNaN;
  bool fault = false;
  // False when the episode never reached full contact; the impact and post
  // entries are then partially NaN.
  bool complete = false;
};

struct MetricsContext {
  Pose2 goal{};
  SimConfig sim{};
  double tau_min = -40.0;
  double tau_max = 40.0;
};

MetricsContext metrics_context(const Config& config);

// Pure function of the logged records.
Metrics compute_metrics(const EpisodeLog& log, const MetricsContext& context);

struct SuiteRow {
  Scenario scenario;
  Metrics metrics;
  std::string fault_message;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  bool any_fault = false;
};

// Runs every scenario, writing <name>.csv, the plot files per scenario,
// metrics.csv, summary.txt and the resolved config.ini into out_dir.
SuiteResult run_suite(const Config& config, const std::vector<Scenario>& scenarios,
                      const RbfModel* model, const std::string& out_dir);

void write_metrics_csv(std::ostream& os, const std::vector<SuiteRow>& rows);
void write_summary(std::ostream& os, const std::vector<SuiteRow>& rows);

// Plot output.
struct PhaseBoundary {
  double t = 0.0;
  Phase phase = Phase::kAnte;  // phase entered at t
};

std::vector<PhaseBoundary> phase_boundaries(const EpisodeLog& log);

struct Figure {
  std::string name;
  std::string y_label;
  std::vector<std::string> series;
  std::vector<double> t;
  std::vector<Phase> phase;
  std::vector<std::vector<double>> values;  // one column per series
  std::vector<PhaseBoundary> boundaries;
};

// End-effector velocities with references, contact forces, joint torques.
std::vector<Figure> episode_figures(const EpisodeLog& log);

void write_figure_csv(std::ostream& os, const Figure& figure);
void write_figure_svg(std::ostream& os, const Figure& figure);

// Writes <stem>_<figure>.csv and .svg into dir for each figure.
void emit_plots(const EpisodeLog& log, const std::string& dir,
                const std::string& stem);

}  // namespace dualgrasp

#endif  // DUALGRASP_HARNESS_HPP_
