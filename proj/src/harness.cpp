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


#include "dualgrasp/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace dualgrasp {
namespace {

double max_abs_diff(const std::array<Vec3, kNumRobots>& a,
                    const std::array<Vec3, kNumRobots>& b) {
  double out = 0.0;
  for (int i = 0; i < kNumRobots; ++i) {
    out = std::max(out, (a[i] - b[i]).lpNorm<Eigen::Infinity>());
  }
  return out;
}

double angle_error(double a, double b) {
  return std::abs(std::remainder(a - b, 2.0 * kPi));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

Scenario scenario_from_config(const Config& config) {
  Scenario s;
  s.name = config.scenario.name;
  s.variant = config.scenario.variant;
  s.mode = config.sim.mode;
  s.perturb_angle = config.sim.perturb_angle;
  s.perturb_y = config.sim.perturb_y;
  s.start = config.scenario.start;
  s.elbow = config.scenario.elbow;
  s.start_q = config.scenario.start_q;
  return s;
}

Config apply_scenario(Config config, const Scenario& scenario) {
  config.scenario.name = scenario.name;
  config.scenario.variant = scenario.variant;
  config.sim.mode = scenario.mode;
  config.sim.perturb_angle = scenario.perturb_angle;
  config.sim.perturb_y = scenario.perturb_y;
  config.scenario.start = scenario.start;
  config.scenario.elbow = scenario.elbow;
  config.scenario.start_q = scenario.start_q;
  if (scenario.sync_weight) config.gains.w_a_s = *scenario.sync_weight;
  return config;
}

std::vector<Scenario> suite_scenarios(const Config& config) {
  const Scenario base = scenario_from_config(config);
  std::vector<Scenario> out;
  for (Variant v : config.suite.variants) {
    Scenario s = base;
    s.variant = v;
    s.name = to_string(v);
    out.push_back(s);
  }
  if (config.suite.sync_ablation) {
    Scenario s = base;
    s.variant = Variant::kProposed;
    s.name = "proposed-no-sync";
    s.sync_weight = 0.0;
    out.push_back(s);
  }
  return out;
}

MetricsContext metrics_context(const Config& config) {
  MetricsContext c;
  c.goal = config.post.goal;
  c.sim = config.sim;
  c.tau_min = config.gains.tau_min;
  c.tau_max = config.gains.tau_max;
  return c;
}

Metrics compute_metrics(const EpisodeLog& log, const MetricsContext& context) {
  Metrics m;
  const auto& rec = log.records;
  if (rec.empty()) return m;

  for (size_t k = 0; k < rec.size(); ++k) {
    for (int i = 0; i < kNumRobots; ++i) {
      if (!std::isnan(m.impact_time[i])) continue;
      if (rec[k].contacts[2 * i].gap <= 0.0 || rec[k].contacts[2 * i + 1].gap <= 0.0) {
        m.impact_time[i] = rec[k].t;
      }
    }
  }
  m.impact_time_gap = std::abs(m.impact_time[0] - m.impact_time[1]);

  size_t post = rec.size();
  for (size_t k = 0; k < rec.size(); ++k) {
    if (rec[k].phase == Phase::kPost) {
      post = k;
      break;
    }
  }
  if (post < rec.size()) {
    m.post_entry_time = rec[post].t;
    if (post > 0) {
      m.max_torque_jump_at_post_entry = max_abs_diff(rec[post].tau, rec[post - 1].tau);
    }
    const Vec3& ref = rec[post].box_ref;
    m.post_velocity_mismatch = (rec[post].box.dp - ref.head<2>()).norm();
  }

  // Impact-sequence window: first impact up to (not including) post entry.
  // fmin ignores a robot that never touched.
  const double t_first = std::fmin(m.impact_time[0], m.impact_time[1]);
  if (!std::isnan(t_first)) {
    double peak = 0.0;
    for (size_t k = 1; k < post; ++k) {
      if (rec[k].t < t_first) continue;
      const double dt = rec[k].t - rec[k - 1].t;
      if (dt > 0.0) peak = std::max(peak, max_abs_diff(rec[k].tau, rec[k - 1].tau) / dt);
    }
    m.interim_torque_rate_peak = peak;
  }

  double peak = 0.0;
  GoalMonitor monitor(context.goal, context.sim);
  for (const LogRecord& r : rec) {
    for (const Vec3& tau : r.tau) {
      peak = std::max(peak, tau.lpNorm<Eigen::Infinity>());
      if ((tau.array() > context.tau_max + 1e-9).any() ||
          (tau.array() < context.tau_min - 1e-9).any()) {
        m.torque_bound_violated = true;
      }
    }
    if (!m.success && monitor.update(r)) {
      m.success = true;
      m.success_time = r.t;
    }
    m.fault = m.fault || r.fault;
  }
  m.peak_torque = peak;

  const LogRecord& last = rec.back();
  m.final_estimate_error = (last.box_estimate.p - context.goal.position()).norm();
  m.final_estimate_angle_error = angle_error(last.box_estimate.theta, context.goal.theta);
  m.final_true_error = (last.box.p - context.goal.position()).norm();
  m.final_true_angle_error = angle_error(last.box.theta, context.goal.theta);
  m.complete = !std::isnan(m.impact_time[0]) && !std::isnan(m.impact_time[1]) &&
               post < rec.size();
  return m;
}

void write_metrics_csv(std::ostream& os, const std::vector<SuiteRow>& rows) {
  os << "scenario,variant,mode,impact_time_1,impact_time_2,impact_time_gap,"
        "post_entry_time,max_torque_jump_at_post_entry,interim_torque_rate_peak,"
        "post_velocity_mismatch,peak_torque,torque_bound_violated,success,"
        "success_time,final_estimate_error,final_estimate_angle_error,"
        "final_true_error,final_true_angle_error,fault,complete\n";
  for (const SuiteRow& r : rows) {
    const Metrics& m = r.metrics;
    os << r.scenario.name << ',' << to_string(r.scenario.variant) << ','
       << to_string(r.scenario.mode);
    for (double v : {m.impact_time[0], m.impact_time[1], m.impact_time_gap,
                     m.post_entry_time, m.max_torque_jump_at_post_entry,
                     m.interim_torque_rate_peak, m.post_velocity_mismatch,
                     m.peak_torque}) {
      os << ',' << num(v);
    }
    os << ',' << int(m.torque_bound_violated) << ',' << int(m.success) << ','
       << num(m.success_time);
    for (double v : {m.final_estimate_error, m.final_estimate_angle_error,
                     m.final_true_error, m.final_true_angle_error}) {
      os << ',' << num(v);
    }
    os << ',' << int(m.fault) << ',' << int(m.complete) << '\n';
  }
}

void write_summary(std::ostream& os, const std::vector<SuiteRow>& rows) {
  os << fmt::format("{:<18} {:>9} {:>9} {:>10} {:>10} {:>9} {:>9} {:>9} {:>8} {:>6}\n",
                    "scenario", "gap_ms", "t_post", "jump_Nm", "rate_Nm/s",
                    "mismatch", "peak_Nm", "err_mm", "success", "fault");
  for (const SuiteRow& r : rows) {
    const Metrics& m = r.metrics;
    os << fmt::format(
        "{:<18} {:>9.2f} {:>9.3f} {:>10.3f} {:>10.1f} {:>9.4f} {:>9.3f} {:>9.3f} {:>8} {:>6}\n",
        r.scenario.name, 1e3 * m.impact_time_gap, m.post_entry_time,
        m.max_torque_jump_at_post_entry, m.interim_torque_rate_peak,
        m.post_velocity_mismatch, m.peak_torque, 1e3 * m.final_estimate_error,
        m.success ? "yes" : "no", m.fault ? "yes" : "no");
  }
}

SuiteResult run_suite(const Config& config, const std::vector<Scenario>& scenarios,
                      const RbfModel* model, const std::string& out_dir) {
  config.validate();
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);

  std::optional<RbfModel> fitted;
  const bool needs_model = std::any_of(
      scenarios.begin(), scenarios.end(),
      [](const Scenario& s) { return s.variant != Variant::kNoImpactMap; });
  if (model == nullptr && needs_model) {
    fitted = fit_from_config(config, nullptr);
    model = &*fitted;
  }
  if (model != nullptr) save_model_file((dir / "model.txt").string(), *model);
  {
    std::ofstream os = open_out(dir / "config.ini");
    write_config(os, config);
  }

  SuiteResult result;
  for (const Scenario& s : scenarios) {
    const Config c = apply_scenario(config, s);
    const EpisodeLog log = run_episode(episode_setup(c, model));
    {
      std::ofstream os = open_out(dir / (s.name + ".csv"));
      write_log_csv(os, log);
    }
    emit_plots(log, dir.string(), s.name);
    SuiteRow row{s, compute_metrics(log, metrics_context(c)), log.fault_message};
    result.any_fault = result.any_fault || row.metrics.fault;
    result.rows.push_back(std::move(row));
  }

  {
    std::ofstream os = open_out(dir / "metrics.csv");
    write_metrics_csv(os, result.rows);
  }
  {
    std::ofstream os = open_out(dir / "summary.txt");
    write_summary(os, result.rows);
  }
  return result;
}

}  // namespace dualgrasp
