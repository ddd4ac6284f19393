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


#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dualgrasp/config.hpp"
#include "dualgrasp/fields.hpp"
#include "dualgrasp/harness.hpp"
#include "dualgrasp/predictor.hpp"

namespace {

using namespace dualgrasp;

constexpr int kExitError = 1;
constexpr int kExitFault = 2;

Config load_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

std::vector<double> parse_list(const std::string& text, size_t count,
                               const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  if (out.size() != count) {
    throw std::invalid_argument(
        fmt::format("{} needs {} comma-separated numbers", what, count));
  }
  return out;
}

// Explicit model file, then the configured one, then a fresh fit.
std::optional<RbfModel> resolve_model(const Config& config, const std::string& path,
                                      bool needed) {
  if (!path.empty()) return load_model_file(path);
  if (!config.predictor.model_file.empty()) {
    return load_model_file(config.predictor.model_file);
  }
  if (!needed) return std::nullopt;
  return fit_from_config(config, nullptr);
}

int report(const SuiteResult& result) {
  write_summary(std::cout, result.rows);
  for (const SuiteRow& row : result.rows) {
    if (row.metrics.fault) {
      std::cerr << row.scenario.name << ": fault: " << row.fault_message << "\n";
    }
  }
  return result.any_fault ? kExitFault : 0;
}

struct SimArgs {
  std::string config;
  std::string variant = "proposed";
  std::string mode;
  std::string model;
  std::string out = "out";
};

int run_sim(const SimArgs& a) {
  Config config = load_or_default(a.config);
  if (!a.mode.empty()) config.sim.mode = parse_sim_mode(a.mode);
  Scenario s = scenario_from_config(config);
  s.variant = parse_variant(a.variant);
  s.name = to_string(s.variant);
  const auto model = resolve_model(config, a.model, s.variant != Variant::kNoImpactMap);
  return report(run_suite(config, {s}, model ? &*model : nullptr, a.out));
}

struct SuiteArgs {
  std::string config;
  std::string model;
  std::string out = "out";
};

int run_suite_cmd(const SuiteArgs& a) {
  const Config config = load_or_default(a.config);
  const auto model = resolve_model(config, a.model, true);
  return report(run_suite(config, suite_scenarios(config), &*model, a.out));
}

struct FitArgs {
  std::string config;
  std::string out = "model.txt";
  std::string samples;
};

int run_fit(const FitArgs& a) {
  const Config config = load_or_default(a.config);
  std::vector<ImpactSample> samples;
  const RbfModel model = fit_from_config(config, &samples);
  save_model_file(a.out, model);
  if (!a.samples.empty()) {
    std::ofstream os(a.samples);
    if (!os) throw std::runtime_error("cannot write " + a.samples);
    os << "y1,y2,vx,vy,omega,ok\n";
    for (const ImpactSample& s : samples) {
      os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.y_minus[0],
                        s.y_minus[1], s.dq_b_plus[0], s.dq_b_plus[1], s.dq_b_plus[2],
                        int(s.ok));
    }
  }
  std::cout << fmt::format("fitted {} nodes, condition {:.3g}{}\n", model.size(),
                           model.condition,
                           model.regularized ? " (regularised)" : "");
  return 0;
}

struct FieldArgs {
  std::string config;
  std::string field = "ante";
  int robot = 1;
  std::string grid = "-0.6,0.6,-0.4,0.4,25";
  std::string entry;
  std::string predicted = "0,0,0";
  std::string out = "field.csv";
};

int run_fields(const FieldArgs& a) {
  const Config config = load_or_default(a.config);
  const std::vector<double> g = parse_list(a.grid, 5, "--grid");
  const int n = static_cast<int>(g[4]);
  if (n < 2 || !(g[1] > g[0]) || !(g[3] > g[2])) {
    throw std::invalid_argument("--grid is x_min,x_max,y_min,y_max,points (points >= 2)");
  }
  std::ofstream os(a.out);
  if (!os) throw std::runtime_error("cannot write " + a.out);

  if (a.field == "ante") {
    if (a.robot != 1 && a.robot != 2) throw std::invalid_argument("--robot is 1 or 2");
    const AnteFieldParams params = ante_field_params(config);
    const int robot = a.robot - 1;
    os << "x,y,vx,vy,speed,blend,singular\n";
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec2 p(g[0] + (g[1] - g[0]) * i / (n - 1), g[2] + (g[3] - g[2]) * j / (n - 1));
        const FieldValue f = ante_linear_field(p, robot, params);
        const double r = (p - params.box_position).norm();
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", p.x(),
                          p.y(), f.v.x(), f.v.y(), f.v.norm(),
                          smoothstep(r, params.r_min, params.r_max), int(f.singular));
      }
    }
  } else if (a.field == "post") {
    const std::vector<double> w = parse_list(a.predicted, 3, "--predicted");
    Vec2 entry = config.box_estimate.position();
    if (!a.entry.empty()) {
      const std::vector<double> e = parse_list(a.entry, 2, "--entry");
      entry = Vec2(e[0], e[1]);
    }
    const PostFieldParams params = make_post_field(
        config.post.goal, entry, Vec3(w[0], w[1], w[2]), config.post.linear_gain,
        config.post.angular_gain, config.post.r_max_cap, true);
    os << "x,y,vx,vy,omega,blend\n";
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec3 pose(g[0] + (g[1] - g[0]) * i / (n - 1),
                        g[2] + (g[3] - g[2]) * j / (n - 1), config.post.goal.theta);
        const Vec3 f = post_field(pose, params);
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", pose[0],
                          pose[1], f[0], f[1], f[2],
                          post_blend(pose.head<2>(), params));
      }
    }
  } else {
    throw std::invalid_argument("--field is ante or post");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar dual-arm impact-aware grasping: simulation, predictor and fields"};
  app.require_subcommand(1);

  int code = 0;

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("sim", "Single episodes");
  sim->require_subcommand(1);
  CLI::App* sim_run = sim->add_subcommand("run", "Run one episode");
  sim_run->add_option("--config", sim_args.config, "INI config (defaults if omitted)");
  sim_run->add_option("--variant", sim_args.variant, "Controller variant")
      ->check(CLI::IsMember({"proposed", "no-impact-map", "no-interim"}));
  sim_run->add_option("--mode", sim_args.mode, "Robot model (default from config)")
      ->check(CLI::IsMember({"rigid", "flexible"}));
  sim_run->add_option("--model", sim_args.model, "Predictor model file");
  sim_run->add_option("--out", sim_args.out, "Output directory");
  sim_run->callback([&] { code = run_sim(sim_args); });

  SuiteArgs suite_args;
  CLI::App* suite = app.add_subcommand("suite", "Validation suite");
  suite->require_subcommand(1);
  CLI::App* suite_run = suite->add_subcommand("run", "Run every configured scenario");
  suite_run->add_option("--config", suite_args.config, "INI config (defaults if omitted)");
  suite_run->add_option("--model", suite_args.model, "Predictor model file");
  suite_run->add_option("--out", suite_args.out, "Output directory");
  suite_run->callback([&] { code = run_suite_cmd(suite_args); });

  FitArgs fit_args;
  CLI::App* predictor = app.add_subcommand("predictor", "Post-impact velocity predictor");
  predictor->require_subcommand(1);
  CLI::App* fit = predictor->add_subcommand("fit", "Run the offline impacts and fit the model");
  fit->add_option("--config", fit_args.config, "INI config (defaults if omitted)");
  fit->add_option("--out", fit_args.out, "Model file");
  fit->add_option("--samples", fit_args.samples, "Optional CSV of the simulated samples");
  fit->callback([&] { code = run_fit(fit_args); });

  FieldArgs field_args;
  CLI::App* fields = app.add_subcommand("fields", "Reference velocity fields");
  fields->require_subcommand(1);
  CLI::App* sample = fields->add_subcommand("sample", "Evaluate a field on a grid");
  sample->add_option("--config", field_args.config, "INI config (defaults if omitted)");
  sample->add_option("--field", field_args.field, "ante or post")
      ->check(CLI::IsMember({"ante", "post"}));
  sample->add_option("--robot", field_args.robot, "Robot for the ante field (1 or 2)");
  sample->add_option("--grid", field_args.grid, "x_min,x_max,y_min,y_max,points");
  sample->add_option("--entry", field_args.entry, "Post field entry position x,y");
  sample->add_option("--predicted", field_args.predicted,
                     "Predicted post-impact twist vx,vy,omega");
  sample->add_option("--out", field_args.out, "Output CSV");
  sample->callback([&] { code = run_fields(field_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return code;
}
