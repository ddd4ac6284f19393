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


#include "dualgrasp/predictor.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dualgrasp/config.hpp"
#include "dualgrasp/controller.hpp"
#include "dualgrasp/sim.hpp"

namespace dualgrasp {

void ImpactGrid::validate() const {
  if (points_per_axis < 1) throw std::invalid_argument("grid needs at least one point");
  if (!(half_range >= 0.0)) throw std::invalid_argument("grid half range must be >= 0");
}

std::vector<Vec2> grid_offsets(const ImpactGrid& grid) {
  grid.validate();
  std::vector<double> axis;
  const int n = grid.points_per_axis;
  for (int j = 0; j < n; ++j) {
    axis.push_back(n == 1 ? 0.0 : -grid.half_range + 2.0 * grid.half_range * j / (n - 1));
  }
  std::vector<Vec2> out;
  for (double y1 : axis) {
    for (double y2 : axis) out.emplace_back(y1, y2);
  }
  return out;
}

std::vector<ImpactConfig> sample_impact_configs(const Config& config,
                                                const ImpactGrid& grid) {
  const Pose2& box = config.box_estimate;
  const Mat2 R = rotation(box.theta);
  const AnteFieldParams field = ante_field_params(config);
  // The unextended approach field is the extended one with a vanishing
  // blending annulus.
  AnteFieldParams raw = field;
  raw.r_min = 0.0;
  raw.r_max = 1e-12;
  const AnteFieldParams& vfield = config.predictor.unextended_velocity ? raw : field;

  std::vector<ImpactConfig> out;
  for (const Vec2& y : grid_offsets(grid)) {
    ImpactConfig ic;
    ic.y_minus = y;
    ic.box.p = box.position();
    ic.box.theta = box.theta;
    bool ok = true;
    for (int i = 0; i < kNumRobots; ++i) {
      const double side = i == 0 ? -1.0 : 1.0;
      EndEffectorPose pose;
      pose.p = box.position() + R * Vec2(side * 0.5 * config.box.width, y[i]);
      pose.theta = box.theta + (i == 0 ? 0.0 : kPi);
      Vec3 q;
      if (!inverse_kinematics(config.robots[i], pose, config.scenario.elbow[i], &q)) {
        ok = false;
        break;
      }
      const RobotJacobians jac = jacobians(config.robots[i], q, Vec3::Zero());
      Mat3 J;
      J.topRows<2>() = jac.J_p;
      J.row(2) = jac.J_theta;
      Vec3 twist;
      twist.head<2>() = ante_linear_field(pose.p, i, vfield).v;
      twist[2] = 0.0;
      RobotState& s = ic.robots[i];
      s.q = q;
      s.dq = J.partialPivLu().solve(twist);
      s.motor_q = s.q;
      s.motor_dq = s.dq;
    }
    if (!ok) {
      std::cerr << fmt::format("warning: impact offset ({:.4f}, {:.4f}) out of reach, skipped\n",
                               y[0], y[1]);
      continue;
    }
    out.push_back(ic);
  }
  return out;
}

std::vector<ImpactSample> run_offline_sims(const Config& config,
                                           const std::vector<ImpactConfig>& configs) {
  const WorldParams world = world_params(config, config.predictor.mode);
  ControllerSetup ctrl = controller_setup(config, nullptr);
  ctrl.ante_only = true;
  const int substeps = config.sim.substeps();
  const double dt = config.sim.dt_control / substeps;
  const long steps = std::lround(config.predictor.horizon / config.sim.dt_control);

  std::vector<ImpactSample> out;
  for (const ImpactConfig& ic : configs) {
    ImpactSample sample;
    sample.y_minus = ic.y_minus;
    WorldState ws;
    ws.robots = ic.robots;
    ws.box = ic.box;
    PhaseState phase;
    double closed_since = kNaN;
    try {
      for (long k = 0; k <= steps; ++k) {
        const double t = k * config.sim.dt_control;
        ws.t = t;
        const ContactSet contacts = world_contacts(world, ws);
        bool all = true;
        for (const auto& c : contacts) all = all && c.in_contact;
        if (!all) {
          closed_since = kNaN;
        } else if (std::isnan(closed_since)) {
          closed_since = t;
        }
        if (!std::isnan(closed_since) &&
            t - closed_since >= config.predictor.t_hold - 1e-9) {
          sample.dq_b_plus = ws.box.twist();
          sample.ok = true;
          break;
        }
        const ControlOutput cmd = control_step(ctrl, t, ws.robots, contacts, &phase);
        if (cmd.fault) break;
        for (int s = 0; s < substeps; ++s) ws = step(world, ws, cmd.tau, dt);
      }
    } catch (const NonFiniteState& e) {
      std::cerr << "warning: impact sample diverged: " << e.what() << "\n";
    }
    if (!sample.ok) {
      std::cerr << fmt::format("warning: impact offset ({:.4f}, {:.4f}) never reached full "
                               "contact, excluded\n", ic.y_minus[0], ic.y_minus[1]);
    }
    out.push_back(sample);
  }
  return out;
}

RbfModel fit_rbf(const std::vector<ImpactSample>& samples, double rho,
                 const ImpactGrid& grid) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  RbfModel model;
  model.rho = rho;
  model.grid = grid;
  std::vector<Vec3> targets;
  for (const ImpactSample& s : samples) {
    if (!s.ok) continue;
    model.nodes.push_back(s.y_minus);
    targets.push_back(s.dq_b_plus);
  }
  const int n = model.size();
  if (n == 0) throw std::invalid_argument("no usable impact samples to fit");
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      if ((model.nodes[j] - model.nodes[k]).norm() == 0.0) {
        throw std::invalid_argument("duplicate RBF node");
      }
    }
  }

  Eigen::MatrixXd Phi(n, n);
  Eigen::MatrixXd Y(n, 3);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      Phi(j, k) = rbf_kernel((model.nodes[j] - model.nodes[k]).norm(), rho);
    }
    Y.row(j) = targets[j].transpose();
  }
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                 Phi, Eigen::EigenvaluesOnly).eigenvalues();
  model.condition = ev.minCoeff() > 0.0 ? ev.maxCoeff() / ev.minCoeff()
                                        : std::numeric_limits<double>::infinity();
  if (model.condition > 1e12) {
    throw std::runtime_error(fmt::format(
        "RBF matrix condition number {:.3g} exceeds 1e12; use a larger rho or fewer nodes",
        model.condition));
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Phi);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    Phi.diagonal().array() += 1e-10;
    ldlt.compute(Phi);
    model.regularized = true;
  }
  model.W = ldlt.solve(Y).transpose();
  return model;
}

Vec3 predict_post_velocity(const RbfModel& model, const Vec2& y_minus,
                           bool* extrapolated) {
  Vec3 out = Vec3::Zero();
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (int j = 0; j < model.size(); ++j) {
    out += model.W.col(j) * rbf_kernel((y_minus - model.nodes[j]).norm(), model.rho);
    lo = lo.cwiseMin(model.nodes[j]);
    hi = hi.cwiseMax(model.nodes[j]);
  }
  if (extrapolated) {
    *extrapolated = (y_minus.array() < lo.array() - 1e-12).any() ||
                    (y_minus.array() > hi.array() + 1e-12).any();
  }
  return out;
}

RbfModel fit_from_config(const Config& config, std::vector<ImpactSample>* samples) {
  const auto configs = sample_impact_configs(config, config.predictor.grid);
  auto s = run_offline_sims(config, configs);
  RbfModel model = fit_rbf(s, config.predictor.rho, config.predictor.grid);
  if (samples) *samples = std::move(s);
  return model;
}

void save_model(std::ostream& os, const RbfModel& model) {
  fmt::print(os, "# dualgrasp post-impact velocity model\n");
  fmt::print(os, "version 1\n");
  fmt::print(os, "rho {:.17g}\n", model.rho);
  fmt::print(os, "grid {} {:.17g}\n", model.grid.points_per_axis, model.grid.half_range);
  fmt::print(os, "regularized {}\n", model.regularized ? 1 : 0);
  fmt::print(os, "condition {:.17g}\n", model.condition);
  fmt::print(os, "nodes {}\n", model.size());
  fmt::print(os, "# y1 y2 w_vx w_vy w_omega\n");
  for (int j = 0; j < model.size(); ++j) {
    fmt::print(os, "{:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n", model.nodes[j].x(),
               model.nodes[j].y(), model.W(0, j), model.W(1, j), model.W(2, j));
  }
}

RbfModel load_model(std::istream& is) {
  auto expect = [&is](const char* word) {
    std::string w;
    while (is >> w && w[0] == '#') std::getline(is, w);
    if (w != word) throw std::runtime_error(std::string("model file: expected ") + word);
  };
  RbfModel m;
  int version = 0, n = 0, reg = 0;
  expect("version");
  is >> version;
  if (version != 1) throw std::runtime_error("model file: unsupported version");
  expect("rho");
  is >> m.rho;
  expect("grid");
  is >> m.grid.points_per_axis >> m.grid.half_range;
  expect("regularized");
  is >> reg;
  m.regularized = reg != 0;
  expect("condition");
  is >> m.condition;
  expect("nodes");
  is >> n;
  if (!is || n < 1) throw std::runtime_error("model file: bad node count");
  std::string line;
  std::getline(is, line);
  m.nodes.resize(n);
  m.W.resize(3, n);
  for (int j = 0; j < n; ++j) {
    while (std::getline(is, line) && (line.empty() || line[0] == '#')) {
    }
    std::istringstream row(line);
    row >> m.nodes[j].x() >> m.nodes[j].y() >> m.W(0, j) >> m.W(1, j) >> m.W(2, j);
    if (!row) throw std::runtime_error("model file: bad node row");
  }
  return m;
}

void save_model_file(const std::string& path, const RbfModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path);
  save_model(out, model);
}

RbfModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  return load_model(in);
}

}  // namespace dualgrasp
