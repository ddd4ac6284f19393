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


#include "dualgrasp/sim.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace dualgrasp {
namespace {

bool finite(const WorldState& s) {
  bool ok = std::isfinite(s.box.p.sum() + s.box.theta + s.box.dp.sum() + s.box.dtheta);
  for (const auto& r : s.robots) {
    ok = ok && std::isfinite(r.q.sum() + r.dq.sum() + r.motor_q.sum() + r.motor_dq.sum());
  }
  return ok;
}

std::string dump(const WorldState& s) {
  std::ostringstream os;
  os << "t=" << s.t;
  for (int i = 0; i < kNumRobots; ++i) {
    os << " q" << i + 1 << "=[" << s.robots[i].q.transpose() << "] dq" << i + 1
       << "=[" << s.robots[i].dq.transpose() << "]";
  }
  os << " box=[" << s.box.pose().transpose() << "] dbox=[" << s.box.twist().transpose()
     << "]";
  return os.str();
}

// x + h * rates, evaluated from a base state and a derivative "state".
struct Deriv {
  std::array<Vec3, kNumRobots> dq, ddq, dm, ddm;
  Vec3 dqb, ddqb;
};

Deriv derivative(const WorldParams& params, const WorldState& s,
                 const std::array<Vec3, kNumRobots>& tau) {
  const WorldRates r = world_rates(params, s, tau);
  Deriv d;
  for (int i = 0; i < kNumRobots; ++i) {
    d.dq[i] = s.robots[i].dq;
    d.ddq[i] = r.ddq[i];
    d.dm[i] = s.robots[i].motor_dq;
    d.ddm[i] = r.motor_ddq[i];
  }
  d.dqb = s.box.twist();
  d.ddqb = r.ddq_b;
  return d;
}

WorldState advance(const WorldState& s, const Deriv& d, double h, bool flexible) {
  WorldState out = s;
  out.t = s.t + h;
  for (int i = 0; i < kNumRobots; ++i) {
    out.robots[i].q += h * d.dq[i];
    out.robots[i].dq += h * d.ddq[i];
    if (flexible) {
      out.robots[i].motor_q += h * d.dm[i];
      out.robots[i].motor_dq += h * d.ddm[i];
    }
  }
  out.box.p += h * d.dqb.head<2>();
  out.box.theta += h * d.dqb[2];
  out.box.dp += h * d.ddqb.head<2>();
  out.box.dtheta += h * d.ddqb[2];
  return out;
}

int task_column(const std::string& name) {
  static const std::map<std::string, int> map{
      {"ante_p1", 0},       {"interim_p1", 0},     {"ante_p2", 1},
      {"interim_p2", 1},    {"ante_theta1", 2},    {"interim_theta1", 2},
      {"ante_theta2", 3},   {"interim_theta2", 3}, {"ante_sync", 4},
      {"post_p", 5},        {"post_theta", 6},     {"post_lambda", 7},
      {"post_normal", 8}};
  const auto it = map.find(name);
  return it == map.end() ? -1 : it->second;
}

Phase parse_phase(const std::string& s) {
  if (s == "ante") return Phase::kAnte;
  if (s == "interim") return Phase::kInterim;
  if (s == "post") return Phase::kPost;
  throw std::runtime_error("bad phase in log: " + s);
}

qp::QpStatus parse_status(const std::string& s) {
  if (s == "optimal") return qp::QpStatus::kOptimal;
  if (s == "infeasible") return qp::QpStatus::kInfeasible;
  return qp::QpStatus::kMaxIter;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<std::string> log_header() {
  std::vector<std::string> h{"t", "phase"};
  for (int i = 1; i <= kNumRobots; ++i) {
    for (int j = 1; j <= 3; ++j) h.push_back(fmt::format("q{}_{}", i, j));
    for (int j = 1; j <= 3; ++j) h.push_back(fmt::format("dq{}_{}", i, j));
  }
  for (int i = 1; i <= kNumRobots; ++i) {
    for (const char* c : {"x", "y", "theta", "vx", "vy", "w", "vx_ref", "vy_ref"}) {
      h.push_back(fmt::format("ee{}_{}", i, c));
    }
  }
  for (const char* p : {"box", "est"}) {
    for (const char* c : {"x", "y", "theta", "vx", "vy", "w"}) {
      h.push_back(fmt::format("{}_{}", p, c));
    }
  }
  for (const char* c : {"ref_vx", "ref_vy", "ref_w"}) h.emplace_back(c);
  for (int k = 1; k <= kNumContacts; ++k) {
    for (const char* c : {"gap", "gap_rate", "slip_rate", "lambda_n", "lambda_t", "closed"}) {
      h.push_back(fmt::format("{}{}", c, k));
    }
  }
  for (int i = 1; i <= kNumRobots; ++i) {
    for (int j = 1; j <= 3; ++j) h.push_back(fmt::format("tau{}_{}", i, j));
  }
  for (const char* c : kTaskColumns) h.push_back(fmt::format("e_{}", c));
  for (const char* c : {"qp_status", "kkt_residual", "qp_iterations", "fault"}) {
    h.emplace_back(c);
  }
  return h;
}

}  // namespace

const char* to_string(SimMode mode) {
  return mode == SimMode::kRigid ? "rigid" : "flexible";
}

SimMode parse_sim_mode(const std::string& name) {
  if (name == "rigid") return SimMode::kRigid;
  if (name == "flexible") return SimMode::kFlexible;
  throw std::invalid_argument("unknown sim mode: " + name);
}

int SimConfig::substeps() const {
  return static_cast<int>(std::lround(dt_control / dt_integrator));
}

void SimConfig::validate() const {
  if (!(dt_integrator > 0.0 && dt_control > 0.0 && horizon > 0.0)) {
    throw std::invalid_argument("sim time steps and horizon must be positive");
  }
  const double ratio = dt_control / dt_integrator;
  if (substeps() < 1 || std::abs(ratio - substeps()) > 1e-9 * ratio) {
    throw std::invalid_argument("dt_control must be an integer multiple of dt_integrator");
  }
  if (!(success_tolerance > 0.0 && success_angle_tolerance > 0.0 && success_hold >= 0.0)) {
    throw std::invalid_argument("success tolerances must be positive");
  }
}

ContactSet world_contacts(const WorldParams& params, const WorldState& state) {
  const ContactKinematics kin =
      contact_jacobians(params.robots, state.robots, params.box, state.box);
  return evaluate_contacts(kin, params.box, params.contact);
}

WorldRates world_rates(const WorldParams& params, const WorldState& state,
                       const std::array<Vec3, kNumRobots>& tau) {
  const ContactKinematics kin =
      contact_jacobians(params.robots, state.robots, params.box, state.box);
  WorldRates out;
  out.contacts = evaluate_contacts(kin, params.box, params.contact);
  Eigen::Vector4d lN = Eigen::Vector4d::Zero();
  Eigen::Vector4d lT = Eigen::Vector4d::Zero();
  for (int k = 0; k < kNumContacts; ++k) {
    if (!out.contacts[k].in_contact) continue;
    lN[k] = out.contacts[k].normal_force;
    lT[k] = out.contacts[k].tangential_force;
  }
  const double g = params.box.gravity;
  const bool flexible = params.mode == SimMode::kFlexible;
  for (int i = 0; i < kNumRobots; ++i) {
    const RobotState& s = state.robots[i];
    const MassBias mb = mass_bias(params.robots[i], s.q, s.dq, g);
    Vec3 link_torque = tau[i];
    if (flexible) {
      link_torque = transmission_torque(params.flexible, s);
      const Vec3 u = flexible_joint_step_inputs(params.flexible, s, tau[i],
                                                params.tau_min, params.tau_max);
      out.motor_ddq[i] = (u - link_torque) / params.flexible.motor_inertia;
    }
    const Vec3 rhs = link_torque - mb.h + kin.J_N[i].transpose() * lN -
                     kin.J_T[i].transpose() * lT;
    out.ddq[i] = mb.M.ldlt().solve(rhs);
  }
  const MassBias mb = box_mass_bias(params.box);
  const Vec3 rhs = -mb.h - kin.J_Nb.transpose() * lN + kin.J_Tb.transpose() * lT;
  out.ddq_b = mb.M.diagonal().cwiseInverse().cwiseProduct(rhs);
  return out;
}

WorldState step(const WorldParams& params, const WorldState& state,
                const std::array<Vec3, kNumRobots>& tau, double dt) {
  const bool flex = params.mode == SimMode::kFlexible;
  const Deriv k1 = derivative(params, state, tau);
  const Deriv k2 = derivative(params, advance(state, k1, 0.5 * dt, flex), tau);
  const Deriv k3 = derivative(params, advance(state, k2, 0.5 * dt, flex), tau);
  const Deriv k4 = derivative(params, advance(state, k3, dt, flex), tau);
  Deriv d;
  auto mix = [](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& e) {
    return Vec3((a + 2.0 * b + 2.0 * c + e) / 6.0);
  };
  for (int i = 0; i < kNumRobots; ++i) {
    d.dq[i] = mix(k1.dq[i], k2.dq[i], k3.dq[i], k4.dq[i]);
    d.ddq[i] = mix(k1.ddq[i], k2.ddq[i], k3.ddq[i], k4.ddq[i]);
    d.dm[i] = mix(k1.dm[i], k2.dm[i], k3.dm[i], k4.dm[i]);
    d.ddm[i] = mix(k1.ddm[i], k2.ddm[i], k3.ddm[i], k4.ddm[i]);
  }
  d.dqb = mix(k1.dqb, k2.dqb, k3.dqb, k4.dqb);
  d.ddqb = mix(k1.ddqb, k2.ddqb, k3.ddqb, k4.ddqb);
  WorldState out = advance(state, d, dt, flex);
  if (!flex) {
    for (auto& r : out.robots) {
      r.motor_q = r.q;
      r.motor_dq = r.dq;
    }
  }
  if (!finite(out)) throw NonFiniteState("non-finite state: " + dump(out));
  return out;
}

GoalMonitor::GoalMonitor(const Pose2& goal, const SimConfig& sim)
    : goal_(goal),
      tolerance_(sim.success_tolerance),
      angle_tolerance_(sim.success_angle_tolerance),
      hold_(sim.success_hold) {}

bool GoalMonitor::update(const LogRecord& rec) {
  if (rec.phase != Phase::kPost) return false;
  const double dp = (rec.box_estimate.p - goal_.position()).norm();
  const double dth =
      std::abs(std::remainder(rec.box_estimate.theta - goal_.theta, 2.0 * kPi));
  if (dp < tolerance_ && dth < angle_tolerance_) {
    if (std::isnan(since_)) since_ = rec.t;
    return rec.t - since_ >= hold_ - 1e-9;
  }
  since_ = kNaN;
  return false;
}

EpisodeLog run_episode(const EpisodeSetup& setup) {
  setup.sim.validate();
  setup.controller.validate(setup.world.contact.friction);
  const SimConfig& sim = setup.sim;
  const int substeps = sim.substeps();
  const double dt = sim.dt_control / substeps;
  const long steps = std::lround(sim.horizon / sim.dt_control);
  const Pose2& goal = setup.controller.post.goal;

  EpisodeLog log;
  PhaseState phase;
  WorldState ws = setup.initial;
  GoalMonitor monitor(goal, sim);

  for (long k = 0; k <= steps; ++k) {
    const double t = k * sim.dt_control;
    ws.t = t;
    const ContactSet contacts = world_contacts(setup.world, ws);
    const ControlOutput out =
        control_step(setup.controller, t, ws.robots, contacts, &phase);

    LogRecord rec;
    rec.t = t;
    rec.phase = out.phase;
    rec.robots = ws.robots;
    for (int i = 0; i < kNumRobots; ++i) {
      const RobotParams& rp = setup.world.robots[i];
      const EndEffectorPose ee = forward_kinematics(rp, ws.robots[i].q);
      const RobotJacobians jac = jacobians(rp, ws.robots[i].q, ws.robots[i].dq);
      rec.ee_p[i] = ee.p;
      rec.ee_theta[i] = ee.theta;
      rec.ee_v[i] = jac.J_p * ws.robots[i].dq;
      rec.ee_w[i] = jac.J_theta.dot(ws.robots[i].dq);
      rec.ee_v_ref[i] = out.ee_velocity_ref[i];
    }
    rec.box = ws.box;
    rec.box_estimate = out.box_estimate;
    rec.box_ref = out.box_ref;
    rec.contacts = contacts;
    rec.tau = out.tau;
    for (const auto& [name, value] : out.task_errors) {
      const int c = task_column(name);
      if (c >= 0) rec.task_errors[c] = value;
    }
    rec.status = out.status;
    rec.kkt_residual = out.kkt_residual;
    rec.iterations = out.iterations;
    rec.fault = out.fault;
    log.records.push_back(rec);

    if (out.fault) {
      log.fault = true;
      log.fault_message = fmt::format("QP {} at t = {:.4f} s ({} phase)",
                                      qp::to_string(out.status), t,
                                      to_string(out.phase));
      break;
    }

    if (monitor.update(rec) && !log.success) {
      log.success = true;
      log.success_time = t;
      if (sim.stop_on_success) break;
    }
    if (k == steps) break;

    try {
      for (int s = 0; s < substeps; ++s) {
        ws = step(setup.world, ws, out.tau, dt);
      }
    } catch (const NonFiniteState& e) {
      log.records.back().fault = true;
      log.fault = true;
      log.fault_message = e.what();
      break;
    }
  }
  log.final_phase = phase;
  return log;
}

void write_log_csv(std::ostream& os, const EpisodeLog& log) {
  const auto header = log_header();
  for (size_t c = 0; c < header.size(); ++c) {
    os << (c ? "," : "") << header[c];
  }
  os << '\n';
  fmt::memory_buffer buf;
  auto num = [&buf](double v) { fmt::format_to(std::back_inserter(buf), ",{:.17g}", v); };
  for (const LogRecord& r : log.records) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{:.17g},{}", r.t, to_string(r.phase));
    for (const auto& s : r.robots) {
      for (int j = 0; j < 3; ++j) num(s.q[j]);
      for (int j = 0; j < 3; ++j) num(s.dq[j]);
    }
    for (int i = 0; i < kNumRobots; ++i) {
      num(r.ee_p[i].x());
      num(r.ee_p[i].y());
      num(r.ee_theta[i]);
      num(r.ee_v[i].x());
      num(r.ee_v[i].y());
      num(r.ee_w[i]);
      num(r.ee_v_ref[i].x());
      num(r.ee_v_ref[i].y());
    }
    for (const BoxState* b : {&r.box, &r.box_estimate}) {
      for (int j = 0; j < 3; ++j) num(b->pose()[j]);
      for (int j = 0; j < 3; ++j) num(b->twist()[j]);
    }
    for (int j = 0; j < 3; ++j) num(r.box_ref[j]);
    for (const ContactPoint& c : r.contacts) {
      num(c.gap);
      num(c.gap_rate);
      num(c.slip_rate);
      num(c.in_contact ? c.normal_force : 0.0);
      num(c.in_contact ? c.tangential_force : 0.0);
      num(c.in_contact ? 1.0 : 0.0);
    }
    for (const auto& tau : r.tau) {
      for (int j = 0; j < 3; ++j) num(tau[j]);
    }
    for (double e : r.task_errors) num(e);
    fmt::format_to(std::back_inserter(buf), ",{}", qp::to_string(r.status));
    num(r.kkt_residual);
    fmt::format_to(std::back_inserter(buf), ",{},{}\n", r.iterations, r.fault ? 1 : 0);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

EpisodeLog read_log_csv(std::istream& is) {
  EpisodeLog log;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty episode log");
  const auto header = split(line);
  if (header != log_header()) throw std::runtime_error("unexpected episode log header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw std::runtime_error("short log row");
    size_t c = 0;
    auto num = [&]() { return std::strtod(cells[c++].c_str(), nullptr); };
    LogRecord r;
    r.t = num();
    r.phase = parse_phase(cells[c++]);
    for (auto& s : r.robots) {
      for (int j = 0; j < 3; ++j) s.q[j] = num();
      for (int j = 0; j < 3; ++j) s.dq[j] = num();
    }
    for (int i = 0; i < kNumRobots; ++i) {
      r.ee_p[i].x() = num();
      r.ee_p[i].y() = num();
      r.ee_theta[i] = num();
      r.ee_v[i].x() = num();
      r.ee_v[i].y() = num();
      r.ee_w[i] = num();
      r.ee_v_ref[i].x() = num();
      r.ee_v_ref[i].y() = num();
    }
    for (BoxState* b : {&r.box, &r.box_estimate}) {
      b->p.x() = num();
      b->p.y() = num();
      b->theta = num();
      b->dp.x() = num();
      b->dp.y() = num();
      b->dtheta = num();
    }
    for (int j = 0; j < 3; ++j) r.box_ref[j] = num();
    for (ContactPoint& cp : r.contacts) {
      cp.gap = num();
      cp.gap_rate = num();
      cp.slip_rate = num();
      cp.normal_force = num();
      cp.tangential_force = num();
      cp.in_contact = num() != 0.0;
    }
    for (auto& tau : r.tau) {
      for (int j = 0; j < 3; ++j) tau[j] = num();
    }
    for (double& e : r.task_errors) e = num();
    r.status = parse_status(cells[c++]);
    r.kkt_residual = num();
    r.iterations = std::atoi(cells[c++].c_str());
    r.fault = cells[c++] == "1";
    log.fault = log.fault || r.fault;
    log.records.push_back(r);
  }
  return log;
}

}  // namespace dualgrasp
