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


#include "dualgrasp/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace dualgrasp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

Task make_task(const std::string& name, double weight, int rows, int cols) {
  Task t;
  t.name = name;
  t.weight = weight;
  t.A = MatrixXd::Zero(rows, cols);
  t.b = VectorXd::Zero(rows);
  return t;
}

void add_torque_bounds(const ControllerGains& gains, int first_row,
                       int (*tau_col)(int), qp::QpProblem* p) {
  for (int i = 0; i < kNumRobots; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r = first_row + 3 * i + j;
      p->A_in(r, tau_col(i) + j) = 1.0;
      p->lb[r] = gains.tau_min;
      p->ub[r] = gains.tau_max;
    }
  }
}

void finish(ControlQp* qp) {
  for (const Task& t : qp->tasks) add_task(t, &qp->problem);
}

}  // namespace

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::kAnte: return "ante";
    case Phase::kInterim: return "interim";
    case Phase::kPost: return "post";
  }
  return "?";
}

const char* to_string(Variant variant) {
  switch (variant) {
    case Variant::kProposed: return "proposed";
    case Variant::kNoImpactMap: return "no-impact-map";
    case Variant::kNoInterim: return "no-interim";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "proposed") return Variant::kProposed;
  if (name == "no-impact-map") return Variant::kNoImpactMap;
  if (name == "no-interim") return Variant::kNoInterim;
  throw std::invalid_argument("unknown controller variant: " + name);
}

void ControllerGains::validate(double mu) const {
  for (double g : {k_sync_pp, k_sync_pd, k_a_p, k_a_theta, k_int_p, k_int_theta,
                   k_p_p, k_p_theta}) {
    require(g > 0.0, "controller gains must be positive");
  }
  for (double w : {w_a_p, w_a_theta, w_a_s, w_p_p, w_p_theta, w_p_lambda, w_p_n}) {
    require(w >= 0.0, "task weights must be nonnegative");
  }
  require(tau_min < tau_max, "tau_min must be below tau_max");
  require(dt > 0.0, "controller dt must be positive");
  require(mu_est > 0.0 && mu_est < mu, "mu_est must lie in (0, mu)");
  require(eps_n > 0.0, "eps_n must be positive");
  require(t_hold >= 0.0, "t_hold must be nonnegative");
}

void ControllerSetup::validate(double mu) const {
  for (const auto& r : robots) r.validate();
  box.validate();
  ante.validate();
  gains.validate(mu);
  require(post.linear_gain > 0.0 && post.angular_gain > 0.0,
          "post field gains must be positive");
  require(ante_only || variant != Variant::kProposed || predictor != nullptr,
          "the proposed controller needs a predictor model");
}

void add_task(const Task& task, qp::QpProblem* problem) {
  if (task.weight == 0.0) return;
  problem->H += 2.0 * task.weight * task.A.transpose() * task.A;
  problem->g -= 2.0 * task.weight * task.A.transpose() * task.b;
}

Vec2 mirror_pose(const Vec2& p2, const Pose2& box_estimate, Mat2* T_s) {
  const Mat2 R = rotation(box_estimate.theta);
  const Mat2 T = R * Eigen::Vector2d(-1.0, 1.0).asDiagonal() * R.transpose();
  if (T_s) *T_s = T;
  const Vec2 pb = box_estimate.position();
  return T * (p2 - pb) + pb;
}

ControlQp build_ante_qp(const ControllerSetup& setup,
                        const std::array<RobotState, kNumRobots>& states) {
  const ControllerGains& k = setup.gains;
  const int n = layout::kAnteVars;
  ControlQp out;
  out.problem = qp::QpProblem(n, 6, 6);
  qp::QpProblem& p = out.problem;

  std::array<EndEffectorPose, kNumRobots> ee;
  std::array<RobotJacobians, kNumRobots> jac;
  for (int i = 0; i < kNumRobots; ++i) {
    const RobotState& s = states[i];
    ee[i] = forward_kinematics(setup.robots[i], s.q);
    jac[i] = jacobians(setup.robots[i], s.q, s.dq);
    const MassBias mb = mass_bias(setup.robots[i], s.q, s.dq, setup.box.gravity);

    const Vec2 v_d = ante_linear_field(ee[i].p, i, setup.ante).v;
    const Vec2 a_d = ante_linear_acceleration(ee[i].p, i, setup.ante);
    const double w_d = ante_angular_field(ee[i].theta, i, setup.ante);
    const double alpha_d = ante_angular_acceleration(ee[i].theta, i, setup.ante);

    Task tp = make_task(i == 0 ? "ante_p1" : "ante_p2", k.w_a_p, 2, n);
    tp.A.middleCols<3>(layout::ante_ddq(i)) = jac[i].J_p;
    tp.b = a_d + k.k_a_p * (v_d - jac[i].J_p * s.dq) - jac[i].dJ_p * s.dq;
    out.tasks.push_back(std::move(tp));

    Task tt = make_task(i == 0 ? "ante_theta1" : "ante_theta2", k.w_a_theta, 1, n);
    tt.A.block<1, 3>(0, layout::ante_ddq(i)) = jac[i].J_theta;
    tt.b[0] = alpha_d + k.k_a_theta * (w_d - jac[i].J_theta.dot(s.dq)) -
              jac[i].dJ_theta.dot(s.dq);
    out.tasks.push_back(std::move(tt));

    // M ddq - tau = -h
    p.A_eq.block<3, 3>(3 * i, layout::ante_ddq(i)) = mb.M;
    p.A_eq.block<3, 3>(3 * i, layout::ante_tau(i)) = -Mat3::Identity();
    p.b_eq.segment<3>(3 * i) = -mb.h;
  }

  // Synchronisation of p1 with the mirror image of p2, box assumed static.
  Mat2 T;
  const Vec2 p2m = mirror_pose(ee[1].p, setup.box_estimate, &T);
  const Vec3& dq1 = states[0].dq;
  const Vec3& dq2 = states[1].dq;
  Task ts = make_task("ante_sync", k.w_a_s, 2, n);
  ts.A.middleCols<3>(layout::ante_ddq(0)) = jac[0].J_p;
  ts.A.middleCols<3>(layout::ante_ddq(1)) = -T * jac[1].J_p;
  ts.b = -jac[0].dJ_p * dq1 + T * jac[1].dJ_p * dq2 +
         k.k_sync_pp * (p2m - ee[0].p) +
         k.k_sync_pd * (T * jac[1].J_p * dq2 - jac[0].J_p * dq1);
  out.tasks.push_back(std::move(ts));

  add_torque_bounds(k, 0, layout::ante_tau, &p);
  finish(&out);
  return out;
}

void update_interim_ref(const AnteFieldParams& fields, double dt,
                        PhaseState* state) {
  for (int i = 0; i < kNumRobots; ++i) {
    const Vec2 v = ante_linear_field(state->p_int[i], i, fields).v;
    const double w = ante_angular_field(state->theta_int[i], i, fields);
    state->p_int[i] += v * dt;
    state->theta_int[i] += w * dt;
  }
}

Vec3 nominal_joint_velocity(const RobotParams& params, const Vec3& q, int robot,
                            const AnteFieldParams& fields, bool* damped) {
  const EndEffectorPose ee = forward_kinematics(params, q);
  const RobotJacobians jac = jacobians(params, q, Vec3::Zero());
  Mat3 J;
  J.topRows<2>() = jac.J_p;
  J.row(2) = jac.J_theta;
  Vec3 v;
  v.head<2>() = ante_linear_field(ee.p, robot, fields).v;
  v[2] = ante_angular_field(ee.theta, robot, fields);

  const Vec3 sv = J.jacobiSvd().singularValues();
  const bool singular = sv[2] <= 0.0 || sv[0] / sv[2] > 1e8;
  if (damped) *damped = singular;
  if (!singular) return J.partialPivLu().solve(v);
  const double lambda = 1e-6;
  return J.transpose() *
         (J * J.transpose() + lambda * Mat3::Identity()).ldlt().solve(v);
}

ControlQp build_interim_qp(const ControllerSetup& setup,
                           const std::array<RobotState, kNumRobots>& states,
                           const PhaseState& phase_state) {
  const ControllerGains& k = setup.gains;
  const int n = layout::kAnteVars;
  ControlQp out;
  out.problem = qp::QpProblem(n, 6, 6);
  qp::QpProblem& p = out.problem;

  for (int i = 0; i < kNumRobots; ++i) {
    const Vec3& q = states[i].q;
    const Vec3 dq_int = nominal_joint_velocity(setup.robots[i], q, i, setup.ante);
    const EndEffectorPose ee = forward_kinematics(setup.robots[i], q);
    const RobotJacobians jac = jacobians(setup.robots[i], q, dq_int);
    const MassBias mb = mass_bias(setup.robots[i], q, dq_int, setup.box.gravity);

    const Vec2 a_d = ante_linear_acceleration(ee.p, i, setup.ante);
    const double alpha_d = ante_angular_acceleration(ee.theta, i, setup.ante);

    Task tp = make_task(i == 0 ? "interim_p1" : "interim_p2", k.w_a_p, 2, n);
    tp.A.middleCols<3>(layout::ante_ddq(i)) = jac.J_p;
    tp.b = a_d + k.k_int_p * (phase_state.p_int[i] - ee.p) - jac.dJ_p * dq_int;
    out.tasks.push_back(std::move(tp));

    Task tt = make_task(i == 0 ? "interim_theta1" : "interim_theta2",
                        k.w_a_theta, 1, n);
    tt.A.block<1, 3>(0, layout::ante_ddq(i)) = jac.J_theta;
    tt.b[0] = alpha_d + k.k_int_theta * (phase_state.theta_int[i] - ee.theta) -
              jac.dJ_theta.dot(dq_int);
    out.tasks.push_back(std::move(tt));

    p.A_eq.block<3, 3>(3 * i, layout::ante_ddq(i)) = mb.M;
    p.A_eq.block<3, 3>(3 * i, layout::ante_tau(i)) = -Mat3::Identity();
    p.b_eq.segment<3>(3 * i) = -mb.h;
  }
  add_torque_bounds(k, 0, layout::ante_tau, &p);
  finish(&out);
  return out;
}

BoxState estimate_box_state(const std::array<RobotParams, kNumRobots>& robots,
                            const std::array<RobotState, kNumRobots>& states) {
  std::array<EndEffectorPose, kNumRobots> ee;
  std::array<Vec2, kNumRobots> v;
  std::array<double, kNumRobots> w;
  for (int i = 0; i < kNumRobots; ++i) {
    ee[i] = forward_kinematics(robots[i], states[i].q);
    const RobotJacobians jac = jacobians(robots[i], states[i].q, states[i].dq);
    v[i] = jac.J_p * states[i].dq;
    w[i] = jac.J_theta.dot(states[i].dq);
  }
  // Bring robot 2's angle next to robot 1's before averaging.
  const double theta2 = ee[0].theta + wrap_angle(ee[1].theta - kPi - ee[0].theta);
  BoxState b;
  b.p = 0.5 * (ee[0].p + ee[1].p);
  b.theta = 0.5 * (ee[0].theta + theta2);
  b.dp = 0.5 * (v[0] + v[1]);
  b.dtheta = 0.5 * (w[0] + w[1]);
  return b;
}

ControlQp build_post_qp(const ControllerSetup& setup,
                        const std::array<RobotState, kNumRobots>& states,
                        const PostFieldParams& fields) {
  using namespace layout;
  const ControllerGains& k = setup.gains;
  const int n = kPostVars;
  ControlQp out;
  out.problem = qp::QpProblem(n, 15, 18);
  qp::QpProblem& p = out.problem;

  const BoxState est = estimate_box_state(setup.robots, states);
  const ContactKinematics kin =
      contact_jacobians(setup.robots, states, setup.box, est);
  const MassBias mb_box = box_mass_bias(setup.box);

  for (int i = 0; i < kNumRobots; ++i) {
    const MassBias mb =
        mass_bias(setup.robots[i], states[i].q, states[i].dq, setup.box.gravity);
    // M ddq + h = tau + J_N' lN - J_T' lT
    p.A_eq.block<3, 3>(3 * i, post_ddq(i)) = mb.M;
    p.A_eq.block<3, 3>(3 * i, post_tau(i)) = -Mat3::Identity();
    p.A_eq.block<3, 4>(3 * i, kPostLambdaN) = -kin.J_N[i].transpose();
    p.A_eq.block<3, 4>(3 * i, kPostLambdaT) = kin.J_T[i].transpose();
    p.b_eq.segment<3>(3 * i) = -mb.h;
  }
  // M_b ddq_b + h_b = -J_Nb' lN + J_Tb' lT
  p.A_eq.block<3, 3>(6, kPostDdqb) = mb_box.M;
  p.A_eq.block<3, 4>(6, kPostLambdaN) = kin.J_Nb.transpose();
  p.A_eq.block<3, 4>(6, kPostLambdaT) = -kin.J_Tb.transpose();
  p.b_eq.segment<3>(6) = -mb_box.h;
  // No normal acceleration at any contact, no slip acceleration at the first
  // contact of each end effector.
  for (int c = 0; c < kNumContacts; ++c) {
    const int r = 9 + c;
    for (int i = 0; i < kNumRobots; ++i) {
      p.A_eq.block<1, 3>(r, post_ddq(i)) = kin.J_N[i].row(c);
    }
    p.A_eq.block<1, 3>(r, kPostDdqb) = -kin.J_Nb.row(c);
    p.b_eq[r] = -kin.gap_drift[c];
  }
  for (int j = 0; j < 2; ++j) {
    const int c = 2 * j;
    const int r = 13 + j;
    for (int i = 0; i < kNumRobots; ++i) {
      p.A_eq.block<1, 3>(r, post_ddq(i)) = kin.J_T[i].row(c);
    }
    p.A_eq.block<1, 3>(r, kPostDdqb) = -kin.J_Tb.row(c);
    p.b_eq[r] = -kin.slip_drift[c];
  }

  add_torque_bounds(k, 0, post_tau, &p);
  const double inf = std::numeric_limits<double>::infinity();
  for (int c = 0; c < kNumContacts; ++c) {
    int r = 6 + c;
    p.A_in(r, kPostLambdaN + c) = 1.0;
    p.lb[r] = k.eps_n;
    p.ub[r] = inf;
    // |lT| <= mu_est lN
    r = 10 + 2 * c;
    p.A_in(r, kPostLambdaT + c) = 1.0;
    p.A_in(r, kPostLambdaN + c) = -k.mu_est;
    p.lb[r] = -inf;
    p.ub[r] = 0.0;
    p.A_in(r + 1, kPostLambdaT + c) = 1.0;
    p.A_in(r + 1, kPostLambdaN + c) = k.mu_est;
    p.lb[r + 1] = 0.0;
    p.ub[r + 1] = inf;
  }

  const Vec3 pose = est.pose();
  const Vec3 ref = post_field(pose, fields);
  const Vec3 acc = post_field_acceleration(pose, fields);

  Task tp = make_task("post_p", k.w_p_p, 2, n);
  tp.A.block<2, 2>(0, kPostDdqb) = Mat2::Identity();
  tp.b = acc.head<2>() + k.k_p_p * (ref.head<2>() - est.dp);
  out.tasks.push_back(std::move(tp));

  Task tt = make_task("post_theta", k.w_p_theta, 1, n);
  tt.A(0, kPostDdqb + 2) = 1.0;
  tt.b[0] = acc[2] + k.k_p_theta * (ref[2] - est.dtheta);
  out.tasks.push_back(std::move(tt));

  Task tl = make_task("post_lambda", k.w_p_lambda, 2, n);
  tl.A(0, kPostLambdaN + 0) = 1.0;
  tl.A(0, kPostLambdaN + 1) = -1.0;
  tl.A(1, kPostLambdaN + 2) = 1.0;
  tl.A(1, kPostLambdaN + 3) = -1.0;
  out.tasks.push_back(std::move(tl));

  Task tn = make_task("post_normal", k.w_p_n, 4, n);
  tn.A.block<4, 4>(0, kPostLambdaN).setIdentity();
  out.tasks.push_back(std::move(tn));

  finish(&out);
  return out;
}

bool contact_closed(const ContactPoint& c, const ControllerSetup& setup) {
  if (setup.detector == ImpactDetector::kForce) {
    return c.normal_force >= setup.gains.force_threshold;
  }
  return c.in_contact;
}

bool phase_switch(const ControllerSetup& setup, const ContactSet& contacts,
                  double t, PhaseState* state) {
  bool any = false;
  bool all = true;
  for (int c = 0; c < kNumContacts; ++c) {
    const bool closed = contact_closed(contacts[c], setup);
    any = any || closed;
    all = all && closed;
    const int robot = robot_of_contact(c);
    if (closed && std::isnan(state->impact_times[robot])) {
      state->impact_times[robot] = t;
    }
  }
  if (all) {
    if (std::isnan(state->full_contact_since)) state->full_contact_since = t;
  } else {
    state->full_contact_since = kNaN;
  }
  if (setup.ante_only || state->phase == Phase::kPost) return false;

  if (state->phase == Phase::kAnte && any &&
      setup.variant != Variant::kNoInterim) {
    state->phase = Phase::kInterim;
    state->t_int = t;
  }
  const bool held = !std::isnan(state->full_contact_since) &&
                    t - state->full_contact_since >= setup.gains.t_hold - 1e-9;
  if (held) {
    state->phase = Phase::kPost;
    state->t_post = t;
    return true;
  }
  return false;
}

ControlOutput control_step(const ControllerSetup& setup, double t,
                           const std::array<RobotState, kNumRobots>& states,
                           const ContactSet& contacts, PhaseState* state) {
  const Phase before = state->phase;
  phase_switch(setup, contacts, t, state);

  if (state->phase == Phase::kInterim && before == Phase::kAnte) {
    for (int i = 0; i < kNumRobots; ++i) {
      const EndEffectorPose ee = forward_kinematics(setup.robots[i], states[i].q);
      state->p_int[i] = ee.p;
      state->theta_int[i] = ee.theta;
    }
  }
  if (state->phase == Phase::kPost && before != Phase::kPost) {
    const BoxState est = estimate_box_state(setup.robots, states);
    const Mat2 Rt = rotation(est.theta).transpose();
    for (int i = 0; i < kNumRobots; ++i) {
      const EndEffectorPose ee = forward_kinematics(setup.robots[i], states[i].q);
      state->y_minus[i] = (Rt * (ee.p - est.p)).y();
    }
    state->p_b_plus = est.p;
    state->dq_b_plus = setup.predictor
                           ? predict_post_velocity(*setup.predictor, state->y_minus)
                           : Vec3::Zero();
    const bool use = setup.variant != Variant::kNoImpactMap && setup.predictor;
    state->post = make_post_field(setup.post.goal, est.p, state->dq_b_plus,
                                  setup.post.linear_gain, setup.post.angular_gain,
                                  setup.post.r_max_cap, use);
  }

  ControlOutput out;
  out.phase = state->phase;
  ControlQp cqp;
  switch (state->phase) {
    case Phase::kAnte:
      cqp = build_ante_qp(setup, states);
      break;
    case Phase::kInterim:
      cqp = build_interim_qp(setup, states, *state);
      break;
    case Phase::kPost:
      cqp = build_post_qp(setup, states, state->post);
      break;
  }

  const bool warm_ok = state->warm_phase == state->phase &&
                       state->warm.x.size() == cqp.problem.num_variables();
  const qp::QpSolution sol = qp::solve(cqp.problem, warm_ok ? &state->warm : nullptr);
  out.status = sol.status;
  out.kkt_residual = sol.kkt_residual;
  out.iterations = sol.iterations;

  const bool post = state->phase == Phase::kPost;
  if (sol.status == qp::QpStatus::kOptimal) {
    for (int i = 0; i < kNumRobots; ++i) {
      const int col = post ? layout::post_tau(i) : layout::ante_tau(i);
      out.tau[i] = sol.x.segment<3>(col);
    }
    state->last_tau = out.tau;
    state->warm = {sol.x, sol.active_set};
    state->warm_phase = state->phase;
    out.solution = sol.x;
    for (const Task& task : cqp.tasks) {
      out.task_errors.emplace_back(task.name, (task.A * sol.x - task.b).norm());
    }
  } else {
    out.tau = state->last_tau;
    out.fault = true;
    state->fault = true;
    state->warm = {};
  }

  if (post) {
    out.box_estimate = estimate_box_state(setup.robots, states);
    out.box_ref = post_field(out.box_estimate.pose(), state->post);
  }
  // End-effector references: the ante field (at the integrated reference in
  // the interim phase), or the box reference carried rigidly to the EE.
  for (int i = 0; i < kNumRobots; ++i) {
    const EndEffectorPose ee = forward_kinematics(setup.robots[i], states[i].q);
    if (post) {
      const Vec2 r = ee.p - out.box_estimate.p;
      out.ee_velocity_ref[i] = out.box_ref.head<2>() + out.box_ref[2] * Vec2(-r.y(), r.x());
      out.ee_angular_ref[i] = out.box_ref[2];
    } else if (state->phase == Phase::kInterim) {
      out.ee_velocity_ref[i] = ante_linear_field(state->p_int[i], i, setup.ante).v;
      out.ee_angular_ref[i] = ante_angular_field(state->theta_int[i], i, setup.ante);
    } else {
      out.ee_velocity_ref[i] = ante_linear_field(ee.p, i, setup.ante).v;
      out.ee_angular_ref[i] = ante_angular_field(ee.theta, i, setup.ante);
    }
  }
  if (!post) {
    const Pose2& b = setup.box_estimate;
    out.box_estimate.p = b.position();
    out.box_estimate.theta = b.theta;
  }

  if (state->phase == Phase::kInterim) {
    update_interim_ref(setup.ante, setup.gains.dt, state);
  }
  return out;
}

}  // namespace dualgrasp
