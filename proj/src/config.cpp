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


#include "dualgrasp/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace dualgrasp {
namespace {

constexpr double kDeg = kPi / 180.0;

struct Binding {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  size_t used = 0;
  const double v = std::stod(s, &used);
  if (trim(s.substr(used)) != "") throw std::invalid_argument("not a number: " + s);
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_num(double v) { return fmt::format("{:.17g}", v); }

class Binder {
 public:
  explicit Binder(std::string section) : section_(std::move(section)) {}

  Binder& num(const std::string& key, double* v, double scale = 1.0) {
    add(key, [v, scale] { return fmt_num(*v / scale); },
        [v, scale](const std::string& s) { *v = to_double(s) * scale; });
    return *this;
  }
  Binder& deg(const std::string& key, double* v) { return num(key, v, kDeg); }
  Binder& integer(const std::string& key, int* v) {
    add(key, [v] { return std::to_string(*v); },
        [v](const std::string& s) { *v = static_cast<int>(to_double(s)); });
    return *this;
  }
  Binder& flag(const std::string& key, bool* v) {
    add(key, [v] { return std::string(*v ? "true" : "false"); },
        [v, key](const std::string& s) {
          if (s == "true" || s == "1") *v = true;
          else if (s == "false" || s == "0") *v = false;
          else throw std::invalid_argument("bad boolean for " + key + ": " + s);
        });
    return *this;
  }
  Binder& text(const std::string& key, std::string* v) {
    add(key, [v] { return *v; }, [v](const std::string& s) { *v = s; });
    return *this;
  }
  Binder& triple(const std::string& key, std::array<double, 3>* v) {
    add(key,
        [v] { return fmt::format("{}, {}, {}", fmt_num((*v)[0]), fmt_num((*v)[1]),
                                 fmt_num((*v)[2])); },
        [v, key](const std::string& s) {
          const auto items = split_list(s);
          if (items.size() != 3) throw std::invalid_argument(key + " needs 3 values");
          for (int j = 0; j < 3; ++j) (*v)[j] = to_double(items[j]);
        });
    return *this;
  }
  Binder& optional_q(const std::string& key, std::optional<Vec3>* v) {
    add(key,
        [v] {
          if (!*v) return std::string();
          return fmt::format("{}, {}, {}", fmt_num((**v)[0]), fmt_num((**v)[1]),
                             fmt_num((**v)[2]));
        },
        [v, key](const std::string& s) {
          const auto items = split_list(s);
          if (items.empty()) {
            v->reset();
            return;
          }
          if (items.size() != 3) throw std::invalid_argument(key + " needs 3 values");
          *v = Vec3(to_double(items[0]), to_double(items[1]), to_double(items[2]));
        });
    return *this;
  }
  template <typename E>
  Binder& choice(const std::string& key, E* v, std::map<std::string, E> names) {
    add(key,
        [v, names] {
          for (const auto& [n, e] : names) {
            if (e == *v) return n;
          }
          return std::string("?");
        },
        [v, names, key](const std::string& s) {
          const auto it = names.find(s);
          if (it == names.end()) throw std::invalid_argument("bad value for " + key + ": " + s);
          *v = it->second;
        });
    return *this;
  }

  void append_to(std::vector<Binding>* out) const {
    out->insert(out->end(), items_.begin(), items_.end());
  }

 private:
  void add(const std::string& key, std::function<std::string()> get,
           std::function<void(const std::string&)> set) {
    items_.push_back({section_, key, std::move(get), std::move(set)});
  }
  std::string section_;
  std::vector<Binding> items_;
};

const std::map<std::string, SimMode> kModes{{"rigid", SimMode::kRigid},
                                            {"flexible", SimMode::kFlexible}};

std::vector<Binding> bindings(Config& c) {
  std::vector<Binding> out;
  for (int i = 0; i < kNumRobots; ++i) {
    RobotParams& r = c.robots[i];
    Binder b(fmt::format("robot{}", i + 1));
    b.triple("link_lengths", &r.link_lengths)
        .triple("link_masses", &r.link_masses)
        .triple("link_inertias", &r.link_inertias)
        .triple("com_offsets", &r.com_offsets)
        .triple("joint_damping", &r.joint_damping)
        .num("base_x", &r.base.x)
        .num("base_y", &r.base.y)
        .deg("base_theta_deg", &r.base.theta)
        .num("ee_half_width", &r.ee_half_width)
        .num("start_x", &c.scenario.start[i].p.x())
        .num("start_y", &c.scenario.start[i].p.y())
        .deg("start_theta_deg", &c.scenario.start[i].theta)
        .num("elbow", &c.scenario.elbow[i])
        .optional_q("start_q", &c.scenario.start_q[i])
        .append_to(&out);
  }
  Binder("box")
      .num("width", &c.box.width)
      .num("height", &c.box.height)
      .num("mass", &c.box.mass)
      .num("inertia", &c.box.inertia)
      .num("gravity", &c.box.gravity)
      .num("estimate_x", &c.box_estimate.x)
      .num("estimate_y", &c.box_estimate.y)
      .deg("estimate_theta_deg", &c.box_estimate.theta)
      .append_to(&out);
  Binder("contact")
      .num("stiffness", &c.contact.stiffness)
      .num("damping", &c.contact.damping)
      .num("exponent", &c.contact.exponent)
      .num("friction", &c.contact.friction)
      .num("friction_slope", &c.contact.friction_slope)
      .append_to(&out);
  Binder("flexible")
      .num("stiffness", &c.flexible.stiffness)
      .num("damping", &c.flexible.damping)
      .num("torque_gain", &c.flexible.torque_gain)
      .num("torque_rate_gain", &c.flexible.torque_rate_gain)
      .num("motor_inertia", &c.flexible.motor_inertia)
      .append_to(&out);
  Binder("fields")
      .num("impact_speed", &c.fields.impact_speed)
      .deg("approach_tilt_deg", &c.fields.approach_tilt)
      .num("shaping", &c.fields.shaping)
      .num("angular_gain", &c.fields.angular_gain)
      .num("post_linear_gain", &c.post.linear_gain)
      .num("post_angular_gain", &c.post.angular_gain)
      .num("post_r_max_cap", &c.post.r_max_cap)
      .num("goal_x", &c.post.goal.x)
      .num("goal_y", &c.post.goal.y)
      .deg("goal_theta_deg", &c.post.goal.theta)
      .append_to(&out);
  ControllerGains& g = c.gains;
  Binder("controller")
      .num("k_sync_pp", &g.k_sync_pp)
      .num("k_sync_pd", &g.k_sync_pd)
      .num("k_a_p", &g.k_a_p)
      .num("k_a_theta", &g.k_a_theta)
      .num("k_int_p", &g.k_int_p)
      .num("k_int_theta", &g.k_int_theta)
      .num("k_p_p", &g.k_p_p)
      .num("k_p_theta", &g.k_p_theta)
      .num("w_a_p", &g.w_a_p)
      .num("w_a_theta", &g.w_a_theta)
      .num("w_a_s", &g.w_a_s)
      .num("w_p_p", &g.w_p_p)
      .num("w_p_theta", &g.w_p_theta)
      .num("w_p_lambda", &g.w_p_lambda)
      .num("w_p_n", &g.w_p_n)
      .num("tau_min", &g.tau_min)
      .num("tau_max", &g.tau_max)
      .num("dt", &g.dt)
      .num("mu_est", &g.mu_est)
      .num("eps_n", &g.eps_n)
      .num("t_hold", &g.t_hold)
      .num("force_threshold", &g.force_threshold)
      .choice("detector", &c.detector,
              std::map<std::string, ImpactDetector>{{"gap", ImpactDetector::kGap},
                                                    {"force", ImpactDetector::kForce}})
      .append_to(&out);
  Binder("predictor")
      .integer("grid_points", &c.predictor.grid.points_per_axis)
      .num("grid_half_range", &c.predictor.grid.half_range)
      .num("rho", &c.predictor.rho)
      .num("t_hold", &c.predictor.t_hold)
      .num("horizon", &c.predictor.horizon)
      .choice("mode", &c.predictor.mode, kModes)
      .flag("unextended_velocity", &c.predictor.unextended_velocity)
      .text("model_file", &c.predictor.model_file)
      .append_to(&out);
  Binder("sim")
      .num("dt_integrator", &c.sim.dt_integrator)
      .num("dt_control", &c.sim.dt_control)
      .num("horizon", &c.sim.horizon)
      .choice("mode", &c.sim.mode, kModes)
      .deg("perturb_angle_deg", &c.sim.perturb_angle)
      .num("perturb_y", &c.sim.perturb_y)
      .num("success_tolerance", &c.sim.success_tolerance)
      .deg("success_angle_tolerance_deg", &c.sim.success_angle_tolerance)
      .num("success_hold", &c.sim.success_hold)
      .flag("stop_on_success", &c.sim.stop_on_success)
      .append_to(&out);
  Binder("scenario")
      .text("name", &c.scenario.name)
      .choice("variant", &c.scenario.variant,
              std::map<std::string, Variant>{{"proposed", Variant::kProposed},
                                             {"no-impact-map", Variant::kNoImpactMap},
                                             {"no-interim", Variant::kNoInterim}})
      .append_to(&out);
  // Variant lists are handled as free text.
  out.push_back({"suite", "variants",
                 [&c] {
                   std::string s;
                   for (Variant v : c.suite.variants) {
                     s += (s.empty() ? "" : ", ") + std::string(to_string(v));
                   }
                   return s;
                 },
                 [&c](const std::string& s) {
                   c.suite.variants.clear();
                   for (const auto& item : split_list(s)) {
                     c.suite.variants.push_back(parse_variant(item));
                   }
                 }});
  Binder("suite").flag("sync_ablation", &c.suite.sync_ablation).append_to(&out);
  return out;
}

}  // namespace

void Config::validate() const {
  for (const auto& r : robots) r.validate();
  box.validate();
  contact.validate();
  flexible.validate();
  gains.validate(contact.friction);
  predictor.grid.validate();
  sim.validate();
  if (!(fields.impact_speed > 0.0 && fields.shaping > 0.0 && fields.angular_gain > 0.0)) {
    throw std::invalid_argument("field speed, shaping and gain must be positive");
  }
  if (!(std::abs(fields.approach_tilt) < 0.5 * kPi)) {
    throw std::invalid_argument("approach tilt must lie within +/-90 degrees");
  }
  if (!(post.linear_gain > 0.0 && post.angular_gain > 0.0 && post.r_max_cap > 0.0)) {
    throw std::invalid_argument("post field gains and radius must be positive");
  }
  if (!(predictor.rho > 0.0 && predictor.t_hold >= 0.0 && predictor.horizon > 0.0)) {
    throw std::invalid_argument("predictor rho/t_hold/horizon out of range");
  }
  if (std::abs(sim.dt_control - gains.dt) > 1e-12) {
    throw std::invalid_argument("sim.dt_control must equal controller.dt");
  }
  if (suite.variants.empty()) throw std::invalid_argument("suite needs a variant");
}

Config default_config() {
  Config c;
  c.robots[0].base = {-0.75, 0.0, 0.0};
  c.robots[1].base = {0.75, 0.0, kPi};
  c.box_estimate = {0.0, 0.0, 0.0};
  c.post.goal = {0.0, 0.15, 0.0};
  c.sim.mode = SimMode::kFlexible;
  c.sim.perturb_angle = 2.5 * kDeg;
  c.sim.perturb_y = 0.005;
  c.sim.horizon = 4.0;
  // Robot 1 starts lower and further out than the mirror image of robot 2.
  c.scenario.start[0] = {Vec2(-0.52, -0.16), 0.35};
  c.scenario.start[1] = {Vec2(0.40, -0.06), kPi - 0.2};
  c.scenario.elbow = {1.0, -1.0};
  return c;
}

Config parse_config(std::istream& is) {
  Config c = default_config();
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  auto table = bindings(c);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw std::invalid_argument("config: key outside a section: " + section);
    }
    for (const auto& [key, value] : body) {
      bool found = false;
      for (const Binding& b : table) {
        if (b.section == section && b.key == key) {
          try {
            b.set(trim(value.data()));
          } catch (const std::exception& e) {
            throw std::invalid_argument("config [" + section + "] " + key + ": " + e.what());
          }
          found = true;
          break;
        }
      }
      if (!found) throw std::invalid_argument("config: unknown key [" + section + "] " + key);
    }
  }
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return parse_config(in);
}

void write_config(std::ostream& os, const Config& config) {
  Config copy = config;
  std::string section;
  for (const Binding& b : bindings(copy)) {
    if (b.section != section) {
      os << (section.empty() ? "" : "\n") << "[" << b.section << "]\n";
      section = b.section;
    }
    os << b.key << " = " << b.get() << "\n";
  }
}

AnteFieldParams ante_field_params(const Config& config) {
  return make_ante_field(config.box, config.box_estimate, config.fields.impact_speed,
                         config.fields.approach_tilt, config.fields.shaping,
                         config.fields.angular_gain);
}

ControllerSetup controller_setup(const Config& config, const RbfModel* model) {
  ControllerSetup s;
  s.robots = config.robots;
  s.box = config.box;
  s.box_estimate = config.box_estimate;
  s.ante = ante_field_params(config);
  s.post = config.post;
  s.gains = config.gains;
  s.variant = config.scenario.variant;
  s.detector = config.detector;
  s.predictor = model;
  return s;
}

WorldParams world_params(const Config& config, SimMode mode) {
  WorldParams w;
  w.robots = config.robots;
  w.box = config.box;
  w.contact = config.contact;
  w.flexible = config.flexible;
  w.mode = mode;
  w.tau_min = config.gains.tau_min;
  w.tau_max = config.gains.tau_max;
  return w;
}

WorldState initial_world(const Config& config) {
  WorldState w;
  for (int i = 0; i < kNumRobots; ++i) {
    Vec3 q;
    if (config.scenario.start_q[i]) {
      q = *config.scenario.start_q[i];
    } else if (!inverse_kinematics(config.robots[i], config.scenario.start[i],
                                   config.scenario.elbow[i], &q)) {
      throw std::invalid_argument(fmt::format("robot {} start pose out of reach", i + 1));
    }
    w.robots[i].q = q;
    w.robots[i].motor_q = q;
  }
  const Pose2& est = config.box_estimate;
  w.box.p = est.position() + Vec2(0.0, config.sim.perturb_y);
  w.box.theta = est.theta + config.sim.perturb_angle;
  return w;
}

EpisodeSetup episode_setup(const Config& config, const RbfModel* model) {
  EpisodeSetup e;
  e.world = world_params(config, config.sim.mode);
  e.sim = config.sim;
  e.controller = controller_setup(config, model);
  e.initial = initial_world(config);
  return e;
}

}  // namespace dualgrasp
