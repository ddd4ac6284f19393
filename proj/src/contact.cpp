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

#include "dualgrasp/contact.hpp"

#include <cmath>
#include <stdexcept>

namespace dualgrasp {

void ContactParams::validate() const {
  if (!(stiffness > 0.0 && damping > 0.0 && friction_slope > 0.0)) {
    throw std::invalid_argument("contact stiffness, damping, slope must be > 0");
  }
  if (!(exponent > 0.0)) throw std::invalid_argument("contact exponent must be > 0");
  if (friction < 0.0 || friction > 1.0) {
    throw std::invalid_argument("friction coefficient must lie in [0, 1]");
  }
}

double stiffness_damping_factor(double gap_rate, const ContactParams& params) {
  if (gap_rate <= 0.0) return params.stiffness - params.damping * gap_rate;
  return params.stiffness *
         std::exp(-(params.damping / params.stiffness) * gap_rate);
}

double normal_force(double gap, double gap_rate, const ContactParams& params) {
  if (gap > 0.0) return 0.0;
  return stiffness_damping_factor(gap_rate, params) *
         std::pow(-gap, params.exponent);
}

double tangential_force(double normal, double slip_rate,
                        const ContactParams& params) {
  return params.friction * normal * (2.0 / kPi) *
         std::atan(params.friction_slope * slip_rate);
}

ContactSet evaluate_contacts(const ContactKinematics& kin, const BoxParams& box,
                             const ContactParams& params) {
  ContactSet out;
  for (int k = 0; k < kNumContacts; ++k) {
    ContactPoint& c = out[k];
    c.gap = kin.gap[k];
    c.gap_rate = kin.gap_rate[k];
    c.slip_rate = kin.slip_rate[k];
    const bool on_face = std::abs(kin.tangent_coord[k]) <= 0.5 * box.height &&
                         kin.gap[k] > -0.5 * box.width;
    c.in_contact = on_face && kin.gap[k] <= 0.0;
    if (c.in_contact) {
      c.normal_force = normal_force(c.gap, c.gap_rate, params);
      c.tangential_force = tangential_force(c.normal_force, c.slip_rate, params);
    }
  }
  return out;
}

}  // namespace dualgrasp
