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

#ifndef DUALGRASP_CONTACT_HPP_
#define DUALGRASP_CONTACT_HPP_

#include <array>

#include "dualgrasp/dynamics.hpp"

namespace dualgrasp {

// Exponentially extended Hunt-Crossley normal force with smoothed Coulomb
// friction.
struct ContactParams {
  double stiffness = 1e5;       // k_gamma, N/m^c
  double damping = 1e6;         // d_gamma, N s/m^(c+1)
  double exponent = 1.0;        // c
  double friction = 0.6;        // mu
  double friction_slope = 100;  // epsilon, s/m

  void validate() const;
};

struct ContactPoint {
  double gap = 0.0;        // negative = penetration
  double gap_rate = 0.0;
  double slip_rate = 0.0;
  double normal_force = 0.0;
  double tangential_force = 0.0;
  bool in_contact = false;
};

using ContactSet = std::array<ContactPoint, kNumContacts>;

// K(dgamma): k - d dgamma when approaching, k exp(-d/k dgamma) when separating.
double stiffness_damping_factor(double gap_rate, const ContactParams& params);

double normal_force(double gap, double gap_rate, const ContactParams& params);

// Positive along positive slip; the equations of motion apply it against the
// slip (see the sign convention in dynamics.hpp).
double tangential_force(double normal, double slip_rate,
                        const ContactParams& params);

// Resolves the four end-effector contacts. A point only touches its box face
// while its tangential coordinate lies within the face and it has not passed
// through the box's mid-plane.
ContactSet evaluate_contacts(const ContactKinematics& kin, const BoxParams& box,
                             const ContactParams& params);

}  // namespace dualgrasp

#endif  // DUALGRASP_CONTACT_HPP_
