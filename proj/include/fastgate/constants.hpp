#pragma once

#include <numbers>
#include <string>

namespace fastgate {

namespace constants {
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
// CODATA 2018
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double hbar = 1.054571817e-34;                // J s
}  // namespace constants

struct IonSpecies {
  std::string name;
  double mass_kg;
  int charge_number;
};

inline IonSpecies calcium40() {
  return {"Ca40", 39.9626 * constants::atomic_mass_unit, 1};
}

/// Coulomb strength per unit mass, alpha = Z^2 e^2 / (4 pi eps0 M), in m^3/s^2.
inline double coulomb_alpha(double ion_mass, int charge_number = 1) {
  const double q = charge_number * constants::elementary_charge;
  return q * q / (4.0 * constants::pi * constants::vacuum_permittivity * ion_mass);
}

}  // namespace fastgate
