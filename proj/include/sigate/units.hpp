#pragma once

#include <numbers>

// Canonical units throughout the library: energy in ueV, length in nm,
// time in ps. Densities cross the public API in per-cm^2 / per-cm^3.
namespace sigate::units {

inline constexpr double pi = std::numbers::pi;

/// Reduced Planck constant in ueV * ps.
inline constexpr double hbar = 658.2119569;
/// Planck constant in ueV * ps.
inline constexpr double planck = 2.0 * pi * hbar;

/// e^2 / (4 pi eps0) in ueV * nm.
inline constexpr double coulomb_constant = 1.43996448e6;

inline constexpr double nm_per_cm = 1.0e7;

/// Converts a density in per-cm^dim to per-nm^dim.
constexpr double per_cm_to_per_nm(double density, int dim) {
    double f = 1.0;
    for (int i = 0; i < dim; ++i) f *= nm_per_cm;
    return density / f;
}

/// Converts a density in per-nm^dim to per-cm^dim.
constexpr double per_nm_to_per_cm(double density, int dim) {
    double f = 1.0;
    for (int i = 0; i < dim; ++i) f *= nm_per_cm;
    return density * f;
}

}  // namespace sigate::units
