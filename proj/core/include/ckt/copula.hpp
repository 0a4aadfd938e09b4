#pragma once

#include <string>
#include <utility>

#include "ckt/rng.hpp"

namespace ckt {

enum class CopulaFamily { gaussian, student, clayton, gumbel, frank };

std::string to_string(CopulaFamily family);
CopulaFamily copula_family_from_string(const std::string& name);

/// Copula parameter with the given Kendall's tau:
///   gaussian, student  rho = sin(pi tau / 2), tau in (-1, 1)
///   clayton            theta = 2 tau / (1 - tau), tau in [0, 1)
///   gumbel             theta = 1 / (1 - tau), tau in [0, 1)
///   frank              numeric inversion, tau in (-1, 1); theta = 0 at tau = 0
/// tau = 0 gives the independence copula in every family.
double tau_to_param(CopulaFamily family, double tau);

/// Kendall's tau of the family at `param` (inverse of tau_to_param).
double param_to_tau(CopulaFamily family, double param);

/// (1/x) int_0^x t / (e^t - 1) dt; D1(0) = 1.
double debye1(double x);

/// One draw (u1, u2) in (0, 1)^2. `df` is only read for the student family.
std::pair<double, double> sample_copula(CopulaFamily family, double param, SplitMix64& rng, double df = 4.0);

/// u2 = C^{-1}(p | u1) for the Archimedean families (clayton, gumbel, frank).
double conditional_inverse(CopulaFamily family, double param, double u1, double p);

}  // namespace ckt
