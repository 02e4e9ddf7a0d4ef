#pragma once

// Reference computations used by the tests. Nothing here calls the library's
// own dynamics or state builders, so agreement is a genuine cross-check.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

struct Rates {
  double h = 0.0;
  double kappa = 0.0;
  double gamma = 0.0;
};

/// State of the three-amplitude system plus the integrated jump channels.
struct Trajectory {
  Complex c_alpha{1.0, 0.0};
  Complex c_g{};
  Complex c_e{};
  double leaked = 0.0;  ///< integral of 2 kappa (|c_g|^2 + |c_e|^2)
  double spont = 0.0;   ///< integral of gamma |c_alpha|^2
};

/// Classical fixed-step RK4 on
///   c_alpha' = -gamma/2 c_alpha - i h/2 (c_g + c_e)
///   c_g'     = -kappa c_g - i h/2 c_alpha        (and the same for c_e)
/// from t = 0 to t, with the step bounded by `max_phase` / fastest rate.
Trajectory rk4(const Rates& r, double t, double max_phase = 2e-3);

/// Composite Simpson rule with an even number of panels.
double simpson(const std::function<double(double)>& f, double a, double b, std::size_t panels);

/// Dense state over n qubits; index bit (n - 1 - k) is qubit k, 0 = g.
using Dense = std::vector<Complex>;

Dense briegel(std::size_t n);
/// Pairs (2k, 2k+1) share a value y_k; amplitude (-1)^{sum y_k y_{k+1}}.
Dense paired(std::size_t n);
Dense apply_1q(const Dense& v, std::size_t n, std::size_t qubit, const std::array<Complex, 4>& m);
Dense hadamard_on(const Dense& v, std::size_t n, std::size_t qubit);
double overlap_abs(const Dense& a, const Dense& b);
Dense normalized(Dense v);

/// Binomial standard error for a frequency estimate.
double binomial_sigma(double p, double n);

}  // namespace oracle
