#pragma once

// Single-cavity emission dynamics under the no-jump (non-Hermitian)
// Hamiltonian. The atom starts in the excited ancilla level with both cavity
// modes empty; it couples with strength h/2 to one left photon (atom -> g)
// and one right photon (atom -> e). The excited level loses amplitude at
// gamma/2, each cavity mode at kappa.
//
// All rates are angular frequencies in rad/us; times are in us.

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace clusterqed {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Converts a frequency quoted as "2 pi x f MHz" to rad/us.
constexpr double two_pi_mhz(double f) { return kTwoPi * f; }

struct PhysicalParams {
  double h = 0.0;      ///< atom-cavity coupling
  double kappa = 0.0;  ///< cavity field decay rate (2 kappa is the photon leak rate)
  double gamma = 0.0;  ///< excited-state decay rate
  double window = 1.0; ///< observation window T

  /// Throws PreconditionError on negative rates or a non-positive window.
  void validate() const;
  /// Window of 3 / kappa, or +inf when kappa is zero.
  static double default_window(double kappa);
  /// Builds params from rates in units of 2 pi MHz with the default window.
  static PhysicalParams from_two_pi_mhz(double h, double kappa, double gamma);

  friend bool operator==(const PhysicalParams&, const PhysicalParams&) = default;
};

struct EmissionAmplitudes {
  Complex c_alpha;  ///< atom excited, cavity empty
  Complex c_g;      ///< atom in g, one left photon
  Complex c_e;      ///< atom in e, one right photon
  Complex beta;
};

/// beta = sqrt((kappa + gamma/2)^2 - 2 (gamma kappa + h^2)) / 2, principal root.
Complex beta(const PhysicalParams& p);

/// Closed-form solution of the amplitude equations. Uses a Taylor series in
/// beta t when |beta t| < 1e-4.
EmissionAmplitudes amplitudes_at(const PhysicalParams& p, double t);

/// Probability that a photon has been created in the cavity by time t,
/// |c_g|^2 + |c_e|^2.
double emission_probability(const PhysicalParams& p, double t);

/// The same probability written as exp(-(kappa + gamma/2) t) (h sinh(beta t) / (sqrt 2 beta))^2
/// with explicit exponentials. An independent algebraic route used as a
/// cross-check; loses precision near beta = 0.
double emission_probability_exponential_form(const PhysicalParams& p, double t);

/// Probability the excitation ever leaves as a cavity photon:
/// kappa h^2 / ((kappa + gamma/2)(gamma kappa + h^2)).
double leak_probability_total(const PhysicalParams& p);
/// Probability the excitation is lost to spontaneous emission, 1 - leak.
double spont_probability_total(const PhysicalParams& p);

struct ChannelProbabilities {
  double leak = 0.0;      ///< photon leaked within the window
  double spont = 0.0;     ///< spontaneous emission within the window
  double survive = 0.0;   ///< no event within the window (remaining norm)
};

/// Jump probabilities integrated over [0, window] by Gauss-Legendre panels.
ChannelProbabilities channel_probabilities(const PhysicalParams& p, double window);

struct OdeTolerance {
  double absolute = 1e-13;
  double relative = 1e-13;
};

/// Integrates the three-amplitude equations with an adaptive Runge-Kutta-
/// Fehlberg 7(8) stepper and reports the state at each grid time.
/// `grid` must be non-decreasing and start at or after 0.
std::vector<EmissionAmplitudes> ode_oracle_integrate(const PhysicalParams& p,
                                                     std::span<const double> grid,
                                                     const OdeTolerance& tol = {});

enum class EmissionKind : std::uint8_t { PhotonLeak, SpontaneousEmission, NoEvent };
enum class CircularPolarization : std::uint8_t { L, R };

struct EmissionEvent {
  EmissionKind kind = EmissionKind::NoEvent;
  std::optional<double> time;
  std::optional<CircularPolarization> polarization;
};

/// Quantum-jump sampler for a single cavity. Precomputes cumulative jump
/// probabilities on a 4096-point grid over the window and samples event
/// times by inverse CDF with linear interpolation.
class EmissionSampler {
 public:
  static constexpr std::size_t kGridPoints = 4096;

  explicit EmissionSampler(const PhysicalParams& p);

  EmissionEvent sample(std::mt19937_64& rng) const;

  const PhysicalParams& params() const { return params_; }
  double leak_probability() const { return leak_cdf_.back(); }
  double spont_probability() const { return spont_cdf_.back(); }
  double survive_probability() const { return 1.0 - leak_probability() - spont_probability(); }

 private:
  double invert(const std::vector<double>& cdf, double target) const;

  PhysicalParams params_;
  std::vector<double> times_;
  std::vector<double> leak_cdf_;
  std::vector<double> spont_cdf_;
};

/// Convenience wrapper building a sampler per call.
EmissionEvent sample_emission_event(const PhysicalParams& p, std::mt19937_64& rng);

/// Leak probability of the two-level system
///   c0' = -G0 c0 - i W c1,  c1' = -G1 c1 - i W c0,  leak channel 2 G1 |c1|^2,
/// which is G1 W^2 / ((G0 + G1)(G0 G1 + W^2)).
double reset_leak_probability(double coupling, double upper_decay, double field_decay);

/// Leak probability of the primed-level decay used by restart and fusion:
/// coupling h/2, upper decay gamma/2, field decay kappa.
double primed_leak_probability(const PhysicalParams& p);

/// Which temporal envelope a cavity photon follows.
enum class Envelope : std::uint8_t {
  Emission,  ///< ancilla -> qubit emission
  Primed,    ///< primed-level decay to the ground ancilla
};

/// Unnormalized photon wavepacket sqrt(2 kappa) c_photon(t).
Complex envelope_amplitude(Envelope kind, const PhysicalParams& p, double t);

/// Normalized overlap of two photon wavepackets over [0, inf).
Complex envelope_overlap(Envelope kind, const PhysicalParams& p1, const PhysicalParams& p2);

/// Overlap of the leaked emission wavepackets of two cavities. Hermitian in
/// its arguments and 1 for identical parameters.
Complex wavepacket_overlap(const PhysicalParams& p1, const PhysicalParams& p2);

/// Expresses each normalized wavepacket in an orthonormal temporal basis.
/// Row k holds the coefficients of source k; the number of columns is the
/// rank of the overlap matrix. Identical sources share a single column.
std::vector<std::vector<Complex>> temporal_mode_coefficients(Envelope kind,
                                                             std::span<const PhysicalParams> sources);

}  // namespace clusterqed
