#include "clusterqed/cavity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "clusterqed/hilbert.hpp"

namespace clusterqed {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kSeriesThreshold = 1e-4;

// cosh(x) and sinh(x)/x for small complex x, four terms each.
Complex cosh_series(Complex x) {
  const Complex x2 = x * x;
  return 1.0 + x2 / 2.0 + x2 * x2 / 24.0 + x2 * x2 * x2 / 720.0;
}
Complex sinhc_series(Complex x) {
  const Complex x2 = x * x;
  return 1.0 + x2 / 6.0 + x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0;
}

struct Hyperbolic {
  Complex cosh_damped;  // e^{-rt} cosh(b t)
  Complex sinh_damped;  // e^{-rt} sinh(b t) / b
};

// Damped hyperbolic pair evaluated without overflow for large real b t.
Hyperbolic damped_hyperbolic(Complex b, double r, double t) {
  if (std::abs(b * t) < kSeriesThreshold) {
    const double damp = std::exp(-r * t);
    return {damp * cosh_series(b * t), damp * t * sinhc_series(b * t)};
  }
  const Complex plus = std::exp((b - r) * t);
  const Complex minus = std::exp((-b - r) * t);
  return {(plus + minus) / 2.0, (plus - minus) / (2.0 * b)};
}

// Integral of f over [a, b] with 20-point Gauss-Legendre panels no wider than `width`.
template <class F>
auto integrate_panels(F f, double a, double b, double width) {
  using Result = decltype(f(a));
  Result sum{};
  if (b <= a) return sum;
  const double span = b - a;
  const auto panels = static_cast<std::size_t>(std::clamp(std::ceil(span / width), 1.0, 4.0e6));
  const double h = span / static_cast<double>(panels);
  for (std::size_t k = 0; k < panels; ++k) {
    const double lo = a + h * static_cast<double>(k);
    sum += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, lo + h);
  }
  return sum;
}

// Characteristic time scale of the emission dynamics, used to size panels.
double panel_width(const PhysicalParams& p) {
  const double a = p.kappa + p.gamma / 2.0;
  const double omega = std::max({std::abs(beta(p)), a, p.h, 1e-12});
  return 1.0 / omega;
}

}  // namespace

void PhysicalParams::validate() const {
  if (!(h >= 0.0) || !(kappa >= 0.0) || !(gamma >= 0.0)) {
    throw PreconditionError(
        fmt::format("rates must be non-negative (h={}, kappa={}, gamma={})", h, kappa, gamma));
  }
  if (!(window > 0.0)) {
    throw PreconditionError(fmt::format("window must be positive (got {})", window));
  }
}

double PhysicalParams::default_window(double kappa) {
  return kappa > 0.0 ? 3.0 / kappa : std::numeric_limits<double>::infinity();
}

PhysicalParams PhysicalParams::from_two_pi_mhz(double h, double kappa, double gamma) {
  PhysicalParams p{two_pi_mhz(h), two_pi_mhz(kappa), two_pi_mhz(gamma), 0.0};
  p.window = default_window(p.kappa);
  return p;
}

Complex beta(const PhysicalParams& p) {
  const double a = p.kappa + p.gamma / 2.0;
  const double disc = a * a - 2.0 * (p.gamma * p.kappa + p.h * p.h);
  return 0.5 * std::sqrt(Complex{disc, 0.0});
}

EmissionAmplitudes amplitudes_at(const PhysicalParams& p, double t) {
  if (t < 0.0) throw PreconditionError("time must be non-negative");
  const Complex b = beta(p);
  const double r = (p.kappa + p.gamma / 2.0) / 2.0;
  const auto [c, s] = damped_hyperbolic(b, r, t);
  EmissionAmplitudes out;
  out.beta = b;
  out.c_alpha = c + (p.kappa - p.gamma / 2.0) / 2.0 * s;
  out.c_g = -kI * (p.h / 2.0) * s;
  out.c_e = out.c_g;
  return out;
}

double emission_probability(const PhysicalParams& p, double t) {
  const auto amp = amplitudes_at(p, t);
  return std::norm(amp.c_g) + std::norm(amp.c_e);
}

double emission_probability_exponential_form(const PhysicalParams& p, double t) {
  const Complex b = beta(p);
  const double a = p.kappa + p.gamma / 2.0;
  Complex factor;
  if (b == Complex{}) {
    factor = p.h * t / std::sqrt(2.0);
  } else {
    factor = p.h * (std::exp(b * t) - std::exp(-b * t)) / (2.0 * std::sqrt(2.0) * b);
  }
  return std::exp(-a * t) * (factor * factor).real();
}

double leak_probability_total(const PhysicalParams& p) {
  p.validate();
  if (p.h == 0.0) return 0.0;
  if (p.kappa + p.gamma == 0.0) {
    throw PreconditionError("no stationary limit without dissipation (kappa = gamma = 0, h > 0)");
  }
  const double a = p.kappa + p.gamma / 2.0;
  return p.kappa * p.h * p.h / (a * (p.gamma * p.kappa + p.h * p.h));
}

double spont_probability_total(const PhysicalParams& p) {
  p.validate();
  if (p.gamma == 0.0) return 0.0;
  if (p.h == 0.0) return 1.0;
  const double a = p.kappa + p.gamma / 2.0;
  return p.gamma * (p.kappa * a + p.h * p.h / 2.0) / (a * (p.gamma * p.kappa + p.h * p.h));
}

ChannelProbabilities channel_probabilities(const PhysicalParams& p, double window) {
  p.validate();
  if (!(window > 0.0) || !std::isfinite(window)) {
    throw PreconditionError("channel probabilities need a finite positive window");
  }
  const double width = panel_width(p);
  const double leak = integrate_panels(
      [&](double t) { return 2.0 * p.kappa * emission_probability(p, t); }, 0.0, window, width);
  const double spont = integrate_panels(
      [&](double t) { return p.gamma * std::norm(amplitudes_at(p, t).c_alpha); }, 0.0, window,
      width);
  const auto end = amplitudes_at(p, window);
  return {leak, spont, std::norm(end.c_alpha) + std::norm(end.c_g) + std::norm(end.c_e)};
}

std::vector<EmissionAmplitudes> ode_oracle_integrate(const PhysicalParams& p,
                                                     std::span<const double> grid,
                                                     const OdeTolerance& tol) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 6>;  // re/im of c_alpha, c_g, c_e

  if (grid.empty()) return {};
  if (grid.front() < 0.0 || !std::is_sorted(grid.begin(), grid.end())) {
    throw PreconditionError("ODE grid must be non-negative and monotone");
  }

  const double hg = p.h / 2.0;
  const double ga = p.gamma / 2.0;
  const double k = p.kappa;
  auto system = [=](const State& x, State& dx, double /*t*/) {
    const Complex ca{x[0], x[1]}, cg{x[2], x[3]}, ce{x[4], x[5]};
    const Complex da = -ga * ca - kI * hg * (cg + ce);
    const Complex dg = -kI * hg * ca - k * cg;
    const Complex de = -kI * hg * ca - k * ce;
    dx = {da.real(), da.imag(), dg.real(), dg.imag(), de.real(), de.imag()};
  };

  std::vector<double> times;
  times.reserve(grid.size() + 1);
  const bool prepend = grid.front() > 0.0;
  if (prepend) times.push_back(0.0);
  times.insert(times.end(), grid.begin(), grid.end());

  std::vector<EmissionAmplitudes> out;
  out.reserve(times.size());
  auto observer = [&](const State& x, double /*t*/) {
    out.push_back({{x[0], x[1]}, {x[2], x[3]}, {x[4], x[5]}, beta(p)});
  };

  State x{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  const double scale = std::max({p.h, p.kappa, p.gamma, 1e-9});
  auto stepper = odeint::make_controlled(tol.absolute, tol.relative,
                                         odeint::runge_kutta_fehlberg78<State>());
  odeint::integrate_times(stepper, system, x, times.begin(), times.end(), 0.01 / scale, observer);

  if (prepend) out.erase(out.begin());
  return out;
}

// ---------------------------------------------------------------------------
// Quantum-jump sampling

EmissionSampler::EmissionSampler(const PhysicalParams& p) : params_(p) {
  p.validate();
  if (!std::isfinite(p.window)) {
    throw PreconditionError("sampling needs a finite window");
  }
  times_.resize(kGridPoints);
  leak_cdf_.assign(kGridPoints, 0.0);
  spont_cdf_.assign(kGridPoints, 0.0);
  const double dt = p.window / static_cast<double>(kGridPoints - 1);
  const double width = panel_width(p);
  auto leak_rate = [&](double t) { return 2.0 * p.kappa * emission_probability(p, t); };
  auto spont_rate = [&](double t) { return p.gamma * std::norm(amplitudes_at(p, t).c_alpha); };
  for (std::size_t i = 0; i < kGridPoints; ++i) {
    times_[i] = dt * static_cast<double>(i);
    if (i == 0) continue;
    leak_cdf_[i] = leak_cdf_[i - 1] + integrate_panels(leak_rate, times_[i - 1], times_[i], width);
    spont_cdf_[i] =
        spont_cdf_[i - 1] + integrate_panels(spont_rate, times_[i - 1], times_[i], width);
  }
  times_.back() = p.window;
}

double EmissionSampler::invert(const std::vector<double>& cdf, double target) const {
  auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.begin()) return times_.front();
  if (it == cdf.end()) return times_.back();
  const auto i = static_cast<std::size_t>(it - cdf.begin());
  const double lo = cdf[i - 1];
  const double hi = cdf[i];
  const double frac = hi > lo ? (target - lo) / (hi - lo) : 1.0;
  return times_[i - 1] + frac * (times_[i] - times_[i - 1]);
}

EmissionEvent EmissionSampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  while (u == 0.0) u = uniform(rng);
  const double leak = leak_probability();
  const double spont = spont_probability();
  EmissionEvent event;
  if (u < leak) {
    event.kind = EmissionKind::PhotonLeak;
    event.time = invert(leak_cdf_, u);
    event.polarization =
        uniform(rng) < 0.5 ? CircularPolarization::L : CircularPolarization::R;
  } else if (u < leak + spont) {
    event.kind = EmissionKind::SpontaneousEmission;
    event.time = invert(spont_cdf_, u - leak);
  }
  return event;
}

EmissionEvent sample_emission_event(const PhysicalParams& p, std::mt19937_64& rng) {
  return EmissionSampler(p).sample(rng);
}

// ---------------------------------------------------------------------------
// Primed-level decay

double reset_leak_probability(double coupling, double upper_decay, double field_decay) {
  if (coupling < 0.0 || upper_decay < 0.0 || field_decay < 0.0) {
    throw PreconditionError("reset rates must be non-negative");
  }
  if (upper_decay + field_decay <= 0.0) {
    throw PreconditionError("reset dynamics need a nonzero decay rate");
  }
  if (coupling == 0.0) return 0.0;
  const double w2 = coupling * coupling;
  return field_decay * w2 / ((upper_decay + field_decay) * (upper_decay * field_decay + w2));
}

double primed_leak_probability(const PhysicalParams& p) {
  return reset_leak_probability(p.h / 2.0, p.gamma / 2.0, p.kappa);
}

// ---------------------------------------------------------------------------
// Wavepackets

namespace {

// Photon amplitude of the primed two-level decay, c1(t).
Complex primed_photon_amplitude(const PhysicalParams& p, double t) {
  const double g0 = p.gamma / 2.0;
  const double g1 = p.kappa;
  const double w = p.h / 2.0;
  const double half_diff = (g1 - g0) / 2.0;
  const Complex delta = std::sqrt(Complex{half_diff * half_diff - w * w, 0.0});
  const auto [c, s] = damped_hyperbolic(delta, (g0 + g1) / 2.0, t);
  return -kI * w * s;
}

// Amplitude decay rate of the slowest envelope component.
double slowest_decay(Envelope kind, const PhysicalParams& p) {
  if (kind == Envelope::Emission) {
    return (p.kappa + p.gamma / 2.0) / 2.0 - beta(p).real();
  }
  const double g0 = p.gamma / 2.0;
  const double g1 = p.kappa;
  const double w = p.h / 2.0;
  const double half_diff = (g1 - g0) / 2.0;
  return (g0 + g1) / 2.0 - std::sqrt(Complex{half_diff * half_diff - w * w, 0.0}).real();
}

double envelope_end(Envelope kind, const PhysicalParams& p) {
  const double s = slowest_decay(kind, p);
  if (!(s > 0.0)) throw PreconditionError("wavepacket does not decay");
  // |f|^2 falls below e^{-44} ~ 1e-19 of its scale.
  return 22.0 / s;
}

}  // namespace

Complex envelope_amplitude(Envelope kind, const PhysicalParams& p, double t) {
  const double scale = std::sqrt(2.0 * p.kappa);
  if (kind == Envelope::Emission) return scale * amplitudes_at(p, t).c_g;
  return scale * primed_photon_amplitude(p, t);
}

Complex envelope_overlap(Envelope kind, const PhysicalParams& p1, const PhysicalParams& p2) {
  p1.validate();
  p2.validate();
  if (p1.h == 0.0 || p1.kappa == 0.0 || p2.h == 0.0 || p2.kappa == 0.0) {
    throw PreconditionError("zero-norm wavepacket");
  }
  const bool same = p1.h == p2.h && p1.kappa == p2.kappa && p1.gamma == p2.gamma;
  if (same) return 1.0;
  const double end = std::max(envelope_end(kind, p1), envelope_end(kind, p2));
  const double width = std::min(panel_width(p1), panel_width(p2));
  auto f1 = [&](double t) { return envelope_amplitude(kind, p1, t); };
  auto f2 = [&](double t) { return envelope_amplitude(kind, p2, t); };
  const Complex cross = integrate_panels([&](double t) { return std::conj(f1(t)) * f2(t); }, 0.0,
                                         end, width);
  const double n1 = integrate_panels([&](double t) { return std::norm(f1(t)); }, 0.0, end, width);
  const double n2 = integrate_panels([&](double t) { return std::norm(f2(t)); }, 0.0, end, width);
  if (n1 <= 0.0 || n2 <= 0.0) throw PreconditionError("zero-norm wavepacket");
  return cross / std::sqrt(n1 * n2);
}

Complex wavepacket_overlap(const PhysicalParams& p1, const PhysicalParams& p2) {
  return envelope_overlap(Envelope::Emission, p1, p2);
}

std::vector<std::vector<Complex>> temporal_mode_coefficients(
    Envelope kind, std::span<const PhysicalParams> sources) {
  const std::size_t n = sources.size();
  std::vector<std::vector<Complex>> coeff(n);
  std::vector<std::size_t> owner;  // source that introduced each basis vector
  constexpr double kRankTolerance = 1e-12;

  for (std::size_t k = 0; k < n; ++k) {
    std::vector<Complex>& row = coeff[k];
    row.assign(owner.size(), Complex{});
    double residual = 1.0;
    for (std::size_t m = 0; m < owner.size(); ++m) {
      const std::size_t b = owner[m];
      Complex proj = envelope_overlap(kind, sources[b], sources[k]);
      for (std::size_t j = 0; j < m; ++j) proj -= std::conj(coeff[b][j]) * row[j];
      row[m] = proj / coeff[b][m].real();
      residual -= std::norm(row[m]);
    }
    if (residual > kRankTolerance) {
      row.push_back(std::sqrt(residual));
      owner.push_back(k);
    } else if (!row.empty()) {
      // Renormalize to absorb rounding in the projection.
      double total = 0.0;
      for (const auto& c : row) total += std::norm(c);
      for (auto& c : row) c /= std::sqrt(total);
    } else {
      row.push_back(1.0);
      owner.push_back(k);
    }
  }
  for (auto& row : coeff) row.resize(owner.size());
  return coeff;
}

}  // namespace clusterqed
