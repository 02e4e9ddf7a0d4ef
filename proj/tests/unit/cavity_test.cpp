#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/tools/minima.hpp>
#include <gtest/gtest.h>

#include "clusterqed/cavity.hpp"
#include "clusterqed/hilbert.hpp"
#include "oracles.hpp"

namespace cq = clusterqed;

namespace {

cq::PhysicalParams rb() { return cq::PhysicalParams::from_two_pi_mhz(27.0, 2.4, 6.0); }
cq::PhysicalParams ion() { return cq::PhysicalParams::from_two_pi_mhz(30.0, 3.0, 10.0); }

oracle::Rates rates(const cq::PhysicalParams& p) { return {p.h, p.kappa, p.gamma}; }

double max_dev(const cq::EmissionAmplitudes& a, const oracle::Trajectory& b) {
  return std::max({std::abs(a.c_alpha - b.c_alpha), std::abs(a.c_g - b.c_g), std::abs(a.c_e - b.c_e)});
}

// Draws rates log-uniformly on [0.5, 50] rad/us; every third set sits at beta = 0.
std::vector<cq::PhysicalParams> random_sets(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&] { return 0.5 * std::pow(100.0, u(rng)); };
  std::vector<cq::PhysicalParams> out;
  for (std::size_t i = 0; i < n; ++i) {
    cq::PhysicalParams p{draw(), draw(), draw(), 1.0};
    if (i % 3 == 2) p.h = std::abs(p.kappa - p.gamma / 2.0) / std::numbers::sqrt2;
    p.window = 3.0 / p.kappa;
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST(Amplitudes, AgreeWithIndependentRungeKutta) {
  for (const auto& p : random_sets(30, 17)) {
    for (double frac : {0.1, 0.37, 1.0}) {
      const double t = frac * p.window;
      EXPECT_LT(max_dev(cq::amplitudes_at(p, t), oracle::rk4(rates(p), t)), 1e-9)
          << "h=" << p.h << " kappa=" << p.kappa << " gamma=" << p.gamma << " t=" << t;
    }
  }
}

TEST(Amplitudes, AgreeWithLibraryAdaptiveIntegrator) {
  const auto p = rb();
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(p.window * i / 20.0);
  const auto numeric = cq::ode_oracle_integrate(p, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto a = cq::amplitudes_at(p, grid[i]);
    EXPECT_LT(std::abs(a.c_alpha - numeric[i].c_alpha), 1e-10);
    EXPECT_LT(std::abs(a.c_g - numeric[i].c_g), 1e-10);
  }
}

TEST(Amplitudes, ContinuousAcrossBetaZero) {
  cq::PhysicalParams p{0.0, 4.0, 3.0, 1.0};
  const double h0 = std::abs(p.kappa - p.gamma / 2.0) / std::numbers::sqrt2;
  for (double t : {0.05, 0.3, 1.2}) {
    cq::PhysicalParams at = p, below = p, above = p;
    at.h = h0;
    below.h = h0 * (1.0 - 1e-7);
    above.h = h0 * (1.0 + 1e-7);
    const auto a = cq::amplitudes_at(at, t);
    EXPECT_LT(std::abs(a.c_g - cq::amplitudes_at(below, t).c_g), 1e-6);
    EXPECT_LT(std::abs(a.c_g - cq::amplitudes_at(above, t).c_g), 1e-6);
    EXPECT_LT(max_dev(a, oracle::rk4(rates(at), t)), 1e-10);
  }
}

TEST(Amplitudes, LosslessLimitIsUnitaryAndTransfersCompletely) {
  for (double h : {0.3, 2.0, 170.0}) {
    const cq::PhysicalParams p{h, 0.0, 0.0, 1.0};
    for (double t : {0.0, 0.4 / h, 3.3 / h}) {
      const auto a = cq::amplitudes_at(p, t);
      EXPECT_NEAR(std::norm(a.c_alpha) + std::norm(a.c_g) + std::norm(a.c_e), 1.0, 1e-12);
    }
    EXPECT_NEAR(cq::emission_probability(p, std::numbers::pi / (std::numbers::sqrt2 * h)), 1.0, 1e-12);
  }
}

TEST(Amplitudes, DisplayedProbabilityFormMatches) {
  for (const auto& p : random_sets(40, 5)) {
    if (std::abs(cq::beta(p)) < 1e-3 * (p.kappa + p.gamma / 2.0)) continue;
    for (double frac : {0.02, 0.5, 1.0}) {
      const double t = frac * p.window;
      EXPECT_NEAR(cq::emission_probability(p, t), cq::emission_probability_exponential_form(p, t), 1e-12);
    }
  }
}

TEST(Amplitudes, PeakEmissionForRubidium) {
  const auto p = rb();
  double best_t = 0.0, best = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double t = 0.05 * i / 200000.0;
    const double v = cq::emission_probability(p, t);
    if (v > best) best = v, best_t = t;
  }
  EXPECT_NEAR(best, 0.65432, 1e-5);
  EXPECT_NEAR(best_t, 0.011925, 2e-6);

  // Independent peak: Brent search over the RK4-integrated populations. The
  // first maximum lies well inside [0, 0.02] for these rates.
  const auto negative_population = [&](double t) {
    const auto traj = oracle::rk4(rates(p), t);
    return -(std::norm(traj.c_g) + std::norm(traj.c_e));
  };
  const auto [t_star, neg_peak] = boost::math::tools::brent_find_minima(negative_population, 0.0, 0.02, 40);
  EXPECT_NEAR(-neg_peak, best, 1e-9);
  EXPECT_NEAR(t_star, best_t, 1e-6);
}

TEST(LeakProbability, ClosedFormAtReferencePoints) {
  EXPECT_NEAR(cq::leak_probability_total(rb()), 0.435835, 1e-6);
  EXPECT_NEAR(cq::leak_probability_total(ion()), 0.362903, 1e-6);
  cq::PhysicalParams no_gamma = ion();
  no_gamma.gamma = 0.0;
  EXPECT_NEAR(cq::leak_probability_total(no_gamma), 1.0, 1e-15);
}

TEST(LeakProbability, ClosedFormMatchesTrajectoryQuadrature) {
  for (const auto& p : {rb(), ion()}) {
    const double slow = (p.kappa + p.gamma / 2.0) / 2.0 - std::abs(cq::beta(p).real());
    const auto traj = oracle::rk4(rates(p), 40.0 / slow);
    EXPECT_NEAR(traj.leaked, cq::leak_probability_total(p), 1e-8);
    EXPECT_NEAR(traj.spont, cq::spont_probability_total(p), 1e-8);
  }
}

TEST(LeakProbability, WindowChannelsMatchSimpsonAndConserve) {
  for (const auto& p : random_sets(30, 9)) {
    const auto c = cq::channel_probabilities(p, p.window);
    EXPECT_NEAR(c.leak + c.spont + c.survive, 1.0, 1e-8);
    const double leak = oracle::simpson(
        [&](double t) { return 2.0 * p.kappa * cq::emission_probability(p, t); }, 0.0, p.window, 20000);
    EXPECT_NEAR(c.leak, leak, 1e-8);
    const auto traj = oracle::rk4(rates(p), p.window);
    EXPECT_NEAR(c.survive, std::norm(traj.c_alpha) + std::norm(traj.c_g) + std::norm(traj.c_e), 1e-8);
  }
  const auto c = cq::channel_probabilities(rb(), rb().window);
  EXPECT_NEAR(c.leak, 0.435347, 1e-6);
}

TEST(Sampler, FrequenciesWithinThreeSigma) {
  const auto p = rb();
  const cq::EmissionSampler sampler(p);
  std::mt19937_64 rng(2024);
  const int n = 100000;
  int leak = 0, spont = 0;
  double leak_time = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto ev = sampler.sample(rng);
    if (ev.kind == cq::EmissionKind::PhotonLeak) {
      ++leak;
      leak_time += ev.time.value_or(0.0);
    } else if (ev.kind == cq::EmissionKind::SpontaneousEmission) {
      ++spont;
    }
  }
  const auto c = cq::channel_probabilities(p, p.window);
  EXPECT_NEAR(leak / double(n), c.leak, 3.0 * oracle::binomial_sigma(c.leak, n));
  EXPECT_NEAR(spont / double(n), c.spont, 3.0 * oracle::binomial_sigma(c.spont, n));
  // Mean emission time against the quadrature of t * rate.
  const double mean_t = oracle::simpson(
      [&](double t) { return t * 2.0 * p.kappa * cq::emission_probability(p, t); }, 0.0, p.window, 20000) / c.leak;
  EXPECT_NEAR(leak_time / leak, mean_t, 0.02 * mean_t);
}

TEST(Reset, LeakProbabilityClosedForm) {
  const auto p = rb();
  EXPECT_NEAR(cq::primed_leak_probability(p), 0.427553, 1e-6);
  // Gamma_1 Omega^2 / ((Gamma_0 + Gamma_1)(Gamma_0 Gamma_1 + Omega^2)).
  const double omega = p.h / 2.0, g0 = p.gamma / 2.0, g1 = p.kappa;
  EXPECT_NEAR(cq::reset_leak_probability(omega, g0, g1), g1 * omega * omega / ((g0 + g1) * (g0 * g1 + omega * omega)),
              1e-15);
  EXPECT_THROW((void)cq::reset_leak_probability(-1.0, 1.0, 1.0), cq::PreconditionError);
}

TEST(Wavepacket, OverlapIsOneForIdenticalAndBelowOneForMismatched) {
  const auto a = rb();
  auto b = rb();
  EXPECT_NEAR(std::abs(cq::wavepacket_overlap(a, b)), 1.0, 1e-10);
  b.kappa *= 1.25;
  const double v = std::abs(cq::wavepacket_overlap(a, b));
  EXPECT_LT(v, 1.0);
  EXPECT_GT(v, 0.9);
  EXPECT_NEAR(v, std::abs(cq::wavepacket_overlap(b, a)), 1e-12);
}

TEST(Params, ValidationAndUnits) {
  EXPECT_NEAR(cq::two_pi_mhz(1.0), 2.0 * std::numbers::pi, 1e-15);
  EXPECT_NEAR(rb().window, 3.0 / cq::two_pi_mhz(2.4), 1e-15);
  cq::PhysicalParams bad{1.0, -1.0, 1.0, 1.0};
  EXPECT_THROW(bad.validate(), cq::PreconditionError);
  cq::PhysicalParams zero_window{1.0, 1.0, 1.0, 0.0};
  EXPECT_THROW(zero_window.validate(), cq::PreconditionError);
}

TEST(Wavepacket, OverlapMatchesSimpsonIntegral) {
  const auto a = rb();
  auto b = rb();
  b.kappa *= 1.4;
  b.h *= 0.8;
  for (auto kind : {cq::Envelope::Emission, cq::Envelope::Primed}) {
    const double end = 40.0 / std::min(a.kappa, b.kappa);
    auto re = [&](double t) {
      return (std::conj(cq::envelope_amplitude(kind, a, t)) * cq::envelope_amplitude(kind, b, t)).real();
    };
    auto im = [&](double t) {
      return (std::conj(cq::envelope_amplitude(kind, a, t)) * cq::envelope_amplitude(kind, b, t)).imag();
    };
    auto na = [&](double t) { return std::norm(cq::envelope_amplitude(kind, a, t)); };
    auto nb = [&](double t) { return std::norm(cq::envelope_amplitude(kind, b, t)); };
    const std::size_t panels = 400000;
    const oracle::Complex num{oracle::simpson(re, 0.0, end, panels), oracle::simpson(im, 0.0, end, panels)};
    const oracle::Complex expected =
        num / std::sqrt(oracle::simpson(na, 0.0, end, panels) * oracle::simpson(nb, 0.0, end, panels));
    EXPECT_LT(std::abs(cq::envelope_overlap(kind, a, b) - expected), 1e-8);
  }
}

TEST(Wavepacket, TemporalModesReproduceTheGramMatrix) {
  auto b = rb();
  b.kappa *= 1.3;
  const std::vector<cq::PhysicalParams> same{rb(), rb(), rb()};
  EXPECT_EQ(cq::temporal_mode_coefficients(cq::Envelope::Emission, same).front().size(), 1U);
  const std::vector<cq::PhysicalParams> mixed{rb(), b, rb()};
  const auto rows = cq::temporal_mode_coefficients(cq::Envelope::Emission, mixed);
  ASSERT_EQ(rows.size(), 3U);
  auto dot = [](const std::vector<cq::Complex>& x, const std::vector<cq::Complex>& y) {
    cq::Complex s{};
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) s += std::conj(x[i]) * y[i];
    return s;
  };
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::abs(dot(rows[i], rows[i])), 1.0, 1e-12);
    for (std::size_t j = 0; j < 3; ++j) {
      const auto expected = cq::envelope_overlap(cq::Envelope::Emission, mixed[i], mixed[j]);
      EXPECT_LT(std::abs(dot(rows[i], rows[j]) - expected), 1e-10);
    }
  }
}
