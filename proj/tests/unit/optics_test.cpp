#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "clusterqed/optics.hpp"
#include "clusterqed/protocol.hpp"
#include "oracles.hpp"

namespace cq = clusterqed;
using cq::AtomLevel;
using cq::Complex;
using cq::Polarization;
using cq::PolarizationBasis;

namespace {

// States carry no more photons than atoms, so element tests park emitted
// photons next to atoms already returned to the ground level.
const std::vector<int> kSpectators{0, 1, 2, 3};

cq::BasisLabel spectator_label() { return cq::BasisLabel{std::vector<AtomLevel>(kSpectators.size(), AtomLevel::G), {}}; }

cq::SparseHybridState one_photon(int rail, PolarizationBasis basis, Polarization pol, int count = 1) {
  cq::SparseHybridState s(kSpectators, {{rail, basis}});
  cq::BasisLabel l = spectator_label();
  l.set_occupation({rail, pol, 0}, count);
  s.add(l, 1.0);
  return s;
}

Complex amp(const cq::SparseHybridState& s, int rail, Polarization pol, int count = 1) {
  cq::BasisLabel l = spectator_label();
  l.set_occupation({rail, pol, 0}, count);
  return s.amplitude(l);
}

std::vector<cq::OutcomePattern> accepted_patterns(const cq::OutcomeTable& t) {
  std::vector<cq::OutcomePattern> out;
  for (const auto& e : t.entries) {
    if (e.pattern.accepted()) out.push_back(e.pattern);
  }
  return out;
}

// Brute force over all X^x Z^z products on dense amplitudes.
double best_pauli_fidelity(const oracle::Dense& state, const oracle::Dense& target, std::size_t n) {
  double best = 0.0;
  const oracle::Dense s = oracle::normalized(state);
  for (std::size_t x = 0; x < (std::size_t{1} << n); ++x) {
    for (std::size_t z = 0; z < (std::size_t{1} << n); ++z) {
      oracle::Dense v = s;
      for (std::size_t q = 0; q < n; ++q) {
        const std::size_t bit = std::size_t{1} << (n - 1 - q);
        if (z & bit) v = oracle::apply_1q(v, n, q, {1.0, 0.0, 0.0, -1.0});
        if (x & bit) v = oracle::apply_1q(v, n, q, {0.0, 1.0, 1.0, 0.0});
      }
      best = std::max(best, std::pow(oracle::overlap_abs(v, target), 2));
    }
  }
  return best;
}

}  // namespace

TEST(Elements, QuarterWavePlateMapsCircularToLinear) {
  auto s = cq::apply_qwp(one_photon(1, PolarizationBasis::Circular, Polarization::L), 1);
  EXPECT_EQ(s.rail_basis(1), PolarizationBasis::Linear);
  EXPECT_NEAR(std::abs(amp(s, 1, Polarization::H)), 1.0, 1e-15);
  s = cq::apply_qwp(one_photon(1, PolarizationBasis::Circular, Polarization::R), 1);
  EXPECT_NEAR(std::abs(amp(s, 1, Polarization::V)), 1.0, 1e-15);
  EXPECT_THROW((void)cq::apply_qwp(one_photon(1, PolarizationBasis::Linear, Polarization::H), 1),
               cq::PreconditionError);
}

TEST(Elements, HalfWavePlateFollowsJonesMatrix) {
  for (double deg : {0.0, 10.0, 22.5, 45.0, 67.0}) {
    const double c = std::cos(2.0 * deg * std::numbers::pi / 180.0);
    const double s = std::sin(2.0 * deg * std::numbers::pi / 180.0);
    const auto h = cq::apply_hwp(one_photon(2, PolarizationBasis::Linear, Polarization::H), 2, deg);
    EXPECT_NEAR(amp(h, 2, Polarization::H).real(), c, 1e-15);
    EXPECT_NEAR(amp(h, 2, Polarization::V).real(), s, 1e-15);
    const auto v = cq::apply_hwp(one_photon(2, PolarizationBasis::Linear, Polarization::V), 2, deg);
    EXPECT_NEAR(amp(v, 2, Polarization::H).real(), s, 1e-15);
    EXPECT_NEAR(amp(v, 2, Polarization::V).real(), -c, 1e-15);
  }
}

TEST(Elements, PolarizingBeamSplitterRouting) {
  auto in = [](int rail, Polarization p) {
    cq::SparseHybridState s(kSpectators, {{1, PolarizationBasis::Linear}, {2, PolarizationBasis::Linear}});
    cq::BasisLabel l = spectator_label();
    l.set_occupation({rail, p, 0}, 1);
    s.add(l, 1.0);
    return s;
  };
  EXPECT_NEAR(std::abs(amp(cq::apply_pbs(in(1, Polarization::H), 1, 2, 5, 6), 5, Polarization::H)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(amp(cq::apply_pbs(in(1, Polarization::V), 1, 2, 5, 6), 6, Polarization::V)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(amp(cq::apply_pbs(in(2, Polarization::H), 1, 2, 5, 6), 6, Polarization::H)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(amp(cq::apply_pbs(in(2, Polarization::V), 1, 2, 5, 6), 5, Polarization::V)), 1.0, 1e-15);
  const auto out = cq::apply_pbs(in(1, Polarization::H), 1, 2, 5, 6);
  EXPECT_FALSE(out.has_rail(1));
  EXPECT_TRUE(out.has_rail(5));
}

TEST(Elements, LossSplitsBinomially) {
  for (int n = 1; n <= cq::kMaxOccupation; ++n) {
    const double eta = 0.3;
    const auto m = cq::apply_loss(one_photon(1, PolarizationBasis::Linear, Polarization::H, n), 1, eta);
    EXPECT_NEAR(m.total_probability(), 1.0, 1e-14);
    std::vector<double> kept(static_cast<std::size_t>(n) + 1, 0.0);
    for (const auto& b : m.branches()) {
      for (const auto& [label, a] : b.state.terms()) {
        kept[static_cast<std::size_t>(label.photons_on_rail(1))] += b.weight * std::norm(a);
      }
    }
    for (int k = 0; k <= n; ++k) {
      const double binom = std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
      EXPECT_NEAR(kept[static_cast<std::size_t>(k)], binom * std::pow(eta, k) * std::pow(1.0 - eta, n - k), 1e-14)
          << "n=" << n << " k=" << k;
    }
  }
  EXPECT_THROW((void)cq::apply_loss(one_photon(1, PolarizationBasis::Linear, Polarization::H), 1, 1.5),
               cq::PreconditionError);
}

TEST(Elements, LossDecoheresWhichPathInformation) {
  // Atom entangled with photon polarization; losing the photon leaves a mixture.
  cq::SparseHybridState s({0}, {{1, PolarizationBasis::Linear}});
  cq::BasisLabel gh{{AtomLevel::G}, {}};
  gh.set_occupation({1, Polarization::H, 0}, 1);
  cq::BasisLabel ev{{AtomLevel::E}, {}};
  ev.set_occupation({1, Polarization::V, 0}, 1);
  s.add(gh, 1.0 / std::sqrt(2.0));
  s.add(ev, 1.0 / std::sqrt(2.0));
  const auto m = cq::apply_loss(s, 1, 0.0);
  EXPECT_EQ(m.size(), 2U);
  EXPECT_NEAR(m.total_probability(), 1.0, 1e-15);
}

TEST(Networks, BuiltinsValidate) {
  for (const auto& n : {cq::default_four_atom_network(), cq::parity_check_network(), cq::two_pair_network(),
                        cq::fusion_network()}) {
    EXPECT_NO_THROW(n.validate());
    const auto round = cq::network_from_json(cq::network_to_json(n));
    EXPECT_EQ(cq::network_to_json(round), cq::network_to_json(n));
  }
  EXPECT_EQ(cq::default_four_atom_network().detector_ids(),
            (std::vector<std::string>{"D1", "D2", "D3", "D4"}));
}

TEST(Networks, MalformedDocumentsNameTheElement) {
  const std::string doc = R"({"sources":[1,2],"detection":"resolving","elements":[
    {"type":"qwp","rail":1},{"type":"pbs","in":[1,2],"out":[3,3]}]})";
  try {
    (void)cq::network_from_json(doc);
    FAIL() << "expected ConstructionError";
  } catch (const cq::ConstructionError& e) {
    EXPECT_NE(std::string(e.what()).find("element 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)cq::network_from_json(R"({"sources":[1],"elements":[{"type":"mirror","rail":1}]})"),
               cq::ConstructionError);
  EXPECT_THROW((void)cq::network_from_json(R"({"sources":[1],"elements":[],"extra":1})"), cq::ConstructionError);
}

TEST(Networks, UndetectedPhotonIsAnError) {
  auto n = cq::parity_check_network();
  n.elements.erase(std::remove_if(n.elements.begin(), n.elements.end(),
                                  [](const cq::OpticalElement& e) { return std::holds_alternative<cq::Detector>(e); }),
                   n.elements.end());
  const auto model = cq::ImperfectionModel::ideal(2);
  EXPECT_THROW((void)cq::exact_generation_round(model, n, cq::build_paired_cluster(2).state), cq::PreconditionError);
}

TEST(DefaultNetwork, SixteenEquiprobablePatternsAllCorrectable) {
  const auto model = cq::ImperfectionModel::ideal();
  const auto target = cq::build_four_atom_target().state;
  const auto table = cq::exact_generation_round(model, cq::default_four_atom_network(), target);
  EXPECT_NEAR(table.total_probability(), 1.0, 1e-12);
  EXPECT_NEAR(table.accepted_probability(), 0.125, 1e-12);
  ASSERT_EQ(table.accepted_count(), 16U);
  const auto dense_target = cq::qubit_amplitudes(target);
  for (const auto& e : table.entries) {
    if (!e.pattern.accepted()) continue;
    EXPECT_NEAR(e.probability, 1.0 / 128.0, 1e-12);
    EXPECT_NEAR(e.corrected_fidelity, 1.0, 1e-12);
    EXPECT_TRUE(e.correctable);
    // The chosen correction is optimal among all Pauli products.
    EXPECT_NEAR(best_pauli_fidelity(cq::qubit_amplitudes(e.post_state), dense_target, 4), 1.0, 1e-12);
  }
}

TEST(DefaultNetwork, CorrectionsPreferPhaseFlipsOnEarlyAtoms) {
  const auto table = cq::exact_generation_round(cq::ImperfectionModel::ideal(), cq::default_four_atom_network(),
                                                cq::build_four_atom_target().state);
  std::map<std::string, std::string> by_pattern;
  for (const auto& e : table.entries) {
    if (e.pattern.accepted()) by_pattern[cq::pattern_string(e.pattern, table.bases)] = cq::correction_string(e.correction);
  }
  EXPECT_EQ(by_pattern.at("DDDD"), "I");
  EXPECT_EQ(by_pattern.at("ADDD"), "Z1");
  EXPECT_EQ(by_pattern.at("DDDA"), "Z3");
  for (const auto& [p, c] : by_pattern) EXPECT_EQ(c.find('X'), std::string::npos) << p;
}

TEST(TwoPairNetwork, TargetIsUnreachable) {
  const auto target = cq::build_four_atom_target().state;
  const auto table = cq::exact_generation_round(cq::ImperfectionModel::ideal(), cq::two_pair_network(), target);
  EXPECT_NEAR(table.accepted_probability(), 0.25, 1e-12);
  for (const auto& e : table.entries) {
    if (!e.pattern.accepted()) continue;
    EXPECT_FALSE(e.correctable);
    EXPECT_LT(best_pauli_fidelity(cq::qubit_amplitudes(e.post_state), cq::qubit_amplitudes(target), 4), 0.5);
  }
}

TEST(ParityNetwork, ProducesBellPairsAtHalfAcceptance) {
  const auto table = cq::exact_generation_round(cq::ImperfectionModel::ideal(2), cq::parity_check_network(),
                                                cq::build_paired_cluster(2).state);
  EXPECT_NEAR(table.accepted_probability(), 0.5, 1e-12);
  for (const auto& e : table.entries) {
    if (e.pattern.accepted()) {
      EXPECT_NEAR(e.corrected_fidelity, 1.0, 1e-12);
    }
  }
}

TEST(Detection, DarkCountsAddPatternsWithExpectedWeight) {
  auto net = cq::parity_check_network();
  auto model = cq::ImperfectionModel::ideal(2);
  model.dark_rate_hz = 1e4;
  const double p_dark = model.dark_probability();
  const auto table = cq::exact_generation_round(model, net, cq::build_paired_cluster(2).state);
  EXPECT_NEAR(table.total_probability(), 1.0, 1e-12);
  // Both-channel readings only come from a dark count on an occupied detector.
  double both = 0.0;
  for (const auto& e : table.entries) {
    for (auto r : e.pattern.readings) {
      if (r == cq::Reading::Both) both += e.probability;
    }
  }
  EXPECT_GT(both, 0.0);
  EXPECT_LT(both, 2.0 * p_dark);
  // No-photon patterns read "-" except where a dark count fired.
  const auto ideal = cq::exact_generation_round(cq::ImperfectionModel::ideal(2), net, cq::build_paired_cluster(2).state);
  EXPECT_GT(table.entries.size(), ideal.entries.size());
}

TEST(Detection, ClickOnlyModeReportsClicks) {
  auto net = cq::parity_check_network();
  net.mode = cq::DetectionMode::ClickOnly;
  const auto table = cq::exact_generation_round(cq::ImperfectionModel::ideal(2), net, cq::build_paired_cluster(2).state);
  EXPECT_NEAR(table.total_probability(), 1.0, 1e-12);
  for (const auto& e : table.entries) {
    for (auto r : e.pattern.readings) EXPECT_TRUE(r == cq::Reading::None || r == cq::Reading::Click);
  }
  EXPECT_EQ(accepted_patterns(table).size(), 1U);
}

TEST(Corrections, PauliApplicationAndStrings) {
  std::vector<Complex> amps{0.5, 0.5, 0.5, 0.5};
  const auto s = cq::SparseHybridState::qubits({0, 1}, amps);
  const auto z = cq::apply_paulis(s, {{1, 'Z'}});
  EXPECT_NEAR(z.amplitude({AtomLevel::G, AtomLevel::E}).real(), -0.5, 1e-15);
  EXPECT_EQ(cq::correction_string({}), "I");
  EXPECT_EQ(cq::correction_string({{0, 'Z'}, {2, 'Z'}, {1, 'X'}}), "Z1 Z3 X2");
}
