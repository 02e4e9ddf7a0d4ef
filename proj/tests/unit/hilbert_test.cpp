#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "clusterqed/hilbert.hpp"
#include "oracles.hpp"

namespace cq = clusterqed;
using cq::AtomLevel;
using cq::Complex;
using cq::Polarization;
using cq::PolarizationBasis;

namespace {

cq::SparseHybridState random_qubits(std::vector<int> ids, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Complex> amps(std::size_t{1} << ids.size());
  for (auto& a : amps) a = {n(rng), n(rng)};
  return cq::SparseHybridState::qubits(std::move(ids), amps).normalized();
}

cq::BasisLabel photon_label(std::vector<AtomLevel> atoms, std::vector<std::pair<cq::PhotonMode, int>> photons) {
  cq::BasisLabel l;
  l.atoms = std::move(atoms);
  for (auto& [m, c] : photons) l.set_occupation(m, c);
  return l;
}

}  // namespace

TEST(SparseState, QubitsFollowMostSignificantFirstConvention) {
  std::vector<Complex> amps(8);
  amps[0b011] = 1.0;
  const auto s = cq::SparseHybridState::qubits({7, 8, 9}, amps);
  EXPECT_EQ(s.amplitude({AtomLevel::G, AtomLevel::E, AtomLevel::E}), Complex(1.0));
  EXPECT_EQ(s.position_of(9), 2U);
  const auto dense = cq::qubit_amplitudes(s);
  ASSERT_EQ(dense.size(), 8U);
  EXPECT_EQ(dense[3], Complex(1.0));
}

TEST(SparseState, AddAccumulatesAndPrunes) {
  cq::SparseHybridState s({0});
  cq::BasisLabel g{{AtomLevel::G}, {}};
  s.add(g, 0.5);
  s.add(g, 0.25);
  EXPECT_DOUBLE_EQ(s.amplitude(g).real(), 0.75);
  s.add(g, -0.75);
  s.prune();
  EXPECT_TRUE(s.empty());
}

TEST(SparseState, RejectsLabelsThatBreakInvariants) {
  cq::SparseHybridState s({0}, {{1, PolarizationBasis::Linear}});
  EXPECT_THROW(s.add(cq::BasisLabel{{AtomLevel::G, AtomLevel::G}, {}}, 1.0), cq::ConstructionError);
  cq::BasisLabel wrong_rail{{AtomLevel::G}, {}};
  wrong_rail.set_occupation({2, Polarization::H, 0}, 1);
  EXPECT_THROW(s.add(wrong_rail, 1.0), cq::ConstructionError);
  cq::BasisLabel wrong_basis{{AtomLevel::G}, {}};
  wrong_basis.set_occupation({1, Polarization::L, 0}, 1);
  EXPECT_THROW(s.add(wrong_basis, 1.0), cq::ConstructionError);
  cq::BasisLabel crowded{{AtomLevel::G}, {}};
  EXPECT_THROW(crowded.set_occupation({1, Polarization::H, 0}, cq::kMaxOccupation + 1),
               cq::ConstructionError);
}

TEST(SparseState, TensorOfDisjointRegistries) {
  std::mt19937_64 rng(1);
  const auto a = random_qubits({0, 1}, rng);
  const auto b = random_qubits({5}, rng);
  const auto ab = cq::tensor(a, b);
  EXPECT_EQ(ab.atom_count(), 3U);
  EXPECT_NEAR(ab.norm(), 1.0, 1e-14);
  const auto da = cq::qubit_amplitudes(a);
  const auto db = cq::qubit_amplitudes(b);
  const auto dab = cq::qubit_amplitudes(ab);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(dab[2 * i + j] - da[i] * db[j]), 0.0, 1e-15);
  }
  EXPECT_THROW((void)cq::tensor(a, a), cq::ConstructionError);
}

TEST(SparseState, InnerProductIsConjugateLinearInFirstArgument) {
  std::mt19937_64 rng(2);
  const auto a = random_qubits({0, 1}, rng);
  const auto b = random_qubits({0, 1}, rng);
  const Complex z{0.3, -1.1};
  EXPECT_NEAR(std::abs(cq::inner_product(a.scaled(z), b) - std::conj(z) * cq::inner_product(a, b)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(cq::inner_product(a, b) - std::conj(cq::inner_product(b, a))), 0.0, 1e-14);
}

TEST(LocalUnitary, MatchesDenseReferenceOnRandomStates) {
  std::mt19937_64 rng(3);
  const auto h = cq::gates::hadamard();
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_qubits({0, 1, 2, 3}, rng);
    const std::size_t q = static_cast<std::size_t>(trial % 4);
    const auto out = cq::qubit_amplitudes(cq::apply_local_unitary(s, q, h));
    const auto ref = oracle::hadamard_on(cq::qubit_amplitudes(s), 4, q);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(std::abs(out[i] - ref[i]), 0.0, 1e-14);
  }
}

TEST(LocalUnitary, RejectsNonUnitaryUnlessSkipped) {
  const auto s = cq::SparseHybridState::basis({0}, {AtomLevel::G});
  Eigen::Matrix2cd m;
  m << 1.0, 0.0, 0.0, 2.0;
  EXPECT_THROW((void)cq::apply_local_unitary(s, 0, m), cq::PreconditionError);
  EXPECT_NO_THROW((void)cq::apply_local_unitary(s, 0, m, cq::UnitarityCheck::Skip));
}

TEST(LocalUnitary, QubitGateLeavesOtherLevelsAlone) {
  const auto s = cq::SparseHybridState::basis({0}, {AtomLevel::Alpha});
  const auto out = cq::apply_local_unitary(s, 0, cq::gates::pauli_x());
  EXPECT_EQ(out.amplitude({AtomLevel::Alpha}), Complex(1.0));
}

TEST(ModeMap, BalancedSplitterBunchesTwoIdenticalPhotons) {
  // Two photons on rails 1 and 2 through a 50:50 coupler: |11> -> (|20> - |02>)/sqrt 2.
  cq::SparseHybridState s({0, 1}, {{1, PolarizationBasis::Linear}, {2, PolarizationBasis::Linear}});
  s.add(photon_label({AtomLevel::G, AtomLevel::G}, {{{1, Polarization::H, 0}, 1}, {{2, Polarization::H, 0}, 1}}), 1.0);
  const double r = 1.0 / std::sqrt(2.0);
  const cq::ModeMap bs = [&](const cq::PhotonMode& m) -> std::optional<cq::ModeImage> {
    if (m.rail == 1) return cq::ModeImage{{{1, m.pol, m.temporal}, r}, {{2, m.pol, m.temporal}, r}};
    if (m.rail == 2) return cq::ModeImage{{{1, m.pol, m.temporal}, r}, {{2, m.pol, m.temporal}, -r}};
    return std::nullopt;
  };
  const auto out = cq::apply_mode_map(s, bs);
  EXPECT_NEAR(out.norm(), 1.0, 1e-14);
  const auto both = photon_label({AtomLevel::G, AtomLevel::G}, {{{1, Polarization::H, 0}, 1}, {{2, Polarization::H, 0}, 1}});
  EXPECT_NEAR(std::abs(out.amplitude(both)), 0.0, 1e-15);
  const auto left = photon_label({AtomLevel::G, AtomLevel::G}, {{{1, Polarization::H, 0}, 2}});
  EXPECT_NEAR(out.amplitude(left).real(), r, 1e-15);
}

TEST(ModeMap, DistinguishableTemporalModesDoNotInterfere) {
  cq::SparseHybridState s({0, 1}, {{1, PolarizationBasis::Linear}, {2, PolarizationBasis::Linear}});
  s.add(photon_label({AtomLevel::G, AtomLevel::G}, {{{1, Polarization::H, 0}, 1}, {{2, Polarization::H, 1}, 1}}), 1.0);
  const double r = 1.0 / std::sqrt(2.0);
  const cq::ModeMap bs = [&](const cq::PhotonMode& m) -> std::optional<cq::ModeImage> {
    if (m.rail == 1) return cq::ModeImage{{{1, m.pol, m.temporal}, r}, {{2, m.pol, m.temporal}, r}};
    if (m.rail == 2) return cq::ModeImage{{{1, m.pol, m.temporal}, r}, {{2, m.pol, m.temporal}, -r}};
    return std::nullopt;
  };
  const auto out = cq::apply_mode_map(s, bs);
  double coincidence = 0.0;
  for (const auto& [label, amp] : out.terms()) {
    if (label.photons_on_rail(1) == 1 && label.photons_on_rail(2) == 1) coincidence += std::norm(amp);
  }
  EXPECT_NEAR(coincidence, 0.5, 1e-14);
}

TEST(Emission, PhotonCarriesAtomicBranch) {
  const std::vector<Complex> temporal{1.0};
  cq::SparseHybridState s = cq::SparseHybridState::basis({0}, {AtomLevel::Alpha});
  s.add_rail(1, PolarizationBasis::Circular);
  const double r = 1.0 / std::sqrt(2.0);
  const cq::EmissionChannel ch[] = {{AtomLevel::G, Polarization::L, r}, {AtomLevel::E, Polarization::R, r}};
  const auto out = cq::emit_photon(s, 0, AtomLevel::Alpha, ch, 1, temporal);
  EXPECT_NEAR(out.norm(), 1.0, 1e-15);
  EXPECT_NEAR(out.amplitude(photon_label({AtomLevel::G}, {{{1, Polarization::L, 0}, 1}})).real(), r, 1e-15);
  EXPECT_NEAR(out.amplitude(photon_label({AtomLevel::E}, {{{1, Polarization::R, 0}, 1}})).real(), r, 1e-15);
}

TEST(Projection, ProbabilityAndPartialTrace) {
  std::mt19937_64 rng(4);
  const auto s = random_qubits({0, 1}, rng);
  const auto p = cq::project(s, [](const cq::BasisLabel& l) { return l.atoms[0] == AtomLevel::G; });
  const auto d = cq::qubit_amplitudes(s);
  EXPECT_NEAR(p.probability, std::norm(d[0]) + std::norm(d[1]), 1e-14);

  const std::size_t pos[] = {0};
  const auto traced = cq::trace_out_atoms(s, pos);
  EXPECT_NEAR(traced.total_probability(), 1.0, 1e-14);
  EXPECT_EQ(traced.size(), 2U);
}

TEST(Fidelity, MixedEnsembleWeightsBranches) {
  const auto g = cq::SparseHybridState::basis({0}, {AtomLevel::G});
  const auto e = cq::SparseHybridState::basis({0}, {AtomLevel::E});
  cq::MixedEnsemble m;
  m.add(0.25, g);
  m.add(0.75, e);
  EXPECT_NEAR(cq::fidelity(m, g), 0.25, 1e-15);
  EXPECT_NEAR(cq::fidelity(g.scaled(3.0), g), 1.0, 1e-15);
}

TEST(DebugString, StableSortedForm) {
  std::vector<Complex> amps{0.5, 0.0, 0.0, -0.5};
  const auto s = cq::SparseHybridState::qubits({0, 1}, amps);
  const std::string text = cq::to_debug_string(s);
  EXPECT_LT(text.find("|g g>"), text.find("|e e>"));
  EXPECT_EQ(text, cq::to_debug_string(cq::SparseHybridState::qubits({0, 1}, amps)));
}
