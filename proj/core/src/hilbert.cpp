#include "clusterqed/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace clusterqed {

namespace {

double factorial_sqrt(int n) {
  // Occupations never exceed kMaxOccupation, but products of mode maps can
  // transiently reach 4 before the cap is checked.
  static constexpr double table[] = {1.0, 1.0, 1.4142135623730951, 2.449489742783178,
                                     4.898979485566356};
  return n < 5 ? table[n] : std::sqrt(std::tgamma(n + 1.0));
}

bool is_unitary(const auto& u) {
  const auto identity = std::decay_t<decltype(u)>::Identity(u.rows(), u.cols());
  return ((u.adjoint() * u) - identity).cwiseAbs().maxCoeff() <= kUnitarityTolerance;
}

void check_position(const SparseHybridState& s, std::size_t pos) {
  if (pos >= s.atom_count()) {
    throw PreconditionError(fmt::format("atom position {} out of range (atoms: {})", pos,
                                        s.atom_count()));
  }
}

void require_same_shape(const SparseHybridState& a, const SparseHybridState& b) {
  if (a.atom_ids() != b.atom_ids() || a.rails() != b.rails()) {
    throw PreconditionError("states have different atom or rail registries");
  }
}

}  // namespace

std::string_view level_name(AtomLevel l) {
  switch (l) {
    case AtomLevel::G: return "g";
    case AtomLevel::E: return "e";
    case AtomLevel::GP: return "g'";
    case AtomLevel::EP: return "e'";
    case AtomLevel::Alpha: return "a";
    case AtomLevel::AlphaP: return "a'";
  }
  return "?";
}

std::string_view polarization_name(Polarization p) {
  switch (p) {
    case Polarization::L: return "L";
    case Polarization::R: return "R";
    case Polarization::H: return "H";
    case Polarization::V: return "V";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// BasisLabel

int BasisLabel::occupation(const PhotonMode& mode) const {
  auto it = std::lower_bound(photons.begin(), photons.end(), mode,
                             [](const auto& p, const PhotonMode& m) { return p.first < m; });
  return (it != photons.end() && it->first == mode) ? it->second : 0;
}

int BasisLabel::photons_on_rail(int rail) const {
  int n = 0;
  for (const auto& [mode, count] : photons) {
    if (mode.rail == rail) n += count;
  }
  return n;
}

int BasisLabel::total_photons() const {
  int n = 0;
  for (const auto& p : photons) n += p.second;
  return n;
}

void BasisLabel::set_occupation(const PhotonMode& mode, int count) {
  if (count < 0 || count > kMaxOccupation) {
    throw ConstructionError(fmt::format("occupation {} on rail {} exceeds the cap of {}", count,
                                        mode.rail, kMaxOccupation));
  }
  auto it = std::lower_bound(photons.begin(), photons.end(), mode,
                             [](const auto& p, const PhotonMode& m) { return p.first < m; });
  if (it != photons.end() && it->first == mode) {
    if (count == 0) {
      photons.erase(it);
    } else {
      it->second = count;
    }
  } else if (count > 0) {
    photons.insert(it, {mode, count});
  }
}

// ---------------------------------------------------------------------------
// SparseHybridState

SparseHybridState::SparseHybridState(std::vector<int> atom_ids,
                                     std::map<int, PolarizationBasis> rails)
    : atom_ids_(std::move(atom_ids)), rails_(std::move(rails)) {
  std::set<int> unique(atom_ids_.begin(), atom_ids_.end());
  if (unique.size() != atom_ids_.size()) {
    throw ConstructionError("duplicate atom id in registry");
  }
}

SparseHybridState SparseHybridState::basis(std::vector<int> atom_ids,
                                           std::vector<AtomLevel> levels) {
  if (atom_ids.size() != levels.size()) {
    throw ConstructionError("level count does not match atom count");
  }
  SparseHybridState s(std::move(atom_ids));
  s.add(BasisLabel{std::move(levels), {}}, 1.0);
  return s;
}

SparseHybridState SparseHybridState::qubits(std::vector<int> atom_ids,
                                            std::span<const Complex> amplitudes) {
  const std::size_t n = atom_ids.size();
  if (amplitudes.size() != (std::size_t{1} << n)) {
    throw ConstructionError("dense amplitude vector has the wrong length");
  }
  SparseHybridState s(std::move(atom_ids));
  for (std::size_t index = 0; index < amplitudes.size(); ++index) {
    if (amplitudes[index] == Complex{}) continue;
    BasisLabel label;
    label.atoms.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      label.atoms[k] = ((index >> (n - 1 - k)) & 1U) ? AtomLevel::E : AtomLevel::G;
    }
    s.add(label, amplitudes[index]);
  }
  s.prune();
  return s;
}

void SparseHybridState::validate(const BasisLabel& label) const {
  if (label.atoms.size() != atom_ids_.size()) {
    throw ConstructionError(fmt::format("label has {} atoms, state has {}", label.atoms.size(),
                                        atom_ids_.size()));
  }
  for (const auto& [mode, count] : label.photons) {
    auto it = rails_.find(mode.rail);
    if (it == rails_.end()) {
      throw ConstructionError(fmt::format("photon on unregistered rail {}", mode.rail));
    }
    if (basis_of(mode.pol) != it->second) {
      throw ConstructionError(
          fmt::format("rail {} mixes circular and linear polarization labels", mode.rail));
    }
    if (count < 1 || count > kMaxOccupation) {
      throw ConstructionError(fmt::format("occupation {} on rail {}", count, mode.rail));
    }
  }
  if (static_cast<std::size_t>(label.total_photons()) > atom_ids_.size()) {
    throw ConstructionError("photon number exceeds the number of atoms");
  }
}

void SparseHybridState::add(const BasisLabel& label, Complex amplitude) {
  validate(label);
  terms_[label] += amplitude;
}

Complex SparseHybridState::amplitude(const BasisLabel& label) const {
  auto it = terms_.find(label);
  return it == terms_.end() ? Complex{} : it->second;
}

Complex SparseHybridState::amplitude(std::initializer_list<AtomLevel> atoms) const {
  return amplitude(BasisLabel{std::vector<AtomLevel>(atoms), {}});
}

PolarizationBasis SparseHybridState::rail_basis(int rail) const {
  auto it = rails_.find(rail);
  if (it == rails_.end()) {
    throw PreconditionError(fmt::format("rail {} is not registered", rail));
  }
  return it->second;
}

std::size_t SparseHybridState::position_of(int atom_id) const {
  auto it = std::find(atom_ids_.begin(), atom_ids_.end(), atom_id);
  if (it == atom_ids_.end()) {
    throw PreconditionError(fmt::format("atom id {} not in state", atom_id));
  }
  return static_cast<std::size_t>(it - atom_ids_.begin());
}

double SparseHybridState::norm_squared() const {
  double n = 0.0;
  for (const auto& [label, amp] : terms_) n += std::norm(amp);
  return n;
}

double SparseHybridState::norm() const { return std::sqrt(norm_squared()); }

SparseHybridState& SparseHybridState::set_prune_epsilon(double eps) {
  prune_epsilon_ = eps;
  return *this;
}

void SparseHybridState::prune() {
  if (prune_epsilon_ <= 0.0) return;
  std::erase_if(terms_, [eps = prune_epsilon_](const auto& t) { return std::abs(t.second) < eps; });
}

SparseHybridState SparseHybridState::scaled(Complex factor) const {
  SparseHybridState out = *this;
  for (auto& [label, amp] : out.terms_) amp *= factor;
  out.prune();
  return out;
}

SparseHybridState SparseHybridState::normalized() const {
  const double n = norm();
  if (n == 0.0) throw PreconditionError("cannot normalize a zero state");
  return scaled(1.0 / n);
}

SparseHybridState SparseHybridState::empty_like() const {
  SparseHybridState out;
  out.atom_ids_ = atom_ids_;
  out.rails_ = rails_;
  out.prune_epsilon_ = prune_epsilon_;
  return out;
}

void SparseHybridState::add_rail(int rail, PolarizationBasis basis) {
  if (!rails_.emplace(rail, basis).second) {
    throw ConstructionError(fmt::format("rail {} already registered", rail));
  }
}

void SparseHybridState::remove_rail(int rail) {
  for (const auto& [label, amp] : terms_) {
    if (label.photons_on_rail(rail) > 0) {
      throw PreconditionError(fmt::format("rail {} still carries photons", rail));
    }
  }
  rails_.erase(rail);
}

void SparseHybridState::set_rail_basis(int rail, PolarizationBasis basis) {
  rail_basis(rail);
  rails_[rail] = basis;
}

// ---------------------------------------------------------------------------
// MixedEnsemble

MixedEnsemble::MixedEnsemble(SparseHybridState pure) { add(1.0, std::move(pure)); }

void MixedEnsemble::add(double weight, SparseHybridState state) {
  if (weight < 0.0) throw PreconditionError("negative ensemble weight");
  if (weight == 0.0 || state.empty()) return;
  branches_.push_back({weight, std::move(state)});
}

void MixedEnsemble::append(const MixedEnsemble& other, double scale) {
  for (const auto& b : other.branches_) add(b.weight * scale, b.state);
}

double MixedEnsemble::total_probability() const {
  double p = 0.0;
  for (const auto& b : branches_) p += b.weight * b.state.norm_squared();
  return p;
}

MixedEnsemble MixedEnsemble::map(
    const std::function<SparseHybridState(const SparseHybridState&)>& f) const {
  MixedEnsemble out;
  for (const auto& b : branches_) out.add(b.weight, f(b.state));
  return out;
}

MixedEnsemble MixedEnsemble::normalized_branches() const {
  MixedEnsemble out;
  for (const auto& b : branches_) {
    const double n2 = b.state.norm_squared();
    if (n2 > 0.0) out.add(b.weight * n2, b.state.scaled(1.0 / std::sqrt(n2)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations

SparseHybridState tensor(const SparseHybridState& a, const SparseHybridState& b) {
  std::vector<int> ids = a.atom_ids();
  for (int id : b.atom_ids()) {
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
      throw ConstructionError(fmt::format("atom id {} present in both factors", id));
    }
    ids.push_back(id);
  }
  std::map<int, PolarizationBasis> rails = a.rails();
  for (const auto& [rail, basis] : b.rails()) {
    if (!rails.emplace(rail, basis).second) {
      throw ConstructionError(fmt::format("rail {} present in both factors", rail));
    }
  }
  SparseHybridState out(std::move(ids), std::move(rails));
  out.set_prune_epsilon(std::min(a.prune_epsilon(), b.prune_epsilon()));
  for (const auto& [la, aa] : a.terms()) {
    for (const auto& [lb, ab] : b.terms()) {
      BasisLabel label;
      label.atoms = la.atoms;
      label.atoms.insert(label.atoms.end(), lb.atoms.begin(), lb.atoms.end());
      label.photons = la.photons;
      label.photons.insert(label.photons.end(), lb.photons.begin(), lb.photons.end());
      std::sort(label.photons.begin(), label.photons.end());
      out.add(label, aa * ab);
    }
  }
  out.prune();
  return out;
}

Complex inner_product(const SparseHybridState& a, const SparseHybridState& b) {
  require_same_shape(a, b);
  const auto& small = a.terms().size() <= b.terms().size() ? a : b;
  const auto& large = &small == &a ? b : a;
  Complex sum{};
  for (const auto& [label, amp] : small.terms()) {
    auto it = large.terms().find(label);
    if (it == large.terms().end()) continue;
    sum += (&small == &a) ? std::conj(amp) * it->second : std::conj(it->second) * amp;
  }
  return sum;
}

SparseHybridState apply_local_unitary(const SparseHybridState& state, std::size_t atom_position,
                                      const Eigen::Matrix2cd& u, UnitarityCheck check) {
  check_position(state, atom_position);
  if (check == UnitarityCheck::Enforce && !is_unitary(u)) {
    throw PreconditionError("2x2 atom operator is not unitary");
  }
  SparseHybridState out = state.empty_like();
  for (const auto& [label, amp] : state.terms()) {
    const AtomLevel level = label.atoms[atom_position];
    if (!is_qubit_level(level)) {
      out.add(label, amp);
      continue;
    }
    const int column = level == AtomLevel::E ? 1 : 0;
    BasisLabel next = label;
    for (int row = 0; row < 2; ++row) {
      const Complex coeff = u(row, column);
      if (coeff == Complex{}) continue;
      next.atoms[atom_position] = row == 0 ? AtomLevel::G : AtomLevel::E;
      out.add(next, coeff * amp);
    }
  }
  out.prune();
  return out;
}

SparseHybridState apply_local_unitary(const SparseHybridState& state, std::size_t atom_position,
                                      const Matrix6cd& u, UnitarityCheck check) {
  check_position(state, atom_position);
  if (check == UnitarityCheck::Enforce && !is_unitary(u)) {
    throw PreconditionError("6x6 atom operator is not unitary");
  }
  SparseHybridState out = state.empty_like();
  for (const auto& [label, amp] : state.terms()) {
    const auto column = static_cast<int>(label.atoms[atom_position]);
    BasisLabel next = label;
    for (int row = 0; row < 6; ++row) {
      const Complex coeff = u(row, column);
      if (coeff == Complex{}) continue;
      next.atoms[atom_position] = static_cast<AtomLevel>(row);
      out.add(next, coeff * amp);
    }
  }
  out.prune();
  return out;
}

SparseHybridState apply_local_unitary(const SparseHybridState& state, const PhotonMode& target,
                                      const Eigen::Matrix2cd& u, UnitarityCheck check) {
  const PolarizationBasis basis = state.rail_basis(target.rail);
  if (basis_of(target.pol) != basis) {
    throw PreconditionError(
        fmt::format("rail {} does not carry {} labels", target.rail,
                    polarization_name(target.pol)));
  }
  if (check == UnitarityCheck::Enforce && !is_unitary(u)) {
    throw PreconditionError("2x2 polarization operator is not unitary");
  }
  const auto [first, second] = basis_pair(basis);
  const int rail = target.rail;
  ModeMap map = [&, first = first, second = second](const PhotonMode& m) -> std::optional<ModeImage> {
    if (m.rail != rail) return std::nullopt;
    const int column = m.pol == first ? 0 : 1;
    ModeImage image;
    if (u(0, column) != Complex{}) image.push_back({{rail, first, m.temporal}, u(0, column)});
    if (u(1, column) != Complex{}) image.push_back({{rail, second, m.temporal}, u(1, column)});
    return image;
  };
  return apply_mode_map(state, map);
}

SparseHybridState apply_mode_map(const SparseHybridState& state, const ModeMap& map,
                                 const RailChange& rails) {
  SparseHybridState out = state.empty_like();
  for (const auto& [rail, basis] : rails.produced) out.add_rail(rail, basis);
  for (const auto& [rail, basis] : rails.rebased) out.set_rail_basis(rail, basis);

  using Photons = std::vector<std::pair<PhotonMode, int>>;
  std::map<BasisLabel, Complex> accum;

  for (const auto& [label, amp] : state.terms()) {
    // Creation operators to expand, one entry per photon.
    std::vector<ModeImage> creations;
    BasisLabel base;
    base.atoms = label.atoms;
    double input_norm = 1.0;
    for (const auto& [mode, count] : label.photons) {
      input_norm *= factorial_sqrt(count);
      auto image = map(mode);
      if (!image) {
        base.photons.emplace_back(mode, count);
        continue;
      }
      for (int c = 0; c < count; ++c) creations.push_back(*image);
    }

    // Monomials keyed by raw occupation (counts may exceed the cap until checked).
    std::map<Photons, Complex> monomials{{base.photons, amp / input_norm}};
    for (const auto& image : creations) {
      std::map<Photons, Complex> next;
      for (const auto& [occ, coeff] : monomials) {
        for (const auto& [mode, u] : image) {
          Photons grown = occ;
          auto it = std::lower_bound(grown.begin(), grown.end(), mode,
                                     [](const auto& p, const PhotonMode& m) { return p.first < m; });
          if (it != grown.end() && it->first == mode) {
            ++it->second;
          } else {
            grown.insert(it, {mode, 1});
          }
          next[std::move(grown)] += coeff * u;
        }
      }
      monomials = std::move(next);
    }

    for (const auto& [occ, coeff] : monomials) {
      // Exact cancellations (e.g. Hong-Ou-Mandel) leave rounding residue on
      // monomials that may exceed the cap; they are not physical.
      if (std::abs(coeff) < kPruneEpsilon) continue;
      double output_norm = 1.0;
      for (const auto& [mode, count] : occ) output_norm *= factorial_sqrt(count);
      BasisLabel result;
      result.atoms = label.atoms;
      for (const auto& [mode, count] : occ) result.set_occupation(mode, count);
      accum[std::move(result)] += coeff * output_norm;
    }
  }

  for (int rail : rails.consumed) {
    for (const auto& [label, amp] : accum) {
      if (label.photons_on_rail(rail) > 0 && std::abs(amp) > 0.0) {
        throw ConstructionError(fmt::format("consumed rail {} still carries photons", rail));
      }
    }
  }
  for (int rail : rails.consumed) out.remove_rail(rail);
  for (auto& [label, amp] : accum) out.add(label, amp);
  out.prune();
  return out;
}

SparseHybridState emit_photon(const SparseHybridState& state, std::size_t atom_position,
                              AtomLevel from, std::span<const EmissionChannel> channels, int rail,
                              std::span<const Complex> temporal) {
  check_position(state, atom_position);
  if (channels.empty() || temporal.empty()) {
    throw PreconditionError("emission needs at least one channel and one temporal mode");
  }
  const PolarizationBasis basis = basis_of(channels.front().pol);
  for (const auto& ch : channels) {
    if (basis_of(ch.pol) != basis) {
      throw PreconditionError("emission channels mix polarization bases");
    }
  }
  SparseHybridState out = state.empty_like();
  if (!out.has_rail(rail)) {
    out.add_rail(rail, basis);
  } else if (out.rail_basis(rail) != basis) {
    throw ConstructionError(fmt::format("rail {} has a different polarization basis", rail));
  }
  for (const auto& [label, amp] : state.terms()) {
    if (label.atoms[atom_position] != from) {
      out.add(label, amp);
      continue;
    }
    for (const auto& ch : channels) {
      for (std::size_t m = 0; m < temporal.size(); ++m) {
        if (temporal[m] == Complex{}) continue;
        BasisLabel next = label;
        next.atoms[atom_position] = ch.to;
        const PhotonMode mode{rail, ch.pol, static_cast<int>(m)};
        const int n = next.occupation(mode);
        next.set_occupation(mode, n + 1);
        out.add(next, amp * ch.amplitude * temporal[m] * std::sqrt(static_cast<double>(n + 1)));
      }
    }
  }
  out.prune();
  return out;
}

Projection project(const SparseHybridState& state,
                   const std::function<bool(const BasisLabel&)>& keep) {
  Projection result{state.empty_like(), 0.0};
  for (const auto& [label, amp] : state.terms()) {
    if (keep(label)) result.state.add(label, amp);
  }
  result.probability = result.state.norm_squared();
  return result;
}

double fidelity(const SparseHybridState& state, const SparseHybridState& reference) {
  const double n2 = state.norm_squared();
  if (n2 == 0.0) throw PreconditionError("fidelity of a zero-norm state");
  return std::norm(inner_product(reference, state)) / n2;
}

double fidelity(const MixedEnsemble& ensemble, const SparseHybridState& reference) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& b : ensemble.branches()) {
    num += b.weight * std::norm(inner_product(reference, b.state));
    den += b.weight * b.state.norm_squared();
  }
  if (den == 0.0) throw PreconditionError("fidelity of a zero-norm ensemble");
  return num / den;
}

MixedEnsemble trace_out_rails(const SparseHybridState& state, std::span<const int> rails) {
  auto on_traced = [&](int rail) { return std::find(rails.begin(), rails.end(), rail) != rails.end(); };
  std::map<int, PolarizationBasis> kept_rails;
  for (const auto& [rail, basis] : state.rails()) {
    if (!on_traced(rail)) kept_rails.emplace(rail, basis);
  }
  using Photons = std::vector<std::pair<PhotonMode, int>>;
  std::map<Photons, SparseHybridState> groups;
  for (const auto& [label, amp] : state.terms()) {
    Photons traced;
    BasisLabel kept;
    kept.atoms = label.atoms;
    for (const auto& p : label.photons) {
      (on_traced(p.first.rail) ? traced : kept.photons).push_back(p);
    }
    auto [it, inserted] = groups.try_emplace(traced, state.atom_ids(), kept_rails);
    if (inserted) it->second.set_prune_epsilon(state.prune_epsilon());
    it->second.add(kept, amp);
  }
  MixedEnsemble out;
  for (auto& [traced, s] : groups) {
    s.prune();
    out.add(1.0, std::move(s));
  }
  return out;
}

MixedEnsemble trace_out_atoms(const SparseHybridState& state,
                              std::span<const std::size_t> positions) {
  for (auto pos : positions) check_position(state, pos);
  auto traced = [&](std::size_t pos) {
    return std::find(positions.begin(), positions.end(), pos) != positions.end();
  };
  std::vector<int> kept_ids;
  for (std::size_t i = 0; i < state.atom_count(); ++i) {
    if (!traced(i)) kept_ids.push_back(state.atom_ids()[i]);
  }
  std::map<std::vector<AtomLevel>, SparseHybridState> groups;
  for (const auto& [label, amp] : state.terms()) {
    std::vector<AtomLevel> key;
    BasisLabel kept;
    kept.photons = label.photons;
    for (std::size_t i = 0; i < label.atoms.size(); ++i) {
      (traced(i) ? key : kept.atoms).push_back(label.atoms[i]);
    }
    auto [it, inserted] = groups.try_emplace(key, kept_ids, state.rails());
    if (inserted) it->second.set_prune_epsilon(state.prune_epsilon());
    it->second.add(kept, amp);
  }
  MixedEnsemble out;
  for (auto& [key, s] : groups) {
    s.prune();
    out.add(1.0, std::move(s));
  }
  return out;
}

std::vector<Complex> qubit_amplitudes(const SparseHybridState& state) {
  const std::size_t n = state.atom_count();
  std::vector<Complex> dense(std::size_t{1} << n);
  for (const auto& [label, amp] : state.terms()) {
    if (!label.photons.empty()) {
      throw PreconditionError("qubit_amplitudes requires an atoms-only state");
    }
    std::size_t index = 0;
    bool qubit = true;
    for (AtomLevel l : label.atoms) {
      if (!is_qubit_level(l)) {
        qubit = false;
        break;
      }
      index = (index << 1U) | (l == AtomLevel::E ? 1U : 0U);
    }
    if (qubit) dense[index] += amp;
  }
  return dense;
}

std::string label_string(const BasisLabel& label) {
  std::string out = "|";
  for (std::size_t i = 0; i < label.atoms.size(); ++i) {
    if (i) out += ' ';
    out += level_name(label.atoms[i]);
  }
  if (!label.photons.empty()) {
    out += ';';
    for (const auto& [mode, count] : label.photons) {
      out += fmt::format(" {}{}", mode.rail, polarization_name(mode.pol));
      if (mode.temporal != 0) out += fmt::format("t{}", mode.temporal);
      out += fmt::format("={}", count);
    }
  }
  out += '>';
  return out;
}

std::string to_debug_string(const SparseHybridState& state) {
  std::string out;
  for (const auto& [label, amp] : state.terms()) {
    // Normalize -0 so that golden files do not depend on rounding direction.
    const double re = amp.real() == 0.0 ? 0.0 : amp.real();
    const double im = amp.imag() == 0.0 ? 0.0 : amp.imag();
    out += fmt::format("{} {:.12g},{:.12g}\n", label_string(label), re, im);
  }
  return out;
}

namespace gates {

Eigen::Matrix2cd hadamard() {
  Eigen::Matrix2cd h;
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return h;
}

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  return x;
}

Eigen::Matrix2cd pauli_z() {
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  return z;
}

}  // namespace gates

}  // namespace clusterqed
