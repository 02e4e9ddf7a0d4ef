#pragma once

// Sparse state vectors over (atom levels) x (photonic Fock modes).
//
// A SparseHybridState is a map from canonical basis labels to complex
// amplitudes. Every operation is a pure function returning a new state; the
// input is never modified. Amplitudes below the prune epsilon are dropped
// after each operation.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace clusterqed {

using Complex = std::complex<double>;
using Matrix6cd = Eigen::Matrix<Complex, 6, 6>;

/// Raised when a state or network would violate a structural invariant
/// (overlapping registries, occupation above the cap, unknown rails).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation's precondition does not hold for its input.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kPruneEpsilon = 1e-15;
inline constexpr int kMaxOccupation = 4;
inline constexpr double kUnitarityTolerance = 1e-12;

enum class AtomLevel : std::uint8_t { G, E, GP, EP, Alpha, AlphaP };
inline constexpr std::size_t kAtomLevelCount = 6;

constexpr bool is_qubit_level(AtomLevel l) { return l == AtomLevel::G || l == AtomLevel::E; }
constexpr bool is_excited(AtomLevel l) {
  return l == AtomLevel::Alpha || l == AtomLevel::GP || l == AtomLevel::EP;
}
std::string_view level_name(AtomLevel l);

enum class Polarization : std::uint8_t { L, R, H, V };
enum class PolarizationBasis : std::uint8_t { Circular, Linear };

constexpr PolarizationBasis basis_of(Polarization p) {
  return (p == Polarization::L || p == Polarization::R) ? PolarizationBasis::Circular
                                                        : PolarizationBasis::Linear;
}
/// First/second polarization of a basis: (L, R) or (H, V).
constexpr std::pair<Polarization, Polarization> basis_pair(PolarizationBasis b) {
  return b == PolarizationBasis::Circular ? std::pair{Polarization::L, Polarization::R}
                                          : std::pair{Polarization::H, Polarization::V};
}
std::string_view polarization_name(Polarization p);

/// A single-photon mode. `temporal` indexes an orthonormal set of temporal
/// wavepackets; it is 0 unless the sources emit distinguishable envelopes.
struct PhotonMode {
  int rail = 0;
  Polarization pol = Polarization::H;
  int temporal = 0;

  friend auto operator<=>(const PhotonMode&, const PhotonMode&) = default;
};

struct BasisLabel {
  std::vector<AtomLevel> atoms;
  /// Sorted by mode; counts are in [1, kMaxOccupation].
  std::vector<std::pair<PhotonMode, int>> photons;

  int occupation(const PhotonMode& mode) const;
  int photons_on_rail(int rail) const;
  int total_photons() const;
  /// Sets the occupation of `mode`, keeping the canonical order. Throws
  /// ConstructionError above the occupation cap.
  void set_occupation(const PhotonMode& mode, int count);

  friend auto operator<=>(const BasisLabel&, const BasisLabel&) = default;
};

class SparseHybridState {
 public:
  using Terms = std::map<BasisLabel, Complex>;

  SparseHybridState() = default;
  explicit SparseHybridState(std::vector<int> atom_ids,
                             std::map<int, PolarizationBasis> rails = {});

  /// Single atoms-only basis state with amplitude 1.
  static SparseHybridState basis(std::vector<int> atom_ids, std::vector<AtomLevel> levels);
  /// Atoms-only state from dense amplitudes over {G, E}^n. Atom 0 is the most
  /// significant bit and G is 0.
  static SparseHybridState qubits(std::vector<int> atom_ids, std::span<const Complex> amplitudes);

  /// Accumulates `amplitude` onto `label`. Validates the label against the
  /// atom count and rail registry.
  void add(const BasisLabel& label, Complex amplitude);

  Complex amplitude(const BasisLabel& label) const;
  /// Amplitude of an atoms-only label with no photons.
  Complex amplitude(std::initializer_list<AtomLevel> atoms) const;

  const Terms& terms() const { return terms_; }
  const std::vector<int>& atom_ids() const { return atom_ids_; }
  std::size_t atom_count() const { return atom_ids_.size(); }
  const std::map<int, PolarizationBasis>& rails() const { return rails_; }
  bool has_rail(int rail) const { return rails_.contains(rail); }
  PolarizationBasis rail_basis(int rail) const;
  std::size_t position_of(int atom_id) const;
  bool empty() const { return terms_.empty(); }

  double norm_squared() const;
  double norm() const;

  double prune_epsilon() const { return prune_epsilon_; }
  /// A threshold of 0 disables pruning for states derived from this one.
  SparseHybridState& set_prune_epsilon(double eps);
  void prune();

  SparseHybridState scaled(Complex factor) const;
  SparseHybridState normalized() const;
  /// Same atom and rail registries, no terms.
  SparseHybridState empty_like() const;

  void add_rail(int rail, PolarizationBasis basis);
  void remove_rail(int rail);
  void set_rail_basis(int rail, PolarizationBasis basis);

 private:
  void validate(const BasisLabel& label) const;

  std::vector<int> atom_ids_;
  std::map<int, PolarizationBasis> rails_;
  Terms terms_;
  double prune_epsilon_ = kPruneEpsilon;
};

/// Weighted list of pure branches. Branch probability is weight * |state|^2;
/// branch states need not be normalized.
class MixedEnsemble {
 public:
  struct Branch {
    double weight = 0.0;
    SparseHybridState state;
  };

  MixedEnsemble() = default;
  explicit MixedEnsemble(SparseHybridState pure);

  /// Drops branches with zero weight or no terms.
  void add(double weight, SparseHybridState state);
  void append(const MixedEnsemble& other, double scale = 1.0);

  const std::vector<Branch>& branches() const { return branches_; }
  std::size_t size() const { return branches_.size(); }
  bool empty() const { return branches_.empty(); }
  double total_probability() const;

  /// Applies a linear map to every branch state.
  MixedEnsemble map(const std::function<SparseHybridState(const SparseHybridState&)>& f) const;
  /// Rescales every branch to a normalized state, folding the norm into the weight.
  MixedEnsemble normalized_branches() const;

 private:
  std::vector<Branch> branches_;
};

SparseHybridState tensor(const SparseHybridState& a, const SparseHybridState& b);

/// <a|b>, conjugate-linear in `a`. Requires identical atom and rail registries.
Complex inner_product(const SparseHybridState& a, const SparseHybridState& b);

enum class UnitarityCheck { Enforce, Skip };

/// 2x2 acting on the {G, E} subspace of one atom; other levels pass through.
SparseHybridState apply_local_unitary(const SparseHybridState& state, std::size_t atom_position,
                                      const Eigen::Matrix2cd& u,
                                      UnitarityCheck check = UnitarityCheck::Enforce);
/// 6x6 acting on all levels of one atom, indexed in AtomLevel order.
SparseHybridState apply_local_unitary(const SparseHybridState& state, std::size_t atom_position,
                                      const Matrix6cd& u,
                                      UnitarityCheck check = UnitarityCheck::Enforce);
/// 2x2 acting on the polarization pair of `target.rail` in that rail's basis,
/// identically on every temporal mode.
SparseHybridState apply_local_unitary(const SparseHybridState& state, const PhotonMode& target,
                                      const Eigen::Matrix2cd& u,
                                      UnitarityCheck check = UnitarityCheck::Enforce);

/// Image of a creation operator under a linear mode transformation.
using ModeImage = std::vector<std::pair<PhotonMode, Complex>>;
/// Returns the image of a mode, or nullopt if the mode is untouched.
using ModeMap = std::function<std::optional<ModeImage>(const PhotonMode&)>;

struct RailChange {
  std::vector<int> consumed;
  std::vector<std::pair<int, PolarizationBasis>> produced;
  std::vector<std::pair<int, PolarizationBasis>> rebased;
};

/// Applies a linear transformation of creation operators to every term,
/// expanding multi-photon products exactly.
SparseHybridState apply_mode_map(const SparseHybridState& state, const ModeMap& map,
                                 const RailChange& rails = {});

struct EmissionChannel {
  AtomLevel to;
  Polarization pol;
  Complex amplitude;
};

/// Replaces every term whose atom at `atom_position` is `from` by the sum over
/// channels of (atom -> channel.to, one photon of channel.pol on `rail`). The
/// photon is created in the temporal superposition given by `temporal`.
SparseHybridState emit_photon(const SparseHybridState& state, std::size_t atom_position,
                              AtomLevel from, std::span<const EmissionChannel> channels, int rail,
                              std::span<const Complex> temporal);

struct Projection {
  SparseHybridState state;  // unnormalized
  double probability = 0.0;
};

Projection project(const SparseHybridState& state,
                   const std::function<bool(const BasisLabel&)>& keep);

/// |<ref|s>|^2 / |s|^2.
double fidelity(const SparseHybridState& state, const SparseHybridState& reference);
/// sum_i w_i |<ref|s_i>|^2 / sum_i w_i |s_i|^2.
double fidelity(const MixedEnsemble& ensemble, const SparseHybridState& reference);

/// Splits a state into the incoherent mixture obtained by measuring and then
/// discarding the photon content of `rails`.
MixedEnsemble trace_out_rails(const SparseHybridState& state, std::span<const int> rails);
/// As above for the levels of the atoms at `positions`.
MixedEnsemble trace_out_atoms(const SparseHybridState& state,
                              std::span<const std::size_t> positions);

/// Dense amplitudes over {G, E}^n of an atoms-only state; terms with any atom
/// outside the qubit subspace are dropped.
std::vector<Complex> qubit_amplitudes(const SparseHybridState& state);

/// Deterministic sorted text form, one term per line: `|label> re,im`.
std::string to_debug_string(const SparseHybridState& state);
std::string label_string(const BasisLabel& label);

namespace gates {
Eigen::Matrix2cd hadamard();
Eigen::Matrix2cd pauli_x();
Eigen::Matrix2cd pauli_z();
}  // namespace gates

}  // namespace clusterqed
