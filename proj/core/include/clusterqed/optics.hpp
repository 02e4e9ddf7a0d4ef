#pragma once

// Polarization linear optics acting on SparseHybridState, and exact
// enumeration of detector outcomes with post-selection.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "clusterqed/hilbert.hpp"

namespace clusterqed {

struct Qwp {
  int rail = 0;
};

/// Half-wave plate; Jones matrix [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
struct Hwp {
  int rail = 0;
  double angle_deg = 22.5;
};

/// Transmits H and reflects V: H_a -> out1, V_a -> out2, H_b -> out2, V_b -> out1.
struct Pbs {
  int in_a = 0;
  int in_b = 0;
  int out_1 = 0;
  int out_2 = 0;
};

struct Loss {
  int rail = 0;
  double transmission = 1.0;
};

/// Labels used when reporting the two channels of a polarization-resolving detector.
enum class MeasurementBasis { HV, DA };

struct Detector {
  int rail = 0;
  std::string id;
  double efficiency = 1.0;
  double dark_probability = 0.0;
  MeasurementBasis basis = MeasurementBasis::DA;
};

using OpticalElement = std::variant<Qwp, Hwp, Pbs, Loss, Detector>;

enum class DetectionMode {
  PolarizationResolving,  ///< each detector reports which polarization channel fired
  ClickOnly,              ///< each detector reports click / no click
};

struct NetworkConfig {
  /// Atom k emits into rail sources[k].
  std::vector<int> sources;
  std::vector<OpticalElement> elements;
  DetectionMode mode = DetectionMode::PolarizationResolving;

  std::vector<const Detector*> detectors() const;
  std::vector<std::string> detector_ids() const;
  /// Checks rail usage and parameter ranges. Throws ConstructionError naming
  /// the offending element index.
  void validate() const;
};

/// Reading of a single detector.
enum class Reading : std::uint8_t {
  None,   ///< no click
  Plus,   ///< H (or D) channel
  Minus,  ///< V (or A) channel
  Both,   ///< both channels fired
  Click,  ///< click-only detector fired
};

struct OutcomePattern {
  std::vector<Reading> readings;  ///< one per detector, in network order

  /// Exactly one click per detector.
  bool accepted() const;
  friend auto operator<=>(const OutcomePattern&, const OutcomePattern&) = default;
};

std::string pattern_string(const OutcomePattern& pattern,
                           const std::vector<MeasurementBasis>& bases);

struct PauliOp {
  std::size_t atom = 0;  ///< position in the post-selected atom state
  char kind = 'Z';       ///< 'X' or 'Z'

  friend bool operator==(const PauliOp&, const PauliOp&) = default;
};

std::string correction_string(const std::vector<PauliOp>& ops);

struct OutcomeTableEntry {
  OutcomePattern pattern;
  double probability = 0.0;
  /// Conditional atoms-only state; branch probabilities sum to `probability`.
  MixedEnsemble conditional;
  /// Normalized heaviest branch of `conditional`.
  SparseHybridState post_state;
  std::vector<PauliOp> correction;
  double corrected_fidelity = 0.0;
  bool correctable = false;
};

struct OutcomeTable {
  std::vector<OutcomeTableEntry> entries;  ///< sorted by pattern
  std::vector<MeasurementBasis> bases;     ///< reporting basis per detector

  double total_probability() const;
  double accepted_probability() const;
  std::size_t accepted_count() const;
  const OutcomeTableEntry* find(const OutcomePattern& pattern) const;
  /// Probability-weighted fidelity over accepted entries.
  double mean_accepted_fidelity() const;
};

SparseHybridState apply_qwp(const SparseHybridState& state, int rail);
SparseHybridState apply_hwp(const SparseHybridState& state, int rail, double angle_deg);
SparseHybridState apply_pbs(const SparseHybridState& state, int in_a, int in_b, int out_1,
                            int out_2);
/// Beam-splitter loss to an unmonitored environment mode, traced out.
MixedEnsemble apply_loss(const SparseHybridState& state, int rail, double transmission);
MixedEnsemble apply_loss(const MixedEnsemble& ensemble, int rail, double transmission);

/// Applies every non-detector element in order.
MixedEnsemble propagate(const MixedEnsemble& input, const NetworkConfig& network);

/// Enumerates every detector pattern with its probability and conditional
/// atom state. Detector inefficiency and dark counts are included. Throws
/// PreconditionError if a photon remains on a rail without a detector.
OutcomeTable detect_all(const MixedEnsemble& ensemble, const NetworkConfig& network);

struct CorrectionOptions {
  double threshold = 1.0 - 1e-9;
};

/// For every accepted entry, finds the product of single-atom X and Z
/// operators maximizing fidelity to `target`; fills correction,
/// corrected_fidelity and correctable. Ties prefer Z-only, then fewer
/// operators.
void apply_corrections(OutcomeTable& table, const SparseHybridState& target,
                       const CorrectionOptions& options = {});

/// The correction chosen per accepted pattern (after apply_corrections).
std::map<OutcomePattern, std::vector<PauliOp>> correction_table(const OutcomeTable& table);

SparseHybridState apply_paulis(const SparseHybridState& state, const std::vector<PauliOp>& ops);

/// QWP on rails 1-4; PBS1(1,2)->(11,12); PBS2(3,4)->(13,14); HWP 22.5 on
/// 11, 12, 14; PBS3(12,13)->(15,16); HWP 22.5 on 15, 16; detectors
/// D1=11, D2=15, D3=16, D4=14.
NetworkConfig default_four_atom_network();
/// Two atoms, one PBS, diagonal-basis detection on both outputs.
NetworkConfig parity_check_network();
/// default_four_atom_network with the third PBS removed and the two inner
/// rails detected directly.
NetworkConfig two_pair_network();
/// QWP on rails 1, 2; PBS(1,2)->(3,4); HWP 22.5 on 3, 4; detectors 3, 4.
NetworkConfig fusion_network();

// Structured text (JSON) form of a network. Element order is significant.
std::string network_to_json(const NetworkConfig& network);
/// Throws ConstructionError("element <i>: ...") on malformed documents.
NetworkConfig network_from_json(const std::string& text);

}  // namespace clusterqed
