#pragma once

// Protocol layer: target states, four-atom generation rounds (exact and
// sampled), the three-step restart, chain fusion, and chain growth.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "clusterqed/cavity.hpp"
#include "clusterqed/hilbert.hpp"
#include "clusterqed/optics.hpp"

namespace clusterqed {

struct ChainState {
  std::vector<int> atom_ids;
  SparseHybridState state;  ///< atoms only, normalized

  std::size_t length() const { return atom_ids.size(); }
  /// Throws ConstructionError if the invariants do not hold.
  void validate() const;
};

/// Linear cluster built from prod_a (|g>_a + |e>_a Z_{a+1}) / sqrt 2, with g = 0
/// and e = 1: amplitude 2^{-N/2} (-1)^{sum x_a x_{a+1}}.
ChainState build_briegel_cluster(std::size_t n, int first_id = 0);

/// Redundantly encoded linear cluster on N = 2m atoms. Atoms (2k, 2k+1) share
/// a value y_k; amplitude 2^{-m/2} (-1)^{sum y_k y_{k+1}}. N = 2 is a Bell
/// pair, N = 4 is the four-atom generation target, N = 6 the fused 4+4 state.
ChainState build_paired_cluster(std::size_t n, int first_id = 0);

/// (|gggg> + |eegg> + |ggee> - |eeee>) / 2.
ChainState build_four_atom_target();

/// Hadamards on the first and last atoms.
ChainState apply_end_hadamards(const ChainState& chain);

struct ImperfectionModel {
  /// One entry per source. Unequal entries make photons partly distinguishable.
  std::vector<PhysicalParams> cavities;
  /// Loss probability per source rail; a single entry applies to all rails.
  std::vector<double> photon_loss;
  /// Efficiency per detector; a single entry applies to all detectors.
  std::vector<double> detector_efficiency;
  double dark_rate_hz = 0.0;
  /// Treat emission as certain instead of using the in-window leak probability.
  bool force_emission = false;

  /// Four copies of the rubidium parameters, certain emission, ideal optics.
  static ImperfectionModel ideal(std::size_t sources = 4);

  void validate(std::size_t sources, std::size_t detectors) const;
  double loss(std::size_t source) const;
  double efficiency(std::size_t detector) const;
  /// Observation window of the first cavity.
  double window() const;
  /// Per-detector false-click probability rate x window.
  double dark_probability() const;
  bool equal_cavities() const;
  /// Probability that cavity k emits within its window.
  double emission_probability(std::size_t source) const;
};

/// Copy of `network` with the model's detector efficiencies and dark-count
/// probability written into its detectors. Detector values already in the
/// network are kept when the model leaves them unset (no efficiency list,
/// zero dark rate).
NetworkConfig with_detector_model(const NetworkConfig& network, const ImperfectionModel& model);

/// Per-source emission outcome used to condition exact tables.
enum class SourceOutcome : std::uint8_t { NotEmitted, Lost, Transmitted };

/// Exact outcome table of one generation round, averaged over emission and
/// loss. Entries carry corrections towards `target`.
OutcomeTable exact_generation_round(const ImperfectionModel& model, const NetworkConfig& network,
                                    const SparseHybridState& target);
/// Exact table conditioned on one emission/loss configuration per source.
OutcomeTable conditioned_generation_table(const ImperfectionModel& model,
                                          const NetworkConfig& network,
                                          const SparseHybridState& target,
                                          const std::vector<SourceOutcome>& outcomes);

struct RoundResult {
  bool accepted = false;
  OutcomePattern pattern;
  std::optional<ChainState> corrected_state;
  double fidelity_to_target = 0.0;
  /// Probability of the observed pattern given the sampled emission configuration.
  double probability_weight = 0.0;
  std::vector<EmissionEvent> events;
};

/// Samples generation rounds. Emission events come from per-cavity quantum
/// jump samplers, photon loss from Bernoulli draws, and the detector pattern
/// from the exact table of the resulting configuration (cached).
class GenerationSampler {
 public:
  GenerationSampler(ImperfectionModel model, NetworkConfig network, SparseHybridState target);

  RoundResult sample(std::mt19937_64& rng);

  const NetworkConfig& network() const { return network_; }

 private:
  struct CachedEntry {
    const OutcomeTableEntry* entry;
    std::vector<double> branch_cdf;
    std::vector<double> branch_fidelity;
  };
  struct CachedTable {
    OutcomeTable table;
    std::vector<double> cdf;
    std::vector<CachedEntry> entries;
  };

  const CachedTable& table_for(const std::vector<SourceOutcome>& outcomes);

  ImperfectionModel model_;
  NetworkConfig network_;
  SparseHybridState target_;
  std::vector<EmissionSampler> samplers_;
  std::map<std::vector<SourceOutcome>, CachedTable> cache_;
};

/// Acceptance/fidelity tallies over sampled rounds; merge is associative.
struct RoundTally {
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  double fidelity_sum = 0.0;

  RoundTally& operator+=(const RoundTally& other);
  double acceptance() const;
  /// Binomial standard error of acceptance().
  double acceptance_stderr() const;
  double mean_fidelity() const;
};

/// Runs `trials` sampled rounds split into seeded blocks across workers.
RoundTally sample_generation_rounds(const ImperfectionModel& model, const NetworkConfig& network,
                                    const SparseHybridState& target, std::uint64_t trials,
                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Restart

/// 6x6 pi pulse exchanging g <-> g' and e <-> e'.
Matrix6cd primed_pi_pulse();
/// 6x6 pi pulse exchanging alpha' <-> alpha.
Matrix6cd ancilla_pi_pulse();

struct RestartOptions {
  /// Additional attempts after a spontaneous-emission failure in step 2.
  int max_retries = 0;
};

struct RestartResult {
  bool success = false;
  int attempts = 0;
  /// Probability the deterministic path succeeds within the allowed attempts.
  double success_probability = 0.0;
  /// Single-atom state after the procedure (ALPHA on success).
  SparseHybridState state;
};

/// 1 - (1 - r)^(retries + 1) with r the primed-level leak probability.
double restart_success_probability(const PhysicalParams& p, const RestartOptions& options = {});

/// Drives one atom from the qubit subspace back to ALPHA. With an RNG each
/// step-2 attempt is sampled; without one the result reports the success
/// probability and the state on the successful path.
RestartResult restart(const SparseHybridState& atom, const PhysicalParams& p,
                      const RestartOptions& options = {}, std::mt19937_64* rng = nullptr);

// ---------------------------------------------------------------------------
// Fusion and growth

struct FusionOptions {
  /// Hadamards on the first and last atoms of the fused chain.
  bool end_hadamards = false;
  /// Target to correct towards; defaults to the paired cluster of the fused length.
  std::optional<SparseHybridState> target;
  CorrectionOptions correction;
};

struct FusionResult {
  OutcomeTable table;
  SparseHybridState target;
  std::size_t fused_length = 0;
  /// Overlap of the two primed-decay wavepackets.
  Complex visibility{1.0, 0.0};
};

/// Fuses the last atom of `first` with the first atom of `second`. The model
/// supplies two cavities (one per fused atom), two source-rail losses and two
/// detectors.
FusionResult fuse(const ChainState& first, const ChainState& second,
                  const ImperfectionModel& model, const FusionOptions& options = {});
/// As fuse(), naming the fusion atoms by position; they must be chain ends.
FusionResult fuse_at(const ChainState& first, std::size_t first_position,
                     const ChainState& second, std::size_t second_position,
                     const ImperfectionModel& model, const FusionOptions& options = {});

enum class FailurePolicy {
  /// Drop the measured end atom and its redundant partner (length - 2).
  TrimEnd,
  /// Discard the whole chain.
  DiscardChain,
};

struct GrowthOptions {
  FailurePolicy policy = FailurePolicy::TrimEnd;
  RestartOptions restart;
};

struct GrowthStats {
  std::uint64_t generation_rounds = 0;  ///< four-atom rounds attempted
  std::uint64_t fusion_attempts = 0;
  std::uint64_t restarts = 0;           ///< single-atom restarts after failures
  std::size_t final_length = 0;
};

/// Grows a chain to `target_length` (even, >= 4) by generating four-atom
/// chains with probability `p_generate` and fusing them on with probability
/// `p_fuse`.
GrowthStats grow_chain(std::size_t target_length, double p_generate, double p_fuse,
                       std::mt19937_64& rng, const GrowthOptions& options = {});

struct GrowthExpectation {
  double generation_rounds = 0.0;
  double fusion_attempts = 0.0;
};

/// Expected cost of grow_chain from an empty start, solving the Markov chain
/// over chain lengths.
GrowthExpectation expected_growth(std::size_t target_length, double p_generate, double p_fuse,
                                  FailurePolicy policy = FailurePolicy::TrimEnd);

struct LossScaling {
  double this_scheme = 1.0;
  double cascade_scheme = 1.0;
};

/// (1 - eta)^n against (1 - eta)^(2n).
LossScaling loss_scaling_comparison(double eta, int n);

}  // namespace clusterqed
