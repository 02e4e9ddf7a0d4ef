#include "clusterqed/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>
#include <fmt/format.h>

#include "clusterqed/trials.hpp"

namespace clusterqed {

namespace {

constexpr std::size_t kMaxChainLength = 20;

std::vector<int> consecutive_ids(std::size_t n, int first_id) {
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = first_id + static_cast<int>(i);
  return ids;
}

std::size_t bit_of(std::size_t index, std::size_t atom, std::size_t n) {
  return (index >> (n - 1 - atom)) & 1U;
}

double dense_fidelity(const SparseHybridState& state, const std::vector<Complex>& ref) {
  const double n2 = state.norm_squared();
  if (n2 <= 0.0) return 0.0;
  const auto amps = qubit_amplitudes(state);
  Complex overlap{};
  for (std::size_t i = 0; i < amps.size(); ++i) overlap += std::conj(ref[i]) * amps[i];
  return std::norm(overlap) / n2;
}

PhysicalParams cavity_at(const ImperfectionModel& model, std::size_t k) {
  return model.cavities.size() == 1 ? model.cavities.front() : model.cavities.at(k);
}

std::vector<PhysicalParams> expanded_cavities(const ImperfectionModel& model, std::size_t n) {
  std::vector<PhysicalParams> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(cavity_at(model, k));
  return out;
}

// Probability of one source outcome given emission probability e and loss l.
double outcome_probability(SourceOutcome o, double e, double l) {
  switch (o) {
    case SourceOutcome::NotEmitted: return 1.0 - e;
    case SourceOutcome::Lost: return e * l;
    case SourceOutcome::Transmitted: return e * (1.0 - l);
  }
  return 0.0;
}

// Atoms in ALPHA, each emitting (or not) into its source rail, with lost
// photons traced out.
MixedEnsemble generation_input(const ImperfectionModel& model, const NetworkConfig& network,
                               const std::vector<SourceOutcome>& outcomes) {
  const std::size_t n = network.sources.size();
  std::map<int, PolarizationBasis> rails;
  for (int r : network.sources) rails.emplace(r, PolarizationBasis::Circular);
  SparseHybridState state(consecutive_ids(n, 0), rails);
  state.add(BasisLabel{std::vector<AtomLevel>(n, AtomLevel::Alpha), {}}, 1.0);

  const auto cavities = expanded_cavities(model, n);
  const auto temporal = temporal_mode_coefficients(Envelope::Emission, cavities);
  const double amp = std::numbers::sqrt2 / 2.0;
  const std::vector<EmissionChannel> channels{{AtomLevel::G, Polarization::L, amp},
                                              {AtomLevel::E, Polarization::R, amp}};
  for (std::size_t k = 0; k < n; ++k) {
    if (outcomes[k] == SourceOutcome::NotEmitted) continue;
    state = emit_photon(state, k, AtomLevel::Alpha, channels, network.sources[k], temporal[k]);
  }
  MixedEnsemble ens(state);
  for (std::size_t k = 0; k < n; ++k) {
    if (outcomes[k] == SourceOutcome::Lost) ens = apply_loss(ens, network.sources[k], 0.0);
  }
  return ens;
}

OutcomeTable finish_table(const MixedEnsemble& input, const NetworkConfig& network,
                          const SparseHybridState& target) {
  const MixedEnsemble out = propagate(input, network);
  OutcomeTable table = detect_all(out, network);
  apply_corrections(table, target);
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// Target states

void ChainState::validate() const {
  if (atom_ids != state.atom_ids()) {
    throw ConstructionError("chain atom ids differ from the state registry");
  }
  if (!state.rails().empty()) throw ConstructionError("chain state must not carry photons");
  if (std::abs(state.norm() - 1.0) > 1e-9) throw ConstructionError("chain state is not normalized");
}

ChainState build_briegel_cluster(std::size_t n, int first_id) {
  if (n == 0) throw ConstructionError("cluster length must be at least 1");
  if (n > kMaxChainLength) throw ConstructionError("cluster length is above the supported size");
  const std::size_t dim = std::size_t{1} << n;
  const double amp = std::pow(2.0, -0.5 * static_cast<double>(n));
  std::vector<Complex> v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    int parity = 0;
    for (std::size_t a = 0; a + 1 < n; ++a) parity ^= static_cast<int>(bit_of(i, a, n) & bit_of(i, a + 1, n));
    v[i] = parity ? -amp : amp;
  }
  auto ids = consecutive_ids(n, first_id);
  return {ids, SparseHybridState::qubits(ids, v)};
}

ChainState build_paired_cluster(std::size_t n, int first_id) {
  if (n < 2 || n % 2 != 0) throw ConstructionError("paired cluster length must be even and >= 2");
  if (n > kMaxChainLength) throw ConstructionError("cluster length is above the supported size");
  const std::size_t m = n / 2;
  const double amp = std::pow(2.0, -0.5 * static_cast<double>(m));
  std::vector<Complex> v(std::size_t{1} << n);
  for (std::size_t y = 0; y < (std::size_t{1} << m); ++y) {
    std::size_t index = 0;
    int parity = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t bit = bit_of(y, k, m);
      index = (index << 2U) | (bit * 3U);
      if (k + 1 < m) parity ^= static_cast<int>(bit & bit_of(y, k + 1, m));
    }
    v[index] = parity ? -amp : amp;
  }
  auto ids = consecutive_ids(n, first_id);
  return {ids, SparseHybridState::qubits(ids, v)};
}

ChainState build_four_atom_target() { return build_paired_cluster(4); }

ChainState apply_end_hadamards(const ChainState& chain) {
  if (chain.length() == 0) throw PreconditionError("empty chain");
  ChainState out = chain;
  out.state = apply_local_unitary(out.state, 0, gates::hadamard());
  if (chain.length() > 1) {
    out.state = apply_local_unitary(out.state, chain.length() - 1, gates::hadamard());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Imperfection model

ImperfectionModel ImperfectionModel::ideal(std::size_t sources) {
  ImperfectionModel m;
  m.cavities.assign(sources, PhysicalParams::from_two_pi_mhz(27.0, 2.4, 6.0));
  m.force_emission = true;
  return m;
}

void ImperfectionModel::validate(std::size_t sources, std::size_t detectors) const {
  if (cavities.empty()) throw PreconditionError("model needs at least one cavity");
  if (cavities.size() != 1 && cavities.size() != sources) {
    throw PreconditionError(
        fmt::format("model has {} cavities for {} sources", cavities.size(), sources));
  }
  for (const auto& c : cavities) c.validate();
  auto check_list = [](const std::vector<double>& v, std::size_t n, std::string_view what) {
    if (v.size() > 1 && v.size() != n) {
      throw PreconditionError(fmt::format("{} list has {} entries, expected {}", what, v.size(), n));
    }
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError(fmt::format("{} must lie in [0, 1]", what));
    }
  };
  check_list(photon_loss, sources, "photon loss");
  check_list(detector_efficiency, detectors, "detector efficiency");
  if (!(dark_rate_hz >= 0.0) || !std::isfinite(dark_rate_hz)) {
    throw PreconditionError("dark rate must be finite and non-negative");
  }
  if (dark_probability() > 1.0) throw PreconditionError("dark-count probability exceeds 1");
}

double ImperfectionModel::loss(std::size_t source) const {
  if (photon_loss.empty()) return 0.0;
  return photon_loss.size() == 1 ? photon_loss.front() : photon_loss.at(source);
}

double ImperfectionModel::efficiency(std::size_t detector) const {
  if (detector_efficiency.empty()) return 1.0;
  return detector_efficiency.size() == 1 ? detector_efficiency.front()
                                         : detector_efficiency.at(detector);
}

double ImperfectionModel::window() const {
  if (cavities.empty()) throw PreconditionError("model needs at least one cavity");
  return cavities.front().window;
}

double ImperfectionModel::dark_probability() const {
  // Rate in Hz, window in microseconds.
  return dark_rate_hz * window() * 1e-6;
}

bool ImperfectionModel::equal_cavities() const {
  return std::all_of(cavities.begin(), cavities.end(),
                     [&](const PhysicalParams& c) { return c == cavities.front(); });
}

double ImperfectionModel::emission_probability(std::size_t source) const {
  if (force_emission) return 1.0;
  const PhysicalParams c = cavity_at(*this, source);
  return channel_probabilities(c, c.window).leak;
}

NetworkConfig with_detector_model(const NetworkConfig& network, const ImperfectionModel& model) {
  NetworkConfig out = network;
  std::size_t i = 0;
  for (auto& element : out.elements) {
    if (auto* d = std::get_if<Detector>(&element)) {
      if (!model.detector_efficiency.empty()) d->efficiency = model.efficiency(i);
      if (model.dark_rate_hz > 0.0) d->dark_probability = model.dark_probability();
      ++i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation rounds

OutcomeTable conditioned_generation_table(const ImperfectionModel& model,
                                          const NetworkConfig& network,
                                          const SparseHybridState& target,
                                          const std::vector<SourceOutcome>& outcomes) {
  network.validate();
  model.validate(network.sources.size(), network.detectors().size());
  if (outcomes.size() != network.sources.size()) {
    throw PreconditionError("one source outcome per source is required");
  }
  const NetworkConfig net = with_detector_model(network, model);
  return finish_table(generation_input(model, net, outcomes), net, target);
}

OutcomeTable exact_generation_round(const ImperfectionModel& model, const NetworkConfig& network,
                                    const SparseHybridState& target) {
  network.validate();
  const std::size_t n = network.sources.size();
  model.validate(n, network.detectors().size());
  const NetworkConfig net = with_detector_model(network, model);

  std::vector<double> emit(n);
  for (std::size_t k = 0; k < n; ++k) emit[k] = model.emission_probability(k);

  MixedEnsemble input;
  std::vector<SourceOutcome> outcomes(n, SourceOutcome::NotEmitted);
  std::size_t configs = 1;
  for (std::size_t k = 0; k < n; ++k) configs *= 3;
  for (std::size_t c = 0; c < configs; ++c) {
    double weight = 1.0;
    std::size_t code = c;
    for (std::size_t k = 0; k < n; ++k) {
      outcomes[k] = static_cast<SourceOutcome>(code % 3);
      code /= 3;
      weight *= outcome_probability(outcomes[k], emit[k], model.loss(k));
    }
    if (weight <= 0.0) continue;
    input.append(generation_input(model, net, outcomes), weight);
  }
  return finish_table(input, net, target);
}

GenerationSampler::GenerationSampler(ImperfectionModel model, NetworkConfig network,
                                     SparseHybridState target)
    : model_(std::move(model)), network_(std::move(network)), target_(std::move(target)) {
  network_.validate();
  model_.validate(network_.sources.size(), network_.detectors().size());
  if (!model_.force_emission) {
    for (std::size_t k = 0; k < network_.sources.size(); ++k) {
      samplers_.emplace_back(cavity_at(model_, k));
    }
  }
}

const GenerationSampler::CachedTable& GenerationSampler::table_for(
    const std::vector<SourceOutcome>& outcomes) {
  if (auto it = cache_.find(outcomes); it != cache_.end()) return it->second;
  CachedTable cached;
  cached.table = conditioned_generation_table(model_, network_, target_, outcomes);
  const auto ref = qubit_amplitudes(target_);
  double running = 0.0;
  for (const auto& entry : cached.table.entries) {
    running += entry.probability;
    cached.cdf.push_back(running);
  }
  auto [it, inserted] = cache_.emplace(outcomes, std::move(cached));
  for (const auto& entry : it->second.table.entries) {
    CachedEntry ce{&entry, {}, {}};
    double acc = 0.0;
    for (const auto& b : entry.conditional.branches()) {
      acc += b.weight * b.state.norm_squared();
      ce.branch_cdf.push_back(acc);
      ce.branch_fidelity.push_back(
          entry.pattern.accepted() ? dense_fidelity(apply_paulis(b.state, entry.correction), ref)
                                   : 0.0);
    }
    it->second.entries.push_back(std::move(ce));
  }
  return it->second;
}

RoundResult GenerationSampler::sample(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t n = network_.sources.size();
  RoundResult result;
  std::vector<SourceOutcome> outcomes(n, SourceOutcome::NotEmitted);
  for (std::size_t k = 0; k < n; ++k) {
    EmissionEvent event;
    if (model_.force_emission) {
      event.kind = EmissionKind::PhotonLeak;
    } else {
      event = samplers_[k].sample(rng);
    }
    if (event.kind == EmissionKind::PhotonLeak) {
      outcomes[k] = uniform(rng) < model_.loss(k) ? SourceOutcome::Lost : SourceOutcome::Transmitted;
    }
    result.events.push_back(event);
  }

  const CachedTable& cached = table_for(outcomes);
  if (cached.entries.empty()) return result;
  const double u = uniform(rng) * cached.cdf.back();
  const std::size_t idx = std::min<std::size_t>(
      std::upper_bound(cached.cdf.begin(), cached.cdf.end(), u) - cached.cdf.begin(),
      cached.entries.size() - 1);
  const CachedEntry& ce = cached.entries[idx];
  const OutcomeTableEntry& entry = *ce.entry;
  result.pattern = entry.pattern;
  result.probability_weight = entry.probability;
  result.accepted = entry.pattern.accepted();
  if (!result.accepted) return result;

  const double v = uniform(rng) * ce.branch_cdf.back();
  const std::size_t b = std::min<std::size_t>(
      std::upper_bound(ce.branch_cdf.begin(), ce.branch_cdf.end(), v) - ce.branch_cdf.begin(),
      ce.branch_cdf.size() - 1);
  const auto& branch = entry.conditional.branches()[b];
  const SparseHybridState corrected = apply_paulis(branch.state, entry.correction).normalized();
  result.corrected_state = ChainState{corrected.atom_ids(), corrected};
  result.fidelity_to_target = ce.branch_fidelity[b];
  return result;
}

RoundTally& RoundTally::operator+=(const RoundTally& other) {
  trials += other.trials;
  accepted += other.accepted;
  fidelity_sum += other.fidelity_sum;
  return *this;
}

double RoundTally::acceptance() const {
  return trials == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(trials);
}

double RoundTally::acceptance_stderr() const {
  if (trials == 0) return 0.0;
  const double p = acceptance();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

double RoundTally::mean_fidelity() const {
  return accepted == 0 ? 0.0 : fidelity_sum / static_cast<double>(accepted);
}

RoundTally sample_generation_rounds(const ImperfectionModel& model, const NetworkConfig& network,
                                    const SparseHybridState& target, std::uint64_t trials,
                                    std::uint64_t seed) {
  // The emission CDFs are costly to tabulate; build them once and copy per block.
  const GenerationSampler prototype(model, network, target);
  std::function<RoundTally(std::mt19937_64&, std::uint64_t)> run =
      [&](std::mt19937_64& rng, std::uint64_t count) {
        GenerationSampler sampler = prototype;
        RoundTally tally;
        for (std::uint64_t i = 0; i < count; ++i) {
          const RoundResult r = sampler.sample(rng);
          ++tally.trials;
          if (r.accepted) {
            ++tally.accepted;
            tally.fidelity_sum += r.fidelity_to_target;
          }
        }
        return tally;
      };
  return run_blocks<RoundTally>(trials, seed, run);
}

// ---------------------------------------------------------------------------
// Restart

Matrix6cd primed_pi_pulse() {
  Matrix6cd m = Matrix6cd::Zero();
  const auto i = [](AtomLevel l) { return static_cast<Eigen::Index>(l); };
  m(i(AtomLevel::GP), i(AtomLevel::G)) = 1.0;
  m(i(AtomLevel::G), i(AtomLevel::GP)) = 1.0;
  m(i(AtomLevel::EP), i(AtomLevel::E)) = 1.0;
  m(i(AtomLevel::E), i(AtomLevel::EP)) = 1.0;
  m(i(AtomLevel::Alpha), i(AtomLevel::Alpha)) = 1.0;
  m(i(AtomLevel::AlphaP), i(AtomLevel::AlphaP)) = 1.0;
  return m;
}

Matrix6cd ancilla_pi_pulse() {
  Matrix6cd m = Matrix6cd::Identity();
  const auto a = static_cast<Eigen::Index>(AtomLevel::Alpha);
  const auto ap = static_cast<Eigen::Index>(AtomLevel::AlphaP);
  m(a, a) = 0.0;
  m(ap, ap) = 0.0;
  m(a, ap) = 1.0;
  m(ap, a) = 1.0;
  return m;
}

double restart_success_probability(const PhysicalParams& p, const RestartOptions& options) {
  if (options.max_retries < 0) throw PreconditionError("retry count must be non-negative");
  const double r = primed_leak_probability(p);
  return 1.0 - std::pow(1.0 - r, options.max_retries + 1);
}

RestartResult restart(const SparseHybridState& atom, const PhysicalParams& p,
                      const RestartOptions& options, std::mt19937_64* rng) {
  if (atom.atom_count() != 1 || !atom.rails().empty()) {
    throw PreconditionError("restart acts on a single atom with an empty cavity");
  }
  if (atom.empty()) throw PreconditionError("restart needs a non-empty atom state");
  for (const auto& [label, amp] : atom.terms()) {
    if (!is_qubit_level(label.atoms.front())) {
      throw PreconditionError("restart needs the atom in the qubit subspace");
    }
  }
  RestartResult result;
  result.success_probability = restart_success_probability(p, options);
  const double r = primed_leak_probability(p);
  const auto ids = atom.atom_ids();

  // Step 1 moves the qubit to the primed levels; step 2 decays them to the
  // ground ancilla (photon unmonitored); step 3 lifts the ancilla to ALPHA.
  const SparseHybridState primed = apply_local_unitary(atom, 0, primed_pi_pulse());
  result.state = primed;
  if (rng == nullptr) {
    result.attempts = 1;
    result.success = r > 0.0;
  } else {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      ++result.attempts;
      if (uniform(*rng) < r) {
        result.success = true;
        break;
      }
    }
  }
  if (result.success) {
    const auto ground = SparseHybridState::basis(ids, {AtomLevel::AlphaP});
    result.state = apply_local_unitary(ground, 0, ancilla_pi_pulse());
  } else {
    // Spontaneous decay leaves the atom in a ground qubit level.
    result.state = SparseHybridState::basis(ids, {AtomLevel::G});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Growth

GrowthStats grow_chain(std::size_t target_length, double p_generate, double p_fuse,
                       std::mt19937_64& rng, const GrowthOptions& options) {
  if (target_length < 4 || target_length % 2 != 0) {
    throw PreconditionError("target length must be even and at least 4");
  }
  if (!(p_generate > 0.0 && p_generate <= 1.0) || !(p_fuse > 0.0 && p_fuse <= 1.0)) {
    throw PreconditionError("growth needs success probabilities in (0, 1]");
  }
  std::bernoulli_distribution generate(p_generate);
  std::bernoulli_distribution fuse_ok(p_fuse);
  GrowthStats stats;
  auto new_block = [&] {
    for (;;) {
      ++stats.generation_rounds;
      if (generate(rng)) return;
      stats.restarts += 4;
    }
  };

  std::size_t length = 0;
  while (length < target_length) {
    new_block();
    if (length == 0) {
      length = 4;
      continue;
    }
    ++stats.fusion_attempts;
    if (fuse_ok(rng)) {
      stats.restarts += 2;
      length += 2;
      continue;
    }
    // The fresh block is lost along with the measured atom on the chain side.
    stats.restarts += 4;
    if (options.policy == FailurePolicy::DiscardChain || length - 2 < 4) {
      stats.restarts += length;
      length = 0;
    } else {
      stats.restarts += 2;
      length -= 2;
    }
  }
  stats.final_length = length;
  return stats;
}

GrowthExpectation expected_growth(std::size_t target_length, double p_generate, double p_fuse,
                                  FailurePolicy policy) {
  if (target_length < 4 || target_length % 2 != 0) {
    throw PreconditionError("target length must be even and at least 4");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (p_generate <= 0.0) return {inf, inf};
  if (target_length > 4 && p_fuse <= 0.0) return {inf, inf};

  // Unknowns: lengths 0, 4, 6, ..., target - 2.
  std::vector<std::size_t> lengths{0};
  for (std::size_t l = 4; l < target_length; l += 2) lengths.push_back(l);
  const auto n = static_cast<Eigen::Index>(lengths.size());
  auto index = [&](std::size_t l) -> Eigen::Index {
    if (l == 0) return 0;
    return static_cast<Eigen::Index>((l - 4) / 2 + 1);
  };
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
  const double g = 1.0 / p_generate;
  rhs(0, 0) = g;
  if (target_length > 4) a(0, index(4)) -= 1.0;
  for (std::size_t l : lengths) {
    if (l == 0) continue;
    const Eigen::Index row = index(l);
    rhs(row, 0) = g;
    rhs(row, 1) = 1.0;
    if (l + 2 < target_length) a(row, index(l + 2)) -= p_fuse;
    const bool trim = policy == FailurePolicy::TrimEnd && l - 2 >= 4;
    a(row, trim ? index(l - 2) : 0) -= 1.0 - p_fuse;
  }
  const Eigen::MatrixXd x = a.partialPivLu().solve(rhs);
  return {x(0, 0), x(0, 1)};
}

LossScaling loss_scaling_comparison(double eta, int n) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw PreconditionError("eta must lie in [0, 1]");
  if (n < 1) throw PreconditionError("n must be at least 1");
  return {std::pow(1.0 - eta, n), std::pow(1.0 - eta, 2 * n)};
}

}  // namespace clusterqed
