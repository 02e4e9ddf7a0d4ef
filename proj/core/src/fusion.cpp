#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "clusterqed/protocol.hpp"

namespace clusterqed {

namespace {

ChainState reversed(const ChainState& chain) {
  const std::size_t n = chain.length();
  const auto amps = qubit_amplitudes(chain.state);
  std::vector<Complex> out(amps.size());
  for (std::size_t i = 0; i < amps.size(); ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < n; ++b) r |= ((i >> b) & 1U) << (n - 1 - b);
    out[r] = amps[i];
  }
  std::vector<int> ids(chain.atom_ids.rbegin(), chain.atom_ids.rend());
  return {ids, SparseHybridState::qubits(ids, out)};
}

ChainState relabeled_after(const ChainState& chain, const ChainState& first) {
  const bool clash = std::any_of(chain.atom_ids.begin(), chain.atom_ids.end(), [&](int id) {
    return std::find(first.atom_ids.begin(), first.atom_ids.end(), id) != first.atom_ids.end();
  });
  if (!clash) return chain;
  const int base = *std::max_element(first.atom_ids.begin(), first.atom_ids.end()) + 1;
  std::vector<int> ids(chain.length());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = base + static_cast<int>(i);
  return {ids, SparseHybridState::qubits(ids, qubit_amplitudes(chain.state))};
}

void require_qubit_chain(const ChainState& chain, std::string_view which) {
  if (chain.length() < 2) {
    throw PreconditionError(fmt::format("{} chain must hold at least two atoms", which));
  }
  chain.validate();
  for (const auto& [label, amp] : chain.state.terms()) {
    if (!std::all_of(label.atoms.begin(), label.atoms.end(), is_qubit_level)) {
      throw PreconditionError(fmt::format("{} chain has atoms outside the qubit subspace", which));
    }
  }
}

SparseHybridState hadamard_ends(SparseHybridState s) {
  s = apply_local_unitary(s, 0, gates::hadamard());
  if (s.atom_count() > 1) s = apply_local_unitary(s, s.atom_count() - 1, gates::hadamard());
  return s;
}

}  // namespace

FusionResult fuse(const ChainState& first, const ChainState& second,
                  const ImperfectionModel& model, const FusionOptions& options) {
  return fuse_at(first, first.length() - 1, second, 0, model, options);
}

FusionResult fuse_at(const ChainState& first_in, std::size_t first_position,
                     const ChainState& second_in, std::size_t second_position,
                     const ImperfectionModel& model, const FusionOptions& options) {
  require_qubit_chain(first_in, "first");
  require_qubit_chain(second_in, "second");
  const auto at_end = [](const ChainState& c, std::size_t pos) {
    return pos == 0 || pos + 1 == c.length();
  };
  if (!at_end(first_in, first_position) || !at_end(second_in, second_position)) {
    throw PreconditionError("fusion atoms must sit at a chain end");
  }
  // Orient both chains so the fusion atoms meet in the middle.
  const ChainState first = first_position == 0 ? reversed(first_in) : first_in;
  ChainState second = second_position + 1 == second_in.length() && second_position != 0
                          ? reversed(second_in)
                          : second_in;
  second = relabeled_after(second, first);

  const NetworkConfig network = with_detector_model(fusion_network(), model);
  model.validate(network.sources.size(), network.detectors().size());
  const std::size_t n1 = first.length();
  const std::size_t fused_length = n1 + second.length() - 2;
  const std::array<std::size_t, 2> positions{n1 - 1, n1};

  FusionResult result;
  result.fused_length = fused_length;
  const std::array<PhysicalParams, 2> cavities{
      model.cavities.size() == 1 ? model.cavities.front() : model.cavities.at(0),
      model.cavities.size() == 1 ? model.cavities.front() : model.cavities.at(1)};
  result.visibility = envelope_overlap(Envelope::Primed, cavities[0], cavities[1]);
  const auto temporal = temporal_mode_coefficients(Envelope::Primed, cavities);

  SparseHybridState joint = tensor(first.state, second.state);
  for (int rail : network.sources) joint.add_rail(rail, PolarizationBasis::Circular);
  for (std::size_t pos : positions) joint = apply_local_unitary(joint, pos, primed_pi_pulse());

  // g' decays emitting R (V after the QWP), e' emitting L (H after the QWP).
  const std::array<EmissionChannel, 1> from_gp{{{AtomLevel::AlphaP, Polarization::R, 1.0}}};
  const std::array<EmissionChannel, 1> from_ep{{{AtomLevel::AlphaP, Polarization::L, 1.0}}};
  std::array<double, 2> emit{};
  for (std::size_t k = 0; k < 2; ++k) {
    emit[k] = model.force_emission ? 1.0 : primed_leak_probability(cavities[k]);
  }

  MixedEnsemble input;
  for (int code = 0; code < 9; ++code) {
    const std::array<SourceOutcome, 2> outcome{static_cast<SourceOutcome>(code % 3),
                                               static_cast<SourceOutcome>(code / 3)};
    double weight = 1.0;
    SparseHybridState s = joint;
    for (std::size_t k = 0; k < 2; ++k) {
      const double e = emit[k];
      const double l = model.loss(k);
      switch (outcome[k]) {
        case SourceOutcome::NotEmitted: weight *= 1.0 - e; break;
        case SourceOutcome::Lost: weight *= e * l; break;
        case SourceOutcome::Transmitted: weight *= e * (1.0 - l); break;
      }
      if (outcome[k] == SourceOutcome::NotEmitted) continue;
      s = emit_photon(s, positions[k], AtomLevel::GP, from_gp, network.sources[k], temporal[k]);
      s = emit_photon(s, positions[k], AtomLevel::EP, from_ep, network.sources[k], temporal[k]);
    }
    if (weight <= 0.0) continue;
    MixedEnsemble branch(s);
    for (std::size_t k = 0; k < 2; ++k) {
      if (outcome[k] == SourceOutcome::Lost) branch = apply_loss(branch, network.sources[k], 0.0);
    }
    input.append(branch, weight);
  }

  OutcomeTable table = detect_all(propagate(input, network), network);

  // Drop the two measured atoms and move to the fused chain's frame.
  for (auto& entry : table.entries) {
    MixedEnsemble traced;
    for (const auto& b : entry.conditional.branches()) {
      MixedEnsemble parts = trace_out_atoms(b.state, positions);
      if (options.end_hadamards) parts = parts.map(hadamard_ends);
      traced.append(parts, b.weight);
    }
    entry.conditional = traced.normalized_branches();
    const auto& branches = entry.conditional.branches();
    if (!branches.empty()) {
      entry.post_state = std::max_element(branches.begin(), branches.end(), [](const auto& a,
                                                                                 const auto& b) {
                           return a.weight < b.weight;
                         })->state;
    }
  }

  std::vector<int> kept_ids;
  for (std::size_t i = 0; i < joint.atom_count(); ++i) {
    if (i != positions[0] && i != positions[1]) kept_ids.push_back(joint.atom_ids()[i]);
  }
  if (options.target) {
    result.target = *options.target;
  } else {
    if (fused_length % 2 != 0) {
      throw PreconditionError("no default target for an odd fused length; supply one");
    }
    auto paired = build_paired_cluster(fused_length).state;
    if (options.end_hadamards) paired = hadamard_ends(paired);
    result.target = SparseHybridState::qubits(kept_ids, qubit_amplitudes(paired));
  }
  apply_corrections(table, result.target, options.correction);
  result.table = std::move(table);
  return result;
}

}  // namespace clusterqed
