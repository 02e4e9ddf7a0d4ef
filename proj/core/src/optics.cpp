#include "clusterqed/optics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace clusterqed {

namespace {

using Photons = std::vector<std::pair<PhotonMode, int>>;

double snap(double x) { return std::abs(x) < 1e-16 ? 0.0 : x; }

void require_basis(const SparseHybridState& s, int rail, PolarizationBasis basis,
                   std::string_view element) {
  if (s.rail_basis(rail) != basis) {
    throw PreconditionError(fmt::format(
        "{} on rail {} needs {} polarization labels", element, rail,
        basis == PolarizationBasis::Circular ? "circular" : "linear"));
  }
}

// Splits the photons of one term on `rail` into every (kept, lost) pair.
struct LossSplit {
  Photons kept;
  Photons lost;
  double amplitude = 1.0;
};

std::vector<LossSplit> split_losses(const Photons& photons, int rail, double eta) {
  std::vector<LossSplit> splits{{}};
  for (const auto& [mode, count] : photons) {
    if (mode.rail != rail) {
      for (auto& s : splits) s.kept.emplace_back(mode, count);
      continue;
    }
    std::vector<LossSplit> next;
    for (const auto& s : splits) {
      for (int kept = 0; kept <= count; ++kept) {
        const int lost = count - kept;
        const double binom = std::tgamma(count + 1.0) / (std::tgamma(kept + 1.0) * std::tgamma(lost + 1.0));
        const double amp =
            std::sqrt(binom * std::pow(eta, kept) * std::pow(1.0 - eta, lost));
        if (amp == 0.0) continue;
        LossSplit grown = s;
        if (kept > 0) grown.kept.emplace_back(mode, kept);
        if (lost > 0) grown.lost.emplace_back(mode, lost);
        grown.amplitude *= amp;
        next.push_back(std::move(grown));
      }
    }
    splits = std::move(next);
  }
  return splits;
}

Reading combine(Reading a, Reading b) {
  if (a == Reading::None) return b;
  if (b == Reading::None || a == b) return a;
  if (a == Reading::Click || b == Reading::Click) return Reading::Click;
  return Reading::Both;
}

char reading_char(Reading r, MeasurementBasis basis) {
  switch (r) {
    case Reading::None: return '-';
    case Reading::Plus: return basis == MeasurementBasis::DA ? 'D' : 'H';
    case Reading::Minus: return basis == MeasurementBasis::DA ? 'A' : 'V';
    case Reading::Both: return '*';
    case Reading::Click: return 'C';
  }
  return '?';
}

// In-place Walsh-Hadamard transform: out[z] = sum_j (-1)^{|j & z|} in[j].
void walsh_hadamard(std::vector<Complex>& v) {
  for (std::size_t len = 1; len < v.size(); len <<= 1U) {
    for (std::size_t i = 0; i < v.size(); i += len << 1U) {
      for (std::size_t j = i; j < i + len; ++j) {
        const Complex a = v[j];
        const Complex b = v[j + len];
        v[j] = a + b;
        v[j + len] = a - b;
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Network metadata

std::vector<const Detector*> NetworkConfig::detectors() const {
  std::vector<const Detector*> out;
  for (const auto& e : elements) {
    if (const auto* d = std::get_if<Detector>(&e)) out.push_back(d);
  }
  return out;
}

std::vector<std::string> NetworkConfig::detector_ids() const {
  std::vector<std::string> ids;
  for (const auto* d : detectors()) ids.push_back(d->id);
  return ids;
}

void NetworkConfig::validate() const {
  std::set<int> live;
  std::set<int> seen;
  for (int rail : sources) {
    if (!live.insert(rail).second) {
      throw ConstructionError(fmt::format("sources: rail {} listed twice", rail));
    }
    seen.insert(rail);
  }
  std::set<std::string> ids;
  auto fail = [](std::size_t i, const std::string& msg) {
    throw ConstructionError(fmt::format("element {}: {}", i, msg));
  };
  auto need_live = [&](std::size_t i, int rail) {
    if (!live.contains(rail)) fail(i, fmt::format("rail {} is not available", rail));
  };
  auto unit = [&](std::size_t i, double x, std::string_view name) {
    if (!(x >= 0.0 && x <= 1.0)) fail(i, fmt::format("{} must lie in [0, 1]", name));
  };

  for (std::size_t i = 0; i < elements.size(); ++i) {
    std::visit(
        [&](const auto& el) {
          using T = std::decay_t<decltype(el)>;
          if constexpr (std::is_same_v<T, Qwp>) {
            need_live(i, el.rail);
          } else if constexpr (std::is_same_v<T, Hwp>) {
            need_live(i, el.rail);
            if (!(el.angle_deg >= 0.0 && el.angle_deg < 180.0)) {
              fail(i, "HWP angle must lie in [0, 180)");
            }
          } else if constexpr (std::is_same_v<T, Pbs>) {
            need_live(i, el.in_a);
            need_live(i, el.in_b);
            if (el.in_a == el.in_b) fail(i, "PBS inputs must differ");
            if (el.out_1 == el.out_2) fail(i, "PBS outputs must differ");
            for (int out : {el.out_1, el.out_2}) {
              if (seen.contains(out)) fail(i, fmt::format("PBS output rail {} is not fresh", out));
            }
            live.erase(el.in_a);
            live.erase(el.in_b);
            for (int out : {el.out_1, el.out_2}) {
              live.insert(out);
              seen.insert(out);
            }
          } else if constexpr (std::is_same_v<T, Loss>) {
            need_live(i, el.rail);
            unit(i, el.transmission, "transmission");
          } else {
            need_live(i, el.rail);
            unit(i, el.efficiency, "efficiency");
            unit(i, el.dark_probability, "dark probability");
            if (el.id.empty()) fail(i, "detector id is empty");
            if (!ids.insert(el.id).second) fail(i, fmt::format("duplicate detector id {}", el.id));
            live.erase(el.rail);
          }
        },
        elements[i]);
  }
}

bool OutcomePattern::accepted() const {
  return std::all_of(readings.begin(), readings.end(), [](Reading r) {
    return r == Reading::Plus || r == Reading::Minus || r == Reading::Click;
  });
}

std::string pattern_string(const OutcomePattern& pattern,
                           const std::vector<MeasurementBasis>& bases) {
  std::string out;
  for (std::size_t i = 0; i < pattern.readings.size(); ++i) {
    out += reading_char(pattern.readings[i], i < bases.size() ? bases[i] : MeasurementBasis::HV);
  }
  return out;
}

std::string correction_string(const std::vector<PauliOp>& ops) {
  if (ops.empty()) return "I";
  std::string out;
  for (const auto& op : ops) {
    if (!out.empty()) out += ' ';
    out += fmt::format("{}{}", op.kind, op.atom + 1);
  }
  return out;
}

double OutcomeTable::total_probability() const {
  double p = 0.0;
  for (const auto& e : entries) p += e.probability;
  return p;
}

double OutcomeTable::accepted_probability() const {
  double p = 0.0;
  for (const auto& e : entries) {
    if (e.pattern.accepted()) p += e.probability;
  }
  return p;
}

std::size_t OutcomeTable::accepted_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const auto& e) { return e.pattern.accepted(); }));
}

const OutcomeTableEntry* OutcomeTable::find(const OutcomePattern& pattern) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), pattern,
                             [](const auto& e, const OutcomePattern& p) { return e.pattern < p; });
  return (it != entries.end() && it->pattern == pattern) ? &*it : nullptr;
}

double OutcomeTable::mean_accepted_fidelity() const {
  double num = 0.0;
  double den = 0.0;
  for (const auto& e : entries) {
    if (!e.pattern.accepted()) continue;
    num += e.probability * e.corrected_fidelity;
    den += e.probability;
  }
  return den > 0.0 ? num / den : 0.0;
}

// ---------------------------------------------------------------------------
// Elements

SparseHybridState apply_qwp(const SparseHybridState& state, int rail) {
  require_basis(state, rail, PolarizationBasis::Circular, "QWP");
  ModeMap map = [rail](const PhotonMode& m) -> std::optional<ModeImage> {
    if (m.rail != rail) return std::nullopt;
    const Polarization out = m.pol == Polarization::L ? Polarization::H : Polarization::V;
    return ModeImage{{{rail, out, m.temporal}, 1.0}};
  };
  RailChange change;
  change.rebased = {{rail, PolarizationBasis::Linear}};
  return apply_mode_map(state, map, change);
}

SparseHybridState apply_hwp(const SparseHybridState& state, int rail, double angle_deg) {
  require_basis(state, rail, PolarizationBasis::Linear, "HWP");
  const double two_theta = 2.0 * angle_deg * std::numbers::pi / 180.0;
  const double c = snap(std::cos(two_theta));
  const double s = snap(std::sin(two_theta));
  ModeMap map = [=](const PhotonMode& m) -> std::optional<ModeImage> {
    if (m.rail != rail) return std::nullopt;
    const double to_h = m.pol == Polarization::H ? c : s;
    const double to_v = m.pol == Polarization::H ? s : -c;
    ModeImage image;
    if (to_h != 0.0) image.push_back({{rail, Polarization::H, m.temporal}, to_h});
    if (to_v != 0.0) image.push_back({{rail, Polarization::V, m.temporal}, to_v});
    return image;
  };
  return apply_mode_map(state, map);
}

SparseHybridState apply_pbs(const SparseHybridState& state, int in_a, int in_b, int out_1,
                            int out_2) {
  require_basis(state, in_a, PolarizationBasis::Linear, "PBS");
  require_basis(state, in_b, PolarizationBasis::Linear, "PBS");
  if (in_a == in_b || out_1 == out_2) throw PreconditionError("PBS rails must be distinct");
  ModeMap map = [=](const PhotonMode& m) -> std::optional<ModeImage> {
    if (m.rail != in_a && m.rail != in_b) return std::nullopt;
    const bool h = m.pol == Polarization::H;
    const int out = (m.rail == in_a) == h ? out_1 : out_2;
    return ModeImage{{{out, m.pol, m.temporal}, 1.0}};
  };
  RailChange change;
  change.consumed = {in_a, in_b};
  change.produced = {{out_1, PolarizationBasis::Linear}, {out_2, PolarizationBasis::Linear}};
  return apply_mode_map(state, map, change);
}

MixedEnsemble apply_loss(const SparseHybridState& state, int rail, double transmission) {
  if (!(transmission >= 0.0 && transmission <= 1.0)) {
    throw PreconditionError("transmission must lie in [0, 1]");
  }
  state.rail_basis(rail);
  if (transmission == 1.0) return MixedEnsemble(state);
  std::map<Photons, SparseHybridState> branches;
  for (const auto& [label, amp] : state.terms()) {
    for (auto& split : split_losses(label.photons, rail, transmission)) {
      auto [it, inserted] = branches.try_emplace(split.lost, state.empty_like());
      BasisLabel kept{label.atoms, std::move(split.kept)};
      it->second.add(kept, amp * split.amplitude);
    }
  }
  MixedEnsemble out;
  for (auto& [lost, s] : branches) {
    s.prune();
    out.add(1.0, std::move(s));
  }
  return out;
}

MixedEnsemble apply_loss(const MixedEnsemble& ensemble, int rail, double transmission) {
  MixedEnsemble out;
  for (const auto& b : ensemble.branches()) {
    out.append(apply_loss(b.state, rail, transmission), b.weight);
  }
  return out;
}

MixedEnsemble propagate(const MixedEnsemble& input, const NetworkConfig& network) {
  MixedEnsemble current = input;
  for (const auto& element : network.elements) {
    std::visit(
        [&](const auto& el) {
          using T = std::decay_t<decltype(el)>;
          if constexpr (std::is_same_v<T, Qwp>) {
            current = current.map([&](const auto& s) { return apply_qwp(s, el.rail); });
          } else if constexpr (std::is_same_v<T, Hwp>) {
            current = current.map([&](const auto& s) { return apply_hwp(s, el.rail, el.angle_deg); });
          } else if constexpr (std::is_same_v<T, Pbs>) {
            current = current.map(
                [&](const auto& s) { return apply_pbs(s, el.in_a, el.in_b, el.out_1, el.out_2); });
          } else if constexpr (std::is_same_v<T, Loss>) {
            current = apply_loss(current, el.rail, el.transmission);
          }
        },
        element);
  }
  return current;
}

// ---------------------------------------------------------------------------
// Detection

OutcomeTable detect_all(const MixedEnsemble& ensemble, const NetworkConfig& network) {
  const auto detectors = network.detectors();
  const std::size_t n = detectors.size();
  const bool resolving = network.mode == DetectionMode::PolarizationResolving;

  MixedEnsemble thinned = ensemble;
  for (const auto* d : detectors) {
    if (d->efficiency < 1.0) thinned = apply_loss(thinned, d->rail, d->efficiency);
  }

  // Dark-count combinations: (probability, readings added).
  std::vector<std::pair<double, std::vector<Reading>>> darks{{1.0, std::vector<Reading>(n)}};
  for (std::size_t i = 0; i < n; ++i) {
    const double p = detectors[i]->dark_probability;
    if (p <= 0.0) continue;
    std::vector<std::pair<Reading, double>> options;
    options.emplace_back(Reading::None, 1.0 - p);
    if (resolving) {
      options.emplace_back(Reading::Plus, p / 2.0);
      options.emplace_back(Reading::Minus, p / 2.0);
    } else {
      options.emplace_back(Reading::Click, p);
    }
    std::vector<std::pair<double, std::vector<Reading>>> next;
    for (const auto& [prob, readings] : darks) {
      for (const auto& [reading, q] : options) {
        if (q <= 0.0) continue;
        auto grown = readings;
        grown[i] = reading;
        next.emplace_back(prob * q, std::move(grown));
      }
    }
    darks = std::move(next);
  }

  std::map<OutcomePattern, MixedEnsemble> grouped;
  for (const auto& branch : thinned.branches()) {
    const auto& state = branch.state;
    std::map<Photons, SparseHybridState> configs;
    for (const auto& [label, amp] : state.terms()) {
      for (const auto& [mode, count] : label.photons) {
        const bool detected = std::any_of(detectors.begin(), detectors.end(),
                                          [&](const Detector* d) { return d->rail == mode.rail; });
        if (!detected && std::abs(amp) > 0.0) {
          throw PreconditionError(
              fmt::format("photon on rail {} reaches no detector", mode.rail));
        }
      }
      auto [it, inserted] = configs.try_emplace(label.photons, state.atom_ids());
      if (inserted) it->second.set_prune_epsilon(state.prune_epsilon());
      it->second.add(BasisLabel{label.atoms, {}}, amp);
    }

    for (auto& [photons, atoms] : configs) {
      atoms.prune();
      if (atoms.empty()) continue;
      std::vector<Reading> ideal(n, Reading::None);
      for (std::size_t i = 0; i < n; ++i) {
        int plus = 0;
        int minus = 0;
        for (const auto& [mode, count] : photons) {
          if (mode.rail != detectors[i]->rail) continue;
          const bool first = mode.pol == Polarization::H || mode.pol == Polarization::L;
          (first ? plus : minus) += count;
        }
        if (!resolving) {
          ideal[i] = (plus + minus) > 0 ? Reading::Click : Reading::None;
        } else if (plus > 0 && minus > 0) {
          ideal[i] = Reading::Both;
        } else if (plus > 0) {
          ideal[i] = Reading::Plus;
        } else if (minus > 0) {
          ideal[i] = Reading::Minus;
        }
      }
      for (const auto& [prob, extra] : darks) {
        OutcomePattern pattern{ideal};
        for (std::size_t i = 0; i < n; ++i) {
          pattern.readings[i] = combine(pattern.readings[i], extra[i]);
        }
        grouped[pattern].add(branch.weight * prob, atoms);
      }
    }
  }

  OutcomeTable table;
  for (const auto* d : detectors) table.bases.push_back(d->basis);
  for (auto& [pattern, ens] : grouped) {
    OutcomeTableEntry entry;
    entry.pattern = pattern;
    entry.conditional = ens.normalized_branches();
    entry.probability = entry.conditional.total_probability();
    if (entry.conditional.empty()) continue;
    const auto heaviest = std::max_element(
        entry.conditional.branches().begin(), entry.conditional.branches().end(),
        [](const auto& a, const auto& b) { return a.weight < b.weight; });
    entry.post_state = heaviest->state;
    table.entries.push_back(std::move(entry));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Corrections

SparseHybridState apply_paulis(const SparseHybridState& state, const std::vector<PauliOp>& ops) {
  SparseHybridState out = state;
  for (const auto& op : ops) {
    out = apply_local_unitary(out, op.atom, op.kind == 'X' ? gates::pauli_x() : gates::pauli_z());
  }
  return out;
}

void apply_corrections(OutcomeTable& table, const SparseHybridState& target,
                       const CorrectionOptions& options) {
  const std::size_t n = target.atom_count();
  if (n > 16) throw PreconditionError("correction search supports at most 16 atoms");
  const std::vector<Complex> ref = qubit_amplitudes(target);
  const std::size_t dim = ref.size();

  std::vector<std::size_t> x_order(dim);
  for (std::size_t i = 0; i < dim; ++i) x_order[i] = i;
  std::stable_sort(x_order.begin(), x_order.end(),
                   [](std::size_t a, std::size_t b) { return std::popcount(a) < std::popcount(b); });

  for (auto& entry : table.entries) {
    entry.correction.clear();
    entry.corrected_fidelity = 0.0;
    entry.correctable = false;
    if (!entry.pattern.accepted() || entry.probability <= 0.0) continue;

    std::vector<std::pair<double, std::vector<Complex>>> branches;
    double den = 0.0;
    for (const auto& b : entry.conditional.branches()) {
      if (b.state.atom_count() != n) {
        throw PreconditionError("target and post-selected state have different atom counts");
      }
      branches.emplace_back(b.weight, qubit_amplitudes(b.state));
      den += b.weight * b.state.norm_squared();
    }

    double best = -1.0;
    std::size_t best_x = 0;
    std::size_t best_z = 0;
    // Z-only first, then fewer operators, then operators on earlier atoms.
    auto reversed_bits = [n](std::size_t v) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < n; ++b) r |= ((v >> b) & 1U) << (n - 1 - b);
      return r;
    };
    auto rank = [&](std::size_t x, std::size_t z) {
      return std::tuple{x != 0, std::popcount(x) + std::popcount(z), reversed_bits(z),
                        reversed_bits(x)};
    };
    std::vector<double> score(dim);
    std::vector<Complex> work(dim);
    for (std::size_t x : x_order) {
      std::fill(score.begin(), score.end(), 0.0);
      for (const auto& [w, s] : branches) {
        for (std::size_t j = 0; j < dim; ++j) work[j] = std::conj(ref[j ^ x]) * s[j];
        walsh_hadamard(work);
        for (std::size_t z = 0; z < dim; ++z) score[z] += w * std::norm(work[z]);
      }
      for (std::size_t z = 0; z < dim; ++z) {
        const double f = score[z] / den;
        const bool better = f > best + 1e-12 ||
                            (std::abs(f - best) <= 1e-12 && rank(x, z) < rank(best_x, best_z));
        if (better) {
          best = f;
          best_x = x;
          best_z = z;
        }
      }
    }

    for (std::size_t k = 0; k < n; ++k) {
      if ((best_z >> (n - 1 - k)) & 1U) entry.correction.push_back({k, 'Z'});
    }
    for (std::size_t k = 0; k < n; ++k) {
      if ((best_x >> (n - 1 - k)) & 1U) entry.correction.push_back({k, 'X'});
    }
    entry.corrected_fidelity = std::min(best, 1.0);
    entry.correctable = best >= options.threshold;
  }
}

std::map<OutcomePattern, std::vector<PauliOp>> correction_table(const OutcomeTable& table) {
  std::map<OutcomePattern, std::vector<PauliOp>> out;
  for (const auto& e : table.entries) {
    if (e.pattern.accepted()) out.emplace(e.pattern, e.correction);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canned networks

NetworkConfig default_four_atom_network() {
  NetworkConfig net;
  net.sources = {1, 2, 3, 4};
  for (int r = 1; r <= 4; ++r) net.elements.emplace_back(Qwp{r});
  net.elements.emplace_back(Pbs{1, 2, 11, 12});
  net.elements.emplace_back(Pbs{3, 4, 13, 14});
  net.elements.emplace_back(Hwp{11, 22.5});
  net.elements.emplace_back(Hwp{12, 22.5});
  net.elements.emplace_back(Hwp{14, 22.5});
  net.elements.emplace_back(Pbs{12, 13, 15, 16});
  net.elements.emplace_back(Hwp{15, 22.5});
  net.elements.emplace_back(Hwp{16, 22.5});
  net.elements.emplace_back(Detector{11, "D1"});
  net.elements.emplace_back(Detector{15, "D2"});
  net.elements.emplace_back(Detector{16, "D3"});
  net.elements.emplace_back(Detector{14, "D4"});
  return net;
}

NetworkConfig parity_check_network() {
  NetworkConfig net;
  net.sources = {1, 2};
  net.elements.emplace_back(Qwp{1});
  net.elements.emplace_back(Qwp{2});
  net.elements.emplace_back(Pbs{1, 2, 11, 12});
  net.elements.emplace_back(Hwp{11, 22.5});
  net.elements.emplace_back(Hwp{12, 22.5});
  net.elements.emplace_back(Detector{11, "D1"});
  net.elements.emplace_back(Detector{12, "D2"});
  return net;
}

NetworkConfig two_pair_network() {
  NetworkConfig net;
  net.sources = {1, 2, 3, 4};
  for (int r = 1; r <= 4; ++r) net.elements.emplace_back(Qwp{r});
  net.elements.emplace_back(Pbs{1, 2, 11, 12});
  net.elements.emplace_back(Pbs{3, 4, 13, 14});
  for (int r : {11, 12, 13, 14}) net.elements.emplace_back(Hwp{r, 22.5});
  net.elements.emplace_back(Detector{11, "D1"});
  net.elements.emplace_back(Detector{12, "D2"});
  net.elements.emplace_back(Detector{13, "D3"});
  net.elements.emplace_back(Detector{14, "D4"});
  return net;
}

NetworkConfig fusion_network() {
  NetworkConfig net;
  net.sources = {1, 2};
  net.elements.emplace_back(Qwp{1});
  net.elements.emplace_back(Qwp{2});
  net.elements.emplace_back(Pbs{1, 2, 3, 4});
  net.elements.emplace_back(Hwp{3, 22.5});
  net.elements.emplace_back(Hwp{4, 22.5});
  net.elements.emplace_back(Detector{3, "DI"});
  net.elements.emplace_back(Detector{4, "DII"});
  return net;
}

}  // namespace clusterqed
