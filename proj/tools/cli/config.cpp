#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace clusterqed::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw ConfigError(fmt::format("{}: {}", path, msg));
}

void allow_keys(const json& obj, const std::string& path, const std::set<std::string>& keys) {
  if (!obj.is_object()) bad(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!keys.contains(key)) bad(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(path, "expected a finite number");
  return x;
}

double probability(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (x < 0.0 || x > 1.0) bad(path, "must lie in [0, 1]");
  return x;
}

std::uint64_t count(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) bad(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "expected true or false");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "expected a string");
  return v.get<std::string>();
}

/// {"value": x, "unit": "2pi*MHz" | "rad/us"} -> rad/us.
double rate(const json& v, const std::string& path) {
  if (!v.is_object()) bad(path, "rates need an explicit unit: {\"value\": x, \"unit\": \"2pi*MHz\"}");
  allow_keys(v, path, {"value", "unit"});
  if (!v.contains("value") || !v.contains("unit")) bad(path, "rates need both 'value' and 'unit'");
  const double x = number(v["value"], path + ".value");
  if (x < 0.0) bad(path + ".value", "rates must be non-negative");
  const std::string unit = text(v["unit"], path + ".unit");
  if (unit == "2pi*MHz") return two_pi_mhz(x);
  if (unit == "rad/us") return x;
  bad(path + ".unit", "unit must be '2pi*MHz' or 'rad/us'");
}

PhysicalParams cavity(const json& v, const std::string& path) {
  allow_keys(v, path, {"h", "kappa", "gamma", "window_us"});
  for (const char* key : {"h", "kappa", "gamma"}) {
    if (!v.contains(key)) bad(path + "." + key, "missing");
  }
  PhysicalParams p;
  p.h = rate(v["h"], path + ".h");
  p.kappa = rate(v["kappa"], path + ".kappa");
  p.gamma = rate(v["gamma"], path + ".gamma");
  p.window = v.contains("window_us") ? number(v["window_us"], path + ".window_us")
                                     : PhysicalParams::default_window(p.kappa);
  if (!(p.window > 0.0) || !std::isfinite(p.window)) {
    bad(path + ".window_us", "window must be finite and positive (give window_us when kappa is 0)");
  }
  return p;
}

std::vector<double> probability_list(const json& v, const std::string& path) {
  if (v.is_array()) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(probability(v[i], fmt::format("{}[{}]", path, i)));
    }
    if (out.empty()) bad(path, "list must not be empty");
    return out;
  }
  return {probability(v, path)};
}

NetworkConfig builtin_network(const std::string& name, const std::string& path) {
  if (name == "default") return default_four_atom_network();
  if (name == "parity") return parity_check_network();
  if (name == "two_pair") return two_pair_network();
  if (name == "fusion") return fusion_network();
  bad(path, "unknown network; use default, parity, two_pair, fusion or an inline document");
}

SweepParameter sweep_parameter(const std::string& name, const std::string& path) {
  if (name == "h") return SweepParameter::H;
  if (name == "kappa") return SweepParameter::Kappa;
  if (name == "gamma") return SweepParameter::Gamma;
  if (name == "window_us") return SweepParameter::Window;
  if (name == "photon_loss") return SweepParameter::PhotonLoss;
  if (name == "detector_efficiency") return SweepParameter::DetectorEfficiency;
  if (name == "dark_rate_hz") return SweepParameter::DarkRate;
  bad(path, "unknown sweep parameter");
}

bool is_rate(SweepParameter p) {
  return p == SweepParameter::H || p == SweepParameter::Kappa || p == SweepParameter::Gamma;
}

double axis_value(SweepParameter p, const json& v, const std::string& path) {
  if (is_rate(p)) return rate(v, path);
  if (p == SweepParameter::PhotonLoss || p == SweepParameter::DetectorEfficiency) {
    return probability(v, path);
  }
  const double x = number(v, path);
  if (x < 0.0) bad(path, "must be non-negative");
  if (p == SweepParameter::Window && x == 0.0) bad(path, "window must be positive");
  return x;
}

SweepAxis sweep_axis(const json& v, const std::string& path) {
  allow_keys(v, path, {"parameter", "values", "from", "to", "points"});
  if (!v.contains("parameter")) bad(path + ".parameter", "missing");
  SweepAxis axis;
  axis.name = text(v["parameter"], path + ".parameter");
  axis.parameter = sweep_parameter(axis.name, path + ".parameter");
  if (v.contains("values")) {
    if (v.contains("from") || v.contains("to") || v.contains("points")) {
      bad(path, "give either 'values' or 'from'/'to'/'points'");
    }
    const json& values = v["values"];
    if (!values.is_array() || values.empty()) bad(path + ".values", "expected a non-empty list");
    for (std::size_t i = 0; i < values.size(); ++i) {
      axis.values.push_back(axis_value(axis.parameter, values[i], fmt::format("{}.values[{}]", path, i)));
    }
    return axis;
  }
  for (const char* key : {"from", "to", "points"}) {
    if (!v.contains(key)) bad(path + "." + key, "missing");
  }
  const double from = axis_value(axis.parameter, v["from"], path + ".from");
  const double to = axis_value(axis.parameter, v["to"], path + ".to");
  const std::uint64_t points = count(v["points"], path + ".points");
  if (points == 0) bad(path + ".points", "grid must not be empty");
  if (points > kMaxSweepPoints) {
    throw ResourceRefusal(fmt::format("{}.points: {} exceeds the {} point limit", path, points,
                                      kMaxSweepPoints));
  }
  for (std::uint64_t i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    axis.values.push_back(from + (to - from) * f);
  }
  return axis;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ImperfectionModel RunConfig::model() const {
  ImperfectionModel m;
  m.cavities = cavities;
  m.photon_loss = photon_loss;
  m.detector_efficiency = detector_efficiency;
  m.dark_rate_hz = dark_rate_hz;
  m.force_emission = force_emission;
  return m;
}

std::uint64_t RunConfig::sweep_points() const {
  std::uint64_t n = 1;
  for (const auto& axis : sweep) {
    const std::uint64_t k = axis.values.size();
    if (k != 0 && n > std::numeric_limits<std::uint64_t>::max() / k) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    n *= k;
  }
  return n;
}

RunConfig default_config() {
  RunConfig c;
  c.cavities = {PhysicalParams::from_two_pi_mhz(27.0, 2.4, 6.0)};
  c.force_emission = true;
  c.network = default_four_atom_network();
  c.hash = fnv1a_hex("{}");
  return c;
}

RunConfig parse_config(const std::string& text_in) {
  json doc;
  try {
    doc = json::parse(text_in);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text_in.size());
    const auto line = 1 + std::count(text_in.begin(), text_in.begin() + static_cast<long>(upto), '\n');
    throw ConfigError(fmt::format("line {}: syntax error: {}", line, e.what()));
  }
  allow_keys(doc, "", {"cavity", "cavities", "photon_loss", "detector_efficiency", "dark_rate_hz",
                       "force_emission", "network", "target", "seed", "trials", "sweep", "fuse",
                       "oracle"});
  RunConfig c = default_config();
  c.hash = fnv1a_hex(doc.dump());

  if (doc.contains("cavity") && doc.contains("cavities")) bad("cavities", "give either 'cavity' or 'cavities'");
  if (doc.contains("cavity")) c.cavities = {cavity(doc["cavity"], "cavity")};
  if (doc.contains("cavities")) {
    const json& list = doc["cavities"];
    if (!list.is_array() || list.empty()) bad("cavities", "expected a non-empty list");
    c.cavities.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      c.cavities.push_back(cavity(list[i], fmt::format("cavities[{}]", i)));
    }
  }
  if (doc.contains("photon_loss")) c.photon_loss = probability_list(doc["photon_loss"], "photon_loss");
  if (doc.contains("detector_efficiency")) {
    c.detector_efficiency = probability_list(doc["detector_efficiency"], "detector_efficiency");
  }
  if (doc.contains("dark_rate_hz")) {
    c.dark_rate_hz = number(doc["dark_rate_hz"], "dark_rate_hz");
    if (c.dark_rate_hz < 0.0) bad("dark_rate_hz", "must be non-negative");
  }
  c.force_emission = doc.contains("force_emission") && boolean(doc["force_emission"], "force_emission");

  if (doc.contains("network")) {
    const json& n = doc["network"];
    if (n.is_string()) {
      c.network_name = n.get<std::string>();
      c.network = builtin_network(c.network_name, "network");
    } else {
      c.network_name = "inline";
      try {
        c.network = network_from_json(n.dump());
      } catch (const ConstructionError& e) {
        bad("network", e.what());
      }
    }
  }
  if (doc.contains("target")) {
    const json& t = doc["target"];
    allow_keys(t, "target", {"family", "length"});
    TargetSpec spec;
    const std::string family = t.contains("family") ? text(t["family"], "target.family") : "paired";
    if (family == "paired") {
      spec.family = TargetSpec::Family::Paired;
    } else if (family == "briegel") {
      spec.family = TargetSpec::Family::Briegel;
    } else {
      bad("target.family", "must be 'paired' or 'briegel'");
    }
    if (!t.contains("length")) bad("target.length", "missing");
    spec.length = count(t["length"], "target.length");
    c.target = spec;
  }
  if (doc.contains("seed")) c.seed = count(doc["seed"], "seed");
  if (doc.contains("trials")) c.trials = count(doc["trials"], "trials");

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    allow_keys(s, "sweep", {"axes"});
    if (!s.contains("axes") || !s["axes"].is_array()) bad("sweep.axes", "expected a list");
    for (std::size_t i = 0; i < s["axes"].size(); ++i) {
      c.sweep.push_back(sweep_axis(s["axes"][i], fmt::format("sweep.axes[{}]", i)));
      if (c.sweep_points() > kMaxSweepPoints) {
        throw ResourceRefusal(fmt::format("sweep grid exceeds the {} point limit", kMaxSweepPoints));
      }
    }
  }
  if (doc.contains("fuse")) {
    const json& f = doc["fuse"];
    allow_keys(f, "fuse", {"first_length", "second_length", "target_length", "policy", "end_hadamards"});
    if (f.contains("first_length")) c.fuse.first_length = count(f["first_length"], "fuse.first_length");
    if (f.contains("second_length")) c.fuse.second_length = count(f["second_length"], "fuse.second_length");
    if (f.contains("target_length")) c.fuse.target_length = count(f["target_length"], "fuse.target_length");
    if (f.contains("policy")) {
      const std::string p = text(f["policy"], "fuse.policy");
      if (p == "trim") {
        c.fuse.policy = FailurePolicy::TrimEnd;
      } else if (p == "discard") {
        c.fuse.policy = FailurePolicy::DiscardChain;
      } else {
        bad("fuse.policy", "must be 'trim' or 'discard'");
      }
    }
    if (f.contains("end_hadamards")) c.fuse.end_hadamards = boolean(f["end_hadamards"], "fuse.end_hadamards");
  }
  if (doc.contains("oracle")) {
    const json& o = doc["oracle"];
    allow_keys(o, "oracle", {"parameter_sets", "tolerance", "ode_absolute", "ode_relative"});
    if (o.contains("parameter_sets")) c.oracle.parameter_sets = count(o["parameter_sets"], "oracle.parameter_sets");
    if (o.contains("tolerance")) c.oracle.tolerance = number(o["tolerance"], "oracle.tolerance");
    if (o.contains("ode_absolute")) c.oracle.ode_absolute = number(o["ode_absolute"], "oracle.ode_absolute");
    if (o.contains("ode_relative")) c.oracle.ode_relative = number(o["ode_relative"], "oracle.ode_relative");
    if (c.oracle.tolerance <= 0.0 || c.oracle.ode_absolute <= 0.0 || c.oracle.ode_relative <= 0.0) {
      bad("oracle", "tolerances must be positive");
    }
  }
  return c;
}

}  // namespace clusterqed::cli
