#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "clusterqed/optics.hpp"

namespace clusterqed {

namespace {

using ordered = nlohmann::ordered_json;
using json = nlohmann::json;

[[noreturn]] void fail(std::size_t i, const std::string& msg) {
  throw ConstructionError(fmt::format("element {}: {}", i, msg));
}

void check_keys(std::size_t i, const json& obj, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) fail(i, fmt::format("unknown key '{}'", key));
  }
}

template <class T>
T field(std::size_t i, const json& obj, const char* key) {
  if (!obj.contains(key)) fail(i, fmt::format("missing '{}'", key));
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(i, fmt::format("'{}' has the wrong type", key));
  }
}

template <class T>
T optional_field(std::size_t i, const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? field<T>(i, obj, key) : fallback;
}

std::pair<int, int> rail_pair(std::size_t i, const json& obj, const char* key) {
  const auto v = field<std::vector<int>>(i, obj, key);
  if (v.size() != 2) fail(i, fmt::format("'{}' must list two rails", key));
  return {v[0], v[1]};
}

}  // namespace

std::string network_to_json(const NetworkConfig& network) {
  ordered doc;
  doc["sources"] = network.sources;
  doc["detection"] = network.mode == DetectionMode::ClickOnly ? "click" : "resolving";
  ordered elements = ordered::array();
  for (const auto& element : network.elements) {
    ordered e;
    std::visit(
        [&](const auto& el) {
          using T = std::decay_t<decltype(el)>;
          if constexpr (std::is_same_v<T, Qwp>) {
            e["type"] = "qwp";
            e["rail"] = el.rail;
          } else if constexpr (std::is_same_v<T, Hwp>) {
            e["type"] = "hwp";
            e["rail"] = el.rail;
            e["angle_deg"] = el.angle_deg;
          } else if constexpr (std::is_same_v<T, Pbs>) {
            e["type"] = "pbs";
            e["in"] = {el.in_a, el.in_b};
            e["out"] = {el.out_1, el.out_2};
          } else if constexpr (std::is_same_v<T, Loss>) {
            e["type"] = "loss";
            e["rail"] = el.rail;
            e["transmission"] = el.transmission;
          } else {
            e["type"] = "detector";
            e["rail"] = el.rail;
            e["id"] = el.id;
            e["efficiency"] = el.efficiency;
            e["dark_probability"] = el.dark_probability;
            e["basis"] = el.basis == MeasurementBasis::DA ? "DA" : "HV";
          }
        },
        element);
    elements.push_back(std::move(e));
  }
  doc["elements"] = std::move(elements);
  return doc.dump(2) + "\n";
}

NetworkConfig network_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConstructionError(fmt::format("network document: {}", e.what()));
  }
  if (!doc.is_object()) throw ConstructionError("network document must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "sources" && key != "elements" && key != "detection") {
      throw ConstructionError(fmt::format("network document: unknown key '{}'", key));
    }
  }
  NetworkConfig net;
  try {
    net.sources = doc.at("sources").get<std::vector<int>>();
  } catch (const json::exception&) {
    throw ConstructionError("network document: 'sources' must be a list of rail ids");
  }
  const std::string mode = doc.value("detection", std::string("resolving"));
  if (mode == "resolving") {
    net.mode = DetectionMode::PolarizationResolving;
  } else if (mode == "click") {
    net.mode = DetectionMode::ClickOnly;
  } else {
    throw ConstructionError("network document: 'detection' must be 'resolving' or 'click'");
  }
  if (!doc.contains("elements") || !doc["elements"].is_array()) {
    throw ConstructionError("network document: 'elements' must be a list");
  }
  const json& elements = doc["elements"];
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const json& e = elements[i];
    if (!e.is_object()) fail(i, "must be an object");
    const auto type = field<std::string>(i, e, "type");
    if (type == "qwp") {
      check_keys(i, e, {"type", "rail"});
      net.elements.emplace_back(Qwp{field<int>(i, e, "rail")});
    } else if (type == "hwp") {
      check_keys(i, e, {"type", "rail", "angle_deg"});
      net.elements.emplace_back(
          Hwp{field<int>(i, e, "rail"), optional_field<double>(i, e, "angle_deg", 22.5)});
    } else if (type == "pbs") {
      check_keys(i, e, {"type", "in", "out"});
      const auto [a, b] = rail_pair(i, e, "in");
      const auto [o1, o2] = rail_pair(i, e, "out");
      net.elements.emplace_back(Pbs{a, b, o1, o2});
    } else if (type == "loss") {
      check_keys(i, e, {"type", "rail", "transmission"});
      net.elements.emplace_back(Loss{field<int>(i, e, "rail"), field<double>(i, e, "transmission")});
    } else if (type == "detector") {
      check_keys(i, e, {"type", "rail", "id", "efficiency", "dark_probability", "basis"});
      Detector d;
      d.rail = field<int>(i, e, "rail");
      d.id = field<std::string>(i, e, "id");
      d.efficiency = optional_field<double>(i, e, "efficiency", 1.0);
      d.dark_probability = optional_field<double>(i, e, "dark_probability", 0.0);
      const auto basis = optional_field<std::string>(i, e, "basis", "DA");
      if (basis != "DA" && basis != "HV") fail(i, "'basis' must be 'DA' or 'HV'");
      d.basis = basis == "DA" ? MeasurementBasis::DA : MeasurementBasis::HV;
      net.elements.emplace_back(std::move(d));
    } else {
      fail(i, fmt::format("unknown element type '{}'", type));
    }
  }
  net.validate();
  return net;
}

}  // namespace clusterqed
