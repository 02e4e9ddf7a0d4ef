#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clusterqed/optics.hpp"
#include "clusterqed/protocol.hpp"

namespace clusterqed::cli {

/// Invalid configuration; maps to exit code 2. The message names the
/// offending field (and line, for syntax errors).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Work the caller refuses to start; maps to exit code 3.
class ResourceRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kMaxSweepPoints = 1'000'000;

enum class SweepParameter { H, Kappa, Gamma, Window, PhotonLoss, DetectorEfficiency, DarkRate };

struct SweepAxis {
  SweepParameter parameter = SweepParameter::Gamma;
  std::string name;
  /// Values in internal units (rad/us, us, probabilities, Hz).
  std::vector<double> values;
};

struct TargetSpec {
  enum class Family { Paired, Briegel } family = Family::Paired;
  std::size_t length = 4;
};

struct FuseSettings {
  std::size_t first_length = 4;
  std::size_t second_length = 4;
  std::optional<std::size_t> target_length;
  FailurePolicy policy = FailurePolicy::TrimEnd;
  bool end_hadamards = false;
};

struct OracleSettings {
  std::size_t parameter_sets = 100;
  double tolerance = 1e-9;
  double ode_absolute = 1e-13;
  double ode_relative = 1e-13;
};

struct RunConfig {
  std::vector<PhysicalParams> cavities;
  std::vector<double> photon_loss;
  std::vector<double> detector_efficiency;
  double dark_rate_hz = 0.0;
  bool force_emission = false;

  NetworkConfig network;
  std::string network_name = "default";
  std::optional<TargetSpec> target;

  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;

  std::vector<SweepAxis> sweep;
  FuseSettings fuse;
  OracleSettings oracle;

  /// Hex digest of the canonical (key-sorted, compact) configuration text.
  std::string hash;

  ImperfectionModel model() const;
  /// Grid size without materializing it; saturates at UINT64_MAX.
  std::uint64_t sweep_points() const;
};

/// Parses a configuration document. Every rate must be an object
/// {"value": x, "unit": "2pi*MHz" | "rad/us"}; unknown keys are rejected.
RunConfig parse_config(const std::string& text);
/// The configuration used when no file is given: rubidium cavity
/// parameters with certain emission and ideal optics.
RunConfig default_config();

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace clusterqed::cli
