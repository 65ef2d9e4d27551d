#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentlab/dynamics.hpp"
#include "momentlab/lattice.hpp"

namespace momentlab::cli {

enum class TaskKind { Spectrum, Moments, Scaling, Walks, Greens, Dynamics };

std::string kind_name(TaskKind kind);
TaskKind kind_from_name(const std::string& name);

/// Cost guards, checked while validating a config.
inline constexpr int kMaxDenseSites = 2000;
inline constexpr int kMaxMomentOrder = 20;

struct Geometry {
  std::vector<int> extents;
  std::vector<Coord> mask;
  char letter = 0;  // 0 for an explicit (possibly empty) mask

  std::string label() const;
};

struct PtSpec {
  double gamma = 0.0;
  double alpha = 0.0;
};

struct ModelSpec {
  int dimension = 1;
  std::vector<lattice::Hopping> hoppings;
  Complex onsite{};
  bool add_conjugates = false;  // add -delta with the same amplitude for unpaired hops
  std::optional<PtSpec> pt;     // replaces the hopping table with the PT model

  lattice::LatticeModel build() const;
};

struct MomentOptions {
  int m_max = 10;
  bool central = true;  // false: raw moments about 0 compared with the full generator
};

struct ScalingOptions {
  std::vector<int> sizes;
  std::vector<int> orders{2};
  bool central = true;
};

struct WalkOptions {
  int m_max = 6;
  bool exhaustive = false;  // cross-check rooted sums by DFS (N <= 8)
};

struct GreensOptions {
  double step = 0.1;
  double margin = 10.0;
  double noise = 0.0;
  double residual_threshold = 1e-3;
  bool write_stack = false;
};

struct DynamicsOptions {
  dynamics::PulseRun run;
  bool critical = false;
  dynamics::CriticalSearch search;
  bool calibrate = false;
  double calibrate_target = 0.155;
  int export_every = 10;  // recorded slices between exported CSV rows
};

struct SweepAxes {
  std::vector<double> g;
  std::vector<int> sizes;
  std::vector<int> m_max;
  std::vector<double> gamma;
  std::vector<lattice::BoundarySpec> boundaries;
  std::vector<Geometry> geometries;

  bool empty() const {
    return g.empty() && sizes.empty() && m_max.empty() && gamma.empty() && boundaries.empty() &&
           geometries.empty();
  }
};

/// Named tolerances with their defaults; overrides must use one of these keys.
std::map<std::string, double> default_tolerances();

struct ExperimentConfig {
  TaskKind task = TaskKind::Spectrum;
  bool sweep = false;
  ModelSpec model;
  Geometry geometry;
  lattice::BoundarySpec boundary;
  MomentOptions moments;
  ScalingOptions scaling;
  WalkOptions walks;
  GreensOptions greens;
  DynamicsOptions dynamics;
  SweepAxes axes;
  std::string output = "momentlab-out";
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances = default_tolerances();
  nlohmann::json source;  // the validated input, for hashing
};

/// Validates the whole document before anything runs. Throws InvalidArgument
/// naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

void set_tolerance(ExperimentConfig& config, const std::string& key, double value);
/// "key=value" from the command line.
void apply_tolerance_override(ExperimentConfig& config, const std::string& assignment);

// Shared JSON helpers.
Complex parse_complex(const nlohmann::json& j, const std::string& where);
lattice::BoundarySpec parse_boundary(const nlohmann::json& j, int dimension, const std::string& where);
nlohmann::json boundary_json(const lattice::BoundarySpec& b);

}  // namespace momentlab::cli
