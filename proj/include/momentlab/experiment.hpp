#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentlab/config.hpp"

namespace momentlab::cli {

/// One pure unit of work produced by expanding the sweep axes.
struct TaskPlan {
  int index = 0;
  std::string id;  // also the output subdirectory
  TaskKind kind = TaskKind::Spectrum;
  bool critical = false;  // the once-per-sweep critical-gamma search
  ModelSpec model;
  Geometry geometry;
  lattice::BoundarySpec boundary;
  int m_max = 10;
  std::uint64_t seed = 0;
  nlohmann::json labels = nlohmann::json::object();  // swept values for this point
};

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string content;
};

struct TaskResult {
  std::string id;
  nlohmann::json summary;
  std::vector<OutputFile> files;
  bool checks_passed = true;
  // Kept for sweep-level reports.
  std::vector<Complex> spectrum;
  std::vector<Complex> moments;
  Complex reference{};
};

/// Expands the sweep and applies the cost guards. Nothing is computed yet.
std::vector<TaskPlan> plan_tasks(const ExperimentConfig& config);

TaskResult run_task(const TaskPlan& task, const ExperimentConfig& config);

struct RunReport {
  std::filesystem::path output;
  int tasks = 0;
  bool checks_passed = true;
  std::vector<std::string> files;
};

/// Runs every task on a pool of `workers` threads, then writes all files from
/// the calling thread. Results do not depend on the worker count.
RunReport run_experiment(const ExperimentConfig& config, int workers);

/// Same payloads without touching the disk (used by the reproducibility check).
std::vector<OutputFile> render_experiment(const ExperimentConfig& config, int workers,
                                          bool* checks_passed = nullptr);

}  // namespace momentlab::cli
