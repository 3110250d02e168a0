#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foglb/metrics.hpp"
#include "foglb/scenario.hpp"
#include "foglb/topology.hpp"
#include "foglb/world.hpp"

namespace foglb::harness {

struct RunResult {
  ArmSpec arm;
  std::uint64_t seed = 0;
  metrics::RunSummary summary;
};

struct ExperimentArtifacts {
  std::vector<ArmSpec> arms;
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> runs;  // arm-major, seed order as listed

  const metrics::RunSummary& summary(const std::string& arm_name,
                                     std::uint64_t seed) const;
  std::vector<double> metric_across_seeds(const std::string& arm_name,
                                          const std::string& metric) const;
  double seed_mean(const std::string& arm_name,
                   const std::string& metric) const;
};

// Builds the topology for one seed: imported when the scenario names a
// file, generated otherwise. Arms share it.
topo::TopologySpec topology_for_seed(const Scenario& sc, std::uint64_t seed);

int resolve_crl_host(const Scenario& sc, const topo::TopologySpec& topo);

// Trains (learning arms) and evaluates one (arm, seed) cell; returns the
// evaluation-episode log.
metrics::EventLog run_single(const Scenario& sc, const RunPlan& plan,
                             const topo::TopologySpec& topo,
                             const ArmSpec& arm, std::uint64_t seed,
                             std::vector<std::vector<double>>* traces_out =
                                 nullptr);

// Runs every (arm, seed) cell, writes summary.csv / summary.json (and
// optional traces / event logs) under out_dir when non-empty.
ExperimentArtifacts run_experiment(const Scenario& sc,
                                   const std::string& out_dir,
                                   const std::vector<std::string>& arm_filter = {},
                                   const std::vector<std::uint64_t>& seed_filter = {});

std::string summaries_to_csv(const ExperimentArtifacts& art);
std::string summaries_to_json(const Scenario& sc,
                              const ExperimentArtifacts& art);

// Metric names exported per run (CSV rows, JSON keys, aggregation).
std::vector<std::string> metric_names();
double metric_value(const metrics::RunSummary& s, const std::string& name);

// Lifelong transfer study: train distributed agents at the first scheduled
// rate, surge to the evaluation rate, and compare transferred agents
// against from-scratch agents on decision steps to a reward threshold (75%
// of the from-scratch improvement, trailing-window means).
struct TransferStudyOutcome {
  struct PerSeed {
    std::uint64_t seed = 0;
    double scratch_steps = 0.0;   // mean over agents
    double transfer_steps = 0.0;  // mean over agents
    double ratio = 0.0;
    bool degradation_detected = false;
  };
  std::vector<PerSeed> per_seed;
  double median_ratio = 0.0;
};

TransferStudyOutcome run_transfer_study(const Scenario& sc);

}  // namespace foglb::harness
