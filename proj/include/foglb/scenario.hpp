#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foglb/agents.hpp"
#include "foglb/topology.hpp"
#include "foglb/workload.hpp"

namespace foglb::harness {

// One experiment arm: a policy kind plus the observation model it runs
// under.
struct ArmSpec {
  agents::PolicyKind kind = agents::PolicyKind::DRL;
  agents::ObsMode obs_mode = agents::ObsMode::Realtime;

  std::string name() const;
};

// Full experiment description. Defaults reproduce the reference setup:
// beta 200 -> 150 -> 100 with 30K training steps per phase in 10K-step
// episodes, a 100K-step high-rate evaluation episode, and 10 seeds.
struct Scenario {
  std::string name = "paper-default";

  topo::TopologyParams topology;
  std::string topology_file;  // when set, replayed instead of generated

  std::vector<workload::Phase> schedule = {
      {0.0, 200.0}, {30000.0, 150.0}, {60000.0, 100.0}};
  double train_horizon_steps = 90000.0;
  double episode_steps = 10000.0;
  double eval_steps = 100000.0;
  double eval_beta = 100.0;
  double beta_time_scale = 1.0;

  // Uniformly scales training steps, buffer capacity, pre-fill, target-sync
  // period, episode length, and the evaluation horizon.
  double desk_scale = 1.0;

  std::vector<std::string> arms = {"drl",     "crl", "random",
                                   "drr",     "nearest", "fastest"};
  std::vector<std::string> observation_modes = {"realtime"};
  double gossip_interval_s = 3.0;
  std::string obs_delivery = "instant";

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  agents::DdqlConfig ddql;
  double prefill_fraction = 0.10;
  double transfer_fraction = 0.10;  // recent experiences moved at a surge
  double post_transfer_eps = 0.1;

  std::string crl_host = "auto";  // "auto", "cloud", or a node id
  double control_message_bytes = 100.0;
  bool control_plane_contention = false;

  bool export_reward_traces = false;
  bool export_event_logs = false;
};

struct Diagnostics {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

Diagnostics validate(const Scenario& sc);

Scenario scenario_from_text(const std::string& text);
std::string scenario_to_text(const Scenario& sc);
Scenario load_scenario(const std::string& path);

// Arm strings expand against the scenario's observation modes: learning
// arms appear once per mode; Random/DRR/Nearest ignore observations;
// Fastest follows the first listed mode unless given an explicit
// "_realtime"/"_interval" suffix.
std::vector<ArmSpec> expand_arms(const Scenario& sc);

// Everything derived from the scenario after desk scaling.
struct RunPlan {
  std::vector<double> phase_start;  // offsets from training start, scaled
  std::vector<double> phase_duration;
  std::vector<double> phase_beta;
  double episode_s = 0.0;
  double eval_s = 0.0;
  double prefill_s = 0.0;
  std::size_t prefill_target = 0;
  std::size_t transfer_x = 0;
  agents::DdqlConfig ddql;  // capacity and sync period scaled
};

RunPlan make_plan(const Scenario& sc);

}  // namespace foglb::harness
