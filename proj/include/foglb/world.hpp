#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foglb/agents.hpp"
#include "foglb/lifelong.hpp"
#include "foglb/metrics.hpp"
#include "foglb/sim.hpp"
#include "foglb/topology.hpp"
#include "foglb/workload.hpp"

namespace foglb {

struct WorldConfig {
  topo::TopologySpec topology;
  workload::GenerationSchedule schedule;
  agents::PolicyKind policy = agents::PolicyKind::DRL;
  agents::ObservationModel obs;
  agents::DdqlConfig ddql;
  double control_message_bytes = 100.0;
  bool control_plane_contention = false;
  int crl_host = -1;  // node id hosting the centralized agent
  std::uint64_t seed = 0;
  // Arrival streams are derived from (seed, tag, ap, category); training and
  // evaluation worlds use different tags, arms share them.
  std::string arrival_stream_tag = "arrivals";
  bool stochastic_service = false;
  bool reward_traces = false;
  // Test hook, fired at every agent decision before the action is taken.
  std::function<void(int agent_id, const std::vector<double>& state,
                     std::span<const agents::FogObservation> obs)>
      decision_tap;
};

// One simulation world: event engine, stations, links, generators, the
// decision-making layer, and the trace needed for metrics. Single-threaded;
// independent worlds may run in parallel.
class World {
 public:
  explicit World(WorldConfig cfg);

  struct PhaseRun {
    double duration_s = 0.0;
    double episode_s = 0.0;  // <= 0 runs the phase as one episode
    std::uint64_t expected_decisions_per_agent = 1;
    double eps_start = 1.0;
  };

  void run_prefill(double duration_s);
  void run_phase(const PhaseRun& p);
  void surge_transfer(std::size_t x);
  void run_eval(double duration_s);

  sim::SimTime now() const { return events_.now(); }
  const topo::TopologySpec& topology() const { return cfg_.topology; }
  const std::vector<workload::Job>& jobs() const { return jobs_; }
  std::uint64_t control_msgs() const { return control_msgs_; }
  std::uint64_t observation_msgs() const { return observation_msgs_; }

  metrics::EventLog collect_log(double horizon) const;

  std::vector<agents::DdqlAgent*> rl_agents();
  std::vector<std::string> agent_snapshots() const;
  void load_agent_snapshots(const std::vector<std::string>& snaps);
  std::vector<std::vector<double>> reward_traces() const;
  std::vector<metrics::AgentRecord> decision_counts() const;

  // Expected decisions per agent over `duration_s` at the schedule's beta,
  // used to parameterize the epsilon decay.
  std::uint64_t expected_decisions(double duration_s, double beta_step) const;

 private:
  struct Binding {
    int agent_id = 0;
    int site_node = -1;  // AP for distributed agents, host for CRL
    std::vector<int> candidates;  // fog node ids in candidate-list order
    std::vector<int> legal;       // all action indices, ascending
    std::unique_ptr<agents::DdqlAgent> ddql;
    std::unique_ptr<agents::BaselineSelector> baseline;
    std::vector<agents::FogObservation> snapshot;  // interval-mode board
    std::uint64_t decisions = 0;
  };

  void build_network();
  void build_agents();
  void start_generators();
  void schedule_gossip(double at);
  void on_job_generated(int gen_index);
  void decide_and_dispatch_local(std::uint64_t job_id);
  void on_crl_request(std::uint64_t job_id);
  void dispatch(std::uint64_t job_id, int fog);
  void deliver_to_station(std::uint64_t job_id, int fog);
  void on_service_complete(int fog, const sim::StationJob& sj);
  void send_along(std::vector<int> path, double bytes, bool control,
                  std::function<void()> on_arrival);
  std::vector<agents::FogObservation> observe_live(const Binding& b) const;
  std::span<const agents::FogObservation> observe(Binding& b);
  bool policy_observes() const;
  void reset_environment();
  sim::LinkChannel& channel(int u, int v);

  WorldConfig cfg_;
  sim::EventQueue events_;
  topo::Routing routing_;
  std::map<int, sim::QueueStation> stations_;  // fog + cloud
  std::vector<sim::LinkChannel> channels_;
  std::map<std::pair<int, int>, int> channel_index_;

  std::vector<int> ap_ids_;             // ascending
  std::map<int, int> ap_index_;         // node id -> index in ap_ids_
  std::vector<int> fog_ids_;            // ascending
  std::map<int, int> fog_index_;
  std::map<int, std::vector<int>> region_legal_;  // region -> CRL mask

  struct Generator {
    int ap;
    int cat_index;
    Rng rng;
  };
  std::vector<Generator> generators_;

  std::vector<Binding> bindings_;       // per AP (or single CRL binding)
  std::map<int, int> binding_of_ap_;    // ap node id -> binding index

  std::vector<workload::Job> jobs_;
  agents::DecisionMode mode_ = agents::DecisionMode::Prefill;
  std::uint64_t epoch_ = 0;
  std::uint64_t control_msgs_ = 0;
  std::uint64_t observation_msgs_ = 0;
  bool gossip_running_ = false;
};

}  // namespace foglb
