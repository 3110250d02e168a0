#include "foglb/world.hpp"

#include <algorithm>
#include <cmath>

namespace foglb {

using agents::DecisionMode;
using agents::FogObservation;
using agents::ObsDelivery;
using agents::ObsMode;
using agents::PolicyKind;
using sim::EventKind;

World::World(WorldConfig cfg) : cfg_(std::move(cfg)) {
  routing_ = topo::shortest_pr_routes(cfg_.topology);
  ap_ids_ = cfg_.topology.ap_ids();
  fog_ids_ = cfg_.topology.fog_ids();
  for (std::size_t i = 0; i < ap_ids_.size(); ++i) ap_index_[ap_ids_[i]] = i;
  for (std::size_t i = 0; i < fog_ids_.size(); ++i) fog_index_[fog_ids_[i]] = i;
  build_network();
  build_agents();
  start_generators();
  if (policy_observes() && cfg_.obs.mode == ObsMode::Interval) {
    schedule_gossip(0.0);
  }
}

void World::build_network() {
  for (const auto& n : cfg_.topology.nodes) {
    if (n.ipt <= 0.0) continue;
    auto [it, _] = stations_.emplace(
        n.node_id, sim::QueueStation(n.node_id, n.ipt, &events_));
    if (cfg_.stochastic_service) {
      it->second.set_stochastic_service(
          derive_rng(cfg_.seed, "service", n.node_id));
    }
    int fog = n.node_id;
    it->second.set_completion_handler(
        [this, fog](const sim::StationJob& sj, sim::SimTime) {
          on_service_complete(fog, sj);
        });
  }
  for (const auto& l : cfg_.topology.links) {
    channel_index_[{l.u, l.v}] = static_cast<int>(channels_.size());
    channel_index_[{l.v, l.u}] = static_cast<int>(channels_.size());
    channels_.emplace_back(l.u, l.v, l.bandwidth_mbps, l.prop_delay_s);
  }
}

sim::LinkChannel& World::channel(int u, int v) {
  return channels_[channel_index_.at({u, v})];
}

bool World::policy_observes() const {
  return cfg_.policy == PolicyKind::DRL || cfg_.policy == PolicyKind::CRL ||
         cfg_.policy == PolicyKind::Fastest;
}

void World::build_agents() {
  if (cfg_.policy == PolicyKind::CRL) {
    if (cfg_.crl_host < 0) {
      throw TopologyError("centralized mode needs an agent host node");
    }
    Binding b;
    b.agent_id = 0;
    b.site_node = cfg_.crl_host;
    b.candidates = fog_ids_;  // global action space
    b.legal.resize(b.candidates.size());
    for (std::size_t i = 0; i < b.legal.size(); ++i) b.legal[i] = i;
    b.ddql = std::make_unique<agents::DdqlAgent>(
        0, static_cast<int>(b.candidates.size()),
        static_cast<int>(ap_ids_.size()), cfg_.ddql, cfg_.seed);
    b.ddql->enable_reward_trace(cfg_.reward_traces);
    b.snapshot.assign(b.candidates.size(), FogObservation{});
    bindings_.push_back(std::move(b));
    // Per-region action masks: the centralized agent must still respect the
    // requester's candidate list.
    for (const auto& r : cfg_.topology.regions) {
      std::vector<int> legal;
      for (int f : r.candidate_fog_ids) legal.push_back(fog_index_.at(f));
      region_legal_[r.region_id] = std::move(legal);
    }
    for (int ap : ap_ids_) binding_of_ap_[ap] = 0;
    return;
  }

  for (std::size_t i = 0; i < ap_ids_.size(); ++i) {
    int ap = ap_ids_[i];
    const topo::Region& region = cfg_.topology.region_of_ap(ap);
    Binding b;
    b.agent_id = static_cast<int>(i);
    b.site_node = ap;
    b.candidates = region.candidate_fog_ids;
    b.legal.resize(b.candidates.size());
    for (std::size_t k = 0; k < b.legal.size(); ++k) b.legal[k] = k;
    b.snapshot.assign(b.candidates.size(), FogObservation{});

    if (cfg_.policy == PolicyKind::DRL) {
      b.ddql = std::make_unique<agents::DdqlAgent>(
          b.agent_id, static_cast<int>(b.candidates.size()), 0, cfg_.ddql,
          cfg_.seed);
      b.ddql->enable_reward_trace(cfg_.reward_traces);
    } else {
      std::vector<double> path_delays, ipt;
      int nearest = 0;
      for (std::size_t k = 0; k < b.candidates.size(); ++k) {
        int f = b.candidates[k];
        path_delays.push_back(routing_.pr_dist[ap][f]);
        ipt.push_back(cfg_.topology.node(f).ipt);
        if (path_delays[k] < path_delays[nearest]) nearest = k;
      }
      b.baseline = agents::make_baseline(
          cfg_.policy, static_cast<int>(b.candidates.size()), nearest,
          std::move(path_delays), std::move(ipt),
          derive_rng(cfg_.seed, "baseline", ap));
    }
    binding_of_ap_[ap] = static_cast<int>(bindings_.size());
    bindings_.push_back(std::move(b));
  }
}

void World::start_generators() {
  for (int ap : ap_ids_) {
    for (int c = 0; c < workload::kNumCategories; ++c) {
      Generator g;
      g.ap = ap;
      g.cat_index = c;
      g.rng = derive_rng(cfg_.seed, cfg_.arrival_stream_tag, ap, c);
      generators_.push_back(std::move(g));
    }
  }
  for (std::size_t i = 0; i < generators_.size(); ++i) {
    auto& g = generators_[i];
    double dt = workload::sample_interarrival(
        cfg_.schedule.mean_interarrival_s(0.0), g.rng);
    events_.schedule(dt, EventKind::JobArrival,
                     [this, i]() { on_job_generated(static_cast<int>(i)); });
  }
}

void World::on_job_generated(int gen_index) {
  Generator& g = generators_[gen_index];
  sim::SimTime now = events_.now();

  workload::Job job;
  job.job_id = jobs_.size();
  job.category = static_cast<workload::CategoryKind>(g.cat_index);
  job.source_ap = g.ap;
  job.t_generated = now;
  jobs_.push_back(job);
  std::uint64_t job_id = job.job_id;

  if (cfg_.policy == PolicyKind::CRL) {
    // Request leg of the three-way exchange: category + AP id to the host.
    ++control_msgs_;
    send_along(routing_.path(g.ap, cfg_.crl_host), cfg_.control_message_bytes,
               /*control=*/true, [this, job_id]() { on_crl_request(job_id); });
  } else {
    decide_and_dispatch_local(job_id);
  }

  // Independent Poisson stream; the phase schedule sets the current rate.
  double dt = workload::sample_interarrival(
      cfg_.schedule.mean_interarrival_s(now), g.rng);
  events_.schedule(now + dt, EventKind::JobArrival, [this, gen_index]() {
    on_job_generated(gen_index);
  });
}

std::vector<FogObservation> World::observe_live(const Binding& b) const {
  std::vector<FogObservation> obs(b.candidates.size());
  for (std::size_t i = 0; i < b.candidates.size(); ++i) {
    const auto& st = stations_.at(b.candidates[i]);
    obs[i].queue_len = static_cast<std::int64_t>(st.queue_length());
    obs[i].backlog_instructions = st.backlog_instructions();
  }
  return obs;
}

std::span<const FogObservation> World::observe(Binding& b) {
  if (cfg_.obs.mode == ObsMode::Realtime) {
    // One fan-in of queue-info messages per decision.
    observation_msgs_ += b.candidates.size();
    b.snapshot = observe_live(b);
  }
  return b.snapshot;
}

void World::schedule_gossip(double at) {
  gossip_running_ = true;
  events_.schedule(at, EventKind::GossipBroadcast, [this]() {
    sim::SimTime now = events_.now();
    for (auto& b : bindings_) {
      auto values = observe_live(b);
      observation_msgs_ += b.candidates.size();
      if (cfg_.obs.delivery == ObsDelivery::Instant) {
        b.snapshot = std::move(values);
      } else {
        for (std::size_t i = 0; i < b.candidates.size(); ++i) {
          int f = b.candidates[i];
          double delay = 0.0;
          auto path = routing_.path(f, b.site_node);
          for (std::size_t h = 0; h + 1 < path.size(); ++h) {
            delay += channel(path[h], path[h + 1])
                         .delay_uncontended(cfg_.control_message_bytes);
          }
          Binding* bp = &b;
          FogObservation v = values[i];
          events_.schedule(now + delay, EventKind::ControlMessageDelivered,
                           [bp, i, v]() { bp->snapshot[i] = v; });
        }
      }
    }
    schedule_gossip(now + cfg_.obs.interval_s);
  });
}

void World::decide_and_dispatch_local(std::uint64_t job_id) {
  workload::Job& job = jobs_[job_id];
  Binding& b = bindings_[binding_of_ap_.at(job.source_ap)];
  const auto& cat = workload::category(job.category);

  int action;
  if (b.ddql) {
    auto obs = observe(b);
    auto state = b.ddql->build_state(cat.instructions, -1, obs);
    if (cfg_.decision_tap) cfg_.decision_tap(b.agent_id, state, obs);
    action = b.ddql->decide(state, obs, b.legal, mode_);
  } else {
    std::span<const FogObservation> obs = b.snapshot;
    if (cfg_.policy == PolicyKind::Fastest) {
      obs = observe(b);
    }
    action = b.baseline->select(cat.instructions, obs);
  }
  ++b.decisions;
  dispatch(job_id, b.candidates[action]);
}

void World::on_crl_request(std::uint64_t job_id) {
  workload::Job& job = jobs_[job_id];
  Binding& b = bindings_[0];
  const auto& cat = workload::category(job.category);
  const topo::Region& region = cfg_.topology.region_of_ap(job.source_ap);

  auto obs = observe(b);
  auto state =
      b.ddql->build_state(cat.instructions, ap_index_.at(job.source_ap), obs);
  if (cfg_.decision_tap) cfg_.decision_tap(b.agent_id, state, obs);
  int action =
      b.ddql->decide(state, obs, region_legal_.at(region.region_id), mode_);
  ++b.decisions;
  int fog = b.candidates[action];

  // Decision notification back to the AP; only then can the job leave.
  ++control_msgs_;
  int ap = job.source_ap;
  send_along(routing_.path(cfg_.crl_host, ap), cfg_.control_message_bytes,
             /*control=*/true,
             [this, job_id, fog]() { dispatch(job_id, fog); });
}

void World::dispatch(std::uint64_t job_id, int fog) {
  workload::Job& job = jobs_[job_id];
  job.assigned_fog = fog;
  job.t_dispatched = events_.now();
  const auto& cat = workload::category(job.category);
  send_along(routing_.path(job.source_ap, fog), cat.data_bytes,
             /*control=*/false,
             [this, job_id, fog]() { deliver_to_station(job_id, fog); });
}

void World::deliver_to_station(std::uint64_t job_id, int fog) {
  workload::Job& job = jobs_[job_id];
  job.t_enqueued = events_.now();
  const auto& cat = workload::category(job.category);
  sim::StationJob sj;
  sj.job_id = job_id;
  sj.instructions = cat.instructions;
  stations_.at(fog).enqueue(sj, events_.now());
}

void World::on_service_complete(int fog, const sim::StationJob& sj) {
  workload::Job& job = jobs_[sj.job_id];
  job.t_service_start = sj.service_start;
  job.t_service_end = events_.now();
  const auto& cat = workload::category(job.category);
  // Response returns along the reverse of the request path.
  auto path = routing_.path(job.source_ap, fog);
  std::reverse(path.begin(), path.end());
  std::uint64_t job_id = sj.job_id;
  send_along(std::move(path), cat.response_bytes, /*control=*/false,
             [this, job_id]() {
               jobs_[job_id].t_response_at_ap = events_.now();
             });
}

void World::send_along(std::vector<int> path, double bytes, bool control,
                       std::function<void()> on_arrival) {
  if (path.size() < 2) {
    on_arrival();
    return;
  }
  bool contended = !control || cfg_.control_plane_contention;
  sim::LinkChannel& link = channel(path[0], path[1]);
  sim::SimTime arrival = contended
                             ? link.send(bytes, events_.now())
                             : events_.now() + link.delay_uncontended(bytes);
  std::uint64_t epoch = epoch_;
  EventKind kind = control ? EventKind::ControlMessageDelivered
                           : EventKind::TransmissionComplete;
  events_.schedule(arrival, kind,
                   [this, path = std::move(path), bytes, control,
                    on_arrival = std::move(on_arrival), epoch]() mutable {
                     if (epoch != epoch_) return;  // episode was truncated
                     if (path.size() == 2) {
                       on_arrival();
                     } else {
                       path.erase(path.begin());
                       send_along(std::move(path), bytes, control,
                                  std::move(on_arrival));
                     }
                   });
}

void World::reset_environment() {
  ++epoch_;
  for (auto& [id, st] : stations_) st.reset();
  for (auto& ch : channels_) ch.reset();
  for (auto& b : bindings_) {
    if (b.ddql) b.ddql->forget_previous_action();
  }
}

void World::run_prefill(double duration_s) {
  mode_ = DecisionMode::Prefill;
  events_.run_until(events_.now() + duration_s);
  reset_environment();
}

void World::run_phase(const PhaseRun& p) {
  mode_ = DecisionMode::Train;
  for (auto& b : bindings_) {
    if (b.ddql) b.ddql->begin_phase(p.expected_decisions_per_agent, p.eps_start);
  }
  double start = events_.now();
  double end = start + p.duration_s;
  double ep_len = p.episode_s > 0.0 ? p.episode_s : p.duration_s;
  double t = start;
  while (t < end - 1e-9) {
    double ep_end = std::min(end, t + ep_len);
    events_.run_until(ep_end);
    t = ep_end;
    reset_environment();  // episodes truncate, they never terminate
  }
}

void World::surge_transfer(std::size_t x) {
  for (auto& b : bindings_) {
    if (b.ddql) lifelong::transfer_in_place(*b.ddql, x);
  }
}

void World::run_eval(double duration_s) {
  mode_ = DecisionMode::Eval;
  events_.run_until(events_.now() + duration_s);
}

metrics::EventLog World::collect_log(double horizon) const {
  metrics::EventLog log;
  log.horizon = horizon;
  log.control_msgs = control_msgs_;
  log.observation_msgs = observation_msgs_;
  for (int f : fog_ids_) {
    metrics::NodeRecord n;
    n.node_id = f;
    n.busy_time = stations_.at(f).busy_time(horizon);
    log.fog_nodes.push_back(n);
  }
  for (const auto& b : bindings_) {
    metrics::AgentRecord a;
    a.agent_id = b.agent_id;
    a.decision_steps = b.ddql ? b.ddql->decisions() : b.decisions;
    log.agents.push_back(a);
  }
  log.jobs.reserve(jobs_.size());
  for (const auto& j : jobs_) {
    metrics::JobRecord r;
    r.job_id = j.job_id;
    r.source_ap = j.source_ap;
    r.category = static_cast<int>(j.category);
    r.fog = j.assigned_fog;
    r.t_generated = j.t_generated;
    r.t_dispatched = j.t_dispatched;
    r.t_enqueued = j.t_enqueued;
    r.t_service_start = j.t_service_start;
    r.t_service_end = j.t_service_end;
    r.t_response_at_ap = j.t_response_at_ap;
    log.jobs.push_back(r);
  }
  return log;
}

std::vector<agents::DdqlAgent*> World::rl_agents() {
  std::vector<agents::DdqlAgent*> out;
  for (auto& b : bindings_) {
    if (b.ddql) out.push_back(b.ddql.get());
  }
  return out;
}

std::vector<std::string> World::agent_snapshots() const {
  std::vector<std::string> snaps;
  for (const auto& b : bindings_) {
    if (b.ddql) snaps.push_back(b.ddql->online().snapshot());
  }
  return snaps;
}

void World::load_agent_snapshots(const std::vector<std::string>& snaps) {
  std::size_t k = 0;
  for (auto& b : bindings_) {
    if (!b.ddql) continue;
    if (k >= snaps.size()) throw LearningError("snapshot count mismatch");
    rl::Mlp net = rl::Mlp::from_snapshot(snaps[k++]);
    if (!(net.shape() == b.ddql->online().shape())) {
      throw DimensionMismatchError("snapshot shape mismatch for agent " +
                                   std::to_string(b.agent_id));
    }
    b.ddql->online().params() = net.params();
    b.ddql->target_net().params() = net.params();
  }
  if (k != snaps.size()) throw LearningError("snapshot count mismatch");
}

std::vector<std::vector<double>> World::reward_traces() const {
  std::vector<std::vector<double>> out;
  for (const auto& b : bindings_) {
    if (b.ddql) out.push_back(b.ddql->reward_trace());
  }
  return out;
}

std::vector<metrics::AgentRecord> World::decision_counts() const {
  std::vector<metrics::AgentRecord> out;
  for (const auto& b : bindings_) {
    metrics::AgentRecord a;
    a.agent_id = b.agent_id;
    a.decision_steps = b.ddql ? b.ddql->decisions() : b.decisions;
    out.push_back(a);
  }
  return out;
}

std::uint64_t World::expected_decisions(double duration_s,
                                        double beta_step) const {
  double mean = beta_step * cfg_.schedule.beta_time_scale;
  double per_agent =
      workload::kNumCategories * duration_s / std::max(mean, 1e-9);
  if (cfg_.policy == PolicyKind::CRL) {
    per_agent *= static_cast<double>(ap_ids_.size());
  }
  return static_cast<std::uint64_t>(std::llround(std::max(1.0, per_agent)));
}

}  // namespace foglb
