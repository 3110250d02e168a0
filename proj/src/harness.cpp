#include "foglb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "foglb/lifelong.hpp"

namespace foglb::harness {

using ordered_json = nlohmann::ordered_json;

topo::TopologySpec topology_for_seed(const Scenario& sc, std::uint64_t seed) {
  if (!sc.topology_file.empty()) {
    return topo::load_topology(sc.topology_file);
  }
  return topo::build_topology(sc.topology, seed);
}

int resolve_crl_host(const Scenario& sc, const topo::TopologySpec& topo) {
  if (sc.crl_host == "cloud") return topo.cloud_id();
  if (sc.crl_host != "auto") return std::stoi(sc.crl_host);
  // Default host: the fog node the network routes through the most.
  topo::Graph g;
  g.n = static_cast<int>(topo.nodes.size());
  for (const auto& l : topo.links) g.add_edge(l.u, l.v);
  g.normalize();
  auto scores = topo::betweenness(g);
  int best = -1;
  for (int f : topo.fog_ids()) {
    if (best < 0 || scores[f] > scores[best]) best = f;
  }
  return best;
}

namespace {

workload::GenerationSchedule training_schedule(const Scenario& sc,
                                               const RunPlan& plan) {
  workload::GenerationSchedule sch;
  sch.beta_time_scale = sc.beta_time_scale;
  sch.phases.push_back({0.0, plan.phase_beta.front()});
  for (std::size_t p = 1; p < plan.phase_beta.size(); ++p) {
    sch.phases.push_back(
        {plan.prefill_s + plan.phase_start[p], plan.phase_beta[p]});
  }
  return sch;
}

WorldConfig base_config(const Scenario& sc, const RunPlan& plan,
                        const topo::TopologySpec& topo, const ArmSpec& arm,
                        std::uint64_t seed) {
  WorldConfig cfg;
  cfg.topology = topo;
  cfg.policy = arm.kind;
  cfg.obs.mode = arm.obs_mode;
  cfg.obs.interval_s = sc.gossip_interval_s;
  cfg.obs.delivery = sc.obs_delivery == "link-delayed"
                         ? agents::ObsDelivery::LinkDelayed
                         : agents::ObsDelivery::Instant;
  cfg.ddql = plan.ddql;
  cfg.control_message_bytes = sc.control_message_bytes;
  cfg.control_plane_contention = sc.control_plane_contention;
  cfg.seed = seed;
  if (arm.kind == agents::PolicyKind::CRL) {
    cfg.crl_host = resolve_crl_host(sc, topo);
  }
  return cfg;
}

void train_in_world(World& world, const Scenario& sc, const RunPlan& plan) {
  world.run_prefill(plan.prefill_s);
  for (std::size_t p = 0; p < plan.phase_beta.size(); ++p) {
    World::PhaseRun pr;
    pr.duration_s = plan.phase_duration[p];
    pr.episode_s = plan.episode_s;
    pr.expected_decisions_per_agent =
        world.expected_decisions(plan.phase_duration[p], plan.phase_beta[p]);
    pr.eps_start = p == 0 ? plan.ddql.eps_start : sc.post_transfer_eps;
    if (p > 0) world.surge_transfer(plan.transfer_x);
    world.run_phase(pr);
  }
}

}  // namespace

metrics::EventLog run_single(const Scenario& sc, const RunPlan& plan,
                             const topo::TopologySpec& topo,
                             const ArmSpec& arm, std::uint64_t seed,
                             std::vector<std::vector<double>>* traces_out) {
  std::vector<std::string> snapshots;
  if (agents::is_learning_policy(arm.kind)) {
    WorldConfig cfg = base_config(sc, plan, topo, arm, seed);
    cfg.schedule = training_schedule(sc, plan);
    cfg.reward_traces = traces_out != nullptr;
    World train_world(cfg);
    train_in_world(train_world, sc, plan);
    snapshots = train_world.agent_snapshots();
    if (traces_out) *traces_out = train_world.reward_traces();
  }

  // Fresh high-rate evaluation episode with frozen greedy policies; arrival
  // streams are shared across arms for paired comparisons.
  WorldConfig cfg = base_config(sc, plan, topo, arm, seed);
  cfg.schedule.beta_time_scale = sc.beta_time_scale;
  cfg.schedule.phases = {{0.0, sc.eval_beta}};
  cfg.arrival_stream_tag = "arrivals-eval";
  World eval_world(cfg);
  if (!snapshots.empty()) eval_world.load_agent_snapshots(snapshots);
  eval_world.run_eval(plan.eval_s);
  return eval_world.collect_log(plan.eval_s);
}

std::vector<std::string> metric_names() {
  return {"avg_wait",
          "std_wait_across_nodes",
          "std_utilization_across_nodes",
          "avg_execution_delay",
          "avg_execution_delay_heavy",
          "avg_execution_delay_moderate",
          "avg_execution_delay_light",
          "generated_jobs",
          "completed_jobs",
          "censored_jobs",
          "control_msg_count",
          "observation_msg_count",
          "decision_steps_total"};
}

double metric_value(const metrics::RunSummary& s, const std::string& name) {
  if (name == "avg_wait") return s.avg_wait;
  if (name == "std_wait_across_nodes") return s.std_wait_across_nodes;
  if (name == "std_utilization_across_nodes") {
    return s.std_utilization_across_nodes;
  }
  if (name == "avg_execution_delay") return s.avg_execution_delay;
  if (name == "avg_execution_delay_heavy") {
    return s.avg_execution_delay_by_category[0];
  }
  if (name == "avg_execution_delay_moderate") {
    return s.avg_execution_delay_by_category[1];
  }
  if (name == "avg_execution_delay_light") {
    return s.avg_execution_delay_by_category[2];
  }
  if (name == "generated_jobs") return static_cast<double>(s.generated_jobs);
  if (name == "completed_jobs") return static_cast<double>(s.completed_jobs);
  if (name == "censored_jobs") return static_cast<double>(s.censored_jobs);
  if (name == "control_msg_count") {
    return static_cast<double>(s.control_msg_count);
  }
  if (name == "observation_msg_count") {
    return static_cast<double>(s.observation_msg_count);
  }
  if (name == "decision_steps_total") {
    std::uint64_t total = 0;
    for (const auto& a : s.decision_steps) total += a.decision_steps;
    return static_cast<double>(total);
  }
  throw std::runtime_error("unknown metric: " + name);
}

const metrics::RunSummary& ExperimentArtifacts::summary(
    const std::string& arm_name, std::uint64_t seed) const {
  for (const auto& r : runs) {
    if (r.arm.name() == arm_name && r.seed == seed) return r.summary;
  }
  throw std::runtime_error("no run for " + arm_name + " seed " +
                           std::to_string(seed));
}

std::vector<double> ExperimentArtifacts::metric_across_seeds(
    const std::string& arm_name, const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : runs) {
    if (r.arm.name() == arm_name) {
      out.push_back(metric_value(r.summary, metric));
    }
  }
  return out;
}

double ExperimentArtifacts::seed_mean(const std::string& arm_name,
                                      const std::string& metric) const {
  auto v = metric_across_seeds(arm_name, metric);
  if (v.empty()) throw std::runtime_error("no runs for arm " + arm_name);
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

std::string summaries_to_csv(const ExperimentArtifacts& art) {
  std::ostringstream out;
  out << "seed,arm,metric,value\n";
  for (const auto& r : art.runs) {
    for (const auto& m : metric_names()) {
      out << r.seed << ',' << r.arm.name() << ',' << m << ','
          << metrics::format_double(metric_value(r.summary, m)) << '\n';
    }
  }
  return out.str();
}

namespace {

ordered_json summary_to_json(const metrics::RunSummary& s) {
  ordered_json j;
  for (const auto& m : metric_names()) {
    j[m] = metric_value(s, m);
  }
  ordered_json per_agent = ordered_json::array();
  for (const auto& a : s.decision_steps) {
    ordered_json ja;
    ja["agent"] = a.agent_id;
    ja["decision_steps"] = a.decision_steps;
    per_agent.push_back(ja);
  }
  j["decision_steps_per_agent"] = per_agent;
  return j;
}

}  // namespace

std::string summaries_to_json(const Scenario& sc,
                              const ExperimentArtifacts& art) {
  ordered_json root;
  root["scenario"] = sc.name;
  root["seeds"] = art.seeds;
  ordered_json arms;
  for (const auto& arm : art.arms) {
    ordered_json ja;
    ordered_json per_seed;
    for (const auto& r : art.runs) {
      if (r.arm.name() != arm.name()) continue;
      per_seed[std::to_string(r.seed)] = summary_to_json(r.summary);
    }
    ja["per_seed"] = per_seed;
    if (art.seeds.size() >= 2) {
      ordered_json agg;
      for (const auto& m : metric_names()) {
        auto vals = art.metric_across_seeds(arm.name(), m);
        auto a = metrics::aggregate(vals);
        ordered_json jm;
        jm["mean"] = a.mean;
        jm["ci95_half_width"] = a.ci_half_width;
        agg[m] = jm;
      }
      ja["aggregate"] = agg;
    }
    arms[arm.name()] = ja;
  }
  root["arms"] = arms;
  return root.dump(2) + "\n";
}

ExperimentArtifacts run_experiment(const Scenario& sc,
                                   const std::string& out_dir,
                                   const std::vector<std::string>& arm_filter,
                                   const std::vector<std::uint64_t>& seed_filter) {
  Diagnostics d = validate(sc);
  if (!d.ok()) throw ConfigInvalidError(d.errors);

  ExperimentArtifacts art;
  for (const auto& a : expand_arms(sc)) {
    if (!arm_filter.empty() &&
        std::find(arm_filter.begin(), arm_filter.end(), a.name()) ==
            arm_filter.end()) {
      continue;
    }
    art.arms.push_back(a);
  }
  for (auto s : sc.seeds) {
    if (!seed_filter.empty() &&
        std::find(seed_filter.begin(), seed_filter.end(), s) ==
            seed_filter.end()) {
      continue;
    }
    art.seeds.push_back(s);
  }
  if (art.arms.empty()) throw ConfigInvalidError({"arm filter matched nothing"});
  if (art.seeds.empty()) throw ConfigInvalidError({"seed filter matched nothing"});

  RunPlan plan = make_plan(sc);

  // One topology per seed, shared by every arm (paired comparisons).
  std::vector<topo::TopologySpec> topos(art.seeds.size());
  for (std::size_t i = 0; i < art.seeds.size(); ++i) {
    topos[i] = topology_for_seed(sc, art.seeds[i]);
  }

  struct Cell {
    std::size_t arm_idx, seed_idx;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < art.arms.size(); ++a) {
    for (std::size_t s = 0; s < art.seeds.size(); ++s) {
      cells.push_back({a, s});
    }
  }
  std::vector<metrics::EventLog> logs(cells.size());
  std::vector<std::string> failures(cells.size());

  // Independent worlds; "runs in parallel" is per (arm, seed) cell.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(cells.size()); ++i) {
    const Cell& c = cells[i];
    try {
      logs[i] = run_single(sc, plan, topos[c.seed_idx], art.arms[c.arm_idx],
                           art.seeds[c.seed_idx]);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!failures[i].empty()) {
      throw std::runtime_error(
          "run failed (" + art.arms[cells[i].arm_idx].name() + ", seed " +
          std::to_string(art.seeds[cells[i].seed_idx]) + "): " + failures[i]);
    }
  }

  for (std::size_t i = 0; i < cells.size(); ++i) {
    RunResult r;
    r.arm = art.arms[cells[i].arm_idx];
    r.seed = art.seeds[cells[i].seed_idx];
    r.summary = metrics::summarize_run(logs[i]);
    art.runs.push_back(std::move(r));
  }

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
      std::ofstream csv(fs::path(out_dir) / "summary.csv");
      csv << summaries_to_csv(art);
    }
    {
      std::ofstream js(fs::path(out_dir) / "summary.json");
      js << summaries_to_json(sc, art);
    }
    if (sc.export_event_logs) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        auto name = art.arms[cells[i].arm_idx].name() + "_seed" +
                    std::to_string(art.seeds[cells[i].seed_idx]) + ".eventlog";
        metrics::save_event_log(logs[i], (fs::path(out_dir) / name).string());
      }
    }
  }
  return art;
}

namespace {

// First trailing-window index whose mean reaches the threshold; the trace
// length caps the answer when it never does.
std::size_t steps_to_threshold(const std::vector<double>& trace,
                               std::size_t window, double threshold) {
  if (trace.size() < window) return trace.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < window; ++i) sum += trace[i];
  if (sum / window >= threshold) return window;
  for (std::size_t i = window; i < trace.size(); ++i) {
    sum += trace[i] - trace[i - window];
    if (sum / window >= threshold) return i + 1;
  }
  return trace.size();
}

double mean_range(const std::vector<double>& v, std::size_t lo,
                  std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += v[i];
  return hi > lo ? s / static_cast<double>(hi - lo) : 0.0;
}

}  // namespace

TransferStudyOutcome run_transfer_study(const Scenario& sc) {
  Diagnostics d = validate(sc);
  if (!d.ok()) throw ConfigInvalidError(d.errors);
  RunPlan plan = make_plan(sc);

  double beta_low = plan.phase_beta.front();
  double beta_high = sc.eval_beta;
  double low_dur = plan.phase_duration.front();
  double surge_dur = plan.phase_duration.back();
  std::size_t window = std::max<std::size_t>(
      10, static_cast<std::size_t>(std::llround(1000 * sc.desk_scale)));

  TransferStudyOutcome out;
  out.per_seed.resize(sc.seeds.size());

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t si = 0; si < static_cast<std::int64_t>(sc.seeds.size());
       ++si) {
    std::uint64_t seed = sc.seeds[si];
    auto topo = topology_for_seed(sc, seed);
    ArmSpec arm{agents::PolicyKind::DRL, agents::ObsMode::Realtime};

    // Source task: train at the low rate, then surge in place.
    WorldConfig cfg = base_config(sc, plan, topo, arm, seed);
    cfg.reward_traces = true;
    cfg.schedule.beta_time_scale = sc.beta_time_scale;
    cfg.schedule.phases = {{0.0, beta_low},
                           {plan.prefill_s + low_dur, beta_high}};
    World world(cfg);
    world.run_prefill(plan.prefill_s);
    World::PhaseRun low;
    low.duration_s = low_dur;
    low.episode_s = plan.episode_s;
    low.expected_decisions_per_agent =
        world.expected_decisions(low_dur, beta_low);
    low.eps_start = plan.ddql.eps_start;
    world.run_phase(low);

    auto pre_traces = world.reward_traces();
    std::vector<std::size_t> surge_index(pre_traces.size());
    std::vector<double> baseline_mean(pre_traces.size());
    for (std::size_t a = 0; a < pre_traces.size(); ++a) {
      surge_index[a] = pre_traces[a].size();
      std::size_t n = pre_traces[a].size();
      baseline_mean[a] =
          mean_range(pre_traces[a], n > window ? n - window : 0, n);
    }

    world.surge_transfer(plan.transfer_x);
    World::PhaseRun high;
    high.duration_s = surge_dur;
    high.episode_s = plan.episode_s;
    high.expected_decisions_per_agent =
        world.expected_decisions(surge_dur, beta_high);
    high.eps_start = sc.post_transfer_eps;
    world.run_phase(high);
    auto transfer_traces = world.reward_traces();

    // Target task from scratch: fresh agents, own pre-fill, full
    // exploration, same surged rate.
    WorldConfig scfg = base_config(sc, plan, topo, arm, seed ^ 0x5c7a7c40ULL);
    scfg.reward_traces = true;
    scfg.schedule.beta_time_scale = sc.beta_time_scale;
    scfg.schedule.phases = {{0.0, beta_high}};
    double scratch_prefill_s = plan.prefill_s * beta_high / beta_low;
    World scratch(scfg);
    scratch.run_prefill(scratch_prefill_s);
    World::PhaseRun sp;
    sp.duration_s = surge_dur;
    sp.episode_s = plan.episode_s;
    sp.expected_decisions_per_agent =
        scratch.expected_decisions(surge_dur, beta_high);
    sp.eps_start = plan.ddql.eps_start;
    scratch.run_phase(sp);
    auto scratch_traces = scratch.reward_traces();

    double scratch_steps_sum = 0.0, transfer_steps_sum = 0.0;
    bool degraded = false;
    std::size_t n_agents = scratch_traces.size();
    for (std::size_t a = 0; a < n_agents; ++a) {
      const auto& st = scratch_traces[a];
      double r_start = mean_range(st, 0, std::min(window, st.size()));
      double r_conv =
          mean_range(st, st.size() > window ? st.size() - window : 0, st.size());
      double threshold = r_start + 0.75 * (r_conv - r_start);
      scratch_steps_sum +=
          static_cast<double>(steps_to_threshold(st, window, threshold));

      std::vector<double> post(transfer_traces[a].begin() + surge_index[a],
                               transfer_traces[a].end());
      transfer_steps_sum +=
          static_cast<double>(steps_to_threshold(post, window, threshold));

      lifelong::RewardMonitor mon(window);
      for (std::size_t i = 0; i < std::min(post.size(), window); ++i) {
        mon.record(post[i]);
      }
      degraded = degraded || mon.detect_degradation(baseline_mean[a]);
    }

    TransferStudyOutcome::PerSeed ps;
    ps.seed = seed;
    ps.scratch_steps = scratch_steps_sum / n_agents;
    ps.transfer_steps = transfer_steps_sum / n_agents;
    ps.ratio = ps.transfer_steps / std::max(1.0, ps.scratch_steps);
    ps.degradation_detected = degraded;
    out.per_seed[si] = ps;
  }

  std::vector<double> ratios;
  for (const auto& ps : out.per_seed) ratios.push_back(ps.ratio);
  std::sort(ratios.begin(), ratios.end());
  std::size_t n = ratios.size();
  out.median_ratio = n % 2 == 1 ? ratios[n / 2]
                                : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
  return out;
}

}  // namespace foglb::harness
