#include "foglb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "foglb/errors.hpp"

namespace foglb::harness {

using ordered_json = nlohmann::ordered_json;

std::string ArmSpec::name() const {
  std::string base = agents::policy_kind_name(kind);
  if (agents::is_learning_policy(kind)) {
    base += obs_mode == agents::ObsMode::Realtime ? "_realtime" : "_interval";
  }
  return base;
}

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

std::vector<ArmSpec> expand_arms(const Scenario& sc) {
  std::vector<agents::ObsMode> modes;
  for (const auto& m : sc.observation_modes) {
    if (m == "realtime") {
      modes.push_back(agents::ObsMode::Realtime);
    } else if (m == "interval") {
      modes.push_back(agents::ObsMode::Interval);
    } else {
      throw ConfigInvalidError({"unknown observation mode: " + m});
    }
  }
  if (modes.empty()) modes.push_back(agents::ObsMode::Realtime);

  std::vector<ArmSpec> out;
  auto push_unique = [&](ArmSpec a) {
    for (const auto& e : out) {
      if (e.kind == a.kind && e.obs_mode == a.obs_mode) return;
    }
    out.push_back(a);
  };

  for (const auto& raw : sc.arms) {
    std::string s = raw;
    std::optional<agents::ObsMode> forced;
    if (has_suffix(s, "_realtime")) {
      forced = agents::ObsMode::Realtime;
      s = s.substr(0, s.size() - 9);
    } else if (has_suffix(s, "_interval")) {
      forced = agents::ObsMode::Interval;
      s = s.substr(0, s.size() - 9);
    }
    agents::PolicyKind kind = agents::policy_kind_from_name(s);
    if (forced) {
      push_unique({kind, *forced});
    } else if (agents::is_learning_policy(kind)) {
      for (auto m : modes) push_unique({kind, m});
    } else {
      // Observation-mode-free baselines; Fastest consumes observations and
      // follows the first listed mode.
      push_unique({kind, modes.front()});
    }
  }
  return out;
}

Diagnostics validate(const Scenario& sc) {
  Diagnostics d;
  auto err = [&](const std::string& m) { d.errors.push_back(m); };
  auto warn = [&](const std::string& m) { d.warnings.push_back(m); };

  if (sc.topology_file.empty()) {
    if (sc.topology.n_graph_nodes < 5) {
      err("topology.n_graph_nodes must be >= 5");
    }
    if (sc.topology.n_aps < 1 ||
        sc.topology.n_aps >= sc.topology.n_graph_nodes) {
      err("topology.n_aps must leave at least one fog node");
    }
    if (sc.topology.attachment_degree < 1 ||
        sc.topology.attachment_degree > 2) {
      warn("attachment_degree outside 1-2 departs from the AS-like shape");
    }
  }

  if (sc.schedule.empty()) {
    err("schedule needs at least one {start_step, beta} phase");
  } else {
    if (sc.schedule.front().start_step != 0.0) {
      err("schedule must start at step 0");
    }
    double prev = -1.0;
    for (const auto& p : sc.schedule) {
      if (p.beta <= 0.0) err("schedule beta must be positive");
      if (p.start_step <= prev) {
        err("schedule start_steps must be strictly increasing");
      }
      prev = p.start_step;
    }
    if (sc.train_horizon_steps <= prev) {
      err("train_horizon_steps must exceed the last phase start");
    }
  }
  if (sc.eval_beta <= 0.0) err("eval_beta must be positive");
  if (sc.beta_time_scale <= 0.0) err("beta_time_scale must be positive");
  if (sc.episode_steps <= 0.0) err("episode_steps must be positive");
  if (sc.eval_steps <= 0.0) err("eval_steps must be positive");
  if (sc.desk_scale <= 0.0) err("desk_scale must be positive");
  if (sc.desk_scale != 1.0) {
    warn("desk_scale " + std::to_string(sc.desk_scale) +
         " deviates from the reference defaults");
  }

  if (sc.gossip_interval_s <= 0.0) err("gossip interval must be positive");
  if (sc.obs_delivery != "instant" && sc.obs_delivery != "link-delayed") {
    err("obs_delivery must be \"instant\" or \"link-delayed\"");
  }
  if (sc.seeds.empty()) err("at least one seed is required");
  if (sc.arms.empty()) err("at least one arm is required");
  for (const auto& a : sc.arms) {
    try {
      std::string s = a;
      if (has_suffix(s, "_realtime")) s = s.substr(0, s.size() - 9);
      if (has_suffix(s, "_interval")) s = s.substr(0, s.size() - 9);
      agents::policy_kind_from_name(s);
    } catch (const std::exception&) {
      err("unknown arm: " + a);
    }
  }
  for (const auto& m : sc.observation_modes) {
    if (m != "realtime" && m != "interval") {
      err("unknown observation mode: " + m);
    }
  }

  if (sc.ddql.buffer_capacity < 2) err("ddql.buffer_capacity must be >= 2");
  if (sc.ddql.batch_size < 1) err("ddql.batch_size must be >= 1");
  if (sc.ddql.train_period < 1) err("ddql.train_period must be >= 1");
  if (sc.ddql.target_sync_period < 1) {
    err("ddql.target_sync_period must be >= 1");
  }
  if (sc.ddql.gamma < 0.0 || sc.ddql.gamma >= 1.0) {
    err("ddql.gamma must lie in [0, 1)");
  }
  if (sc.prefill_fraction < 0.0 || sc.prefill_fraction > 1.0) {
    err("prefill_fraction must lie in [0, 1]");
  }
  if (sc.transfer_fraction < 0.0 || sc.transfer_fraction > 1.0) {
    err("transfer_fraction must lie in [0, 1]");
  }

  if (sc.crl_host != "auto" && sc.crl_host != "cloud") {
    try {
      (void)std::stoi(sc.crl_host);
    } catch (const std::exception&) {
      err("crl_host must be \"auto\", \"cloud\", or a node id");
    }
  }
  if (sc.control_message_bytes < 0.0) {
    err("control_message_bytes must be non-negative");
  }

  // Region coverage can only be checked against a generated instance when
  // regions are explicit.
  if (!sc.topology.region_defs.empty() && sc.topology_file.empty()) {
    int n_nodes = sc.topology.n_graph_nodes + 1;
    std::vector<int> covered;
    for (const auto& r : sc.topology.region_defs) {
      if (r.fog_ids.empty()) err("a region has an empty fog candidate set");
      for (int ap : r.ap_ids) {
        if (std::find(covered.begin(), covered.end(), ap) != covered.end()) {
          err("AP " + std::to_string(ap) + " appears in two regions");
        }
        covered.push_back(ap);
        if (ap < 0 || ap >= n_nodes) {
          err("region AP id " + std::to_string(ap) + " out of range");
        }
      }
    }
  }
  return d;
}

RunPlan make_plan(const Scenario& sc) {
  RunPlan p;
  double k = sc.desk_scale;
  for (std::size_t i = 0; i < sc.schedule.size(); ++i) {
    double start = sc.schedule[i].start_step * k;
    double end = (i + 1 < sc.schedule.size() ? sc.schedule[i + 1].start_step
                                             : sc.train_horizon_steps) *
                 k;
    p.phase_start.push_back(start);
    p.phase_duration.push_back(end - start);
    p.phase_beta.push_back(sc.schedule[i].beta);
  }
  p.episode_s = sc.episode_steps * k;
  p.eval_s = sc.eval_steps * k;

  p.ddql = sc.ddql;
  p.ddql.buffer_capacity = std::max<std::size_t>(
      16, static_cast<std::size_t>(std::llround(sc.ddql.buffer_capacity * k)));
  p.ddql.target_sync_period = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(sc.ddql.target_sync_period * k)));
  p.ddql.train_period = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(sc.ddql.train_period * k)));

  p.prefill_target = static_cast<std::size_t>(
      std::llround(sc.prefill_fraction * p.ddql.buffer_capacity));
  p.transfer_x = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(sc.transfer_fraction * p.ddql.buffer_capacity)));

  // Pre-fill runs at the first phase's rate until the expected per-agent
  // interaction count reaches the target; fixed per scenario so phase clocks
  // align across arms.
  double beta0 = sc.schedule.empty() ? 200.0 : sc.schedule.front().beta;
  double mean_s = beta0 * sc.beta_time_scale;
  p.prefill_s = static_cast<double>(p.prefill_target) * mean_s /
                workload::kNumCategories;
  return p;
}

namespace {

ordered_json ddql_to_json(const agents::DdqlConfig& c) {
  ordered_json j;
  j["hidden"] = c.hidden;
  j["gamma"] = c.gamma;
  j["learning_rate"] = c.adam.lr;
  j["buffer_capacity"] = c.buffer_capacity;
  j["batch_size"] = c.batch_size;
  j["train_period"] = c.train_period;
  j["target_sync_period"] = c.target_sync_period;
  j["eps_start"] = c.eps_start;
  j["eps_end"] = c.eps_end;
  j["eps_decay_fraction"] = c.eps_decay_fraction;
  j["queue_norm_cap"] = c.queue_norm_cap;
  j["instr_norm"] = c.instr_norm;
  return j;
}

void ddql_from_json(const ordered_json& j, agents::DdqlConfig& c) {
  if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<int>>();
  if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
  if (j.contains("learning_rate")) c.adam.lr = j["learning_rate"].get<double>();
  if (j.contains("buffer_capacity")) {
    c.buffer_capacity = j["buffer_capacity"].get<std::size_t>();
  }
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("train_period")) {
    c.train_period = j["train_period"].get<std::uint64_t>();
  }
  if (j.contains("target_sync_period")) {
    c.target_sync_period = j["target_sync_period"].get<std::uint64_t>();
  }
  if (j.contains("eps_start")) c.eps_start = j["eps_start"].get<double>();
  if (j.contains("eps_end")) c.eps_end = j["eps_end"].get<double>();
  if (j.contains("eps_decay_fraction")) {
    c.eps_decay_fraction = j["eps_decay_fraction"].get<double>();
  }
  if (j.contains("queue_norm_cap")) {
    c.queue_norm_cap = j["queue_norm_cap"].get<double>();
  }
  if (j.contains("instr_norm")) c.instr_norm = j["instr_norm"].get<double>();
}

}  // namespace

std::string scenario_to_text(const Scenario& sc) {
  ordered_json j;
  j["name"] = sc.name;
  ordered_json jt;
  jt["n_graph_nodes"] = sc.topology.n_graph_nodes;
  jt["attachment_degree"] = sc.topology.attachment_degree;
  jt["n_aps"] = sc.topology.n_aps;
  jt["cloud_ipt"] = sc.topology.cloud_ipt;
  jt["regions"] = ordered_json::array();
  for (const auto& r : sc.topology.region_defs) {
    ordered_json jr;
    jr["aps"] = r.ap_ids;
    jr["fogs"] = r.fog_ids;
    jt["regions"].push_back(jr);
  }
  if (!sc.topology_file.empty()) jt["file"] = sc.topology_file;
  j["topology"] = jt;

  j["schedule"] = ordered_json::array();
  for (const auto& ph : sc.schedule) {
    ordered_json jp;
    jp["start_step"] = ph.start_step;
    jp["beta"] = ph.beta;
    j["schedule"].push_back(jp);
  }
  j["train_horizon_steps"] = sc.train_horizon_steps;
  j["episode_steps"] = sc.episode_steps;
  j["eval_steps"] = sc.eval_steps;
  j["eval_beta"] = sc.eval_beta;
  j["beta_time_scale"] = sc.beta_time_scale;
  j["desk_scale"] = sc.desk_scale;
  j["arms"] = sc.arms;
  j["observation_modes"] = sc.observation_modes;
  j["gossip_interval_s"] = sc.gossip_interval_s;
  j["obs_delivery"] = sc.obs_delivery;
  j["seeds"] = sc.seeds;
  j["ddql"] = ddql_to_json(sc.ddql);
  j["prefill_fraction"] = sc.prefill_fraction;
  j["transfer_fraction"] = sc.transfer_fraction;
  j["post_transfer_eps"] = sc.post_transfer_eps;
  j["crl_host"] = sc.crl_host;
  j["control_message_bytes"] = sc.control_message_bytes;
  j["control_plane_contention"] = sc.control_plane_contention;
  j["export_reward_traces"] = sc.export_reward_traces;
  j["export_event_logs"] = sc.export_event_logs;
  return j.dump(2) + "\n";
}

Scenario scenario_from_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigInvalidError({std::string("config is not valid JSON: ") +
                              e.what()});
  }
  Scenario sc;
  if (j.contains("name")) sc.name = j["name"].get<std::string>();
  if (j.contains("topology")) {
    const auto& jt = j["topology"];
    if (jt.contains("n_graph_nodes")) {
      sc.topology.n_graph_nodes = jt["n_graph_nodes"].get<int>();
    }
    if (jt.contains("attachment_degree")) {
      sc.topology.attachment_degree = jt["attachment_degree"].get<int>();
    }
    if (jt.contains("n_aps")) sc.topology.n_aps = jt["n_aps"].get<int>();
    if (jt.contains("cloud_ipt")) {
      sc.topology.cloud_ipt = jt["cloud_ipt"].get<double>();
    }
    if (jt.contains("regions")) {
      for (const auto& jr : jt["regions"]) {
        topo::RegionDef r;
        r.ap_ids = jr.at("aps").get<std::vector<int>>();
        r.fog_ids = jr.at("fogs").get<std::vector<int>>();
        sc.topology.region_defs.push_back(std::move(r));
      }
    }
    if (jt.contains("file")) sc.topology_file = jt["file"].get<std::string>();
  }
  if (j.contains("schedule")) {
    sc.schedule.clear();
    for (const auto& jp : j["schedule"]) {
      workload::Phase p;
      p.start_step = jp.at("start_step").get<double>();
      p.beta = jp.at("beta").get<double>();
      sc.schedule.push_back(p);
    }
  }
  if (j.contains("train_horizon_steps")) {
    sc.train_horizon_steps = j["train_horizon_steps"].get<double>();
  }
  if (j.contains("episode_steps")) {
    sc.episode_steps = j["episode_steps"].get<double>();
  }
  if (j.contains("eval_steps")) sc.eval_steps = j["eval_steps"].get<double>();
  if (j.contains("eval_beta")) sc.eval_beta = j["eval_beta"].get<double>();
  if (j.contains("beta_time_scale")) {
    sc.beta_time_scale = j["beta_time_scale"].get<double>();
  }
  if (j.contains("desk_scale")) sc.desk_scale = j["desk_scale"].get<double>();
  if (j.contains("arms")) sc.arms = j["arms"].get<std::vector<std::string>>();
  if (j.contains("observation_modes")) {
    sc.observation_modes =
        j["observation_modes"].get<std::vector<std::string>>();
  }
  if (j.contains("gossip_interval_s")) {
    sc.gossip_interval_s = j["gossip_interval_s"].get<double>();
  }
  if (j.contains("obs_delivery")) {
    sc.obs_delivery = j["obs_delivery"].get<std::string>();
  }
  if (j.contains("seeds")) {
    sc.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (j.contains("ddql")) ddql_from_json(j["ddql"], sc.ddql);
  if (j.contains("prefill_fraction")) {
    sc.prefill_fraction = j["prefill_fraction"].get<double>();
  }
  if (j.contains("transfer_fraction")) {
    sc.transfer_fraction = j["transfer_fraction"].get<double>();
  }
  if (j.contains("post_transfer_eps")) {
    sc.post_transfer_eps = j["post_transfer_eps"].get<double>();
  }
  if (j.contains("crl_host")) sc.crl_host = j["crl_host"].get<std::string>();
  if (j.contains("control_message_bytes")) {
    sc.control_message_bytes = j["control_message_bytes"].get<double>();
  }
  if (j.contains("control_plane_contention")) {
    sc.control_plane_contention = j["control_plane_contention"].get<bool>();
  }
  if (j.contains("export_reward_traces")) {
    sc.export_reward_traces = j["export_reward_traces"].get<bool>();
  }
  if (j.contains("export_event_logs")) {
    sc.export_event_logs = j["export_event_logs"].get<bool>();
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalidError({"cannot read scenario file: " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_text(ss.str());
}

}  // namespace foglb::harness
