#include "foglb/agents.hpp"

#include <algorithm>
#include <stdexcept>

namespace foglb::agents {

const char* policy_kind_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::DRL: return "drl";
    case PolicyKind::CRL: return "crl";
    case PolicyKind::Random: return "random";
    case PolicyKind::DRR: return "drr";
    case PolicyKind::Nearest: return "nearest";
    case PolicyKind::Fastest: return "fastest";
  }
  return "?";
}

PolicyKind policy_kind_from_name(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(c));
  if (s == "drl") return PolicyKind::DRL;
  if (s == "crl") return PolicyKind::CRL;
  if (s == "random") return PolicyKind::Random;
  if (s == "drr") return PolicyKind::DRR;
  if (s == "nearest") return PolicyKind::Nearest;
  if (s == "fastest") return PolicyKind::Fastest;
  throw std::runtime_error("unknown policy kind: " + name);
}

bool is_learning_policy(PolicyKind k) {
  return k == PolicyKind::DRL || k == PolicyKind::CRL;
}

namespace {

rl::Mlp make_net(int state_dim, int n_actions, const DdqlConfig& cfg,
                 Rng& init_rng) {
  rl::MlpShape shape;
  shape.input = state_dim;
  shape.hidden = cfg.hidden;
  shape.output = n_actions;
  return rl::Mlp(shape, init_rng);
}

Rng init_stream(std::uint64_t run_seed, int agent_id) {
  return derive_rng(run_seed, "agent-init", static_cast<std::uint64_t>(agent_id));
}

}  // namespace

DdqlAgent::DdqlAgent(int agent_id, int n_actions, int onehot_dim,
                     const DdqlConfig& cfg, std::uint64_t run_seed)
    : agent_id_(agent_id),
      n_actions_(n_actions),
      onehot_dim_(onehot_dim),
      cfg_(cfg),
      online_([&] {
        Rng r = init_stream(run_seed, agent_id);
        return make_net(1 + onehot_dim + n_actions, n_actions, cfg, r);
      }()),
      target_(online_),  // target starts as a copy of the initialization
      trainer_(&online_, &target_, cfg.adam, cfg.gamma),
      buffer_(cfg.buffer_capacity),
      explore_rng_(derive_rng(run_seed, "agent-explore",
                              static_cast<std::uint64_t>(agent_id))),
      sample_rng_(derive_rng(run_seed, "agent-sample",
                             static_cast<std::uint64_t>(agent_id))) {}

std::vector<double> DdqlAgent::build_state(
    double instructions, int onehot_index,
    std::span<const FogObservation> obs) const {
  if (static_cast<int>(obs.size()) != n_actions_) {
    throw DimensionMismatchError("observation size != action count");
  }
  std::vector<double> s;
  s.reserve(state_dim());
  s.push_back(instructions / cfg_.instr_norm);
  for (int i = 0; i < onehot_dim_; ++i) {
    s.push_back(i == onehot_index ? 1.0 : 0.0);
  }
  for (const auto& o : obs) {
    s.push_back(std::min(static_cast<double>(o.queue_len) / cfg_.queue_norm_cap,
                         1.0));
  }
  return s;
}

int DdqlAgent::decide(const std::vector<double>& state,
                      std::span<const FogObservation> obs,
                      std::span<const int> legal, DecisionMode mode) {
  if (static_cast<int>(state.size()) != state_dim()) {
    throw DimensionMismatchError("state dim mismatch in decide()");
  }

  // Reward for the previous action, taken from the same snapshot that forms
  // this state. The first decision emits no usable reward.
  double reward = 0.0;
  if (has_prev_) {
    reward = -static_cast<double>(obs[prev_action_].queue_len);
  }

  int action;
  if (mode == DecisionMode::Prefill) {
    action = legal[explore_rng_.uniform_index(legal.size())];
  } else if (mode == DecisionMode::Eval) {
    action = greedy(state, legal);
  } else {
    double eps = current_epsilon();
    if (explore_rng_.uniform01() < eps) {
      action = legal[explore_rng_.uniform_index(legal.size())];
    } else {
      action = greedy(state, legal);
    }
  }

  if (mode != DecisionMode::Eval) {
    buffer_.push(rl::StepRecord{state, action, reward});
    if (trace_enabled_ && has_prev_) reward_trace_.push_back(reward);
  }

  ++total_decisions_;
  if (mode == DecisionMode::Train) {
    ++phase_decisions_;
    ++train_decisions_;
    if (train_decisions_ % cfg_.train_period == 0 && buffer_.can_sample()) {
      auto batch = buffer_.sample(cfg_.batch_size, sample_rng_);
      last_loss_ = trainer_.train_step(batch);
      ++train_calls_;
    }
    if (train_decisions_ % cfg_.target_sync_period == 0) {
      rl::sync_target(online_, target_);
    }
  }

  has_prev_ = true;
  prev_action_ = action;
  return action;
}

int DdqlAgent::greedy(std::span<const double> state,
                      std::span<const int> legal) const {
  auto q = online_.forward(state);
  return rl::argmax_action_masked(q, legal);
}

void DdqlAgent::begin_phase(std::uint64_t expected_decisions,
                            double eps_start) {
  phase_decisions_ = 0;
  phase_expected_ = std::max<std::uint64_t>(1, expected_decisions);
  phase_eps_start_ = eps_start;
}

double DdqlAgent::current_epsilon() const {
  return rl::epsilon(phase_decisions_, phase_expected_, phase_eps_start_,
                     cfg_.eps_end, cfg_.eps_decay_fraction);
}

std::unique_ptr<BaselineSelector> make_baseline(
    PolicyKind kind, int n_candidates, int nearest_choice,
    std::vector<double> path_delays, std::vector<double> ipt, Rng rng) {
  switch (kind) {
    case PolicyKind::Random:
      return std::make_unique<RandomSelector>(n_candidates, rng);
    case PolicyKind::DRR:
      return std::make_unique<RoundRobinSelector>(n_candidates);
    case PolicyKind::Nearest:
      return std::make_unique<NearestSelector>(nearest_choice);
    case PolicyKind::Fastest:
      return std::make_unique<FastestSelector>(std::move(path_delays),
                                               std::move(ipt));
    default:
      throw std::runtime_error("not a baseline policy");
  }
}

}  // namespace foglb::agents
