#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "foglb/learning.hpp"
#include "foglb/rng.hpp"

namespace foglb::agents {

enum class PolicyKind { DRL, CRL, Random, DRR, Nearest, Fastest };

const char* policy_kind_name(PolicyKind k);
PolicyKind policy_kind_from_name(const std::string& name);
bool is_learning_policy(PolicyKind k);

enum class ObsMode { Realtime, Interval };
enum class ObsDelivery { Instant, LinkDelayed };

// Realtime observations are the literature's idealized assumption: fresh
// queue state before every action, counted as one fan-in of messages per
// decision. Interval mode multicasts a snapshot every interval_s (Gossip
// floor is 3 s) and reuses it for every decision until the next one.
struct ObservationModel {
  ObsMode mode = ObsMode::Realtime;
  double interval_s = 3.0;
  ObsDelivery delivery = ObsDelivery::Instant;
};

struct FogObservation {
  std::int64_t queue_len = 0;
  double backlog_instructions = 0.0;
};

struct DdqlConfig {
  std::vector<int> hidden = {256, 128, 64};
  double gamma = 0.99;
  rl::AdamConfig adam;  // 2.5e-4 learning rate
  std::size_t buffer_capacity = 1000000;
  std::size_t batch_size = 50;
  std::uint64_t train_period = 4;         // decision steps per train call
  std::uint64_t target_sync_period = 2000;  // decision steps per target sync
  double eps_start = 1.0;
  double eps_end = 0.01;
  double eps_decay_fraction = 0.75;
  double queue_norm_cap = 100.0;  // queue lengths divided by this, clipped
  double instr_norm = 1e4;        // instructions divided by this
};

enum class DecisionMode {
  Prefill,  // uniform random action, record experience, no training
  Train,    // epsilon-greedy, record, train on the configured cadence
  Eval,     // greedy, no recording, no training
};

// One independent Double-DQL agent. All of its state (networks, buffer,
// optimizer, RNG streams) is private to it; nothing is shared between
// agents.
class DdqlAgent {
 public:
  DdqlAgent(int agent_id, int n_actions, int onehot_dim, const DdqlConfig& cfg,
            std::uint64_t run_seed);

  int agent_id() const { return agent_id_; }
  int n_actions() const { return n_actions_; }
  int state_dim() const { return 1 + onehot_dim_ + n_actions_; }
  const DdqlConfig& config() const { return cfg_; }

  // State layout: [w_norm, AP one-hot (centralized mode only), queue vector
  // in candidate-list order].
  std::vector<double> build_state(double instructions, int onehot_index,
                                  std::span<const FogObservation> obs) const;

  // Full decision pipeline: pair the previous action with the reward read
  // from this state's snapshot, store the step, train on cadence, pick an
  // action. `legal` lists the permitted action indices in ascending order.
  int decide(const std::vector<double>& state,
             std::span<const FogObservation> obs, std::span<const int> legal,
             DecisionMode mode);

  int greedy(std::span<const double> state, std::span<const int> legal) const;

  void begin_phase(std::uint64_t expected_decisions, double eps_start);
  double current_epsilon() const;

  std::uint64_t decisions() const { return total_decisions_; }
  std::uint64_t train_calls() const { return train_calls_; }
  double last_loss() const { return last_loss_; }

  rl::Mlp& online() { return online_; }
  const rl::Mlp& online() const { return online_; }
  rl::Mlp& target_net() { return target_; }
  const rl::Mlp& target_net() const { return target_; }
  rl::ReplayBuffer& buffer() { return buffer_; }
  const rl::ReplayBuffer& buffer() const { return buffer_; }
  rl::Trainer& trainer() { return trainer_; }

  void enable_reward_trace(bool on) { trace_enabled_ = on; }
  const std::vector<double>& reward_trace() const { return reward_trace_; }

  // Drops the memory of the previous action (used at episode truncations
  // in tests; phase boundaries keep it, the task is continuing).
  void forget_previous_action() { has_prev_ = false; }

 private:
  int agent_id_;
  int n_actions_;
  int onehot_dim_;
  DdqlConfig cfg_;
  rl::Mlp online_;
  rl::Mlp target_;
  rl::Trainer trainer_;
  rl::ReplayBuffer buffer_;
  Rng explore_rng_;
  Rng sample_rng_;

  bool has_prev_ = false;
  int prev_action_ = -1;
  std::uint64_t total_decisions_ = 0;
  std::uint64_t train_decisions_ = 0;
  std::uint64_t phase_decisions_ = 0;
  std::uint64_t phase_expected_ = 1;
  double phase_eps_start_ = 1.0;
  std::uint64_t train_calls_ = 0;
  double last_loss_ = 0.0;
  bool trace_enabled_ = false;
  std::vector<double> reward_trace_;
};

// Non-learning selection baselines. All return an index into the
// candidate list.
class BaselineSelector {
 public:
  virtual ~BaselineSelector() = default;
  virtual int select(double job_instructions,
                     std::span<const FogObservation> obs) = 0;
};

class RandomSelector : public BaselineSelector {
 public:
  RandomSelector(int n_candidates, Rng rng) : n_(n_candidates), rng_(rng) {}
  int select(double, std::span<const FogObservation>) override {
    return static_cast<int>(rng_.uniform_index(n_));
  }

 private:
  int n_;
  Rng rng_;
};

// Per-AP cyclic pointer over the candidate list.
class RoundRobinSelector : public BaselineSelector {
 public:
  explicit RoundRobinSelector(int n_candidates) : n_(n_candidates) {}
  int select(double, std::span<const FogObservation>) override {
    int pick = next_;
    next_ = (next_ + 1) % n_;
    return pick;
  }

 private:
  int n_;
  int next_ = 0;
};

class NearestSelector : public BaselineSelector {
 public:
  // precomputed: candidate with the minimum propagation-delay path, ties by id
  explicit NearestSelector(int fixed_choice) : choice_(fixed_choice) {}
  int select(double, std::span<const FogObservation>) override {
    return choice_;
  }

 private:
  int choice_;
};

// Minimum estimated completion: path delay plus (observed backlog + own
// service) at the candidate's speed.
class FastestSelector : public BaselineSelector {
 public:
  FastestSelector(std::vector<double> path_delays, std::vector<double> ipt)
      : path_delays_(std::move(path_delays)), ipt_(std::move(ipt)) {}

  int select(double job_instructions,
             std::span<const FogObservation> obs) override {
    int best = 0;
    double best_eta = eta(0, job_instructions, obs);
    for (int i = 1; i < static_cast<int>(ipt_.size()); ++i) {
      double e = eta(i, job_instructions, obs);
      if (e < best_eta) {
        best = i;
        best_eta = e;
      }
    }
    return best;
  }

 private:
  double eta(int i, double instr, std::span<const FogObservation> obs) const {
    return path_delays_[i] +
           (obs[i].backlog_instructions + instr) / ipt_[i];
  }

  std::vector<double> path_delays_;
  std::vector<double> ipt_;
};

std::unique_ptr<BaselineSelector> make_baseline(
    PolicyKind kind, int n_candidates, int nearest_choice,
    std::vector<double> path_delays, std::vector<double> ipt, Rng rng);

}  // namespace foglb::agents
