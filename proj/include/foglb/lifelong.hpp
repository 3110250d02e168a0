#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "foglb/agents.hpp"
#include "foglb/learning.hpp"

namespace foglb::lifelong {

// Tracks recent per-decision rewards to detect performance saturation
// (training can stop) and degradation (the environment changed; retrain).
// Monitoring never touches the policy.
class RewardMonitor {
 public:
  explicit RewardMonitor(std::size_t window_size = 1000,
                         double saturation_tol = 0.01,
                         double degradation_tol = 0.20);

  void record(double reward);
  bool full() const { return window_.size() == window_size_; }
  std::size_t window_size() const { return window_size_; }
  double window_mean() const;
  double degradation_tol() const { return deg_tol_; }

  // True when the newer half of the window no longer improves on the older
  // half by more than the saturation tolerance.
  bool detect_convergence() const;

  // Rewards are costs (<= 0): degraded means the current mean fell below
  // baseline * (1 + tol), strictly.
  bool detect_degradation(double baseline_mean) const;

  void clear() { window_.clear(); }

 private:
  std::size_t window_size_;
  double sat_tol_;
  double deg_tol_;
  std::deque<double> window_;
};

// Everything that moves between a source and a target learning task: policy
// parameters and the most recent x experiences. Optimizer state does not
// move.
struct TransferPackage {
  std::string theta_snapshot;  // learning-core parameter snapshot format
  std::vector<rl::StepRecord> experiences;
  std::string source_tag;
};

TransferPackage make_transfer_package(const agents::DdqlAgent& src,
                                      std::size_t x, std::string tag = "");

// Copies theta into both of dst's networks, seeds dst's buffer with the
// package experiences, and resets the optimizer. The source is untouched.
void apply_transfer(const TransferPackage& pkg, agents::DdqlAgent& dst);

void transfer(const agents::DdqlAgent& src, agents::DdqlAgent& dst,
              std::size_t x);

// Surge transition for an agent that continues in place: keep theta, keep
// only the most recent x experiences, reset optimizer moments.
void transfer_in_place(agents::DdqlAgent& agent, std::size_t x);

std::string transfer_package_to_text(const TransferPackage& pkg);
TransferPackage transfer_package_from_text(const std::string& text);

// Frozen greedy policy: forward passes and argmax only. No buffer, no
// optimizer, no mutating interface.
class InferencePolicy {
 public:
  explicit InferencePolicy(const rl::Mlp& net) : net_(net) {}

  int act(std::span<const double> state) const;
  int act_masked(std::span<const double> state,
                 std::span<const int> legal) const;
  std::vector<double> q_values(std::span<const double> state) const {
    return net_.forward(state);
  }

  std::string snapshot() const { return net_.snapshot(); }
  static InferencePolicy from_snapshot(const std::string& text) {
    return InferencePolicy(rl::Mlp::from_snapshot(text));
  }

  std::uint64_t param_fingerprint() const;

 private:
  rl::Mlp net_;
};

InferencePolicy extract_inference_model(const agents::DdqlAgent& agent);

// Order-sensitive fingerprint of a parameter vector; used to assert
// bit-identity in tests.
std::uint64_t fingerprint(std::span<const double> params);

}  // namespace foglb::lifelong
