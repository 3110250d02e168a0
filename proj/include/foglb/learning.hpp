#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "foglb/errors.hpp"
#include "foglb/rng.hpp"

namespace foglb::rl {

// Low-level dense kernels. Each OpenMP variant parallelizes over independent
// output elements and keeps every inner reduction in fixed index order, so
// parallel results are bit-identical to the serial reference for any thread
// count. The serial versions are the reference the tests compare against.
namespace kernels {

// Z[b,o] = sum_i X[b,i] * W[o,i] + bias[o]
void linear_forward_serial(const double* x, int batch, int in, const double* w,
                           const double* bias, int out, double* z);
void linear_forward_omp(const double* x, int batch, int in, const double* w,
                        const double* bias, int out, double* z);

// dW[o,i] = sum_b dZ[b,o] * X[b,i]; dB[o] = sum_b dZ[b,o];
// dX[b,i] = sum_o dZ[b,o] * W[o,i] (skipped when dx == nullptr)
void linear_backward_serial(const double* x, int batch, int in, const double* w,
                            int out, const double* dz, double* dw, double* db,
                            double* dx);
void linear_backward_omp(const double* x, int batch, int in, const double* w,
                         int out, const double* dz, double* dw, double* db,
                         double* dx);

// Global switch between the OpenMP kernels and the serial reference.
bool& use_parallel();

void linear_forward(const double* x, int batch, int in, const double* w,
                    const double* bias, int out, double* z);
void linear_backward(const double* x, int batch, int in, const double* w,
                     int out, const double* dz, double* dw, double* db,
                     double* dx);

}  // namespace kernels

struct MlpShape {
  int input = 0;
  std::vector<int> hidden;
  int output = 0;

  std::vector<int> widths() const;  // [input, hidden..., output]
  bool operator==(const MlpShape&) const = default;
};

// Fully connected Q-network: rectifier on hidden layers, linear output.
// Parameters live in one flat vector (per-layer weight blocks then bias),
// which keeps the optimizer, snapshots, and finite-difference checks simple.
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpShape shape, Rng& init_rng);

  const MlpShape& shape() const { return shape_; }
  int input_dim() const { return shape_.input; }
  int output_dim() const { return shape_.output; }
  std::size_t param_count() const { return theta_.size(); }
  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  std::vector<double> forward(std::span<const double> state) const;
  // states: batch x input row-major; out: batch x output.
  void forward_batch(const double* states, int batch, double* out) const;

  std::string snapshot() const;
  static Mlp from_snapshot(const std::string& text);

 private:
  friend class Trainer;
  struct Layer {
    int in = 0, out = 0;
    std::size_t w_off = 0, b_off = 0;
  };

  MlpShape shape_;
  std::vector<Layer> layers_;
  std::vector<double> theta_;

  void build_layout();
};

// huber(e) = e^2/2 for |e|<=1, |e|-1/2 otherwise; mean over the batch.
double huber_loss(std::span<const double> pred, std::span<const double> target);

// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)). Continuing task:
// no terminal flags, targets always bootstrap.
double ddql_target(double reward, std::span<const double> next_state,
                   const Mlp& online, const Mlp& target, double gamma);

// Linear decay from eps_start to eps_end over the first `decay_fraction`
// of phase_steps, then constant.
double epsilon(std::uint64_t decision_step, std::uint64_t phase_steps,
               double eps_start, double eps_end = 0.01,
               double decay_fraction = 0.75);

void sync_target(const Mlp& online, Mlp& target);

struct AdamConfig {
  double lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t n_params, AdamConfig cfg);

  void step(std::vector<double>& theta, const std::vector<double>& grad);
  void reset();
  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

// One per-decision record. The reward field is the reward *observed at* this
// step, i.e. it evaluates the previous action; sampling stitches adjacent
// records into (s, a, r', s') transitions.
struct StepRecord {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
};

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;  // <= 0 by the reward definition
  std::vector<double> next_state;
};

// Uniform ring replay buffer over per-step records.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const;
  std::uint64_t inserted() const { return inserted_; }
  bool can_sample() const { return size() >= 2; }

  void push(StepRecord rec);
  const StepRecord& at_global(std::uint64_t global_index) const;

  // Uniformly samples adjacent-step pairs, with replacement.
  std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

  // Newest-x records in insertion order (for transfer packages).
  std::vector<StepRecord> recent(std::size_t x) const;
  void replace_with(std::vector<StepRecord> records);
  void clear();

 private:
  std::size_t capacity_;
  std::vector<StepRecord> ring_;
  std::uint64_t inserted_ = 0;
};

// One Adam update of the online net toward the Double-DQL targets. The
// target net is untouched.
class Trainer {
 public:
  Trainer(Mlp* online, Mlp* target, AdamConfig adam_cfg, double gamma);

  double train_step(const std::vector<Transition>& batch);

  // Loss and gradient for a batch with fixed targets (finite-difference
  // checks drive this directly).
  double loss_and_grad(const std::vector<Transition>& batch,
                       const std::vector<double>& targets,
                       std::vector<double>* grad_out);
  std::vector<double> targets_for(const std::vector<Transition>& batch) const;

  AdamState& adam() { return adam_; }
  void reset_optimizer() { adam_.reset(); }
  double gamma() const { return gamma_; }

 private:
  Mlp* online_;
  Mlp* target_;
  AdamState adam_;
  double gamma_;
};

// Greedy argmax with ties broken by the lowest index.
int argmax_action(std::span<const double> q);
int argmax_action_masked(std::span<const double> q, std::span<const int> legal);

}  // namespace foglb::rl
