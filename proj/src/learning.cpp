#include "foglb/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace foglb::rl {

namespace kernels {

void linear_forward_serial(const double* x, int batch, int in, const double* w,
                           const double* bias, int out, double* z) {
  for (int b = 0; b < batch; ++b) {
    const double* xb = x + static_cast<std::size_t>(b) * in;
    double* zb = z + static_cast<std::size_t>(b) * out;
    for (int o = 0; o < out; ++o) {
      const double* wo = w + static_cast<std::size_t>(o) * in;
      double acc = bias[o];
      for (int i = 0; i < in; ++i) acc += wo[i] * xb[i];
      zb[o] = acc;
    }
  }
}

void linear_forward_omp(const double* x, int batch, int in, const double* w,
                        const double* bias, int out, double* z) {
#pragma omp parallel for schedule(static) if (batch > 1)
  for (int b = 0; b < batch; ++b) {
    const double* xb = x + static_cast<std::size_t>(b) * in;
    double* zb = z + static_cast<std::size_t>(b) * out;
    for (int o = 0; o < out; ++o) {
      const double* wo = w + static_cast<std::size_t>(o) * in;
      double acc = bias[o];
      for (int i = 0; i < in; ++i) acc += wo[i] * xb[i];
      zb[o] = acc;
    }
  }
}

void linear_backward_serial(const double* x, int batch, int in, const double* w,
                            int out, const double* dz, double* dw, double* db,
                            double* dx) {
  for (int o = 0; o < out; ++o) {
    double* dwo = dw + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int b = 0; b < batch; ++b) {
        acc += dz[static_cast<std::size_t>(b) * out + o] *
               x[static_cast<std::size_t>(b) * in + i];
      }
      dwo[i] = acc;
    }
    double acc = 0.0;
    for (int b = 0; b < batch; ++b) {
      acc += dz[static_cast<std::size_t>(b) * out + o];
    }
    db[o] = acc;
  }
  if (!dx) return;
  for (int b = 0; b < batch; ++b) {
    const double* dzb = dz + static_cast<std::size_t>(b) * out;
    double* dxb = dx + static_cast<std::size_t>(b) * in;
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o) {
        acc += dzb[o] * w[static_cast<std::size_t>(o) * in + i];
      }
      dxb[i] = acc;
    }
  }
}

void linear_backward_omp(const double* x, int batch, int in, const double* w,
                         int out, const double* dz, double* dw, double* db,
                         double* dx) {
#pragma omp parallel for schedule(static) if (out > 1)
  for (int o = 0; o < out; ++o) {
    double* dwo = dw + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int b = 0; b < batch; ++b) {
        acc += dz[static_cast<std::size_t>(b) * out + o] *
               x[static_cast<std::size_t>(b) * in + i];
      }
      dwo[i] = acc;
    }
    double acc = 0.0;
    for (int b = 0; b < batch; ++b) {
      acc += dz[static_cast<std::size_t>(b) * out + o];
    }
    db[o] = acc;
  }
  if (!dx) return;
#pragma omp parallel for schedule(static) if (batch > 1)
  for (int b = 0; b < batch; ++b) {
    const double* dzb = dz + static_cast<std::size_t>(b) * out;
    double* dxb = dx + static_cast<std::size_t>(b) * in;
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o) {
        acc += dzb[o] * w[static_cast<std::size_t>(o) * in + i];
      }
      dxb[i] = acc;
    }
  }
}

bool& use_parallel() {
#ifdef _OPENMP
  static bool flag = true;
#else
  static bool flag = false;
#endif
  return flag;
}

void linear_forward(const double* x, int batch, int in, const double* w,
                    const double* bias, int out, double* z) {
  if (use_parallel()) {
    linear_forward_omp(x, batch, in, w, bias, out, z);
  } else {
    linear_forward_serial(x, batch, in, w, bias, out, z);
  }
}

void linear_backward(const double* x, int batch, int in, const double* w,
                     int out, const double* dz, double* dw, double* db,
                     double* dx) {
  if (use_parallel()) {
    linear_backward_omp(x, batch, in, w, out, dz, dw, db, dx);
  } else {
    linear_backward_serial(x, batch, in, w, out, dz, dw, db, dx);
  }
}

}  // namespace kernels

std::vector<int> MlpShape::widths() const {
  std::vector<int> w;
  w.push_back(input);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(output);
  return w;
}

Mlp::Mlp(MlpShape shape, Rng& init_rng) : shape_(std::move(shape)) {
  build_layout();
  // Fan-in-scaled uniform init keeps early rectifier activations bounded.
  for (const auto& l : layers_) {
    double bound = std::sqrt(1.0 / l.in);
    for (int o = 0; o < l.out; ++o) {
      for (int i = 0; i < l.in; ++i) {
        theta_[l.w_off + static_cast<std::size_t>(o) * l.in + i] =
            init_rng.uniform(-bound, bound);
      }
    }
    for (int o = 0; o < l.out; ++o) {
      theta_[l.b_off + o] = 0.0;
    }
  }
}

void Mlp::build_layout() {
  auto w = shape_.widths();
  std::size_t off = 0;
  layers_.clear();
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    Layer l;
    l.in = w[k];
    l.out = w[k + 1];
    l.w_off = off;
    off += static_cast<std::size_t>(l.in) * l.out;
    l.b_off = off;
    off += l.out;
    layers_.push_back(l);
  }
  theta_.assign(off, 0.0);
}

std::vector<double> Mlp::forward(std::span<const double> state) const {
  if (static_cast<int>(state.size()) != shape_.input) {
    throw DimensionMismatchError("state dim " + std::to_string(state.size()) +
                                 " != net input " +
                                 std::to_string(shape_.input));
  }
  std::vector<double> out(shape_.output);
  forward_batch(state.data(), 1, out.data());
  return out;
}

void Mlp::forward_batch(const double* states, int batch, double* out) const {
  std::vector<double> cur(states,
                          states + static_cast<std::size_t>(batch) * shape_.input);
  std::vector<double> next;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    next.assign(static_cast<std::size_t>(batch) * l.out, 0.0);
    kernels::linear_forward(cur.data(), batch, l.in, theta_.data() + l.w_off,
                            theta_.data() + l.b_off, l.out, next.data());
    if (k + 1 < layers_.size()) {
      for (auto& v : next) v = v > 0.0 ? v : 0.0;
    }
    cur.swap(next);
  }
  std::memcpy(out, cur.data(),
              static_cast<std::size_t>(batch) * shape_.output * sizeof(double));
}

namespace {

std::string dump_doubles(const std::vector<double>& v) {
  std::string s;
  char buf[40];
  for (double d : v) {
    std::snprintf(buf, sizeof(buf), " %a", d);
    s += buf;
  }
  return s;
}

}  // namespace

std::string Mlp::snapshot() const {
  std::ostringstream out;
  out << "foglb-params v1\n";
  out << "shape";
  for (int w : shape_.widths()) out << ' ' << w;
  out << '\n';
  out << "theta " << theta_.size() << dump_doubles(theta_) << '\n';
  out << "end\n";
  return out.str();
}

Mlp Mlp::from_snapshot(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  in >> word;
  if (word != "foglb-params") {
    throw LearningError("not a foglb parameter snapshot");
  }
  in >> word;  // version
  if (word != "v1") throw LearningError("unsupported snapshot version " + word);
  in >> word;
  if (word != "shape") throw LearningError("snapshot missing shape");
  std::vector<int> widths;
  while (in >> word && word != "theta") {
    widths.push_back(std::stoi(word));
  }
  if (widths.size() < 2) throw LearningError("snapshot shape too short");
  Mlp net;
  net.shape_.input = widths.front();
  net.shape_.output = widths.back();
  net.shape_.hidden.assign(widths.begin() + 1, widths.end() - 1);
  net.build_layout();
  std::size_t count = 0;
  in >> count;
  if (count != net.theta_.size()) {
    throw LearningError("snapshot parameter count mismatch");
  }
  for (std::size_t i = 0; i < count; ++i) {
    in >> word;
    net.theta_[i] = std::strtod(word.c_str(), nullptr);
  }
  return net;
}

double huber_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw DimensionMismatchError("huber: size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double e = pred[i] - target[i];
    double a = std::abs(e);
    total += a <= 1.0 ? 0.5 * e * e : a - 0.5;
  }
  return total / static_cast<double>(pred.size());
}

int argmax_action(std::span<const double> q) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

int argmax_action_masked(std::span<const double> q, std::span<const int> legal) {
  int best = legal[0];
  for (int idx : legal) {
    if (q[idx] > q[best]) best = idx;
  }
  return best;
}

double ddql_target(double reward, std::span<const double> next_state,
                   const Mlp& online, const Mlp& target, double gamma) {
  auto q_online = online.forward(next_state);
  int a_star = argmax_action(q_online);
  auto q_target = target.forward(next_state);
  return reward + gamma * q_target[a_star];
}

double epsilon(std::uint64_t decision_step, std::uint64_t phase_steps,
               double eps_start, double eps_end, double decay_fraction) {
  if (phase_steps == 0) throw LearningError("epsilon: phase_steps must be > 0");
  double decay_steps = decay_fraction * static_cast<double>(phase_steps);
  double frac = decay_steps > 0.0
                    ? std::min(1.0, static_cast<double>(decision_step) / decay_steps)
                    : 1.0;
  return eps_start + (eps_end - eps_start) * frac;
}

void sync_target(const Mlp& online, Mlp& target) {
  target.params() = online.params();
}

AdamState::AdamState(std::size_t n_params, AdamConfig cfg)
    : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

void AdamState::step(std::vector<double>& theta,
                     const std::vector<double>& grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw DimensionMismatchError("adam: parameter count mismatch");
  }
  ++t_;
  double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    double mhat = m_[i] / b1t;
    double vhat = v_[i] / b2t;
    theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

void AdamState::reset() {
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  t_ = 0;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 2) throw LearningError("replay buffer capacity must be >= 2");
  ring_.resize(capacity_);
}

std::size_t ReplayBuffer::size() const {
  return static_cast<std::size_t>(
      std::min<std::uint64_t>(inserted_, capacity_));
}

void ReplayBuffer::push(StepRecord rec) {
  ring_[inserted_ % capacity_] = std::move(rec);
  ++inserted_;
}

const StepRecord& ReplayBuffer::at_global(std::uint64_t global_index) const {
  return ring_[global_index % capacity_];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch,
                                             Rng& rng) const {
  if (!can_sample()) throw EmptyBufferError("replay buffer has < 2 records");
  std::uint64_t lo = inserted_ - size();
  std::uint64_t n_pairs = size() - 1;
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) {
    std::uint64_t g = lo + rng.uniform_index(n_pairs);
    const StepRecord& a = at_global(g);
    const StepRecord& b = at_global(g + 1);
    Transition t;
    t.state = a.state;
    t.action = a.action;
    t.reward = b.reward;  // reward observed at the next step evaluates a.action
    t.next_state = b.state;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<StepRecord> ReplayBuffer::recent(std::size_t x) const {
  std::size_t n = std::min(x, size());
  std::vector<StepRecord> out;
  out.reserve(n);
  for (std::uint64_t g = inserted_ - n; g < inserted_; ++g) {
    out.push_back(at_global(g));
  }
  return out;
}

void ReplayBuffer::replace_with(std::vector<StepRecord> records) {
  clear();
  for (auto& r : records) push(std::move(r));
}

void ReplayBuffer::clear() {
  inserted_ = 0;
  ring_.assign(capacity_, StepRecord{});
}

Trainer::Trainer(Mlp* online, Mlp* target, AdamConfig adam_cfg, double gamma)
    : online_(online),
      target_(target),
      adam_(online->param_count(), adam_cfg),
      gamma_(gamma) {}

std::vector<double> Trainer::targets_for(
    const std::vector<Transition>& batch) const {
  int n = static_cast<int>(batch.size());
  int in = online_->input_dim();
  int out = online_->output_dim();
  std::vector<double> next_states(static_cast<std::size_t>(n) * in);
  for (int b = 0; b < n; ++b) {
    if (static_cast<int>(batch[b].next_state.size()) != in) {
      throw DimensionMismatchError("transition next_state dim mismatch");
    }
    std::copy(batch[b].next_state.begin(), batch[b].next_state.end(),
              next_states.begin() + static_cast<std::size_t>(b) * in);
  }
  std::vector<double> q_online(static_cast<std::size_t>(n) * out);
  std::vector<double> q_target(static_cast<std::size_t>(n) * out);
  online_->forward_batch(next_states.data(), n, q_online.data());
  target_->forward_batch(next_states.data(), n, q_target.data());
  std::vector<double> y(n);
  for (int b = 0; b < n; ++b) {
    std::span<const double> row(q_online.data() + static_cast<std::size_t>(b) * out,
                                out);
    int a_star = argmax_action(row);
    y[b] = batch[b].reward +
           gamma_ * q_target[static_cast<std::size_t>(b) * out + a_star];
  }
  return y;
}

double Trainer::loss_and_grad(const std::vector<Transition>& batch,
                              const std::vector<double>& targets,
                              std::vector<double>* grad_out) {
  int n = static_cast<int>(batch.size());
  if (n == 0) throw EmptyBufferError("empty training batch");
  int in = online_->input_dim();
  int out = online_->output_dim();
  const auto& layers = online_->layers_;
  const auto& theta = online_->theta_;

  // Forward pass, keeping post-activation values per layer.
  std::vector<std::vector<double>> acts;  // acts[0] = inputs
  acts.emplace_back(static_cast<std::size_t>(n) * in);
  for (int b = 0; b < n; ++b) {
    if (static_cast<int>(batch[b].state.size()) != in) {
      throw DimensionMismatchError("transition state dim mismatch");
    }
    std::copy(batch[b].state.begin(), batch[b].state.end(),
              acts[0].begin() + static_cast<std::size_t>(b) * in);
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    std::vector<double> z(static_cast<std::size_t>(n) * l.out);
    kernels::linear_forward(acts[k].data(), n, l.in, theta.data() + l.w_off,
                            theta.data() + l.b_off, l.out, z.data());
    if (k + 1 < layers.size()) {
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
    }
    acts.push_back(std::move(z));
  }
  const std::vector<double>& q = acts.back();

  // Huber loss on the selected actions against fixed targets.
  double loss = 0.0;
  std::vector<double> dz(static_cast<std::size_t>(n) * out, 0.0);
  for (int b = 0; b < n; ++b) {
    int a = batch[b].action;
    double e = q[static_cast<std::size_t>(b) * out + a] - targets[b];
    double ae = std::abs(e);
    loss += ae <= 1.0 ? 0.5 * e * e : ae - 0.5;
    double de = std::clamp(e, -1.0, 1.0);  // d huber / d e
    dz[static_cast<std::size_t>(b) * out + a] = de / n;
  }
  loss /= n;

  if (grad_out) {
    grad_out->assign(theta.size(), 0.0);
    std::vector<double> dcur = std::move(dz);
    for (int k = static_cast<int>(layers.size()) - 1; k >= 0; --k) {
      const auto& l = layers[k];
      std::vector<double> dprev;
      double* dx = nullptr;
      if (k > 0) {
        dprev.assign(static_cast<std::size_t>(n) * l.in, 0.0);
        dx = dprev.data();
      }
      kernels::linear_backward(acts[k].data(), n, l.in, theta.data() + l.w_off,
                               l.out, dcur.data(), grad_out->data() + l.w_off,
                               grad_out->data() + l.b_off, dx);
      if (k > 0) {
        // Rectifier gate: zero where the forward activation was clipped.
        const auto& a_prev = acts[k];
        for (std::size_t i = 0; i < dprev.size(); ++i) {
          if (a_prev[i] <= 0.0) dprev[i] = 0.0;
        }
        dcur = std::move(dprev);
      }
    }
  }
  return loss;
}

double Trainer::train_step(const std::vector<Transition>& batch) {
  auto y = targets_for(batch);
  std::vector<double> grad;
  double loss = loss_and_grad(batch, y, &grad);
  adam_.step(online_->params(), grad);
  return loss;
}

}  // namespace foglb::rl
