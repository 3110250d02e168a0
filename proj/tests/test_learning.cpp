#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "foglb/learning.hpp"
#include "foglb/rng.hpp"

using namespace foglb;
using rl::Mlp;
using rl::MlpShape;
using rl::ReplayBuffer;
using rl::StepRecord;
using rl::Trainer;
using rl::Transition;

namespace {

// Independent reimplementation of the forward pass, structured differently
// from the library kernels on purpose.
std::vector<double> naive_forward(const Mlp& net,
                                  const std::vector<double>& state) {
  auto widths = net.shape().widths();
  const auto& theta = net.params();
  std::vector<double> cur = state;
  std::size_t off = 0;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    int in = widths[k], out = widths[k + 1];
    std::vector<double> next(out, 0.0);
    for (int o = 0; o < out; ++o) {
      double acc = 0.0;
      for (int i = 0; i < in; ++i) {
        acc += theta[off + static_cast<std::size_t>(o) * in + i] * cur[i];
      }
      next[o] = acc;
    }
    off += static_cast<std::size_t>(in) * out;
    for (int o = 0; o < out; ++o) next[o] += theta[off + o];
    off += out;
    if (k + 2 < widths.size()) {
      for (auto& v : next) v = std::max(0.0, v);
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<Transition> random_batch(const MlpShape& shape, int n, Rng& rng) {
  std::vector<Transition> batch(n);
  for (auto& t : batch) {
    t.state.resize(shape.input);
    t.next_state.resize(shape.input);
    for (auto& v : t.state) v = rng.uniform(-1.0, 1.0);
    for (auto& v : t.next_state) v = rng.uniform(-1.0, 1.0);
    t.action = static_cast<int>(rng.uniform_index(shape.output));
    t.reward = -rng.uniform(0.0, 5.0);
  }
  return batch;
}

}  // namespace

TEST_CASE("zero weights map any state to zero q-values") {
  MlpShape shape{4, {8, 6}, 3};
  Rng rng(1);
  Mlp net(shape, rng);
  std::fill(net.params().begin(), net.params().end(), 0.0);
  auto q = net.forward(std::vector<double>{0.3, -1.2, 5.0, 0.0});
  for (double v : q) CHECK(v == 0.0);
}

TEST_CASE("forward is deterministic") {
  MlpShape shape{5, {16, 8}, 4};
  Rng rng(2);
  Mlp net(shape, rng);
  std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK(net.forward(s) == net.forward(s));
}

TEST_CASE("forward rejects wrong input dimension") {
  MlpShape shape{5, {8}, 2};
  Rng rng(3);
  Mlp net(shape, rng);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}),
                  DimensionMismatchError);
}

TEST_CASE("forward matches an independent reimplementation") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    MlpShape shape{3 + static_cast<int>(rng.uniform_index(4)),
                   {8, 6},
                   2 + static_cast<int>(rng.uniform_index(3))};
    Rng init(100 + trial);
    Mlp net(shape, init);
    std::vector<double> s(shape.input);
    for (auto& v : s) v = rng.uniform(-2.0, 2.0);
    auto a = net.forward(s);
    auto b = naive_forward(net, s);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("serial and parallel kernels produce identical bits") {
  MlpShape shape{7, {32, 16}, 5};
  Rng init(9);
  Mlp net(shape, init);
  Rng rng(10);
  std::vector<Transition> batch = random_batch(shape, 50, rng);

  Mlp net_s = net, net_p = net;
  Mlp tgt_s = net, tgt_p = net;
  Trainer tr_s(&net_s, &tgt_s, {}, 0.99);
  Trainer tr_p(&net_p, &tgt_p, {}, 0.99);

  rl::kernels::use_parallel() = false;
  double loss_s = tr_s.train_step(batch);
  rl::kernels::use_parallel() = true;
  double loss_p = tr_p.train_step(batch);

  CHECK(loss_s == loss_p);
  CHECK(net_s.params() == net_p.params());
}

TEST_CASE("huber loss branches") {
  std::vector<double> p{0.0}, t{0.0};
  CHECK(rl::huber_loss(p, t) == 0.0);
  p = {0.5};
  t = {0.0};
  CHECK(rl::huber_loss(p, t) == doctest::Approx(0.125));
  p = {2.0};
  t = {0.0};
  CHECK(rl::huber_loss(p, t) == doctest::Approx(1.5));
  p = {0.5, 2.0};
  t = {0.0, 0.0};
  CHECK(rl::huber_loss(p, t) == doctest::Approx((0.125 + 1.5) / 2));
}

TEST_CASE("double-dql target evaluates the online argmax on the target net") {
  // Single linear layer nets with hand-set parameters, 1 input, 2 actions.
  MlpShape shape{1, {}, 2};
  Rng rng(4);
  Mlp online(shape, rng), target(shape, rng);
  // online: biases pick action 1; weights zero
  std::fill(online.params().begin(), online.params().end(), 0.0);
  online.params()[2] = 1.0;  // bias a0
  online.params()[3] = 2.0;  // bias a1 -> argmax
  std::fill(target.params().begin(), target.params().end(), 0.0);
  target.params()[2] = -50.0;
  target.params()[3] = -10.0;  // value of the online argmax

  std::vector<double> s{0.0};
  CHECK(rl::ddql_target(-2.0, s, online, target, 0.99) ==
        doctest::Approx(-11.9));
  CHECK(rl::ddql_target(-2.0, s, online, target, 0.0) == doctest::Approx(-2.0));

  // online == target reduces to the plain max target
  CHECK(rl::ddql_target(0.0, s, online, online, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("epsilon decays linearly over the first 75% of the phase") {
  CHECK(rl::epsilon(0, 1000, 1.0) == doctest::Approx(1.0));
  CHECK(rl::epsilon(750, 1000, 1.0) == doctest::Approx(0.01));
  CHECK(rl::epsilon(999, 1000, 1.0) == doctest::Approx(0.01));
  CHECK(rl::epsilon(375, 1000, 1.0) == doctest::Approx(0.505));
}

TEST_CASE("target sync copies and is idempotent") {
  MlpShape shape{3, {8}, 2};
  Rng r1(5), r2(6);
  Mlp online(shape, r1), target(shape, r2);
  CHECK(online.params() != target.params());
  rl::sync_target(online, target);
  CHECK(online.params() == target.params());
  auto before = target.params();
  rl::sync_target(online, target);
  CHECK(target.params() == before);
}

TEST_CASE("agent-style construction: target starts as the init copy") {
  MlpShape shape{3, {8}, 2};
  Rng r(7);
  Mlp online(shape, r);
  Mlp target = online;
  CHECK(target.params() == online.params());
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(2718);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    MlpShape shape{2 + static_cast<int>(rng.uniform_index(3)),
                   {6 + static_cast<int>(rng.uniform_index(4)), 5},
                   2 + static_cast<int>(rng.uniform_index(2))};
    Rng init(500 + trial);
    Mlp online(shape, init);
    Mlp target = online;
    Trainer trainer(&online, &target, {}, 0.9);

    auto batch = random_batch(shape, 8, rng);
    // Fixed targets straddling both huber branches, away from the kink.
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      auto q = online.forward(batch[i].state);
      double off = i % 2 == 0 ? rng.uniform(-0.7, 0.7)
                              : (rng.uniform01() < 0.5 ? 1.0 : -1.0) *
                                    rng.uniform(1.3, 2.5);
      y[i] = q[batch[i].action] + off;
    }

    std::vector<double> grad;
    trainer.loss_and_grad(batch, y, &grad);

    auto& theta = online.params();
    for (std::size_t p = 0; p < theta.size(); ++p) {
      double h = 1e-6 * std::max(1.0, std::abs(theta[p]));
      double orig = theta[p];
      theta[p] = orig + h;
      double lp = trainer.loss_and_grad(batch, y, nullptr);
      theta[p] = orig - h;
      double lm = trainer.loss_and_grad(batch, y, nullptr);
      theta[p] = orig;
      double fd = (lp - lm) / (2 * h);
      double denom = std::max({std::abs(fd), std::abs(grad[p]), 1e-6});
      worst = std::max(worst, std::abs(fd - grad[p]) / denom);
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("duplicate batch entries act as weights under the mean loss") {
  MlpShape shape{3, {6}, 2};
  Rng init(11);
  Mlp online(shape, init);
  Mlp target = online;
  Trainer trainer(&online, &target, {}, 0.9);
  Rng rng(12);
  auto one = random_batch(shape, 1, rng);
  std::vector<Transition> twice = {one[0], one[0]};
  auto y1 = trainer.targets_for(one);
  auto y2 = trainer.targets_for(twice);
  std::vector<double> g1, g2;
  double l1 = trainer.loss_and_grad(one, y1, &g1);
  double l2 = trainer.loss_and_grad(twice, y2, &g2);
  CHECK(l1 == doctest::Approx(l2));
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-12));
  }
}

TEST_CASE("zero error means zero loss and zero gradient") {
  MlpShape shape{3, {6}, 2};
  Rng init(13);
  Mlp online(shape, init);
  Mlp target = online;
  Trainer trainer(&online, &target, {}, 0.9);
  Rng rng(14);
  auto batch = random_batch(shape, 4, rng);
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = online.forward(batch[i].state)[batch[i].action];
  }
  std::vector<double> grad;
  CHECK(trainer.loss_and_grad(batch, y, &grad) == 0.0);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("replay ring forgets the oldest records past capacity") {
  ReplayBuffer buf(100);
  for (int i = 0; i < 117; ++i) {
    buf.push({{static_cast<double>(i)}, 0, 0.0});
  }
  CHECK(buf.size() == 100);
  CHECK(buf.inserted() == 117);
  // global indices 17..116 remain
  CHECK(buf.at_global(17).state[0] == 17.0);
  CHECK(buf.at_global(116).state[0] == 116.0);
  auto recents = buf.recent(5);
  REQUIRE(recents.size() == 5);
  CHECK(recents.front().state[0] == 112.0);
  CHECK(recents.back().state[0] == 116.0);
}

TEST_CASE("sampling stitches adjacent records into transitions") {
  ReplayBuffer buf(10);
  for (int i = 0; i < 5; ++i) {
    buf.push({{static_cast<double>(i)}, i, -static_cast<double>(i)});
  }
  Rng rng(21);
  auto batch = buf.sample(64, rng);
  for (const auto& t : batch) {
    double s = t.state[0];
    CHECK(t.next_state[0] == s + 1.0);
    CHECK(t.action == static_cast<int>(s));
    CHECK(t.reward == -(s + 1.0));  // the next step's observed reward
  }
}

TEST_CASE("sampling an empty buffer fails") {
  ReplayBuffer buf(8);
  Rng rng(1);
  CHECK_THROWS_AS(buf.sample(4, rng), EmptyBufferError);
  buf.push({{0.0}, 0, 0.0});
  CHECK_THROWS_AS(buf.sample(4, rng), EmptyBufferError);
}

TEST_CASE("replay sampling is uniform over stored pairs") {
  ReplayBuffer buf(100);
  for (int i = 0; i < 100; ++i) {
    buf.push({{static_cast<double>(i)}, 0, 0.0});
  }
  Rng rng(777);
  std::map<int, int> counts;
  const int draws = 100000;
  auto batch = buf.sample(draws, rng);
  for (const auto& t : batch) counts[static_cast<int>(t.state[0])]++;
  // 99 valid start positions; each count within 5 sigma of uniform.
  double p = 1.0 / 99.0;
  double mean = draws * p;
  double sigma = std::sqrt(draws * p * (1 - p));
  CHECK(counts.size() == 99);
  for (auto [k, c] : counts) {
    CHECK(std::abs(c - mean) <= 5 * sigma);
  }
}

TEST_CASE("snapshots round-trip bit-exactly") {
  MlpShape shape{6, {16, 8}, 3};
  Rng init(31);
  Mlp net(shape, init);
  auto text = Mlp::from_snapshot(net.snapshot()).snapshot();
  CHECK(text == net.snapshot());
  Mlp back = Mlp::from_snapshot(text);
  CHECK(back.params() == net.params());
  CHECK(back.shape() == net.shape());
}

// 2-state/2-action MDP with all-negative rewards, solved by value
// iteration, then learned by the full DDQL stack.
namespace {

struct ToyMdp {
  // transitions[s][a] = {reward, next_state}
  double reward[2][2] = {{-1.0, -4.0}, {-2.0, -1.0}};
  int next[2][2] = {{0, 1}, {0, 1}};
  double gamma = 0.9;

  std::array<std::array<double, 2>, 2> optimal_q() const {
    std::array<double, 2> v{0.0, 0.0};
    std::array<std::array<double, 2>, 2> q{};
    for (int iter = 0; iter < 2000; ++iter) {
      for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 2; ++a) {
          q[s][a] = reward[s][a] + gamma * v[next[s][a]];
        }
      }
      for (int s = 0; s < 2; ++s) v[s] = std::max(q[s][0], q[s][1]);
    }
    return q;
  }
};

std::vector<double> onehot2(int s) {
  return s == 0 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
}

}  // namespace

TEST_CASE("ddql converges to the value-iteration oracle on a toy mdp") {
  ToyMdp mdp;
  auto q_star = mdp.optimal_q();
  // Sanity: distinct optimal actions per state.
  CHECK(q_star[0][0] == doctest::Approx(-10.0));
  CHECK(q_star[0][1] == doctest::Approx(-13.0));
  CHECK(q_star[1][0] == doctest::Approx(-11.0));
  CHECK(q_star[1][1] == doctest::Approx(-10.0));

  MlpShape shape{2, {32, 32}, 2};
  Rng init(2025);
  Mlp online(shape, init);
  Mlp target = online;
  rl::AdamConfig adam;
  adam.lr = 1e-3;
  Trainer trainer(&online, &target, adam, mdp.gamma);
  ReplayBuffer buf(5000);
  Rng explore(55), sample(56);

  int s = 0;
  double pending_reward = 0.0;
  const int steps = 6000;
  for (int t = 0; t < steps; ++t) {
    double eps = rl::epsilon(t, steps, 1.0, 0.05, 0.5);
    int a;
    if (explore.uniform01() < eps) {
      a = static_cast<int>(explore.uniform_index(2));
    } else {
      a = rl::argmax_action(online.forward(onehot2(s)));
    }
    // The record carries the reward observed on arrival, evaluating the
    // previous action; sampling stitches neighbors.
    buf.push({onehot2(s), a, pending_reward});
    pending_reward = mdp.reward[s][a];
    s = mdp.next[s][a];

    if (buf.size() >= 100) {
      trainer.train_step(buf.sample(50, sample));
      if (t % 200 == 0) rl::sync_target(online, target);
    }
  }

  for (int state = 0; state < 2; ++state) {
    auto q = online.forward(onehot2(state));
    int greedy = rl::argmax_action(q);
    int optimal = q_star[state][0] >= q_star[state][1] ? 0 : 1;
    CHECK(greedy == optimal);
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(q[a] - q_star[state][a]) <=
            0.05 * std::abs(q_star[state][a]));
    }
  }
}
