#include "foglb/lifelong.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <sstream>

namespace foglb::lifelong {

RewardMonitor::RewardMonitor(std::size_t window_size, double saturation_tol,
                             double degradation_tol)
    : window_size_(window_size), sat_tol_(saturation_tol),
      deg_tol_(degradation_tol) {
  if (window_size_ < 2) throw LearningError("monitor window must hold >= 2");
}

void RewardMonitor::record(double reward) {
  window_.push_back(reward);
  if (window_.size() > window_size_) window_.pop_front();
}

double RewardMonitor::window_mean() const {
  if (window_.empty()) return 0.0;
  return std::accumulate(window_.begin(), window_.end(), 0.0) /
         static_cast<double>(window_.size());
}

bool RewardMonitor::detect_convergence() const {
  if (!full()) {
    throw WindowNotFullError("monitor window holds " +
                             std::to_string(window_.size()) + " of " +
                             std::to_string(window_size_));
  }
  std::size_t half = window_size_ / 2;
  double m1 = std::accumulate(window_.begin(), window_.begin() + half, 0.0) /
              static_cast<double>(half);
  double m2 = std::accumulate(window_.begin() + half, window_.end(), 0.0) /
              static_cast<double>(window_.size() - half);
  double improvement = (m2 - m1) / std::max(std::abs(m1), 1e-12);
  return improvement < sat_tol_;
}

bool RewardMonitor::detect_degradation(double baseline_mean) const {
  if (window_.empty()) return false;
  return window_mean() < baseline_mean * (1.0 + deg_tol_);
}

TransferPackage make_transfer_package(const agents::DdqlAgent& src,
                                      std::size_t x, std::string tag) {
  TransferPackage pkg;
  pkg.theta_snapshot = src.online().snapshot();
  pkg.experiences = src.buffer().recent(x);
  pkg.source_tag = std::move(tag);
  return pkg;
}

void apply_transfer(const TransferPackage& pkg, agents::DdqlAgent& dst) {
  rl::Mlp theta = rl::Mlp::from_snapshot(pkg.theta_snapshot);
  if (!(theta.shape() == dst.online().shape())) {
    throw DimensionMismatchError("transfer package shape mismatch");
  }
  dst.online().params() = theta.params();
  dst.target_net().params() = theta.params();
  dst.buffer().replace_with(pkg.experiences);
  dst.trainer().reset_optimizer();
}

void transfer(const agents::DdqlAgent& src, agents::DdqlAgent& dst,
              std::size_t x) {
  apply_transfer(make_transfer_package(src, x), dst);
}

void transfer_in_place(agents::DdqlAgent& agent, std::size_t x) {
  auto recents = agent.buffer().recent(x);
  agent.buffer().replace_with(std::move(recents));
  agent.trainer().reset_optimizer();
}

namespace {

std::string dump_doubles(std::span<const double> v) {
  std::string s;
  char buf[40];
  for (double d : v) {
    std::snprintf(buf, sizeof(buf), " %a", d);
    s += buf;
  }
  return s;
}

}  // namespace

std::string transfer_package_to_text(const TransferPackage& pkg) {
  std::ostringstream out;
  out << "foglb-transfer v1\n";
  out << "source " << (pkg.source_tag.empty() ? "-" : pkg.source_tag) << '\n';
  out << pkg.theta_snapshot;
  std::size_t dim = pkg.experiences.empty() ? 0 : pkg.experiences[0].state.size();
  out << "experiences " << pkg.experiences.size() << ' ' << dim << '\n';
  for (const auto& e : pkg.experiences) {
    out << e.action;
    char buf[40];
    std::snprintf(buf, sizeof(buf), " %a", e.reward);
    out << buf << dump_doubles(e.state) << '\n';
  }
  out << "end\n";
  return out.str();
}

TransferPackage transfer_package_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  in >> word;
  if (word != "foglb-transfer") throw LearningError("not a transfer package");
  in >> word;  // version
  in >> word;
  if (word != "source") throw LearningError("transfer package missing source");
  TransferPackage pkg;
  in >> pkg.source_tag;
  if (pkg.source_tag == "-") pkg.source_tag.clear();

  // Embedded parameter snapshot runs until its own "end".
  std::ostringstream snap;
  std::string line;
  std::getline(in, line);  // rest of source line
  while (std::getline(in, line)) {
    snap << line << '\n';
    if (line == "end") break;
  }
  pkg.theta_snapshot = snap.str();

  in >> word;
  if (word != "experiences") throw LearningError("missing experience block");
  std::size_t count = 0, dim = 0;
  in >> count >> dim;
  pkg.experiences.resize(count);
  for (auto& e : pkg.experiences) {
    in >> e.action >> word;
    e.reward = std::strtod(word.c_str(), nullptr);
    e.state.resize(dim);
    for (auto& s : e.state) {
      in >> word;
      s = std::strtod(word.c_str(), nullptr);
    }
  }
  return pkg;
}

int InferencePolicy::act(std::span<const double> state) const {
  auto q = net_.forward(state);
  return rl::argmax_action(q);
}

int InferencePolicy::act_masked(std::span<const double> state,
                                std::span<const int> legal) const {
  auto q = net_.forward(state);
  return rl::argmax_action_masked(q, legal);
}

std::uint64_t InferencePolicy::param_fingerprint() const {
  return fingerprint(net_.params());
}

InferencePolicy extract_inference_model(const agents::DdqlAgent& agent) {
  return InferencePolicy(agent.online());
}

std::uint64_t fingerprint(std::span<const double> params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double d : params) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace foglb::lifelong
