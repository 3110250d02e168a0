#include "foglb/workload.hpp"

#include <stdexcept>

namespace foglb::workload {

const std::array<WorkloadCategory, kNumCategories>& categories() {
  static const std::array<WorkloadCategory, kNumCategories> cats = {{
      {CategoryKind::Heavy, "heavy", 1e4, 1e3, 1e3},
      {CategoryKind::Moderate, "moderate", 1e3, 1e2, 1e2},
      {CategoryKind::Light, "light", 1e2, 1e1, 1e1},
  }};
  return cats;
}

const WorkloadCategory& category(CategoryKind kind) {
  return categories()[static_cast<int>(kind)];
}

const WorkloadCategory& category(int index) {
  return categories().at(index);
}

double GenerationSchedule::beta_at_step(double step) const {
  if (phases.empty()) throw std::runtime_error("empty generation schedule");
  double beta = phases.front().beta;
  for (const auto& p : phases) {
    if (p.start_step <= step) beta = p.beta;
  }
  return beta;
}

double GenerationSchedule::mean_interarrival_s(sim::SimTime now) const {
  // 1 simulation step = 1 second.
  return beta_at_step(now) * beta_time_scale;
}

double sample_interarrival(double beta, Rng& rng) {
  return rng.exponential(beta);
}

}  // namespace foglb::workload
