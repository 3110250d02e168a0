#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "foglb/rng.hpp"
#include "foglb/sim.hpp"

namespace foglb::workload {

enum class CategoryKind { Heavy = 0, Moderate = 1, Light = 2 };

inline constexpr int kNumCategories = 3;

struct WorkloadCategory {
  CategoryKind kind;
  const char* name;
  double instructions;
  double data_bytes;
  double response_bytes;
};

// Heavy/moderate/light streams run concurrently everywhere; the demand and
// payload constants are fixed relative to fog and link resources.
const std::array<WorkloadCategory, kNumCategories>& categories();
const WorkloadCategory& category(CategoryKind kind);
const WorkloadCategory& category(int index);

// One IoT workload instance and its request/response lifecycle. Unset
// timestamps are negative.
struct Job {
  std::uint64_t job_id = 0;
  CategoryKind category = CategoryKind::Light;
  int source_ap = -1;
  int assigned_fog = -1;
  sim::SimTime t_generated = -1.0;
  sim::SimTime t_dispatched = -1.0;
  sim::SimTime t_enqueued = -1.0;
  sim::SimTime t_service_start = -1.0;
  sim::SimTime t_service_end = -1.0;
  sim::SimTime t_response_at_ap = -1.0;
};

struct Phase {
  double start_step = 0.0;  // simulation steps (1 step = 1 second)
  double beta = 200.0;      // exponential scale parameter, in steps
};

// Phase-scheduled generation intensity. beta_time_scale maps beta steps to
// interarrival seconds; it exists so desk-scale runs can densify traffic
// without touching the schedule itself.
struct GenerationSchedule {
  std::vector<Phase> phases;
  double beta_time_scale = 1.0;

  double beta_at_step(double step) const;
  double mean_interarrival_s(sim::SimTime now) const;
};

// Exponential draw with the given mean, strictly positive.
double sample_interarrival(double beta, Rng& rng);

}  // namespace foglb::workload
