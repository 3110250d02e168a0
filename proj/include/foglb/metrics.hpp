#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "foglb/errors.hpp"
#include "foglb/workload.hpp"

namespace foglb::metrics {

// Semantic trace of one simulation run. Summaries are pure functions of
// this log, so a persisted log replays to bit-identical metrics.
struct JobRecord {
  std::uint64_t job_id = 0;
  int source_ap = -1;
  int category = 0;  // index into workload::categories()
  int fog = -1;
  double t_generated = -1.0;
  double t_dispatched = -1.0;
  double t_enqueued = -1.0;
  double t_service_start = -1.0;
  double t_service_end = -1.0;
  double t_response_at_ap = -1.0;
};

struct NodeRecord {
  int node_id = -1;
  double busy_time = 0.0;
};

struct AgentRecord {
  int agent_id = -1;
  std::uint64_t decision_steps = 0;
};

struct EventLog {
  double horizon = 0.0;
  std::vector<JobRecord> jobs;
  std::vector<NodeRecord> fog_nodes;
  std::vector<AgentRecord> agents;
  std::uint64_t control_msgs = 0;
  std::uint64_t observation_msgs = 0;
};

struct RunSummary {
  double avg_wait = 0.0;
  double std_wait_across_nodes = 0.0;
  double std_utilization_across_nodes = 0.0;
  double avg_execution_delay = 0.0;
  // Per workload category; negative when no job of that category completed
  // its loop.
  std::array<double, workload::kNumCategories> avg_execution_delay_by_category{};
  std::uint64_t generated_jobs = 0;
  std::uint64_t completed_jobs = 0;
  std::uint64_t censored_jobs = 0;
  std::uint64_t control_msg_count = 0;
  std::uint64_t observation_msg_count = 0;
  std::vector<AgentRecord> decision_steps;
};

double node_utilization(double busy_time, double horizon);

// Throws NoCompletedJobsError when no job finished service.
RunSummary summarize_run(const EventLog& log);

struct Aggregate {
  double mean = 0.0;
  double ci_half_width = 0.0;  // 95% Student-t interval
};

// Throws TooFewRunsError for fewer than two values.
Aggregate aggregate(std::span<const double> values);

// Population standard deviation (the node set is the whole population).
double population_std(std::span<const double> values);

std::string event_log_to_text(const EventLog& log);
EventLog event_log_from_text(const std::string& text);
void save_event_log(const EventLog& log, const std::string& path);
EventLog load_event_log(const std::string& path);

// Exact round-trip decimal formatting for doubles.
std::string format_double(double v);

}  // namespace foglb::metrics
