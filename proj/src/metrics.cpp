#include "foglb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace foglb::metrics {

double node_utilization(double busy_time, double horizon) {
  if (horizon <= 0.0) throw MetricsError("utilization horizon must be > 0");
  return busy_time / horizon;
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

RunSummary summarize_run(const EventLog& log) {
  RunSummary s;
  s.generated_jobs = log.jobs.size();
  s.control_msg_count = log.control_msgs;
  s.observation_msg_count = log.observation_msgs;
  s.decision_steps = log.agents;

  // Waiting delay is queue wait at the fog node: service start minus
  // enqueue. Jobs that completed service contribute.
  double wait_sum = 0.0;
  std::uint64_t wait_n = 0;
  std::map<int, std::pair<double, std::uint64_t>> node_waits;
  for (const auto& n : log.fog_nodes) node_waits[n.node_id] = {0.0, 0};

  double exec_sum = 0.0;
  std::uint64_t exec_n = 0;
  std::array<double, workload::kNumCategories> exec_sum_cat{};
  std::array<std::uint64_t, workload::kNumCategories> exec_n_cat{};

  for (const auto& j : log.jobs) {
    if (j.t_service_end >= 0.0) {
      double w = j.t_service_start - j.t_enqueued;
      wait_sum += w;
      ++wait_n;
      auto it = node_waits.find(j.fog);
      if (it != node_waits.end()) {
        it->second.first += w;
        ++it->second.second;
      }
    }
    if (j.t_response_at_ap >= 0.0) {
      double d = j.t_response_at_ap - j.t_generated;
      exec_sum += d;
      ++exec_n;
      exec_sum_cat[j.category] += d;
      ++exec_n_cat[j.category];
    } else {
      ++s.censored_jobs;
    }
  }
  if (wait_n == 0) {
    throw NoCompletedJobsError("no job completed service in this run");
  }
  s.avg_wait = wait_sum / static_cast<double>(wait_n);
  s.completed_jobs = exec_n;

  // Across-node dispersion: per-node mean waits; a fog node that served
  // nothing waited nothing.
  std::vector<double> per_node_wait;
  std::vector<double> per_node_util;
  for (const auto& n : log.fog_nodes) {
    auto [sum, cnt] = node_waits[n.node_id];
    per_node_wait.push_back(cnt > 0 ? sum / static_cast<double>(cnt) : 0.0);
    per_node_util.push_back(node_utilization(n.busy_time, log.horizon));
  }
  s.std_wait_across_nodes = population_std(per_node_wait);
  s.std_utilization_across_nodes = population_std(per_node_util);

  s.avg_execution_delay =
      exec_n > 0 ? exec_sum / static_cast<double>(exec_n) : -1.0;
  for (int c = 0; c < workload::kNumCategories; ++c) {
    s.avg_execution_delay_by_category[c] =
        exec_n_cat[c] > 0 ? exec_sum_cat[c] / static_cast<double>(exec_n_cat[c])
                          : -1.0;
  }
  return s;
}

Aggregate aggregate(std::span<const double> values) {
  if (values.size() < 2) {
    throw TooFewRunsError("aggregation needs at least 2 runs");
  }
  std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));

  boost::math::students_t dist(static_cast<double>(n - 1));
  double t = boost::math::quantile(dist, 0.975);
  Aggregate a;
  a.mean = mean;
  a.ci_half_width = t * sd / std::sqrt(static_cast<double>(n));
  return a;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string event_log_to_text(const EventLog& log) {
  std::ostringstream out;
  out << "foglb-eventlog v1\n";
  out << "horizon " << format_double(log.horizon) << '\n';
  out << "counters " << log.control_msgs << ' ' << log.observation_msgs << '\n';
  for (const auto& a : log.agents) {
    out << "agent " << a.agent_id << ' ' << a.decision_steps << '\n';
  }
  for (const auto& n : log.fog_nodes) {
    out << "node " << n.node_id << ' ' << format_double(n.busy_time) << '\n';
  }
  for (const auto& j : log.jobs) {
    out << "job " << j.job_id << ' ' << j.source_ap << ' ' << j.category << ' '
        << j.fog << ' ' << format_double(j.t_generated) << ' '
        << format_double(j.t_dispatched) << ' ' << format_double(j.t_enqueued)
        << ' ' << format_double(j.t_service_start) << ' '
        << format_double(j.t_service_end) << ' '
        << format_double(j.t_response_at_ap) << '\n';
  }
  out << "end\n";
  return out.str();
}

EventLog event_log_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  in >> word;
  if (word != "foglb-eventlog") throw MetricsError("not a foglb event log");
  in >> word;
  if (word != "v1") throw MetricsError("unsupported event log version");
  EventLog log;
  while (in >> word) {
    if (word == "end") break;
    if (word == "horizon") {
      in >> word;
      log.horizon = std::strtod(word.c_str(), nullptr);
    } else if (word == "counters") {
      in >> log.control_msgs >> log.observation_msgs;
    } else if (word == "agent") {
      AgentRecord a;
      in >> a.agent_id >> a.decision_steps;
      log.agents.push_back(a);
    } else if (word == "node") {
      NodeRecord n;
      in >> n.node_id >> word;
      n.busy_time = std::strtod(word.c_str(), nullptr);
      log.fog_nodes.push_back(n);
    } else if (word == "job") {
      JobRecord j;
      in >> j.job_id >> j.source_ap >> j.category >> j.fog;
      double* fields[6] = {&j.t_generated,     &j.t_dispatched,
                           &j.t_enqueued,      &j.t_service_start,
                           &j.t_service_end,   &j.t_response_at_ap};
      for (double* f : fields) {
        in >> word;
        *f = std::strtod(word.c_str(), nullptr);
      }
      log.jobs.push_back(j);
    } else {
      throw MetricsError("unknown event log record: " + word);
    }
  }
  return log;
}

void save_event_log(const EventLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MetricsError("cannot write " + path);
  out << event_log_to_text(log);
}

EventLog load_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MetricsError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return event_log_from_text(ss.str());
}

}  // namespace foglb::metrics
