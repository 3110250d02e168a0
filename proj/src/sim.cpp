#include "foglb/sim.hpp"

#include <algorithm>
#include <string>

namespace foglb::sim {

std::uint64_t EventQueue::schedule(SimTime time, EventKind kind,
                                   std::function<void()> action) {
  if (time < clock_) {
    throw PastEventError("event at t=" + std::to_string(time) +
                         " is before clock t=" + std::to_string(clock_));
  }
  Event ev;
  ev.time = time;
  ev.seq = next_seq_++;
  ev.kind = kind;
  ev.action = std::move(action);
  std::uint64_t seq = ev.seq;
  heap_.push(std::move(ev));
  return seq;
}

void EventQueue::run_until(SimTime t_end) {
  if (t_end < clock_) {
    throw PastEventError("run_until target precedes clock");
  }
  while (!heap_.empty() && heap_.top().time <= t_end) {
    Event ev = heap_.top();
    heap_.pop();
    clock_ = ev.time;
    if (ev.action) ev.action();
  }
  clock_ = t_end;
}

void EventQueue::run_all() {
  while (!heap_.empty()) {
    Event ev = heap_.top();
    heap_.pop();
    clock_ = ev.time;
    if (ev.action) ev.action();
  }
}

QueueStation::QueueStation(int node_id, double ipt, EventQueue* events)
    : node_id_(node_id), ipt_(ipt), events_(events) {}

SimTime QueueStation::service_time(double instructions) {
  double mean = instructions / ipt_;
  if (!stochastic_) return mean;
  return service_rng_.exponential(mean);
}

void QueueStation::enqueue(StationJob job, SimTime now) {
  job.enqueued_at = now;
  backlog_instr_ += job.instructions;
  if (!in_service_) {
    start_service(job, now);
  } else {
    waiting_.push_back(job);
  }
}

double QueueStation::busy_time(SimTime horizon) const {
  double total = busy_accum_;
  if (in_service_ && horizon > current_service_start_) {
    total += std::min(horizon, busy_until_) - current_service_start_;
  }
  return total;
}

void QueueStation::reset() {
  waiting_.clear();
  in_service_.reset();
  busy_until_ = 0.0;
  busy_accum_ = 0.0;
  backlog_instr_ = 0.0;
  ++epoch_;  // pending ServiceComplete events become stale
}

void QueueStation::start_service(StationJob job, SimTime now) {
  job.service_start = now;
  SimTime st = service_time(job.instructions);
  in_service_ = job;
  current_service_start_ = now;
  busy_until_ = now + st;
  std::uint64_t epoch = epoch_;
  events_->schedule(now + st, EventKind::ServiceComplete,
                    [this, epoch]() { complete(epoch, events_->now()); });
}

void QueueStation::complete(std::uint64_t epoch, SimTime now) {
  if (epoch != epoch_ || !in_service_) return;
  StationJob done = *in_service_;
  in_service_.reset();
  busy_accum_ += now - current_service_start_;
  backlog_instr_ -= done.instructions;
  if (!waiting_.empty()) {
    StationJob next = waiting_.front();
    waiting_.pop_front();
    start_service(next, now);
  }
  if (on_complete_) on_complete_(done, now);
}

LinkChannel::LinkChannel(int node_u, int node_v, double bandwidth_mbps,
                         double prop_delay_s)
    : u_(node_u), v_(node_v), bw_bps_(bandwidth_mbps * 1e6), pr_(prop_delay_s) {}

SimTime LinkChannel::peek_arrival(double message_bytes, SimTime now) const {
  SimTime start = std::max(now, tx_free_at_);
  return start + transmit_time(message_bytes) + pr_;
}

SimTime LinkChannel::send(double message_bytes, SimTime now) {
  SimTime start = std::max(now, tx_free_at_);
  SimTime tx_done = start + transmit_time(message_bytes);
  tx_free_at_ = tx_done;
  return tx_done + pr_;
}

}  // namespace foglb::sim
