#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "foglb/errors.hpp"
#include "foglb/rng.hpp"

namespace foglb::sim {

// Simulation seconds. One simulation step is one second; node capabilities
// are instructions per second.
using SimTime = double;

enum class EventKind {
  JobArrival,
  ServiceComplete,
  TransmissionComplete,
  GossipBroadcast,
  ControlMessageDelivered,
  PhaseChange,
};

struct Event {
  SimTime time = 0.0;
  std::uint64_t seq = 0;  // unique per run; breaks ties at equal time
  EventKind kind = EventKind::JobArrival;
  std::function<void()> action;
};

// Strictly ordered event processor. (time, seq) is a total order, so runs
// with identical inputs replay identical traces.
class EventQueue {
 public:
  SimTime now() const { return clock_; }

  std::uint64_t schedule(SimTime time, EventKind kind,
                         std::function<void()> action);

  // Processes every event with time <= t_end in order, then sets the clock
  // to t_end.
  void run_until(SimTime t_end);

  // Processes events until the queue drains (test convenience).
  void run_all();

  bool empty() const { return heap_.empty(); }
  std::size_t pending() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  SimTime clock_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

// One job as seen by a queueing station.
struct StationJob {
  std::uint64_t job_id = 0;
  double instructions = 0.0;
  SimTime enqueued_at = 0.0;
  SimTime service_start = -1.0;
};

// Single-server FIFO queueing station for a compute node. Service is
// deterministic instructions/IPT by default; the stochastic flag draws
// exponential service with that mean (M/M/1 validation only).
class QueueStation {
 public:
  using CompletionHandler =
      std::function<void(const StationJob&, SimTime now)>;

  QueueStation(int node_id, double ipt, EventQueue* events);

  int node_id() const { return node_id_; }
  double ipt() const { return ipt_; }

  void set_completion_handler(CompletionHandler h) { on_complete_ = std::move(h); }
  void set_stochastic_service(Rng rng) {
    stochastic_ = true;
    service_rng_ = rng;
  }

  SimTime service_time(double instructions);

  void enqueue(StationJob job, SimTime now);

  // In-service job plus waiting jobs.
  std::size_t queue_length() const {
    return waiting_.size() + (in_service_ ? 1 : 0);
  }
  // Total instructions sitting at this station (in-service job counted whole).
  double backlog_instructions() const { return backlog_instr_; }

  bool busy() const { return in_service_.has_value(); }
  SimTime busy_until() const { return busy_until_; }

  // Busy seconds accumulated up to `horizon`, including the partially
  // completed in-service job.
  double busy_time(SimTime horizon) const;

  // Drops all queued and in-service work; pending completions become no-ops.
  void reset();

 private:
  void start_service(StationJob job, SimTime now);
  void complete(std::uint64_t epoch, SimTime now);

  int node_id_;
  double ipt_;
  EventQueue* events_;
  CompletionHandler on_complete_;
  std::deque<StationJob> waiting_;
  std::optional<StationJob> in_service_;
  SimTime busy_until_ = 0.0;
  SimTime current_service_start_ = 0.0;
  double busy_accum_ = 0.0;
  double backlog_instr_ = 0.0;
  std::uint64_t epoch_ = 0;
  bool stochastic_ = false;
  Rng service_rng_;
};

// Bidirectional link with a single serialized transmit pipeline. Propagation
// delay is paid once per message; back-to-back messages pipeline through it.
class LinkChannel {
 public:
  LinkChannel(int node_u, int node_v, double bandwidth_mbps,
              double prop_delay_s);

  int node_u() const { return u_; }
  int node_v() const { return v_; }
  double bandwidth_bps() const { return bw_bps_; }
  double prop_delay() const { return pr_; }

  SimTime transmit_time(double message_bytes) const {
    return 8.0 * message_bytes / bw_bps_;
  }

  // Arrival time at the far end if the message is handed over at `now`,
  // without committing channel state.
  SimTime peek_arrival(double message_bytes, SimTime now) const;

  // Commits the transmission and returns the arrival time.
  SimTime send(double message_bytes, SimTime now);

  // PR + transmit only; used for control traffic when contention is off.
  SimTime delay_uncontended(double message_bytes) const {
    return transmit_time(message_bytes) + pr_;
  }

  void reset() { tx_free_at_ = 0.0; }

 private:
  int u_, v_;
  double bw_bps_;
  double pr_;
  SimTime tx_free_at_ = 0.0;
};

// Delay the message would experience if sent now, serialization wait
// included.
inline SimTime transmission_delay(double message_bytes, const LinkChannel& link,
                                  SimTime now = 0.0) {
  return link.peek_arrival(message_bytes, now) - now;
}

}  // namespace foglb::sim
