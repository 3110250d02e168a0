#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace foglb {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PastEventError : SimError {
  using SimError::SimError;
};

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TooSmallError : TopologyError {
  using TopologyError::TopologyError;
};
struct DisconnectedError : TopologyError {
  using TopologyError::TopologyError;
};
struct InfeasibleSplitError : TopologyError {
  using TopologyError::TopologyError;
};
struct UncategorizableEdgeError : TopologyError {
  using TopologyError::TopologyError;
};
struct UncoveredApError : TopologyError {
  using TopologyError::TopologyError;
};
struct EmptyCandidateSetError : TopologyError {
  using TopologyError::TopologyError;
};

struct LearningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatchError : LearningError {
  using LearningError::LearningError;
};
struct EmptyBufferError : LearningError {
  using LearningError::LearningError;
};
struct WindowNotFullError : LearningError {
  using LearningError::LearningError;
};

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoCompletedJobsError : MetricsError {
  using MetricsError::MetricsError;
};
struct TooFewRunsError : MetricsError {
  using MetricsError::MetricsError;
};

// Carries field-level diagnostics from scenario validation.
struct ConfigInvalidError : std::runtime_error {
  explicit ConfigInvalidError(std::vector<std::string> diags)
      : std::runtime_error(join(diags)), diagnostics(std::move(diags)) {}

  std::vector<std::string> diagnostics;

 private:
  static std::string join(const std::vector<std::string>& diags) {
    std::string out = "invalid scenario:";
    for (const auto& d : diags) {
      out += "\n  - " + d;
    }
    return out;
  }
};

}  // namespace foglb
