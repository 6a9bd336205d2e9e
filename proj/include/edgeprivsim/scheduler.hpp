#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeprivsim/infra.hpp"
#include "edgeprivsim/sim_engine.hpp"

namespace edgeprivsim {

enum class PolicyName : std::uint8_t { MostAvailable, RoundRobin, Random };

std::string_view to_string(PolicyName name);
PolicyName parse_policy_name(std::string_view text);

struct SchedulerPolicy {
  PolicyName name = PolicyName::MostAvailable;
  std::map<std::string, double> parameters;

  friend bool operator==(const SchedulerPolicy&, const SchedulerPolicy&) = default;
};

class SchedulingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Capacity and current occupancy of one candidate node.
struct NodeView {
  NodeId id;
  int cores = 1;
  double memory_mb = 1.0;
  int busy_cores = 0;
  double busy_memory_mb = 0.0;
};

NodeView view_of(const Infrastructure& infra, NodeId id);

/// free_cores/cores + free_memory/memory.
double availability_score(const NodeView& node);

/// Argmax of availability_score; ties go to the smallest node id.
NodeId most_available(std::span<const NodeView> candidates);

/// Placement decisions for requests at the instant they become ready.
class Scheduler {
 public:
  Scheduler(SchedulerPolicy policy, std::uint64_t seed);

  NodeId select_server(std::span<const NodeView> candidates);

  /// Ordered parties: P0 is an edge server, P1..P(n-1) are edge devices.
  std::vector<NodeId> select_parties(int n, const Infrastructure& infra);

  const SchedulerPolicy& policy() const { return policy_; }

 private:
  std::vector<NodeId> pick_devices(std::vector<NodeView> devices, int count);

  SchedulerPolicy policy_;
  RngStream rng_;
  std::size_t server_cursor_ = 0;
  std::size_t device_cursor_ = 0;
};

}  // namespace edgeprivsim
