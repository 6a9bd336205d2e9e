#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgeprivsim/sim_engine.hpp"

namespace edgeprivsim {

struct NodeId {
  std::uint32_t value = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class Layer : std::uint8_t { EdgeServer, EdgeDevice };

std::string_view to_string(Layer layer);
Layer parse_layer(std::string_view text);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Raised when a claim can never be satisfied by the node it targets.
class UnschedulableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hardware profile shared by all nodes of one device class.
struct DeviceClass {
  std::string name;
  Layer layer = Layer::EdgeDevice;
  int cores = 1;
  double memory_mb = 0.0;
  double p_max = 0.0;     // watts
  double p_static = 0.0;  // watts

  friend bool operator==(const DeviceClass&, const DeviceClass&) = default;
};

struct NodeSpec {
  NodeId id;
  std::string name;
  Layer layer = Layer::EdgeDevice;
  std::string device_class;
  int cores = 1;
  double memory_mb = 0.0;
  double p_max = 0.0;
  double p_static = 0.0;

  /// Throws ConfigError when cores < 1, memory <= 0 or power bounds are inverted.
  void validate() const;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct LinkSpec {
  std::string name;
  NodeId a;
  NodeId b;
  double bandwidth_mbps = 0.0;
  double base_latency_s = 0.0;

  void validate() const;
  bool connects(NodeId x, NodeId y) const { return (a == x && b == y) || (a == y && b == x); }

  friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
};

/// Parameters of the implicit link used between any node pair lacking an explicit link.
struct LinkDefaults {
  double bandwidth_mbps = 0.0;
  double base_latency_s = 0.0;
  friend bool operator==(const LinkDefaults&, const LinkDefaults&) = default;
};

class Topology {
 public:
  NodeId add_node(NodeSpec spec);
  NodeId add_node(std::string name, const DeviceClass& cls);
  void add_link(LinkSpec link);
  void set_default_link(std::optional<LinkDefaults> defaults) { default_link_ = defaults; }
  /// Rewrites the bandwidth of every explicit link and of the default link.
  void set_all_bandwidths(double mbps);

  const NodeSpec& node(NodeId id) const;
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<LinkSpec>& links() const { return links_; }
  const std::optional<LinkDefaults>& default_link() const { return default_link_; }

  std::vector<NodeId> servers() const;
  std::vector<NodeId> devices() const;

  /// Explicit link between two nodes, or one synthesized from the defaults.
  /// Throws ConfigError when neither exists.
  LinkSpec link_between(NodeId x, NodeId y) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::vector<NodeSpec> nodes_;
  std::vector<LinkSpec> links_;
  std::optional<LinkDefaults> default_link_;
};

/// Desktop edge server and the three edge-device classes used by the default topology.
std::vector<DeviceClass> default_device_classes();

/// Four 16-core edge servers and twelve devices assigned round-robin over
/// intel-nuc, jetson-agx, raspberry-pi-5, all joined by links of the given bandwidth.
Topology default_topology(double bandwidth_mbps = 500.0);

struct UtilizationInterval {
  SimTime start = 0.0;
  SimTime end = 0.0;
  int busy_cores = 0;
  int tasks = 0;  // core-holding tickets resident on the node
};

struct NodeState {
  int busy_cores = 0;
  double busy_memory_mb = 0.0;
  int tasks = 0;
  std::uint64_t granted_cores = 0;
  std::uint64_t released_cores = 0;
  SimTime last_change = 0.0;
  std::vector<UtilizationInterval> history;
};

struct ResourceClaim {
  NodeId node;
  int cores = 0;
  double memory_mb = 0.0;
};

using TicketId = std::uint64_t;

struct AcquireResult {
  TicketId ticket = 0;
  bool granted = false;
};

/// Occupancy of every node over a simulation run.
///
/// Each node has two FIFO wait queues: one for core-holding tickets
/// (stage execution) and one for memory-only tickets (admission). A ticket
/// may span several nodes; it is granted all-or-nothing once it heads the
/// matching queue on every node it names and all claims fit. Ticket ids are
/// global and monotone, so the oldest waiting ticket heads every queue it
/// is in and multi-node tickets cannot deadlock each other.
class Infrastructure {
 public:
  explicit Infrastructure(const Topology& topology);

  AcquireResult acquire(NodeId node, int cores, double memory_mb, SimTime at);
  AcquireResult acquire_all(std::span<const ResourceClaim> claims, SimTime at);

  /// Releases a granted ticket. Returns tickets granted as a consequence, in id order.
  std::vector<TicketId> release(TicketId ticket, SimTime at);

  bool is_granted(TicketId ticket) const;
  std::size_t waiting() const { return waiting_.size(); }

  double utilization(NodeId node, SimTime t) const;
  const NodeState& state(NodeId node) const { return states_.at(node.value); }
  const Topology& topology() const { return *topology_; }

  /// Closes every node's history at the horizon.
  void finalize(SimTime horizon);

 private:
  enum class QueueClass : std::uint8_t { Execution, Admission };

  struct Ticket {
    std::vector<ResourceClaim> claims;
    QueueClass queue = QueueClass::Execution;
    bool granted = false;
  };

  bool fits(const Ticket& t) const;
  bool heads_all_queues(TicketId id, const Ticket& t) const;
  void grant(TicketId id, Ticket& t, SimTime at);
  std::vector<TicketId> drain(SimTime at);
  void record_change(NodeId node, SimTime at);
  std::deque<TicketId>& queue_for(NodeId node, QueueClass qc);
  const std::deque<TicketId>& queue_for(NodeId node, QueueClass qc) const;

  const Topology* topology_;
  std::vector<NodeState> states_;
  std::vector<std::deque<TicketId>> exec_queues_;
  std::vector<std::deque<TicketId>> admit_queues_;
  std::map<TicketId, Ticket> tickets_;
  std::set<TicketId> waiting_;
  TicketId next_ticket_ = 1;
};

}  // namespace edgeprivsim
