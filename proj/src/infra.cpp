#include "edgeprivsim/infra.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace edgeprivsim {

std::string_view to_string(Layer layer) {
  return layer == Layer::EdgeServer ? "edge-server" : "edge-device";
}

Layer parse_layer(std::string_view text) {
  if (text == "edge-server") return Layer::EdgeServer;
  if (text == "edge-device") return Layer::EdgeDevice;
  throw ConfigError("", fmt::format("unknown layer '{}'", text));
}

void NodeSpec::validate() const {
  const std::string where = fmt::format("node '{}'", name);
  if (cores < 1) throw ConfigError(where, "cores must be >= 1");
  if (!(memory_mb > 0.0)) throw ConfigError(where, "memory must be > 0");
  if (!(p_static >= 0.0) || !(p_static <= p_max)) {
    throw ConfigError(where, "power must satisfy 0 <= p_static <= p_max");
  }
}

void LinkSpec::validate() const {
  const std::string where = fmt::format("link '{}'", name);
  if (!(bandwidth_mbps > 0.0)) throw ConfigError(where, "bandwidth must be > 0");
  if (!(base_latency_s >= 0.0)) throw ConfigError(where, "base latency must be >= 0");
  if (a == b) throw ConfigError(where, "endpoints must be distinct");
}

NodeId Topology::add_node(NodeSpec spec) {
  spec.id = NodeId{static_cast<std::uint32_t>(nodes_.size())};
  spec.validate();
  nodes_.push_back(std::move(spec));
  return nodes_.back().id;
}

NodeId Topology::add_node(std::string name, const DeviceClass& cls) {
  NodeSpec spec;
  spec.name = std::move(name);
  spec.layer = cls.layer;
  spec.device_class = cls.name;
  spec.cores = cls.cores;
  spec.memory_mb = cls.memory_mb;
  spec.p_max = cls.p_max;
  spec.p_static = cls.p_static;
  return add_node(std::move(spec));
}

void Topology::add_link(LinkSpec link) {
  link.validate();
  if (link.a.value >= nodes_.size() || link.b.value >= nodes_.size()) {
    throw ConfigError(fmt::format("link '{}'", link.name), "endpoint does not name a node");
  }
  links_.push_back(std::move(link));
}

void Topology::set_all_bandwidths(double mbps) {
  for (auto& l : links_) l.bandwidth_mbps = mbps;
  if (default_link_) default_link_->bandwidth_mbps = mbps;
}

const NodeSpec& Topology::node(NodeId id) const {
  if (id.value >= nodes_.size()) throw std::out_of_range(fmt::format("no node with id {}", id.value));
  return nodes_[id.value];
}

std::vector<NodeId> Topology::servers() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_)
    if (n.layer == Layer::EdgeServer) out.push_back(n.id);
  return out;
}

std::vector<NodeId> Topology::devices() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_)
    if (n.layer == Layer::EdgeDevice) out.push_back(n.id);
  return out;
}

LinkSpec Topology::link_between(NodeId x, NodeId y) const {
  for (const auto& l : links_)
    if (l.connects(x, y)) return l;
  if (default_link_) {
    return LinkSpec{fmt::format("{}<->{}", node(x).name, node(y).name), x, y,
                    default_link_->bandwidth_mbps, default_link_->base_latency_s};
  }
  throw ConfigError("topology.links",
                    fmt::format("no link between '{}' and '{}'", node(x).name, node(y).name));
}

std::vector<DeviceClass> default_device_classes() {
  return {
      {"desktop-xeon", Layer::EdgeServer, 16, 32768.0, 150.0, 4.5},
      {"intel-nuc", Layer::EdgeDevice, 8, 8192.0, 32.0, 6.0},
      {"jetson-agx", Layer::EdgeDevice, 8, 32768.0, 11.6, 2.75},
      {"raspberry-pi-5", Layer::EdgeDevice, 4, 4096.0, 10.0, 0.5},
  };
}

Topology default_topology(double bandwidth_mbps) {
  const auto classes = default_device_classes();
  Topology topo;
  for (int i = 0; i < 4; ++i) topo.add_node(fmt::format("server-{}", i), classes[0]);
  for (int i = 0; i < 12; ++i) topo.add_node(fmt::format("device-{}", i), classes[1 + i % 3]);
  topo.set_default_link(LinkDefaults{bandwidth_mbps, 0.0});
  return topo;
}

Infrastructure::Infrastructure(const Topology& topology)
    : topology_(&topology),
      states_(topology.nodes().size()),
      exec_queues_(topology.nodes().size()),
      admit_queues_(topology.nodes().size()) {}

std::deque<TicketId>& Infrastructure::queue_for(NodeId node, QueueClass qc) {
  return qc == QueueClass::Execution ? exec_queues_.at(node.value) : admit_queues_.at(node.value);
}

const std::deque<TicketId>& Infrastructure::queue_for(NodeId node, QueueClass qc) const {
  return qc == QueueClass::Execution ? exec_queues_.at(node.value) : admit_queues_.at(node.value);
}

AcquireResult Infrastructure::acquire(NodeId node, int cores, double memory_mb, SimTime at) {
  const ResourceClaim claim{node, cores, memory_mb};
  return acquire_all(std::span<const ResourceClaim>(&claim, 1), at);
}

AcquireResult Infrastructure::acquire_all(std::span<const ResourceClaim> claims, SimTime at) {
  if (claims.empty()) throw std::invalid_argument("acquire with no claims");
  Ticket ticket;
  for (const auto& c : claims) {
    const NodeSpec& spec = topology_->node(c.node);
    if (c.cores < 0 || c.memory_mb < 0.0) throw std::invalid_argument("negative resource claim");
    auto it = std::find_if(ticket.claims.begin(), ticket.claims.end(),
                           [&](const ResourceClaim& x) { return x.node == c.node; });
    if (it == ticket.claims.end()) {
      ticket.claims.push_back(c);
      it = std::prev(ticket.claims.end());
    } else {
      it->cores += c.cores;
      it->memory_mb += c.memory_mb;
    }
    if (it->cores > spec.cores || it->memory_mb > spec.memory_mb) {
      throw UnschedulableError(fmt::format("claim of {} cores / {} MB exceeds capacity of '{}' ({} cores / {} MB)",
                                           it->cores, it->memory_mb, spec.name, spec.cores, spec.memory_mb));
    }
  }
  const bool any_cores = std::any_of(ticket.claims.begin(), ticket.claims.end(),
                                     [](const ResourceClaim& c) { return c.cores > 0; });
  ticket.queue = any_cores ? QueueClass::Execution : QueueClass::Admission;

  const TicketId id = next_ticket_++;
  for (const auto& c : ticket.claims) queue_for(c.node, ticket.queue).push_back(id);
  tickets_.emplace(id, std::move(ticket));
  waiting_.insert(id);

  const auto granted = drain(at);
  // Only the newcomer can be unblocked by an acquire; nothing else changed.
  if (!granted.empty() && (granted.size() != 1 || granted.front() != id)) {
    throw std::logic_error("acquire granted an unrelated ticket");
  }
  return AcquireResult{id, !granted.empty()};
}

std::vector<TicketId> Infrastructure::release(TicketId id, SimTime at) {
  auto it = tickets_.find(id);
  if (it == tickets_.end() || !it->second.granted) {
    throw std::logic_error(fmt::format("release of ticket {} that is not held", id));
  }
  for (const auto& c : it->second.claims) {
    record_change(c.node, at);
    NodeState& st = states_[c.node.value];
    st.busy_cores -= c.cores;
    st.busy_memory_mb -= c.memory_mb;
    if (std::abs(st.busy_memory_mb) < 1e-9) st.busy_memory_mb = 0.0;
    if (c.cores > 0) --st.tasks;
    st.released_cores += static_cast<std::uint64_t>(c.cores);
  }
  tickets_.erase(it);
  return drain(at);
}

bool Infrastructure::is_granted(TicketId id) const {
  auto it = tickets_.find(id);
  return it != tickets_.end() && it->second.granted;
}

bool Infrastructure::fits(const Ticket& t) const {
  for (const auto& c : t.claims) {
    const NodeSpec& spec = topology_->node(c.node);
    const NodeState& st = states_[c.node.value];
    if (st.busy_cores + c.cores > spec.cores) return false;
    if (st.busy_memory_mb + c.memory_mb > spec.memory_mb + 1e-9) return false;
  }
  return true;
}

bool Infrastructure::heads_all_queues(TicketId id, const Ticket& t) const {
  for (const auto& c : t.claims) {
    const auto& q = queue_for(c.node, t.queue);
    if (q.empty() || q.front() != id) return false;
  }
  return true;
}

void Infrastructure::grant(TicketId /*id*/, Ticket& t, SimTime at) {
  for (const auto& c : t.claims) {
    queue_for(c.node, t.queue).pop_front();
    record_change(c.node, at);
    NodeState& st = states_[c.node.value];
    st.busy_cores += c.cores;
    st.busy_memory_mb += c.memory_mb;
    if (c.cores > 0) ++st.tasks;
    st.granted_cores += static_cast<std::uint64_t>(c.cores);
  }
  t.granted = true;
}

std::vector<TicketId> Infrastructure::drain(SimTime at) {
  std::vector<TicketId> granted;
  bool progress = true;
  while (progress) {
    progress = false;
    for (TicketId id : waiting_) {
      Ticket& t = tickets_.at(id);
      if (heads_all_queues(id, t) && fits(t)) {
        grant(id, t, at);
        granted.push_back(id);
        waiting_.erase(id);
        progress = true;
        break;
      }
    }
  }
  return granted;
}

void Infrastructure::record_change(NodeId node, SimTime at) {
  NodeState& st = states_.at(node.value);
  if (at < st.last_change) {
    throw CausalityError(fmt::format("occupancy change at t={} precedes t={} on node {}", at,
                                     st.last_change, node.value));
  }
  if (at == st.last_change) return;
  if (!st.history.empty()) {
    auto& last = st.history.back();
    if (last.end == st.last_change && last.busy_cores == st.busy_cores && last.tasks == st.tasks) {
      last.end = at;
      st.last_change = at;
      return;
    }
  }
  st.history.push_back({st.last_change, at, st.busy_cores, st.tasks});
  st.last_change = at;
}

double Infrastructure::utilization(NodeId node, SimTime t) const {
  const NodeState& st = states_.at(node.value);
  const double cores = topology_->node(node).cores;
  if (t < 0.0) throw std::out_of_range("utilization queried before t=0");
  if (t >= st.last_change) return st.busy_cores / cores;
  auto it = std::upper_bound(st.history.begin(), st.history.end(), t,
                             [](SimTime x, const UtilizationInterval& iv) { return x < iv.end; });
  return it == st.history.end() ? st.busy_cores / cores : it->busy_cores / cores;
}

void Infrastructure::finalize(SimTime horizon) {
  for (std::size_t i = 0; i < states_.size(); ++i) record_change(NodeId{static_cast<std::uint32_t>(i)}, horizon);
}

}  // namespace edgeprivsim
