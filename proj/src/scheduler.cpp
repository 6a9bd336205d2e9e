#include "edgeprivsim/scheduler.hpp"

#include <algorithm>

#include <fmt/core.h>

namespace edgeprivsim {

std::string_view to_string(PolicyName name) {
  switch (name) {
    case PolicyName::MostAvailable: return "most-available";
    case PolicyName::RoundRobin: return "round-robin";
    case PolicyName::Random: return "random";
  }
  return "?";
}

PolicyName parse_policy_name(std::string_view text) {
  if (text == "most-available") return PolicyName::MostAvailable;
  if (text == "round-robin") return PolicyName::RoundRobin;
  if (text == "random") return PolicyName::Random;
  throw std::invalid_argument(fmt::format("unknown scheduler policy '{}'", text));
}

NodeView view_of(const Infrastructure& infra, NodeId id) {
  const NodeSpec& spec = infra.topology().node(id);
  const NodeState& st = infra.state(id);
  return NodeView{id, spec.cores, spec.memory_mb, st.busy_cores, st.busy_memory_mb};
}

double availability_score(const NodeView& n) {
  return static_cast<double>(n.cores - n.busy_cores) / n.cores + (n.memory_mb - n.busy_memory_mb) / n.memory_mb;
}

NodeId most_available(std::span<const NodeView> candidates) {
  if (candidates.empty()) throw SchedulingError("no candidate nodes");
  const NodeView* best = &candidates.front();
  double best_score = availability_score(*best);
  for (const auto& c : candidates.subspan(1)) {
    const double s = availability_score(c);
    if (s > best_score || (s == best_score && c.id < best->id)) {
      best = &c;
      best_score = s;
    }
  }
  return best->id;
}

Scheduler::Scheduler(SchedulerPolicy policy, std::uint64_t seed)
    : policy_(std::move(policy)), rng_(seed, "scheduler") {}

NodeId Scheduler::select_server(std::span<const NodeView> candidates) {
  if (candidates.empty()) throw SchedulingError("no candidate nodes");
  switch (policy_.name) {
    case PolicyName::MostAvailable:
      return most_available(candidates);
    case PolicyName::RoundRobin:
      return candidates[server_cursor_++ % candidates.size()].id;
    case PolicyName::Random:
      return candidates[rng_.uniform_index(candidates.size())].id;
  }
  throw SchedulingError("unreachable policy");
}

std::vector<NodeId> Scheduler::pick_devices(std::vector<NodeView> devices, int count) {
  std::vector<NodeId> out;
  switch (policy_.name) {
    case PolicyName::MostAvailable: {
      // Stable order: score descending, id ascending.
      std::sort(devices.begin(), devices.end(), [](const NodeView& a, const NodeView& b) {
        const double sa = availability_score(a), sb = availability_score(b);
        return sa != sb ? sa > sb : a.id < b.id;
      });
      for (int i = 0; i < count; ++i) out.push_back(devices[i].id);
      break;
    }
    case PolicyName::RoundRobin:
      for (int i = 0; i < count; ++i) out.push_back(devices[(device_cursor_ + i) % devices.size()].id);
      device_cursor_ += count;
      break;
    case PolicyName::Random:
      for (int i = 0; i < count; ++i) {
        const std::size_t j = i + rng_.uniform_index(devices.size() - i);
        std::swap(devices[i], devices[j]);
        out.push_back(devices[i].id);
      }
      break;
  }
  return out;
}

std::vector<NodeId> Scheduler::select_parties(int n, const Infrastructure& infra) {
  const auto servers = infra.topology().servers();
  const auto devices = infra.topology().devices();
  if (n < 1) throw SchedulingError("party count must be >= 1");
  if (servers.empty() || static_cast<int>(devices.size()) < n - 1) {
    throw SchedulingError(fmt::format("{} parties need one edge server and {} edge devices; topology has {} and {}",
                                      n, n - 1, servers.size(), devices.size()));
  }
  std::vector<NodeView> server_views, device_views;
  for (NodeId id : servers) server_views.push_back(view_of(infra, id));
  for (NodeId id : devices) device_views.push_back(view_of(infra, id));

  std::vector<NodeId> parties{select_server(server_views)};
  const auto rest = pick_devices(std::move(device_views), n - 1);
  parties.insert(parties.end(), rest.begin(), rest.end());
  return parties;
}

}  // namespace edgeprivsim
