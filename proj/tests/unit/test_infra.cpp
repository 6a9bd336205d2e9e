#include <doctest.h>

#include "edgeprivsim/infra.hpp"
#include "edgeprivsim/sim_engine.hpp"

using namespace edgeprivsim;

namespace {

Topology one_node(int cores, double memory_mb = 4096.0) {
  Topology t;
  t.add_node("n0", DeviceClass{"test", Layer::EdgeServer, cores, memory_mb, 10.0, 0.5});
  return t;
}

}  // namespace

TEST_CASE("node and link specs validate their invariants") {
  NodeSpec n{NodeId{0}, "x", Layer::EdgeDevice, "c", 0, 10.0, 5.0, 1.0};
  CHECK_THROWS_AS(n.validate(), ConfigError);
  n.cores = 1;
  n.p_static = 6.0;
  CHECK_THROWS_AS(n.validate(), ConfigError);
  n.p_static = 1.0;
  n.memory_mb = 0.0;
  CHECK_THROWS_AS(n.validate(), ConfigError);

  LinkSpec l{"l", NodeId{0}, NodeId{0}, 100.0, 0.0};
  CHECK_THROWS_AS(l.validate(), ConfigError);
  l.b = NodeId{1};
  l.bandwidth_mbps = 0.0;
  CHECK_THROWS_AS(l.validate(), ConfigError);
}

TEST_CASE("grant, capacity rejection and FIFO wait") {
  Topology t = one_node(4);
  Infrastructure infra(t);
  const NodeId n{0};

  auto a = infra.acquire(n, 1, 0.0, 0.0);
  CHECK(a.granted);
  CHECK(infra.state(n).busy_cores == 1);

  CHECK_THROWS_AS(infra.acquire(n, 5, 0.0, 0.0), UnschedulableError);
  CHECK_THROWS_AS(infra.acquire(n, 1, 5000.0, 0.0), UnschedulableError);

  auto b = infra.acquire(n, 3, 0.0, 0.0);
  CHECK(b.granted);
  auto c = infra.acquire(n, 1, 0.0, 1.0);
  auto d = infra.acquire(n, 1, 0.0, 1.0);
  CHECK_FALSE(c.granted);
  CHECK_FALSE(d.granted);
  CHECK(infra.waiting() == 2);

  auto woke = infra.release(a.ticket, 2.0);
  CHECK(woke == std::vector<TicketId>{c.ticket});
  woke = infra.release(b.ticket, 3.0);
  CHECK(woke == std::vector<TicketId>{d.ticket});
  CHECK(infra.state(n).busy_cores == 2);
}

TEST_CASE("utilization is the busy-core ratio over time") {
  Topology t = one_node(16);
  Infrastructure infra(t);
  const NodeId n{0};
  CHECK(infra.utilization(n, 0.0) == 0.0);
  auto a = infra.acquire(n, 8, 0.0, 1.0);
  CHECK(infra.utilization(n, 1.5) == doctest::Approx(0.5));
  auto b = infra.acquire(n, 8, 0.0, 2.0);
  CHECK(infra.utilization(n, 2.5) == 1.0);
  infra.release(a.ticket, 3.0);
  infra.release(b.ticket, 4.0);
  infra.finalize(5.0);
  CHECK(infra.utilization(n, 0.5) == 0.0);
  CHECK(infra.utilization(n, 1.5) == doctest::Approx(0.5));
  CHECK(infra.utilization(n, 2.5) == 1.0);
  CHECK(infra.utilization(n, 3.5) == doctest::Approx(0.5));
  CHECK(infra.utilization(n, 4.5) == 0.0);
}

TEST_CASE("multi-node tickets are granted all-or-nothing") {
  Topology t;
  const DeviceClass cls{"c", Layer::EdgeDevice, 1, 1024.0, 5.0, 1.0};
  for (int i = 0; i < 3; ++i) t.add_node("n" + std::to_string(i), cls);
  Infrastructure infra(t);
  auto block = infra.acquire(NodeId{2}, 1, 0.0, 0.0);
  std::vector<ResourceClaim> claims{{NodeId{0}, 1, 0.0}, {NodeId{1}, 1, 0.0}, {NodeId{2}, 1, 0.0}};
  auto joint = infra.acquire_all(claims, 0.0);
  CHECK_FALSE(joint.granted);
  CHECK(infra.state(NodeId{0}).busy_cores == 0);
  CHECK(infra.state(NodeId{1}).busy_cores == 0);
  auto woke = infra.release(block.ticket, 4.0);
  CHECK(woke == std::vector<TicketId>{joint.ticket});
  for (int i = 0; i < 3; ++i) CHECK(infra.state(NodeId{static_cast<std::uint32_t>(i)}).busy_cores == 1);
}

TEST_CASE("memory-only admission never blocks behind core tickets") {
  Topology t = one_node(1, 1024.0);
  Infrastructure infra(t);
  const NodeId n{0};
  auto held = infra.acquire(n, 1, 0.0, 0.0);
  auto waiting = infra.acquire(n, 1, 0.0, 0.0);
  CHECK_FALSE(waiting.granted);
  auto admit = infra.acquire(n, 0, 512.0, 0.0);
  CHECK(admit.granted);
  auto admit2 = infra.acquire(n, 0, 1024.0, 0.0);
  CHECK_FALSE(admit2.granted);
  CHECK(infra.release(admit.ticket, 1.0) == std::vector<TicketId>{admit2.ticket});
  CHECK(infra.release(held.ticket, 2.0) == std::vector<TicketId>{waiting.ticket});
}

TEST_CASE("slot conservation and bounds under a random workload") {
  Topology t = default_topology();
  Infrastructure infra(t);
  RngStream rng(5, "workload");
  std::vector<TicketId> held;
  SimTime now = 0.0;
  std::uint64_t grants = 0;
  for (int step = 0; step < 3000; ++step) {
    now += rng.uniform01();
    if (!held.empty() && rng.uniform01() < 0.5) {
      const auto i = rng.uniform_index(held.size());
      const TicketId tk = held[i];
      held.erase(held.begin() + static_cast<std::ptrdiff_t>(i));
      for (TicketId g : infra.release(tk, now)) held.push_back(g);
    } else {
      const NodeId n{static_cast<std::uint32_t>(rng.uniform_index(t.nodes().size()))};
      const int cores = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(t.node(n).cores)));
      auto r = infra.acquire(n, cores, 0.0, now);
      if (r.granted) held.push_back(r.ticket);
      ++grants;
    }
    for (const auto& node : t.nodes()) {
      const auto& st = infra.state(node.id);
      REQUIRE(st.busy_cores >= 0);
      REQUIRE(st.busy_cores <= node.cores);
      REQUIRE(static_cast<std::int64_t>(st.granted_cores - st.released_cores) == st.busy_cores);
    }
  }
  infra.finalize(now + 1.0);
  for (const auto& node : t.nodes()) {
    const auto& h = infra.state(node.id).history;
    for (std::size_t i = 0; i < h.size(); ++i) {
      CHECK(h[i].start <= h[i].end);
      if (i > 0) CHECK(h[i - 1].end <= h[i].start);
    }
    for (double x = 0.0; x < now; x += now / 50.0) {
      const double u = infra.utilization(node.id, x);
      CHECK(u >= 0.0);
      CHECK(u <= 1.0);
    }
  }
  CHECK(grants > 0);
}

TEST_CASE("default topology matches the simulation parameters table") {
  const Topology t = default_topology();
  CHECK(t.servers().size() == 4);
  CHECK(t.devices().size() == 12);
  for (NodeId s : t.servers()) {
    CHECK(t.node(s).cores == 16);
    CHECK(t.node(s).memory_mb == 32768.0);
    CHECK(t.node(s).p_max == 150.0);
    CHECK(t.node(s).p_static == 4.5);
  }
  const char* expected[] = {"intel-nuc", "jetson-agx", "raspberry-pi-5"};
  for (std::size_t i = 0; i < 12; ++i) CHECK(t.node(t.devices()[i]).device_class == expected[i % 3]);
  CHECK(t.link_between(t.servers()[0], t.devices()[0]).bandwidth_mbps == 500.0);
}

TEST_CASE("links resolve explicitly or from defaults") {
  Topology t = one_node(1);
  t.add_node("n1", DeviceClass{"d", Layer::EdgeDevice, 1, 10.0, 1.0, 0.0});
  CHECK_THROWS_AS(t.link_between(NodeId{0}, NodeId{1}), ConfigError);
  t.set_default_link(LinkDefaults{100.0, 0.01});
  CHECK(t.link_between(NodeId{0}, NodeId{1}).bandwidth_mbps == 100.0);
  t.add_link(LinkSpec{"fast", NodeId{1}, NodeId{0}, 1000.0, 0.0});
  CHECK(t.link_between(NodeId{0}, NodeId{1}).name == "fast");
  t.set_all_bandwidths(250.0);
  CHECK(t.link_between(NodeId{0}, NodeId{1}).bandwidth_mbps == 250.0);
  CHECK(t.default_link()->bandwidth_mbps == 250.0);
}
