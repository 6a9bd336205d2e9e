#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "edgeprivsim/metrics.hpp"
#include "edgeprivsim/pipeline.hpp"

using namespace edgeprivsim;

namespace {

TraceSeries series(Technique t, StageKind s, const std::string& cls, std::vector<double> values) {
  return TraceSeries{TraceKey{t, "alexnet", "ecg5000", cls, s}, unit_for(s), std::move(values)};
}

// Jittered stage durations so contention patterns vary with the seed.
TraceTable random_table(RngStream& rng) {
  auto draw = [&](double scale) {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(scale * (0.5 + rng.uniform01()));
    return v;
  };
  TraceTable t;
  for (const char* dev : {"intel-nuc", "jetson-agx", "raspberry-pi-5"}) {
    t.insert(series(Technique::Dp, StageKind::Preprocess, dev, draw(5.0)));
    t.insert(series(Technique::Fhe, StageKind::Encrypt, dev, draw(300.0)));
    t.insert(series(Technique::Fhe, StageKind::Decrypt, dev, draw(20.0)));
  }
  t.insert(series(Technique::Dp, StageKind::Inference, "desktop-xeon", draw(40.0)));
  t.insert(series(Technique::Fhe, StageKind::Inference, "desktop-xeon", draw(5000.0)));
  t.insert(series(Technique::Smc, StageKind::Encrypt, "desktop-xeon", draw(150.0)));
  t.insert(series(Technique::Smc, StageKind::Inference, "desktop-xeon", draw(2000.0)));
  t.insert(series(Technique::Smc, StageKind::CommBytes, "desktop-xeon", draw(1e7)));
  return t;
}

struct Run {
  std::vector<RequestRecord> records;
  EnergyLedger ledger;
  SimTime horizon = 0.0;
};

Run random_run(std::uint64_t seed, const Topology& topo, const TraceTable& table) {
  RngStream rng(seed, "workload");
  PlanOptions popt;
  popt.inference_cores = 1 + static_cast<int>(rng.uniform_index(4));
  const std::vector<StagePlan> plans{build_plan(Technique::Dp, 1, topo, popt), build_plan(Technique::Fhe, 1, topo, popt),
                                     build_plan(Technique::Smc, 2, topo, popt), build_plan(Technique::Smc, 3, topo, popt)};
  ExecutorOptions eopt;
  eopt.seed = seed;
  PipelineExecutor exec(topo, table, {}, eopt);
  for (std::uint32_t i = 0; i < 60; ++i) {
    RequestSpec s;
    s.user = i;
    s.plan = &plans[rng.uniform_index(plans.size())];
    s.model = "alexnet";
    s.dataset = "ecg5000";
    s.origin = topo.devices()[rng.uniform_index(topo.devices().size())];
    exec.submit(s, rng.uniform01() * 20.0);
  }
  Run r;
  r.horizon = exec.run();
  r.records = exec.records();
  r.ledger = build_energy_ledger(exec.infrastructure(), r.records, r.horizon);
  return r;
}

}  // namespace

TEST_CASE("linear power model") {
  const NodeSpec xeon = default_topology().node(NodeId{0});
  CHECK(node_power(xeon, 0.0) == 4.5);
  CHECK(node_power(xeon, 1.0) == 150.0);
  CHECK(node_power(xeon, 0.5) == doctest::Approx(77.25));
}

TEST_CASE("a sole task holding the only core for an hour") {
  Topology t;
  t.add_node("n", DeviceClass{"c", Layer::EdgeDevice, 1, 1024.0, 10.0, 0.5});
  Infrastructure infra(t);
  auto a = infra.acquire(NodeId{0}, 1, 0.0, 0.0);
  infra.release(a.ticket, 3600.0);
  infra.finalize(3600.0);

  RequestRecord rec;
  StageRecord st;
  st.nodes = {NodeId{0}};
  st.cores = 1;
  st.start = 0.0;
  st.end = 3600.0;
  rec.stages.push_back(st);
  CHECK(attribute_energy(rec, infra) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(node_energy_wh(t.node(NodeId{0}), infra.state(NodeId{0}), 0.0, 3600.0) == doctest::Approx(10.0));
  CHECK(idle_static_wh(t.node(NodeId{0}), infra.state(NodeId{0}), 0.0, 3600.0) == 0.0);

  rec.stages[0].end = 0.0;
  CHECK(attribute_energy(rec, infra) == 0.0);
}

TEST_CASE("idle and fully busy server hours") {
  const Topology t = default_topology();
  const NodeId s = t.servers()[0];
  Infrastructure infra(t);
  auto a = infra.acquire(s, 16, 0.0, 3600.0);
  infra.release(a.ticket, 7200.0);
  infra.finalize(7200.0);
  CHECK(node_energy_wh(t.node(s), infra.state(s), 0.0, 3600.0) == doctest::Approx(4.5));
  CHECK(idle_static_wh(t.node(s), infra.state(s), 0.0, 3600.0) == doctest::Approx(4.5));
  CHECK(node_energy_wh(t.node(s), infra.state(s), 3600.0, 7200.0) == doctest::Approx(150.0));
}

TEST_CASE("co-resident tasks split static power and sum to the node energy") {
  Topology t;
  t.add_node("n", DeviceClass{"c", Layer::EdgeServer, 4, 1024.0, 20.0, 4.0});
  Infrastructure infra(t);
  const NodeId n{0};
  auto a = infra.acquire(n, 1, 0.0, 0.0);
  auto b = infra.acquire(n, 3, 0.0, 100.0);
  infra.release(a.ticket, 200.0);
  infra.release(b.ticket, 300.0);
  infra.finalize(300.0);

  auto record = [](SimTime s, SimTime e, int cores) {
    RequestRecord r;
    StageRecord st;
    st.nodes = {NodeId{0}};
    st.cores = cores;
    st.start = s;
    st.end = e;
    r.stages.push_back(st);
    return r;
  };
  const std::vector<RequestRecord> recs{record(0.0, 200.0, 1), record(100.0, 300.0, 3)};
  const auto ledger = build_energy_ledger(infra, recs, 300.0);
  // a: dynamic 4 W * 200 s + static 4 W * 100 s + 2 W * 100 s = 1400 J
  CHECK(ledger.request_wh[0] == doctest::Approx(1400.0 / 3600.0));
  // b: dynamic 12 W * 200 s + static 2 W * 100 s + 4 W * 100 s = 3000 J
  CHECK(ledger.request_wh[1] == doctest::Approx(3000.0 / 3600.0));
  CHECK(ledger.total_idle_static_wh == 0.0);
  CHECK(ledger.total_attributed_wh == doctest::Approx(ledger.total_node_wh).epsilon(1e-12));
}

TEST_CASE("energy conservation on random workloads") {
  const Topology topo = default_topology(100.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RngStream rng(seed, "traces");
    const TraceTable table = random_table(rng);
    const Run r = random_run(seed, topo, table);
    CHECK(r.records.size() == 60);
    CHECK(std::abs(r.ledger.total_attributed_wh + r.ledger.total_idle_static_wh - r.ledger.total_node_wh) <= 1e-6);
    double bound = 0.0;
    for (const auto& n : topo.nodes()) bound += n.p_max * r.horizon / kJoulesPerWattHour;
    CHECK(r.ledger.total_node_wh <= bound);
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      CHECK(r.ledger.request_wh[i] >= 0.0);
      CHECK(r.records[i].energy_wh == doctest::Approx(r.ledger.request_wh[i]));
    }
  }
}

TEST_CASE("node energy is monotone in the window and bounded by its extremes") {
  const Topology topo = default_topology(100.0);
  RngStream rng(17, "traces");
  const TraceTable table = random_table(rng);
  PlanOptions popt;
  const auto plan = build_plan(Technique::Fhe, 1, topo, popt);
  PipelineExecutor exec(topo, table, {}, ExecutorOptions{});
  for (std::uint32_t i = 0; i < 30; ++i) {
    RequestSpec s{i, 0, &plan, "alexnet", "ecg5000", topo.devices()[i % 12]};
    exec.submit(s, static_cast<double>(i));
  }
  const SimTime h = exec.run();
  for (const auto& n : topo.nodes()) {
    const auto& st = exec.infrastructure().state(n.id);
    double prev = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double t1 = h * k / 20.0;
      const double e = node_energy_wh(n, st, 0.0, t1);
      CHECK(e >= prev);
      CHECK(e >= n.p_static * t1 / kJoulesPerWattHour - 1e-12);
      CHECK(e <= n.p_max * t1 / kJoulesPerWattHour + 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("distribution export") {
  SUBCASE("constant sample lands in one bin") {
    const std::vector<double> v(100, 3.0);
    const auto d = export_distribution(v, 10);
    CHECK(d.pdf_mass[0] == 1.0);
    CHECK(std::accumulate(d.pdf_mass.begin() + 1, d.pdf_mass.end(), 0.0) == 0.0);
    CHECK(d.cdf_x == std::vector<double>{3.0});
    CHECK(d.cdf_p == std::vector<double>{1.0});
  }
  SUBCASE("empirical cdf") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto d = export_distribution(v, 4);
    CHECK(d.cdf_at(2.5) == 0.5);
    CHECK(d.cdf_at(0.0) == 0.0);
    CHECK(d.cdf_at(4.0) == 1.0);
    CHECK(std::accumulate(d.pdf_mass.begin(), d.pdf_mass.end(), 0.0) == doctest::Approx(1.0));
  }
  SUBCASE("bimodal sample has two dominant bins") {
    std::vector<double> v;
    for (int i = 0; i < 500; ++i) v.push_back(10.0 + 0.001 * i);
    for (int i = 0; i < 500; ++i) v.push_back(1000.0 + 0.001 * i);
    const auto d = export_distribution(v, 20);
    CHECK(d.pdf_mass.front() == 0.5);
    CHECK(d.pdf_mass.back() == 0.5);
  }
  SUBCASE("cdf is nondecreasing and ends at one") {
    RngStream rng(3, "dist");
    std::vector<double> v;
    for (int i = 0; i < 400; ++i) v.push_back(std::floor(rng.uniform01() * 50.0));
    const auto d = export_distribution(v, 7);
    CHECK(std::is_sorted(d.cdf_p.begin(), d.cdf_p.end()));
    CHECK(d.cdf_p.back() == 1.0);
    CHECK(d.bin_edges.size() == 8);
  }
  CHECK_THROWS_AS(export_distribution(std::vector<double>{}, 5), std::invalid_argument);
  CHECK_THROWS_AS(export_distribution(std::vector<double>{1.0}, 0), std::invalid_argument);
}

TEST_CASE("percentile interpolates linearly") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 4.0);
  CHECK(percentile(v, 50) == doctest::Approx(2.5));
}

TEST_CASE("breakdown csv round-trips") {
  const Topology topo = default_topology(100.0);
  RngStream rng(4, "traces");
  const TraceTable table = random_table(rng);
  const Run r = random_run(4, topo, table);
  const std::string csv = breakdown_csv(r.records);
  const auto parsed = parse_breakdown_csv(csv);
  REQUIRE(parsed.size() == r.records.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].technique == r.records[i].technique);
    CHECK(parsed[i].breakdown.total == r.records[i].breakdown.total);
    CHECK(parsed[i].breakdown.queuing == r.records[i].breakdown.queuing);
    CHECK(parsed[i].energy_wh == r.records[i].energy_wh);
  }
  CHECK(breakdown_csv(parsed) == csv);
}

TEST_CASE("summaries group by technique") {
  const Topology topo = default_topology(100.0);
  RngStream rng(6, "traces");
  const TraceTable table = random_table(rng);
  const Run r = random_run(6, topo, table);
  const auto s = summarize_run(r.records, r.ledger, r.horizon);
  std::size_t total = 0;
  for (const auto& [name, g] : s.by_technique) {
    total += g.requests;
    CHECK(g.p50 <= g.p95);
    CHECK(g.p95 <= g.p99);
  }
  CHECK(total == s.overall.requests);
  CHECK(s.failed == 0);
  const auto j = to_json(s);
  CHECK(j.contains("total_percentiles"));
  CHECK(j["requests"] == 60);
}
