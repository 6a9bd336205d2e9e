#include "edgeprivsim/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include <fmt/core.h>

#include "edgeprivsim/io.hpp"

namespace edgeprivsim {

namespace {

std::size_t draw_mix(const std::vector<MixEntry>& mix, RngStream& rng) {
  double total = 0.0;
  for (const auto& e : mix) total += e.weight;
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    acc += mix[i].weight;
    if (u < acc) return i;
  }
  return mix.size() - 1;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const TraceTable& table, bool log_events) {
  RunResult result;
  result.scenario = scenario;
  result.topology = build_topology(scenario);
  const Topology& topo = result.topology;
  validate_references(scenario, topo, table);

  const Workload& w = scenario.workload;
  std::map<Technique, StagePlan> plans;
  for (const auto& e : w.mix) {
    if (!plans.count(e.technique)) {
      const int parties = e.technique == Technique::Smc ? w.smc_parties : 1;
      plans.emplace(e.technique, build_plan(e.technique, parties, topo, plan_options(w)));
    }
  }

  ExecutorOptions opts = executor_options(scenario);
  opts.log_events = log_events;
  PipelineExecutor exec(topo, table, scenario.scheduler, opts);
  const auto devices = topo.devices();
  std::uint64_t issued = 0;

  auto submit = [&](std::uint32_t user, std::uint32_t seq, SimTime at) {
    RngStream rng(scenario.seed, fmt::format("mix/u{}/r{}", user, seq));
    const MixEntry& e = w.mix[draw_mix(w.mix, rng)];
    RequestSpec spec;
    spec.user = user;
    spec.user_seq = seq;
    spec.plan = &plans.at(e.technique);
    spec.model = e.model;
    spec.dataset = e.dataset;
    spec.origin = devices[user % devices.size()];
    exec.submit(std::move(spec), at);
    ++issued;
  };

  exec.on_completion([&](const RequestRecord& r) {
    if (issued < w.total_requests) submit(r.user, r.user_seq + 1, r.completed);
  });
  for (std::uint32_t u = 0; u < w.users; ++u) submit(u, 0, 0.0);

  result.makespan = exec.run();
  result.records = exec.records();
  result.ledger = build_energy_ledger(exec.infrastructure(), result.records, result.makespan);
  result.summary = summarize_run(result.records, result.ledger, result.makespan);
  std::vector<double> totals;
  for (const auto& r : result.records) {
    if (r.ok()) totals.push_back(r.breakdown.total);
  }
  if (!totals.empty()) result.distribution = export_distribution(totals, scenario.histogram_bins);
  if (log_events) result.event_log = exec.events().log();
  return result;
}

RunResult run_scenario(const Scenario& scenario, bool log_events) {
  const TraceTable table = build_trace_table(scenario);
  return run_scenario(scenario, table, log_events);
}

nlohmann::ordered_json summary_json(const RunResult& result) {
  nlohmann::ordered_json j;
  j["scenario"] = result.scenario.name;
  j["seed"] = result.scenario.seed;
  j["users"] = result.scenario.workload.users;
  j["total_requests"] = result.scenario.workload.total_requests;
  const auto body = to_json(result.summary);
  for (const auto& [k, v] : body.items()) j[k] = v;
  std::string first_error;
  for (const auto& r : result.records) {
    if (!r.ok()) {
      first_error = r.error;
      break;
    }
  }
  if (!first_error.empty()) j["first_error"] = first_error;
  return j;
}

void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir) {
  write_file_atomic(dir / "breakdown.csv", breakdown_csv(result.records));
  write_file_atomic(dir / "summary.json", summary_json(result).dump(2) + "\n");
  write_file_atomic(dir / "distribution.csv",
                    result.distribution ? distribution_csv(*result.distribution) : "kind,x_low,x_high,value\n");
  write_file_atomic(dir / "energy.csv", energy_csv(result.topology, result.ledger));
}

std::string SweepPoint::label() const {
  std::vector<std::string> parts;
  if (users) parts.push_back(fmt::format("users-{}", *users));
  if (bandwidth) parts.push_back(fmt::format("bandwidth-{}", format_number(*bandwidth)));
  if (parties) parts.push_back(fmt::format("parties-{}", *parties));
  if (technique) parts.push_back(fmt::format("technique-{}", to_string(*technique)));
  if (seed) parts.push_back(fmt::format("seed-{}", *seed));
  if (parts.empty()) return "run";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "_" + parts[i];
  return out;
}

Scenario SweepPoint::apply(Scenario base) const {
  if (users) override_users(base, *users);
  if (bandwidth) override_bandwidth(base, *bandwidth);
  if (parties) override_parties(base, *parties);
  if (technique) override_technique(base, *technique);
  if (seed) base.seed = *seed;
  return base;
}

std::vector<SweepPoint> expand(const SweepAxes& axes) {
  std::vector<SweepPoint> points{SweepPoint{}};
  auto cross = [&points](const auto& values, auto setter) {
    if (values.empty()) return;
    std::vector<SweepPoint> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        SweepPoint q = p;
        setter(q, v);
        next.push_back(q);
      }
    }
    points = std::move(next);
  };
  cross(axes.users, [](SweepPoint& p, std::uint32_t v) { p.users = v; });
  cross(axes.bandwidth, [](SweepPoint& p, double v) { p.bandwidth = v; });
  cross(axes.parties, [](SweepPoint& p, int v) { p.parties = v; });
  cross(axes.techniques, [](SweepPoint& p, Technique v) { p.technique = v; });
  cross(axes.seeds, [](SweepPoint& p, std::uint64_t v) { p.seed = v; });
  return points;
}

std::vector<SweepOutcome> run_sweep(const Scenario& base, const SweepAxes& axes, const std::filesystem::path& out_dir,
                                    unsigned threads) {
  const auto points = expand(axes);
  std::vector<SweepOutcome> outcomes(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      SweepOutcome& out = outcomes[i];
      out.point = points[i];
      try {
        const RunResult r = run_scenario(points[i].apply(base));
        write_run_artifacts(r, out_dir / points[i].label());
        out.summary = r.summary;
        out.ok = r.summary.failed == 0;
        if (!out.ok) out.error = fmt::format("{} requests failed", r.summary.failed);
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(points.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  write_file_atomic(out_dir / "sweep.csv", sweep_csv(outcomes));
  return outcomes;
}

std::string sweep_csv(const std::vector<SweepOutcome>& outcomes) {
  std::string out =
      "point,users,bandwidth,parties,technique,seed,status,requests,failed,mean_total,mean_queuing,"
      "mean_communication,p95_total,energy_wh_per_inference,makespan,error\n";
  auto opt = [](const auto& v, auto fn) { return v ? fn(*v) : std::string(); };
  for (const auto& o : outcomes) {
    const auto& p = o.point;
    const auto& s = o.summary.overall;
    std::string err = o.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", p.label(),
        opt(p.users, [](auto v) { return std::to_string(v); }), opt(p.bandwidth, [](auto v) { return format_number(v); }),
        opt(p.parties, [](auto v) { return std::to_string(v); }),
        opt(p.technique, [](auto v) { return std::string(to_string(v)); }),
        opt(p.seed, [](auto v) { return std::to_string(v); }), o.ok ? "ok" : "failed", s.requests, o.summary.failed,
        format_number(s.mean.total), format_number(s.mean.queuing), format_number(s.mean.communication),
        format_number(s.p95), format_number(s.energy_wh_per_inference), format_number(o.summary.makespan), err);
  }
  return out;
}

}  // namespace edgeprivsim
