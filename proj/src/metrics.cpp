#include "edgeprivsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <sstream>

#include <fmt/core.h>

#include "edgeprivsim/io.hpp"

namespace edgeprivsim {

double node_power(const NodeSpec& node, double utilization) {
  return node.p_static + (node.p_max - node.p_static) * utilization;
}

double node_power(const Infrastructure& infra, NodeId node, SimTime t) {
  return node_power(infra.topology().node(node), infra.utilization(node, t));
}

namespace {

double overlap(SimTime a0, SimTime a1, SimTime b0, SimTime b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Visits the history segments of a node clipped to [t0, t1], including the
// still-open segment after the last recorded change.
template <typename Fn>
void for_each_segment(const NodeState& st, SimTime t0, SimTime t1, Fn&& fn) {
  auto it = std::upper_bound(st.history.begin(), st.history.end(), t0,
                             [](SimTime x, const UtilizationInterval& iv) { return x < iv.end; });
  for (; it != st.history.end() && it->start < t1; ++it) {
    const double dt = overlap(it->start, it->end, t0, t1);
    if (dt > 0.0) fn(*it, dt);
  }
  const double tail = overlap(st.last_change, std::numeric_limits<double>::infinity(), t0, t1);
  if (tail > 0.0) fn(UtilizationInterval{st.last_change, t1, st.busy_cores, st.tasks}, tail);
}

}  // namespace

double node_energy_wh(const NodeSpec& node, const NodeState& state, SimTime t0, SimTime t1) {
  double joules = 0.0;
  for_each_segment(state, t0, t1, [&](const UtilizationInterval& iv, double dt) {
    joules += node_power(node, static_cast<double>(iv.busy_cores) / node.cores) * dt;
  });
  return joules / kJoulesPerWattHour;
}

double idle_static_wh(const NodeSpec& node, const NodeState& state, SimTime t0, SimTime t1) {
  double joules = 0.0;
  for_each_segment(state, t0, t1, [&](const UtilizationInterval& iv, double dt) {
    if (iv.tasks == 0) joules += node.p_static * dt;
  });
  return joules / kJoulesPerWattHour;
}

double attribute_energy(const RequestRecord& record, const Infrastructure& infra) {
  double joules = 0.0;
  for (const auto& st : record.stages) {
    if (st.type != StageType::Compute || st.skipped || st.cores == 0) continue;
    const double dt = st.duration();
    if (dt <= 0.0) continue;
    for (NodeId n : st.nodes) {
      const NodeSpec& spec = infra.topology().node(n);
      joules += (spec.p_max - spec.p_static) / spec.cores * st.cores * dt;
      for_each_segment(infra.state(n), st.start, st.end, [&](const UtilizationInterval& iv, double seg) {
        if (iv.tasks > 0) joules += spec.p_static * seg / iv.tasks;
      });
    }
  }
  return joules / kJoulesPerWattHour;
}

EnergyLedger build_energy_ledger(const Infrastructure& infra, std::span<const RequestRecord> records,
                                 SimTime horizon) {
  EnergyLedger ledger;
  for (const auto& node : infra.topology().nodes()) {
    const NodeState& st = infra.state(node.id);
    const double e = node_energy_wh(node, st, 0.0, horizon);
    const double idle = idle_static_wh(node, st, 0.0, horizon);
    ledger.node_wh.push_back(e);
    ledger.node_idle_static_wh.push_back(idle);
    ledger.total_node_wh += e;
    ledger.total_idle_static_wh += idle;
  }
  for (const auto& rec : records) {
    const double e = attribute_energy(rec, infra);
    ledger.request_wh.push_back(e);
    ledger.total_attributed_wh += e;
  }
  return ledger;
}

double DistributionReport::cdf_at(double x) const {
  auto it = std::upper_bound(cdf_x.begin(), cdf_x.end(), x);
  if (it == cdf_x.begin()) return 0.0;
  return cdf_p[static_cast<std::size_t>(std::distance(cdf_x.begin(), it)) - 1];
}

DistributionReport export_distribution(std::span<const double> samples, std::size_t bins) {
  if (samples.empty()) throw std::invalid_argument("distribution of an empty sample");
  if (bins < 1) throw std::invalid_argument("distribution needs at least one bin");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front(), hi = sorted.back();
  const double n = static_cast<double>(sorted.size());

  DistributionReport r;
  r.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    r.bin_edges[i] = hi == lo ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  r.bin_edges.back() = hi;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : sorted) {
    std::size_t b = 0;
    if (hi > lo) {
      b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      b = std::min(b, bins - 1);
    }
    ++counts[b];
  }
  r.pdf_mass.reserve(bins);
  for (auto c : counts) r.pdf_mass.push_back(static_cast<double>(c) / n);

  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    r.cdf_x.push_back(sorted[i]);
    r.cdf_p.push_back(static_cast<double>(i + 1) / n);
  }
  return r;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  return values[lo] + (values[hi] - values[lo]) * (rank - static_cast<double>(lo));
}

GroupSummary summarize(std::span<const RequestRecord> records) {
  GroupSummary s;
  std::vector<double> totals;
  double energy = 0.0;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    ++s.requests;
    s.mean.preprocess += r.breakdown.preprocess;
    s.mean.encryption += r.breakdown.encryption;
    s.mean.inference += r.breakdown.inference;
    s.mean.communication += r.breakdown.communication;
    s.mean.queuing += r.breakdown.queuing;
    s.mean.total += r.breakdown.total;
    energy += r.energy_wh;
    totals.push_back(r.breakdown.total);
  }
  if (s.requests == 0) return s;
  const double n = static_cast<double>(s.requests);
  s.mean.preprocess /= n;
  s.mean.encryption /= n;
  s.mean.inference /= n;
  s.mean.communication /= n;
  s.mean.queuing /= n;
  s.mean.total /= n;
  s.energy_wh_per_inference = energy / n;
  s.p50 = percentile(totals, 50.0);
  s.p95 = percentile(totals, 95.0);
  s.p99 = percentile(totals, 99.0);
  return s;
}

RunSummary summarize_run(std::span<const RequestRecord> records, const EnergyLedger& ledger, SimTime makespan) {
  RunSummary s;
  s.overall = summarize(records);
  std::map<std::string, std::vector<RequestRecord>> groups;
  for (const auto& r : records) {
    if (!r.ok()) {
      ++s.failed;
      continue;
    }
    groups[std::string(to_string(r.technique))].push_back(r);
  }
  for (const auto& [name, group] : groups) s.by_technique[name] = summarize(group);
  s.makespan = makespan;
  s.total_node_energy_wh = ledger.total_node_wh;
  s.idle_static_energy_wh = ledger.total_idle_static_wh;
  return s;
}

nlohmann::ordered_json to_json(const GroupSummary& s) {
  nlohmann::ordered_json j;
  j["requests"] = s.requests;
  j["mean"] = {{"preprocess", s.mean.preprocess},       {"encryption", s.mean.encryption},
               {"inference", s.mean.inference},         {"communication", s.mean.communication},
               {"queuing", s.mean.queuing},             {"total", s.mean.total}};
  j["total_percentiles"] = {{"p50", s.p50}, {"p95", s.p95}, {"p99", s.p99}};
  j["energy_wh_per_inference"] = s.energy_wh_per_inference;
  return j;
}

nlohmann::ordered_json to_json(const RunSummary& s) {
  nlohmann::ordered_json j = to_json(s.overall);
  j["failed"] = s.failed;
  j["makespan_s"] = s.makespan;
  j["node_energy_wh"] = s.total_node_energy_wh;
  j["idle_static_energy_wh"] = s.idle_static_energy_wh;
  nlohmann::ordered_json by = nlohmann::ordered_json::object();
  for (const auto& [name, g] : s.by_technique) by[name] = to_json(g);
  j["by_technique"] = std::move(by);
  return j;
}

std::string breakdown_csv(std::span<const RequestRecord> records) {
  std::string out =
      "request_id,user,technique,model,dataset,preprocess,encryption,inference,communication,queuing,total,"
      "energy_wh\n";
  for (const auto& r : records) {
    if (!r.ok()) continue;
    const auto& b = r.breakdown;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.id, r.user, to_string(r.technique), r.model,
                       r.dataset, format_number(b.preprocess), format_number(b.encryption),
                       format_number(b.inference), format_number(b.communication), format_number(b.queuing),
                       format_number(b.total), format_number(r.energy_wh));
  }
  return out;
}

std::string distribution_csv(const DistributionReport& report) {
  std::string out = "kind,x_low,x_high,value\n";
  for (std::size_t i = 0; i < report.pdf_mass.size(); ++i) {
    out += fmt::format("pdf,{},{},{}\n", format_number(report.bin_edges[i]), format_number(report.bin_edges[i + 1]),
                       format_number(report.pdf_mass[i]));
  }
  for (std::size_t i = 0; i < report.cdf_x.size(); ++i) {
    out += fmt::format("cdf,{},{},{}\n", format_number(report.cdf_x[i]), format_number(report.cdf_x[i]),
                       format_number(report.cdf_p[i]));
  }
  return out;
}

std::string energy_csv(const Topology& topology, const EnergyLedger& ledger) {
  std::string out = "node,layer,device_class,energy_wh,idle_static_wh\n";
  for (const auto& node : topology.nodes()) {
    out += fmt::format("{},{},{},{},{}\n", node.name, to_string(node.layer), node.device_class,
                       format_number(ledger.node_wh[node.id.value]),
                       format_number(ledger.node_idle_static_wh[node.id.value]));
  }
  return out;
}

std::vector<RequestRecord> parse_breakdown_csv(std::string_view text) {
  std::vector<RequestRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 12) throw std::runtime_error(fmt::format("breakdown line {}: expected 12 fields", lineno));
    RequestRecord r;
    auto num = [&](std::size_t i) {
      auto v = parse_double(f[i]);
      if (!v) throw std::runtime_error(fmt::format("breakdown line {}: bad number '{}'", lineno, f[i]));
      return *v;
    };
    r.id = static_cast<std::uint64_t>(num(0));
    r.user = static_cast<std::uint32_t>(num(1));
    r.technique = parse_technique(f[2]);
    r.model = f[3];
    r.dataset = f[4];
    r.breakdown = {num(5), num(6), num(7), num(8), num(9), num(10)};
    r.energy_wh = num(11);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace edgeprivsim
