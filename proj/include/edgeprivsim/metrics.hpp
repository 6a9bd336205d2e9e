#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeprivsim/infra.hpp"
#include "edgeprivsim/records.hpp"

namespace edgeprivsim {

/// Linear power model: p_static + (p_max - p_static) * utilization.
double node_power(const NodeSpec& node, double utilization);
double node_power(const Infrastructure& infra, NodeId node, SimTime t);

inline constexpr double kJoulesPerWattHour = 3600.0;

/// Integral of node power over [t0, t1] in watt-hours, from the recorded history.
double node_energy_wh(const NodeSpec& node, const NodeState& state, SimTime t0, SimTime t1);

/// Static energy spent on [t0, t1] while no task was resident on the node.
double idle_static_wh(const NodeSpec& node, const NodeState& state, SimTime t0, SimTime t1);

/// Energy charged to one request. Each compute stage pays, on every node it
/// holds, its cores' share of dynamic power plus an equal split of static
/// power among the tasks co-resident at each instant.
double attribute_energy(const RequestRecord& record, const Infrastructure& infra);

struct EnergyLedger {
  std::vector<double> node_wh;
  std::vector<double> node_idle_static_wh;
  std::vector<double> request_wh;  // parallel to the records passed in
  double total_node_wh = 0.0;
  double total_idle_static_wh = 0.0;
  double total_attributed_wh = 0.0;
};

/// Requires the infrastructure history to be finalized at `horizon`.
EnergyLedger build_energy_ledger(const Infrastructure& infra, std::span<const RequestRecord> records,
                                 SimTime horizon);

struct DistributionReport {
  std::vector<double> bin_edges;  // bins + 1 edges
  std::vector<double> pdf_mass;   // sums to 1
  std::vector<double> cdf_x;      // distinct sample values, ascending
  std::vector<double> cdf_p;      // fraction of samples <= cdf_x[i]

  /// Empirical CDF evaluated at x.
  double cdf_at(double x) const;
};

/// Equal-width histogram over [min, max] plus the empirical CDF.
DistributionReport export_distribution(std::span<const double> samples, std::size_t bins);

/// Linear-interpolated percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);

struct GroupSummary {
  std::size_t requests = 0;
  ResponseBreakdown mean;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double energy_wh_per_inference = 0.0;
};

GroupSummary summarize(std::span<const RequestRecord> records);

struct RunSummary {
  GroupSummary overall;
  std::map<std::string, GroupSummary> by_technique;
  std::size_t failed = 0;
  double makespan = 0.0;
  double total_node_energy_wh = 0.0;
  double idle_static_energy_wh = 0.0;
};

RunSummary summarize_run(std::span<const RequestRecord> records, const EnergyLedger& ledger, SimTime makespan);

nlohmann::ordered_json to_json(const GroupSummary& s);
nlohmann::ordered_json to_json(const RunSummary& s);

std::string breakdown_csv(std::span<const RequestRecord> records);
std::string distribution_csv(const DistributionReport& report);
std::string energy_csv(const Topology& topology, const EnergyLedger& ledger);

/// Parses a breakdown CSV back into records (breakdown, labels and energy only).
std::vector<RequestRecord> parse_breakdown_csv(std::string_view text);

}  // namespace edgeprivsim
