#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgeprivsim/metrics.hpp"
#include "edgeprivsim/scenario.hpp"

namespace edgeprivsim {

struct RunResult {
  Scenario scenario;
  Topology topology;
  std::vector<RequestRecord> records;  // completion order
  EnergyLedger ledger;
  RunSummary summary;
  std::optional<DistributionReport> distribution;  // absent when no request succeeded
  SimTime makespan = 0.0;
  std::vector<Event> event_log;  // only when requested
};

/// Closed-loop run: every user keeps one request in flight and reissues on
/// completion until the scenario's request budget is spent. Users map to
/// edge devices round-robin; each request's technique entry is drawn from the
/// weighted mix with a stream keyed by (user, request number).
RunResult run_scenario(const Scenario& scenario, const TraceTable& table, bool log_events = false);
/// Builds the trace table from the scenario first.
RunResult run_scenario(const Scenario& scenario, bool log_events = false);

nlohmann::ordered_json summary_json(const RunResult& result);

/// Writes breakdown.csv, summary.json, distribution.csv and energy.csv into
/// `dir`, each atomically.
void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir);

struct SweepAxes {
  std::vector<std::uint32_t> users;
  std::vector<double> bandwidth;
  std::vector<int> parties;
  std::vector<Technique> techniques;
  std::vector<std::uint64_t> seeds;
};

struct SweepPoint {
  std::optional<std::uint32_t> users;
  std::optional<double> bandwidth;
  std::optional<int> parties;
  std::optional<Technique> technique;
  std::optional<std::uint64_t> seed;

  /// Directory name, e.g. "users-30_technique-dp"; "run" when no axis is set.
  std::string label() const;
  Scenario apply(Scenario base) const;
};

/// Cartesian product of the non-empty axes; a single empty point when all are empty.
std::vector<SweepPoint> expand(const SweepAxes& axes);

struct SweepOutcome {
  SweepPoint point;
  bool ok = false;
  std::string error;
  RunSummary summary;
};

/// Runs every point on up to `threads` workers, writing each point's artifacts
/// to out_dir/<label>/ and the merged table to out_dir/sweep.csv. A failing
/// point is recorded and does not stop the others.
std::vector<SweepOutcome> run_sweep(const Scenario& base, const SweepAxes& axes, const std::filesystem::path& out_dir,
                                    unsigned threads);

std::string sweep_csv(const std::vector<SweepOutcome>& outcomes);

}  // namespace edgeprivsim
