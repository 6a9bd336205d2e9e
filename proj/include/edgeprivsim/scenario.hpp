#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeprivsim/infra.hpp"
#include "edgeprivsim/pipeline.hpp"
#include "edgeprivsim/scheduler.hpp"
#include "edgeprivsim/trace_store.hpp"

namespace edgeprivsim {

struct NodeEntry {
  std::string name;
  std::string device_class;
  friend bool operator==(const NodeEntry&, const NodeEntry&) = default;
};

struct LinkEntry {
  std::string name;
  std::string a;
  std::string b;
  double bandwidth_mbps = 0.0;
  double base_latency_s = 0.0;
  friend bool operator==(const LinkEntry&, const LinkEntry&) = default;
};

/// Either a named preset ("default": 4 servers, 12 devices) or explicit nodes.
struct TopologyConfig {
  std::string preset;
  std::vector<NodeEntry> nodes;
  std::vector<LinkEntry> links;
  std::optional<LinkDefaults> default_link;
  friend bool operator==(const TopologyConfig&, const TopologyConfig&) = default;
};

struct MixtureTrace {
  TraceKey key;
  Unit unit = Unit::Milliseconds;
  std::size_t points = 500;
  MixtureSpec spec;
  std::string note;  // where the calibration came from
  friend bool operator==(const MixtureTrace&, const MixtureTrace&) = default;
};

struct TraceSources {
  std::vector<std::string> files;  // relative to the scenario file
  std::vector<MixtureTrace> mixtures;
  friend bool operator==(const TraceSources&, const TraceSources&) = default;
};

struct MixEntry {
  Technique technique = Technique::Dp;
  std::string model;
  std::string dataset;
  double weight = 1.0;
  friend bool operator==(const MixEntry&, const MixEntry&) = default;
};

struct FootprintEntry {
  Technique technique = Technique::Dp;
  std::string model;
  double memory_mb = 0.0;
  friend bool operator==(const FootprintEntry&, const FootprintEntry&) = default;
};

struct Workload {
  std::uint32_t users = 1;
  std::uint64_t total_requests = 3000;
  std::vector<MixEntry> mix;
  int smc_parties = 3;
  int inference_cores = 1;
  double default_footprint_mb = 512.0;
  std::vector<FootprintEntry> footprints;
  double dp_payload_bytes = 0.0;
  double fhe_input_bytes = 0.0;
  double fhe_result_bytes = 0.0;
  friend bool operator==(const Workload&, const Workload&) = default;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::vector<DeviceClass> device_classes;
  TopologyConfig topology;
  TraceSources traces;
  SchedulerPolicy scheduler;
  Workload workload;
  std::size_t histogram_bins = 50;
  std::filesystem::path base_dir;  // resolves trace files; not serialized

  bool operator==(const Scenario& o) const;
};

/// Throws ConfigError naming the offending field path.
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical form: every field present, defaults filled in.
nlohmann::ordered_json to_json(const Scenario& s);
std::string dump_scenario(const Scenario& s);

Topology build_topology(const Scenario& s);
PlanOptions plan_options(const Workload& w);
ExecutorOptions executor_options(const Scenario& s);

/// Loads trace files and synthesizes mixture traces with streams derived from the scenario seed.
TraceTable build_trace_table(const Scenario& s);

/// Every trace key a request of the mix can draw from must exist, for every
/// device class that can host the stage. Throws ConfigError naming the key.
void validate_references(const Scenario& s, const Topology& topology, const TraceTable& table);

/// Sweep and command-line overrides.
void override_users(Scenario& s, std::uint32_t users);
void override_bandwidth(Scenario& s, double mbps);
void override_parties(Scenario& s, int parties);
/// Keeps only mix entries of one technique; ConfigError when none remain.
void override_technique(Scenario& s, Technique technique);

}  // namespace edgeprivsim
