#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeprivsim/sim_engine.hpp"

namespace edgeprivsim {

/// Held-out series keyed by their index column.
struct TestSet {
  std::vector<std::uint64_t> index;
  std::vector<std::vector<double>> features;

  std::size_t size() const { return index.size(); }
};

struct QueryPool {
  std::vector<std::uint64_t> real_indices;       // drawn without replacement
  std::vector<std::uint64_t> synthetic_sources;  // real index each synthetic point was copied from
  std::vector<std::vector<double>> synthetic;
  double jitter_scale = 0.0;
  double synth_factor = 0.0;
};

/// floor(q * |test|) real points plus round(factor * |real|) jittered copies
/// resampled with replacement from the real points.
QueryPool build_query_pool(const TestSet& test, double q, double synth_factor, double jitter_scale, RngStream& rng);

struct MacroMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double sensitivity = 0.0;
  double f1 = 0.0;
};

/// Macro-averaged metrics; per-class 0/0 counts as 0.
MacroMetrics macro_metrics(std::span<const int> y_true, std::span<const int> y_pred, int n_classes);

struct GapStat {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct GapReport {
  std::vector<MacroMetrics> per_seed;  // target - substitute, field by field
  GapStat acc, prec, sens, f1;
};

GapReport gap_report(std::span<const MacroMetrics> target, std::span<const MacroMetrics> substitute);

/// One trained target/substitute pair.
struct GapRun {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  MacroMetrics target;
  MacroMetrics substitute;
};

struct GapRow {
  double sigma = 0.0;
  GapReport report;
};

/// Groups runs by sigma (ascending) and reports each group.
std::vector<GapRow> gap_table(std::span<const GapRun> runs);

nlohmann::ordered_json to_json(const GapReport& report);
nlohmann::ordered_json to_json(std::span<const GapRow> rows);

/// `index,label` with header; returns labels ordered by index.
std::vector<int> read_labels(const std::filesystem::path& path);
/// `index,f0,f1,...` with header.
TestSet read_test_set(const std::filesystem::path& path);
std::string query_pool_csv(const QueryPool& pool);

}  // namespace edgeprivsim
