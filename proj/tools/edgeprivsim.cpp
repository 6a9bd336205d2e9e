// Command-line front end for the simulator, the accountant and the
// stealing-evaluation bookkeeping.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "edgeprivsim/accountant.hpp"
#include "edgeprivsim/io.hpp"
#include "edgeprivsim/metrics.hpp"
#include "edgeprivsim/scenario.hpp"
#include "edgeprivsim/simulation.hpp"
#include "edgeprivsim/stealing.hpp"

namespace fs = std::filesystem;
using namespace edgeprivsim;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Raised for bad command-line values so they map to the config exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned sweep_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EDGEPRIVSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError("EDGEPRIVSIM_THREADS must be a positive integer");
    n = static_cast<unsigned>(v);
  }
  return n;
}

fs::path output_dir(const Scenario& s, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!s.output_dir.empty()) return s.output_dir;
  return fs::path("out") / s.name;
}

Technique technique_arg(const std::string& text) {
  try {
    const Technique t = parse_technique(text);
    if (t == Technique::Baseline) throw std::invalid_argument("baseline has no privacy pipeline");
    return t;
  } catch (const std::invalid_argument& e) {
    throw UsageError(fmt::format("--technique: {}", e.what()));
  }
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

struct RunArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> users;
  std::optional<double> bandwidth;
  std::optional<int> parties;
  std::string technique;
};

int cmd_run(const RunArgs& a) {
  Scenario s = load_scenario(a.scenario);
  SweepPoint p;
  p.users = a.users;
  p.bandwidth = a.bandwidth;
  p.parties = a.parties;
  p.seed = a.seed;
  if (!a.technique.empty()) p.technique = technique_arg(a.technique);
  s = p.apply(std::move(s));
  const RunResult r = run_scenario(s);
  const fs::path dir = output_dir(s, a.out);
  write_run_artifacts(r, dir);
  const auto& o = r.summary.overall;
  std::cout << fmt::format("{} requests, mean total {} s, p95 {} s, {} failed -> {}\n", o.requests,
                           format_number(o.mean.total), format_number(o.p95), r.summary.failed, dir.string());
  if (r.summary.failed > 0) {
    for (const auto& rec : r.records) {
      if (!rec.ok()) {
        std::cerr << "error: " << rec.error << "\n";
        break;
      }
    }
    return kExitRuntime;
  }
  return 0;
}

struct SweepArgs {
  std::string scenario;
  std::string out;
  std::vector<std::uint32_t> users;
  std::vector<double> bandwidth;
  std::vector<int> parties;
  std::vector<std::string> techniques;
  std::vector<std::uint64_t> seeds;
};

int cmd_sweep(const SweepArgs& a) {
  const Scenario s = load_scenario(a.scenario);
  SweepAxes axes{a.users, a.bandwidth, a.parties, {}, a.seeds};
  for (const auto& t : a.techniques) axes.techniques.push_back(technique_arg(t));
  const fs::path dir = output_dir(s, a.out);
  const auto outcomes = run_sweep(s, axes, dir, sweep_threads());
  std::size_t failed = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++failed;
      std::cerr << fmt::format("point {} failed: {}\n", o.point.label(), o.error);
    }
  }
  std::cout << fmt::format("{} points, {} failed -> {}\n", outcomes.size(), failed, (dir / "sweep.csv").string());
  return failed ? kExitRuntime : 0;
}

struct AccountantArgs {
  std::vector<double> sigmas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 2.0};
  std::uint64_t dataset_size = 3601;
  std::uint64_t batch = 50;
  std::uint64_t epochs = 25;
  std::optional<double> delta;  // 1/N when omitted
  double clip = 1.0;
  std::string out;
};

int cmd_accountant(const AccountantArgs& a) {
  std::string csv = "sigma,epsilon,best_order\n";
  for (double sigma : a.sigmas) {
    const double delta = a.delta ? *a.delta : 1.0 / static_cast<double>(a.dataset_size);
    DpSgdConfig cfg{sigma, a.clip, a.dataset_size, a.batch, a.epochs, delta};
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(fmt::format("sigma {}: {}", sigma, e.what()));
    }
    const auto r = epsilon_for_training(cfg);
    csv += fmt::format("{},{},{}\n", format_number(sigma), format_number(r.epsilon), format_number(r.order));
  }
  write_or_print(a.out, csv);
  return 0;
}

struct PoolArgs {
  std::string test;
  double q = 0.3;
  double factor = 1.0;
  double jitter = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_pool(const PoolArgs& a) {
  const TestSet test = read_test_set(a.test);
  RngStream rng(a.seed, "query-pool");
  QueryPool pool;
  try {
    pool = build_query_pool(test, a.q, a.factor, a.jitter, rng);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_or_print(a.out, query_pool_csv(pool));
  std::cerr << fmt::format("{} real, {} synthetic\n", pool.real_indices.size(), pool.synthetic.size());
  return 0;
}

struct GapArgs {
  std::string manifest;
  std::string truth;
  int classes = 0;
  std::string out;
};

// Manifest rows: sigma,seed,target,substitute with prediction files relative to the manifest.
int cmd_gaps(const GapArgs& a) {
  const auto truth = read_labels(a.truth);
  const fs::path base = fs::path(a.manifest).parent_path();
  std::istringstream in(read_file(a.manifest));
  std::string line;
  std::vector<std::tuple<double, std::uint64_t, std::vector<int>, std::vector<int>>> rows;
  int max_label = 0;
  for (int l : truth) max_label = std::max(max_label, l);
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (lineno == 1 || line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw UsageError(fmt::format("{}:{}: expected sigma,seed,target,substitute", a.manifest, lineno));
    const auto sigma = parse_double(f[0]);
    const auto seed = parse_double(f[1]);
    if (!sigma || !seed) throw UsageError(fmt::format("{}:{}: bad number", a.manifest, lineno));
    auto t = read_labels(base / f[2]);
    auto s = read_labels(base / f[3]);
    for (int v : t) max_label = std::max(max_label, v);
    for (int v : s) max_label = std::max(max_label, v);
    rows.emplace_back(*sigma, static_cast<std::uint64_t>(*seed), std::move(t), std::move(s));
  }
  const int classes = a.classes > 0 ? a.classes : max_label + 1;
  std::vector<GapRun> runs;
  for (auto& [sigma, seed, t, s] : rows) {
    try {
      runs.push_back({sigma, seed, macro_metrics(truth, t, classes), macro_metrics(truth, s, classes)});
    } catch (const std::invalid_argument& e) {
      throw UsageError(fmt::format("sigma {} seed {}: {}", sigma, seed, e.what()));
    }
  }
  const auto table = gap_table(runs);
  write_or_print(a.out, to_json(table).dump(2) + "\n");
  return 0;
}

int cmd_synth(const std::string& scenario, std::optional<std::uint64_t> seed, const std::string& out) {
  Scenario s = load_scenario(scenario);
  if (seed) s.seed = *seed;
  const TraceTable table = build_trace_table(s);
  std::ostringstream os;
  write_traces(table, os);
  write_or_print(out, os.str());
  return 0;
}

int cmd_report(const std::string& in_dir, std::size_t bins, const std::string& out) {
  const auto records = parse_breakdown_csv(read_file(fs::path(in_dir) / "breakdown.csv"));
  nlohmann::ordered_json j;
  j["overall"] = to_json(summarize(records));
  std::map<std::string, std::vector<RequestRecord>> groups;
  for (const auto& r : records) groups[std::string(to_string(r.technique))].push_back(r);
  for (const auto& [name, g] : groups) j["by_technique"][name] = to_json(summarize(g));
  std::vector<double> totals;
  for (const auto& r : records) totals.push_back(r.breakdown.total);
  if (!totals.empty()) {
    write_file_atomic(fs::path(in_dir) / "distribution.csv", distribution_csv(export_distribution(totals, bins)));
  }
  write_or_print(out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge privacy-preserving inference simulator"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario and write its artifacts");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--users", run.users, "Concurrent users");
  run_cmd->add_option("--bandwidth", run.bandwidth, "Link bandwidth in Mbps");
  run_cmd->add_option("--parties", run.parties, "SMC parties");
  run_cmd->add_option("--technique", run.technique, "Restrict the mix to one technique");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the Cartesian product of the given axes");
  sweep_cmd->add_option("--scenario", sweep.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", sweep.out, "Output directory");
  sweep_cmd->add_option("--users", sweep.users, "Comma-separated user counts")->delimiter(',');
  sweep_cmd->add_option("--bandwidth", sweep.bandwidth, "Comma-separated bandwidths (Mbps)")->delimiter(',');
  sweep_cmd->add_option("--parties", sweep.parties, "Comma-separated SMC party counts")->delimiter(',');
  sweep_cmd->add_option("--technique", sweep.techniques, "Comma-separated techniques")->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds, "Comma-separated seeds")->delimiter(',');

  AccountantArgs acc;
  auto* acc_cmd = app.add_subcommand("accountant", "Epsilon of DP-SGD training over a sigma sweep");
  acc_cmd->add_option("--sigma", acc.sigmas, "Comma-separated noise multipliers")->delimiter(',');
  acc_cmd->add_option("--dataset-size", acc.dataset_size, "Training set size N")->capture_default_str();
  acc_cmd->add_option("--batch", acc.batch, "Batch size B")->capture_default_str();
  acc_cmd->add_option("--epochs", acc.epochs, "Epochs")->capture_default_str();
  acc_cmd->add_option("--delta", acc.delta, "Target delta (default 1/N)");
  acc_cmd->add_option("--clip", acc.clip, "Clipping norm (informational)");
  acc_cmd->add_option("--out", acc.out, "CSV output file (stdout when omitted)");

  auto* steal_cmd = app.add_subcommand("steal-eval", "Model-stealing evaluation bookkeeping");
  steal_cmd->require_subcommand(1);
  PoolArgs pool;
  auto* pool_cmd = steal_cmd->add_subcommand("pool", "Build an attacker query pool");
  pool_cmd->add_option("--test", pool.test, "Test-set CSV (index,f0,...)")->required()->check(CLI::ExistingFile);
  pool_cmd->add_option("--q", pool.q, "Fraction of the test set queried")->capture_default_str();
  pool_cmd->add_option("--factor", pool.factor, "Synthetic points per real point")->capture_default_str();
  pool_cmd->add_option("--jitter", pool.jitter, "Gaussian jitter stddev")->capture_default_str();
  pool_cmd->add_option("--seed", pool.seed, "Seed");
  pool_cmd->add_option("--out", pool.out, "CSV output file");
  GapArgs gaps;
  auto* gaps_cmd = steal_cmd->add_subcommand("gaps", "Target minus substitute metrics per sigma");
  gaps_cmd->add_option("--manifest", gaps.manifest, "CSV sigma,seed,target,substitute")->required()->check(CLI::ExistingFile);
  gaps_cmd->add_option("--truth", gaps.truth, "Ground-truth labels (index,label)")->required()->check(CLI::ExistingFile);
  gaps_cmd->add_option("--classes", gaps.classes, "Number of classes (inferred when omitted)");
  gaps_cmd->add_option("--out", gaps.out, "JSON output file");

  std::string synth_scenario, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth-traces", "Write the scenario's trace table as CSV");
  synth_cmd->add_option("--scenario", synth_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--seed", synth_seed, "Override the scenario seed");
  synth_cmd->add_option("--out", synth_out, "CSV output file");

  std::string report_in, report_out;
  std::size_t report_bins = 50;
  auto* report_cmd = app.add_subcommand("report", "Summarize a run directory's breakdown.csv");
  report_cmd->add_option("--in", report_in, "Run output directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--bins", report_bins, "Histogram bins")->capture_default_str();
  report_cmd->add_option("--out", report_out, "JSON output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*acc_cmd) return cmd_accountant(acc);
    if (*pool_cmd) return cmd_pool(pool);
    if (*gaps_cmd) return cmd_gaps(gaps);
    if (*synth_cmd) return cmd_synth(synth_scenario, synth_seed, synth_out);
    if (*report_cmd) return cmd_report(report_in, report_bins, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TraceParseError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
