#include "edgeprivsim/stealing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>

#include "edgeprivsim/io.hpp"

namespace edgeprivsim {

QueryPool build_query_pool(const TestSet& test, double q, double synth_factor, double jitter_scale, RngStream& rng) {
  if (test.size() == 0) throw std::invalid_argument("query pool from an empty test set");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("query fraction must lie in (0, 1]");
  if (!(synth_factor >= 0.0)) throw std::invalid_argument("synthetic factor must be >= 0");
  if (!(jitter_scale >= 0.0)) throw std::invalid_argument("jitter scale must be >= 0");

  const auto n_real = static_cast<std::size_t>(std::floor(q * static_cast<double>(test.size()) + 1e-9));
  std::vector<std::size_t> pos(test.size());
  std::iota(pos.begin(), pos.end(), 0);
  for (std::size_t i = 0; i < n_real; ++i) {
    const std::size_t j = i + rng.uniform_index(pos.size() - i);
    std::swap(pos[i], pos[j]);
  }
  pos.resize(n_real);

  QueryPool pool;
  pool.jitter_scale = jitter_scale;
  pool.synth_factor = synth_factor;
  for (auto p : pos) pool.real_indices.push_back(test.index[p]);
  if (n_real == 0) return pool;

  const auto n_synth = static_cast<std::size_t>(std::llround(synth_factor * static_cast<double>(n_real)));
  for (std::size_t i = 0; i < n_synth; ++i) {
    const std::size_t p = pos[rng.uniform_index(n_real)];
    std::vector<double> x = test.features[p];
    for (double& v : x) v += rng.normal(0.0, jitter_scale);
    pool.synthetic_sources.push_back(test.index[p]);
    pool.synthetic.push_back(std::move(x));
  }
  return pool;
}

MacroMetrics macro_metrics(std::span<const int> y_true, std::span<const int> y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("label and prediction lengths differ");
  if (n_classes < 1) throw std::invalid_argument("need at least one class");
  if (y_true.empty()) throw std::invalid_argument("no labels");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes) {
      throw std::invalid_argument(fmt::format("label out of range at position {}", i));
    }
    if (t == p) {
      ++correct;
      tp[static_cast<std::size_t>(t)] += 1.0;
    } else {
      fp[static_cast<std::size_t>(p)] += 1.0;
      fn[static_cast<std::size_t>(t)] += 1.0;
    }
  }
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
  MacroMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
  for (std::size_t c = 0; c < k; ++c) {
    const double pr = ratio(tp[c], tp[c] + fp[c]);
    const double rc = ratio(tp[c], tp[c] + fn[c]);
    m.precision += pr;
    m.sensitivity += rc;
    m.f1 += ratio(2.0 * pr * rc, pr + rc);
  }
  m.precision /= static_cast<double>(k);
  m.sensitivity /= static_cast<double>(k);
  m.f1 /= static_cast<double>(k);
  return m;
}

namespace {

GapStat stat_of(const std::vector<MacroMetrics>& rows, double MacroMetrics::*field) {
  GapStat s;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) s.mean += r.*field;
  s.mean /= n;
  double var = 0.0;
  for (const auto& r : rows) var += (r.*field - s.mean) * (r.*field - s.mean);
  s.std = std::sqrt(var / n);
  return s;
}

}  // namespace

GapReport gap_report(std::span<const MacroMetrics> target, std::span<const MacroMetrics> substitute) {
  if (target.size() != substitute.size()) throw std::invalid_argument("target and substitute seed counts differ");
  if (target.empty()) throw std::invalid_argument("gap report needs at least one seed");
  GapReport g;
  for (std::size_t i = 0; i < target.size(); ++i) {
    g.per_seed.push_back({target[i].accuracy - substitute[i].accuracy, target[i].precision - substitute[i].precision,
                          target[i].sensitivity - substitute[i].sensitivity, target[i].f1 - substitute[i].f1});
  }
  g.acc = stat_of(g.per_seed, &MacroMetrics::accuracy);
  g.prec = stat_of(g.per_seed, &MacroMetrics::precision);
  g.sens = stat_of(g.per_seed, &MacroMetrics::sensitivity);
  g.f1 = stat_of(g.per_seed, &MacroMetrics::f1);
  return g;
}

std::vector<GapRow> gap_table(std::span<const GapRun> runs) {
  std::map<double, std::vector<const GapRun*>> groups;
  for (const auto& r : runs) groups[r.sigma].push_back(&r);
  std::vector<GapRow> rows;
  for (auto& [sigma, group] : groups) {
    std::stable_sort(group.begin(), group.end(), [](const GapRun* a, const GapRun* b) { return a->seed < b->seed; });
    std::vector<MacroMetrics> t, s;
    for (const auto* r : group) {
      t.push_back(r->target);
      s.push_back(r->substitute);
    }
    rows.push_back({sigma, gap_report(t, s)});
  }
  return rows;
}

nlohmann::ordered_json to_json(const GapReport& report) {
  auto column = [&](const GapStat& st, double MacroMetrics::*field) {
    nlohmann::ordered_json c;
    c["mean"] = st.mean;
    c["std"] = st.std;
    auto per = nlohmann::ordered_json::array();
    for (const auto& r : report.per_seed) per.push_back(r.*field);
    c["per_seed"] = std::move(per);
    return c;
  };
  nlohmann::ordered_json j;
  j["seeds"] = report.per_seed.size();
  j["delta_acc"] = column(report.acc, &MacroMetrics::accuracy);
  j["delta_prec"] = column(report.prec, &MacroMetrics::precision);
  j["delta_sens"] = column(report.sens, &MacroMetrics::sensitivity);
  j["delta_f1"] = column(report.f1, &MacroMetrics::f1);
  return j;
}

nlohmann::ordered_json to_json(std::span<const GapRow> rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["sigma"] = row.sigma;
    const auto body = to_json(row.report);
    for (const auto& [k, v] : body.items()) j[k] = v;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["rows"] = std::move(arr);
  return out;
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path, std::size_t min_fields) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 || line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() < min_fields) {
      throw std::runtime_error(fmt::format("{}:{}: expected at least {} fields", path.string(), lineno, min_fields));
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

std::uint64_t parse_index(const std::string& s, const std::filesystem::path& path) {
  auto v = parse_double(s);
  if (!v || *v < 0.0 || std::floor(*v) != *v) {
    throw std::runtime_error(fmt::format("{}: bad index '{}'", path.string(), s));
  }
  return static_cast<std::uint64_t>(*v);
}

}  // namespace

std::vector<int> read_labels(const std::filesystem::path& path) {
  std::vector<std::pair<std::uint64_t, int>> rows;
  for (const auto& f : read_csv_rows(path, 2)) {
    const auto idx = parse_index(f[0], path);
    auto v = parse_double(f[1]);
    if (!v || std::floor(*v) != *v) throw std::runtime_error(fmt::format("{}: bad label '{}'", path.string(), f[1]));
    rows.emplace_back(idx, static_cast<int>(*v));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<int> out;
  for (const auto& r : rows) out.push_back(r.second);
  return out;
}

TestSet read_test_set(const std::filesystem::path& path) {
  TestSet t;
  for (const auto& f : read_csv_rows(path, 1)) {
    t.index.push_back(parse_index(f[0], path));
    std::vector<double> x;
    for (std::size_t i = 1; i < f.size(); ++i) {
      auto v = parse_double(f[i]);
      if (!v) throw std::runtime_error(fmt::format("{}: bad feature '{}'", path.string(), f[i]));
      x.push_back(*v);
    }
    t.features.push_back(std::move(x));
  }
  return t;
}

std::string query_pool_csv(const QueryPool& pool) {
  std::string out = "kind,source_index,values\n";
  for (auto idx : pool.real_indices) out += fmt::format("real,{},\n", idx);
  for (std::size_t i = 0; i < pool.synthetic.size(); ++i) {
    std::string vals;
    for (std::size_t j = 0; j < pool.synthetic[i].size(); ++j) {
      if (j) vals += ' ';
      vals += format_number(pool.synthetic[i][j]);
    }
    out += fmt::format("synthetic,{},{}\n", pool.synthetic_sources[i], vals);
  }
  return out;
}

}  // namespace edgeprivsim
