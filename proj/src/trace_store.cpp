#include "edgeprivsim/trace_store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "edgeprivsim/io.hpp"

namespace edgeprivsim {

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::Dp: return "dp";
    case Technique::Smc: return "smc";
    case Technique::Fhe: return "fhe";
    case Technique::Baseline: return "baseline";
  }
  return "?";
}

std::string_view to_string(StageKind s) {
  switch (s) {
    case StageKind::Preprocess: return "preprocess";
    case StageKind::Encrypt: return "encrypt";
    case StageKind::Inference: return "inference";
    case StageKind::Decrypt: return "decrypt";
    case StageKind::CommBytes: return "comm-bytes";
  }
  return "?";
}

std::string_view to_string(Unit u) { return u == Unit::Bytes ? "bytes" : "milliseconds"; }

Technique parse_technique(std::string_view text) {
  if (text == "dp") return Technique::Dp;
  if (text == "smc") return Technique::Smc;
  if (text == "fhe") return Technique::Fhe;
  if (text == "baseline") return Technique::Baseline;
  throw std::invalid_argument(fmt::format("unknown technique '{}'", text));
}

StageKind parse_stage_kind(std::string_view text) {
  if (text == "preprocess") return StageKind::Preprocess;
  if (text == "encrypt") return StageKind::Encrypt;
  if (text == "inference") return StageKind::Inference;
  if (text == "decrypt") return StageKind::Decrypt;
  if (text == "comm-bytes") return StageKind::CommBytes;
  throw std::invalid_argument(fmt::format("unknown stage '{}'", text));
}

Unit parse_unit(std::string_view text) {
  if (text == "milliseconds") return Unit::Milliseconds;
  if (text == "bytes") return Unit::Bytes;
  throw std::invalid_argument(fmt::format("unknown unit '{}'", text));
}

Unit unit_for(StageKind stage) { return stage == StageKind::CommBytes ? Unit::Bytes : Unit::Milliseconds; }

void TraceKey::validate() const {
  if (model.empty() || dataset.empty() || device_class.empty()) {
    throw std::invalid_argument(fmt::format("trace key {} has an empty field", to_string()));
  }
  if (technique == Technique::Dp &&
      (stage == StageKind::Encrypt || stage == StageKind::Decrypt || stage == StageKind::CommBytes)) {
    throw std::invalid_argument(fmt::format("trace key {}: dp has no {} stage", to_string(),
                                            edgeprivsim::to_string(stage)));
  }
}

std::string TraceKey::to_string() const {
  return fmt::format("{}/{}/{}/{}/{}", edgeprivsim::to_string(technique), model, dataset, device_class,
                     edgeprivsim::to_string(stage));
}

void TraceSeries::validate() const {
  key.validate();
  if (values.empty()) throw std::invalid_argument(fmt::format("series {} is empty", key.to_string()));
  if (unit != unit_for(key.stage)) {
    throw std::invalid_argument(fmt::format("series {} must be in {}", key.to_string(),
                                            to_string(unit_for(key.stage))));
  }
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("series {} holds non-positive value {}", key.to_string(), v));
    }
  }
}

TraceParseError::TraceParseError(std::string source, std::size_t line, const std::string& message)
    : std::runtime_error(fmt::format("{}:{}: {}", source, line, message)), line_(line) {}

TraceLookupError::TraceLookupError(const TraceKey& key)
    : std::runtime_error(fmt::format("no trace for key {}", key.to_string())), key_(key) {}

void TraceTable::insert(TraceSeries series) {
  series.validate();
  if (contains(series.key)) {
    throw std::invalid_argument(fmt::format("duplicate trace key {}", series.key.to_string()));
  }
  auto key = series.key;
  series_.emplace(std::move(key), std::move(series));
}

void TraceTable::merge(TraceTable other) {
  for (const auto& [key, _] : other.series_) {
    if (contains(key)) throw std::invalid_argument(fmt::format("duplicate trace key {}", key.to_string()));
  }
  series_.merge(other.series_);
}

const TraceSeries& TraceTable::at(const TraceKey& key) const {
  auto it = series_.find(key);
  if (it == series_.end()) throw TraceLookupError(key);
  return it->second;
}

TraceTable parse_traces(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::map<TraceKey, TraceSeries> acc;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      const std::vector<std::string> expected{"technique", "model", "dataset", "device_class",
                                              "stage",     "unit",  "value"};
      if (fields != expected) throw TraceParseError(src, lineno, "missing or malformed header");
      header_seen = true;
      continue;
    }
    if (fields.size() != 7) {
      throw TraceParseError(src, lineno, fmt::format("expected 7 fields, found {}", fields.size()));
    }
    TraceKey key;
    Unit unit{};
    try {
      key.technique = parse_technique(fields[0]);
      key.model = fields[1];
      key.dataset = fields[2];
      key.device_class = fields[3];
      key.stage = parse_stage_kind(fields[4]);
      unit = parse_unit(fields[5]);
      key.validate();
    } catch (const std::invalid_argument& e) {
      throw TraceParseError(src, lineno, e.what());
    }
    if (unit != unit_for(key.stage)) {
      throw TraceParseError(src, lineno, fmt::format("stage {} requires unit {}", fields[4],
                                                     to_string(unit_for(key.stage))));
    }
    const auto value = parse_double(fields[6]);
    if (!value) throw TraceParseError(src, lineno, fmt::format("malformed value '{}'", fields[6]));
    if (!(*value > 0.0) || !std::isfinite(*value)) {
      throw TraceParseError(src, lineno, fmt::format("value {} is not positive", fields[6]));
    }
    auto [it, inserted] = acc.try_emplace(key, TraceSeries{key, unit, {}});
    it->second.values.push_back(*value);
  }
  if (!header_seen) throw TraceParseError(src, lineno, "missing header");
  TraceTable table;
  for (auto& [_, series] : acc) table.insert(std::move(series));
  return table;
}

TraceTable load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open trace file {}", path.string()));
  return parse_traces(in, path.string());
}

void write_traces(const TraceTable& table, std::ostream& out) {
  out << "technique,model,dataset,device_class,stage,unit,value\n";
  for (const auto& [key, series] : table) {
    const std::string prefix = fmt::format("{},{},{},{},{},{},", to_string(key.technique), key.model,
                                           key.dataset, key.device_class, to_string(key.stage),
                                           to_string(series.unit));
    for (double v : series.values) out << prefix << format_number(v) << '\n';
  }
}

double sample(const TraceTable& table, const TraceKey& key, RngStream& rng) {
  const auto& values = table.at(key).values;
  return values[rng.uniform_index(values.size())];
}

double to_sim_units(Unit unit, double value) { return unit == Unit::Milliseconds ? value / 1000.0 : value; }

void MixtureSpec::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw std::invalid_argument("mixture weight must be >= 0");
    if (!(c.stddev >= 0.0)) throw std::invalid_argument("mixture stddev must be >= 0");
    if (c.weight > 0.0 && c.stddev == 0.0 && !(c.mean > 0.0)) {
      throw std::invalid_argument("degenerate mixture component cannot produce positive values");
    }
    total += c.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("mixture weights are all zero");
}

double MixtureSpec::nominal_mean() const {
  double total = 0.0, acc = 0.0;
  for (const auto& c : components) {
    total += c.weight;
    acc += c.weight * c.mean;
  }
  return acc / total;
}

namespace {

// Positive draw from N(mean, stddev^2) conditioned on x > 0.
double positive_normal(double mean, double stddev, RngStream& rng) {
  if (stddev == 0.0) return mean;
  const double lower = -mean / stddev;  // standardized truncation point
  if (lower < 1.0) {
    // Acceptance probability is at least 1 - Phi(1) ~ 0.16.
    for (;;) {
      const double x = rng.normal(mean, stddev);
      if (x > 0.0) return x;
    }
  }
  // Deep tail: exponential proposal for the standardized one-sided normal.
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double z = lower - std::log1p(-rng.uniform01()) / rate;
    const double accept = std::exp(-0.5 * (z - rate) * (z - rate));
    if (rng.uniform01() <= accept) {
      const double x = mean + stddev * z;
      if (x > 0.0) return x;
    }
  }
}

}  // namespace

TraceSeries synthesize(const MixtureSpec& spec, const TraceKey& key, Unit unit, std::size_t n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("synthesize requires n >= 1");
  spec.validate();
  double total = 0.0;
  for (const auto& c : spec.components) total += c.weight;

  TraceSeries out{key, unit, {}};
  out.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const MixtureComponent* chosen = nullptr;
    for (const auto& c : spec.components)
      if (c.weight > 0.0) chosen = &c;
    if (spec.components.size() > 1) {
      double u = rng.uniform01() * total;
      for (const auto& c : spec.components) {
        if (u < c.weight) {
          chosen = &c;
          break;
        }
        u -= c.weight;
      }
    }
    out.values.push_back(positive_normal(chosen->mean, chosen->stddev, rng));
  }
  out.validate();
  return out;
}

}  // namespace edgeprivsim
