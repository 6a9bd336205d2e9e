#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgeprivsim/sim_engine.hpp"

namespace edgeprivsim {

enum class Technique : std::uint8_t { Dp, Smc, Fhe, Baseline };
enum class StageKind : std::uint8_t { Preprocess, Encrypt, Inference, Decrypt, CommBytes };
enum class Unit : std::uint8_t { Milliseconds, Bytes };

std::string_view to_string(Technique t);
std::string_view to_string(StageKind s);
std::string_view to_string(Unit u);
/// Each parser throws std::invalid_argument on an unknown label.
Technique parse_technique(std::string_view text);
StageKind parse_stage_kind(std::string_view text);
Unit parse_unit(std::string_view text);

struct TraceKey {
  Technique technique = Technique::Dp;
  std::string model;
  std::string dataset;
  std::string device_class;
  StageKind stage = StageKind::Inference;

  /// Rejects empty labels and DP keys for encrypt, decrypt or comm-bytes stages.
  void validate() const;
  std::string to_string() const;

  friend auto operator<=>(const TraceKey&, const TraceKey&) = default;
};

/// Unit implied by a stage: comm-bytes in bytes, everything else in milliseconds.
Unit unit_for(StageKind stage);

struct TraceSeries {
  TraceKey key;
  Unit unit = Unit::Milliseconds;
  std::vector<double> values;

  void validate() const;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::string source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TraceLookupError : public std::runtime_error {
 public:
  explicit TraceLookupError(const TraceKey& key);
  const TraceKey& key() const { return key_; }

 private:
  TraceKey key_;
};

/// Immutable-after-load set of trace series, one per key.
class TraceTable {
 public:
  /// Throws std::invalid_argument on a duplicate key or an invalid series.
  void insert(TraceSeries series);
  /// Moves every series of `other` in; duplicate keys are rejected.
  void merge(TraceTable other);

  bool contains(const TraceKey& key) const { return series_.count(key) != 0; }
  /// Throws TraceLookupError when the key is absent.
  const TraceSeries& at(const TraceKey& key) const;
  std::size_t size() const { return series_.size(); }
  auto begin() const { return series_.begin(); }
  auto end() const { return series_.end(); }

 private:
  std::map<TraceKey, TraceSeries> series_;
};

/// Parses `technique,model,dataset,device_class,stage,unit,value` rows.
/// Rows sharing a key accumulate, in file order, into one series.
TraceTable parse_traces(std::istream& in, std::string_view source = "<stream>");
TraceTable load_traces(const std::filesystem::path& path);

/// Writes the header and one row per value, series in key order.
void write_traces(const TraceTable& table, std::ostream& out);

/// Uniform draw, with replacement, from the key's series (value in series unit).
double sample(const TraceTable& table, const TraceKey& key, RngStream& rng);

/// Converts a series value to simulation units: seconds or bytes.
double to_sim_units(Unit unit, double value);

struct MixtureComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 0.0;

  friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

/// Gaussian mixture truncated to strictly positive values.
struct MixtureSpec {
  std::vector<MixtureComponent> components;

  /// Rejects an empty spec, negative weights or stddevs, all-zero weights and
  /// components that cannot produce positive values (mean <= 0, stddev 0).
  void validate() const;
  /// Mean of the untruncated mixture.
  double nominal_mean() const;

  friend bool operator==(const MixtureSpec&, const MixtureSpec&) = default;
};

/// Draws n values: component by (normalized) weight, then a Gaussian draw
/// redrawn until positive.
TraceSeries synthesize(const MixtureSpec& spec, const TraceKey& key, Unit unit, std::size_t n,
                       RngStream& rng);

}  // namespace edgeprivsim
