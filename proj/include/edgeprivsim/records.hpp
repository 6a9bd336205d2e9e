#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "edgeprivsim/infra.hpp"
#include "edgeprivsim/sim_engine.hpp"
#include "edgeprivsim/trace_store.hpp"

namespace edgeprivsim {

enum class Bucket : std::uint8_t { Preprocess, Encryption, Inference, Communication };
enum class StageType : std::uint8_t { Compute, Transfer };

std::string_view to_string(Bucket b);
std::string_view to_string(StageType t);

/// Per-request timing decomposition, all in virtual seconds.
struct ResponseBreakdown {
  double preprocess = 0.0;
  double encryption = 0.0;
  double inference = 0.0;
  double communication = 0.0;
  double queuing = 0.0;
  double total = 0.0;

  double& bucket(Bucket b);
  double service_time() const { return preprocess + encryption + inference + communication; }
  /// Sets total to the sum of the five components.
  void close() { total = service_time() + queuing; }
};

struct StageRecord {
  std::size_t index = 0;
  std::string label;
  StageType type = StageType::Compute;
  Bucket bucket = Bucket::Inference;
  std::vector<NodeId> nodes;  // compute: every node holding cores; transfer: both link endpoints
  int cores = 0;
  SimTime ready = 0.0;
  SimTime start = 0.0;
  SimTime end = 0.0;
  double bytes = 0.0;
  bool skipped = false;  // optional stage without a trace

  double duration() const { return end - start; }
};

struct RequestRecord {
  std::uint64_t id = 0;
  std::uint32_t user = 0;
  std::uint32_t user_seq = 0;
  Technique technique = Technique::Dp;
  std::string model;
  std::string dataset;
  int parties = 1;
  NodeId origin;
  std::vector<NodeId> serving;  // server, or P0..P(n-1) for smc
  SimTime issued = 0.0;
  SimTime completed = 0.0;
  std::vector<StageRecord> stages;
  ResponseBreakdown breakdown;
  double energy_wh = 0.0;
  std::string error;

  bool ok() const { return error.empty(); }
};

}  // namespace edgeprivsim
