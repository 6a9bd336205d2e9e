#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "edgeprivsim/infra.hpp"
#include "edgeprivsim/records.hpp"
#include "edgeprivsim/scheduler.hpp"
#include "edgeprivsim/sim_engine.hpp"
#include "edgeprivsim/trace_store.hpp"

namespace edgeprivsim {

/// Where a compute stage runs, relative to the request's placement.
enum class Site : std::uint8_t {
  Origin,               // the requesting edge device
  Server,               // serving edge server (P0 for smc)
  InputOwner,           // P1
  ServerAndInputOwner,  // P0 and P1 together
  AllParties,           // P0..P(n-1) together
};

enum class Route : std::uint8_t { OriginToServer, ServerToOrigin, AcrossParties };

std::string_view to_string(Site s);
std::string_view to_string(Route r);

struct Stage {
  std::string label;
  StageType type = StageType::Compute;
  Bucket bucket = Bucket::Inference;
  Site site = Site::Server;
  Route route = Route::OriginToServer;
  StageKind source = StageKind::Inference;  // duration trace, or comm-bytes for transfers
  bool from_trace = true;                   // transfers: bytes drawn from the comm-bytes trace
  bool required = true;                     // absent trace is an error rather than a skip
  double constant_bytes = 0.0;              // transfer payload when not drawn from a trace
  int cores = 1;
};

struct StagePlan {
  Technique technique = Technique::Dp;
  int parties = 1;
  std::vector<Stage> stages;
  std::vector<std::string> artifacts;  // labels of deployed material, no numeric role
};

struct PlanOptions {
  int inference_cores = 1;
  double dp_payload_bytes = 0.0;
  double fhe_input_bytes = 0.0;  // used when no fhe comm-bytes trace exists
  double fhe_result_bytes = 0.0;
};

/// Builds the per-technique pipeline:
///   dp:  preprocess@device, transfer(input), inference@server
///   fhe: preprocess@device, encode+encrypt@device, transfer(ciphertext),
///        fhe-inference@server, transfer(result), decrypt@device
///   smc: preprocess@device, share-encrypt@P0+P1, joint-inference@all parties,
///        communication across parties, reveal@P1
/// Throws ConfigError for invalid party counts or a topology that cannot host them.
StagePlan build_plan(Technique technique, int parties, const Topology& topology, const PlanOptions& options = {});

/// Node ids a request occupies: origin device and its serving nodes.
struct Placement {
  NodeId origin;
  std::vector<NodeId> serving;
};

std::vector<NodeId> resolve_site(Site site, const Placement& placement);

/// Trace key a stage draws from; device class is the first hosting node's
/// (compute) or the serving server's (transfers).
TraceKey stage_trace_key(const Stage& stage, Technique technique, const std::string& model,
                         const std::string& dataset, const Topology& topology, const Placement& placement);

/// Contention-free transfer time: bytes * 8 / bandwidth + base latency.
double transfer_seconds(double bytes, const LinkSpec& link);

struct RequestSpec {
  std::uint32_t user = 0;
  std::uint32_t user_seq = 0;
  const StagePlan* plan = nullptr;
  std::string model;
  std::string dataset;
  NodeId origin;
};

struct ExecutorOptions {
  std::uint64_t seed = 0;
  double default_footprint_mb = 512.0;
  /// Memory reserved on each serving node while a request is in flight, by (technique, model).
  std::map<std::pair<Technique, std::string>, double> footprints_mb;
  bool log_events = false;
};

/// Event-driven execution of stage plans over a shared infrastructure.
class PipelineExecutor {
 public:
  using CompletionHook = std::function<void(const RequestRecord&)>;

  PipelineExecutor(const Topology& topology, const TraceTable& table, SchedulerPolicy policy,
                   ExecutorOptions options);

  /// Queues a request to be issued at `at`. Returns its id.
  std::uint64_t submit(RequestSpec spec, SimTime at);
  void on_completion(CompletionHook hook) { hook_ = std::move(hook); }

  /// Runs to quiescence, closes the utilization history and attributes energy.
  SimTime run();

  /// Finished requests (including aborted ones) in completion order.
  const std::vector<RequestRecord>& records() const { return records_; }
  const Infrastructure& infrastructure() const { return infra_; }
  const EventQueue& events() const { return events_; }
  SimTime now() const { return events_.now(); }
  double footprint_mb(Technique technique, const std::string& model) const;

 private:
  enum class Phase : std::uint8_t { Admission, Stage };

  struct Active {
    RequestSpec spec;
    RequestRecord record;
    Placement placement;
    std::size_t stage = 0;
    Phase phase = Phase::Admission;
    TicketId admission = 0;
    TicketId stage_ticket = 0;
    SimTime ready_at = 0.0;
  };

  void dispatch(const Event& ev);
  void issue(Active& req, SimTime now);
  void on_granted(Active& req, SimTime now);
  void begin_stage(Active& req, SimTime now);
  void start_compute(Active& req, SimTime now);
  void complete_stage(Active& req, SimTime now);
  void finish(Active& req, SimTime now);
  void fail(Active& req, SimTime now, std::string message);
  void notify_granted(const std::vector<TicketId>& granted, SimTime now);
  RngStream stage_stream(const Active& req) const;

  const Topology& topology_;
  const TraceTable& table_;
  Scheduler scheduler_;
  ExecutorOptions options_;
  Infrastructure infra_;
  EventQueue events_;
  std::map<std::uint64_t, Active> active_;
  std::map<TicketId, std::uint64_t> ticket_owner_;
  std::vector<RequestRecord> records_;
  CompletionHook hook_;
  std::uint64_t next_id_ = 0;
};

/// Runs one request alone on an idle system.
RequestRecord execute(const RequestSpec& spec, const Topology& topology, const TraceTable& table,
                      SchedulerPolicy policy = {}, std::uint64_t seed = 0);

struct NodeInterval {
  NodeId node;
  SimTime start = 0.0;
  SimTime end = 0.0;
};

/// Core holds of the joint-inference stage of a completed smc request: one per party.
std::vector<NodeInterval> smc_occupancy(const RequestRecord& record);

}  // namespace edgeprivsim
