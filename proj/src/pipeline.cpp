#include "edgeprivsim/pipeline.hpp"

#include <algorithm>
#include <limits>

#include <fmt/core.h>

#include "edgeprivsim/metrics.hpp"

namespace edgeprivsim {

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::Preprocess: return "preprocess";
    case Bucket::Encryption: return "encryption";
    case Bucket::Inference: return "inference";
    case Bucket::Communication: return "communication";
  }
  return "?";
}

std::string_view to_string(StageType t) { return t == StageType::Compute ? "compute" : "transfer"; }

double& ResponseBreakdown::bucket(Bucket b) {
  switch (b) {
    case Bucket::Preprocess: return preprocess;
    case Bucket::Encryption: return encryption;
    case Bucket::Inference: return inference;
    case Bucket::Communication: return communication;
  }
  return inference;
}

std::string_view to_string(Site s) {
  switch (s) {
    case Site::Origin: return "origin";
    case Site::Server: return "server";
    case Site::InputOwner: return "input-owner";
    case Site::ServerAndInputOwner: return "server+input-owner";
    case Site::AllParties: return "all-parties";
  }
  return "?";
}

std::string_view to_string(Route r) {
  switch (r) {
    case Route::OriginToServer: return "origin->server";
    case Route::ServerToOrigin: return "server->origin";
    case Route::AcrossParties: return "across-parties";
  }
  return "?";
}

namespace {

Stage compute(std::string label, Bucket bucket, Site site, StageKind source, bool required, int cores = 1) {
  Stage s;
  s.label = std::move(label);
  s.type = StageType::Compute;
  s.bucket = bucket;
  s.site = site;
  s.source = source;
  s.required = required;
  s.cores = cores;
  return s;
}

Stage transfer(std::string label, Route route, bool from_trace, bool required, double constant_bytes) {
  Stage s;
  s.label = std::move(label);
  s.type = StageType::Transfer;
  s.bucket = Bucket::Communication;
  s.route = route;
  s.source = StageKind::CommBytes;
  s.from_trace = from_trace;
  s.required = required;
  s.constant_bytes = constant_bytes;
  s.cores = 0;
  return s;
}

}  // namespace

StagePlan build_plan(Technique technique, int parties, const Topology& topology, const PlanOptions& options) {
  if (options.inference_cores < 1) throw ConfigError("workload.inference_cores", "must be >= 1");
  const auto servers = topology.servers();
  if (servers.empty()) throw ConfigError("topology", "no edge server to host inference");
  if (topology.devices().empty()) throw ConfigError("topology", "no edge device to issue requests");

  StagePlan plan;
  plan.technique = technique;
  plan.parties = parties;
  const int ic = options.inference_cores;
  switch (technique) {
    case Technique::Dp:
      if (parties != 1) throw ConfigError("workload.parties", "dp runs with exactly one party");
      plan.stages = {
          compute("preprocess", Bucket::Preprocess, Site::Origin, StageKind::Preprocess, true),
          transfer("send-input", Route::OriginToServer, false, false, options.dp_payload_bytes),
          compute("inference", Bucket::Inference, Site::Server, StageKind::Inference, true, ic),
      };
      plan.artifacts = {"dp-sgd trained model"};
      break;
    case Technique::Fhe:
      if (parties != 1) throw ConfigError("workload.parties", "fhe runs with exactly one party");
      plan.stages = {
          compute("preprocess", Bucket::Preprocess, Site::Origin, StageKind::Preprocess, false),
          compute("encode+encrypt", Bucket::Encryption, Site::Origin, StageKind::Encrypt, true),
          transfer("send-ciphertext", Route::OriginToServer, true, false, options.fhe_input_bytes),
          compute("fhe-inference", Bucket::Inference, Site::Server, StageKind::Inference, true, ic),
          transfer("return-ciphertext", Route::ServerToOrigin, false, false, options.fhe_result_bytes),
          compute("decrypt", Bucket::Encryption, Site::Origin, StageKind::Decrypt, false),
      };
      plan.artifacts = {"compiled fhe circuit", "public key", "secret key", "evaluation key"};
      break;
    case Technique::Smc: {
      if (parties != 2 && parties != 3) throw ConfigError("workload.parties", "smc runs with 2 or 3 parties");
      const auto devices = topology.devices();
      if (static_cast<int>(devices.size()) < parties - 1) {
        throw ConfigError("workload.parties", fmt::format("{} parties need {} edge devices, topology has {}",
                                                          parties, parties - 1, devices.size()));
      }
      plan.stages = {
          compute("preprocess", Bucket::Preprocess, Site::Origin, StageKind::Preprocess, false),
          compute("share-encrypt", Bucket::Encryption, Site::ServerAndInputOwner, StageKind::Encrypt, true),
          compute("joint-inference", Bucket::Inference, Site::AllParties, StageKind::Inference, true, ic),
          transfer("party-communication", Route::AcrossParties, true, true, 0.0),
          compute("reveal", Bucket::Encryption, Site::InputOwner, StageKind::Decrypt, false),
      };
      plan.artifacts = {"secret-shared model", fmt::format("world_size={}", parties)};
      break;
    }
    case Technique::Baseline:
      throw ConfigError("workload.technique", "baseline has no privacy pipeline");
  }
  return plan;
}

std::vector<NodeId> resolve_site(Site site, const Placement& p) {
  switch (site) {
    case Site::Origin: return {p.origin};
    case Site::Server: return {p.serving.at(0)};
    case Site::InputOwner: return {p.serving.at(1)};
    case Site::ServerAndInputOwner: return {p.serving.at(0), p.serving.at(1)};
    case Site::AllParties: return p.serving;
  }
  return {};
}

TraceKey stage_trace_key(const Stage& stage, Technique technique, const std::string& model,
                         const std::string& dataset, const Topology& topology, const Placement& placement) {
  const NodeId host =
      stage.type == StageType::Compute ? resolve_site(stage.site, placement).front() : placement.serving.at(0);
  return TraceKey{technique, model, dataset, topology.node(host).device_class, stage.source};
}

double transfer_seconds(double bytes, const LinkSpec& link) {
  return bytes * 8.0 / (link.bandwidth_mbps * 1e6) + link.base_latency_s;
}

namespace {

// Slowest link between P0 and the other parties; ties keep the first.
LinkSpec bottleneck_link(const Topology& topology, const Placement& p, Route route) {
  switch (route) {
    case Route::OriginToServer: return topology.link_between(p.origin, p.serving.at(0));
    case Route::ServerToOrigin: return topology.link_between(p.serving.at(0), p.origin);
    case Route::AcrossParties: {
      LinkSpec worst = topology.link_between(p.serving.at(0), p.serving.at(1));
      for (std::size_t i = 2; i < p.serving.size(); ++i) {
        LinkSpec l = topology.link_between(p.serving.at(0), p.serving.at(i));
        if (l.bandwidth_mbps < worst.bandwidth_mbps ||
            (l.bandwidth_mbps == worst.bandwidth_mbps && l.base_latency_s > worst.base_latency_s)) {
          worst = l;
        }
      }
      return worst;
    }
  }
  throw std::logic_error("unknown route");
}

}  // namespace

PipelineExecutor::PipelineExecutor(const Topology& topology, const TraceTable& table, SchedulerPolicy policy,
                                   ExecutorOptions options)
    : topology_(topology),
      table_(table),
      scheduler_(std::move(policy), options.seed),
      options_(std::move(options)),
      infra_(topology) {
  events_.set_logging(options_.log_events);
}

double PipelineExecutor::footprint_mb(Technique technique, const std::string& model) const {
  auto it = options_.footprints_mb.find({technique, model});
  return it == options_.footprints_mb.end() ? options_.default_footprint_mb : it->second;
}

std::uint64_t PipelineExecutor::submit(RequestSpec spec, SimTime at) {
  if (spec.plan == nullptr) throw std::invalid_argument("request without a plan");
  const std::uint64_t id = next_id_++;
  Active req;
  req.record.id = id;
  req.record.user = spec.user;
  req.record.user_seq = spec.user_seq;
  req.record.technique = spec.plan->technique;
  req.record.model = spec.model;
  req.record.dataset = spec.dataset;
  req.record.parties = spec.plan->parties;
  req.record.origin = spec.origin;
  req.record.issued = at;
  req.spec = std::move(spec);
  active_.emplace(id, std::move(req));
  events_.schedule(at, EventKind::RequestIssue, id);
  return id;
}

SimTime PipelineExecutor::run() {
  const SimTime end = events_.run_until_empty([this](const Event& ev) { dispatch(ev); });
  if (!active_.empty()) {
    throw std::logic_error(fmt::format("{} requests never completed", active_.size()));
  }
  infra_.finalize(end);
  for (auto& rec : records_) rec.energy_wh = attribute_energy(rec, infra_);
  return end;
}

void PipelineExecutor::dispatch(const Event& ev) {
  auto it = active_.find(ev.subject);
  if (it == active_.end()) throw std::logic_error(fmt::format("event for unknown request {}", ev.subject));
  Active& req = it->second;
  switch (ev.kind) {
    case EventKind::RequestIssue: issue(req, ev.time); break;
    case EventKind::StageGranted: on_granted(req, ev.time); break;
    case EventKind::StageComplete: complete_stage(req, ev.time); break;
    case EventKind::TransferComplete:
      ++req.stage;
      begin_stage(req, ev.time);
      break;
    default: throw std::logic_error("unexpected event kind");
  }
}

void PipelineExecutor::issue(Active& req, SimTime now) {
  const StagePlan& plan = *req.spec.plan;
  req.placement.origin = req.spec.origin;
  req.phase = Phase::Admission;
  req.ready_at = now;
  AcquireResult res;
  try {
    if (plan.technique == Technique::Smc) {
      req.placement.serving = scheduler_.select_parties(plan.parties, infra_);
    } else {
      std::vector<NodeView> views;
      for (NodeId id : topology_.servers()) views.push_back(view_of(infra_, id));
      req.placement.serving = {scheduler_.select_server(views)};
    }
    req.record.serving = req.placement.serving;

    const double mem = footprint_mb(plan.technique, req.spec.model);
    std::vector<ResourceClaim> claims;
    for (NodeId n : req.placement.serving) claims.push_back({n, 0, mem});
    res = infra_.acquire_all(claims, now);
  } catch (const SchedulingError& e) {
    fail(req, now, e.what());
    return;
  } catch (const UnschedulableError& e) {
    fail(req, now, e.what());
    return;
  }
  req.admission = res.ticket;
  if (res.granted) {
    on_granted(req, now);
  } else {
    ticket_owner_[res.ticket] = req.record.id;
  }
}

void PipelineExecutor::on_granted(Active& req, SimTime now) {
  req.record.breakdown.queuing += now - req.ready_at;
  if (req.phase == Phase::Admission) {
    req.phase = Phase::Stage;
    begin_stage(req, now);
  } else {
    start_compute(req, now);
  }
}

RngStream PipelineExecutor::stage_stream(const Active& req) const {
  return RngStream(options_.seed, fmt::format("sample/u{}/r{}/s{}", req.record.user, req.record.user_seq, req.stage));
}

void PipelineExecutor::begin_stage(Active& req, SimTime now) {
  const StagePlan& plan = *req.spec.plan;
  if (req.stage >= plan.stages.size()) {
    finish(req, now);
    return;
  }
  const Stage& stage = plan.stages[req.stage];
  const TraceKey key =
      stage_trace_key(stage, plan.technique, req.spec.model, req.spec.dataset, topology_, req.placement);

  StageRecord rec;
  rec.index = req.stage;
  rec.label = stage.label;
  rec.type = stage.type;
  rec.bucket = stage.bucket;
  rec.ready = now;

  if (stage.type == StageType::Transfer) {
    double bytes = stage.constant_bytes;
    if (stage.from_trace && table_.contains(key)) {
      RngStream rng = stage_stream(req);
      bytes = to_sim_units(Unit::Bytes, sample(table_, key, rng));
    } else if (stage.from_trace && stage.required) {
      fail(req, now, TraceLookupError(key).what());
      return;
    }
    const LinkSpec link = bottleneck_link(topology_, req.placement, stage.route);
    const double seconds = transfer_seconds(bytes, link);
    rec.nodes = {link.a, link.b};
    rec.bytes = bytes;
    rec.start = now;
    rec.end = now + seconds;
    req.record.breakdown.bucket(stage.bucket) += seconds;
    req.record.stages.push_back(std::move(rec));
    events_.schedule(now + seconds, EventKind::TransferComplete, req.record.id);
    return;
  }

  if (!table_.contains(key)) {
    if (stage.required) {
      fail(req, now, TraceLookupError(key).what());
      return;
    }
    rec.skipped = true;
    rec.start = rec.end = now;
    req.record.stages.push_back(std::move(rec));
    ++req.stage;
    begin_stage(req, now);
    return;
  }

  rec.nodes = resolve_site(stage.site, req.placement);
  rec.cores = stage.cores;
  req.record.stages.push_back(std::move(rec));

  std::vector<ResourceClaim> claims;
  for (NodeId n : req.record.stages.back().nodes) claims.push_back({n, stage.cores, 0.0});
  req.ready_at = now;
  AcquireResult res;
  try {
    res = infra_.acquire_all(claims, now);
  } catch (const UnschedulableError& e) {
    fail(req, now, e.what());
    return;
  }
  req.stage_ticket = res.ticket;
  if (res.granted) {
    start_compute(req, now);
  } else {
    ticket_owner_[res.ticket] = req.record.id;
  }
}

void PipelineExecutor::start_compute(Active& req, SimTime now) {
  const StagePlan& plan = *req.spec.plan;
  const Stage& stage = plan.stages[req.stage];
  const TraceKey key =
      stage_trace_key(stage, plan.technique, req.spec.model, req.spec.dataset, topology_, req.placement);
  RngStream rng = stage_stream(req);
  const double seconds = to_sim_units(Unit::Milliseconds, sample(table_, key, rng));
  StageRecord& rec = req.record.stages.back();
  rec.start = now;
  rec.end = now + seconds;
  req.record.breakdown.bucket(stage.bucket) += seconds;
  events_.schedule(rec.end, EventKind::StageComplete, req.record.id);
}

void PipelineExecutor::complete_stage(Active& req, SimTime now) {
  const TicketId held = req.stage_ticket;
  req.stage_ticket = 0;
  notify_granted(infra_.release(held, now), now);
  ++req.stage;
  begin_stage(req, now);
}

void PipelineExecutor::notify_granted(const std::vector<TicketId>& granted, SimTime now) {
  for (TicketId t : granted) {
    auto it = ticket_owner_.find(t);
    if (it == ticket_owner_.end()) throw std::logic_error(fmt::format("granted ticket {} has no owner", t));
    events_.schedule(now, EventKind::StageGranted, it->second);
    ticket_owner_.erase(it);
  }
}

void PipelineExecutor::finish(Active& req, SimTime now) {
  if (req.admission != 0) notify_granted(infra_.release(req.admission, now), now);
  req.record.completed = now;
  req.record.breakdown.close();
  records_.push_back(std::move(req.record));
  active_.erase(records_.back().id);
  if (hook_) hook_(records_.back());
}

void PipelineExecutor::fail(Active& req, SimTime now, std::string message) {
  // Failures happen before a stage ticket is taken, so only admission can be held.
  if (req.admission != 0 && infra_.is_granted(req.admission)) {
    notify_granted(infra_.release(req.admission, now), now);
  }
  req.record.error = std::move(message);
  req.record.completed = now;
  req.record.breakdown.close();
  records_.push_back(std::move(req.record));
  active_.erase(records_.back().id);
  if (hook_) hook_(records_.back());
}

RequestRecord execute(const RequestSpec& spec, const Topology& topology, const TraceTable& table,
                      SchedulerPolicy policy, std::uint64_t seed) {
  ExecutorOptions opts;
  opts.seed = seed;
  PipelineExecutor exec(topology, table, std::move(policy), opts);
  exec.submit(spec, 0.0);
  exec.run();
  return exec.records().front();
}

std::vector<NodeInterval> smc_occupancy(const RequestRecord& record) {
  if (record.technique != Technique::Smc) throw std::invalid_argument("smc_occupancy on a non-smc request");
  for (const auto& st : record.stages) {
    if (st.type == StageType::Compute && st.bucket == Bucket::Inference) {
      std::vector<NodeInterval> out;
      for (NodeId n : st.nodes) out.push_back({n, st.start, st.end});
      return out;
    }
  }
  return {};
}

}  // namespace edgeprivsim
