#include "edgeprivsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include <fmt/core.h>

#include "edgeprivsim/io.hpp"

namespace edgeprivsim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

std::string at_index(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == k;
    if (!known) throw ConfigError(join(path, k), "unknown key");
  }
}

const json& require(const json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required key");
  return *it;
}

const json* optional(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

std::uint64_t as_uint(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string req_string(const json& o, std::string_view k, const std::string& p) {
  return as_string(require(o, k, p), join(p, k));
}
double req_number(const json& o, std::string_view k, const std::string& p) {
  return as_number(require(o, k, p), join(p, k));
}
std::uint64_t req_uint(const json& o, std::string_view k, const std::string& p) {
  return as_uint(require(o, k, p), join(p, k));
}
std::string opt_string(const json& o, std::string_view k, const std::string& p, std::string def) {
  const json* v = optional(o, k);
  return v ? as_string(*v, join(p, k)) : def;
}
double opt_number(const json& o, std::string_view k, const std::string& p, double def) {
  const json* v = optional(o, k);
  return v ? as_number(*v, join(p, k)) : def;
}
std::uint64_t opt_uint(const json& o, std::string_view k, const std::string& p, std::uint64_t def) {
  const json* v = optional(o, k);
  return v ? as_uint(*v, join(p, k)) : def;
}

const json& array_at(const json& o, std::string_view k, const std::string& p, bool required) {
  static const json empty = json::array();
  const json* v = required ? &require(o, k, p) : optional(o, k);
  if (v == nullptr) return empty;
  if (!v->is_array()) throw ConfigError(join(p, k), "expected an array");
  return *v;
}

template <typename Fn>
auto parse_enum(Fn fn, const std::string& text, const std::string& path) {
  try {
    return fn(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

Technique parse_mix_technique(const json& o, const std::string& p) {
  const std::string path = join(p, "technique");
  const Technique t = parse_enum(parse_technique, req_string(o, "technique", p), path);
  if (t == Technique::Baseline) throw ConfigError(path, "baseline is not a privacy technique");
  return t;
}

DeviceClass parse_device_class(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"name", "layer", "cores", "memory_mb", "p_max", "p_static"});
  DeviceClass c;
  c.name = req_string(j, "name", p);
  c.layer = parse_enum(parse_layer, req_string(j, "layer", p), join(p, "layer"));
  c.cores = static_cast<int>(req_uint(j, "cores", p));
  c.memory_mb = req_number(j, "memory_mb", p);
  c.p_max = req_number(j, "p_max", p);
  c.p_static = req_number(j, "p_static", p);
  if (c.cores < 1) throw ConfigError(join(p, "cores"), "must be >= 1");
  if (!(c.memory_mb > 0.0)) throw ConfigError(join(p, "memory_mb"), "must be > 0");
  if (c.p_static < 0.0 || c.p_static > c.p_max) throw ConfigError(join(p, "p_static"), "must lie in [0, p_max]");
  return c;
}

LinkDefaults parse_link_defaults(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"bandwidth_mbps", "base_latency_s"});
  LinkDefaults d{req_number(j, "bandwidth_mbps", p), opt_number(j, "base_latency_s", p, 0.0)};
  if (!(d.bandwidth_mbps > 0.0)) throw ConfigError(join(p, "bandwidth_mbps"), "must be > 0");
  if (d.base_latency_s < 0.0) throw ConfigError(join(p, "base_latency_s"), "must be >= 0");
  return d;
}

TopologyConfig parse_topology(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"preset", "nodes", "links", "default_link"});
  TopologyConfig t;
  t.preset = opt_string(j, "preset", p, "");
  if (!t.preset.empty() && t.preset != "default") throw ConfigError(join(p, "preset"), "unknown preset");
  const json& nodes = array_at(j, "nodes", p, t.preset.empty());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string np = at_index(join(p, "nodes"), i);
    expect_object(nodes[i], np);
    check_keys(nodes[i], np, {"name", "class"});
    t.nodes.push_back({req_string(nodes[i], "name", np), req_string(nodes[i], "class", np)});
  }
  if (!t.preset.empty() && !t.nodes.empty()) throw ConfigError(join(p, "nodes"), "cannot combine nodes with a preset");
  if (t.preset.empty() && t.nodes.empty()) throw ConfigError(join(p, "nodes"), "topology has no nodes");
  const json& links = array_at(j, "links", p, false);
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string lp = at_index(join(p, "links"), i);
    expect_object(links[i], lp);
    check_keys(links[i], lp, {"name", "a", "b", "bandwidth_mbps", "base_latency_s"});
    LinkEntry l;
    l.name = opt_string(links[i], "name", lp, fmt::format("link-{}", i));
    l.a = req_string(links[i], "a", lp);
    l.b = req_string(links[i], "b", lp);
    l.bandwidth_mbps = req_number(links[i], "bandwidth_mbps", lp);
    l.base_latency_s = opt_number(links[i], "base_latency_s", lp, 0.0);
    t.links.push_back(std::move(l));
  }
  if (const json* d = optional(j, "default_link")) t.default_link = parse_link_defaults(*d, join(p, "default_link"));
  return t;
}

TraceKey parse_key(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"technique", "model", "dataset", "device_class", "stage"});
  TraceKey k;
  k.technique = parse_enum(parse_technique, req_string(j, "technique", p), join(p, "technique"));
  k.model = req_string(j, "model", p);
  k.dataset = req_string(j, "dataset", p);
  k.device_class = req_string(j, "device_class", p);
  k.stage = parse_enum(parse_stage_kind, req_string(j, "stage", p), join(p, "stage"));
  try {
    k.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(p, e.what());
  }
  return k;
}

MixtureTrace parse_mixture(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"key", "unit", "points", "components", "note"});
  MixtureTrace m;
  m.key = parse_key(require(j, "key", p), join(p, "key"));
  m.unit = unit_for(m.key.stage);
  if (const json* u = optional(j, "unit")) {
    m.unit = parse_enum(parse_unit, as_string(*u, join(p, "unit")), join(p, "unit"));
    if (m.unit != unit_for(m.key.stage)) throw ConfigError(join(p, "unit"), "unit does not match the stage");
  }
  m.points = opt_uint(j, "points", p, 500);
  if (m.points < 1) throw ConfigError(join(p, "points"), "must be >= 1");
  const json& comps = array_at(j, "components", p, true);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string cp = at_index(join(p, "components"), i);
    expect_object(comps[i], cp);
    check_keys(comps[i], cp, {"weight", "mean", "stddev"});
    m.spec.components.push_back(
        {opt_number(comps[i], "weight", cp, 1.0), req_number(comps[i], "mean", cp), opt_number(comps[i], "stddev", cp, 0.0)});
  }
  try {
    m.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(join(p, "components"), e.what());
  }
  m.note = opt_string(j, "note", p, "");
  return m;
}

TraceSources parse_traces_section(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"files", "mixtures"});
  TraceSources t;
  const json& files = array_at(j, "files", p, false);
  for (std::size_t i = 0; i < files.size(); ++i) t.files.push_back(as_string(files[i], at_index(join(p, "files"), i)));
  const json& mixes = array_at(j, "mixtures", p, false);
  for (std::size_t i = 0; i < mixes.size(); ++i) t.mixtures.push_back(parse_mixture(mixes[i], at_index(join(p, "mixtures"), i)));
  return t;
}

SchedulerPolicy parse_scheduler(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"policy", "parameters"});
  SchedulerPolicy s;
  s.name = parse_enum(parse_policy_name, opt_string(j, "policy", p, "most-available"), join(p, "policy"));
  if (const json* params = optional(j, "parameters")) {
    expect_object(*params, join(p, "parameters"));
    for (const auto& [k, v] : params->items()) s.parameters[k] = as_number(v, join(join(p, "parameters"), k));
  }
  return s;
}

Workload parse_workload(const json& j, const std::string& p) {
  expect_object(j, p);
  check_keys(j, p, {"users", "total_requests", "mix", "smc_parties", "inference_cores", "default_footprint_mb",
                    "footprints", "dp_payload_bytes", "fhe_input_bytes", "fhe_result_bytes"});
  Workload w;
  w.users = static_cast<std::uint32_t>(req_uint(j, "users", p));
  w.total_requests = opt_uint(j, "total_requests", p, 3000);
  const json& mix = array_at(j, "mix", p, true);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const std::string mp = at_index(join(p, "mix"), i);
    expect_object(mix[i], mp);
    check_keys(mix[i], mp, {"technique", "model", "dataset", "weight"});
    MixEntry e;
    e.technique = parse_mix_technique(mix[i], mp);
    e.model = req_string(mix[i], "model", mp);
    e.dataset = req_string(mix[i], "dataset", mp);
    e.weight = opt_number(mix[i], "weight", mp, 1.0);
    if (!(e.weight > 0.0)) throw ConfigError(join(mp, "weight"), "must be > 0");
    w.mix.push_back(std::move(e));
  }
  w.smc_parties = static_cast<int>(opt_uint(j, "smc_parties", p, 3));
  w.inference_cores = static_cast<int>(opt_uint(j, "inference_cores", p, 1));
  w.default_footprint_mb = opt_number(j, "default_footprint_mb", p, 512.0);
  const json& fps = array_at(j, "footprints", p, false);
  for (std::size_t i = 0; i < fps.size(); ++i) {
    const std::string fp = at_index(join(p, "footprints"), i);
    expect_object(fps[i], fp);
    check_keys(fps[i], fp, {"technique", "model", "memory_mb"});
    FootprintEntry f{parse_mix_technique(fps[i], fp), req_string(fps[i], "model", fp),
                     req_number(fps[i], "memory_mb", fp)};
    if (f.memory_mb < 0.0) throw ConfigError(join(fp, "memory_mb"), "must be >= 0");
    w.footprints.push_back(std::move(f));
  }
  w.dp_payload_bytes = opt_number(j, "dp_payload_bytes", p, 0.0);
  w.fhe_input_bytes = opt_number(j, "fhe_input_bytes", p, 0.0);
  w.fhe_result_bytes = opt_number(j, "fhe_result_bytes", p, 0.0);

  if (w.users < 1) throw ConfigError(join(p, "users"), "must be >= 1");
  if (w.total_requests < w.users) throw ConfigError(join(p, "total_requests"), "must be >= users");
  if (w.mix.empty()) throw ConfigError(join(p, "mix"), "must not be empty");
  if (w.smc_parties != 2 && w.smc_parties != 3) throw ConfigError(join(p, "smc_parties"), "must be 2 or 3");
  if (w.inference_cores < 1) throw ConfigError(join(p, "inference_cores"), "must be >= 1");
  if (w.default_footprint_mb < 0.0) throw ConfigError(join(p, "default_footprint_mb"), "must be >= 0");
  for (auto [name, v] : {std::pair{"dp_payload_bytes", w.dp_payload_bytes}, std::pair{"fhe_input_bytes", w.fhe_input_bytes},
                         std::pair{"fhe_result_bytes", w.fhe_result_bytes}}) {
    if (v < 0.0) throw ConfigError(join(p, name), "must be >= 0");
  }
  return w;
}

ordered_json key_json(const TraceKey& k) {
  return {{"technique", to_string(k.technique)},
          {"model", k.model},
          {"dataset", k.dataset},
          {"device_class", k.device_class},
          {"stage", to_string(k.stage)}};
}

const DeviceClass& find_class(const std::vector<DeviceClass>& catalog, const std::string& name,
                              const std::string& path) {
  for (const auto& c : catalog) {
    if (c.name == name) return c;
  }
  throw ConfigError(path, fmt::format("unknown device class '{}'", name));
}

std::vector<NodeEntry> preset_nodes(const std::string& preset) {
  std::vector<NodeEntry> nodes;
  if (preset == "default") {
    const char* device_classes[] = {"intel-nuc", "jetson-agx", "raspberry-pi-5"};
    for (int i = 0; i < 4; ++i) nodes.push_back({fmt::format("server-{}", i), "desktop-xeon"});
    for (int i = 0; i < 12; ++i) nodes.push_back({fmt::format("device-{}", i), device_classes[i % 3]});
  }
  return nodes;
}

}  // namespace

bool Scenario::operator==(const Scenario& o) const {
  return name == o.name && seed == o.seed && output_dir == o.output_dir && device_classes == o.device_classes &&
         topology == o.topology && traces == o.traces && scheduler == o.scheduler && workload == o.workload &&
         histogram_bins == o.histogram_bins;
}

Scenario parse_scenario(const json& j, const std::filesystem::path& base_dir) {
  expect_object(j, "");
  check_keys(j, "", {"name", "seed", "output_dir", "device_classes", "topology", "traces", "scheduler", "workload",
                     "report"});
  Scenario s;
  s.base_dir = base_dir;
  s.name = opt_string(j, "name", "", "scenario");
  s.seed = opt_uint(j, "seed", "", 0);
  s.output_dir = opt_string(j, "output_dir", "", "");

  if (const json* dc = optional(j, "device_classes")) {
    if (!dc->is_array()) throw ConfigError("device_classes", "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < dc->size(); ++i) {
      DeviceClass c = parse_device_class((*dc)[i], at_index("device_classes", i));
      if (!names.insert(c.name).second) throw ConfigError(at_index("device_classes", i), "duplicate class name");
      s.device_classes.push_back(std::move(c));
    }
  } else {
    s.device_classes = default_device_classes();
  }

  s.topology = parse_topology(require(j, "topology", ""), "topology");
  const auto nodes = s.topology.preset.empty() ? s.topology.nodes : preset_nodes(s.topology.preset);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    find_class(s.device_classes, nodes[i].device_class, at_index("topology.nodes", i) + ".class");
  }
  if (const json* t = optional(j, "traces")) s.traces = parse_traces_section(*t, "traces");
  if (const json* sc = optional(j, "scheduler")) s.scheduler = parse_scheduler(*sc, "scheduler");
  s.workload = parse_workload(require(j, "workload", ""), "workload");
  if (const json* r = optional(j, "report")) {
    expect_object(*r, "report");
    check_keys(*r, "report", {"histogram_bins"});
    s.histogram_bins = opt_uint(*r, "histogram_bins", "report", 50);
    if (s.histogram_bins < 1) throw ConfigError("report.histogram_bins", "must be >= 1");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("", fmt::format("cannot read scenario {}: {}", path.string(), e.what()));
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  return parse_scenario(j, path.parent_path());
}

ordered_json to_json(const Scenario& s) {
  ordered_json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["output_dir"] = s.output_dir;
  auto classes = ordered_json::array();
  for (const auto& c : s.device_classes) {
    classes.push_back({{"name", c.name},
                       {"layer", to_string(c.layer)},
                       {"cores", c.cores},
                       {"memory_mb", c.memory_mb},
                       {"p_max", c.p_max},
                       {"p_static", c.p_static}});
  }
  j["device_classes"] = std::move(classes);

  ordered_json topo;
  topo["preset"] = s.topology.preset;
  auto nodes = ordered_json::array();
  for (const auto& n : s.topology.nodes) nodes.push_back({{"name", n.name}, {"class", n.device_class}});
  topo["nodes"] = std::move(nodes);
  auto links = ordered_json::array();
  for (const auto& l : s.topology.links) {
    links.push_back({{"name", l.name},
                     {"a", l.a},
                     {"b", l.b},
                     {"bandwidth_mbps", l.bandwidth_mbps},
                     {"base_latency_s", l.base_latency_s}});
  }
  topo["links"] = std::move(links);
  if (s.topology.default_link) {
    topo["default_link"] = {{"bandwidth_mbps", s.topology.default_link->bandwidth_mbps},
                            {"base_latency_s", s.topology.default_link->base_latency_s}};
  } else {
    topo["default_link"] = nullptr;
  }
  j["topology"] = std::move(topo);

  ordered_json traces;
  traces["files"] = s.traces.files;
  auto mixes = ordered_json::array();
  for (const auto& m : s.traces.mixtures) {
    auto comps = ordered_json::array();
    for (const auto& c : m.spec.components) comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"stddev", c.stddev}});
    mixes.push_back({{"key", key_json(m.key)},
                     {"unit", to_string(m.unit)},
                     {"points", m.points},
                     {"components", std::move(comps)},
                     {"note", m.note}});
  }
  traces["mixtures"] = std::move(mixes);
  j["traces"] = std::move(traces);

  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : s.scheduler.parameters) params[k] = v;
  j["scheduler"] = {{"policy", to_string(s.scheduler.name)}, {"parameters", std::move(params)}};

  const Workload& w = s.workload;
  ordered_json wl;
  wl["users"] = w.users;
  wl["total_requests"] = w.total_requests;
  auto mix = ordered_json::array();
  for (const auto& e : w.mix) {
    mix.push_back({{"technique", to_string(e.technique)}, {"model", e.model}, {"dataset", e.dataset}, {"weight", e.weight}});
  }
  wl["mix"] = std::move(mix);
  wl["smc_parties"] = w.smc_parties;
  wl["inference_cores"] = w.inference_cores;
  wl["default_footprint_mb"] = w.default_footprint_mb;
  auto fps = ordered_json::array();
  for (const auto& f : w.footprints) {
    fps.push_back({{"technique", to_string(f.technique)}, {"model", f.model}, {"memory_mb", f.memory_mb}});
  }
  wl["footprints"] = std::move(fps);
  wl["dp_payload_bytes"] = w.dp_payload_bytes;
  wl["fhe_input_bytes"] = w.fhe_input_bytes;
  wl["fhe_result_bytes"] = w.fhe_result_bytes;
  j["workload"] = std::move(wl);
  j["report"] = {{"histogram_bins", s.histogram_bins}};
  return j;
}

std::string dump_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

Topology build_topology(const Scenario& s) {
  Topology topo;
  const bool preset = !s.topology.preset.empty();
  const auto nodes = preset ? preset_nodes(s.topology.preset) : s.topology.nodes;
  std::map<std::string, NodeId> by_name;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = at_index("topology.nodes", i);
    if (by_name.count(nodes[i].name)) throw ConfigError(path + ".name", "duplicate node name");
    const DeviceClass& cls = find_class(s.device_classes, nodes[i].device_class, path + ".class");
    by_name[nodes[i].name] = topo.add_node(nodes[i].name, cls);
  }
  for (std::size_t i = 0; i < s.topology.links.size(); ++i) {
    const auto& l = s.topology.links[i];
    const std::string path = at_index("topology.links", i);
    auto a = by_name.find(l.a);
    auto b = by_name.find(l.b);
    if (a == by_name.end()) throw ConfigError(path + ".a", fmt::format("unknown node '{}'", l.a));
    if (b == by_name.end()) throw ConfigError(path + ".b", fmt::format("unknown node '{}'", l.b));
    LinkSpec spec{l.name, a->second, b->second, l.bandwidth_mbps, l.base_latency_s};
    try {
      spec.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(path, e.what());
    }
    topo.add_link(std::move(spec));
  }
  if (s.topology.default_link) {
    topo.set_default_link(s.topology.default_link);
  } else if (preset) {
    topo.set_default_link(LinkDefaults{500.0, 0.0});
  }
  return topo;
}

PlanOptions plan_options(const Workload& w) {
  return PlanOptions{w.inference_cores, w.dp_payload_bytes, w.fhe_input_bytes, w.fhe_result_bytes};
}

ExecutorOptions executor_options(const Scenario& s) {
  ExecutorOptions o;
  o.seed = s.seed;
  o.default_footprint_mb = s.workload.default_footprint_mb;
  for (const auto& f : s.workload.footprints) o.footprints_mb[{f.technique, f.model}] = f.memory_mb;
  return o;
}

TraceTable build_trace_table(const Scenario& s) {
  TraceTable table;
  for (std::size_t i = 0; i < s.traces.files.size(); ++i) {
    const std::string path = at_index("traces.files", i);
    try {
      table.merge(load_traces(s.base_dir / s.traces.files[i]));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(path, e.what());
    }
  }
  for (std::size_t i = 0; i < s.traces.mixtures.size(); ++i) {
    const auto& m = s.traces.mixtures[i];
    RngStream rng(s.seed, "synth/" + m.key.to_string());
    try {
      table.insert(synthesize(m.spec, m.key, m.unit, m.points, rng));
    } catch (const std::exception& e) {
      throw ConfigError(at_index("traces.mixtures", i), e.what());
    }
  }
  return table;
}

void validate_references(const Scenario& s, const Topology& topology, const TraceTable& table) {
  const auto servers = topology.servers();
  const auto devices = topology.devices();
  if (servers.empty()) throw ConfigError("topology", "no edge server");
  if (devices.empty()) throw ConfigError("topology", "no edge device");
  for (NodeId srv : servers) {
    for (NodeId dev : devices) topology.link_between(srv, dev);
  }

  std::set<std::string> server_classes, device_classes, origin_classes;
  for (NodeId n : servers) server_classes.insert(topology.node(n).device_class);
  for (NodeId n : devices) device_classes.insert(topology.node(n).device_class);
  for (std::uint32_t u = 0; u < s.workload.users && u < devices.size(); ++u) {
    origin_classes.insert(topology.node(devices[u % devices.size()]).device_class);
  }

  const PlanOptions opts = plan_options(s.workload);
  for (std::size_t i = 0; i < s.workload.mix.size(); ++i) {
    const MixEntry& e = s.workload.mix[i];
    const int parties = e.technique == Technique::Smc ? s.workload.smc_parties : 1;
    StagePlan plan;
    try {
      plan = build_plan(e.technique, parties, topology, opts);
    } catch (const ConfigError& err) {
      throw ConfigError(at_index("workload.mix", i), err.what());
    }
    for (const Stage& st : plan.stages) {
      if (!st.required) continue;
      const std::set<std::string>* classes = &server_classes;
      if (st.type == StageType::Transfer) {
        if (!st.from_trace) continue;
      } else if (st.site == Site::Origin) {
        classes = &origin_classes;
      } else if (st.site == Site::InputOwner) {
        classes = &device_classes;
      }
      for (const auto& cls : *classes) {
        const TraceKey key{e.technique, e.model, e.dataset, cls, st.source};
        if (!table.contains(key)) throw ConfigError("traces", fmt::format("no trace for key {}", key.to_string()));
      }
    }
  }
}

void override_users(Scenario& s, std::uint32_t users) {
  if (users < 1) throw ConfigError("workload.users", "must be >= 1");
  if (s.workload.total_requests < users) throw ConfigError("workload.users", "exceeds total_requests");
  s.workload.users = users;
}

void override_bandwidth(Scenario& s, double mbps) {
  if (!(mbps > 0.0)) throw ConfigError("topology.default_link.bandwidth_mbps", "must be > 0");
  for (auto& l : s.topology.links) l.bandwidth_mbps = mbps;
  const double latency = s.topology.default_link ? s.topology.default_link->base_latency_s : 0.0;
  s.topology.default_link = LinkDefaults{mbps, latency};
}

void override_parties(Scenario& s, int parties) {
  if (parties != 2 && parties != 3) throw ConfigError("workload.smc_parties", "must be 2 or 3");
  s.workload.smc_parties = parties;
}

void override_technique(Scenario& s, Technique technique) {
  std::vector<MixEntry> kept;
  for (const auto& e : s.workload.mix) {
    if (e.technique == technique) kept.push_back(e);
  }
  if (kept.empty()) {
    throw ConfigError("workload.mix", fmt::format("no entry for technique {}", to_string(technique)));
  }
  s.workload.mix = std::move(kept);
}

}  // namespace edgeprivsim
