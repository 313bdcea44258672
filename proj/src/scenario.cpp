#include "iotstage/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "iotstage/calibration.hpp"
#include "iotstage/node_runtime.hpp"
#include "json.hpp"

namespace iotstage {

using json = nlohmann::ordered_json;

std::string_view run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kFast: return "fast";
    case RunMode::kRealtime: return "realtime";
    case RunMode::kScaled: return "scaled";
  }
  return "fast";
}

std::optional<RunMode> parse_run_mode(std::string_view text) {
  if (text == "fast") return RunMode::kFast;
  if (text == "realtime") return RunMode::kRealtime;
  if (text == "scaled") return RunMode::kScaled;
  return std::nullopt;
}

namespace {

struct FaultKindName {
  FaultKind kind;
  std::string_view name;
};

constexpr FaultKindName kFaultKinds[] = {
    {FaultKind::kNodeCrash, "NodeCrash"},
    {FaultKind::kNodeRestart, "NodeRestart"},
    {FaultKind::kLinkDown, "LinkDown"},
    {FaultKind::kLinkUp, "LinkUp"},
    {FaultKind::kPartition, "Partition"},
    {FaultKind::kPartitionHeal, "PartitionHeal"},
    {FaultKind::kLossOverride, "LossOverride"},
    {FaultKind::kLatencyOverride, "LatencyOverride"},
    {FaultKind::kMessageCorrupt, "MessageCorrupt"},
    {FaultKind::kEntitySpeedOverride, "EntitySpeedOverride"},
    {FaultKind::kBehaviorFault, "BehaviorFault"},
};

}  // namespace

std::string_view fault_kind_name(FaultKind kind) {
  for (const auto& entry : kFaultKinds) {
    if (entry.kind == kind) return entry.name;
  }
  return "Unknown";
}

std::optional<FaultKind> parse_fault_kind(std::string_view text) {
  for (const auto& entry : kFaultKinds) {
    if (entry.name == text) return entry.kind;
  }
  return std::nullopt;
}

const NodeSpec* Scenario::find_node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const EntitySpec* Scenario::find_entity(std::string_view id) const {
  for (const auto& e : mobility) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const LinkSpec* Scenario::find_link(std::string_view a, std::string_view b) const {
  for (const auto& l : links) {
    if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return &l;
  }
  return nullptr;
}

bool Scenario::has_external_nodes() const {
  return std::any_of(nodes.begin(), nodes.end(), [](const NodeSpec& n) { return n.external.has_value(); });
}

std::optional<ChannelSelector> ChannelSelector::parse(std::string_view text) {
  if (text == "wireless") return ChannelSelector{};
  if (text == "*") return ChannelSelector{Kind::kAll, {}, {}};
  constexpr std::string_view kPrefix = "link:";
  if (text.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  text.remove_prefix(kPrefix.size());
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  std::string a(text.substr(0, comma));
  std::string b(text.substr(comma + 1));
  if (a.empty() || b.empty() || b.find(',') != std::string::npos) return std::nullopt;
  return link(std::move(a), std::move(b));
}

ChannelSelector ChannelSelector::link(NodeId a, NodeId b) {
  if (b < a) std::swap(a, b);
  return ChannelSelector{Kind::kLink, std::move(a), std::move(b)};
}

std::string ChannelSelector::to_string() const {
  switch (kind) {
    case Kind::kWireless: return "wireless";
    case Kind::kAll: return "*";
    case Kind::kLink: return "link:" + a + "," + b;
  }
  return "wireless";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string join_path(const std::string& base, std::string_view key) {
  if (base.empty()) return std::string(key);
  return base + "." + std::string(key);
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

[[noreturn]] void type_mismatch(const std::string& path, std::string_view expected) {
  throw Error(ErrorCode::kTypeMismatch, "at " + path + ": expected " + std::string(expected));
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) type_mismatch(path, "string");
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) type_mismatch(path, "number");
  return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) type_mismatch(path, "integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    type_mismatch(path, "integer in signed 64-bit range");
  }
  return v.get<std::int64_t>();
}

std::uint64_t as_uint(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    type_mismatch(path, "unsigned integer");
  }
  return v.get<std::uint64_t>();
}

Position as_position(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    type_mismatch(path, "[x, y] array of numbers");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) type_mismatch(path, "array");
  return v;
}

// Tracks which keys of one JSON object were consumed so leftovers can be
// reported as unknown fields.
class Fields {
 public:
  Fields(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) type_mismatch(path_.empty() ? "<root>" : path_, "object");
  }

  const json* find(std::string_view key) {
    auto it = object_.find(std::string(key));
    if (it == object_.end()) return nullptr;
    used_.insert(std::string(key));
    return &*it;
  }

  const json& required(std::string_view key) {
    const json* v = find(key);
    if (v == nullptr) {
      throw Error(ErrorCode::kMissingField, "missing required field: " + join_path(path_, key));
    }
    return *v;
  }

  std::string path(std::string_view key) const { return join_path(path_, key); }

  // Duration fields accept `<base>_ms` (integer milliseconds) or, for nested
  // objects, `<base>_us` (integer microseconds).
  std::optional<Duration> duration(std::string_view base, bool allow_us = true) {
    const std::string ms_key = std::string(base) + "_ms";
    const std::string us_key = std::string(base) + "_us";
    const json* ms = find(ms_key);
    const json* us = allow_us ? find(us_key) : nullptr;
    if (ms != nullptr && us != nullptr) {
      throw Error(ErrorCode::kTypeMismatch,
                  "at " + path(base) + ": both " + ms_key + " and " + us_key + " given");
    }
    if (ms != nullptr) return std::chrono::milliseconds(as_int(*ms, path(ms_key)));
    if (us != nullptr) return std::chrono::microseconds(as_int(*us, path(us_key)));
    return std::nullopt;
  }

  Duration required_duration(std::string_view base, bool allow_us = true) {
    auto d = duration(base, allow_us);
    if (!d) {
      throw Error(ErrorCode::kMissingField,
                  "missing required field: " + path(std::string(base) + "_ms"));
    }
    return *d;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (used_.count(key) == 0) {
        throw Error(ErrorCode::kUnknownField, "unknown field: " + join_path(path_, key));
      }
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

ChannelParams parse_channel(Fields& f) {
  ChannelParams c;
  c.latency = f.required_duration("latency");
  c.bandwidth_bps = as_number(f.required("bandwidth_bps"), f.path("bandwidth_bps"));
  c.jitter_max = f.duration("jitter_max").value_or(Duration::zero());
  if (const json* loss = f.find("loss")) c.loss = as_number(*loss, f.path("loss"));
  return c;
}

WirelessSpec parse_wireless(const json& v, const std::string& path) {
  Fields f(v, path);
  WirelessSpec w;
  w.range_m = as_number(f.required("range_m"), f.path("range_m"));
  w.channel = parse_channel(f);
  f.finish();
  return w;
}

LinkSpec parse_link(const json& v, const std::string& path) {
  Fields f(v, path);
  LinkSpec l;
  l.a = as_string(f.required("a"), f.path("a"));
  l.b = as_string(f.required("b"), f.path("b"));
  l.channel = parse_channel(f);
  f.finish();
  return l;
}

NodeSpec parse_node(const json& v, const std::string& path) {
  Fields f(v, path);
  NodeSpec n;
  n.id = as_string(f.required("id"), f.path("id"));
  if (const json* b = f.find("behavior")) n.behavior = as_string(*b, f.path("behavior"));
  if (const json* p = f.find("params")) {
    if (!p->is_object()) type_mismatch(f.path("params"), "object");
    for (const auto& [key, value] : p->items()) {
      n.params[key] = as_string(value, f.path("params") + "." + key);
    }
  }
  if (const json* p = f.find("position")) n.position = as_position(*p, f.path("position"));
  if (const json* e = f.find("entity")) n.entity = as_string(*e, f.path("entity"));
  n.processing_delay = f.duration("processing_delay").value_or(Duration::zero());
  if (const json* x = f.find("external")) {
    const std::string xpath = f.path("external");
    Fields xf(*x, xpath);
    ExternalSpec ext;
    const std::uint64_t port = as_uint(xf.required("listen_port"), xf.path("listen_port"));
    if (port > 65535) type_mismatch(xf.path("listen_port"), "port number");
    ext.listen_port = static_cast<std::uint16_t>(port);
    ext.peer = as_string(xf.required("peer"), xf.path("peer"));
    xf.finish();
    n.external = ext;
  }
  f.finish();
  return n;
}

EntitySpec parse_entity(const json& v, const std::string& path) {
  Fields f(v, path);
  EntitySpec e;
  e.id = as_string(f.required("id"), f.path("id"));
  const std::string rpath = f.path("route");
  const json& route = as_array(f.required("route"), rpath);
  for (std::size_t i = 0; i < route.size(); ++i) {
    e.route.push_back(as_position(route[i], index_path(rpath, i)));
  }
  e.speed_mps = as_number(f.required("speed_mps"), f.path("speed_mps"));
  f.finish();
  return e;
}

FaultSpec parse_fault(const json& v, const std::string& path) {
  Fields f(v, path);
  FaultSpec fault;
  fault.at = f.required_duration("at");
  const std::string kind_text = as_string(f.required("kind"), f.path("kind"));
  const auto kind = parse_fault_kind(kind_text);
  if (!kind) type_mismatch(f.path("kind"), "fault kind, got \"" + kind_text + "\"");
  fault.kind = *kind;
  if (const json* t = f.find("target")) fault.target = as_string(*t, f.path("target"));
  if (const json* p = f.find("params")) {
    const std::string ppath = f.path("params");
    Fields pf(*p, ppath);
    fault.params.restart_at = pf.duration("restart");
    if (const json* g = pf.find("groups")) {
      const std::string gpath = pf.path("groups");
      for (std::size_t i = 0; i < as_array(*g, gpath).size(); ++i) {
        const std::string ipath = index_path(gpath, i);
        std::vector<NodeId> group;
        const json& members = as_array((*g)[i], ipath);
        for (std::size_t j = 0; j < members.size(); ++j) {
          group.push_back(as_string(members[j], index_path(ipath, j)));
        }
        fault.params.groups.push_back(std::move(group));
      }
    }
    if (const json* l = pf.find("loss")) fault.params.loss = as_number(*l, pf.path("loss"));
    fault.params.latency = pf.duration("latency");
    if (const json* pr = pf.find("p")) fault.params.probability = as_number(*pr, pf.path("p"));
    fault.params.duration = pf.duration("duration");
    if (const json* s = pf.find("speed_mps")) {
      fault.params.speed_mps = as_number(*s, pf.path("speed_mps"));
    }
    if (const json* vals = pf.find("values")) {
      if (!vals->is_object()) type_mismatch(pf.path("values"), "object");
      for (const auto& [key, value] : vals->items()) {
        fault.params.values[key] = as_string(value, pf.path("values") + "." + key);
      }
    }
    pf.finish();
  }
  f.finish();
  return fault;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ", column " +
                                       std::to_string(column) + ": " + e.what());
  }

  Fields f(doc, "");
  Scenario s;
  s.name = as_string(f.required("name"), "name");
  s.duration = f.required_duration("duration", false);
  s.step = f.duration("step", false).value_or(std::chrono::milliseconds(100));
  s.seed = as_uint(f.required("seed"), "seed");
  if (const json* m = f.find("mode")) {
    const std::string text_mode = as_string(*m, "mode");
    const auto mode = parse_run_mode(text_mode);
    if (!mode) type_mismatch("mode", "one of fast, realtime, scaled");
    s.mode = *mode;
  }
  if (const json* r = f.find("rtf")) s.rtf = as_number(*r, "rtf");
  if (const json* w = f.find("wireless"); w != nullptr && !w->is_null()) {
    s.wireless = parse_wireless(*w, "wireless");
  }
  if (const json* links = f.find("links")) {
    for (std::size_t i = 0; i < as_array(*links, "links").size(); ++i) {
      s.links.push_back(parse_link((*links)[i], index_path("links", i)));
    }
  }
  const json& nodes = as_array(f.required("nodes"), "nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    s.nodes.push_back(parse_node(nodes[i], index_path("nodes", i)));
  }
  if (const json* mobility = f.find("mobility")) {
    for (std::size_t i = 0; i < as_array(*mobility, "mobility").size(); ++i) {
      s.mobility.push_back(parse_entity((*mobility)[i], index_path("mobility", i)));
    }
  }
  if (const json* faults = f.find("faults")) {
    for (std::size_t i = 0; i < as_array(*faults, "faults").size(); ++i) {
      s.faults.push_back(parse_fault((*faults)[i], index_path("faults", i)));
    }
  }
  if (const json* probes = f.find("probes")) {
    for (std::size_t i = 0; i < as_array(*probes, "probes").size(); ++i) {
      const std::string ppath = index_path("probes", i);
      Fields pf((*probes)[i], ppath);
      s.probes.push_back(ProbeSpec{as_string(pf.required("tag"), pf.path("tag"))});
      pf.finish();
    }
  }
  f.finish();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_duration(json& out, const std::string& base, Duration d) {
  if (d.count() % kMillisecond.count() == 0) {
    out[base + "_ms"] = d.count() / kMillisecond.count();
  } else {
    out[base + "_us"] = std::chrono::round<std::chrono::microseconds>(d).count();
  }
}

json position_json(const Position& p) { return json::array({p.x, p.y}); }

void put_channel(json& out, const ChannelParams& c) {
  put_duration(out, "latency", c.latency);
  out["bandwidth_bps"] = c.bandwidth_bps;
  put_duration(out, "jitter_max", c.jitter_max);
  out["loss"] = c.loss;
}

std::int64_t whole_ms(Duration d, std::string_view field) {
  if (d.count() % kMillisecond.count() != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(field) + " is not a whole number of milliseconds");
  }
  return d.count() / kMillisecond.count();
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  json doc = json::object();
  doc["name"] = s.name;
  doc["duration_ms"] = whole_ms(s.duration, "duration");
  doc["step_ms"] = whole_ms(s.step, "step");
  doc["seed"] = s.seed;
  doc["mode"] = run_mode_name(s.mode);
  doc["rtf"] = s.rtf;
  if (s.wireless) {
    json w = json::object();
    w["range_m"] = s.wireless->range_m;
    put_channel(w, s.wireless->channel);
    doc["wireless"] = std::move(w);
  }
  json links = json::array();
  for (const auto& l : s.links) {
    json j = json::object();
    j["a"] = l.a;
    j["b"] = l.b;
    put_channel(j, l.channel);
    links.push_back(std::move(j));
  }
  doc["links"] = std::move(links);

  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json j = json::object();
    j["id"] = n.id;
    if (!n.behavior.empty()) j["behavior"] = n.behavior;
    if (!n.params.empty()) {
      json params = json::object();
      for (const auto& [k, v] : n.params) params[k] = v;
      j["params"] = std::move(params);
    }
    if (n.position) j["position"] = position_json(*n.position);
    if (n.entity) j["entity"] = *n.entity;
    put_duration(j, "processing_delay", n.processing_delay);
    if (n.external) {
      j["external"] = json{{"listen_port", n.external->listen_port}, {"peer", n.external->peer}};
    }
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);

  json mobility = json::array();
  for (const auto& e : s.mobility) {
    json route = json::array();
    for (const auto& p : e.route) route.push_back(position_json(p));
    json j = json::object();
    j["id"] = e.id;
    j["route"] = std::move(route);
    j["speed_mps"] = e.speed_mps;
    mobility.push_back(std::move(j));
  }
  doc["mobility"] = std::move(mobility);

  json faults = json::array();
  for (const auto& f : s.faults) {
    json j = json::object();
    put_duration(j, "at", f.at);
    j["kind"] = fault_kind_name(f.kind);
    if (!f.target.empty()) j["target"] = f.target;
    json p = json::object();
    if (f.params.restart_at) put_duration(p, "restart", *f.params.restart_at);
    if (!f.params.groups.empty()) p["groups"] = f.params.groups;
    if (f.params.loss) p["loss"] = *f.params.loss;
    if (f.params.latency) put_duration(p, "latency", *f.params.latency);
    if (f.params.probability) p["p"] = *f.params.probability;
    if (f.params.duration) put_duration(p, "duration", *f.params.duration);
    if (f.params.speed_mps) p["speed_mps"] = *f.params.speed_mps;
    if (!f.params.values.empty()) {
      json values = json::object();
      for (const auto& [k, val] : f.params.values) values[k] = val;
      p["values"] = std::move(values);
    }
    if (!p.empty()) j["params"] = std::move(p);
    faults.push_back(std::move(j));
  }
  doc["faults"] = std::move(faults);

  json probes = json::array();
  for (const auto& p : s.probes) probes.push_back(json{{"tag", p.tag}});
  doc["probes"] = std::move(probes);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Collector {
 public:
  void add(std::string code, std::string path, std::string message = {}) {
    out.push_back(Violation{std::move(code), std::move(path), std::move(message)});
  }
  std::vector<Violation> out;
};

bool valid_id(const std::string& id) {
  if (id.empty() || id == "*") return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == ',' || c == ' ' || c == '\t' || c == '\n';
  });
}

bool finite(const Position& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void check_channel(const ChannelParams& c, const std::string& path, Collector& v) {
  if (c.latency <= Duration::zero()) v.add("INVALID_LATENCY", path + ".latency");
  if (!(c.bandwidth_bps > 0.0) || !std::isfinite(c.bandwidth_bps)) {
    v.add("INVALID_BANDWIDTH", path + ".bandwidth_bps");
  }
  if (c.jitter_max < Duration::zero()) v.add("INVALID_JITTER", path + ".jitter_max");
  if (!(c.loss >= 0.0 && c.loss <= 1.0)) v.add("INVALID_LOSS", path + ".loss");
}

bool valid_peer(const std::string& peer) {
  const auto colon = peer.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= peer.size()) return false;
  const std::string port = peer.substr(colon + 1);
  if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  const long value = std::stol(port);
  return value > 0 && value <= 65535;
}

// Whether `selector` names an existing channel. `allow_all` admits "*".
bool channel_exists(const Scenario& s, const std::string& selector, bool allow_all) {
  const auto sel = ChannelSelector::parse(selector);
  if (!sel) return false;
  switch (sel->kind) {
    case ChannelSelector::Kind::kAll: return allow_all;
    case ChannelSelector::Kind::kWireless: return s.wireless.has_value();
    case ChannelSelector::Kind::kLink: return s.find_link(sel->a, sel->b) != nullptr;
  }
  return false;
}

void check_faults(const Scenario& s, Collector& v) {
  struct CrashEvent {
    SimTime at;
    std::size_t order;
    bool crash;
    NodeId node;
    std::size_t fault;
  };
  std::vector<CrashEvent> crash_events;

  for (std::size_t i = 0; i < s.faults.size(); ++i) {
    const FaultSpec& f = s.faults[i];
    const std::string path = index_path("faults", i);
    const FaultParams& p = f.params;
    if (f.at < Duration::zero()) v.add("INVALID_FAULT_TIME", path + ".at");
    if (f.at >= s.duration) v.add("FAULT_AFTER_END", path + ".at");

    auto need = [&](bool present, std::string_view param) {
      if (!present) v.add("FAULT_PARAM_MISSING", path + ".params." + std::string(param));
      return present;
    };

    switch (f.kind) {
      case FaultKind::kNodeCrash:
      case FaultKind::kNodeRestart:
        if (s.find_node(f.target) == nullptr) {
          v.add("UNKNOWN_TARGET", path + ".target");
          break;
        }
        crash_events.push_back({f.at, crash_events.size(), f.kind == FaultKind::kNodeCrash,
                                f.target, i});
        if (f.kind == FaultKind::kNodeCrash && p.restart_at) {
          if (*p.restart_at <= f.at) v.add("INVALID_FAULT_PARAM", path + ".params.restart");
          crash_events.push_back({*p.restart_at, crash_events.size(), false, f.target, i});
        }
        break;
      case FaultKind::kLinkDown:
      case FaultKind::kLinkUp:
        if (!channel_exists(s, f.target, false)) v.add("UNKNOWN_TARGET", path + ".target");
        break;
      case FaultKind::kPartition: {
        if (!f.target.empty() && !channel_exists(s, f.target, true)) {
          v.add("UNKNOWN_TARGET", path + ".target");
        }
        if (!need(!p.groups.empty(), "groups")) break;
        std::set<NodeId> seen;
        for (std::size_t g = 0; g < p.groups.size(); ++g) {
          for (std::size_t m = 0; m < p.groups[g].size(); ++m) {
            const NodeId& member = p.groups[g][m];
            const std::string mpath = path + ".params.groups[" + std::to_string(g) + "][" +
                                      std::to_string(m) + "]";
            if (s.find_node(member) == nullptr) v.add("UNKNOWN_TARGET", mpath);
            if (!seen.insert(member).second) v.add("PARTITION_OVERLAP", mpath);
          }
        }
        break;
      }
      case FaultKind::kPartitionHeal:
        if (!f.target.empty() && !channel_exists(s, f.target, true)) {
          v.add("UNKNOWN_TARGET", path + ".target");
        }
        break;
      case FaultKind::kLossOverride:
        if (!channel_exists(s, f.target, false)) v.add("UNKNOWN_TARGET", path + ".target");
        if (need(p.loss.has_value(), "loss") && !(*p.loss >= 0.0 && *p.loss <= 1.0)) {
          v.add("INVALID_FAULT_PARAM", path + ".params.loss");
        }
        break;
      case FaultKind::kLatencyOverride:
        if (!channel_exists(s, f.target, false)) v.add("UNKNOWN_TARGET", path + ".target");
        if (need(p.latency.has_value(), "latency") && *p.latency <= Duration::zero()) {
          v.add("INVALID_FAULT_PARAM", path + ".params.latency");
        }
        break;
      case FaultKind::kMessageCorrupt:
        if (!channel_exists(s, f.target.empty() ? "*" : f.target, true)) {
          v.add("UNKNOWN_TARGET", path + ".target");
        }
        if (need(p.probability.has_value(), "p") &&
            !(*p.probability >= 0.0 && *p.probability <= 1.0)) {
          v.add("INVALID_FAULT_PARAM", path + ".params.p");
        }
        if (need(p.duration.has_value(), "duration") && *p.duration <= Duration::zero()) {
          v.add("INVALID_FAULT_PARAM", path + ".params.duration");
        }
        break;
      case FaultKind::kBehaviorFault: {
        const NodeSpec* node = s.find_node(f.target);
        if (node == nullptr || node->external) v.add("UNKNOWN_TARGET", path + ".target");
        break;
      }
      case FaultKind::kEntitySpeedOverride:
        if (s.find_entity(f.target) == nullptr) v.add("UNKNOWN_TARGET", path + ".target");
        if (need(p.speed_mps.has_value(), "speed_mps") &&
            !(*p.speed_mps >= 0.0 && std::isfinite(*p.speed_mps))) {
          v.add("INVALID_FAULT_PARAM", path + ".params.speed_mps");
        }
        break;
    }
    if (p.duration && *p.duration <= Duration::zero() && f.kind != FaultKind::kMessageCorrupt) {
      v.add("INVALID_FAULT_PARAM", path + ".params.duration");
    }
  }

  std::stable_sort(crash_events.begin(), crash_events.end(), [](const auto& a, const auto& b) {
    if (a.at != b.at) return a.at < b.at;
    return a.fault < b.fault;
  });
  std::set<NodeId> crashed;
  for (const auto& e : crash_events) {
    if (e.crash) {
      crashed.insert(e.node);
    } else if (crashed.erase(e.node) == 0) {
      v.add("RESTART_WITHOUT_CRASH", index_path("faults", e.fault));
    }
  }
}

}  // namespace

std::vector<Violation> validate(const Scenario& s) { return validate(s, default_registry()); }

std::vector<Violation> validate(const Scenario& s, const BehaviorRegistry& registry) {
  Collector v;
  if (s.duration <= Duration::zero()) v.add("INVALID_DURATION", "duration_ms");
  if (s.step <= Duration::zero()) v.add("INVALID_STEP", "step_ms");
  if (s.step > s.duration) v.add("STEP_EXCEEDS_DURATION", "step_ms");
  if (!(s.rtf > 0.0) || !std::isfinite(s.rtf)) v.add("INVALID_RTF", "rtf");
  if (s.wireless) {
    if (!(s.wireless->range_m > 0.0) || !std::isfinite(s.wireless->range_m)) {
      v.add("INVALID_RANGE", "wireless.range_m");
    }
    check_channel(s.wireless->channel, "wireless", v);
  }

  std::set<EntityId> entity_ids;
  for (std::size_t i = 0; i < s.mobility.size(); ++i) {
    const EntitySpec& e = s.mobility[i];
    const std::string path = index_path("mobility", i);
    if (!valid_id(e.id)) v.add("INVALID_ID", path + ".id");
    if (!entity_ids.insert(e.id).second) v.add("DUPLICATE_ENTITY_ID", path);
    if (e.route.size() < 2) v.add("ROUTE_TOO_SHORT", path + ".route");
    if (!std::all_of(e.route.begin(), e.route.end(), finite)) {
      v.add("NON_FINITE_POSITION", path + ".route");
    } else if (e.route.size() >= 2) {
      double length = 0.0;
      for (std::size_t k = 1; k < e.route.size(); ++k) length += distance(e.route[k - 1], e.route[k]);
      if (!(length > 0.0)) v.add("DEGENERATE_ROUTE", path + ".route");
    }
    if (!(e.speed_mps >= 0.0) || !std::isfinite(e.speed_mps)) v.add("INVALID_SPEED", path + ".speed_mps");
  }

  std::set<NodeId> node_ids;
  std::set<std::uint16_t> ports;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const NodeSpec& n = s.nodes[i];
    const std::string path = index_path("nodes", i);
    if (!valid_id(n.id)) v.add("INVALID_ID", path + ".id");
    if (!node_ids.insert(n.id).second) v.add("DUPLICATE_NODE_ID", path);
    if (n.position.has_value() == n.entity.has_value()) v.add("POSITION_XOR_ENTITY", path);
    if (n.position && !finite(*n.position)) v.add("NON_FINITE_POSITION", path + ".position");
    if (n.entity && entity_ids.count(*n.entity) == 0) v.add("UNKNOWN_ENTITY", path + ".entity");
    if (n.processing_delay < Duration::zero()) {
      v.add("NEGATIVE_PROCESSING_DELAY", path + ".processing_delay");
    }
    if (n.external) {
      if (!n.behavior.empty()) v.add("EXTERNAL_HAS_BEHAVIOR", path + ".behavior");
      if (n.external->listen_port == 0) v.add("INVALID_PORT", path + ".external.listen_port");
      if (!ports.insert(n.external->listen_port).second) {
        v.add("DUPLICATE_LISTEN_PORT", path + ".external.listen_port");
      }
      if (!valid_peer(n.external->peer)) v.add("INVALID_PEER", path + ".external.peer");
    } else if (n.behavior.empty()) {
      v.add("MISSING_BEHAVIOR", path + ".behavior");
    } else if (!registry.contains(n.behavior)) {
      v.add("UNKNOWN_BEHAVIOR", path + ".behavior", n.behavior);
    }
  }
  if (s.has_external_nodes() && s.mode != RunMode::kRealtime) {
    v.add("EXTERNAL_REQUIRES_REALTIME", "mode");
  }

  std::set<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    const LinkSpec& l = s.links[i];
    const std::string path = index_path("links", i);
    if (l.a == l.b) v.add("SELF_LINK", path);
    if (node_ids.count(l.a) == 0) v.add("UNKNOWN_NODE", path + ".a");
    if (node_ids.count(l.b) == 0) v.add("UNKNOWN_NODE", path + ".b");
    if (!pairs.insert(std::minmax(l.a, l.b)).second) v.add("DUPLICATE_LINK", path);
    check_channel(l.channel, path, v);
  }

  check_faults(s, v);

  std::set<std::string> tags;
  for (std::size_t i = 0; i < s.probes.size(); ++i) {
    const std::string path = index_path("probes", i);
    if (s.probes[i].tag.empty()) v.add("INVALID_PROBE_TAG", path + ".tag");
    if (!tags.insert(s.probes[i].tag).second) v.add("DUPLICATE_PROBE_TAG", path);
  }
  return std::move(v.out);
}

// ---------------------------------------------------------------------------

Scenario merge_calibration(const Scenario& scenario, const ChannelEstimate& estimate,
                           const ChannelSelector& target) {
  Scenario out = scenario;
  ChannelParams* channel = nullptr;
  switch (target.kind) {
    case ChannelSelector::Kind::kWireless:
      if (out.wireless) channel = &out.wireless->channel;
      break;
    case ChannelSelector::Kind::kLink:
      for (auto& l : out.links) {
        if ((l.a == target.a && l.b == target.b) || (l.a == target.b && l.b == target.a)) {
          channel = &l.channel;
        }
      }
      break;
    case ChannelSelector::Kind::kAll: break;
  }
  if (channel == nullptr) throw Error(ErrorCode::kUnknownTarget, target.to_string());
  channel->latency = std::chrono::round<std::chrono::microseconds>(estimate.latency);
  channel->jitter_max = std::chrono::round<std::chrono::microseconds>(estimate.jitter_max);
  channel->loss = estimate.loss;
  return out;
}

}  // namespace iotstage
