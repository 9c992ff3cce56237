#include "mpsdn/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mpsdn {

using text::format_number;

namespace {

bool flag(const text::Statement& st, std::string_view key, bool fallback) {
  const auto v = st.string(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  throw ParseError(st.find(key)->line, "'" + std::string(key) + "' must be true or false");
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(duration_s > 0)) throw ValidationError("scenario duration must be positive");
  if (!(interval_ms > 0)) throw ValidationError("measurement interval must be positive");
  if (wrr_round_size == 0) throw ValidationError("wrr_round_size must be positive");
  if (tcp.mss == 0) throw ValidationError("mss must be positive");
  if (!(tcp.reordering_window >= 0)) throw ValidationError("reordering_window must be non-negative");
  controller.validate();
  std::set<std::string> names;
  for (const auto& f : flows) {
    if (!names.insert(f.name).second) throw ValidationError("duplicate flow '" + f.name + "'");
    if (!topology.has_node(f.src) || !topology.has_node(f.dst))
      throw ValidationError("flow '" + f.name + "': endpoint not in topology");
    if (f.src == f.dst) throw ValidationError("flow '" + f.name + "': source equals sink");
    if (f.start_s < 0 || flow_stop_s(f) <= f.start_s)
      throw ValidationError("flow '" + f.name + "': needs 0 <= start_s < stop_s");
    if (f.type == FlowType::Udp && !(f.rate_bps > 0))
      throw ValidationError("flow '" + f.name + "': udp flows need a positive rate_mbps");
  }
  if (sweep) {
    for (double p : sweep->mdi_points)
      if (!(p >= 0 && p < 0.5)) throw ValidationError("sweep points must lie in [0, 0.5)");
    if (sweep->capacities_mbps.size() != 2) throw ValidationError("sweep needs exactly two capacities");
    if (!(sweep->base_latency_ms > 0)) throw ValidationError("sweep base latency must be positive");
  }
}

ScenarioConfig load_scenario(std::string_view source) {
  const text::Document doc = text::parse(source);
  ScenarioConfig cfg;

  if (const auto* st = doc.first("scenario")) {
    st->expect_keys({"duration_s", "seed", "interval_ms", "description"});
    if (st->args.size() != 1) throw ParseError(st->line, "expected 'scenario <name> { ... }'");
    cfg.name = st->args.front();
    cfg.duration_s = st->number("duration_s").value_or(cfg.duration_s);
    cfg.seed = static_cast<std::uint64_t>(st->integer("seed").value_or(static_cast<long long>(cfg.seed)));
    cfg.interval_ms = st->number("interval_ms").value_or(cfg.interval_ms);
    cfg.description = st->string("description").value_or("");
  }
  if (const auto* st = doc.first("controller")) {
    st->expect_keys({"reorder_threshold", "aggregation_cutoff", "poll_interval_ms", "max_paths", "wrr_round_size", "lrf"});
    auto& c = cfg.controller;
    c.reorder_threshold = st->number("reorder_threshold").value_or(c.reorder_threshold);
    c.aggregation_cutoff = st->number("aggregation_cutoff").value_or(c.aggregation_cutoff);
    c.poll_interval_ms = st->number("poll_interval_ms").value_or(c.poll_interval_ms);
    c.max_paths = static_cast<std::size_t>(st->integer("max_paths").value_or(static_cast<long long>(c.max_paths)));
    cfg.wrr_round_size = static_cast<std::size_t>(st->integer("wrr_round_size").value_or(static_cast<long long>(cfg.wrr_round_size)));
    cfg.lrf = static_cast<std::uint32_t>(st->integer("lrf").value_or(cfg.lrf));
  }
  if (const auto* st = doc.first("tcp")) {
    st->expect_keys({"mss", "initial_window", "min_rto_ms", "initial_rto_ms", "reordering_window",
                     "dsack_undo"});
    auto& t = cfg.tcp;
    t.mss = static_cast<std::uint32_t>(st->integer("mss").value_or(t.mss));
    t.initial_window_segments = static_cast<std::uint32_t>(st->integer("initial_window").value_or(t.initial_window_segments));
    t.min_rto_ms = st->number("min_rto_ms").value_or(t.min_rto_ms);
    t.initial_rto_ms = st->number("initial_rto_ms").value_or(t.initial_rto_ms);
    t.reordering_window = st->number("reordering_window").value_or(t.reordering_window);
    t.dsack_undo = flag(*st, "dsack_undo", t.dsack_undo);
  }
  for (const auto* st : doc.all("flow")) {
    st->expect_keys({"type", "src", "dst", "start_s", "stop_s", "rate_mbps"});
    if (st->args.size() != 1) throw ParseError(st->line, "expected 'flow <name> { ... }'");
    FlowSpec f;
    f.name = st->args.front();
    const std::string type = st->string("type").value_or("tcp");
    if (type == "tcp")
      f.type = FlowType::Tcp;
    else if (type == "udp")
      f.type = FlowType::Udp;
    else
      throw ParseError(st->find("type")->line, "flow type must be tcp or udp, got '" + type + "'");
    f.src = NodeId(st->string("src").value_or(""));
    f.dst = NodeId(st->string("dst").value_or(""));
    f.start_s = st->number("start_s").value_or(0.0);
    f.stop_s = st->number("stop_s");
    f.rate_bps = st->number("rate_mbps").value_or(0.0) * 1e6;
    cfg.flows.push_back(std::move(f));
  }
  if (const auto* st = doc.first("sweep")) {
    st->expect_keys({"base_latency_ms", "capacities_mbps", "points", "flow_s"});
    if (st->args.size() != 1 || st->args.front() != "mdi") throw ParseError(st->line, "only 'sweep mdi { ... }' is supported");
    SweepSpec s;
    s.base_latency_ms = st->number("base_latency_ms").value_or(s.base_latency_ms);
    if (st->find("capacities_mbps")) s.capacities_mbps = st->numbers("capacities_mbps");
    s.mdi_points = st->numbers("points");
    s.flow_seconds = st->number("flow_s").value_or(s.flow_seconds);
    cfg.sweep = std::move(s);
  }
  for (const auto& st : doc.statements) {
    static const std::set<std::string> known{"scenario", "controller", "tcp", "flow", "sweep",
                                             "nodes", "node", "link", "demand"};
    if (!known.count(st.keyword)) throw ParseError(st.line, "unknown statement '" + st.keyword + "'");
  }

  cfg.topology = topology_from_document(doc);
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

std::string write_scenario(const ScenarioConfig& cfg) {
  text::Document doc;
  text::Statement sc;
  sc.keyword = "scenario";
  sc.args = {cfg.name.empty() ? "unnamed" : cfg.name};
  sc.entries.push_back({"duration_s", {format_number(cfg.duration_s)}});
  sc.entries.push_back({"seed", {std::to_string(cfg.seed)}});
  sc.entries.push_back({"interval_ms", {format_number(cfg.interval_ms)}});
  if (!cfg.description.empty()) sc.entries.push_back({"description", {cfg.description}});
  doc.statements.push_back(sc);

  text::Statement ctl;
  ctl.keyword = "controller";
  ctl.entries.push_back({"reorder_threshold", {format_number(cfg.controller.reorder_threshold)}});
  ctl.entries.push_back({"aggregation_cutoff", {format_number(cfg.controller.aggregation_cutoff)}});
  ctl.entries.push_back({"poll_interval_ms", {format_number(cfg.controller.poll_interval_ms)}});
  ctl.entries.push_back({"max_paths", {std::to_string(cfg.controller.max_paths)}});
  ctl.entries.push_back({"wrr_round_size", {std::to_string(cfg.wrr_round_size)}});
  ctl.entries.push_back({"lrf", {std::to_string(cfg.lrf)}});
  doc.statements.push_back(ctl);

  text::Statement tcp;
  tcp.keyword = "tcp";
  tcp.entries.push_back({"mss", {std::to_string(cfg.tcp.mss)}});
  tcp.entries.push_back({"initial_window", {std::to_string(cfg.tcp.initial_window_segments)}});
  tcp.entries.push_back({"min_rto_ms", {format_number(cfg.tcp.min_rto_ms)}});
  tcp.entries.push_back({"initial_rto_ms", {format_number(cfg.tcp.initial_rto_ms)}});
  tcp.entries.push_back({"reordering_window", {format_number(cfg.tcp.reordering_window)}});
  tcp.entries.push_back({"dsack_undo", {cfg.tcp.dsack_undo ? "true" : "false"}});
  doc.statements.push_back(tcp);

  // Topology without its demands: those are re-derived from the flows.
  text::Document topo = topology_to_document(cfg.topology);
  for (auto& st : topo.statements)
    if (st.keyword != "demand") doc.statements.push_back(std::move(st));

  for (const auto& f : cfg.flows) {
    text::Statement st;
    st.keyword = "flow";
    st.args = {f.name};
    st.entries.push_back({"type", {f.type == FlowType::Tcp ? "tcp" : "udp"}});
    st.entries.push_back({"src", {f.src.str()}});
    st.entries.push_back({"dst", {f.dst.str()}});
    st.entries.push_back({"start_s", {format_number(f.start_s)}});
    if (f.stop_s) st.entries.push_back({"stop_s", {format_number(*f.stop_s)}});
    if (f.type == FlowType::Udp) st.entries.push_back({"rate_mbps", {format_number(f.rate_bps / 1e6)}});
    doc.statements.push_back(std::move(st));
  }
  if (cfg.sweep) {
    text::Statement st;
    st.keyword = "sweep";
    st.args = {"mdi"};
    st.entries.push_back({"base_latency_ms", {format_number(cfg.sweep->base_latency_ms)}});
    text::Entry caps{"capacities_mbps", {}, true};
    for (double c : cfg.sweep->capacities_mbps) caps.values.push_back(format_number(c));
    st.entries.push_back(caps);
    text::Entry pts{"points", {}, true};
    for (double p : cfg.sweep->mdi_points) pts.values.push_back(format_number(p));
    st.entries.push_back(pts);
    st.entries.push_back({"flow_s", {format_number(cfg.sweep->flow_seconds)}});
    doc.statements.push_back(std::move(st));
  }
  return text::write(doc);
}

Topology two_path_topology(std::span<const double> capacities_mbps, std::span<const double> latency_ms,
                           int queue_limit) {
  if (capacities_mbps.size() != latency_ms.size() || capacities_mbps.empty())
    throw std::invalid_argument("two_path_topology: one capacity and one latency per path");
  std::vector<NodeId> nodes{NodeId("SRC"), NodeId("DST")};
  std::vector<Link> links;
  for (std::size_t j = 0; j < capacities_mbps.size(); ++j) {
    NodeId relay("R" + std::to_string(j + 1));
    nodes.push_back(relay);
    const double cap = capacities_mbps[j] * 1e6;
    links.push_back(Link{NodeId("SRC"), relay, cap, latency_ms[j], queue_limit, 0.0});
    links.push_back(Link{relay, NodeId("SRC"), cap, latency_ms[j], queue_limit, 0.0});
    links.push_back(Link{relay, NodeId("DST"), cap, 0.0, queue_limit, 0.0});
    links.push_back(Link{NodeId("DST"), relay, cap, 0.0, queue_limit, 0.0});
  }
  return Topology(std::move(nodes), std::move(links), {Demand{NodeId("SRC"), NodeId("DST")}});
}

}  // namespace mpsdn
