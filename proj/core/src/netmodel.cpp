#include "mpsdn/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace mpsdn {

Topology::Topology(std::vector<NodeId> nodes, std::vector<Link> links, std::vector<Demand> demands)
    : nodes_(std::move(nodes)), links_(std::move(links)), demands_(std::move(demands)) {
  std::sort(nodes_.begin(), nodes_.end());
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (nodes_[i] == nodes_[i - 1]) throw ValidationError("duplicate node '" + nodes_[i].str() + "'");
  for (const auto& n : nodes_)
    if (n.empty()) throw ValidationError("empty node label");

  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& l : links_) {
    const std::string name = "link " + l.src.str() + "->" + l.dst.str();
    if (!has_node(l.src)) throw ValidationError(name + ": undeclared node '" + l.src.str() + "'");
    if (!has_node(l.dst)) throw ValidationError(name + ": undeclared node '" + l.dst.str() + "'");
    if (l.src == l.dst) throw ValidationError(name + ": self loop");
    if (!(l.capacity_bps > 0)) throw ValidationError(name + ": capacity must be positive");
    if (!(l.latency_ms >= 0)) throw ValidationError(name + ": latency must be non-negative");
    if (l.queue_limit < 1) throw ValidationError(name + ": queue limit must be at least 1");
    if (!(l.loss_rate >= 0 && l.loss_rate <= 1)) throw ValidationError(name + ": loss must lie in [0,1]");
    if (!seen.emplace(l.src, l.dst).second) throw ValidationError(name + ": duplicate link");
  }
  for (const auto& d : demands_) {
    const std::string name = "demand " + d.src.str() + "->" + d.dst.str();
    if (!has_node(d.src)) throw ValidationError(name + ": undeclared node '" + d.src.str() + "'");
    if (!has_node(d.dst)) throw ValidationError(name + ": undeclared node '" + d.dst.str() + "'");
    if (d.src == d.dst) throw ValidationError(name + ": source equals sink");
    if (!reachable(d.src, d.dst)) throw ValidationError(name + ": sink unreachable");
  }
}

bool Topology::has_node(const NodeId& n) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), n);
}

std::optional<LinkIndex> Topology::find_link(const NodeId& src, const NodeId& dst) const {
  for (LinkIndex i = 0; i < links_.size(); ++i)
    if (links_[i].src == src && links_[i].dst == dst) return i;
  return std::nullopt;
}

std::vector<LinkIndex> Topology::out_links(const NodeId& n) const {
  std::vector<LinkIndex> out;
  for (LinkIndex i = 0; i < links_.size(); ++i)
    if (links_[i].src == n) out.push_back(i);
  std::sort(out.begin(), out.end(),
            [&](LinkIndex a, LinkIndex b) { return links_[a].dst < links_[b].dst; });
  return out;
}

bool Topology::reachable(const NodeId& src, const NodeId& dst) const {
  std::set<NodeId> seen{src};
  std::deque<NodeId> frontier{src};
  while (!frontier.empty()) {
    NodeId n = frontier.front();
    frontier.pop_front();
    if (n == dst) return true;
    for (const auto& l : links_)
      if (l.src == n && seen.insert(l.dst).second) frontier.push_back(l.dst);
  }
  return false;
}

double available_capacity(const Link& link, const PortStats& stats) {
  const double window_s = stats.window_length_ms() / 1000.0;
  const double used_bps = 8.0 * static_cast<double>(stats.bytes_sent_in_window) / window_s;
  return std::max(0.0, link.capacity_bps - used_bps);
}

PortStats record_transmission(const PortStats& stats, std::uint64_t pkt_bytes, double now_ms) {
  PortStats out = stats;
  if (now_ms >= stats.window_end_ms) {
    const double len = stats.window_length_ms();
    const double k = std::floor((now_ms - stats.window_start_ms) / len);
    out.window_start_ms = stats.window_start_ms + k * len;
    out.window_end_ms = out.window_start_ms + len;
    out.bytes_sent_in_window = 0;
  }
  out.bytes_sent_in_window += pkt_bytes;
  return out;
}

PortCounter::PortCounter(double window_ms, double origin_ms)
    : current_{0, origin_ms, origin_ms + window_ms},
      previous_{0, origin_ms - window_ms, origin_ms} {}

void PortCounter::advance_to(double now_ms) {
  if (now_ms < current_.window_end_ms) return;
  const double len = current_.window_length_ms();
  const double k = std::floor((now_ms - current_.window_start_ms) / len);
  const double new_start = current_.window_start_ms + k * len;
  if (k == 1)
    previous_ = current_;
  else
    previous_ = PortStats{0, new_start - len, new_start};
  current_ = PortStats{0, new_start, new_start + len};
}

void PortCounter::record(std::uint64_t bytes, double now_ms) {
  advance_to(now_ms);
  current_ = record_transmission(current_, bytes, now_ms);
  total_ += bytes;
}

namespace {

double mbps(const text::Statement& st, std::string_view key, double fallback_bps) {
  auto v = st.number(key);
  return v ? *v * 1e6 : fallback_bps;
}

}  // namespace

Topology topology_from_document(const text::Document& doc) {
  std::vector<NodeId> nodes;
  for (const auto* st : doc.all("nodes")) {
    if (!st->entries.empty()) throw ParseError(st->entries.front().line, "'nodes' takes bare labels only");
    for (const auto& w : st->words) nodes.emplace_back(w);
  }
  for (const auto* st : doc.all("node")) {
    if (st->args.size() != 1) throw ParseError(st->line, "'node' takes exactly one label");
    nodes.emplace_back(st->args.front());
  }

  std::vector<Link> links;
  for (const auto* st : doc.all("link")) {
    if (st->args.size() != 3 || (st->args[1] != "->" && st->args[1] != "<->"))
      throw ParseError(st->line, "expected 'link A -> B { ... }' or 'link A <-> B { ... }'");
    st->expect_keys({"capacity_mbps", "capacity_bps", "latency_ms", "loss", "queue"});
    Link l;
    l.src = NodeId(st->args[0]);
    l.dst = NodeId(st->args[2]);
    if (st->find("capacity_mbps") && st->find("capacity_bps"))
      throw ParseError(st->line, "give either capacity_mbps or capacity_bps, not both");
    l.capacity_bps = st->number("capacity_bps").value_or(mbps(*st, "capacity_mbps", kDefaultCapacityBps));
    auto lat = st->number("latency_ms");
    if (!lat) throw ParseError(st->line, "link " + st->args[0] + " " + st->args[1] + " " + st->args[2] + " needs latency_ms");
    l.latency_ms = *lat;
    l.loss_rate = st->number("loss").value_or(0.0);
    l.queue_limit = static_cast<int>(st->integer("queue").value_or(kDefaultQueueLimit));
    links.push_back(l);
    if (st->args[1] == "<->") {
      std::swap(l.src, l.dst);
      links.push_back(l);
    }
  }

  std::vector<Demand> demands;
  auto add_demand = [&](const text::Statement& st) {
    auto src = st.string("src");
    auto dst = st.string("dst");
    if (!src || !dst) throw ParseError(st.line, "'" + st.keyword + "' needs src and dst");
    Demand d{NodeId(*src), NodeId(*dst)};
    if (std::find(demands.begin(), demands.end(), d) == demands.end()) demands.push_back(d);
  };
  for (const auto* st : doc.all("flow")) add_demand(*st);
  for (const auto* st : doc.all("demand")) add_demand(*st);

  return Topology(std::move(nodes), std::move(links), std::move(demands));
}

Topology load_topology(std::string_view scenario_text) {
  return topology_from_document(text::parse(scenario_text));
}

text::Document topology_to_document(const Topology& topo) {
  text::Document doc;
  text::Statement nodes;
  nodes.keyword = "nodes";
  for (const auto& n : topo.nodes()) nodes.words.push_back(n.str());
  doc.statements.push_back(nodes);
  for (const auto& l : topo.links()) {
    text::Statement st;
    st.keyword = "link";
    st.args = {l.src.str(), "->", l.dst.str()};
    st.entries.push_back({"capacity_bps", {text::format_number(l.capacity_bps)}});
    st.entries.push_back({"latency_ms", {text::format_number(l.latency_ms)}});
    st.entries.push_back({"loss", {text::format_number(l.loss_rate)}});
    st.entries.push_back({"queue", {std::to_string(l.queue_limit)}});
    doc.statements.push_back(std::move(st));
  }
  for (const auto& d : topo.demands()) {
    text::Statement st;
    st.keyword = "demand";
    st.entries.push_back({"src", {d.src.str()}});
    st.entries.push_back({"dst", {d.dst.str()}});
    doc.statements.push_back(std::move(st));
  }
  return doc;
}

std::string write_topology(const Topology& topo) { return text::write(topology_to_document(topo)); }

}  // namespace mpsdn
