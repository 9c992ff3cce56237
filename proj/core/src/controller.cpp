#include "mpsdn/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace mpsdn {

std::string CandidatePath::label() const {
  std::string out;
  for (const auto& h : hops) {
    if (!out.empty()) out += '-';
    out += h.str();
  }
  return out;
}

void ControllerConfig::validate() const {
  if (!(reorder_threshold >= 0 && reorder_threshold <= aggregation_cutoff && aggregation_cutoff <= 0.5))
    throw ValidationError("controller thresholds must satisfy 0 <= reorder_threshold <= aggregation_cutoff <= 0.5");
  if (!(poll_interval_ms > 0)) throw ValidationError("poll_interval_ms must be positive");
}

double MultipathPlan::aggregate_rate_bps() const {
  double total = 0;
  for (const auto& p : paths) total += p.allocated_rate_bps;
  return total;
}

double MultipathPlan::min_delay_ms() const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : paths) d = std::min(d, p.path_delay_ms);
  return d;
}

double MultipathPlan::max_delay_ms() const {
  double d = 0;
  for (const auto& p : paths) d = std::max(d, p.path_delay_ms);
  return d;
}

double mdi(std::span<const double> delays_ms) {
  if (delays_ms.empty()) throw std::invalid_argument("mdi: empty delay list");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0;
  for (double d : delays_ms) {
    if (!(d > 0)) throw std::invalid_argument("mdi: delays must be positive");
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi / (hi + lo) - 0.5;
}

double delay_for_mdi(double base_ms, double target_mdi) {
  if (!(target_mdi >= 0 && target_mdi < 0.5)) throw std::invalid_argument("delay_for_mdi: mdi must lie in [0, 0.5)");
  return base_ms * (0.5 + target_mdi) / (0.5 - target_mdi);
}

namespace {

constexpr double kFlowEpsilon = 1e-6;  // bps

struct ResidualGraph {
  struct Edge {
    std::size_t to;
    double cap;
    std::int64_t cost;  // microseconds
    std::size_t link;
    bool forward;
  };

  std::vector<Edge> edges;  // edge e and e^1 are a forward/reverse pair
  std::vector<std::vector<std::size_t>> adj;

  explicit ResidualGraph(std::size_t n) : adj(n) {}

  void add(std::size_t u, std::size_t v, double cap, std::int64_t cost, std::size_t link) {
    adj[u].push_back(edges.size());
    edges.push_back({v, cap, cost, link, true});
    adj[v].push_back(edges.size());
    edges.push_back({u, 0.0, -cost, link, false});
  }
};

std::size_t node_rank(const Topology& topo, const NodeId& n) {
  auto nodes = topo.nodes();
  return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), n) - nodes.begin());
}

}  // namespace

std::vector<CandidatePath> max_flow_paths(const Topology& topo, const NodeId& src, const NodeId& dst,
                                          std::size_t max_paths, std::span<const double> capacities_bps) {
  if (!topo.has_node(src) || !topo.has_node(dst)) throw std::invalid_argument("max_flow_paths: unknown endpoint");
  if (src == dst) throw std::invalid_argument("max_flow_paths: source equals sink");
  const auto links = topo.links();
  if (!capacities_bps.empty() && capacities_bps.size() != links.size())
    throw std::invalid_argument("max_flow_paths: capacity override size mismatch");

  const std::size_t n = topo.nodes().size();
  ResidualGraph g(n);
  for (std::size_t i = 0; i < links.size(); ++i) {
    const double cap = capacities_bps.empty() ? links[i].capacity_bps : capacities_bps[i];
    const auto cost = static_cast<std::int64_t>(std::llround(links[i].latency_ms * 1000.0));
    g.add(node_rank(topo, links[i].src), node_rank(topo, links[i].dst), std::max(0.0, cap), cost, i);
  }
  // Ties between equal-rank candidates resolve by adjacency order; keep that lexicographic too.
  for (auto& out : g.adj)
    std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(g.edges[a].to, a) < std::tie(g.edges[b].to, b);
    });

  const std::size_t s = node_rank(topo, src);
  const std::size_t t = node_rank(topo, dst);
  constexpr auto kInf = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> potential(n, 0);

  std::size_t augmentations = 0;
  while (max_paths == 0 || augmentations < max_paths) {
    std::vector<std::int64_t> dist(n, kInf);
    std::vector<std::size_t> pred_edge(n, std::numeric_limits<std::size_t>::max());
    using Item = std::pair<std::int64_t, std::size_t>;  // (distance, node rank)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    // True when `v` lies on the current predecessor chain of `u`.
    auto descends_from = [&](std::size_t u, std::size_t v) {
      for (std::size_t w = u; w != s; w = g.edges[pred_edge[w] ^ 1].to)
        if (w == v) return true;
      return false;
    };
    dist[s] = 0;
    pq.emplace(0, s);
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d != dist[u]) continue;
      for (std::size_t e : g.adj[u]) {
        const auto& edge = g.edges[e];
        if (edge.cap <= kFlowEpsilon) continue;
        const std::int64_t nd = d + edge.cost + potential[u] - potential[edge.to];
        const std::size_t v = edge.to;
        const bool better = nd < dist[v];
        const bool tie_smaller_pred = nd == dist[v] && v != s &&
                                      pred_edge[v] != std::numeric_limits<std::size_t>::max() &&
                                      u < g.edges[pred_edge[v] ^ 1].to && !descends_from(u, v);
        if (better || tie_smaller_pred) {
          dist[v] = nd;
          pred_edge[v] = e;
          if (better) pq.emplace(nd, v);
        }
      }
    }
    if (dist[t] == kInf) break;
    for (std::size_t v = 0; v < n; ++v)
      if (dist[v] != kInf) potential[v] += dist[v];

    double bottleneck = std::numeric_limits<double>::infinity();
    for (std::size_t v = t; v != s; v = g.edges[pred_edge[v] ^ 1].to)
      bottleneck = std::min(bottleneck, g.edges[pred_edge[v]].cap);
    for (std::size_t v = t; v != s; v = g.edges[pred_edge[v] ^ 1].to) {
      g.edges[pred_edge[v]].cap -= bottleneck;
      g.edges[pred_edge[v] ^ 1].cap += bottleneck;
    }
    ++augmentations;
  }

  // Net flow per link is what the reverse edge has accumulated.
  std::vector<double> flow(links.size(), 0.0);
  for (std::size_t e = 0; e < g.edges.size(); e += 2) flow[g.edges[e].link] = g.edges[e + 1].cap;

  std::vector<CandidatePath> paths;
  const auto nodes = topo.nodes();
  std::vector<std::vector<LinkIndex>> out(n);
  for (std::size_t r = 0; r < n; ++r) out[r] = topo.out_links(nodes[r]);

  auto next_link = [&](std::size_t u) -> std::optional<LinkIndex> {
    for (LinkIndex l : out[u])
      if (flow[l] > kFlowEpsilon) return l;
    return std::nullopt;
  };

  while (next_link(s)) {
    std::vector<std::size_t> walk{s};
    std::vector<LinkIndex> used;
    std::vector<int> position(n, -1);
    position[s] = 0;
    while (walk.back() != t) {
      auto l = next_link(walk.back());
      if (!l) break;  // conservation broken by epsilon residue; discard the remainder
      const std::size_t v = node_rank(topo, links[*l].dst);
      used.push_back(*l);
      if (position[v] >= 0) {
        // Zero-cost cycle: cancel it and resume from where it started.
        const auto start = static_cast<std::size_t>(position[v]);
        double c = std::numeric_limits<double>::infinity();
        for (std::size_t k = start; k < used.size(); ++k) c = std::min(c, flow[used[k]]);
        for (std::size_t k = start; k < used.size(); ++k) flow[used[k]] -= c;
        for (std::size_t k = start + 1; k < walk.size(); ++k) position[walk[k]] = -1;
        walk.resize(start + 1);
        used.resize(start);
        continue;
      }
      position[v] = static_cast<int>(walk.size());
      walk.push_back(v);
    }
    if (walk.back() != t) {
      for (LinkIndex l : out[walk.back()]) flow[l] = 0;
      if (walk.size() > 1) flow[used.back()] = 0;
      continue;
    }
    double rate = std::numeric_limits<double>::infinity();
    for (LinkIndex l : used) rate = std::min(rate, flow[l]);
    CandidatePath p;
    p.allocated_rate_bps = rate;
    for (std::size_t v : walk) p.hops.push_back(nodes[v]);
    for (LinkIndex l : used) {
      flow[l] -= rate;
      p.path_delay_ms += links[l].latency_ms;
    }
    p.links = std::move(used);
    paths.push_back(std::move(p));
  }

  if (paths.empty())
    throw NoPathError("no path with available capacity from " + src.str() + " to " + dst.str());

  std::sort(paths.begin(), paths.end(), [](const CandidatePath& a, const CandidatePath& b) {
    return std::tie(a.path_delay_ms, a.hops) < std::tie(b.path_delay_ms, b.hops);
  });
  if (max_paths != 0 && paths.size() > max_paths) paths.resize(max_paths);
  return paths;
}

MultipathPlan build_plan(std::vector<CandidatePath> paths, const ControllerConfig& config) {
  if (paths.empty()) throw std::invalid_argument("build_plan: no candidate paths");
  MultipathPlan plan;
  std::vector<double> delays;
  for (const auto& p : paths) delays.push_back(p.path_delay_ms);
  plan.mdi = paths.size() == 1 ? 0.0 : mdi(delays);

  if (plan.mdi > config.aggregation_cutoff) {
    auto fastest = std::min_element(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
      return a.path_delay_ms < b.path_delay_ms;
    });
    plan.fallback_reason = "mdi " + text::format_number(plan.mdi) + " exceeds aggregation cutoff " +
                           text::format_number(config.aggregation_cutoff);
    plan.paths = {*fastest};
    plan.weights = {1.0};
    plan.single_path_fallback = true;
    plan.reorder_buffer_enabled = false;
    return plan;
  }

  plan.reorder_buffer_enabled = plan.mdi > config.reorder_threshold;
  double total = 0;
  for (const auto& p : paths) total += p.allocated_rate_bps;
  for (const auto& p : paths) plan.weights.push_back(p.allocated_rate_bps / total);
  plan.paths = std::move(paths);
  return plan;
}

PathMonitor::PathMonitor(const Topology& topo, Demand demand, ControllerConfig config)
    : topo_(&topo), demand_(std::move(demand)), config_(config) {
  config_.validate();
  auto paths = max_flow_paths(topo, demand_.src, demand_.dst, config_.max_paths);
  for (const auto& p : paths) nominal_[p.label()] = p.allocated_rate_bps;
  plan_ = build_plan(std::move(paths), config_);
}

double PathMonitor::path_residual(const CandidatePath& p, std::span<const double> residual) const {
  double r = std::numeric_limits<double>::infinity();
  for (LinkIndex l : p.links) r = std::min(r, residual[l]);
  return r;
}

PollDecision PathMonitor::recompute_on_poll(std::span<const PortStats> background) {
  const auto links = topo_->links();
  if (background.size() != links.size()) throw std::invalid_argument("recompute_on_poll: stats size mismatch");
  std::vector<double> residual(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) residual[i] = available_capacity(links[i], background[i]);

  auto nominal_of = [&](const CandidatePath& p) {
    auto it = nominal_.find(p.label());
    if (it != nominal_.end()) return it->second;
    double c = std::numeric_limits<double>::infinity();
    for (LinkIndex l : p.links) c = std::min(c, links[l].capacity_bps);
    return c;
  };

  PollDecision decision;
  auto dropped = dropped_;
  for (auto& [label, d] : dropped) {
    if (path_residual(d.path, residual) > kReadmitFraction * nominal_of(d.path))
      ++d.good_polls;
    else
      d.good_polls = 0;
  }
  for (auto it = dropped.begin(); it != dropped.end();) {
    if (it->second.good_polls >= kReadmitPolls) {
      decision.readmitted.push_back(it->first);
      it = dropped.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& p : plan_.paths) {
    if (path_residual(p, residual) < kDropFraction * nominal_of(p) && !dropped.count(p.label())) {
      LinkIndex worst = p.links.front();
      for (LinkIndex l : p.links)
        if (residual[l] < residual[worst]) worst = l;
      dropped.emplace(p.label(), DroppedPath{p, worst, 0});
      decision.dropped.push_back(p.label());
    }
  }

  // A dropped path that max-flow still proposes gets its tightest link closed and the search rerun.
  std::vector<CandidatePath> candidates;
  std::vector<double> capacity = residual;
  for (const auto& [label, d] : dropped) capacity[d.bottleneck] = 0;
  for (;;) {
    try {
      candidates = max_flow_paths(*topo_, demand_.src, demand_.dst, config_.max_paths, capacity);
    } catch (const NoPathError&) {
      candidates.clear();
      break;
    }
    auto blocked = std::find_if(candidates.begin(), candidates.end(),
                                [&](const CandidatePath& p) { return dropped.count(p.label()) > 0; });
    if (blocked == candidates.end()) break;
    LinkIndex tightest = blocked->links.front();
    for (LinkIndex l : blocked->links)
      if (capacity[l] < capacity[tightest]) tightest = l;
    capacity[tightest] = 0;
  }

  if (candidates.empty()) {
    degraded_ = true;
    decision.plan = plan_;
    decision.degraded = true;
    decision.dropped.clear();
    decision.readmitted.clear();
    return decision;
  }

  dropped_ = std::move(dropped);
  degraded_ = false;
  MultipathPlan next = build_plan(std::move(candidates), config_);
  decision.changed = !(next == plan_);
  plan_ = std::move(next);
  decision.plan = plan_;
  return decision;
}

}  // namespace mpsdn
