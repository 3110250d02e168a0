#include "foglb/topology.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <stack>

#include <nlohmann/json.hpp>

namespace foglb::topo {

using ordered_json = nlohmann::ordered_json;

const char* role_name(Role r) {
  switch (r) {
    case Role::AP: return "AP";
    case Role::Fog: return "Fog";
    case Role::Cloud: return "Cloud";
  }
  return "?";
}

const char* link_category_name(LinkCategory c) {
  switch (c) {
    case LinkCategory::IotFog: return "IoT-Fog";
    case LinkCategory::FogFog: return "Fog-Fog";
    case LinkCategory::FogCloud: return "Fog-Cloud";
  }
  return "?";
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

void Graph::add_edge(int u, int v) {
  if (u == v) return;
  if (u > v) std::swap(u, v);
  edges.emplace_back(u, v);
}

bool Graph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::find(edges.begin(), edges.end(), std::make_pair(u, v)) !=
         edges.end();
}

void Graph::normalize() {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool is_connected(const Graph& g) {
  if (g.n == 0) return true;
  auto adj = g.adjacency();
  std::vector<char> seen(g.n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == g.n;
}

Graph generate_graph(int n_nodes, int attachment_degree, std::uint64_t seed) {
  if (n_nodes < 5) {
    throw TooSmallError("graph needs at least 5 nodes, got " +
                        std::to_string(n_nodes));
  }
  int m = std::max(1, attachment_degree);
  Rng rng = derive_rng(seed, "graph-gen");

  Graph g;
  g.n = n_nodes;
  // Seed clique on m+1 nodes, then preferential attachment: sampling a
  // uniform member of the edge-endpoint list picks a node with probability
  // proportional to its degree.
  std::vector<int> endpoints;
  for (int u = 0; u <= m; ++u) {
    for (int v = u + 1; v <= m; ++v) {
      g.add_edge(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  for (int v = m + 1; v < n_nodes; ++v) {
    std::vector<int> targets;
    while (static_cast<int>(targets.size()) < m) {
      int t = endpoints[rng.uniform_index(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) {
        targets.push_back(t);
      }
    }
    for (int t : targets) {
      g.add_edge(v, t);
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }
  g.normalize();
  return g;
}

namespace {

// Brandes accumulation from a block of source nodes into `score`.
void brandes_from_sources(const std::vector<std::vector<int>>& adj, int first,
                          int last, std::vector<double>& score) {
  int n = static_cast<int>(adj.size());
  std::vector<int> dist(n), sigma(n), order;
  std::vector<double> delta(n);
  std::vector<std::vector<int>> preds(n);
  order.reserve(n);

  for (int s = first; s < last; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();
    order.clear();

    dist[s] = 0;
    sigma[s] = 1;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      order.push_back(v);
      for (int w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int w = *it;
      for (int v : preds[w]) {
        delta[v] += static_cast<double>(sigma[v]) / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) score[w] += delta[w];
    }
  }
}

void require_connected(const Graph& g) {
  if (!is_connected(g)) {
    throw DisconnectedError("betweenness requires a connected graph");
  }
}

}  // namespace

std::vector<double> betweenness_serial(const Graph& g) {
  require_connected(g);
  auto adj = g.adjacency();
  std::vector<double> score(g.n, 0.0);
  brandes_from_sources(adj, 0, g.n, score);
  // Each unordered pair is counted from both endpoints.
  for (auto& s : score) s *= 0.5;
  return score;
}

std::vector<double> betweenness_parallel(const Graph& g) {
  require_connected(g);
  auto adj = g.adjacency();
  constexpr int kChunk = 16;
  int n_chunks = (g.n + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(n_chunks,
                                           std::vector<double>(g.n, 0.0));
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < n_chunks; ++c) {
    int first = c * kChunk;
    int last = std::min(g.n, first + kChunk);
    brandes_from_sources(adj, first, last, partial[c]);
  }
  std::vector<double> score(g.n, 0.0);
  for (int c = 0; c < n_chunks; ++c) {
    for (int v = 0; v < g.n; ++v) score[v] += partial[c][v];
  }
  for (auto& s : score) s *= 0.5;
  return score;
}

std::vector<Role> assign_roles(Graph& g, const std::vector<double>& centrality,
                               int n_aps) {
  int n = g.n;
  if (static_cast<int>(centrality.size()) != n) {
    throw TopologyError("centrality size does not match graph");
  }
  if (n_aps < 1 || n_aps >= n) {
    throw InfeasibleSplitError("cannot split " + std::to_string(n) +
                               " nodes into " + std::to_string(n_aps) +
                               " APs and a non-empty fog set");
  }
  // APs take the n_aps lowest-centrality slots; all ties break by id.
  std::vector<int> ascending(n);
  for (int i = 0; i < n; ++i) ascending[i] = i;
  std::sort(ascending.begin(), ascending.end(), [&](int a, int b) {
    if (centrality[a] != centrality[b]) return centrality[a] < centrality[b];
    return a < b;
  });
  std::vector<int> descending(n);
  for (int i = 0; i < n; ++i) descending[i] = i;
  std::sort(descending.begin(), descending.end(), [&](int a, int b) {
    if (centrality[a] != centrality[b]) return centrality[a] > centrality[b];
    return a < b;
  });

  std::vector<Role> roles(n + 1, Role::Fog);
  for (int i = 0; i < n_aps; ++i) roles[ascending[i]] = Role::AP;

  // Cloud joins as a fresh node on the two most central non-AP nodes
  // (falls back to the next most central node when only one fog exists).
  int cloud = n;
  g.n = n + 1;
  roles[cloud] = Role::Cloud;
  int attached = 0;
  for (int v : descending) {
    if (attached >= 2) break;
    if (roles[v] == Role::Fog) {
      g.add_edge(cloud, v);
      ++attached;
    }
  }
  for (int v : descending) {
    if (attached >= 2) break;
    if (roles[v] == Role::AP && !g.has_edge(cloud, v)) {
      g.add_edge(cloud, v);
      ++attached;
    }
  }
  g.normalize();
  return roles;
}

namespace {

// Hop distances from `src` in g.
std::vector<int> hop_distances(const std::vector<std::vector<int>>& adj,
                               int src) {
  std::vector<int> dist(adj.size(), -1);
  std::queue<int> q;
  dist[src] = 0;
  q.push(src);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

int nearest_fog(const std::vector<std::vector<int>>& adj,
                const std::vector<Role>& roles, int src,
                const std::vector<char>& exclude) {
  auto dist = hop_distances(adj, src);
  int best = -1;
  for (int v = 0; v < static_cast<int>(adj.size()); ++v) {
    if (roles[v] != Role::Fog || dist[v] < 0 || exclude[v]) continue;
    if (best < 0 || dist[v] < dist[best] || (dist[v] == dist[best] && v < best)) {
      best = v;
    }
  }
  return best;
}

}  // namespace

void rewire_ap_edges(Graph& g, const std::vector<Role>& roles) {
  auto is_ap = [&](int v) { return roles[v] == Role::AP; };
  auto bad = [&](std::pair<int, int> e) {
    bool u_ap = is_ap(e.first), v_ap = is_ap(e.second);
    bool u_cl = roles[e.first] == Role::Cloud, v_cl = roles[e.second] == Role::Cloud;
    return (u_ap && v_ap) || (u_ap && v_cl) || (u_cl && v_ap);
  };

  std::vector<std::pair<int, int>> bad_edges;
  for (auto e : g.edges) {
    if (bad(e)) bad_edges.push_back(e);
  }
  if (bad_edges.empty()) return;

  auto adj = g.adjacency();  // distances measured on the pre-rewire graph
  std::sort(bad_edges.begin(), bad_edges.end());
  for (auto [u, v] : bad_edges) {
    int keep = is_ap(u) ? u : v;  // lower id when both are APs
    g.edges.erase(std::remove(g.edges.begin(), g.edges.end(),
                              std::make_pair(u, v)),
                  g.edges.end());
    std::vector<char> exclude(g.n, 0);
    for (auto [a, b] : g.edges) {
      if (a == keep) exclude[b] = 1;
      if (b == keep) exclude[a] = 1;
    }
    int f = nearest_fog(adj, roles, keep, exclude);
    if (f >= 0) g.add_edge(keep, f);
  }
  // Any AP left without a fog neighbor still needs one.
  g.normalize();
  auto adj2 = g.adjacency();
  for (int v = 0; v < g.n; ++v) {
    if (!is_ap(v)) continue;
    bool has_fog = false;
    for (int w : adj2[v]) has_fog = has_fog || roles[w] == Role::Fog;
    if (!has_fog) {
      std::vector<char> none(g.n, 0);
      int f = nearest_fog(adj, roles, v, none);
      if (f >= 0) g.add_edge(v, f);
    }
  }
  g.normalize();
}

std::vector<NodeSpec> assign_resources(const Graph& g,
                                       const std::vector<Role>& roles,
                                       Rng& rng, double cloud_ipt) {
  auto adj = g.adjacency();
  std::vector<int> fog_ids;
  for (int v = 0; v < g.n; ++v) {
    if (roles[v] == Role::Fog) fog_ids.push_back(v);
  }
  std::vector<double> draws(fog_ids.size());
  for (auto& d : draws) d = rng.uniform(1e3, 1e5);
  std::sort(draws.rbegin(), draws.rend());

  // Unbalanced by construction: the fog nodes serving the most APs get the
  // weakest resources.
  auto ap_degree = [&](int v) {
    int c = 0;
    for (int w : adj[v]) c += roles[w] == Role::AP;
    return c;
  };
  std::sort(fog_ids.begin(), fog_ids.end(), [&](int a, int b) {
    int da = ap_degree(a), db = ap_degree(b);
    if (da != db) return da < db;
    return a < b;
  });

  std::vector<NodeSpec> nodes(g.n);
  for (int v = 0; v < g.n; ++v) {
    nodes[v].node_id = v;
    nodes[v].role = roles[v];
    switch (roles[v]) {
      case Role::AP:
        nodes[v].ipt = 0.0;
        nodes[v].ram_bytes = 1.0 * (1ull << 30);
        break;
      case Role::Fog:
        nodes[v].ram_bytes = 8.0 * (1ull << 30);
        break;
      case Role::Cloud:
        nodes[v].ipt = cloud_ipt;
        nodes[v].ram_bytes = 64.0 * (1ull << 30);
        break;
    }
  }
  for (std::size_t i = 0; i < fog_ids.size(); ++i) {
    nodes[fog_ids[i]].ipt = draws[i];
  }
  return nodes;
}

std::vector<LinkSpec> assign_links(const Graph& g,
                                   const std::vector<Role>& roles, Rng& rng) {
  std::vector<LinkSpec> links;
  links.reserve(g.edges.size());
  for (auto [u, v] : g.edges) {
    Role ru = roles[u], rv = roles[v];
    LinkCategory cat;
    if ((ru == Role::AP && rv == Role::Fog) ||
        (ru == Role::Fog && rv == Role::AP)) {
      cat = LinkCategory::IotFog;
    } else if (ru == Role::Fog && rv == Role::Fog) {
      cat = LinkCategory::FogFog;
    } else if ((ru == Role::Fog && rv == Role::Cloud) ||
               (ru == Role::Cloud && rv == Role::Fog)) {
      cat = LinkCategory::FogCloud;
    } else {
      throw UncategorizableEdgeError("edge " + std::to_string(u) + "-" +
                                     std::to_string(v) + " joins " +
                                     role_name(ru) + " and " + role_name(rv));
    }
    LinkSpec l;
    l.u = u;
    l.v = v;
    l.category = cat;
    switch (cat) {
      case LinkCategory::IotFog:
        l.prop_delay_s = rng.uniform(1.0, 2.0);
        l.bandwidth_mbps = rng.uniform(1e2, 1e3);
        break;
      case LinkCategory::FogFog:
        l.prop_delay_s = rng.uniform(2.0, 4.0);
        l.bandwidth_mbps = rng.uniform(1e3, 1e4);
        break;
      case LinkCategory::FogCloud:
        l.prop_delay_s = rng.uniform(10.0, 20.0);
        l.bandwidth_mbps = rng.uniform(1e3, 1e4);
        break;
    }
    links.push_back(l);
  }
  return links;
}

std::vector<int> TopologySpec::ap_ids() const {
  std::vector<int> ids;
  for (const auto& n : nodes) {
    if (n.role == Role::AP) ids.push_back(n.node_id);
  }
  return ids;
}

std::vector<int> TopologySpec::fog_ids() const {
  std::vector<int> ids;
  for (const auto& n : nodes) {
    if (n.role == Role::Fog) ids.push_back(n.node_id);
  }
  return ids;
}

int TopologySpec::cloud_id() const {
  for (const auto& n : nodes) {
    if (n.role == Role::Cloud) return n.node_id;
  }
  return -1;
}

const NodeSpec& TopologySpec::node(int id) const { return nodes.at(id); }

const Region& TopologySpec::region_of_ap(int ap_id) const {
  for (const auto& r : regions) {
    if (std::find(r.ap_ids.begin(), r.ap_ids.end(), ap_id) != r.ap_ids.end()) {
      return r;
    }
  }
  throw UncoveredApError("AP " + std::to_string(ap_id) +
                         " is not covered by any region");
}

std::vector<Region> define_regions(const TopologySpec& spec,
                                   const std::vector<RegionDef>& defs) {
  std::vector<Region> regions;
  if (defs.empty()) {
    Region r;
    r.region_id = 0;
    r.ap_ids = spec.ap_ids();
    r.candidate_fog_ids = spec.fog_ids();
    if (r.candidate_fog_ids.empty()) {
      throw EmptyCandidateSetError("topology has no fog nodes");
    }
    regions.push_back(std::move(r));
    return regions;
  }
  std::map<int, int> covered;  // ap -> region
  for (std::size_t i = 0; i < defs.size(); ++i) {
    Region r;
    r.region_id = static_cast<int>(i);
    r.ap_ids = defs[i].ap_ids;
    r.candidate_fog_ids = defs[i].fog_ids;
    std::sort(r.ap_ids.begin(), r.ap_ids.end());
    std::sort(r.candidate_fog_ids.begin(), r.candidate_fog_ids.end());
    if (r.candidate_fog_ids.empty()) {
      throw EmptyCandidateSetError("region " + std::to_string(i) +
                                   " has an empty fog candidate set");
    }
    for (int ap : r.ap_ids) {
      if (covered.count(ap)) {
        throw TopologyError("AP " + std::to_string(ap) +
                            " belongs to more than one region");
      }
      covered[ap] = r.region_id;
    }
    regions.push_back(std::move(r));
  }
  for (int ap : spec.ap_ids()) {
    if (!covered.count(ap)) {
      throw UncoveredApError("AP " + std::to_string(ap) +
                             " is not covered by any region");
    }
  }
  return regions;
}

TopologySpec build_topology(const TopologyParams& params, std::uint64_t seed) {
  Graph g = generate_graph(params.n_graph_nodes, params.attachment_degree,
                           seed);
  auto centrality = betweenness(g);
  auto roles = assign_roles(g, centrality, params.n_aps);
  rewire_ap_edges(g, roles);

  Rng res_rng = derive_rng(seed, "resources");
  Rng link_rng = derive_rng(seed, "links");
  TopologySpec spec;
  spec.nodes = assign_resources(g, roles, res_rng, params.cloud_ipt);
  spec.links = assign_links(g, roles, link_rng);
  spec.regions = define_regions(spec, params.region_defs);
  return spec;
}

Routing shortest_pr_routes(const TopologySpec& spec) {
  int n = static_cast<int>(spec.nodes.size());
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& l : spec.links) {
    adj[l.u].emplace_back(l.v, l.prop_delay_s);
    adj[l.v].emplace_back(l.u, l.prop_delay_s);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  Routing rt;
  rt.pr_dist.assign(n, std::vector<double>(n,
                    std::numeric_limits<double>::infinity()));
  rt.next_hop.assign(n, std::vector<int>(n, -1));

  for (int s = 0; s < n; ++s) {
    std::vector<double>& dist = rt.pr_dist[s];
    std::vector<int> parent(n, -1);
    dist[s] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.emplace(0.0, s);
    std::vector<char> done(n, 0);
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (done[u]) continue;
      done[u] = 1;
      for (auto [v, w] : adj[u]) {
        if (dist[u] + w < dist[v]) {
          dist[v] = dist[u] + w;
          parent[v] = u;
          pq.emplace(dist[v], v);
        }
      }
    }
    for (int t = 0; t < n; ++t) {
      if (t == s || parent[t] < 0) continue;
      int hop = t;
      while (parent[hop] != s) hop = parent[hop];
      rt.next_hop[s][t] = hop;
    }
  }
  return rt;
}

std::vector<int> Routing::path(int src, int dst) const {
  std::vector<int> p{src};
  int cur = src;
  while (cur != dst) {
    cur = next_hop[cur][dst];
    if (cur < 0) return {};
    p.push_back(cur);
  }
  return p;
}

std::string to_text(const TopologySpec& spec) {
  ordered_json doc;
  doc["format"] = "foglb-topology";
  doc["version"] = 1;
  doc["nodes"] = ordered_json::array();
  for (const auto& n : spec.nodes) {
    ordered_json jn;
    jn["id"] = n.node_id;
    jn["role"] = role_name(n.role);
    jn["ipt"] = n.ipt;
    jn["ram_bytes"] = n.ram_bytes;
    doc["nodes"].push_back(jn);
  }
  doc["links"] = ordered_json::array();
  for (const auto& l : spec.links) {
    ordered_json jl;
    jl["u"] = l.u;
    jl["v"] = l.v;
    jl["category"] = link_category_name(l.category);
    jl["bandwidth_mbps"] = l.bandwidth_mbps;
    jl["prop_delay_s"] = l.prop_delay_s;
    doc["links"].push_back(jl);
  }
  doc["regions"] = ordered_json::array();
  for (const auto& r : spec.regions) {
    ordered_json jr;
    jr["id"] = r.region_id;
    jr["aps"] = r.ap_ids;
    jr["candidates"] = r.candidate_fog_ids;
    doc["regions"].push_back(jr);
  }
  return doc.dump(2) + "\n";
}

TopologySpec from_text(const std::string& doc) {
  ordered_json j = ordered_json::parse(doc);
  if (j.value("format", "") != "foglb-topology") {
    throw TopologyError("not a foglb topology document");
  }
  TopologySpec spec;
  for (const auto& jn : j.at("nodes")) {
    NodeSpec n;
    n.node_id = jn.at("id").get<int>();
    std::string role = jn.at("role").get<std::string>();
    if (role == "AP") {
      n.role = Role::AP;
    } else if (role == "Fog") {
      n.role = Role::Fog;
    } else if (role == "Cloud") {
      n.role = Role::Cloud;
    } else {
      throw TopologyError("unknown role: " + role);
    }
    n.ipt = jn.at("ipt").get<double>();
    n.ram_bytes = jn.at("ram_bytes").get<double>();
    spec.nodes.push_back(n);
  }
  for (const auto& jl : j.at("links")) {
    LinkSpec l;
    l.u = jl.at("u").get<int>();
    l.v = jl.at("v").get<int>();
    std::string cat = jl.at("category").get<std::string>();
    if (cat == "IoT-Fog") {
      l.category = LinkCategory::IotFog;
    } else if (cat == "Fog-Fog") {
      l.category = LinkCategory::FogFog;
    } else if (cat == "Fog-Cloud") {
      l.category = LinkCategory::FogCloud;
    } else {
      throw UncategorizableEdgeError("unknown link category: " + cat);
    }
    l.bandwidth_mbps = jl.at("bandwidth_mbps").get<double>();
    l.prop_delay_s = jl.at("prop_delay_s").get<double>();
    spec.links.push_back(l);
  }
  for (const auto& jr : j.at("regions")) {
    Region r;
    r.region_id = jr.at("id").get<int>();
    r.ap_ids = jr.at("aps").get<std::vector<int>>();
    r.candidate_fog_ids = jr.at("candidates").get<std::vector<int>>();
    spec.regions.push_back(r);
  }
  return spec;
}

void save_topology(const TopologySpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TopologyError("cannot write " + path);
  out << to_text(spec);
}

TopologySpec load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace foglb::topo
