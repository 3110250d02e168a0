#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "foglb/errors.hpp"
#include "foglb/rng.hpp"

namespace foglb::topo {

enum class Role { AP, Fog, Cloud };

const char* role_name(Role r);

struct NodeSpec {
  int node_id = 0;
  Role role = Role::Fog;
  double ipt = 0.0;        // instructions per second; 0 for APs
  double ram_bytes = 0.0;  // carried and exported, unused by experiments
};

enum class LinkCategory { IotFog, FogFog, FogCloud };

const char* link_category_name(LinkCategory c);

struct LinkSpec {
  int u = 0;
  int v = 0;
  LinkCategory category = LinkCategory::FogFog;
  double bandwidth_mbps = 0.0;
  double prop_delay_s = 0.0;
};

// A set of agent-bearing APs plus the ordered fog candidate list they may
// assign workloads to. Candidate order is fixed per run; it defines state
// vector layout and action indexing.
struct Region {
  int region_id = 0;
  std::vector<int> ap_ids;
  std::vector<int> candidate_fog_ids;
};

// Undirected simple graph on nodes 0..n-1.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // stored with u < v, sorted

  std::vector<std::vector<int>> adjacency() const;
  void add_edge(int u, int v);
  bool has_edge(int u, int v) const;
  void normalize();  // sort edges, drop duplicates
};

bool is_connected(const Graph& g);

// Random preferential-attachment graph with hub-and-periphery structure.
// Each new node attaches to `attachment_degree` existing nodes sampled
// proportionally to degree. Connected by construction.
Graph generate_graph(int n_nodes, int attachment_degree, std::uint64_t seed);

// Shortest-path betweenness: unnormalized unordered-pair counts, endpoints
// excluded. Throws DisconnectedError.
std::vector<double> betweenness_serial(const Graph& g);

// OpenMP variant. Sources are processed in fixed-size chunks and partial
// scores are reduced in chunk order, so results do not depend on the thread
// count.
std::vector<double> betweenness_parallel(const Graph& g);

inline std::vector<double> betweenness(const Graph& g) {
  return betweenness_parallel(g);
}

// Appends the cloud as a new node attached to the two highest-centrality
// non-AP nodes and returns a role per node (APs = n_aps lowest centrality,
// ties by id). Mutates g.
std::vector<Role> assign_roles(Graph& g, const std::vector<double>& centrality,
                               int n_aps);

// Replaces AP-AP edges so every AP attaches only to fog nodes: the lower-id
// endpoint keeps the edge, rewired to its nearest fog by hop distance (ties
// by id); APs left without a fog neighbor get one added.
void rewire_ap_edges(Graph& g, const std::vector<Role>& roles);

std::vector<NodeSpec> assign_resources(const Graph& g,
                                       const std::vector<Role>& roles,
                                       Rng& rng, double cloud_ipt = 1e6);

std::vector<LinkSpec> assign_links(const Graph& g,
                                   const std::vector<Role>& roles, Rng& rng);

struct TopologySpec {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<Region> regions;

  std::vector<int> ap_ids() const;
  std::vector<int> fog_ids() const;
  int cloud_id() const;
  const NodeSpec& node(int id) const;
  const Region& region_of_ap(int ap_id) const;
};

struct RegionDef {
  std::vector<int> ap_ids;
  std::vector<int> fog_ids;
};

// Builds the Region list with ascending candidate ordering. An empty `defs`
// yields one region covering all APs and all fog nodes (the evaluation setup
// in the reference experiments).
std::vector<Region> define_regions(const TopologySpec& spec,
                                   const std::vector<RegionDef>& defs);

struct TopologyParams {
  int n_graph_nodes = 32;
  int attachment_degree = 2;
  int n_aps = 21;
  double cloud_ipt = 1e6;
  std::vector<RegionDef> region_defs;  // empty = single region
};

TopologySpec build_topology(const TopologyParams& params, std::uint64_t seed);

// Shortest paths by total propagation delay, deterministic tie-breaking.
struct Routing {
  std::vector<std::vector<double>> pr_dist;
  std::vector<std::vector<int>> next_hop;  // -1 when dst == src or unreachable

  std::vector<int> path(int src, int dst) const;  // node sequence incl. both
};

Routing shortest_pr_routes(const TopologySpec& spec);

// Text document export/import so a fixed topology can be replayed across
// experiments.
std::string to_text(const TopologySpec& spec);
TopologySpec from_text(const std::string& doc);
void save_topology(const TopologySpec& spec, const std::string& path);
TopologySpec load_topology(const std::string& path);

}  // namespace foglb::topo
