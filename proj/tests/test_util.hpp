#pragma once

// Shared fixtures: tiny hand-built topologies and config shrink-downs used
// across the agent/world test suites.

#include <vector>

#include "foglb/agents.hpp"
#include "foglb/topology.hpp"
#include "foglb/world.hpp"

namespace testutil {

inline foglb::topo::LinkSpec link(int u, int v,
                                  foglb::topo::LinkCategory cat, double bw,
                                  double pr) {
  foglb::topo::LinkSpec l;
  l.u = u;
  l.v = v;
  l.category = cat;
  l.bandwidth_mbps = bw;
  l.prop_delay_s = pr;
  return l;
}

inline foglb::topo::NodeSpec node(int id, foglb::topo::Role role, double ipt) {
  foglb::topo::NodeSpec n;
  n.node_id = id;
  n.role = role;
  n.ipt = ipt;
  n.ram_bytes = 1.0;
  return n;
}

// AP(0) -- F(1, weak) -- F(2, strong) -- Cloud(3), one region.
inline foglb::topo::TopologySpec line_topology() {
  using foglb::topo::LinkCategory;
  using foglb::topo::Role;
  foglb::topo::TopologySpec spec;
  spec.nodes = {node(0, Role::AP, 0.0), node(1, Role::Fog, 1e3),
                node(2, Role::Fog, 1e4), node(3, Role::Cloud, 1e6)};
  spec.links = {link(0, 1, LinkCategory::IotFog, 100.0, 1.0),
                link(1, 2, LinkCategory::FogFog, 1000.0, 2.0),
                link(2, 3, LinkCategory::FogCloud, 1000.0, 10.0)};
  spec.regions = foglb::topo::define_regions(spec, {});
  return spec;
}

// AP(0), AP(1) each on their own fog, fogs interconnected, one region.
inline foglb::topo::TopologySpec two_ap_topology() {
  using foglb::topo::LinkCategory;
  using foglb::topo::Role;
  foglb::topo::TopologySpec spec;
  spec.nodes = {node(0, Role::AP, 0.0), node(1, Role::AP, 0.0),
                node(2, Role::Fog, 2e3), node(3, Role::Fog, 5e3),
                node(4, Role::Cloud, 1e6)};
  spec.links = {link(0, 2, LinkCategory::IotFog, 100.0, 1.0),
                link(1, 3, LinkCategory::IotFog, 100.0, 1.5),
                link(2, 3, LinkCategory::FogFog, 1000.0, 2.0),
                link(3, 4, LinkCategory::FogCloud, 1000.0, 10.0)};
  spec.regions = foglb::topo::define_regions(spec, {});
  return spec;
}

// Small nets and buffers so world tests stay fast.
inline foglb::agents::DdqlConfig small_ddql() {
  foglb::agents::DdqlConfig cfg;
  cfg.hidden = {16, 8};
  cfg.buffer_capacity = 512;
  cfg.batch_size = 8;
  cfg.train_period = 4;
  cfg.target_sync_period = 50;
  return cfg;
}

inline foglb::WorldConfig world_config(foglb::topo::TopologySpec topo,
                                       foglb::agents::PolicyKind policy,
                                       double beta_seconds,
                                       std::uint64_t seed) {
  foglb::WorldConfig cfg;
  cfg.topology = std::move(topo);
  cfg.policy = policy;
  cfg.schedule.phases = {{0.0, beta_seconds}};
  cfg.schedule.beta_time_scale = 1.0;
  cfg.ddql = small_ddql();
  cfg.seed = seed;
  return cfg;
}

}  // namespace testutil
