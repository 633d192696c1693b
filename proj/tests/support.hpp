#pragma once

/* Independent oracles and fixtures shared by the unit tests and the
 * acceptance binary. Nothing here reuses the library's incremental code. */

#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "region_learner/clustering.hpp"
#include "region_learner/map_graph.hpp"

namespace support {

using namespace region_learner;

/* Two-pass centroid and sum of squared distances */
struct Moments
{
    double cx = 0.0, cy = 0.0, sum_sq = 0.0;
};

inline Moments brute_moments(const MapGraph& g, const std::set<NodeId>& members)
{
    Moments m;
    for (const NodeId id : members) {
        m.cx += g.node(id).pose.x;
        m.cy += g.node(id).pose.y;
    }
    m.cx /= static_cast<double>(members.size());
    m.cy /= static_cast<double>(members.size());
    for (const NodeId id : members) {
        const double dx = g.node(id).pose.x - m.cx;
        const double dy = g.node(id).pose.y - m.cy;
        m.sum_sq += dx * dx + dy * dy;
    }
    return m;
}

inline double brute_req(std::size_t n, const ClusteringParams& p)
{
    const double r = p.r_max * std::sqrt(static_cast<double>(n) / p.n_des);
    return r < p.r_max ? r : p.r_max;
}

/* Sum of s'' over a labeling, from scratch */
inline double brute_total_dispersion(const MapGraph& g, const std::map<NodeId, RegionId>& labels,
                                     const ClusteringParams& p)
{
    std::map<RegionId, std::set<NodeId>> groups;
    for (const auto& [node, region] : labels)
        groups[region].insert(node);
    double total = 0.0;
    for (const auto& [region, members] : groups)
        if (members.size() > 1)
            total += brute_moments(g, members).sum_sq / brute_req(members.size(), p);
    return total;
}

/* Adjacency rebuilt from the edge list */
inline std::vector<std::vector<NodeId>> brute_adjacency(const MapGraph& g)
{
    std::vector<std::vector<NodeId>> adj(g.size());
    for (const Edge& e : g.edges()) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    return adj;
}

inline bool brute_connected(const std::vector<std::vector<NodeId>>& adj,
                            const std::set<NodeId>& members)
{
    if (members.empty())
        return true;
    std::set<NodeId> seen { *members.begin() };
    std::deque<NodeId> queue { *members.begin() };
    while (!queue.empty()) {
        const NodeId cur = queue.front();
        queue.pop_front();
        for (const NodeId other : adj[cur]) {
            if (members.count(other) && !seen.count(other)) {
                seen.insert(other);
                queue.push_back(other);
            }
        }
    }
    return seen.size() == members.size();
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-9)
{
    return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

/*
 * Checks a RegionSet against the graph after one on_new_node call.
 * `before` holds the labeling prior to the call; the reported changes
 * are replayed on it to verify that every accepted move strictly lowered
 * the from-scratch total dispersion. Returns violation descriptions.
 */
inline std::vector<std::string> audit_step(const MapGraph& g, const RegionSet& rs,
                                           std::map<NodeId, RegionId>& before,
                                           const std::vector<ClusterChange>& changes,
                                           const ClusteringParams& p)
{
    std::vector<std::string> bad;

    /* replay */
    for (const ClusterChange& c : changes) {
        if (c.kind == ClusterChange::Kind::NewRegion || c.kind == ClusterChange::Kind::Joined) {
            before[c.node] = c.to;
        } else if (c.kind == ClusterChange::Kind::Reassigned) {
            const double was = brute_total_dispersion(g, before, p);
            before[c.node] = c.to;
            const double now = brute_total_dispersion(g, before, p);
            if (!(now < was))
                bad.push_back("reassignment of node " + std::to_string(c.node) +
                              " did not decrease total dispersion");
        }
    }

    /* partition */
    std::size_t members = 0;
    for (const auto& [id, cl] : rs.clusters()) {
        members += cl.members.size();
        if (cl.members.empty())
            bad.push_back("empty cluster " + std::to_string(id));
        for (const NodeId n : cl.members)
            if (rs.region_of(n) != id)
                bad.push_back("node " + std::to_string(n) + " label disagrees with membership");
    }
    if (members != g.size() || rs.assigned_count() != g.size())
        bad.push_back("clusters do not partition the nodes");
    for (const auto& [node, region] : before)
        if (rs.region_of(node) != region)
            bad.push_back("replayed labels diverge at node " + std::to_string(node));

    /* connectivity and caches */
    const auto adj = brute_adjacency(g);
    for (const auto& [id, cl] : rs.clusters()) {
        if (!brute_connected(adj, cl.members))
            bad.push_back("cluster " + std::to_string(id) + " disconnected");
        const Moments m = brute_moments(g, cl.members);
        const double scale = std::max(1.0, std::hypot(m.cx, m.cy));
        if (std::abs(m.cx - cl.cx) > 1e-6 * scale || std::abs(m.cy - cl.cy) > 1e-6 * scale)
            bad.push_back("cluster " + std::to_string(id) + " centroid cache off");
        if (!close_rel(m.sum_sq, cl.sum_sq, 1e-6, 1e-9))
            bad.push_back("cluster " + std::to_string(id) + " sum_sq cache off");
    }
    return bad;
}

/* Random walk with occasional returns towards the start; loop edges join
 * a node to an earlier one within link meters */
struct RandomWalk
{
    std::vector<Pose2> poses;
    std::vector<std::pair<NodeId, NodeId>> loops;   /* (new, old) */
};

inline RandomWalk random_walk(std::size_t n, std::uint64_t seed, double link = 0.8)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> turn(0.0, 0.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RandomWalk w;
    double x = 0.0, y = 0.0, yaw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            yaw += turn(rng);
            /* drift back towards the origin now and then so paths cross */
            if (unit(rng) < 0.05)
                yaw = std::atan2(-y, -x);
            const double step = 0.5 + unit(rng);
            x += step * std::cos(yaw);
            y += step * std::sin(yaw);
        }
        w.poses.emplace_back(x, y, yaw);
        for (std::size_t j = 0; j + 5 < i; ++j) {
            if (planar_distance(w.poses[i], w.poses[j]) < link) {
                w.loops.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
                break;
            }
        }
    }
    return w;
}

} // namespace support
