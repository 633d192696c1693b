#include "region_learner/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "region_learner/error.hpp"

namespace region_learner {

namespace {

/* Smallest global dispersion decrease accepted as a strict improvement;
 * guards against accepting moves that only differ by rounding */
constexpr double kMinImprovement = 1e-9;

} // namespace

void ClusteringParams::validate() const
{
    if (!(s_prime >= 0.0))
        throw ConfigError("clustering: s_prime must be >= 0");
    if (!(s_max > s_prime))
        throw ConfigError("clustering: s_max must be > s_prime");
    if (!(n_des >= 1.0))
        throw ConfigError("clustering: n_des must be >= 1");
    if (!(r_max > 0.0))
        throw ConfigError("clustering: r_max must be > 0");
    if (!(shape_factor > 0.0))
        throw ConfigError("clustering: shape_factor must be > 0");
}

ClusterMoments ClusterMoments::with(double x, double y) const
{
    ClusterMoments m;
    m.n = n + 1;
    const double dx = x - cx;
    const double dy = y - cy;
    const double inv = 1.0 / static_cast<double>(m.n);
    m.cx = cx + dx * inv;
    m.cy = cy + dy * inv;
    m.sum_sq = sum_sq + (dx * dx + dy * dy) * static_cast<double>(n) * inv;
    return m;
}

ClusterMoments ClusterMoments::without(double x, double y) const
{
    ClusterMoments m;
    if (n <= 1)
        return m;

    m.n = n - 1;
    const double rest = static_cast<double>(m.n);
    m.cx = (static_cast<double>(n) * cx - x) / rest;
    m.cy = (static_cast<double>(n) * cy - y) / rest;
    if (m.n == 1)
        return m;

    const double dx = x - m.cx;
    const double dy = y - m.cy;
    m.sum_sq = std::max(0.0, sum_sq - (dx * dx + dy * dy) * rest /
                                          static_cast<double>(n));
    return m;
}

ClusterMoments moments_of(const Cluster& c)
{
    return { c.cardinality(), c.cx, c.cy, c.sum_sq };
}

double equivalent_radius(std::size_t cardinality, const ClusteringParams& params)
{
    const double ratio = static_cast<double>(cardinality) / params.n_des;
    return params.r_max * std::min(1.0, std::sqrt(ratio));
}

double dispersion(const ClusterMoments& m, const ClusteringParams& params)
{
    if (m.n <= 1)
        return 0.0;
    return m.sum_sq / equivalent_radius(m.n, params);
}

double scattering(const ClusterMoments& m, const ClusteringParams& params)
{
    return params.s_prime + dispersion(m, params);
}

double scattering(const Cluster& c, const ClusteringParams& params)
{
    return scattering(moments_of(c), params);
}

std::optional<RegionId> RegionSet::region_of(NodeId node) const
{
    if (node >= node_to_region_.size())
        return std::nullopt;
    return node_to_region_[node];
}

std::pair<double, double> RegionSet::position_of(NodeId node) const
{
    if (!region_of(node))
        throw DataError("node " + std::to_string(node) + " is not assigned");
    return positions_[node];
}

const Cluster& RegionSet::cluster(RegionId id) const
{
    const auto it = clusters_.find(id);
    if (it == clusters_.end())
        throw DataError("unknown region id " + std::to_string(id));
    return it->second;
}

double RegionSet::total_dispersion(const ClusteringParams& params) const
{
    double total = 0.0;
    for (const auto& [id, c] : clusters_)
        total += dispersion(moments_of(c), params);
    return total;
}

void RegionSet::insert_member(Cluster& c, NodeId node, double x, double y)
{
    const ClusterMoments m = moments_of(c).with(x, y);
    c.members.insert(node);
    c.cx = m.cx;
    c.cy = m.cy;
    c.sum_sq = m.sum_sq;

    if (node >= node_to_region_.size()) {
        node_to_region_.resize(node + 1);
        positions_.resize(node + 1);
    }
    if (!node_to_region_[node])
        ++assigned_;
    node_to_region_[node] = c.id;
    positions_[node] = { x, y };
}

void RegionSet::erase_member(Cluster& c, NodeId node, double x, double y)
{
    const ClusterMoments m = moments_of(c).without(x, y);
    c.members.erase(node);
    node_to_region_[node].reset();
    --assigned_;

    if (c.members.size() == 1) {
        /* Reset exactly; no accumulated rounding survives a singleton */
        const auto& [px, py] = positions_[*c.members.begin()];
        c.cx = px;
        c.cy = py;
        c.sum_sq = 0.0;
        return;
    }
    c.cx = m.cx;
    c.cy = m.cy;
    c.sum_sq = m.sum_sq;
}

RegionId RegionSet::create_cluster(NodeId node, const Pose2& pose)
{
    const RegionId id = next_id_++;
    Cluster& c = clusters_[id];
    c.id = id;
    insert_member(c, node, pose.x, pose.y);
    return id;
}

RegionId RegionSet::assign(const MapGraph& graph, NodeId node,
                           const ClusteringParams& params)
{
    const Pose2& pose = graph.node(node).pose;
    if (region_of(node))
        throw DataError("node " + std::to_string(node) + " already assigned");

    /* Only clusters holding a graph neighbor keep the partition connected,
     * so the current region competes only when it is adjacent */
    std::set<RegionId> candidates;
    for (const NodeId nb : graph.neighbors(node))
        if (const auto r = region_of(nb))
            candidates.insert(*r);

    std::optional<RegionId> best;
    double best_score = 0.0;
    for (const RegionId r : candidates) {
        const double s = scattering(moments_of(clusters_.at(r)).with(pose.x, pose.y),
                                    params);
        if (s <= params.membership_bound() && (!best || s < best_score)) {
            best = r;
            best_score = s;
        }
    }

    if (best)
        insert_member(clusters_.at(*best), node, pose.x, pose.y);
    else
        best = create_cluster(node, pose);

    current_ = *best;
    return *best;
}

bool RegionSet::connected_without(const MapGraph& graph, const Cluster& c,
                                  NodeId removed) const
{
    const std::size_t target = c.members.size() - 1;
    if (target == 0)
        return true;

    NodeId start = *c.members.begin();
    if (start == removed)
        start = *std::next(c.members.begin());

    std::set<NodeId> seen { start };
    std::deque<NodeId> queue { start };
    while (!queue.empty()) {
        const NodeId cur = queue.front();
        queue.pop_front();
        for (const NodeId nb : graph.neighbors(cur)) {
            if (nb == removed || seen.count(nb) != 0)
                continue;
            if (region_of(nb) != c.id)
                continue;
            seen.insert(nb);
            queue.push_back(nb);
        }
    }
    return seen.size() == target;
}

std::optional<Reassignment> RegionSet::try_reassign(const MapGraph& graph,
                                                    NodeId node,
                                                    const ClusteringParams& params)
{
    const auto from_id = region_of(node);
    if (!from_id)
        throw DataError("node " + std::to_string(node) + " is not assigned");

    std::set<RegionId> targets;
    for (const NodeId nb : graph.neighbors(node))
        if (const auto r = region_of(nb); r && *r != *from_id)
            targets.insert(*r);
    if (targets.empty())
        return std::nullopt;

    Cluster& from = clusters_.at(*from_id);
    const auto& [x, y] = positions_[node];
    const ClusterMoments from_m = moments_of(from);
    const double from_before = dispersion(from_m, params);
    const double from_after = dispersion(from_m.without(x, y), params);

    std::optional<RegionId> best;
    double best_delta = -kMinImprovement;
    for (const RegionId r : targets) {
        const ClusterMoments to_m = moments_of(clusters_.at(r));
        const double delta = (from_after + dispersion(to_m.with(x, y), params)) -
                             (from_before + dispersion(to_m, params));
        if (delta < best_delta) {
            best = r;
            best_delta = delta;
        }
    }
    /* Connectivity does not depend on the target, so the BFS only runs
     * once an improving move exists */
    if (!best || !connected_without(graph, from, node))
        return std::nullopt;

    erase_member(from, node, x, y);
    if (from.members.empty())
        clusters_.erase(*from_id);
    insert_member(clusters_.at(*best), node, x, y);
    return Reassignment { *from_id, *best };
}

std::vector<ClusterChange> RegionSet::on_new_node(const MapGraph& graph,
                                                  NodeId node,
                                                  const ClusteringParams& params)
{
    std::vector<ClusterChange> changes;

    const RegionId before_next = next_id_;
    const RegionId r = assign(graph, node, params);
    changes.push_back({ r >= before_next ? ClusterChange::Kind::NewRegion
                                         : ClusterChange::Kind::Joined,
                        node, r, r });

    std::vector<NodeId> scope { node };
    for (const NodeId nb : graph.neighbors(node))
        if (region_of(nb))
            scope.push_back(nb);
    std::sort(scope.begin() + 1, scope.end());

    /* Each accepted move strictly lowers the global dispersion, so the
     * fixpoint iteration terminates; the cap only catches a broken
     * invariant */
    constexpr int kMaxPasses = 100000;
    for (int pass = 0;; ++pass) {
        if (pass == kMaxPasses)
            throw InvariantError("reassignment did not reach a fixpoint");

        bool moved = false;
        for (const NodeId candidate : scope) {
            const auto move = try_reassign(graph, candidate, params);
            if (!move)
                continue;
            moved = true;
            changes.push_back({ ClusterChange::Kind::Reassigned, candidate,
                                move->from, move->to });
            if (!has_cluster(move->from))
                changes.push_back({ ClusterChange::Kind::RegionDeleted,
                                    candidate, move->from, move->from });
        }
        if (!moved)
            break;
    }
    return changes;
}

void RegionSet::restore(RegionId id, NodeId node, double x, double y)
{
    if (region_of(node))
        throw DataError("node " + std::to_string(node) + " listed twice");

    auto [it, inserted] = clusters_.try_emplace(id);
    it->second.id = id;
    insert_member(it->second, node, x, y);
    next_id_ = std::max<RegionId>(next_id_, id + 1);
    current_ = id;
}

void write_cluster_csv(std::ostream& os, const MapGraph& graph,
                       const RegionSet& regions)
{
    std::ostringstream buf;
    buf.precision(10);
    buf << "node_id,x,y,region_id\n";
    for (const Node& n : graph.nodes()) {
        const auto r = regions.region_of(n.id);
        if (!r)
            continue;
        buf << n.id << ',' << n.pose.x << ',' << n.pose.y << ',' << *r << '\n';
    }
    os << buf.str();
}

std::vector<ClusterDumpRow> read_cluster_csv(std::istream& is)
{
    std::vector<ClusterDumpRow> rows;
    std::string line;
    if (!std::getline(is, line) || line.rfind("node_id,x,y,region_id", 0) != 0)
        throw DataError("cluster csv: missing header node_id,x,y,region_id");

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        ClusterDumpRow row;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(ls >> row.node >> c1 >> row.x >> c2 >> row.y >> c3 >> row.region) ||
            c1 != ',' || c2 != ',' || c3 != ',')
            throw DataError("cluster csv: malformed line " + std::to_string(lineno));
        rows.push_back(row);
    }
    return rows;
}

RegionSet regions_from_dump(const std::vector<ClusterDumpRow>& rows)
{
    RegionSet regions;
    for (const auto& row : rows)
        regions.restore(row.region, row.node, row.x, row.y);
    return regions;
}

} // namespace region_learner
