#include "region_learner/map_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "region_learner/error.hpp"

namespace region_learner {

double normalize_angle(double radians)
{
    if (!std::isfinite(radians))
        return radians;

    double wrapped = std::remainder(radians, 2.0 * std::numbers::pi);
    /* remainder() yields [-pi, pi]; fold -pi onto +pi */
    if (wrapped <= -std::numbers::pi)
        wrapped += 2.0 * std::numbers::pi;
    return wrapped;
}

bool Pose2::finite() const
{
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(yaw);
}

double planar_distance(const Pose2& a, const Pose2& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

double angle_diff(const Pose2& a, const Pose2& b)
{
    return std::abs(normalize_angle(a.yaw - b.yaw));
}

std::vector<double> l2_normalized(std::span<const double> v)
{
    double sq = 0.0;
    for (const double c : v) {
        if (!std::isfinite(c))
            throw DataError("non-finite feature component");
        sq += c * c;
    }
    if (sq <= 0.0)
        throw DataError("zero-norm feature vector");

    const double inv = 1.0 / std::sqrt(sq);
    std::vector<double> out(v.begin(), v.end());
    for (double& c : out)
        c *= inv;
    return out;
}

NodeId MapGraph::add_node(const Pose2& pose, double timestamp,
                          std::span<const double> feature)
{
    if (!pose.finite() || !std::isfinite(timestamp))
        throw DataError("non-finite pose or timestamp");
    if (dim_ == 0)
        dim_ = feature.size();
    if (feature.size() != dim_ || dim_ == 0)
        throw DataError("feature dimension mismatch: expected " +
                        std::to_string(dim_) + ", got " +
                        std::to_string(feature.size()));
    if (!nodes_.empty() && timestamp < nodes_.back().timestamp)
        throw DataError("non-monotone time");

    Node n;
    n.id = static_cast<NodeId>(nodes_.size());
    n.pose = pose;
    n.timestamp = timestamp;
    n.feature = l2_normalized(feature);

    nodes_.push_back(std::move(n));
    adjacency_.emplace_back();

    const NodeId id = nodes_.back().id;
    if (id > 0) {
        edges_.push_back({ id - 1, id, EdgeKind::Odometry });
        adjacency_[id - 1].push_back(id);
        adjacency_[id].push_back(id - 1);
    }
    return id;
}

void MapGraph::add_loop_edge(NodeId a, NodeId b)
{
    if (a == b)
        throw DataError("self loop edge");
    if (!contains(a) || !contains(b))
        throw DataError("loop edge endpoint does not exist");
    if (adjacent(a, b))
        return;

    edges_.push_back({ a, b, EdgeKind::LoopClosure });
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
}

const Node& MapGraph::node(NodeId id) const
{
    if (!contains(id))
        throw DataError("unknown node id " + std::to_string(id));
    return nodes_[id];
}

Node& MapGraph::node(NodeId id)
{
    if (!contains(id))
        throw DataError("unknown node id " + std::to_string(id));
    return nodes_[id];
}

const std::vector<NodeId>& MapGraph::neighbors(NodeId id) const
{
    if (!contains(id))
        throw DataError("unknown node id " + std::to_string(id));
    return adjacency_[id];
}

bool MapGraph::adjacent(NodeId a, NodeId b) const
{
    const auto& adj = neighbors(a);
    return std::find(adj.begin(), adj.end(), b) != adj.end();
}

} // namespace region_learner
