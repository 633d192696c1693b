#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace region_learner {

using NodeId = std::uint32_t;
using RegionId = std::uint32_t;

/* Wraps an angle into (-pi, pi] */
double normalize_angle(double radians);

/* Planar robot pose; yaw is kept normalized */
struct Pose2
{
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    Pose2() = default;
    Pose2(double x_, double y_, double yaw_) :
        x(x_), y(y_), yaw(normalize_angle(yaw_)) { }

    bool finite() const;
};

/* Euclidean distance in the xy-plane */
double planar_distance(const Pose2& a, const Pose2& b);

/* Minimal absolute heading difference, in [0, pi] */
double angle_diff(const Pose2& a, const Pose2& b);

/* Scales a vector to unit L2 norm; throws DataError for zero or
 * non-finite input */
std::vector<double> l2_normalized(std::span<const double> v);

struct Node
{
    NodeId id = 0;
    Pose2 pose;
    double timestamp = 0.0;
    std::vector<double> feature;
    std::optional<RegionId> region;
};

enum class EdgeKind { Odometry, LoopClosure };

struct Edge
{
    NodeId a = 0;
    NodeId b = 0;
    EdgeKind kind = EdgeKind::Odometry;
};

/*
 * Pose graph with sequential node ids. Every inserted node is chained to
 * its predecessor by an odometry edge; loop-closure edges are added
 * explicitly.
 */
class MapGraph
{
public:
    /* dim = 0 lets the first inserted node fix the feature dimension */
    explicit MapGraph(std::size_t dim = 0) : dim_(dim) { }

    NodeId add_node(const Pose2& pose, double timestamp,
                    std::span<const double> feature);
    void add_loop_edge(NodeId a, NodeId b);

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    std::size_t dim() const { return dim_; }
    bool contains(NodeId id) const { return id < nodes_.size(); }

    const Node& node(NodeId id) const;
    Node& node(NodeId id);
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<NodeId>& neighbors(NodeId id) const;
    bool adjacent(NodeId a, NodeId b) const;

private:
    std::size_t dim_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> adjacency_;
};

} // namespace region_learner
