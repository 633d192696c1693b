#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "region_learner/map_graph.hpp"

namespace region_learner {

struct ClusteringParams
{
    double s_prime = 0.5;       /* additive scattering offset */
    double s_max = 3.0;         /* membership bound, scaled by shape_factor */
    double n_des = 30.0;        /* desired cluster cardinality */
    double r_max = 10.0;        /* meters, equivalent radius upper bound */
    double shape_factor = 1.0;

    /* Throws ConfigError when a field is out of range */
    void validate() const;
    double membership_bound() const { return s_max * shape_factor; }
};

/*
 * Connected group of map nodes. The centroid and the sum of squared
 * distances to it are maintained incrementally (Welford updates) so that
 * hypothetical insertions and removals cost O(1).
 */
struct Cluster
{
    RegionId id = 0;
    std::set<NodeId> members;
    double cx = 0.0;
    double cy = 0.0;
    double sum_sq = 0.0;

    std::size_t cardinality() const { return members.size(); }
};

/* Moments of a cluster, enough to evaluate its scattering */
struct ClusterMoments
{
    std::size_t n = 0;
    double cx = 0.0;
    double cy = 0.0;
    double sum_sq = 0.0;

    ClusterMoments with(double x, double y) const;
    ClusterMoments without(double x, double y) const;
};

ClusterMoments moments_of(const Cluster& c);

double equivalent_radius(std::size_t cardinality, const ClusteringParams& params);
inline double equivalent_radius(const Cluster& c, const ClusteringParams& params)
{
    return equivalent_radius(c.cardinality(), params);
}

/* s'' term alone: sum_sq / req for n > 1, zero for singletons */
double dispersion(const ClusterMoments& m, const ClusteringParams& params);
/* s = s' + s'' */
double scattering(const ClusterMoments& m, const ClusteringParams& params);
double scattering(const Cluster& c, const ClusteringParams& params);

struct Reassignment
{
    RegionId from = 0;
    RegionId to = 0;
};

struct ClusterChange
{
    enum class Kind { NewRegion, Joined, Reassigned, RegionDeleted };

    Kind kind = Kind::Joined;
    NodeId node = 0;
    RegionId from = 0;
    RegionId to = 0;
};

/* Dynamic partition of map nodes into connected regions */
class RegionSet
{
public:
    RegionId assign(const MapGraph& graph, NodeId node,
                    const ClusteringParams& params);
    std::optional<Reassignment> try_reassign(const MapGraph& graph, NodeId node,
                                             const ClusteringParams& params);
    std::vector<ClusterChange> on_new_node(const MapGraph& graph, NodeId node,
                                           const ClusteringParams& params);

    std::optional<RegionId> region_of(NodeId node) const;
    const Cluster& cluster(RegionId id) const;
    bool has_cluster(RegionId id) const { return clusters_.count(id) != 0; }
    const std::map<RegionId, Cluster>& clusters() const { return clusters_; }
    std::size_t assigned_count() const { return assigned_; }
    std::optional<RegionId> current_region() const { return current_; }
    /* Position recorded when the node was assigned */
    std::pair<double, double> position_of(NodeId node) const;

    /* One past the largest region id ever allocated; ids are never reused,
     * so this is the width of any per-region vector */
    std::size_t id_capacity() const { return next_id_; }

    /* Sum of s'' over all clusters */
    double total_dispersion(const ClusteringParams& params) const;

    /* Re-inserts a cluster read back from a dump; used by the CLI to
     * restore the regions produced by an exploration run */
    void restore(RegionId id, NodeId node, double x, double y);

private:
    RegionId create_cluster(NodeId node, const Pose2& pose);
    void insert_member(Cluster& c, NodeId node, double x, double y);
    void erase_member(Cluster& c, NodeId node, double x, double y);
    bool connected_without(const MapGraph& graph, const Cluster& c,
                           NodeId removed) const;

    std::map<RegionId, Cluster> clusters_;
    std::vector<std::optional<RegionId>> node_to_region_;
    std::vector<std::pair<double, double>> positions_;
    std::size_t assigned_ = 0;
    std::optional<RegionId> current_;
    RegionId next_id_ = 0;
};

/* Cluster dump: header `node_id,x,y,region_id`, one row per assigned node */
void write_cluster_csv(std::ostream& os, const MapGraph& graph,
                       const RegionSet& regions);

struct ClusterDumpRow
{
    NodeId node = 0;
    double x = 0.0;
    double y = 0.0;
    RegionId region = 0;
};

std::vector<ClusterDumpRow> read_cluster_csv(std::istream& is);
RegionSet regions_from_dump(const std::vector<ClusterDumpRow>& rows);

} // namespace region_learner
