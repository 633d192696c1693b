#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "region_learner/map_graph.hpp"

namespace region_learner {

/* Uniform-grid point index over the xy-plane. Radius queries touch only
 * the cells overlapping the query disc. */
class SpatialGrid
{
public:
    struct Entry
    {
        NodeId id = 0;
        double x = 0.0;
        double y = 0.0;
    };

    struct Hit
    {
        NodeId id = 0;
        double distance = 0.0;
    };

    explicit SpatialGrid(double cell_size);

    void insert(NodeId id, double x, double y);
    /* Returns false when the entry was not present */
    bool erase(NodeId id, double x, double y);

    /* Up to k entries within radius (inclusive), nearest first, ties by id */
    std::vector<Hit> nearest(double x, double y, std::size_t k, double radius) const;

    std::size_t size() const { return size_; }
    double cell_size() const { return cell_; }

private:
    using Key = std::int64_t;
    Key key(std::int64_t cx, std::int64_t cy) const;
    std::int64_t cell_of(double v) const;

    double cell_;
    std::size_t size_ = 0;
    std::unordered_map<Key, std::vector<Entry>> cells_;
};

} // namespace region_learner
