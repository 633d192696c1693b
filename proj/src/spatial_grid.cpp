#include "region_learner/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

#include "region_learner/error.hpp"

namespace region_learner {

SpatialGrid::SpatialGrid(double cell_size) : cell_(cell_size)
{
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw ConfigError("spatial grid cell size must be positive");
}

std::int64_t SpatialGrid::cell_of(double v) const
{
    return static_cast<std::int64_t>(std::floor(v / cell_));
}

SpatialGrid::Key SpatialGrid::key(std::int64_t cx, std::int64_t cy) const
{
    /* 32 bits per axis is far beyond any map extent in cells */
    return (cx << 32) ^ (cy & 0xffffffffLL);
}

void SpatialGrid::insert(NodeId id, double x, double y)
{
    cells_[key(cell_of(x), cell_of(y))].push_back({ id, x, y });
    ++size_;
}

bool SpatialGrid::erase(NodeId id, double x, double y)
{
    const auto it = cells_.find(key(cell_of(x), cell_of(y)));
    if (it == cells_.end())
        return false;

    auto& bucket = it->second;
    const auto pos = std::find_if(bucket.begin(), bucket.end(),
                                  [id](const Entry& e) { return e.id == id; });
    if (pos == bucket.end())
        return false;

    *pos = bucket.back();
    bucket.pop_back();
    if (bucket.empty())
        cells_.erase(it);
    --size_;
    return true;
}

std::vector<SpatialGrid::Hit> SpatialGrid::nearest(double x, double y,
                                                   std::size_t k,
                                                   double radius) const
{
    std::vector<Hit> hits;
    if (k == 0 || radius < 0.0)
        return hits;

    const std::int64_t x0 = cell_of(x - radius);
    const std::int64_t x1 = cell_of(x + radius);
    const std::int64_t y0 = cell_of(y - radius);
    const std::int64_t y1 = cell_of(y + radius);

    for (std::int64_t cx = x0; cx <= x1; ++cx) {
        for (std::int64_t cy = y0; cy <= y1; ++cy) {
            const auto it = cells_.find(key(cx, cy));
            if (it == cells_.end())
                continue;
            for (const Entry& e : it->second) {
                const double d = std::hypot(e.x - x, e.y - y);
                if (d <= radius)
                    hits.push_back({ e.id, d });
            }
        }
    }

    const auto by_distance = [](const Hit& a, const Hit& b) {
        if (a.distance != b.distance)
            return a.distance < b.distance;
        return a.id < b.id;
    };
    const std::size_t n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n),
                      hits.end(), by_distance);
    hits.resize(n);
    return hits;
}

} // namespace region_learner
