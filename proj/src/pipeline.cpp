#include "region_learner/pipeline.hpp"

#include <chrono>

#include "region_learner/error.hpp"

namespace region_learner {

Exploration run_exploration(std::span<const Frame> frames, const ClusteringParams& params,
                            const LinkParams& links)
{
    params.validate();
    if (frames.empty())
        throw DataError("exploration: no frames");

    Exploration ex;
    SpatialGrid seen(std::max(links.distance, 1.0));

    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if (f.feature.empty())
            throw DataError("exploration: frame " + std::to_string(f.frame_id) +
                            " has no feature vector");
        const NodeId id = ex.graph.add_node(f.pose, f.t, f.feature);

        for (const auto& hit : seen.nearest(f.pose.x, f.pose.y, 16, links.distance)) {
            if (id - hit.id <= links.min_gap)
                continue;
            if (angle_diff(f.pose, ex.graph.node(hit.id).pose) >= links.angle)
                continue;
            ex.graph.add_loop_edge(id, hit.id);
            break;
        }
        seen.insert(id, f.pose.x, f.pose.y);

        ex.regions.on_new_node(ex.graph, id, params);
    }

    ex.dataset.reserve(frames.size());
    for (const Node& n : ex.graph.nodes()) {
        const auto r = ex.regions.region_of(n.id);
        if (!r)
            throw InvariantError("exploration: node " + std::to_string(n.id) + " left unassigned");
        ex.dataset.push_back({ n.feature, *r });
    }
    return ex;
}

RegionLabeler::RegionLabeler(const MapGraph& graph, const RegionSet& regions, double radius) :
    grid_(std::max(radius, 1e-3)), radius_(radius), n_regions_(regions.id_capacity())
{
    for (const Node& n : graph.nodes()) {
        grid_.insert(n.id, n.pose.x, n.pose.y);
        region_of_.push_back(regions.region_of(n.id));
    }
}

RegionLabeler::RegionLabeler(std::span<const ClusterDumpRow> rows, double radius) :
    grid_(std::max(radius, 1e-3)), radius_(radius)
{
    for (const auto& row : rows) {
        grid_.insert(row.node, row.x, row.y);
        if (row.node >= region_of_.size())
            region_of_.resize(row.node + 1);
        region_of_[row.node] = row.region;
        n_regions_ = std::max<std::size_t>(n_regions_, row.region + 1);
    }
}

std::optional<RegionId> RegionLabeler::label(const Pose2& pose) const
{
    const auto hits = grid_.nearest(pose.x, pose.y, 1, radius_);
    if (hits.empty())
        return std::nullopt;
    return region_of_[hits.front().id];
}

std::vector<double> MlpPredictor::predict(const Frame& frame, std::size_t)
{
    return forward(model_, frame.feature);
}

OraclePredictor::OraclePredictor(std::vector<std::optional<RegionId>> labels,
                                 std::size_t n_regions) :
    labels_(std::move(labels)), n_regions_(n_regions)
{
    for (const auto& l : labels_)
        if (l && *l >= n_regions_)
            throw DataError("oracle: label " + std::to_string(*l) + " out of range");
}

std::vector<double> OraclePredictor::predict(const Frame&, std::size_t index)
{
    std::vector<double> o(n_regions_, 0.0);
    if (index < labels_.size() && labels_[index])
        o[*labels_[index]] = 1.0;
    return o;
}

std::vector<std::optional<RegionId>> label_frames(std::span<const Frame> frames,
                                                  const RegionLabeler& labeler)
{
    std::vector<std::optional<RegionId>> labels;
    labels.reserve(frames.size());
    for (const Frame& f : frames)
        labels.push_back(labeler.label(f.pose));
    return labels;
}

NavigationResult run_navigation(std::span<const Frame> frames, RegionPredictor& predictor,
                                const RegionLabeler& labeler, MemoryManager& memory,
                                EmaState& ema, const NavigationParams& params,
                                NodeId first_id)
{
    if (predictor.n_regions() != labeler.n_regions())
        throw DataError("navigation: predictor has " + std::to_string(predictor.n_regions()) +
                        " regions, the map has " + std::to_string(labeler.n_regions()));

    NavigationResult out;
    out.events.reserve(frames.size());
    out.ranked.reserve(frames.size());
    out.labels = label_frames(frames, labeler);

    using clock = std::chrono::steady_clock;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if (f.feature.empty())
            throw DataError("navigation: frame " + std::to_string(f.frame_id) +
                            " has no feature vector");
        const NodeId id = first_id + static_cast<NodeId>(i);
        memory.insert_new_node({ id, f.pose, f.feature, out.labels[i] });

        const auto o = predictor.predict(f, i);
        out.ranked.push_back(top_k(o, 3));

        const auto t0 = clock::now();
        out.events.push_back(memory.update(id, o, ema));
        const auto t1 = clock::now();
        if (params.record_latency)
            out.latency_us.push_back(
                std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    return out;
}

} // namespace region_learner
