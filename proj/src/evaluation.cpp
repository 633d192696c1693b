#include "region_learner/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "region_learner/error.hpp"
#include "region_learner/spatial_grid.hpp"

namespace region_learner {

void GtThresholds::validate() const
{
    if (!(d_max > 0.0) || !(theta_max > 0.0) || window == 0)
        throw ConfigError("gt: d_max, theta_max and window must be positive");
}

namespace {

bool poses_match(const Pose2& a, const Pose2& b, const GtThresholds& th)
{
    return planar_distance(a, b) < th.d_max && angle_diff(a, b) < th.theta_max;
}

template <typename Accept>
std::vector<FramePair> match_with(std::span<const Frame> query, std::span<const Frame> ref,
                                  const GtThresholds& th, Accept accept)
{
    SpatialGrid grid(th.d_max);
    for (std::size_t j = 0; j < ref.size(); ++j)
        grid.insert(static_cast<NodeId>(j), ref[j].pose.x, ref[j].pose.y);

    std::vector<FramePair> pairs;
    for (std::size_t i = 0; i < query.size(); ++i) {
        const Pose2& p = query[i].pose;
        for (const auto& hit : grid.nearest(p.x, p.y, ref.size(), th.d_max)) {
            const std::size_t j = hit.id;
            if (accept(i, j) && poses_match(p, ref[j].pose, th))
                pairs.emplace_back(i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

} // namespace

std::vector<FramePair> gt_matches(std::span<const Frame> query, std::span<const Frame> ref,
                                  const GtThresholds& th)
{
    th.validate();
    return match_with(query, ref, th, [](std::size_t, std::size_t) { return true; });
}

std::vector<FramePair> gt_matches_intra(std::span<const Frame> seq, const GtThresholds& th)
{
    th.validate();
    return match_with(seq, seq, th,
                      [&](std::size_t i, std::size_t j) { return i > j + th.window; });
}

std::vector<GtEvent> coalesce_events(std::span<const FramePair> pairs)
{
    std::vector<FramePair> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<std::size_t> parent(sorted.size());
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    const auto index_of = [&](std::size_t i, std::size_t j) -> std::optional<std::size_t> {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), FramePair { i, j });
        if (it == sorted.end() || *it != FramePair { i, j })
            return std::nullopt;
        return static_cast<std::size_t>(it - sorted.begin());
    };

    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const auto [i, j] = sorted[k];
        /* looking back one query row covers all 8 neighbors once */
        for (const std::size_t di : { std::size_t { 0 }, std::size_t { 1 } }) {
            if (di > i)
                continue;
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj >= 0)
                    continue;
                if (dj < 0 && j == 0)
                    continue;
                const std::size_t jj = dj < 0 ? j - 1 : j + static_cast<std::size_t>(dj);
                if (const auto other = index_of(i - di, jj))
                    parent[find(k)] = find(*other);
            }
        }
    }

    std::map<std::size_t, GtEvent> by_root;
    std::map<std::size_t, std::set<std::size_t>> refs;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const std::size_t root = find(k);
        const auto [i, j] = sorted[k];
        auto [it, inserted] = by_root.try_emplace(root, GtEvent { i, i, {} });
        it->second.query_begin = std::min(it->second.query_begin, i);
        it->second.query_end = std::max(it->second.query_end, i);
        refs[root].insert(j);
    }

    std::vector<GtEvent> events;
    for (auto& [root, e] : by_root) {
        e.refs.assign(refs[root].begin(), refs[root].end());
        events.push_back(std::move(e));
    }
    std::sort(events.begin(), events.end(), [](const GtEvent& a, const GtEvent& b) {
        if (a.query_begin != b.query_begin)
            return a.query_begin < b.query_begin;
        return a.refs.front() < b.refs.front();
    });
    return events;
}

std::vector<bool> detect_events(std::span<const UpdateEvents> log,
                                std::span<const GtEvent> events, std::span<const Frame> ref,
                                const GtThresholds& th, NodeId query_offset, NodeId ref_offset)
{
    std::vector<bool> detected(events.size(), false);
    for (std::size_t k = 0; k < events.size(); ++k) {
        const GtEvent& e = events[k];
        const std::size_t lo = e.query_begin > th.window ? e.query_begin - th.window : 0;
        const std::size_t hi = e.query_end + th.window;
        for (const UpdateEvents& rec : log) {
            if (!rec.loop_closed || !rec.hypothesis || rec.node < query_offset)
                continue;
            const std::size_t q = rec.node - query_offset;
            if (q < lo || q > hi)
                continue;
            const NodeId h = rec.hypothesis->node;
            if (h < ref_offset || h - ref_offset >= ref.size())
                continue;
            const Pose2& hp = ref[h - ref_offset].pose;
            const bool near = std::any_of(e.refs.begin(), e.refs.end(), [&](std::size_t j) {
                return planar_distance(hp, ref[j].pose) < th.d_max;
            });
            if (near) {
                detected[k] = true;
                break;
            }
        }
    }
    return detected;
}

LoopCount eval_loops(std::span<const UpdateEvents> log, std::span<const GtEvent> events,
                     std::span<const Frame> ref, const GtThresholds& th,
                     NodeId query_offset, NodeId ref_offset)
{
    const auto flags = detect_events(log, events, ref, th, query_offset, ref_offset);
    return { static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)),
             events.size() };
}

TopkResult eval_topk(std::span<const std::vector<RegionId>> ranked,
                     std::span<const std::optional<RegionId>> labels,
                     const std::optional<RegionPairing>& pairing, std::size_t k)
{
    if (ranked.size() != labels.size())
        throw DataError("eval_topk: prediction and label counts differ");

    std::map<RegionId, RegionId> test_to_train;
    if (pairing) {
        for (const auto& [train, test] : *pairing) {
            if (!test_to_train.emplace(test, train).second)
                throw DataError("region pairing is not injective (test region " +
                                std::to_string(test) + " paired twice)");
        }
    }

    TopkResult result;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) {
            ++result.excluded;
            continue;
        }
        RegionId want = *labels[i];
        if (pairing) {
            const auto it = test_to_train.find(want);
            if (it == test_to_train.end()) {
                ++result.excluded;
                continue;
            }
            want = it->second;
        }
        ++result.evaluated;
        const std::size_t n = std::min(k, ranked[i].size());
        if (std::find(ranked[i].begin(), ranked[i].begin() + static_cast<std::ptrdiff_t>(n),
                      want) != ranked[i].begin() + static_cast<std::ptrdiff_t>(n))
            ++hits;
    }
    if (result.evaluated > 0)
        result.fraction = static_cast<double>(hits) / static_cast<double>(result.evaluated);
    return result;
}

LatencyStats latency_stats(std::span<const double> micros, std::size_t tail)
{
    LatencyStats s;
    s.samples = micros.size();
    if (micros.empty())
        return s;

    std::vector<double> sorted(micros.begin(), micros.end());
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
        return sorted[idx];
    };
    s.mean_us = std::accumulate(micros.begin(), micros.end(), 0.0) /
                static_cast<double>(micros.size());
    s.p50_us = quantile(0.5);
    s.p95_us = quantile(0.95);
    s.max_us = sorted.back();

    const std::size_t n = std::min(tail, micros.size());
    s.tail_mean_us = std::accumulate(micros.end() - static_cast<std::ptrdiff_t>(n),
                                     micros.end(), 0.0) /
                     static_cast<double>(n);
    return s;
}

} // namespace region_learner
