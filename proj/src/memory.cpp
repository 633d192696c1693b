#include "region_learner/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "region_learner/error.hpp"

namespace region_learner {

std::string to_string(MemoryPolicy policy)
{
    return policy == MemoryPolicy::Region ? "region" : "baseline";
}

MemoryPolicy parse_policy(const std::string& name)
{
    if (name == "region")
        return MemoryPolicy::Region;
    if (name == "baseline")
        return MemoryPolicy::Baseline;
    throw ConfigError("unknown memory policy '" + name + "' (expected region|baseline)");
}

void MemoryParams::validate() const
{
    if (n_wm == 0)
        throw ConfigError("memory: n_wm must be positive");
    if (!(k2_frac >= 0.0 && k2_frac <= 1.0))
        throw ConfigError("memory: k2_frac must be in [0, 1]");
    if (k1 + k2() > n_wm)
        throw ConfigError("memory: constraint k1 + k2 <= N violated (k1=" +
                          std::to_string(k1) + ", k2=" + std::to_string(k2()) +
                          ", N=" + std::to_string(n_wm) + ")");
    if (!(tau_loop >= 0.0 && tau_loop <= 1.0))
        throw ConfigError("memory: tau_loop must be in [0, 1]");
    if (!(neighbor_radius >= 0.0))
        throw ConfigError("memory: neighbor_radius must be >= 0");
    if (!(grid_cell > 0.0))
        throw ConfigError("memory: grid_cell must be > 0");
}

std::size_t MemoryParams::k2() const
{
    /* the epsilon keeps exact products such as (1/3) * 3 from flooring down */
    return static_cast<std::size_t>(std::floor(k2_frac * static_cast<double>(n_wm) + 1e-9));
}

std::size_t MemoryParams::k3() const
{
    const std::size_t used = k1 + k2();
    return used >= n_wm ? 0 : n_wm - used;
}

double similarity(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw DataError("similarity: dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        dot += a[i] * b[i];
    return std::clamp((1.0 + dot) * 0.5, 0.0, 1.0);
}

MemoryManager::MemoryManager(const MemoryParams& params) :
    params_(params), ltm_grid_(params.grid_cell)
{
    params_.validate();
}

MemoryManager::MemoryManager(const MemoryParams& params, const RegionSet& regions) :
    MemoryManager(params)
{
    std::map<RegionId, std::pair<double, double>> centroids;
    for (const auto& [id, c] : regions.clusters())
        centroids[id] = { c.cx, c.cy };
    set_region_centroids(std::move(centroids));
}

void MemoryManager::set_region_centroids(
    std::map<RegionId, std::pair<double, double>> centroids)
{
    centroids_ = std::move(centroids);
    ltm_by_region_.clear();
    for (const NodeId id : ltm_ids_) {
        const Slot& slot = records_.at(id);
        if (slot.record.region)
            ltm_by_region_[*slot.record.region].emplace(centroid_distance(slot.record), id);
    }
}

double MemoryManager::centroid_distance(const NodeRecord& r) const
{
    if (!r.region)
        return 0.0;
    const auto it = centroids_.find(*r.region);
    if (it == centroids_.end())
        return 0.0;
    return std::hypot(r.pose.x - it->second.first, r.pose.y - it->second.second);
}

std::optional<MemoryManager::Location> MemoryManager::location(NodeId id) const
{
    const auto it = records_.find(id);
    if (it == records_.end())
        return std::nullopt;
    return it->second.where;
}

const NodeRecord& MemoryManager::record(NodeId id) const
{
    const auto it = records_.find(id);
    if (it == records_.end())
        throw DataError("memory: unknown node " + std::to_string(id));
    return it->second.record;
}

std::vector<NodeId> MemoryManager::wm_nodes() const
{
    std::vector<NodeId> ids;
    ids.reserve(wm_.size());
    for (const auto& [id, touched] : wm_)
        ids.push_back(id);
    return ids;
}

void MemoryManager::index_ltm(const Slot& slot)
{
    const NodeRecord& r = slot.record;
    ltm_ids_.insert(r.id);
    ltm_grid_.insert(r.id, r.pose.x, r.pose.y);
    if (r.region)
        ltm_by_region_[*r.region].emplace(centroid_distance(r), r.id);
}

void MemoryManager::unindex_ltm(const Slot& slot)
{
    const NodeRecord& r = slot.record;
    ltm_ids_.erase(r.id);
    ltm_grid_.erase(r.id, r.pose.x, r.pose.y);
    if (r.region) {
        const auto it = ltm_by_region_.find(*r.region);
        if (it != ltm_by_region_.end()) {
            it->second.erase({ centroid_distance(r), r.id });
            if (it->second.empty())
                ltm_by_region_.erase(it);
        }
    }
}

void MemoryManager::move_to_wm(NodeId id)
{
    records_.at(id).where = Location::Wm;
    wm_[id] = step_;
}

void MemoryManager::transfer_to_ltm(NodeId id)
{
    Slot& slot = records_.at(id);
    wm_.erase(id);
    slot.where = Location::Ltm;
    index_ltm(slot);
}

void MemoryManager::retrieve_to_wm(NodeId id)
{
    Slot& slot = records_.at(id);
    unindex_ltm(slot);
    move_to_wm(id);
}

std::optional<NodeId> MemoryManager::insert_new_node(NodeRecord record)
{
    if (records_.count(record.id) != 0)
        throw DataError("memory: duplicate node id " + std::to_string(record.id));

    const NodeId id = record.id;
    records_.emplace(id, Slot { std::move(record), Location::Stm });
    stm_.push_back(id);

    if (stm_.size() <= params_.m_stm)
        return std::nullopt;

    const NodeId oldest = stm_.front();
    stm_.pop_front();
    move_to_wm(oldest);
    return oldest;
}

std::optional<Hypothesis> MemoryManager::best_hypothesis(NodeId v) const
{
    const auto& feature = record(v).feature;
    std::optional<Hypothesis> best;
    for (const auto& [id, touched] : wm_) {
        if (id == v)
            continue;
        const double s = similarity(feature, records_.at(id).record.feature);
        if (!best || s > best->score)
            best = Hypothesis { id, s };
    }
    return best;
}

bool MemoryManager::accepts_loop(NodeId v, const Hypothesis& h) const
{
    const NodeId gap = v > h.node ? v - h.node : h.node - v;
    return h.score >= params_.tau_loop && gap > params_.m_stm;
}

std::vector<NodeId> MemoryManager::hypothesis_neighbors(NodeId h) const
{
    if (params_.k1 == 0 || ltm_ids_.empty())
        return {};

    /* Candidates are ranked separately by id distance and by planar
     * distance; nodes outside either top-M list get rank M in it. The k1
     * lowest rank sums win, ties by id. */
    const std::size_t pool = std::max<std::size_t>(8, 4 * params_.k1);
    std::map<NodeId, std::pair<std::size_t, std::size_t>> ranks;

    auto up = ltm_ids_.lower_bound(h);
    auto down = up;
    for (std::size_t rank = 0; rank < pool; ++rank) {
        const bool has_down = down != ltm_ids_.begin();
        const bool has_up = up != ltm_ids_.end();
        if (!has_down && !has_up)
            break;
        NodeId pick = 0;
        if (has_down && (!has_up || h - *std::prev(down) <= *up - h)) {
            pick = *--down;
        } else {
            pick = *up++;
        }
        ranks[pick] = { rank, pool };
    }

    const Pose2& pose = record(h).pose;
    const auto hits = ltm_grid_.nearest(pose.x, pose.y, pool, params_.neighbor_radius);
    for (std::size_t rank = 0; rank < hits.size(); ++rank) {
        auto [it, inserted] = ranks.try_emplace(hits[rank].id, pool, pool);
        it->second.second = rank;
    }

    std::vector<std::pair<std::size_t, NodeId>> scored;
    scored.reserve(ranks.size());
    for (const auto& [id, r] : ranks)
        scored.emplace_back(r.first + r.second, id);

    const std::size_t n = std::min(params_.k1, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                      scored.end());

    std::vector<NodeId> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(scored[i].second);
    return out;
}

std::vector<NodeId> MemoryManager::temporal_wm_neighbors(NodeId v, std::size_t k) const
{
    std::vector<NodeId> out;
    auto up = wm_.upper_bound(v);
    auto down = wm_.lower_bound(v);
    while (out.size() < k) {
        const bool has_down = down != wm_.begin();
        const bool has_up = up != wm_.end();
        if (!has_down && !has_up)
            break;
        if (has_down && (!has_up || v - std::prev(down)->first <= up->first - v)) {
            --down;
            out.push_back(down->first);
        } else {
            out.push_back(up->first);
            ++up;
        }
    }
    return out;
}

std::vector<NodeId> MemoryManager::retrieve_regions(std::span<const double> p,
                                                    std::size_t k3)
{
    std::vector<NodeId> picked;
    if (k3 == 0 || ltm_by_region_.empty())
        return picked;

    const auto prob = [&](RegionId r) { return r < p.size() ? p[r] : 0.0; };

    /* Lazy descending order: heap construction is linear in the region
     * count and only the visited regions pay the log factor */
    std::vector<RegionId> heap;
    heap.reserve(ltm_by_region_.size());
    for (const auto& [region, nodes] : ltm_by_region_)
        heap.push_back(region);
    const auto lower_priority = [&](RegionId a, RegionId b) {
        if (prob(a) != prob(b))
            return prob(a) < prob(b);
        return a > b;
    };
    std::make_heap(heap.begin(), heap.end(), lower_priority);

    while (picked.size() < k3 && !heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), lower_priority);
        const RegionId region = heap.back();
        heap.pop_back();
        for (const auto& [dist, id] : ltm_by_region_.at(region)) {
            if (picked.size() == k3)
                break;
            picked.push_back(id);
        }
    }

    for (const NodeId id : picked)
        retrieve_to_wm(id);
    return picked;
}

void MemoryManager::transfer_excess(std::span<const double> p,
                                    const std::set<NodeId>& immune,
                                    UpdateEvents& events)
{
    if (wm_.size() <= params_.n_wm)
        return;

    const bool by_region = params_.policy == MemoryPolicy::Region;
    struct Candidate
    {
        double prob;
        std::uint64_t touched;
        NodeId id;
    };

    std::vector<Candidate> order;
    order.reserve(wm_.size());
    for (const auto& [id, touched] : wm_) {
        double prob = 0.0;
        if (by_region) {
            const auto& region = records_.at(id).record.region;
            if (region && *region < p.size())
                prob = p[*region];
        }
        order.push_back({ prob, touched, id });
    }
    std::sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) {
        if (a.prob != b.prob)
            return a.prob < b.prob;
        if (a.touched != b.touched)
            return a.touched < b.touched;
        return a.id < b.id;
    });

    for (const Candidate& c : order) {
        if (wm_.size() <= params_.n_wm)
            break;
        if (immune.count(c.id) != 0)
            continue;
        transfer_to_ltm(c.id);
        events.transferred.push_back(c.id);
    }
    events.overflow = wm_.size() > params_.n_wm;
}

UpdateEvents MemoryManager::update(NodeId v, std::span<const double> o_t, EmaState& ema)
{
    const auto where = location(v);
    if (!where)
        throw DataError("memory: update for unknown node " + std::to_string(v));
    if (*where == Location::Ltm)
        throw DataError("memory: update for node " + std::to_string(v) + " held in LTM");

    ++step_;
    UpdateEvents events;
    events.step = step_;
    events.node = v;

    events.hypothesis = best_hypothesis(v);
    if (events.hypothesis)
        events.loop_closed = accepts_loop(v, *events.hypothesis);

    std::set<NodeId> immune;
    if (events.hypothesis) {
        events.retrieved_u1 = hypothesis_neighbors(events.hypothesis->node);
        for (const NodeId id : events.retrieved_u1) {
            retrieve_to_wm(id);
            immune.insert(id);
        }
    }

    events.neighbors_u2 = temporal_wm_neighbors(v, params_.k2());
    immune.insert(events.neighbors_u2.begin(), events.neighbors_u2.end());
    events.immunized.assign(immune.begin(), immune.end());

    std::span<const double> p;
    if (params_.policy == MemoryPolicy::Region) {
        ema.grow(o_t.size());
        p = ema.update(o_t);
        events.retrieved_u3 = retrieve_regions(p, params_.k3());
        events.top_regions = top_k(p, 3);
    }

    transfer_excess(p, immune, events);
    events.wm_size = wm_.size();
    return events;
}

void MemoryManager::end_session()
{
    while (!stm_.empty()) {
        move_to_wm(stm_.front());
        stm_.pop_front();
    }
}

void MemoryManager::check_invariants() const
{
    if (stm_.size() > params_.m_stm)
        throw InvariantError("memory: STM above capacity");
    if (stm_.size() + wm_.size() + ltm_ids_.size() != records_.size())
        throw InvariantError("memory: STM/WM/LTM do not partition the tracked nodes");

    for (const NodeId id : stm_)
        if (records_.at(id).where != Location::Stm)
            throw InvariantError("memory: STM node tagged elsewhere");
    for (const auto& [id, touched] : wm_)
        if (records_.at(id).where != Location::Wm)
            throw InvariantError("memory: WM node tagged elsewhere");

    std::size_t labeled = 0;
    for (const NodeId id : ltm_ids_) {
        const Slot& slot = records_.at(id);
        if (slot.where != Location::Ltm)
            throw InvariantError("memory: LTM node tagged elsewhere");
        if (slot.record.region) {
            ++labeled;
            const auto it = ltm_by_region_.find(*slot.record.region);
            if (it == ltm_by_region_.end() ||
                it->second.count({ centroid_distance(slot.record), id }) == 0)
                throw InvariantError("memory: LTM region index out of sync");
        }
    }
    std::size_t indexed = 0;
    for (const auto& [region, nodes] : ltm_by_region_)
        indexed += nodes.size();
    if (indexed != labeled || ltm_grid_.size() != ltm_ids_.size())
        throw InvariantError("memory: LTM indexes out of sync");
}

} // namespace region_learner
