#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "region_learner/clustering.hpp"
#include "region_learner/map_graph.hpp"
#include "region_learner/predictor.hpp"
#include "region_learner/spatial_grid.hpp"

namespace region_learner {

enum class MemoryPolicy
{
    Region,     /* region-aware transfer/retrieval */
    Baseline,   /* spatio-temporal retrieval, least-recent transfer */
};

std::string to_string(MemoryPolicy policy);
MemoryPolicy parse_policy(const std::string& name);

struct MemoryParams
{
    std::size_t n_wm = 50;          /* WM capacity N */
    std::size_t m_stm = 10;         /* STM capacity */
    std::size_t k1 = 2;             /* LTM neighbors of the hypothesis to retrieve */
    double k2_frac = 0.25;          /* fraction of N immunized around the new node */
    double tau_loop = 0.85;         /* similarity needed to accept a loop closure */
    MemoryPolicy policy = MemoryPolicy::Region;
    double neighbor_radius = 5.0;   /* meters; spatial reach of hypothesis neighbors */
    double grid_cell = 5.0;         /* meters; LTM spatial index resolution */

    /* Throws ConfigError; names the k1 + k2 <= N constraint when violated */
    void validate() const;

    /* floor(k2_frac * N): 0.25 * 50 immunizes 12 nodes */
    std::size_t k2() const;
    /* N - k1 - k2 */
    std::size_t k3() const;
};

/* (1 + cos(a, b)) / 2 for unit vectors, clamped to [0, 1] */
double similarity(std::span<const double> a, std::span<const double> b);

struct NodeRecord
{
    NodeId id = 0;
    Pose2 pose;
    std::vector<double> feature;
    std::optional<RegionId> region;
};

struct Hypothesis
{
    NodeId node = 0;
    double score = 0.0;
};

struct UpdateEvents
{
    std::uint64_t step = 0;
    NodeId node = 0;
    std::optional<Hypothesis> hypothesis;
    bool loop_closed = false;
    std::vector<NodeId> retrieved_u1;
    std::vector<NodeId> neighbors_u2;
    std::vector<NodeId> retrieved_u3;
    std::vector<NodeId> immunized;      /* U1 and U2, sorted */
    std::vector<NodeId> transferred;    /* in transfer order */
    bool overflow = false;              /* WM left above N: only immunized nodes remained */
    std::size_t wm_size = 0;
    std::vector<RegionId> top_regions;  /* top-3 of P_t, region policy only */
};

/*
 * STM / WM / LTM state machine. New nodes enter the STM; STM overflow
 * spills the oldest node into the WM; each update retrieves LTM nodes
 * into the WM and transfers the least useful WM nodes back until the WM
 * holds at most N nodes.
 *
 * LTM is indexed by id, by position (uniform grid) and by region (ordered
 * by distance to the region centroid), so an update never scans the
 * whole LTM.
 */
class MemoryManager
{
public:
    enum class Location { Stm, Wm, Ltm };

    explicit MemoryManager(const MemoryParams& params);
    MemoryManager(const MemoryParams& params, const RegionSet& regions);

    /* Region centroids used to order retrieval within a region. Rebuilds
     * the LTM region index. */
    void set_region_centroids(std::map<RegionId, std::pair<double, double>> centroids);

    /* Appends to the STM; returns the node spilled into the WM, if any */
    std::optional<NodeId> insert_new_node(NodeRecord record);

    /* Most similar WM node to v; ties go to the lower id */
    std::optional<Hypothesis> best_hypothesis(NodeId v) const;
    /* Whether a hypothesis for v is accepted as a loop closure */
    bool accepts_loop(NodeId v, const Hypothesis& h) const;

    /* One transfer/retrieval cycle for the node v just inserted. o_t and
     * ema are ignored under the baseline policy. */
    UpdateEvents update(NodeId v, std::span<const double> o_t, EmaState& ema);

    /* Retrieves up to k3 LTM nodes, visiting regions by descending p and
     * nodes within a region by distance to its centroid */
    std::vector<NodeId> retrieve_regions(std::span<const double> p, std::size_t k3);

    /* Ends a session: the STM content joins the WM, so the next session
     * starts from the WM as it was */
    void end_session();

    /* Throws InvariantError when the stores are inconsistent */
    void check_invariants() const;

    const MemoryParams& params() const { return params_; }
    std::uint64_t step() const { return step_; }
    const std::deque<NodeId>& stm() const { return stm_; }
    std::vector<NodeId> wm_nodes() const;
    std::size_t wm_size() const { return wm_.size(); }
    std::size_t ltm_size() const { return ltm_ids_.size(); }
    bool tracked(NodeId id) const { return records_.count(id) != 0; }
    std::optional<Location> location(NodeId id) const;
    const NodeRecord& record(NodeId id) const;

private:
    struct Slot
    {
        NodeRecord record;
        Location where = Location::Stm;
    };

    void move_to_wm(NodeId id);
    void transfer_to_ltm(NodeId id);
    void retrieve_to_wm(NodeId id);
    void index_ltm(const Slot& slot);
    void unindex_ltm(const Slot& slot);
    double centroid_distance(const NodeRecord& r) const;

    std::vector<NodeId> hypothesis_neighbors(NodeId h) const;
    std::vector<NodeId> temporal_wm_neighbors(NodeId v, std::size_t k) const;
    void transfer_excess(std::span<const double> p, const std::set<NodeId>& immune,
                         UpdateEvents& events);

    MemoryParams params_;
    std::uint64_t step_ = 0;

    std::unordered_map<NodeId, Slot> records_;
    std::deque<NodeId> stm_;
    std::map<NodeId, std::uint64_t> wm_;    /* id -> step last retrieved or spilled */
    std::set<NodeId> ltm_ids_;
    SpatialGrid ltm_grid_;
    std::unordered_map<RegionId, std::set<std::pair<double, NodeId>>> ltm_by_region_;
    std::map<RegionId, std::pair<double, double>> centroids_;
};

} // namespace region_learner
