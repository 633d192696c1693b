#pragma once

#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "region_learner/clustering.hpp"
#include "region_learner/map_graph.hpp"
#include "region_learner/memory.hpp"
#include "region_learner/predictor.hpp"
#include "region_learner/sequence.hpp"
#include "region_learner/spatial_grid.hpp"

namespace region_learner {

/* Loop edges added while exploring: a new node is linked to the nearest
 * earlier node that is close in pose but far back in time */
struct LinkParams
{
    double distance = 1.0;                      /* meters, inclusive */
    double angle = std::numbers::pi / 4;        /* radians, strict */
    std::size_t min_gap = 20;                   /* frames, strict */
};

struct Exploration
{
    MapGraph graph;
    RegionSet regions;
    /* One (feature, region) pair per frame, labeled with the final partition */
    std::vector<LabeledExample> dataset;
};

Exploration run_exploration(std::span<const Frame> frames, const ClusteringParams& params,
                            const LinkParams& links = {});

/* Region of the nearest explored node within radius */
class RegionLabeler
{
public:
    RegionLabeler(const MapGraph& graph, const RegionSet& regions, double radius);
    RegionLabeler(std::span<const ClusterDumpRow> rows, double radius);

    std::optional<RegionId> label(const Pose2& pose) const;
    std::size_t n_regions() const { return n_regions_; }

private:
    SpatialGrid grid_;
    std::vector<std::optional<RegionId>> region_of_;
    double radius_;
    std::size_t n_regions_ = 0;
};

class RegionPredictor
{
public:
    virtual ~RegionPredictor() = default;
    virtual std::size_t n_regions() const = 0;
    /* Confidences for the frame at `index` of the sequence being replayed */
    virtual std::vector<double> predict(const Frame& frame, std::size_t index) = 0;
};

class MlpPredictor : public RegionPredictor
{
public:
    explicit MlpPredictor(PredictorModel model) : model_(std::move(model)) { }
    std::size_t n_regions() const override { return model_.n_regions(); }
    std::vector<double> predict(const Frame& frame, std::size_t index) override;

private:
    PredictorModel model_;
};

/* Emits 1 for the labeled region of each frame and 0 elsewhere; all
 * zeros for unlabeled frames */
class OraclePredictor : public RegionPredictor
{
public:
    OraclePredictor(std::vector<std::optional<RegionId>> labels, std::size_t n_regions);
    std::size_t n_regions() const override { return n_regions_; }
    std::vector<double> predict(const Frame& frame, std::size_t index) override;

private:
    std::vector<std::optional<RegionId>> labels_;
    std::size_t n_regions_;
};

std::vector<std::optional<RegionId>> label_frames(std::span<const Frame> frames,
                                                  const RegionLabeler& labeler);

struct NavigationParams
{
    MemoryParams memory;
    double ema_alpha = 0.5;
    bool record_latency = false;
};

struct NavigationResult
{
    std::vector<UpdateEvents> events;
    std::vector<std::vector<RegionId>> ranked;      /* top-3 of each raw prediction */
    std::vector<std::optional<RegionId>> labels;    /* labeler region of each frame */
    std::vector<double> latency_us;                 /* update cost per frame, if recorded */
};

/*
 * Replays frames against a memory manager: each frame becomes node
 * first_id + index, is inserted, predicted and followed by one memory
 * update. Passing the same manager and EMA state to consecutive calls
 * continues a previous session.
 */
NavigationResult run_navigation(std::span<const Frame> frames, RegionPredictor& predictor,
                                const RegionLabeler& labeler, MemoryManager& memory,
                                EmaState& ema, const NavigationParams& params,
                                NodeId first_id = 0);

} // namespace region_learner
