#pragma once

#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "region_learner/memory.hpp"
#include "region_learner/sequence.hpp"

namespace region_learner {

struct GtThresholds
{
    double d_max = 3.0;                       /* meters */
    double theta_max = std::numbers::pi / 4;  /* radians */
    std::size_t window = 20;                  /* frames */

    void validate() const;
};

/* (index in query sequence, index in reference sequence) */
using FramePair = std::pair<std::size_t, std::size_t>;

/* Pose matches between two sequences: planar distance < d_max and heading
 * difference < theta_max, both strict. Sorted. */
std::vector<FramePair> gt_matches(std::span<const Frame> query,
                                  std::span<const Frame> ref,
                                  const GtThresholds& th);

/* Matches of a sequence with its own past: pairs (i, j) with i - j > window */
std::vector<FramePair> gt_matches_intra(std::span<const Frame> seq,
                                        const GtThresholds& th);

/* A revisit: a run of query frames matching a set of reference frames */
struct GtEvent
{
    std::size_t query_begin = 0;
    std::size_t query_end = 0;          /* inclusive */
    std::vector<std::size_t> refs;      /* sorted */
};

/* Groups matched pairs into events: two pairs belong to the same event
 * when they are adjacent in both sequences (8-neighborhood) */
std::vector<GtEvent> coalesce_events(std::span<const FramePair> pairs);

struct LoopCount
{
    std::size_t detected = 0;
    std::size_t total = 0;
};

/*
 * Counts the ground-truth events credited by a closure in the log. Node
 * ids in the log are frame indices shifted by query_offset (query) and
 * ref_offset (reference). A closure credits an event when its node falls
 * within `window` frames of the event span and its hypothesis lies within
 * d_max of one of the event's reference poses.
 */
LoopCount eval_loops(std::span<const UpdateEvents> log, std::span<const GtEvent> events,
                     std::span<const Frame> ref, const GtThresholds& th,
                     NodeId query_offset = 0, NodeId ref_offset = 0);

/* Per-event detection flags behind eval_loops */
std::vector<bool> detect_events(std::span<const UpdateEvents> log,
                                std::span<const GtEvent> events, std::span<const Frame> ref,
                                const GtThresholds& th, NodeId query_offset = 0,
                                NodeId ref_offset = 0);

/* Training-sequence region id -> test-sequence region id */
using RegionPairing = std::map<RegionId, RegionId>;

struct TopkResult
{
    double fraction = 0.0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;   /* frames without a label or without a paired region */
};

/* Fraction of labeled frames whose (paired) label is among the first k
 * predicted regions. No pairing means ids are shared. */
TopkResult eval_topk(std::span<const std::vector<RegionId>> ranked,
                     std::span<const std::optional<RegionId>> labels,
                     const std::optional<RegionPairing>& pairing, std::size_t k);

struct LatencyStats
{
    std::size_t samples = 0;
    double mean_us = 0.0;
    double p50_us = 0.0;
    double p95_us = 0.0;
    double max_us = 0.0;
    double tail_mean_us = 0.0;  /* mean over the last 200 samples */
};

LatencyStats latency_stats(std::span<const double> micros, std::size_t tail = 200);

struct RunReport
{
    double top1 = 0.0;
    double top3 = 0.0;
    std::size_t topk_evaluated = 0;
    std::size_t topk_excluded = 0;
    std::size_t loops_total = 0;
    std::size_t loops_detected = 0;
    std::size_t reloc_total = 0;
    std::size_t reloc_performed = 0;
    std::optional<LatencyStats> latency;
};

} // namespace region_learner
