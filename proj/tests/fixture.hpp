#pragma once

/* The synthetic grid used by the pipeline tests and the acceptance run:
 * 1300 frames, 5 planted large loops, 32 appearance regions. */

#include <optional>
#include <vector>

#include "region_learner/evaluation.hpp"
#include "region_learner/pipeline.hpp"
#include "region_learner/sequence.hpp"

namespace fixture {

using namespace region_learner;

inline SyntheticSpec grid_spec()
{
    SyntheticSpec s;
    s.layout = Layout::Grid;
    s.n_frames = 1300;
    s.n_regions = 32;
    s.noise_sigma = 0.05;
    s.seed = 1;
    s.dim = 64;
    s.place_weight = 1.25;
    return s;
}

inline ClusteringParams grid_clustering()
{
    ClusteringParams p;
    p.s_max = 30.0;
    return p;
}

struct World
{
    SyntheticSpec spec;
    std::vector<Frame> frames;
    Exploration explored;
    RegionLabeler labeler;
};

inline World explore(const SyntheticSpec& spec, const ClusteringParams& params)
{
    auto frames = gen_synthetic(spec);
    auto ex = run_exploration(frames, params);
    RegionLabeler labeler(ex.graph, ex.regions, 3.0);
    return World { spec, std::move(frames), std::move(ex), std::move(labeler) };
}

struct Session
{
    const std::vector<Frame>* frames;
    RegionPredictor* predictor;
};

/* Replays sessions back to back through one memory manager and returns
 * the events of the last one */
inline NavigationResult navigate(const World& w, std::vector<Session> sessions,
                                 MemoryPolicy policy, bool timing = false)
{
    NavigationParams np;
    np.memory.policy = policy;
    np.record_latency = timing;
    MemoryManager memory(np.memory, w.explored.regions);
    EmaState ema(np.ema_alpha, w.labeler.n_regions());
    NodeId first = 0;
    NavigationResult last;
    for (std::size_t k = 0; k < sessions.size(); ++k) {
        if (k > 0)
            memory.end_session();
        last = run_navigation(*sessions[k].frames, *sessions[k].predictor, w.labeler, memory,
                              ema, np, first);
        first += static_cast<NodeId>(sessions[k].frames->size());
    }
    return last;
}

inline OraclePredictor oracle_for(const World& w, const std::vector<Frame>& frames)
{
    return OraclePredictor(label_frames(frames, w.labeler), w.labeler.n_regions());
}

inline OraclePredictor silent(const World& w)
{
    return OraclePredictor({}, w.labeler.n_regions());
}

inline LoopCount count_loops(const World& w, const NavigationResult& nav)
{
    const GtThresholds th;
    const auto events = coalesce_events(gt_matches_intra(w.frames, th));
    return eval_loops(nav.events, events, w.frames, th);
}

} // namespace fixture
