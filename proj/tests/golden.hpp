#pragma once

/* Memory-manager fixtures checked by both the unit tests and the
 * acceptance run: a hand-simulated N = 3 trace and a randomized soak. */

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "region_learner/memory.hpp"

namespace golden {

using namespace region_learner;
using Ids = std::vector<NodeId>;

struct Step
{
    std::optional<NodeId> h;
    bool loop = false;
    Ids u1, u2, u3, transferred;
    std::size_t wm = 0;
};

/*
 * Nodes 0..6 on the x axis, node 7 back next to node 1 with node 1's
 * appearance. Regions {0, 1, 7} -> 2, {2, 3} -> 1, {4, 5, 6} -> 0, the
 * predictor always says region 2. N = 3, m_stm = 1, k1 = k2 = k3 = 1.
 *
 * Step 1 is the all-immunized case: WM = {0} = U2, nothing can leave.
 * Step 5 retrieves node 2 around hypothesis 0 and U3 finds the LTM empty.
 * Step 7 closes the loop 7 -> 1; U3 visits zero-probability regions in id
 * order (region 0 before region 1), and the region-2 nodes 0 and 1 are
 * the last transfer candidates.
 */
inline const std::vector<Step>& expected()
{
    static const std::vector<Step> steps {
        { std::nullopt, false, {}, {}, {}, {}, 0 },
        { 0, false, {}, { 0 }, {}, {}, 1 },
        { 0, false, {}, { 1 }, {}, {}, 2 },
        { 0, false, {}, { 2 }, {}, {}, 3 },
        { 0, false, {}, { 3 }, {}, { 2 }, 3 },
        { 0, false, { 2 }, { 4 }, {}, { 3, 0 }, 3 },
        { 1, false, { 0 }, { 5 }, { 3 }, { 4, 2, 3 }, 3 },
        { 1, true, { 2 }, { 6 }, { 4 }, { 5, 4, 1 }, 3 },
    };
    return steps;
}

inline const Ids& expected_final_wm()
{
    static const Ids wm { 0, 2, 6 };
    return wm;
}

inline std::string ids(const Ids& v)
{
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? ", " : "") << v[i];
    os << '}';
    return os.str();
}

/* Replays the fixture; returns one line per disagreement */
inline std::vector<std::string> run_trace()
{
    MemoryParams p;
    p.n_wm = 3;
    p.m_stm = 1;
    p.k1 = 1;
    p.k2_frac = 1.0 / 3.0;
    p.tau_loop = 0.9;
    p.neighbor_radius = 1.5;
    p.grid_cell = 5.0;
    p.policy = MemoryPolicy::Region;
    MemoryManager m(p);
    m.set_region_centroids({ { 2, { 0.5, 0.0 } }, { 1, { 2.5, 0.0 } }, { 0, { 5.0, 0.0 } } });

    const RegionId region[] = { 2, 2, 1, 1, 0, 0, 0, 2 };
    EmaState ema(0.5, 3);
    const std::vector<double> o { 0.0, 0.0, 1.0 };

    std::vector<std::string> bad;
    const auto expect_eq = [&](std::size_t step, const char* what, const Ids& got, const Ids& want) {
        if (got != want)
            bad.push_back("update " + std::to_string(step) + " " + what + ": got " + ids(got) +
                          ", expected " + ids(want));
    };

    for (NodeId i = 0; i < 8; ++i) {
        std::vector<double> f(8, 0.0);
        f[i == 7 ? 1 : i] = 1.0;
        NodeRecord rec { i, Pose2 { i == 7 ? 1.0 : double(i), i == 7 ? 0.5 : 0.0, 0.0 }, f,
                         region[i] };
        m.insert_new_node(std::move(rec));
        const auto ev = m.update(i, o, ema);
        const Step& e = expected()[i];

        const std::optional<NodeId> h =
            ev.hypothesis ? std::optional<NodeId>(ev.hypothesis->node) : std::nullopt;
        if (h != e.h)
            bad.push_back("update " + std::to_string(i) + ": hypothesis differs");
        if (ev.loop_closed != e.loop)
            bad.push_back("update " + std::to_string(i) + ": loop flag differs");
        expect_eq(i, "U1", ev.retrieved_u1, e.u1);
        expect_eq(i, "U2", ev.neighbors_u2, e.u2);
        expect_eq(i, "U3", ev.retrieved_u3, e.u3);
        expect_eq(i, "transferred", ev.transferred, e.transferred);
        if (ev.wm_size != e.wm)
            bad.push_back("update " + std::to_string(i) + ": WM size " +
                          std::to_string(ev.wm_size));
        if (ev.overflow)
            bad.push_back("update " + std::to_string(i) + ": unexpected overflow");
        try {
            m.check_invariants();
        } catch (const std::exception& ex) {
            bad.push_back("update " + std::to_string(i) + ": " + ex.what());
        }
    }
    expect_eq(8, "final WM", m.wm_nodes(), expected_final_wm());
    return bad;
}

struct SoakResult
{
    std::size_t updates = 0;
    std::size_t closures = 0;
    std::size_t transfers = 0;
    std::vector<std::string> violations;
};

/* Random parameters, poses, features, regions and predictions; checks
 * after every update that no immunized node was transferred and that
 * the stores stay consistent */
inline SoakResult soak(std::size_t total, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    SoakResult res;
    const auto fail = [&](std::size_t config, NodeId node, const std::string& what) {
        if (res.violations.size() < 20)
            res.violations.push_back("config " + std::to_string(config) + " node " +
                                     std::to_string(node) + ": " + what);
        else
            res.violations.emplace_back();
    };

    for (std::size_t config = 0; res.updates < total; ++config) {
        MemoryParams p;
        p.n_wm = 2 + rng() % 20;
        p.m_stm = rng() % 6;
        p.k1 = rng() % (p.n_wm / 2 + 1);
        p.k2_frac = u01(rng) * 0.5;
        p.tau_loop = 0.7 + 0.2 * u01(rng);
        p.neighbor_radius = 1.0 + 4.0 * u01(rng);
        p.grid_cell = 0.5 + 5.0 * u01(rng);
        p.policy = config % 2 == 0 ? MemoryPolicy::Region : MemoryPolicy::Baseline;
        if (p.k1 + p.k2() > p.n_wm)
            continue;

        const std::size_t n_regions = 1 + rng() % 8;
        MemoryManager m(p);
        std::map<RegionId, std::pair<double, double>> centroids;
        for (RegionId r = 0; r < n_regions; ++r)
            centroids[r] = { 10.0 * normal(rng), 10.0 * normal(rng) };
        m.set_region_centroids(centroids);
        EmaState ema(0.3, n_regions);

        double x = 0.0, y = 0.0;
        for (NodeId i = 0; i < 500 && res.updates < total; ++i, ++res.updates) {
            x += normal(rng);
            y += normal(rng);
            std::vector<double> f(4);
            for (double& v : f)
                v = normal(rng);
            std::optional<RegionId> r;
            if (u01(rng) < 0.9)
                r = static_cast<RegionId>(rng() % n_regions);
            std::vector<double> o(n_regions);
            for (double& v : o)
                v = u01(rng);

            std::set<NodeId> ltm_before;
            for (NodeId j = 0; j < i; ++j)
                if (m.location(j) == MemoryManager::Location::Ltm)
                    ltm_before.insert(j);

            m.insert_new_node(NodeRecord { i, Pose2 { x, y, 0.0 }, l2_normalized(f), r });
            const auto ev = m.update(i, o, ema);
            res.closures += ev.loop_closed;
            res.transfers += ev.transferred.size();

            try {
                m.check_invariants();
            } catch (const std::exception& ex) {
                fail(config, i, ex.what());
            }
            if (m.wm_size() > p.n_wm || ev.overflow)
                fail(config, i, "WM above capacity");
            if (ev.retrieved_u1.size() > p.k1 || ev.neighbors_u2.size() > p.k2() ||
                ev.retrieved_u3.size() > p.k3())
                fail(config, i, "retrieval above its budget");
            if (p.policy == MemoryPolicy::Baseline && !ev.retrieved_u3.empty())
                fail(config, i, "baseline retrieved by region");
            for (const NodeId id : ev.retrieved_u1)
                if (!ltm_before.count(id))
                    fail(config, i, "U1 node " + std::to_string(id) + " was not in LTM");
            for (const NodeId id : ev.retrieved_u3)
                if (!ltm_before.count(id))
                    fail(config, i, "U3 node " + std::to_string(id) + " was not in LTM");
            std::set<NodeId> immune(ev.retrieved_u1.begin(), ev.retrieved_u1.end());
            immune.insert(ev.neighbors_u2.begin(), ev.neighbors_u2.end());
            for (const NodeId id : ev.transferred) {
                if (immune.count(id))
                    fail(config, i, "immunized node " + std::to_string(id) + " transferred");
                if (m.location(id) != MemoryManager::Location::Ltm)
                    fail(config, i, "transferred node not in LTM");
            }
            for (const NodeId id : immune)
                if (m.location(id) != MemoryManager::Location::Wm)
                    fail(config, i, "immunized node " + std::to_string(id) + " left the WM");
            if (ev.loop_closed && (!ev.hypothesis || ev.hypothesis->score < p.tau_loop ||
                                   i - ev.hypothesis->node <= p.m_stm))
                fail(config, i, "loop accepted below threshold or inside the STM gap");
        }
    }
    return res;
}

} // namespace golden
