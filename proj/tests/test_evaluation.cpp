#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "region_learner/error.hpp"
#include "region_learner/evaluation.hpp"

using namespace region_learner;

namespace {

Frame at(double x, double y, double yaw = 0.0)
{
    Frame f;
    f.pose = Pose2 { x, y, yaw };
    f.feature = { 1.0 };
    return f;
}

UpdateEvents closure(NodeId node, NodeId hyp, bool closed = true)
{
    UpdateEvents e;
    e.node = node;
    e.hypothesis = Hypothesis { hyp, 0.95 };
    e.loop_closed = closed;
    return e;
}

/* All pairs, no acceleration */
std::vector<FramePair> brute_matches(const std::vector<Frame>& q, const std::vector<Frame>& r,
                                     const GtThresholds& th)
{
    std::vector<FramePair> out;
    for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double d = std::hypot(q[i].pose.x - r[j].pose.x, q[i].pose.y - r[j].pose.y);
            double a = std::fmod(std::abs(q[i].pose.yaw - r[j].pose.yaw), 2 * std::numbers::pi);
            a = std::min(a, 2 * std::numbers::pi - a);
            if (d < th.d_max && a < th.theta_max)
                out.emplace_back(i, j);
        }
    return out;
}

} // namespace

TEST_CASE("pose matching rules")
{
    GtThresholds th;
    const std::vector<Frame> a { at(0, 0) };

    CHECK(gt_matches(a, std::vector<Frame> { at(0, 0) }, th).size() == 1);
    CHECK(gt_matches(a, std::vector<Frame> { at(3.0, 0) }, th).empty());
    CHECK(gt_matches(a, std::vector<Frame> { at(2.999, 0) }, th).size() == 1);
    CHECK(gt_matches(a, std::vector<Frame> { at(0, 0, std::numbers::pi / 2) }, th).empty());
    CHECK(gt_matches(a, std::vector<Frame> { at(0, 0, 0.7) }, th).size() == 1);
    CHECK(gt_matches(a, std::vector<Frame> { at(0, 0, 2 * std::numbers::pi - 0.1) }, th).size() == 1);

    /* intra matches need to be far apart in time */
    std::vector<Frame> seq;
    for (int i = 0; i < 30; ++i)
        seq.push_back(at(0, 0));
    const auto intra = gt_matches_intra(seq, th);
    for (const auto& [i, j] : intra)
        CHECK(i > j + th.window);
    CHECK(intra.size() == 9 * 10 / 2);

    th.window = 0;
    CHECK_THROWS_AS(th.validate(), ConfigError);
}

TEST_CASE("grid search agrees with brute force and is symmetric")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pos(0.0, 30.0), yaw(-3.14, 3.14);
    std::vector<Frame> q, r;
    for (int i = 0; i < 300; ++i)
        q.push_back(at(pos(rng), pos(rng), yaw(rng)));
    for (int i = 0; i < 250; ++i)
        r.push_back(at(pos(rng), pos(rng), yaw(rng)));
    const GtThresholds th;

    const auto fast = gt_matches(q, r, th);
    CHECK(fast == brute_matches(q, r, th));
    CHECK_FALSE(fast.empty());

    auto swapped = gt_matches(r, q, th);
    for (auto& [i, j] : swapped)
        std::swap(i, j);
    std::sort(swapped.begin(), swapped.end());
    CHECK(swapped == fast);
}

TEST_CASE("hand-built 10-frame loop is one event")
{
    /* 8 frames around a circle of circumference 8, then two more frames
     * repeating the first two poses */
    const double r = 8.0 / (2 * std::numbers::pi);
    std::vector<Frame> seq;
    for (int i = 0; i < 10; ++i) {
        const double th = 2 * std::numbers::pi * (i % 8) / 8.0;
        seq.push_back(at(r * std::sin(th), r * (1 - std::cos(th)), th));
    }
    GtThresholds th;
    th.d_max = 0.5;
    th.window = 5;
    const auto pairs = gt_matches_intra(seq, th);
    CHECK(pairs == std::vector<FramePair> { { 8, 0 }, { 9, 1 } });
    const auto events = coalesce_events(pairs);
    REQUIRE(events.size() == 1);
    CHECK(events[0].query_begin == 8);
    CHECK(events[0].query_end == 9);
    CHECK(events[0].refs == std::vector<std::size_t> { 0, 1 });
}

TEST_CASE("coalescing uses 8-neighborhoods")
{
    const std::vector<FramePair> pairs { { 10, 0 }, { 11, 1 }, { 12, 1 }, { 40, 5 }, { 42, 5 } };
    const auto events = coalesce_events(pairs);
    REQUIRE(events.size() == 3);
    CHECK(events[0].query_begin == 10);
    CHECK(events[0].query_end == 12);
    CHECK(events[1].query_begin == 40);
    CHECK(events[2].query_begin == 42);
    CHECK(coalesce_events(std::vector<FramePair> {}).empty());
}

TEST_CASE("eval_loops")
{
    std::vector<Frame> ref;
    for (int i = 0; i < 100; ++i)
        ref.push_back(at(i, 0));
    const std::vector<GtEvent> events { { 30, 32, { 0, 1 } }, { 60, 61, { 10 } } };
    const GtThresholds th;

    SUBCASE("closures inside both windows")
    {
        const std::vector<UpdateEvents> log { closure(28, 1), closure(75, 11) };
        const auto c = eval_loops(log, events, ref, th);
        CHECK(c.detected == 2);
        CHECK(c.total == 2);
    }
    SUBCASE("no closures")
    {
        const std::vector<UpdateEvents> log { closure(30, 0, false), closure(60, 10, false) };
        const auto c = eval_loops(log, events, ref, th);
        CHECK(c.detected == 0);
        CHECK(c.total == 2);
    }
    SUBCASE("wrong place or outside the window")
    {
        /* hypothesis 50 is far from refs {0, 1}; node 85 is past 61 + 20 */
        const std::vector<UpdateEvents> log { closure(31, 50), closure(82, 10) };
        CHECK(eval_loops(log, events, ref, th).detected == 0);
        const std::vector<UpdateEvents> edge { closure(81, 10) };
        CHECK(detect_events(edge, events, ref, th) == std::vector<bool> { false, true });
    }
    SUBCASE("offsets")
    {
        const std::vector<UpdateEvents> log { closure(1030, 500) };
        const auto c = eval_loops(log, events, ref, th, 1000, 500);
        CHECK(c.detected == 1);
    }
}

TEST_CASE("eval_topk")
{
    const std::vector<std::vector<RegionId>> ranked { { 0, 1, 2 }, { 1, 0, 2 }, { 3, 4, 5 }, { 2, 1, 0 } };
    const std::vector<std::optional<RegionId>> labels { 2, 0, 1, 0 };
    const auto top3 = eval_topk(ranked, labels, std::nullopt, 3);
    CHECK(top3.fraction == 0.75);
    CHECK(top3.evaluated == 4);
    CHECK(eval_topk(ranked, labels, std::nullopt, 1).fraction == 0.0);

    const std::vector<std::optional<RegionId>> perfect { 0, 1, 3, 2 };
    CHECK(eval_topk(ranked, perfect, std::nullopt, 1).fraction == 1.0);
    CHECK(eval_topk(ranked, perfect, std::nullopt, 3).fraction == 1.0);

    /* test labels 7 and 8 pair with training regions 0 and 1; 9 is unpaired */
    const RegionPairing pairing { { 0, 7 }, { 1, 8 } };
    const std::vector<std::optional<RegionId>> test_labels { 8, 8, 9, std::nullopt };
    const auto paired = eval_topk(ranked, test_labels, pairing, 1);
    CHECK(paired.evaluated == 2);
    CHECK(paired.excluded == 2);
    CHECK(paired.fraction == 0.5);

    const RegionPairing bad { { 0, 7 }, { 1, 7 } };
    CHECK_THROWS_AS(eval_topk(ranked, test_labels, bad, 1), DataError);
    CHECK_THROWS_AS(eval_topk(ranked, std::vector<std::optional<RegionId>> { 1 }, std::nullopt, 1),
                    DataError);
}

TEST_CASE("latency statistics")
{
    std::vector<double> us;
    for (int i = 1; i <= 1000; ++i)
        us.push_back(i);
    const auto s = latency_stats(us);
    CHECK(s.samples == 1000);
    CHECK(s.mean_us == doctest::Approx(500.5));
    CHECK(s.max_us == 1000);
    /* mean of 801..1000 */
    CHECK(s.tail_mean_us == doctest::Approx(900.5));
    CHECK(s.p50_us == 500);
    CHECK(latency_stats(std::vector<double> {}).samples == 0);
}
