#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "region_learner/error.hpp"
#include "region_learner/map_graph.hpp"
#include "region_learner/spatial_grid.hpp"

using namespace region_learner;

TEST_CASE("angles wrap into (-pi, pi]")
{
    CHECK(normalize_angle(0.0) == 0.0);
    CHECK(normalize_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(normalize_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(normalize_angle(3.0 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
    CHECK(normalize_angle(7.0) == doctest::Approx(7.0 - 2.0 * std::numbers::pi));

    const Pose2 a(0, 0, 3.0), b(0, 0, -3.0);
    /* across the seam: 2*pi - 6 */
    CHECK(angle_diff(a, b) == doctest::Approx(2.0 * std::numbers::pi - 6.0));
    CHECK(planar_distance(Pose2(0, 0, 0), Pose2(3, 4, 1)) == doctest::Approx(5.0));
}

TEST_CASE("l2_normalized")
{
    const std::vector<double> v { 3.0, 4.0 };
    const auto u = l2_normalized(v);
    CHECK(u[0] == doctest::Approx(0.6));
    CHECK(u[1] == doctest::Approx(0.8));
    CHECK_THROWS_AS(l2_normalized(std::vector<double> { 0.0, 0.0 }), DataError);
    CHECK_THROWS_AS(l2_normalized(std::vector<double> { NAN, 1.0 }), DataError);
}

TEST_CASE("nodes get sequential ids and odometry edges")
{
    MapGraph g;
    const std::vector<double> f { 1.0, 0.0 };
    CHECK(g.add_node({ 0, 0, 0 }, 0.0, f) == 0);
    CHECK(g.add_node({ 1, 0, 0 }, 1.0, f) == 1);
    CHECK(g.add_node({ 2, 0, 0 }, 2.0, f) == 2);
    REQUIRE(g.edges().size() == 2);
    CHECK(g.edges()[0].kind == EdgeKind::Odometry);
    CHECK(g.adjacent(0, 1));
    CHECK_FALSE(g.adjacent(0, 2));

    g.add_loop_edge(2, 0);
    CHECK(g.adjacent(0, 2));
    CHECK(g.edges().back().kind == EdgeKind::LoopClosure);
    g.add_loop_edge(0, 2);   /* already there */
    CHECK(g.edges().size() == 3);

    CHECK_THROWS_AS(g.add_loop_edge(1, 1), DataError);
    CHECK_THROWS_AS(g.add_loop_edge(1, 9), DataError);
    CHECK_THROWS_AS(g.add_node({ 3, 0, 0 }, 1.5, f), DataError);
    CHECK_THROWS_AS(g.add_node({ 3, 0, 0 }, 3.0, std::vector<double> { 1.0 }), DataError);
    CHECK_THROWS_AS(g.add_node({ NAN, 0, 0 }, 3.0, f), DataError);
    CHECK_THROWS_AS(g.node(7), DataError);
}

TEST_CASE("spatial grid radius queries")
{
    SpatialGrid grid(2.0);
    grid.insert(0, 0.0, 0.0);
    grid.insert(1, 1.0, 0.0);
    grid.insert(2, -1.0, 0.0);
    grid.insert(3, 5.0, 5.0);
    grid.insert(4, -3.0, 0.0);

    auto hits = grid.nearest(0.0, 0.0, 10, 3.0);
    REQUIRE(hits.size() == 4);
    CHECK(hits[0].id == 0);
    /* equal distances tie by id */
    CHECK(hits[1].id == 1);
    CHECK(hits[2].id == 2);
    CHECK(hits[3].id == 4);   /* radius is inclusive */
    CHECK(hits[3].distance == doctest::Approx(3.0));

    CHECK(grid.nearest(0.0, 0.0, 2, 3.0).size() == 2);
    CHECK(grid.erase(1, 1.0, 0.0));
    CHECK_FALSE(grid.erase(1, 1.0, 0.0));
    CHECK(grid.size() == 4);
    CHECK(grid.nearest(0.0, 0.0, 10, 1.0).size() == 2);
}
