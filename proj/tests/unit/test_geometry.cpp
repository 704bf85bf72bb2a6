#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chemoflow/geometry.hpp"

using namespace chemoflow;

TEST_CASE("radial grid covers the unit disk")
{
    for (auto sp : {RadialSpacing::UniformRadius, RadialSpacing::EqualArea}) {
        const auto g = RadialGrid::build(37, sp);
        REQUIRE(g.size() == 37);
        CHECK(g.edges.front() == 0.0);
        CHECK(g.edges.back() == 1.0);
        double total = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(g.edges[j] < g.edges[j + 1]);
            CHECK(g.measures[j] > 0.0);
            total += g.measures[j];
        }
        CHECK(total == doctest::Approx(std::numbers::pi).epsilon(1e-14));
    }
}

TEST_CASE("equal-area spacing gives equal annuli")
{
    const auto g = RadialGrid::build(16, RadialSpacing::EqualArea);
    for (double m : g.measures) CHECK(m == doctest::Approx(std::numbers::pi / 16.0).epsilon(1e-12));
}

TEST_CASE("radial grid rejects zero cells")
{
    CHECK_THROWS_AS(RadialGrid::build(0), std::invalid_argument);
}

TEST_CASE("box grid layout and boundary flags")
{
    const auto g = BoxGrid::build(4, 3, 2.0);
    CHECK(g.size() == 12);
    CHECK(g.hx == doctest::Approx(1.0));
    CHECK(g.hy == doctest::Approx(4.0 / 3.0));
    CHECK(g.x(0) == doctest::Approx(-1.5));
    CHECK(g.y(2) == doctest::Approx(2.0 - 2.0 / 3.0));
    CHECK(g.boundary[g.index(0, 1)]);
    CHECK_FALSE(g.boundary[g.index(1, 1)]);
    CHECK_FALSE(g.boundary[g.index(2, 1)]);
    CHECK_THROWS_AS(BoxGrid::build(1, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(BoxGrid::build(4, 4, 0.0), std::invalid_argument);
}

TEST_CASE("grid variant dispatch")
{
    const auto r = make_radial_grid(8);
    const auto b = make_box_grid(3, 3, 1.0);
    CHECK(r->is_radial());
    CHECK_FALSE(b->is_radial());
    CHECK_THROWS_AS(r->box(), std::invalid_argument);
    CHECK_THROWS_AS(b->radial(), std::invalid_argument);
    CHECK(b->measure(4) == doctest::Approx(4.0 / 9.0));
    CHECK(b->center_norm2(4) == doctest::Approx(0.0));
    CHECK(r->center_norm2(0) == doctest::Approx(1.0 / 256.0));
    CHECK(b->domain_area() == doctest::Approx(4.0));
    CHECK(r->domain_area() == doctest::Approx(std::numbers::pi));
}
