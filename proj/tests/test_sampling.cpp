#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "regionfeat/regionfeat.hpp"

namespace rf = regionfeat;

namespace {

bool center_in_roi(const rf::Position& p, const rf::RoI& b) {
    const double cu = p.u + 0.5;
    const double cv = p.v + 0.5;
    return cu >= b.x1 && cu < b.x2 && cv >= b.y1 && cv < b.y2;
}

std::set<std::pair<int, int>> as_set(const std::vector<rf::Position>& positions) {
    std::set<std::pair<int, int>> s;
    for (const rf::Position& p : positions) {
        s.insert({static_cast<int>(p.u), static_cast<int>(p.v)});
    }
    return s;
}

}  // namespace

TEST_CASE("inside strides follow ceil(W_b / sqrt(max_in))") {
    REQUIRE(rf::inside_strides(rf::RoI{0, 0, 28, 14}, 196) == std::pair<int, int>{2, 1});
    REQUIRE(rf::inside_strides(rf::RoI{0, 0, 10, 10}, 196) == std::pair<int, int>{1, 1});
    REQUIRE(rf::inside_strides(rf::RoI{0, 0, 14, 14}, 196) == std::pair<int, int>{1, 1});
    REQUIRE(rf::inside_strides(rf::RoI{0, 0, 196, 1}, 196) == std::pair<int, int>{14, 1});
    REQUIRE(rf::inside_strides(rf::RoI{0, 0, 15, 14}, 196) == std::pair<int, int>{2, 1});
    REQUIRE(rf::inside_strides(rf::RoI{3.5, 2.5, 3.5, 2.5}, 196) == std::pair<int, int>{1, 1});
}

TEST_CASE("inside strides match the direct formula over a sweep") {
    for (int max_in : {1, 4, 9, 49, 100, 196, 200}) {
        for (int wb = 1; wb <= 40; ++wb) {
            for (int hb = 1; hb <= 40; hb += 7) {
                const rf::RoI b{0, 0, static_cast<double>(wb), static_cast<double>(hb)};
                const auto [sx, sy] = rf::inside_strides(b, max_in);
                REQUIRE(sx == oracle::ceil_div_sqrt(wb, max_in));
                REQUIRE(sy == oracle::ceil_div_sqrt(hb, max_in));
            }
        }
    }
}

TEST_CASE("outside stride follows ceil(sqrt(HW / max_out))") {
    REQUIRE(rf::outside_stride(14, 14, 196) == 1);
    REQUIRE(rf::outside_stride(48, 50, 196) == 4);  // ceil(sqrt(12.24))
    REQUIRE(rf::outside_stride(1, 1, 196) == 1);
    REQUIRE(rf::outside_stride(1, 1, 1) == 1);
    REQUIRE(rf::outside_stride(28, 28, 196) == 2);  // exactly sqrt(4)

    for (int max_out : {1, 2, 7, 49, 196, 200}) {
        for (int h = 1; h <= 40; ++h) {
            for (int w = 1; w <= 40; w += 3) {
                REQUIRE(rf::outside_stride(h, w, max_out) ==
                        oracle::ceil_sqrt_ratio(static_cast<long long>(h) * w, max_out));
            }
        }
    }
}

TEST_CASE("support spec validation") {
    REQUIRE_THROWS_AS(rf::validate_support_spec(rf::SupportSpec{rf::SupportKind::roi_1x, 0, 0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        rf::validate_support_spec(rf::SupportSpec{rf::SupportKind::whole_image, 196, 0}),
        std::invalid_argument);
    REQUIRE_NOTHROW(rf::validate_support_spec(rf::SupportSpec::roi_1x()));
    REQUIRE_NOTHROW(rf::validate_support_spec(rf::SupportSpec::roi_2x()));
    REQUIRE_NOTHROW(rf::validate_support_spec(rf::SupportSpec::whole_image()));
}

TEST_CASE("build_plan covers the RoI lattice") {
    SECTION("RoI covering the whole map uses every cell, nothing outside") {
        const rf::SamplingPlan plan =
            rf::build_plan(rf::RoI{0, 0, 14, 14}, 14, 14, rf::SupportSpec::whole_image());
        REQUIRE(plan.in_positions.size() == 196);
        REQUIRE(plan.out_positions.empty());
        REQUIRE(plan.stride_x == 1);
        REQUIRE(plan.stride_y == 1);
    }
    SECTION("a 28x14 RoI at default budget keeps 196 points at stride (2,1)") {
        const rf::SamplingPlan plan =
            rf::build_plan(rf::RoI{0, 0, 28, 14}, 14, 28, rf::SupportSpec::roi_1x());
        REQUIRE(plan.stride_x == 2);
        REQUIRE(plan.stride_y == 1);
        REQUIRE(plan.in_positions.size() == 196);
        REQUIRE(plan.out_positions.empty());
        for (const rf::Position& p : plan.in_positions) {
            REQUIRE(static_cast<int>(p.u) % 2 == 0);
        }
    }
    SECTION("dense whole-image plan splits into 4 in and 12 out cells") {
        const rf::SamplingPlan plan =
            rf::dense_plan(rf::RoI{1, 1, 3, 3}, 4, 4, rf::SupportSpec::whole_image());
        REQUIRE(plan.in_positions.size() == 4);
        REQUIRE(plan.out_positions.size() == 12);
        const auto in = as_set(plan.in_positions);
        REQUIRE(in.count({1, 1}) == 1);
        REQUIRE(in.count({2, 2}) == 1);
        REQUIRE(in.count({0, 0}) == 0);
    }
    SECTION("roi_1x dense plan on an integer-aligned RoI is exactly its cells") {
        const rf::SamplingPlan plan =
            rf::dense_plan(rf::RoI{2, 1, 5, 4}, 8, 8, rf::SupportSpec::roi_1x());
        REQUIRE(plan.out_positions.empty());
        REQUIRE(plan.in_positions.size() == 9);
        for (const rf::Position& p : plan.in_positions) {
            REQUIRE(p.u >= 2);
            REQUIRE(p.u <= 4);
            REQUIRE(p.v >= 1);
            REQUIRE(p.v <= 3);
        }
    }
}

TEST_CASE("build_plan with max budgets equals dense_plan on square maps") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 10);
        const rf::RoI b = oracle::random_roi(rng, n, n);
        for (const rf::SupportKind kind :
             {rf::SupportKind::roi_1x, rf::SupportKind::roi_2x, rf::SupportKind::whole_image}) {
            const rf::SupportSpec spec{kind, n * n, n * n};
            const rf::SamplingPlan sparse = rf::build_plan(b, n, n, spec);
            const rf::SamplingPlan dense = rf::dense_plan(b, n, n, spec);
            REQUIRE(sparse.in_positions == dense.in_positions);
            REQUIRE(sparse.out_positions == dense.out_positions);
        }
    }
}

TEST_CASE("plan membership, disjointness and budget properties") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 60; ++trial) {
        const int h = 3 + static_cast<int>(rng() % 20);
        const int w = 3 + static_cast<int>(rng() % 20);
        const rf::RoI b = oracle::random_roi(rng, h, w, 0.5);
        // perfect-square budgets; see ledger note on non-square budget slack
        const int budgets[] = {1, 4, 16, 49, 196};
        const int max_in = budgets[rng() % 5];
        const int max_out = budgets[rng() % 5];
        for (const rf::SupportKind kind :
             {rf::SupportKind::roi_1x, rf::SupportKind::roi_2x, rf::SupportKind::whole_image}) {
            const rf::SupportSpec spec{kind, max_in, max_out};
            const rf::SamplingPlan plan = rf::build_plan(b, h, w, spec);

            REQUIRE(plan.size() >= 1);
            const auto in = as_set(plan.in_positions);
            const auto out = as_set(plan.out_positions);
            for (const auto& cell : in) REQUIRE(out.count(cell) == 0);

            for (const rf::Position& p : plan.all_positions()) {
                REQUIRE(p.u >= 0);
                REQUIRE(p.u < w);
                REQUIRE(p.v >= 0);
                REQUIRE(p.v < h);
                REQUIRE(p.u == std::floor(p.u));
                REQUIRE(p.v == std::floor(p.v));
            }
            // outside samples sit on the (0,0)-anchored lattice, off the RoI
            for (const rf::Position& p : plan.out_positions) {
                REQUIRE(static_cast<int>(p.u) % plan.stride_out == 0);
                REQUIRE(static_cast<int>(p.v) % plan.stride_out == 0);
                REQUIRE(!center_in_roi(p, b));
            }
            // inside samples: only the degenerate fallback may sit off the RoI
            if (plan.in_positions.size() > 1) {
                for (const rf::Position& p : plan.in_positions) {
                    REQUIRE(center_in_roi(p, b));
                }
            }
            REQUIRE(plan.in_positions.size() <= static_cast<std::size_t>(max_in));
            if (kind == rf::SupportKind::roi_1x) REQUIRE(plan.out_positions.empty());

            // determinism
            const rf::SamplingPlan again = rf::build_plan(b, h, w, spec);
            REQUIRE(plan.in_positions == again.in_positions);
            REQUIRE(plan.out_positions == again.out_positions);
        }
    }
}

TEST_CASE("degenerate RoIs fall back to a single cell only when nothing is sampled") {
    const rf::RoI tiny{2.2, 2.2, 2.3, 2.3};

    SECTION("roi_1x support: the nearest cell to the RoI center") {
        const rf::SamplingPlan plan = rf::build_plan(tiny, 6, 6, rf::SupportSpec::roi_1x());
        REQUIRE(plan.in_positions.size() == 1);
        REQUIRE(plan.out_positions.empty());
        REQUIRE(plan.in_positions[0] == rf::Position{2.0, 2.0});
    }
    SECTION("whole-image support: the out lattice still fires, no fallback") {
        const rf::SamplingPlan plan =
            rf::build_plan(tiny, 6, 6, rf::SupportSpec::whole_image());
        REQUIRE(plan.in_positions.empty());
        REQUIRE(plan.out_positions.size() == 36);
    }
}

TEST_CASE("roi_2x support is the concentric box with twice the area") {
    // RoI (4,4,8,8): support half-width 2*sqrt(2), cells x,y in [3,8]
    const rf::SamplingPlan plan =
        rf::build_plan(rf::RoI{4, 4, 8, 8}, 16, 16,
                       rf::SupportSpec{rf::SupportKind::roi_2x, 256, 256});
    REQUIRE(plan.in_positions.size() == 16);
    REQUIRE(plan.out_positions.size() == 36 - 16);
    for (const rf::Position& p : plan.out_positions) {
        REQUIRE(p.u >= 3);
        REQUIRE(p.u <= 8);
        REQUIRE(p.v >= 3);
        REQUIRE(p.v <= 8);
    }
}

TEST_CASE("strides never increase when budgets grow") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 40; ++trial) {
        const rf::RoI b = oracle::random_roi(rng, 60, 60);
        int prev_sx = 1 << 20;
        int prev_sy = 1 << 20;
        for (int max_in : {1, 2, 4, 9, 25, 100, 400}) {
            const auto [sx, sy] = rf::inside_strides(b, max_in);
            REQUIRE(sx <= prev_sx);
            REQUIRE(sy <= prev_sy);
            prev_sx = sx;
            prev_sy = sy;
        }
        int prev_out = 1 << 20;
        for (int max_out : {1, 2, 4, 9, 25, 100, 400}) {
            const int s = rf::outside_stride(60, 60, max_out);
            REQUIRE(s <= prev_out);
            prev_out = s;
        }
    }
}

TEST_CASE("plans demand an RoI that touches the map") {
    REQUIRE_THROWS_AS(rf::build_plan(rf::RoI{10, 10, 12, 12}, 6, 6, rf::SupportSpec::roi_1x()),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        rf::build_plan(rf::RoI{-5, -5, -1, -1}, 6, 6, rf::SupportSpec::whole_image()),
        std::invalid_argument);
    // partially overlapping RoIs are fine
    REQUIRE_NOTHROW(rf::build_plan(rf::RoI{-2, -2, 3, 3}, 6, 6, rf::SupportSpec::roi_1x()));
}

TEST_CASE("all_positions lists inside samples before outside samples") {
    const rf::SamplingPlan plan =
        rf::build_plan(rf::RoI{1, 1, 3, 3}, 6, 6, rf::SupportSpec::whole_image());
    const std::vector<rf::Position> all = plan.all_positions();
    REQUIRE(all.size() == plan.size());
    for (std::size_t i = 0; i < plan.in_positions.size(); ++i) {
        REQUIRE(all[i] == plan.in_positions[i]);
    }
    for (std::size_t i = 0; i < plan.out_positions.size(); ++i) {
        REQUIRE(all[plan.in_positions.size() + i] == plan.out_positions[i]);
    }
}
