#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "regionfeat/regionfeat.hpp"

namespace rf = regionfeat;

TEST_CASE("embed_scalar at zero interleaves sin 0 and cos 0") {
    const rf::EmbeddingConfig cfg(8, 4);
    const std::vector<double> e = rf::embed_scalar(0.0, cfg);
    REQUIRE(e.size() == 8);
    for (int i = 0; i < 8; i += 2) {
        REQUIRE(e[i] == 0.0);
        REQUIRE(e[i + 1] == 1.0);
    }
}

TEST_CASE("embed_scalar hand fixtures") {
    SECTION("C_E = 2 uses wavelength one") {
        const rf::EmbeddingConfig cfg(2, 1);
        const std::vector<double> e = rf::embed_scalar(M_PI / 2.0, cfg);
        REQUIRE(e[0] == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(e[1] == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("C_E = 4 adds the sqrt(1000) wavelength") {
        const rf::EmbeddingConfig cfg(4, 1);
        const std::vector<double> e = rf::embed_scalar(3.0, cfg);
        REQUIRE(e[0] == Catch::Approx(std::sin(3.0)).margin(1e-14));
        REQUIRE(e[1] == Catch::Approx(std::cos(3.0)).margin(1e-14));
        REQUIRE(e[2] == Catch::Approx(std::sin(3.0 / std::sqrt(1000.0))).margin(1e-14));
        REQUIRE(e[3] == Catch::Approx(std::cos(3.0 / std::sqrt(1000.0))).margin(1e-14));
    }
}

TEST_CASE("embed_scalar matches the formula oracle for random inputs") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> span(-50.0, 50.0);
    for (int c_e : {2, 4, 6, 16, 64}) {
        const rf::EmbeddingConfig cfg(c_e, 1);
        for (int trial = 0; trial < 20; ++trial) {
            const double z = span(rng);
            const std::vector<double> got = rf::embed_scalar(z, cfg);
            const std::vector<double> want = oracle::embed_scalar(z, c_e);
            REQUIRE(oracle::max_abs_diff(got, want) <= 1e-13);
        }
    }
}

TEST_CASE("embedding norm is sqrt(C_E / 2) and entries stay in [-1, 1]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> span(-100.0, 100.0);
    const rf::EmbeddingConfig cfg(16, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const std::vector<double> e = rf::embed_scalar(span(rng), cfg);
        double norm2 = 0.0;
        for (double v : e) {
            REQUIRE(v >= -1.0);
            REQUIRE(v <= 1.0);
            norm2 += v * v;
        }
        REQUIRE(norm2 == Catch::Approx(8.0).margin(1e-9));  // C_E / 2 sin/cos pairs
    }
}

TEST_CASE("embed_position concatenates u then v") {
    const rf::EmbeddingConfig cfg(4, 1);

    SECTION("origin gives two copies of the zero pattern") {
        const std::vector<double> e = rf::embed_position(rf::Position{0, 0}, cfg);
        REQUIRE(e.size() == 8);
        REQUIRE(e == std::vector<double>{0, 1, 0, 1, 0, 1, 0, 1});
    }
    SECTION("first block depends only on u") {
        const std::vector<double> a = rf::embed_position(rf::Position{2.0, 3.0}, cfg);
        const std::vector<double> b = rf::embed_position(rf::Position{2.0, 7.0}, cfg);
        for (int i = 0; i < 4; ++i) REQUIRE(a[i] == b[i]);
        REQUIRE(a != b);
    }
    SECTION("equals the composed scalar oracle") {
        const std::vector<double> got = rf::embed_position(rf::Position{2.0, 3.0}, cfg);
        const std::vector<double> want = oracle::embed_position(2.0, 3.0, 4);
        REQUIRE(oracle::max_abs_diff(got, want) <= 1e-14);
    }
}

TEST_CASE("embed_box concatenates the four corners in (x1, y1, x2, y2) order") {
    const rf::EmbeddingConfig cfg(2, 1);

    SECTION("degenerate box repeats one block four times") {
        const std::vector<double> e = rf::embed_box(rf::RoI{5, 5, 5, 5}, cfg);
        REQUIRE(e.size() == 8);
        for (int blk = 1; blk < 4; ++blk) {
            REQUIRE(e[2 * blk] == e[0]);
            REQUIRE(e[2 * blk + 1] == e[1]);
        }
        const std::vector<double> zero = rf::embed_box(rf::RoI{0, 0, 0, 0}, cfg);
        REQUIRE(zero == std::vector<double>{0, 1, 0, 1, 0, 1, 0, 1});
    }
    SECTION("corner order matches the composed oracle") {
        const rf::RoI b{1, 2, 3, 4};
        const std::vector<double> got = rf::embed_box(b, cfg);
        const std::vector<double> want = oracle::embed_box(b, 2);
        REQUIRE(oracle::max_abs_diff(got, want) <= 1e-14);
        // block 0 is x1's embedding, block 1 is y1's
        REQUIRE(got[0] == Catch::Approx(std::sin(1.0)).margin(1e-14));
        REQUIRE(got[2] == Catch::Approx(std::sin(2.0)).margin(1e-14));
        REQUIRE(got[4] == Catch::Approx(std::sin(3.0)).margin(1e-14));
        REQUIRE(got[6] == Catch::Approx(std::sin(4.0)).margin(1e-14));
    }
}

TEST_CASE("embedding config validation") {
    REQUIRE_THROWS_AS(rf::validate_embedding_config(rf::EmbeddingConfig(3, 1)),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(rf::validate_embedding_config(rf::EmbeddingConfig(0, 1)),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(rf::validate_embedding_config(rf::EmbeddingConfig(4, 0)),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(rf::validate_embedding_config(rf::EmbeddingConfig(4, 2, 1.0)),
                      std::invalid_argument);
    REQUIRE_NOTHROW(rf::validate_embedding_config(rf::EmbeddingConfig{}));
}

TEST_CASE("default config uses the detection-scale dimensions and base 1000") {
    const rf::EmbeddingConfig cfg;
    REQUIRE(cfg.embed_dim == 512);
    REQUIRE(cfg.geo_dim == 256);
    REQUIRE(cfg.base == 1000.0);
}
