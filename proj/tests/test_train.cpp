#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "regionfeat/regionfeat.hpp"

namespace rf = regionfeat;

namespace {

// small, fast configuration for loop-mechanics tests
rf::TrainConfig tiny_config() {
    rf::TrainConfig cfg;
    cfg.map_height = cfg.map_width = 8;
    cfg.feat_dim = 2;
    cfg.grid_rows = cfg.grid_cols = 2;
    cfg.embed_dim = 4;
    cfg.geo_dim = 2;
    cfg.min_object = 2;
    cfg.max_object = 3;
    cfg.steps = 10;
    cfg.log_interval = 5;
    return cfg;
}

std::vector<int> record_steps(const rf::TrainLog& log) {
    std::vector<int> steps;
    for (const rf::TrainRecord& r : log.records) steps.push_back(r.step);
    return steps;
}

}  // namespace

TEST_CASE("sgd_update matches the update rule on hand fixtures") {
    SECTION("plain gradient step") {
        std::vector<double> p = {1.0}, v = {0.0}, g = {1.0};
        rf::sgd_update(p, v, g, 0.1, 0.0, 0.0);
        REQUIRE(v[0] == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(p[0] == Catch::Approx(0.9).margin(1e-12));
    }
    SECTION("weight decay pulls parameters toward zero") {
        std::vector<double> p = {1.0}, v = {0.0}, g = {0.0};
        rf::sgd_update(p, v, g, 0.1, 0.0, 0.1);
        REQUIRE(v[0] == Catch::Approx(0.1).margin(1e-12));
        REQUIRE(p[0] == Catch::Approx(0.99).margin(1e-12));
    }
    SECTION("momentum accumulates across steps") {
        std::vector<double> p = {1.0}, v = {0.0}, g = {1.0};
        rf::sgd_update(p, v, g, 0.1, 0.9, 0.0);
        rf::sgd_update(p, v, g, 0.1, 0.9, 0.0);
        REQUIRE(v[0] == Catch::Approx(1.9).margin(1e-12));
        REQUIRE(p[0] == Catch::Approx(0.71).margin(1e-12));
    }
    SECTION("zero gradient decays the velocity without moving far") {
        std::vector<double> p = {1.0}, v = {2.0}, g = {0.0};
        rf::sgd_update(p, v, g, 0.1, 0.5, 0.0);
        REQUIRE(v[0] == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(p[0] == Catch::Approx(0.9).margin(1e-12));
        rf::sgd_update(p, v, g, 0.1, 0.5, 0.0);
        REQUIRE(v[0] == Catch::Approx(0.5).margin(1e-12));
        REQUIRE(p[0] == Catch::Approx(0.85).margin(1e-12));
    }
    SECTION("size mismatches are rejected") {
        std::vector<double> p = {1.0, 2.0}, v = {0.0}, g = {0.0, 0.0};
        REQUIRE_THROWS_AS(rf::sgd_update(p, v, g, 0.1, 0.9, 0.0), std::invalid_argument);
    }
}

TEST_CASE("init_params is seeded and draws tensors in a fixed order") {
    std::mt19937_64 a(7), b(7);
    const rf::AttentionParams first = rf::init_params(2, 4, 3, 2, 0.5, a);
    const rf::AttentionParams second = rf::init_params(2, 4, 3, 2, 0.5, b);
    REQUIRE(first.v_box == second.v_box);
    REQUIRE(first.w_box_hat == second.w_box_hat);
    REQUIRE(first.w_im == second.w_im);
    REQUIRE(first.w_app == second.w_app);

    // one continuous stream: v_box, then w_box_hat, then w_im, then w_app
    std::mt19937_64 manual(7);
    std::normal_distribution<double> gauss(0.0, 0.5);
    const auto take = [&](std::size_t n) {
        std::vector<double> out(n);
        for (double& v : out) v = gauss(manual);
        return out;
    };
    REQUIRE(first.v_box == take(first.v_box.size()));
    REQUIRE(first.w_box_hat == take(first.w_box_hat.size()));
    REQUIRE(first.w_im == take(first.w_im.size()));
    REQUIRE(first.w_app == take(first.w_app.size()));
}

TEST_CASE("init_params draws from the requested gaussian") {
    std::mt19937_64 rng(11);
    const rf::AttentionParams p = rf::init_params(8, 64, 16, 32, 0.01, rng);
    std::vector<double> all;
    for (const auto* t : {&p.v_box, &p.w_box_hat, &p.w_im, &p.w_app}) {
        all.insert(all.end(), t->begin(), t->end());
    }
    REQUIRE(all.size() == 26880);
    double mean = 0.0;
    for (double v : all) mean += v;
    mean /= static_cast<double>(all.size());
    double var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    var /= static_cast<double>(all.size());
    REQUIRE(std::abs(mean) < 3e-4);
    REQUIRE(std::sqrt(var) == Catch::Approx(0.01).epsilon(0.05));
}

TEST_CASE("records land on the logging cadence plus the final step") {
    rf::TrainConfig cfg = tiny_config();
    cfg.steps = 120;
    cfg.log_interval = 50;
    const rf::TrainResult result = rf::run_training(cfg);
    REQUIRE(record_steps(result.log) == std::vector<int>{0, 50, 100, 119});

    cfg.steps = 7;
    cfg.log_interval = 3;
    const rf::TrainResult short_run = rf::run_training(cfg);
    REQUIRE(record_steps(short_run.log) == std::vector<int>{0, 3, 6});
}

TEST_CASE("a zero learning rate leaves the initialization untouched") {
    rf::TrainConfig cfg = tiny_config();
    cfg.base_lr = 0.0;
    cfg.seed = 5;
    const rf::TrainResult result = rf::run_training(cfg);

    std::mt19937_64 rng(5);
    const rf::AttentionParams init = rf::init_params(cfg.parts(), cfg.embed_dim, cfg.geo_dim,
                                                     cfg.feat_dim, cfg.init_sigma, rng);
    REQUIRE(result.params.v_box == init.v_box);
    REQUIRE(result.params.w_box_hat == init.w_box_hat);
    REQUIRE(result.params.w_im == init.w_im);
    REQUIRE(result.params.w_app == init.w_app);
}

TEST_CASE("training is deterministic for a fixed configuration") {
    rf::TrainConfig cfg = tiny_config();
    cfg.map_height = cfg.map_width = 12;
    cfg.min_object = 4;
    cfg.max_object = 6;
    cfg.feat_dim = 4;
    cfg.embed_dim = 8;
    cfg.geo_dim = 4;
    cfg.steps = 40;
    cfg.log_interval = 10;
    cfg.seed = 3;
    const rf::TrainResult a = rf::run_training(cfg);
    const rf::TrainResult b = rf::run_training(cfg);
    REQUIRE(a.params.v_box == b.params.v_box);
    REQUIRE(a.params.w_box_hat == b.params.w_box_hat);
    REQUIRE(a.params.w_im == b.params.w_im);
    REQUIRE(a.params.w_app == b.params.w_app);
    REQUIRE(a.log.records.size() == b.log.records.size());
    for (std::size_t i = 0; i < a.log.records.size(); ++i) {
        REQUIRE(a.log.records[i].step == b.log.records[i].step);
        REQUIRE(a.log.records[i].loss == b.log.records[i].loss);
        REQUIRE(a.log.records[i].mean_kl_parts == b.log.records[i].mean_kl_parts);
        REQUIRE(a.log.records[i].in_roi_mass == b.log.records[i].in_roi_mass);
        if (std::isnan(a.log.records[i].kl_of_mask)) {
            REQUIRE(std::isnan(b.log.records[i].kl_of_mask));
        } else {
            REQUIRE(a.log.records[i].kl_of_mask == b.log.records[i].kl_of_mask);
        }
    }
}

TEST_CASE("the step-0 record reproduces a by-hand forward pass") {
    rf::TrainConfig cfg;  // defaults: mask_fit, 20x20x8, 3x3 grid, seed 0
    cfg.steps = 1;
    const rf::TrainResult result = rf::run_training(cfg);
    REQUIRE(result.log.records.size() == 1);
    REQUIRE(result.log.records[0].step == 0);

    std::mt19937_64 rng(cfg.seed);
    const rf::AttentionParams params = rf::init_params(cfg.parts(), cfg.embed_dim, cfg.geo_dim,
                                                       cfg.feat_dim, cfg.init_sigma, rng);
    const rf::detail::TrainScene scene = rf::detail::make_scene(cfg, rng);
    REQUIRE(scene.rois.size() == 1);
    const rf::RoI& b = scene.rois[0];
    const rf::PartFeatureMatrix y =
        rf::extract(scene.x, b, params, rf::SupportSpec::whole_image());
    const rf::BinGrid grid = rf::make_bin_grid(b, cfg.grid_rows, cfg.grid_cols);
    const rf::PartFeatureMatrix target = rf::masked_pool(scene.x, b, grid, scene.mask);
    double loss = 0.0;
    const double norm = 1.0 / (1.0 * cfg.parts() * cfg.feat_dim);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        const double diff = y.data[i] - target.data[i];
        loss += norm * diff * diff;
    }
    REQUIRE(result.log.records[0].loss == Catch::Approx(loss).margin(1e-12));
    REQUIRE(result.log.records[0].in_roi_mass >= 0.0);
    REQUIRE(result.log.records[0].in_roi_mass <= 1.0 + 1e-9);
    REQUIRE(result.log.records[0].mean_kl_parts >= 0.0);
    REQUIRE(result.log.records[0].kl_of_mask >= 0.0);
}

TEST_CASE("mask-fit scenes carry a shifted rectangular object") {
    const rf::TrainConfig cfg;  // defaults
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const rf::detail::TrainScene scene = rf::detail::make_scene(cfg, rng);
        REQUIRE(scene.rois.size() == 1);
        REQUIRE(scene.mask.height == cfg.map_height);
        REQUIRE(scene.mask.width == cfg.map_width);

        int minx = cfg.map_width, maxx = -1, miny = cfg.map_height, maxy = -1;
        int count = 0;
        for (int y = 0; y < cfg.map_height; ++y) {
            for (int x = 0; x < cfg.map_width; ++x) {
                if (!scene.mask.at(y, x)) continue;
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
                ++count;
            }
        }
        const int ow = maxx - minx + 1;
        const int oh = maxy - miny + 1;
        REQUIRE(count == ow * oh);  // solid rectangle
        REQUIRE(ow >= cfg.min_object);
        REQUIRE(ow <= cfg.max_object);
        REQUIRE(oh >= cfg.min_object);
        REQUIRE(oh <= cfg.max_object);

        const rf::RoI& b = scene.rois[0];
        REQUIRE(b.x1 == static_cast<double>(std::max(0, minx - 1)));
        REQUIRE(b.y1 == static_cast<double>(std::max(0, miny - 1)));
        REQUIRE(b.x2 == static_cast<double>(std::min(cfg.map_width, maxx + 2)));
        REQUIRE(b.y2 == static_cast<double>(std::min(cfg.map_height, maxy + 2)));

        double fg = 0.0, bg = 0.0;
        int fg_n = 0, bg_n = 0;
        for (int y = 0; y < cfg.map_height; ++y) {
            for (int x = 0; x < cfg.map_width; ++x) {
                for (int c = 0; c < cfg.feat_dim; ++c) {
                    if (scene.mask.at(y, x)) {
                        fg += scene.x.at(y, x, c);
                        ++fg_n;
                    } else {
                        bg += scene.x.at(y, x, c);
                        ++bg_n;
                    }
                }
            }
        }
        REQUIRE(fg / fg_n > 1.5);  // object channels shifted by +2
        REQUIRE(bg / bg_n < 0.5);
    }
}

TEST_CASE("distillation scenes draw in-map RoIs of bounded size") {
    rf::TrainConfig cfg;
    cfg.task = rf::TrainTask::distill_aligned;
    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        std::mt19937_64 rng(seed);
        const rf::detail::TrainScene scene = rf::detail::make_scene(cfg, rng);
        REQUIRE(scene.rois.size() == static_cast<std::size_t>(cfg.rois_per_step));
        REQUIRE(scene.mask.height == 0);  // no mask for distillation
        for (const rf::RoI& b : scene.rois) {
            REQUIRE(b.width() >= 4.0);
            REQUIRE(b.width() <= 12.0 + 1e-9);
            REQUIRE(b.height() >= 4.0);
            REQUIRE(b.height() <= 12.0 + 1e-9);
            REQUIRE(b.x1 >= 0.0);
            REQUIRE(b.y1 >= 0.0);
            REQUIRE(b.x2 <= cfg.map_width);
            REQUIRE(b.y2 <= cfg.map_height);
        }
    }
}

TEST_CASE("a short mask-fit run reduces the training loss") {
    rf::TrainConfig cfg;
    cfg.map_height = cfg.map_width = 16;
    cfg.feat_dim = 4;
    cfg.embed_dim = 8;
    cfg.geo_dim = 4;
    cfg.min_object = 4;
    cfg.max_object = 8;
    cfg.steps = 400;
    cfg.log_interval = 20;
    const rf::TrainResult result = rf::run_training(cfg);
    const auto& recs = result.log.records;
    REQUIRE(recs.size() == 21);
    double early = 0.0, late = 0.0;
    for (int i = 0; i < 4; ++i) {
        early += recs[i].loss;
        late += recs[recs.size() - 1 - i].loss;
    }
    CAPTURE(early / 4.0, late / 4.0);
    REQUIRE(late < early);
    for (const rf::TrainRecord& r : recs) {
        REQUIRE(std::isfinite(r.loss));
        REQUIRE(r.loss >= 0.0);
        REQUIRE(std::isfinite(r.mean_kl_parts));
        REQUIRE(std::isfinite(r.kl_of_mask));
    }
}

TEST_CASE("a diverging run raises a numerical error instead of logging garbage") {
    rf::TrainConfig cfg = tiny_config();
    cfg.steps = 60;
    cfg.base_lr = 1e10;
    REQUIRE_THROWS_AS(rf::run_training(cfg), rf::NumericalError);
}

TEST_CASE("task names parse and print consistently") {
    for (const char* name : {"distill_aligned", "distill_regular", "mask_fit"}) {
        REQUIRE(rf::task_name(rf::parse_task(name)) == std::string(name));
    }
    REQUIRE_THROWS_AS(rf::parse_task("distill"), std::invalid_argument);
}

TEST_CASE("configuration validation rejects unusable settings") {
    const rf::TrainConfig base = tiny_config();
    const auto reject = [&](auto mutate) {
        rf::TrainConfig cfg = base;
        mutate(cfg);
        REQUIRE_THROWS_AS(rf::run_training(cfg), std::invalid_argument);
    };
    reject([](rf::TrainConfig& c) { c.steps = 0; });
    reject([](rf::TrainConfig& c) { c.init_sigma = 0.0; });
    reject([](rf::TrainConfig& c) { c.base_lr = -1e-3; });
    reject([](rf::TrainConfig& c) { c.log_interval = 0; });
    reject([](rf::TrainConfig& c) { c.map_height = 3; });
    reject([](rf::TrainConfig& c) { c.grid_rows = 0; });
    reject([](rf::TrainConfig& c) { c.rois_per_step = 0; });
    reject([](rf::TrainConfig& c) { c.embed_dim = 5; });
    reject([](rf::TrainConfig& c) { c.min_object = 1; });
    reject([](rf::TrainConfig& c) { c.max_object = c.map_width; });
}

TEST_CASE("default-scale distillation matches its pinned fixture") {
    rf::TrainConfig cfg;
    cfg.task = rf::TrainTask::distill_aligned;
    const rf::TrainResult result = rf::run_training(cfg);
    const rf::TrainRecord& first = result.log.records.front();
    const rf::TrainRecord& last = result.log.records.back();
    // pinned from the first verified run of this configuration; the aligned
    // teacher is only partially reachable at this capacity, so the loss
    // plateaus well above zero instead of collapsing
    REQUIRE(last.loss == Catch::Approx(0.34607589296233865).epsilon(1e-6));
    REQUIRE(last.loss < 0.75 * first.loss);
    REQUIRE(std::isnan(last.kl_of_mask));
    REQUIRE(std::isfinite(last.mean_kl_parts));
}
