#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "regionfeat/attention.hpp"
#include "regionfeat/gradients.hpp"
#include "regionfeat/metrics.hpp"
#include "regionfeat/pooling.hpp"
#include "regionfeat/sampling.hpp"
#include "regionfeat/types.hpp"

namespace regionfeat {

// Toy-scale surrogate tasks: distill a hand-crafted pooling oracle, or fit
// the masked-pool output of a synthetic object whose channels carry a mean
// shift the appearance term can latch onto.
enum class TrainTask { distill_aligned, distill_regular, mask_fit };

inline const char* task_name(TrainTask t) {
    switch (t) {
        case TrainTask::distill_aligned: return "distill_aligned";
        case TrainTask::distill_regular: return "distill_regular";
        case TrainTask::mask_fit: return "mask_fit";
    }
    return "unknown";
}

inline TrainTask parse_task(const std::string& name) {
    if (name == "distill_aligned") return TrainTask::distill_aligned;
    if (name == "distill_regular") return TrainTask::distill_regular;
    if (name == "mask_fit") return TrainTask::mask_fit;
    throw std::invalid_argument("unknown training task: " + name);
}

struct TrainConfig {
    TrainTask task = TrainTask::mask_fit;
    std::uint64_t seed = 0;
    int steps = 2000;
    double base_lr = 2e-3;
    double decay_point = 2.0 / 3.0;  // fraction of steps at base_lr
    double decay_factor = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double init_sigma = 0.01;
    int log_interval = 50;

    // scene generator
    int map_height = 20;
    int map_width = 20;
    int feat_dim = 8;
    int grid_rows = 3;
    int grid_cols = 3;  // K = grid_rows * grid_cols
    int rois_per_step = 2;
    int embed_dim = 16;
    int geo_dim = 8;
    double object_shift = 2.0;  // mask_fit channel mean shift
    int min_object = 6;
    int max_object = 10;

    int parts() const { return grid_rows * grid_cols; }
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (!(cfg.init_sigma > 0.0)) throw std::invalid_argument("init sigma must be positive");
    if (cfg.base_lr < 0.0) throw std::invalid_argument("learning rate must be non-negative");
    if (cfg.log_interval < 1) throw std::invalid_argument("log interval must be >= 1");
    if (cfg.map_height < 4 || cfg.map_width < 4 || cfg.feat_dim < 1) {
        throw std::invalid_argument("scene dims too small");
    }
    if (cfg.grid_rows < 1 || cfg.grid_cols < 1 || cfg.rois_per_step < 1) {
        throw std::invalid_argument("grid and RoI counts must be >= 1");
    }
    if (cfg.embed_dim < 2 || cfg.embed_dim % 2 != 0 || cfg.geo_dim < 1) {
        throw std::invalid_argument("embed_dim must be even >= 2 and geo_dim >= 1");
    }
    if (cfg.min_object < 2 || cfg.max_object < cfg.min_object ||
        cfg.max_object > cfg.map_width - 2 || cfg.max_object > cfg.map_height - 2) {
        throw std::invalid_argument("object size range does not fit the map");
    }
}

// Gaussian init, one seeded stream, fixed draw order:
// v_box, then w_box_hat, then w_im, then w_app.
inline AttentionParams init_params(int parts, int embed_dim, int geo_dim, int feat_dim,
                                   double sigma, std::mt19937_64& rng) {
    AttentionParams p = make_attention_params(parts, embed_dim, geo_dim, feat_dim);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& v : p.v_box) v = gauss(rng);
    for (double& v : p.w_box_hat) v = gauss(rng);
    for (double& v : p.w_im) v = gauss(rng);
    for (double& v : p.w_app) v = gauss(rng);
    return p;
}

// Momentum SGD with L2 coupled into the gradient:
//   v <- momentum*v + (g + wd*p);  p <- p - lr*v
inline void sgd_update(std::vector<double>& param, std::vector<double>& velocity,
                       const std::vector<double>& grad, double lr, double momentum,
                       double weight_decay) {
    if (param.size() != velocity.size() || param.size() != grad.size()) {
        throw std::invalid_argument("sgd_update size mismatch");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = momentum * velocity[i] + (grad[i] + weight_decay * param[i]);
        param[i] -= lr * velocity[i];
    }
}

struct SgdState {
    AttentionParams velocity;
};

inline void sgd_step(AttentionParams& params, const AttentionParams& grads, double lr,
                     double momentum, double weight_decay, SgdState& state) {
    sgd_update(params.v_box, state.velocity.v_box, grads.v_box, lr, momentum, weight_decay);
    sgd_update(params.w_box_hat, state.velocity.w_box_hat, grads.w_box_hat, lr, momentum,
               weight_decay);
    sgd_update(params.w_im, state.velocity.w_im, grads.w_im, lr, momentum, weight_decay);
    sgd_update(params.w_app, state.velocity.w_app, grads.w_app, lr, momentum, weight_decay);
}

struct TrainRecord {
    int step = 0;
    double loss = 0.0;
    double mean_kl_parts = 0.0;
    double kl_of_mask = std::numeric_limits<double>::quiet_NaN();  // mask_fit only
    double in_roi_mass = 0.0;  // weight mass at cells inside the RoI, averaged over parts
};

struct TrainLog {
    std::vector<TrainRecord> records;
};

struct TrainResult {
    AttentionParams params;
    TrainLog log;
};

namespace detail {

struct TrainScene {
    FeatureMap x;
    std::vector<RoI> rois;
    InstanceMask mask;  // mask_fit only
};

// One scene per step. Draw order is fixed: map values in storage order,
// then the object rectangle (mask_fit) or the RoI coordinates (distill).
inline TrainScene make_scene(const TrainConfig& cfg, std::mt19937_64& rng) {
    TrainScene scene;
    scene.x = FeatureMap(cfg.map_height, cfg.map_width, cfg.feat_dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : scene.x.data) v = gauss(rng);

    if (cfg.task == TrainTask::mask_fit) {
        std::uniform_int_distribution<int> size_dist(cfg.min_object, cfg.max_object);
        const int ow = size_dist(rng);
        const int oh = size_dist(rng);
        const int ox = std::uniform_int_distribution<int>(0, cfg.map_width - ow)(rng);
        const int oy = std::uniform_int_distribution<int>(0, cfg.map_height - oh)(rng);
        scene.mask = InstanceMask(cfg.map_height, cfg.map_width);
        for (int y = oy; y < oy + oh; ++y) {
            for (int x = ox; x < ox + ow; ++x) {
                scene.mask.at(y, x) = 1;
                for (int c = 0; c < cfg.feat_dim; ++c) {
                    scene.x.at(y, x, c) += cfg.object_shift;
                }
            }
        }
        // the RoI pads the object box by one cell, clipped to the map
        RoI b;
        b.x1 = std::max(0, ox - 1);
        b.y1 = std::max(0, oy - 1);
        b.x2 = std::min(cfg.map_width, ox + ow + 1);
        b.y2 = std::min(cfg.map_height, oy + oh + 1);
        scene.rois.push_back(b);
    } else {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int r = 0; r < cfg.rois_per_step; ++r) {
            const double wmax = std::min(12.0, static_cast<double>(cfg.map_width) - 1.0);
            const double hmax = std::min(12.0, static_cast<double>(cfg.map_height) - 1.0);
            const double bw = 4.0 + (wmax - 4.0) * unit(rng);
            const double bh = 4.0 + (hmax - 4.0) * unit(rng);
            RoI b;
            b.x1 = unit(rng) * (cfg.map_width - bw);
            b.y1 = unit(rng) * (cfg.map_height - bh);
            b.x2 = b.x1 + bw;
            b.y2 = b.y1 + bh;
            scene.rois.push_back(b);
        }
    }
    return scene;
}

inline PartFeatureMatrix scene_target(const TrainConfig& cfg, const TrainScene& scene,
                                      const RoI& b) {
    const BinGrid grid = make_bin_grid(b, cfg.grid_rows, cfg.grid_cols);
    switch (cfg.task) {
        case TrainTask::distill_aligned: return aligned_pool(scene.x, b, grid, 1);
        case TrainTask::distill_regular: return regular_pool(scene.x, b, grid, PoolMode::avg);
        case TrainTask::mask_fit: return masked_pool(scene.x, b, grid, scene.mask);
    }
    throw std::logic_error("unreachable task");
}

inline SupportSpec task_support(const TrainConfig& cfg) {
    // mask_fit must see context beyond the object to learn to exclude it;
    // distillation targets live entirely inside the RoI.
    if (cfg.task == TrainTask::mask_fit) return SupportSpec::whole_image();
    return SupportSpec::roi_1x();
}

inline double in_roi_mass(const WeightField& wf, const RoI& b) {
    double mass = 0.0;
    for (std::size_t j = 0; j < wf.positions.size(); ++j) {
        const double cu = wf.positions[j].u + 0.5;
        const double cv = wf.positions[j].v + 0.5;
        if (cu >= b.x1 && cu < b.x2 && cv >= b.y1 && cv < b.y2) {
            for (int k = 0; k < wf.parts; ++k) mass += wf.at(k, j);
        }
    }
    return mass / static_cast<double>(wf.parts);
}

inline void accumulate(AttentionParams& into, const AttentionParams& add) {
    for (std::size_t i = 0; i < into.v_box.size(); ++i) into.v_box[i] += add.v_box[i];
    for (std::size_t i = 0; i < into.w_box_hat.size(); ++i) {
        into.w_box_hat[i] += add.w_box_hat[i];
    }
    for (std::size_t i = 0; i < into.w_im.size(); ++i) into.w_im[i] += add.w_im[i];
    for (std::size_t i = 0; i < into.w_app.size(); ++i) into.w_app[i] += add.w_app[i];
}

}  // namespace detail

// Deterministic training loop: one scene per step, mean-squared-error to the
// task oracle, momentum SGD with the stepped learning-rate schedule. Records
// are appended every log_interval steps (pre-update, so the step-0 record
// reflects the initialization) and always at the final step.
inline TrainResult run_training(const TrainConfig& cfg) {
    validate_train_config(cfg);
    std::mt19937_64 rng(cfg.seed);
    TrainResult result;
    result.params = init_params(cfg.parts(), cfg.embed_dim, cfg.geo_dim, cfg.feat_dim,
                                cfg.init_sigma, rng);
    SgdState state{make_attention_params(cfg.parts(), cfg.embed_dim, cfg.geo_dim,
                                         cfg.feat_dim)};
    const SupportSpec support = detail::task_support(cfg);

    for (int step = 0; step < cfg.steps; ++step) {
        const detail::TrainScene scene = detail::make_scene(cfg, rng);
        AttentionParams grads =
            make_attention_params(cfg.parts(), cfg.embed_dim, cfg.geo_dim, cfg.feat_dim);
        double loss = 0.0;
        ForwardCache first_cache;
        const double norm = 1.0 / (static_cast<double>(scene.rois.size()) * cfg.parts() *
                                   cfg.feat_dim);
        for (std::size_t r = 0; r < scene.rois.size(); ++r) {
            const RoI& b = scene.rois[r];
            ForwardCache cache;
            const PartFeatureMatrix y = extract(scene.x, b, result.params, support, &cache);
            const PartFeatureMatrix target = detail::scene_target(cfg, scene, b);
            PartFeatureMatrix upstream(cfg.parts(), cfg.feat_dim);
            for (std::size_t i = 0; i < y.data.size(); ++i) {
                const double diff = y.data[i] - target.data[i];
                loss += norm * diff * diff;
                upstream.data[i] = 2.0 * norm * diff;
            }
            const GradientBundle g =
                backward_from_cache(scene.x, cache, result.params, upstream);
            detail::accumulate(grads, g.d_params);
            if (r == 0) first_cache = std::move(cache);
        }
        if (!std::isfinite(loss)) {
            throw NumericalError("training diverged: non-finite loss at step " +
                                 std::to_string(step));
        }

        const bool final_step = step == cfg.steps - 1;
        if (step % cfg.log_interval == 0 || final_step) {
            TrainRecord rec;
            rec.step = step;
            rec.loss = loss;
            const DenseWeightMap wm =
                scatter_weights(first_cache.weights, cfg.map_height, cfg.map_width);
            rec.mean_kl_parts = cfg.parts() >= 2 ? mean_kl_between_parts(wm) : 0.0;
            if (cfg.task == TrainTask::mask_fit) {
                rec.kl_of_mask = kl_of_mask(wm, scene.mask);
            }
            rec.in_roi_mass = detail::in_roi_mass(first_cache.weights, scene.rois.front());
            result.log.records.push_back(rec);
        }

        const double lr = static_cast<double>(step) <
                                  cfg.decay_point * static_cast<double>(cfg.steps)
                              ? cfg.base_lr
                              : cfg.base_lr * cfg.decay_factor;
        sgd_step(result.params, grads, lr, cfg.momentum, cfg.weight_decay, state);
    }
    return result;
}

}  // namespace regionfeat
