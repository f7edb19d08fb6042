#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "regionfeat/embedding.hpp"
#include "regionfeat/sampling.hpp"
#include "regionfeat/types.hpp"

namespace regionfeat {

// Learnable tensors of the attention extractor. All matrices are row-major.
//   v_box      : C_E x 4C_E   shared box-embedding reducer
//   w_box_hat  : K x C_g x C_E  per-part box transform (decomposed form)
//   w_im       : C_g x 2C_E   position-embedding transform, shared across parts
//   w_app      : K x C_f      1x1 convolution kernel for the appearance term
struct AttentionParams {
    int parts = 0;      // K
    int embed_dim = 0;  // C_E
    int geo_dim = 0;    // C_g
    int feat_dim = 0;   // C_f
    std::vector<double> v_box;
    std::vector<double> w_box_hat;
    std::vector<double> w_im;
    std::vector<double> w_app;
};

inline AttentionParams make_attention_params(int parts, int embed_dim, int geo_dim,
                                             int feat_dim) {
    if (parts <= 0 || embed_dim <= 0 || embed_dim % 2 != 0 || geo_dim <= 0 || feat_dim <= 0) {
        throw std::invalid_argument(
            "attention params need positive dims and an even embed_dim");
    }
    AttentionParams p;
    p.parts = parts;
    p.embed_dim = embed_dim;
    p.geo_dim = geo_dim;
    p.feat_dim = feat_dim;
    p.v_box.assign(static_cast<std::size_t>(embed_dim) * (4 * embed_dim), 0.0);
    p.w_box_hat.assign(static_cast<std::size_t>(parts) * geo_dim * embed_dim, 0.0);
    p.w_im.assign(static_cast<std::size_t>(geo_dim) * (2 * embed_dim), 0.0);
    p.w_app.assign(static_cast<std::size_t>(parts) * feat_dim, 0.0);
    return p;
}

inline void validate_attention_params(const AttentionParams& p) {
    if (p.parts <= 0 || p.embed_dim <= 0 || p.embed_dim % 2 != 0 || p.geo_dim <= 0 ||
        p.feat_dim <= 0) {
        throw std::invalid_argument(
            "attention params need positive dims and an even embed_dim");
    }
    if (p.v_box.size() != static_cast<std::size_t>(p.embed_dim) * (4 * p.embed_dim) ||
        p.w_box_hat.size() != static_cast<std::size_t>(p.parts) * p.geo_dim * p.embed_dim ||
        p.w_im.size() != static_cast<std::size_t>(p.geo_dim) * (2 * p.embed_dim) ||
        p.w_app.size() != static_cast<std::size_t>(p.parts) * p.feat_dim) {
        throw std::invalid_argument("attention tensor sizes do not match the declared dims");
    }
    for (const auto* t : {&p.v_box, &p.w_box_hat, &p.w_im, &p.w_app}) {
        for (double v : *t) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite attention param");
        }
    }
}

inline EmbeddingConfig embedding_config(const AttentionParams& p) {
    return EmbeddingConfig(p.embed_dim, p.geo_dim);
}

// Geometric and appearance logits, each parts x |positions| row-major.
struct AttentionLogits {
    int parts = 0;
    std::size_t count = 0;
    std::vector<double> g;
    std::vector<double> a;
};

namespace detail {

inline void matvec(const double* a, int rows, int cols, const double* x, double* out) {
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = a + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

inline Cell position_cell(const Position& p, int height, int width) {
    const int cx = static_cast<int>(std::llround(p.u));
    const int cy = static_cast<int>(std::llround(p.v));
    if (cx < 0 || cx >= width || cy < 0 || cy >= height || p.u != cx || p.v != cy) {
        throw std::invalid_argument("position is not an integer cell inside the map");
    }
    return Cell{cx, cy};
}

// W_im * embed_position(p); `scratch` must hold 2*C_E entries.
inline void im_key_into(const Position& p, const AttentionParams& params,
                        const EmbeddingConfig& cfg, double* scratch, double* out) {
    embed_scalar_into(p.u, cfg, scratch);
    embed_scalar_into(p.v, cfg, scratch + cfg.embed_dim);
    matvec(params.w_im.data(), params.geo_dim, 2 * params.embed_dim, scratch, out);
}

// Appearance responses of one cell for all parts: out[k] = <w_app[k], x(cell)>.
inline void app_response_into(const FeatureMap& x, Cell cell, const AttentionParams& params,
                              double* out) {
    const double* feat =
        x.data.data() + (static_cast<std::size_t>(cell.y) * x.width + cell.x) * x.channels;
    for (int k = 0; k < params.parts; ++k) {
        const double* kernel = params.w_app.data() + static_cast<std::size_t>(k) * params.feat_dim;
        double acc = 0.0;
        for (int c = 0; c < params.feat_dim; ++c) acc += kernel[c] * feat[c];
        out[k] = acc;
    }
}

// Per-RoI box pipeline: e_box -> e_hat = V_box*e_box -> q_k = W_box_hat[k]*e_hat.
inline void box_keys_into(const RoI& b, const AttentionParams& params,
                          const EmbeddingConfig& cfg, std::vector<double>& e_box,
                          std::vector<double>& e_hat, std::vector<double>& q) {
    e_box.resize(4 * static_cast<std::size_t>(params.embed_dim));
    embed_scalar_into(b.x1, cfg, e_box.data());
    embed_scalar_into(b.y1, cfg, e_box.data() + params.embed_dim);
    embed_scalar_into(b.x2, cfg, e_box.data() + 2 * params.embed_dim);
    embed_scalar_into(b.y2, cfg, e_box.data() + 3 * params.embed_dim);
    e_hat.resize(static_cast<std::size_t>(params.embed_dim));
    matvec(params.v_box.data(), params.embed_dim, 4 * params.embed_dim, e_box.data(),
           e_hat.data());
    q.resize(static_cast<std::size_t>(params.parts) * params.geo_dim);
    for (int k = 0; k < params.parts; ++k) {
        matvec(params.w_box_hat.data() + static_cast<std::size_t>(k) * params.geo_dim *
                                             params.embed_dim,
               params.geo_dim, params.embed_dim, e_hat.data(),
               q.data() + static_cast<std::size_t>(k) * params.geo_dim);
    }
}

}  // namespace detail

// G[k][j] = <W_box_hat[k] * (V_box * E_box(b)), W_im * E_im(p_j)>
inline std::vector<double> geometric_logits(const RoI& b, const std::vector<Position>& positions,
                                            const AttentionParams& params) {
    validate_roi(b);
    const EmbeddingConfig cfg = embedding_config(params);
    std::vector<double> e_box, e_hat, q;
    detail::box_keys_into(b, params, cfg, e_box, e_hat, q);

    const std::size_t count = positions.size();
    std::vector<double> g(static_cast<std::size_t>(params.parts) * count);
    std::vector<double> scratch(2 * static_cast<std::size_t>(params.embed_dim));
    std::vector<double> m(static_cast<std::size_t>(params.geo_dim));
    for (std::size_t j = 0; j < count; ++j) {
        detail::im_key_into(positions[j], params, cfg, scratch.data(), m.data());
        for (int k = 0; k < params.parts; ++k) {
            const double* qk = q.data() + static_cast<std::size_t>(k) * params.geo_dim;
            double acc = 0.0;
            for (int gi = 0; gi < params.geo_dim; ++gi) acc += qk[gi] * m[gi];
            g[static_cast<std::size_t>(k) * count + j] = acc;
        }
    }
    return g;
}

// A[k][j] = <w_app[k], x(p_j)>   (a 1x1 convolution over sampled positions)
inline std::vector<double> appearance_logits(const FeatureMap& x,
                                             const std::vector<Position>& positions,
                                             const AttentionParams& params) {
    if (params.feat_dim != x.channels) {
        throw std::invalid_argument("w_app channel count does not match the feature map");
    }
    const std::size_t count = positions.size();
    std::vector<double> a(static_cast<std::size_t>(params.parts) * count);
    std::vector<double> resp(static_cast<std::size_t>(params.parts));
    for (std::size_t j = 0; j < count; ++j) {
        const Cell cell = detail::position_cell(positions[j], x.height, x.width);
        detail::app_response_into(x, cell, params, resp.data());
        for (int k = 0; k < params.parts; ++k) {
            a[static_cast<std::size_t>(k) * count + j] = resp[k];
        }
    }
    return a;
}

// Per-part softmax of G + A over the sampled positions, max-subtracted for
// stability against unbounded logits.
inline WeightField combine_weights(const std::vector<double>& g, const std::vector<double>& a,
                                   int parts, const std::vector<Position>& positions) {
    const std::size_t count = positions.size();
    if (parts <= 0 || count == 0) {
        throw std::invalid_argument("combine_weights needs at least one part and one position");
    }
    if (g.size() != static_cast<std::size_t>(parts) * count || a.size() != g.size()) {
        throw std::invalid_argument("logit matrices must both be parts x positions");
    }
    WeightField wf = make_weight_field(parts, std::vector<Position>(positions));
    for (int k = 0; k < parts; ++k) {
        const std::size_t row = static_cast<std::size_t>(k) * count;
        double peak = g[row] + a[row];
        for (std::size_t j = 1; j < count; ++j) {
            peak = std::max(peak, g[row + j] + a[row + j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            const double e = std::exp(g[row + j] + a[row + j] - peak);
            wf.at(k, j) = e;
            total += e;
        }
        const double inv = 1.0 / total;
        for (std::size_t j = 0; j < count; ++j) wf.at(k, j) *= inv;
    }
    return wf;
}

// Generic weighted aggregation: y[k][c] = sum_j w[k][j] * x(p_j)[c].
// The per-position weight is a scalar broadcast across channels.
inline PartFeatureMatrix aggregate(const FeatureMap& x, const WeightField& wf) {
    PartFeatureMatrix y(wf.parts, x.channels);
    std::vector<Cell> cells;
    cells.reserve(wf.positions.size());
    for (const Position& p : wf.positions) {
        cells.push_back(detail::position_cell(p, x.height, x.width));
    }
    for (int k = 0; k < wf.parts; ++k) {
        double* row = &y.at(k, 0);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const double w = wf.at(k, j);
            const double* feat =
                x.data.data() +
                (static_cast<std::size_t>(cells[j].y) * x.width + cells[j].x) * x.channels;
            for (int c = 0; c < x.channels; ++c) row[c] += w * feat[c];
        }
    }
    return y;
}

// Intermediates of one extraction, retained for the backward pass.
struct ForwardCache {
    std::vector<Position> positions;
    std::vector<double> e_box;  // 4C_E
    std::vector<double> e_hat;  // C_E
    std::vector<double> q;      // K x C_g box keys
    std::vector<double> m;      // |positions| x C_g position keys
    AttentionLogits logits;
    WeightField weights;
};

// Shared per-position precomputation for many RoIs on one map: position keys
// W_im*E_im and appearance responses depend only on x and p, never on the RoI.
struct PositionCache {
    int height = 0;
    int width = 0;
    int geo_dim = 0;
    int parts = 0;
    std::vector<double> im_keys;  // cell-major: (y*W + x)*C_g
    std::vector<double> app;      // cell-major: (y*W + x)*K
};

inline PositionCache build_position_cache(const FeatureMap& x, const AttentionParams& params) {
    if (params.feat_dim != x.channels) {
        throw std::invalid_argument("w_app channel count does not match the feature map");
    }
    const EmbeddingConfig cfg = embedding_config(params);
    PositionCache cache;
    cache.height = x.height;
    cache.width = x.width;
    cache.geo_dim = params.geo_dim;
    cache.parts = params.parts;
    const std::size_t cells = static_cast<std::size_t>(x.height) * x.width;
    cache.im_keys.resize(cells * params.geo_dim);
    cache.app.resize(cells * params.parts);
    std::vector<double> scratch(2 * static_cast<std::size_t>(params.embed_dim));
    for (int cy = 0; cy < x.height; ++cy) {
        for (int cx = 0; cx < x.width; ++cx) {
            const std::size_t idx = static_cast<std::size_t>(cy) * x.width + cx;
            const Position p{static_cast<double>(cx), static_cast<double>(cy)};
            detail::im_key_into(p, params, cfg, scratch.data(),
                                cache.im_keys.data() + idx * params.geo_dim);
            detail::app_response_into(x, Cell{cx, cy}, params,
                                      cache.app.data() + idx * params.parts);
        }
    }
    return cache;
}

namespace detail {

// Core forward over an explicit position set. When `shared` is non-null the
// per-position keys/responses are gathered from it; the arithmetic is
// identical either way, so cached and direct paths agree bit-for-bit.
inline PartFeatureMatrix extract_core(const FeatureMap& x, const RoI& b,
                                      std::vector<Position> positions,
                                      const AttentionParams& params,
                                      const PositionCache* shared, ForwardCache* cache) {
    validate_roi(b);
    if (params.feat_dim != x.channels) {
        throw std::invalid_argument("w_app channel count does not match the feature map");
    }
    if (positions.empty()) {
        throw std::invalid_argument("extraction needs at least one sampled position");
    }
    const EmbeddingConfig cfg = embedding_config(params);
    const std::size_t count = positions.size();

    std::vector<double> e_box, e_hat, q;
    box_keys_into(b, params, cfg, e_box, e_hat, q);

    AttentionLogits logits;
    logits.parts = params.parts;
    logits.count = count;
    logits.g.resize(static_cast<std::size_t>(params.parts) * count);
    logits.a.resize(logits.g.size());
    std::vector<double> m(count * static_cast<std::size_t>(params.geo_dim));
    std::vector<double> scratch(2 * static_cast<std::size_t>(params.embed_dim));
    std::vector<double> resp(static_cast<std::size_t>(params.parts));
    for (std::size_t j = 0; j < count; ++j) {
        const Cell cell = position_cell(positions[j], x.height, x.width);
        double* mj = m.data() + j * params.geo_dim;
        const double* aj;
        if (shared != nullptr) {
            const std::size_t idx = static_cast<std::size_t>(cell.y) * x.width + cell.x;
            const double* key = shared->im_keys.data() + idx * params.geo_dim;
            for (int gi = 0; gi < params.geo_dim; ++gi) mj[gi] = key[gi];
            aj = shared->app.data() + idx * params.parts;
        } else {
            im_key_into(positions[j], params, cfg, scratch.data(), mj);
            app_response_into(x, cell, params, resp.data());
            aj = resp.data();
        }
        for (int k = 0; k < params.parts; ++k) {
            const double* qk = q.data() + static_cast<std::size_t>(k) * params.geo_dim;
            double acc = 0.0;
            for (int gi = 0; gi < params.geo_dim; ++gi) acc += qk[gi] * mj[gi];
            logits.g[static_cast<std::size_t>(k) * count + j] = acc;
            logits.a[static_cast<std::size_t>(k) * count + j] = aj[k];
        }
    }

    WeightField wf = combine_weights(logits.g, logits.a, params.parts, positions);
    PartFeatureMatrix y = aggregate(x, wf);
    if (cache != nullptr) {
        cache->positions = std::move(positions);
        cache->e_box = std::move(e_box);
        cache->e_hat = std::move(e_hat);
        cache->q = std::move(q);
        cache->m = std::move(m);
        cache->logits = std::move(logits);
        cache->weights = std::move(wf);
    }
    return y;
}

}  // namespace detail

// Full pipeline over an explicit position set (plan order preserved).
inline PartFeatureMatrix extract_at_positions(const FeatureMap& x, const RoI& b,
                                              std::vector<Position> positions,
                                              const AttentionParams& params,
                                              ForwardCache* cache = nullptr) {
    return detail::extract_core(x, b, std::move(positions), params, nullptr, cache);
}

// Full operator: plan the support, score it, normalize, aggregate.
inline PartFeatureMatrix extract(const FeatureMap& x, const RoI& b,
                                 const AttentionParams& params, const SupportSpec& spec,
                                 ForwardCache* cache = nullptr) {
    const SamplingPlan plan = build_plan(b, x.height, x.width, spec);
    return detail::extract_core(x, b, plan.all_positions(), params, nullptr, cache);
}

// Same result as extract(), bit-for-bit, but reads per-position work from a
// shared cache; intended for many-RoI batches.
inline PartFeatureMatrix extract_cached(const FeatureMap& x, const RoI& b,
                                        const AttentionParams& params, const SupportSpec& spec,
                                        const PositionCache& shared,
                                        ForwardCache* cache = nullptr) {
    if (shared.height != x.height || shared.width != x.width ||
        shared.geo_dim != params.geo_dim || shared.parts != params.parts) {
        throw std::invalid_argument("position cache does not match the map or params");
    }
    const SamplingPlan plan = build_plan(b, x.height, x.width, spec);
    return detail::extract_core(x, b, plan.all_positions(), params, &shared, cache);
}

inline std::vector<PartFeatureMatrix> extract_batch(const FeatureMap& x,
                                                    const std::vector<RoI>& rois,
                                                    const AttentionParams& params,
                                                    const SupportSpec& spec) {
    const PositionCache shared = build_position_cache(x, params);
    std::vector<PartFeatureMatrix> out;
    out.reserve(rois.size());
    for (const RoI& b : rois) out.push_back(extract_cached(x, b, params, spec, shared));
    return out;
}

}  // namespace regionfeat
