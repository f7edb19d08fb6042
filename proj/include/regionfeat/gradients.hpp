#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "regionfeat/attention.hpp"
#include "regionfeat/embedding.hpp"
#include "regionfeat/sampling.hpp"
#include "regionfeat/types.hpp"

namespace regionfeat {

// Gradients of sum(upstream * extract(...)) with respect to the feature map
// and every learnable tensor. Shapes mirror the primals.
struct GradientBundle {
    FeatureMap d_x;
    AttentionParams d_params;
};

// Backward through aggregation, softmax, both logit terms and the box
// pipeline, reusing the intermediates of one forward pass. d_x receives
// contributions only at sampled positions: the aggregation path (weights
// times upstream) and the appearance path (softmax-coupled logit gradients
// times the 1x1 kernel).
inline GradientBundle backward_from_cache(const FeatureMap& x, const ForwardCache& cache,
                                          const AttentionParams& params,
                                          const PartFeatureMatrix& upstream) {
    if (upstream.parts != params.parts || upstream.channels != params.feat_dim) {
        throw std::invalid_argument("upstream gradient shape must be K x C_f");
    }
    const std::size_t count = cache.positions.size();
    const int K = params.parts;
    const int Cg = params.geo_dim;
    const int Cf = params.feat_dim;
    const int Ce = params.embed_dim;

    GradientBundle out{FeatureMap(x.height, x.width, x.channels),
                       make_attention_params(K, Ce, Cg, Cf)};

    std::vector<Cell> cells(count);
    for (std::size_t j = 0; j < count; ++j) {
        cells[j] = detail::position_cell(cache.positions[j], x.height, x.width);
    }

    // dL/dw[k][j] = <upstream[k], x(p_j)>, then the softmax Jacobian inside
    // each part: t[k][j] = w*(dLdw - sum_j' w*dLdw).
    std::vector<double> t(static_cast<std::size_t>(K) * count);
    const auto cell_ptr = [&x](Cell c) {
        return x.data.data() + (static_cast<std::size_t>(c.y) * x.width + c.x) * x.channels;
    };
    const auto upstream_row = [&upstream](int k) {
        return upstream.data.data() + static_cast<std::size_t>(k) * upstream.channels;
    };
    for (int k = 0; k < K; ++k) {
        const double* up = upstream_row(k);
        double inner = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            const double* feat = cell_ptr(cells[j]);
            double acc = 0.0;
            for (int c = 0; c < Cf; ++c) acc += up[c] * feat[c];
            t[static_cast<std::size_t>(k) * count + j] = acc;  // holds dLdw for now
            inner += cache.weights.at(k, j) * acc;
        }
        for (std::size_t j = 0; j < count; ++j) {
            double& tj = t[static_cast<std::size_t>(k) * count + j];
            tj = cache.weights.at(k, j) * (tj - inner);
        }
    }

    // d_x, both paths, scattered to the sampled cells.
    for (std::size_t j = 0; j < count; ++j) {
        double* dst = &out.d_x.at(cells[j].y, cells[j].x, 0);
        for (int k = 0; k < K; ++k) {
            const double w = cache.weights.at(k, j);
            const double tk = t[static_cast<std::size_t>(k) * count + j];
            const double* up = upstream_row(k);
            const double* kernel = params.w_app.data() + static_cast<std::size_t>(k) * Cf;
            for (int c = 0; c < Cf; ++c) dst[c] += w * up[c] + tk * kernel[c];
        }
    }

    // d_w_app[k] = sum_j t[k][j] * x(p_j).
    for (int k = 0; k < K; ++k) {
        double* dk = out.d_params.w_app.data() + static_cast<std::size_t>(k) * Cf;
        for (std::size_t j = 0; j < count; ++j) {
            const double tk = t[static_cast<std::size_t>(k) * count + j];
            const double* feat = cell_ptr(cells[j]);
            for (int c = 0; c < Cf; ++c) dk[c] += tk * feat[c];
        }
    }

    // Geometric term G = <q_k, m_j>: dq and dm.
    std::vector<double> dq(static_cast<std::size_t>(K) * Cg, 0.0);
    std::vector<double> dm(count * static_cast<std::size_t>(Cg), 0.0);
    for (int k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < count; ++j) {
            const double tk = t[static_cast<std::size_t>(k) * count + j];
            const double* mj = cache.m.data() + j * Cg;
            const double* qk = cache.q.data() + static_cast<std::size_t>(k) * Cg;
            double* dqk = dq.data() + static_cast<std::size_t>(k) * Cg;
            double* dmj = dm.data() + j * Cg;
            for (int g = 0; g < Cg; ++g) {
                dqk[g] += tk * mj[g];
                dmj[g] += tk * qk[g];
            }
        }
    }

    // q_k = W_box_hat[k] * e_hat: dW_box_hat and d_e_hat.
    std::vector<double> d_e_hat(static_cast<std::size_t>(Ce), 0.0);
    for (int k = 0; k < K; ++k) {
        const double* dqk = dq.data() + static_cast<std::size_t>(k) * Cg;
        for (int g = 0; g < Cg; ++g) {
            const std::size_t row = (static_cast<std::size_t>(k) * Cg + g) * Ce;
            const double* wrow = params.w_box_hat.data() + row;
            double* drow = out.d_params.w_box_hat.data() + row;
            for (int e = 0; e < Ce; ++e) {
                drow[e] += dqk[g] * cache.e_hat[e];
                d_e_hat[e] += dqk[g] * wrow[e];
            }
        }
    }

    // e_hat = V_box * e_box: dV_box (e_box is a constant of the RoI).
    for (int e = 0; e < Ce; ++e) {
        double* drow = out.d_params.v_box.data() + static_cast<std::size_t>(e) * (4 * Ce);
        for (int f = 0; f < 4 * Ce; ++f) drow[f] += d_e_hat[e] * cache.e_box[f];
    }

    // m_j = W_im * E_im(p_j): dW_im, re-deriving the position embeddings.
    const EmbeddingConfig cfg = embedding_config(params);
    std::vector<double> e_im(2 * static_cast<std::size_t>(Ce));
    for (std::size_t j = 0; j < count; ++j) {
        embed_scalar_into(cache.positions[j].u, cfg, e_im.data());
        embed_scalar_into(cache.positions[j].v, cfg, e_im.data() + Ce);
        const double* dmj = dm.data() + j * Cg;
        for (int g = 0; g < Cg; ++g) {
            double* drow = out.d_params.w_im.data() + static_cast<std::size_t>(g) * (2 * Ce);
            for (int f = 0; f < 2 * Ce; ++f) drow[f] += dmj[g] * e_im[f];
        }
    }

    return out;
}

inline GradientBundle backward_extract(const FeatureMap& x, const RoI& b,
                                       const AttentionParams& params, const SupportSpec& spec,
                                       const PartFeatureMatrix& upstream) {
    ForwardCache cache;
    extract(x, b, params, spec, &cache);
    return backward_from_cache(x, cache, params, upstream);
}

// Per-tensor maxima of the relative error between analytic gradients and
// central finite differences.
struct FiniteDiffReport {
    double d_x = 0.0;
    double d_v_box = 0.0;
    double d_w_box_hat = 0.0;
    double d_w_im = 0.0;
    double d_w_app = 0.0;

    double max_rel_error() const {
        double m = d_x;
        for (double v : {d_v_box, d_w_box_hat, d_w_im, d_w_app}) m = std::max(m, v);
        return m;
    }
};

namespace detail {

inline double rel_error(double a, double b) {
    return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

}  // namespace detail

// Central-difference sweep over every coordinate of x and all four parameter
// tensors, against a fixed random upstream gradient. 64-bit throughout; the
// default eps of 1e-3 balances truncation against cancellation at this
// precision.
inline FiniteDiffReport finite_diff_check(const FeatureMap& x, const RoI& b,
                                          const AttentionParams& params,
                                          const SupportSpec& spec, double eps = 1e-3,
                                          std::uint64_t seed = 0) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite-difference eps must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PartFeatureMatrix upstream(params.parts, params.feat_dim);
    for (double& v : upstream.data) v = gauss(rng);

    const GradientBundle analytic = backward_extract(x, b, params, spec, upstream);

    const auto loss = [&](const FeatureMap& xv, const AttentionParams& pv) {
        const PartFeatureMatrix y = extract(xv, b, pv, spec);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) acc += upstream.data[i] * y.data[i];
        return acc;
    };

    FiniteDiffReport report;
    FeatureMap xv = x;
    for (std::size_t i = 0; i < xv.data.size(); ++i) {
        const double keep = xv.data[i];
        xv.data[i] = keep + eps;
        const double hi = loss(xv, params);
        xv.data[i] = keep - eps;
        const double lo = loss(xv, params);
        xv.data[i] = keep;
        report.d_x = std::max(report.d_x,
                              detail::rel_error(analytic.d_x.data[i], (hi - lo) / (2 * eps)));
    }

    AttentionParams pv = params;
    const auto sweep = [&](std::vector<double> AttentionParams::* member, double FiniteDiffReport::* slot) {
        std::vector<double>& live = pv.*member;
        const std::vector<double>& grad = analytic.d_params.*member;
        for (std::size_t i = 0; i < live.size(); ++i) {
            const double keep = live[i];
            live[i] = keep + eps;
            const double hi = loss(x, pv);
            live[i] = keep - eps;
            const double lo = loss(x, pv);
            live[i] = keep;
            report.*slot =
                std::max(report.*slot, detail::rel_error(grad[i], (hi - lo) / (2 * eps)));
        }
    };
    sweep(&AttentionParams::v_box, &FiniteDiffReport::d_v_box);
    sweep(&AttentionParams::w_box_hat, &FiniteDiffReport::d_w_box_hat);
    sweep(&AttentionParams::w_im, &FiniteDiffReport::d_w_im);
    sweep(&AttentionParams::w_app, &FiniteDiffReport::d_w_app);
    return report;
}

}  // namespace regionfeat
