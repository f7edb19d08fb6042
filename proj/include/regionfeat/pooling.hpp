#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "regionfeat/geometry.hpp"
#include "regionfeat/types.hpp"

namespace regionfeat {

enum class PoolMode { avg, max };

// Learnt per-bin displacements (feature-map units, unbounded).
struct OffsetField {
    std::vector<double> du;
    std::vector<double> dv;

    static OffsetField zeros(int parts) {
        OffsetField f;
        f.du.assign(parts, 0.0);
        f.dv.assign(parts, 0.0);
        return f;
    }
};

// Single affine map from a flattened K*C_f initial region feature to 2K
// offsets, laid out as (du_0, dv_0, du_1, dv_1, ...).
struct OffsetPredictorParams {
    int parts = 0;
    int channels = 0;
    std::vector<double> weight;  // (2K) x (K*C_f), row-major
    std::vector<double> bias;    // 2K
};

namespace detail {

inline std::vector<Cell> in_map_cells(const Bin& bin, int height, int width) {
    std::vector<Cell> cells;
    cells.reserve(bin.cells.size());
    for (const Cell& c : bin.cells) {
        if (c.x >= 0 && c.x < width && c.y >= 0 && c.y < height) cells.push_back(c);
    }
    return cells;
}

}  // namespace detail

// Regular grid pooling: per bin and channel, the mean (or max) of x over the
// bin's cell set. A bin with no in-map cells falls back to the single cell
// nearest its center.
inline PartFeatureMatrix regular_pool(const FeatureMap& x, const RoI& b, const BinGrid& grid,
                                      PoolMode mode = PoolMode::avg) {
    (void)b;
    PartFeatureMatrix y(grid.parts(), x.channels);
    for (int k = 0; k < grid.parts(); ++k) {
        const Bin& bin = grid.bins[k];
        std::vector<Cell> cells = detail::in_map_cells(bin, x.height, x.width);
        if (cells.empty()) {
            cells.push_back(nearest_cell(bin.center_u, bin.center_v, x.height, x.width));
        }
        if (mode == PoolMode::avg) {
            const double inv = 1.0 / static_cast<double>(cells.size());
            for (const Cell& c : cells) {
                for (int ch = 0; ch < x.channels; ++ch) {
                    y.at(k, ch) += x.at(c.y, c.x, ch);
                }
            }
            for (int ch = 0; ch < x.channels; ++ch) y.at(k, ch) *= inv;
        } else {
            for (int ch = 0; ch < x.channels; ++ch) {
                double m = -std::numeric_limits<double>::infinity();
                for (const Cell& c : cells) m = std::max(m, x.at(c.y, c.x, ch));
                y.at(k, ch) = m;
            }
        }
    }
    return y;
}

// Aligned pooling: bilinear interpolation at each bin's center (1 sample) or
// the average over the bin's 2x2 regular sub-grid (4 samples). Sample points
// falling outside the map are clamped to the border.
inline PartFeatureMatrix aligned_pool(const FeatureMap& x, const RoI& b, const BinGrid& grid,
                                      int samples_per_bin = 1) {
    (void)b;
    if (samples_per_bin != 1 && samples_per_bin != 4) {
        throw std::invalid_argument("aligned_pool supports 1 or 4 samples per bin");
    }
    PartFeatureMatrix y(grid.parts(), x.channels);
    std::vector<double> sample(x.channels);
    for (int k = 0; k < grid.parts(); ++k) {
        const Bin& bin = grid.bins[k];
        if (samples_per_bin == 1) {
            bilinear_interpolate(x, bin.center_u, bin.center_v, y.data.data() +
                                                                    static_cast<std::size_t>(k) *
                                                                        x.channels);
        } else {
            const double qw = 0.25 * (bin.rect.x2 - bin.rect.x1);
            const double qh = 0.25 * (bin.rect.y2 - bin.rect.y1);
            for (int sy = 0; sy < 2; ++sy) {
                for (int sx = 0; sx < 2; ++sx) {
                    const double u = bin.rect.x1 + (2 * sx + 1) * qw;
                    const double v = bin.rect.y1 + (2 * sy + 1) * qh;
                    bilinear_interpolate(x, u, v, sample.data());
                    for (int ch = 0; ch < x.channels; ++ch) {
                        y.at(k, ch) += 0.25 * sample[ch];
                    }
                }
            }
        }
    }
    return y;
}

// Deformable pooling: aligned pooling evaluated at per-bin displaced centers.
// Zero offsets reproduce aligned_pool(samples_per_bin = 1) exactly.
inline PartFeatureMatrix deformable_pool(const FeatureMap& x, const RoI& b, const BinGrid& grid,
                                         const OffsetField& offsets) {
    (void)b;
    if (static_cast<int>(offsets.du.size()) != grid.parts() ||
        static_cast<int>(offsets.dv.size()) != grid.parts()) {
        throw std::invalid_argument("OffsetField size must match the bin count");
    }
    PartFeatureMatrix y(grid.parts(), x.channels);
    for (int k = 0; k < grid.parts(); ++k) {
        const Bin& bin = grid.bins[k];
        bilinear_interpolate(x, bin.center_u + offsets.du[k], bin.center_v + offsets.dv[k],
                             y.data.data() + static_cast<std::size_t>(k) * x.channels);
    }
    return y;
}

// Offset regression: a regular average pool over the same grid gives the
// initial region feature, a single fc layer maps it to per-bin offsets.
inline OffsetField predict_offsets(const FeatureMap& x, const RoI& b, const BinGrid& grid,
                                   const OffsetPredictorParams& params) {
    if (params.parts != grid.parts() || params.channels != x.channels) {
        throw std::invalid_argument("offset predictor dims do not match grid/features");
    }
    const std::size_t in_dim = static_cast<std::size_t>(params.parts) * params.channels;
    const std::size_t out_dim = 2 * static_cast<std::size_t>(params.parts);
    if (params.weight.size() != out_dim * in_dim || params.bias.size() != out_dim) {
        throw std::invalid_argument("offset predictor weight/bias shapes are inconsistent");
    }

    const PartFeatureMatrix init = regular_pool(x, b, grid, PoolMode::avg);
    OffsetField f = OffsetField::zeros(params.parts);
    for (std::size_t r = 0; r < out_dim; ++r) {
        double acc = params.bias[r];
        const double* row = params.weight.data() + r * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * init.data[i];
        if (r % 2 == 0) {
            f.du[r / 2] = acc;
        } else {
            f.dv[r / 2] = acc;
        }
    }
    return f;
}

// Position-sensitive pooling: bin k average-pools only its channel slice
// [k*C_f/K, (k+1)*C_f/K). The pooled slice occupies the first C_f/K entries
// of the output row; the tail is zero padding.
inline PartFeatureMatrix ps_roi_pool(const FeatureMap& x, const RoI& b, const BinGrid& grid) {
    const int parts = grid.parts();
    if (x.channels % parts != 0) {
        throw std::invalid_argument("ps_roi_pool requires C_f divisible by K");
    }
    const int slice = x.channels / parts;
    PartFeatureMatrix y(parts, x.channels);
    for (int k = 0; k < parts; ++k) {
        const Bin& bin = grid.bins[k];
        std::vector<Cell> cells = detail::in_map_cells(bin, x.height, x.width);
        if (cells.empty()) {
            cells.push_back(nearest_cell(bin.center_u, bin.center_v, x.height, x.width));
        }
        const double inv = 1.0 / static_cast<double>(cells.size());
        for (int s = 0; s < slice; ++s) {
            double acc = 0.0;
            for (const Cell& c : cells) acc += x.at(c.y, c.x, k * slice + s);
            y.at(k, s) = acc * inv;
        }
    }
    (void)b;
    return y;
}

// One-stage center feature: K = 1, bilinear sample at the RoI center.
inline PartFeatureMatrix center_feature(const FeatureMap& x, const RoI& b) {
    validate_roi(b);
    PartFeatureMatrix y(1, x.channels);
    bilinear_interpolate(x, b.center_x(), b.center_y(), y.data.data());
    return y;
}

// Mask-gated pooling: bins whose center lands on foreground average-pool as
// usual, bins outside the mask output zeros (normalization deliberately
// relaxed).
inline PartFeatureMatrix masked_pool(const FeatureMap& x, const RoI& b, const BinGrid& grid,
                                     const InstanceMask& mask) {
    if (mask.height != x.height || mask.width != x.width) {
        throw std::invalid_argument("mask dims must match the feature map");
    }
    PartFeatureMatrix y(grid.parts(), x.channels);
    const PartFeatureMatrix pooled = regular_pool(x, b, grid, PoolMode::avg);
    for (int k = 0; k < grid.parts(); ++k) {
        const Bin& bin = grid.bins[k];
        const Cell c = nearest_cell(bin.center_u, bin.center_v, x.height, x.width);
        if (mask.at(c.y, c.x)) {
            for (int ch = 0; ch < x.channels; ++ch) y.at(k, ch) = pooled.at(k, ch);
        }
    }
    return y;
}

}  // namespace regionfeat
