#pragma once

#include <unordered_map>
#include <vector>

#include "regionfeat/pooling.hpp"

namespace regionfeat {

// Explicit weight-field forms of the pooling baselines. Feeding any of these
// to the generic weighted aggregation reproduces the dedicated implementation
// (avg modes; position-sensitive pooling additionally slices channels).

namespace detail {

// Accumulates (part, cell) -> weight into a WeightField over the union of
// touched cells, insertion-ordered.
class WeightFieldBuilder {
public:
    explicit WeightFieldBuilder(int parts) : parts_(parts) {}

    void add(int part, Cell cell, double w) {
        const long key = static_cast<long>(cell.y) * (1L << 20) + cell.x;
        auto it = index_.find(key);
        std::size_t j;
        if (it == index_.end()) {
            j = cells_.size();
            index_.emplace(key, j);
            cells_.push_back(cell);
            for (int k = 0; k < parts_; ++k) weights_.emplace_back();
            // weights_ is kept part-minor here: entry j*parts_ + k
        } else {
            j = it->second;
        }
        weights_[j * parts_ + part] += w;
    }

    WeightField build() const {
        std::vector<Position> positions;
        positions.reserve(cells_.size());
        for (const Cell& c : cells_) {
            positions.push_back(Position{static_cast<double>(c.x), static_cast<double>(c.y)});
        }
        WeightField wf = make_weight_field(parts_, std::move(positions));
        for (std::size_t j = 0; j < cells_.size(); ++j) {
            for (int k = 0; k < parts_; ++k) {
                wf.at(k, j) = weights_[j * parts_ + k];
            }
        }
        return wf;
    }

private:
    int parts_;
    std::unordered_map<long, std::size_t> index_;
    std::vector<Cell> cells_;
    std::vector<double> weights_;
};

inline void add_bin_avg(WeightFieldBuilder& builder, int part, const Bin& bin, int height,
                        int width) {
    std::vector<Cell> cells = in_map_cells(bin, height, width);
    if (cells.empty()) {
        cells.push_back(nearest_cell(bin.center_u, bin.center_v, height, width));
    }
    const double w = 1.0 / static_cast<double>(cells.size());
    for (const Cell& c : cells) builder.add(part, c, w);
}

inline void add_bilinear_point(WeightFieldBuilder& builder, int part, double u, double v,
                               int height, int width, double scale) {
    int n = 0;
    const auto taps = bilinear_taps(u, v, height, width, &n);
    for (int i = 0; i < n; ++i) builder.add(part, taps[i].cell, scale * taps[i].weight);
}

}  // namespace detail

inline WeightField regular_avg_weight_field(const BinGrid& grid, int height, int width) {
    detail::WeightFieldBuilder builder(grid.parts());
    for (int k = 0; k < grid.parts(); ++k) {
        detail::add_bin_avg(builder, k, grid.bins[k], height, width);
    }
    return builder.build();
}

inline WeightField aligned_weight_field(const BinGrid& grid, int height, int width,
                                        int samples_per_bin = 1) {
    if (samples_per_bin != 1 && samples_per_bin != 4) {
        throw std::invalid_argument("aligned_weight_field supports 1 or 4 samples per bin");
    }
    detail::WeightFieldBuilder builder(grid.parts());
    for (int k = 0; k < grid.parts(); ++k) {
        const Bin& bin = grid.bins[k];
        if (samples_per_bin == 1) {
            detail::add_bilinear_point(builder, k, bin.center_u, bin.center_v, height, width,
                                       1.0);
        } else {
            const double qw = 0.25 * (bin.rect.x2 - bin.rect.x1);
            const double qh = 0.25 * (bin.rect.y2 - bin.rect.y1);
            for (int sy = 0; sy < 2; ++sy) {
                for (int sx = 0; sx < 2; ++sx) {
                    detail::add_bilinear_point(builder, k, bin.rect.x1 + (2 * sx + 1) * qw,
                                               bin.rect.y1 + (2 * sy + 1) * qh, height, width,
                                               0.25);
                }
            }
        }
    }
    return builder.build();
}

inline WeightField deformable_weight_field(const BinGrid& grid, const OffsetField& offsets,
                                           int height, int width) {
    if (static_cast<int>(offsets.du.size()) != grid.parts() ||
        static_cast<int>(offsets.dv.size()) != grid.parts()) {
        throw std::invalid_argument("OffsetField size must match the bin count");
    }
    detail::WeightFieldBuilder builder(grid.parts());
    for (int k = 0; k < grid.parts(); ++k) {
        const Bin& bin = grid.bins[k];
        detail::add_bilinear_point(builder, k, bin.center_u + offsets.du[k],
                                   bin.center_v + offsets.dv[k], height, width, 1.0);
    }
    return builder.build();
}

inline WeightField center_weight_field(const RoI& b, int height, int width) {
    validate_roi(b);
    detail::WeightFieldBuilder builder(1);
    detail::add_bilinear_point(builder, 0, b.center_x(), b.center_y(), height, width, 1.0);
    return builder.build();
}

// Masked pooling relaxes normalization: parts gated off by the mask keep
// all-zero weight rows.
inline WeightField masked_weight_field(const BinGrid& grid, const InstanceMask& mask) {
    detail::WeightFieldBuilder builder(grid.parts());
    bool any = false;
    for (int k = 0; k < grid.parts(); ++k) {
        const Bin& bin = grid.bins[k];
        const Cell c = nearest_cell(bin.center_u, bin.center_v, mask.height, mask.width);
        if (mask.at(c.y, c.x)) {
            detail::add_bin_avg(builder, k, bin, mask.height, mask.width);
            any = true;
        }
    }
    if (!any) {
        // ensure at least one position so the field has a defined support
        const Cell c = nearest_cell(grid.roi.center_x(), grid.roi.center_y(), mask.height,
                                    mask.width);
        builder.add(0, c, 0.0);
    }
    return builder.build();
}

// The channel-sliced view of an aggregated output that position-sensitive
// pooling produces: part k keeps channels [k*C_f/K, (k+1)*C_f/K) at the row
// start, zero tail.
inline PartFeatureMatrix ps_slice(const PartFeatureMatrix& full) {
    if (full.channels % full.parts != 0) {
        throw std::invalid_argument("ps_slice requires C_f divisible by K");
    }
    const int slice = full.channels / full.parts;
    PartFeatureMatrix y(full.parts, full.channels);
    for (int k = 0; k < full.parts; ++k) {
        for (int s = 0; s < slice; ++s) {
            y.at(k, s) = full.at(k, k * slice + s);
        }
    }
    return y;
}

}  // namespace regionfeat
