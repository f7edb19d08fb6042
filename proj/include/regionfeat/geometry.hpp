#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "regionfeat/types.hpp"

namespace regionfeat {

// Integer feature-map cell.
struct Cell {
    int x = 0;
    int y = 0;

    bool operator==(const Cell&) const = default;
};

// One bin of a regular grid over an RoI: its rectangle, its center and the
// cells whose centers fall inside the rectangle (half-open).
struct Bin {
    RoI rect;
    double center_u = 0.0;
    double center_v = 0.0;
    std::vector<Cell> cells;
};

struct BinGrid {
    int rows = 0;
    int cols = 0;
    RoI roi;
    std::vector<Bin> bins;  // row-major, rows * cols

    int parts() const { return rows * cols; }
};

// 1-D bilinear interpolation weight, max(0, 1 - |a - c|).
inline double bilinear_weight(double a, double c) {
    return std::max(0.0, 1.0 - std::abs(a - c));
}

// Nearest cell index along one axis to continuous coordinate z (cell centers
// at i + 0.5; equidistant points resolve to the higher index).
inline int nearest_cell_index(double z, int extent) {
    int i = static_cast<int>(std::floor(z));
    return std::clamp(i, 0, extent - 1);
}

inline Cell nearest_cell(double u, double v, int height, int width) {
    return Cell{nearest_cell_index(u, width), nearest_cell_index(v, height)};
}

// Sample coordinates are clamped into the span of cell centers so that
// arbitrarily displaced points stay interpolatable.
inline double clamp_coord(double z, int extent) {
    return std::clamp(z, 0.5, static_cast<double>(extent) - 0.5);
}

// The at-most-four cells with nonzero bilinear weight at (u, v), with their
// weights. Weights sum to 1 after clamping to the map border.
struct BilinearTap {
    Cell cell;
    double weight = 0.0;
};

inline std::array<BilinearTap, 4> bilinear_taps(double u, double v, int height, int width,
                                                int* count_out) {
    const double cu = clamp_coord(u, width);
    const double cv = clamp_coord(v, height);

    // shift into the cell-center frame: cell i covers center i + 0.5
    const double fu = cu - 0.5;
    const double fv = cv - 0.5;
    int x0 = static_cast<int>(std::floor(fu));
    int y0 = static_cast<int>(std::floor(fv));
    x0 = std::clamp(x0, 0, width - 1);
    y0 = std::clamp(y0, 0, height - 1);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double ax = fu - x0;
    const double ay = fv - y0;

    std::array<BilinearTap, 4> taps{};
    int n = 0;
    auto push = [&](int x, int y, double w) {
        if (w == 0.0) return;
        for (int i = 0; i < n; ++i) {
            if (taps[i].cell.x == x && taps[i].cell.y == y) {
                taps[i].weight += w;
                return;
            }
        }
        taps[n++] = BilinearTap{Cell{x, y}, w};
    };
    push(x0, y0, (1.0 - ax) * (1.0 - ay));
    push(x1, y0, ax * (1.0 - ay));
    push(x0, y1, (1.0 - ax) * ay);
    push(x1, y1, ax * ay);
    *count_out = n;
    return taps;
}

// Bilinear interpolation of all channels of x at (u, v).
inline void bilinear_interpolate(const FeatureMap& x, double u, double v, double* out) {
    int n = 0;
    const auto taps = bilinear_taps(u, v, x.height, x.width, &n);
    for (int c = 0; c < x.channels; ++c) out[c] = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& t = taps[i];
        for (int c = 0; c < x.channels; ++c) {
            out[c] += t.weight * x.at(t.cell.y, t.cell.x, c);
        }
    }
}

// Divide an RoI into a rows x cols grid. Bin k (row-major) spans
// [x1 + (k mod cols) * W_b/cols, x1 + (k mod cols + 1) * W_b/cols] x the
// analogous y-range; its cell set holds the integer cells whose centers fall
// inside the half-open rectangle.
inline BinGrid make_bin_grid(const RoI& b, int rows, int cols) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("make_bin_grid requires rows, cols >= 1");
    }
    validate_roi(b);

    BinGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.roi = b;
    grid.bins.resize(static_cast<std::size_t>(rows) * cols);

    const double bin_w = b.width() / cols;
    const double bin_h = b.height() / rows;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            Bin& bin = grid.bins[static_cast<std::size_t>(r) * cols + c];
            bin.rect = RoI{b.x1 + c * bin_w, b.y1 + r * bin_h, b.x1 + (c + 1) * bin_w,
                           b.y1 + (r + 1) * bin_h};
            bin.center_u = 0.5 * (bin.rect.x1 + bin.rect.x2);
            bin.center_v = 0.5 * (bin.rect.y1 + bin.rect.y2);

            // cells whose centers land in [x1, x2) x [y1, y2)
            const int ix_lo = static_cast<int>(std::ceil(bin.rect.x1 - 0.5));
            const int iy_lo = static_cast<int>(std::ceil(bin.rect.y1 - 0.5));
            for (int iy = iy_lo; iy + 0.5 < bin.rect.y2; ++iy) {
                for (int ix = ix_lo; ix + 0.5 < bin.rect.x2; ++ix) {
                    bin.cells.push_back(Cell{ix, iy});
                }
            }
        }
    }
    return grid;
}

}  // namespace regionfeat
