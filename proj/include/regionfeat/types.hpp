#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "regionfeat/tensor.hpp"

namespace regionfeat {

// Conventions used throughout:
//  - coordinates are in feature-map cells (1 unit = 1 cell), x right, y down
//  - integer cell (ix, iy) sits at continuous coordinate (ix + 0.5, iy + 0.5)
//  - all dense storage is row-major (y, x, channel)
//  - compute is double precision; files store float32

// A computation produced non-finite values. Distinct from input validation
// failures so callers (the CLI in particular) can report it separately.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Image feature map of spatial size H x W with C_f channels.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;  // height * width * channels, (y, x, c)

    FeatureMap() = default;
    FeatureMap(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || c <= 0) {
            throw std::invalid_argument("FeatureMap dims must be positive");
        }
    }

    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Bounding box in feature-map coordinates.
struct RoI {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }
};

inline void validate_roi(const RoI& b) {
    if (!(std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
          std::isfinite(b.y2))) {
        throw std::invalid_argument("RoI coordinates must be finite");
    }
    if (b.x2 < b.x1 || b.y2 < b.y1) {
        throw std::invalid_argument("RoI must satisfy x2 >= x1 and y2 >= y1");
    }
}

// A spatial position. Integer-valued u, v refer to the grid cell (u, v);
// the cell's continuous location is (u + 0.5, v + 0.5).
struct Position {
    double u = 0.0;  // x coordinate
    double v = 0.0;  // y coordinate

    bool operator==(const Position&) const = default;
};

// Per-part feature output y(b): K parts x C_f channels.
struct PartFeatureMatrix {
    int parts = 0;
    int channels = 0;
    std::vector<double> data;  // parts * channels, part-major

    PartFeatureMatrix() = default;
    PartFeatureMatrix(int k, int c, double fill = 0.0)
        : parts(k), channels(c), data(static_cast<std::size_t>(k) * c, fill) {
        if (k <= 0 || c <= 0) {
            throw std::invalid_argument("PartFeatureMatrix dims must be positive");
        }
    }

    double& at(int k, int c) { return data[static_cast<std::size_t>(k) * channels + c]; }
    double at(int k, int c) const { return data[static_cast<std::size_t>(k) * channels + c]; }
};

// Per-part weight distribution over an ordered position set. Rows of
// normalized variants sum to 1; the masked-pooling variant may carry
// all-zero rows.
struct WeightField {
    int parts = 0;
    std::vector<Position> positions;
    std::vector<double> weights;  // parts * positions.size(), part-major

    double& at(int k, std::size_t j) { return weights[k * positions.size() + j]; }
    double at(int k, std::size_t j) const { return weights[k * positions.size() + j]; }
};

inline WeightField make_weight_field(int parts, std::vector<Position> positions) {
    if (parts <= 0) throw std::invalid_argument("WeightField needs parts >= 1");
    WeightField wf;
    wf.parts = parts;
    wf.positions = std::move(positions);
    wf.weights.assign(static_cast<std::size_t>(parts) * wf.positions.size(), 0.0);
    return wf;
}

// Binary foreground mask aligned with a feature map.
struct InstanceMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // height * width, values 0/1

    InstanceMask() = default;
    InstanceMask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("InstanceMask dims must be positive");
        }
    }

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// --- conversions to and from the tensor container ---

inline FeatureMap feature_map_from_array(const NdArray& a) {
    if (a.dims.size() != 3) {
        throw std::invalid_argument("feature map tensor must have rank 3 (H, W, C)");
    }
    FeatureMap m(static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]),
                 static_cast<int>(a.dims[2]));
    m.data = a.data;
    for (double v : m.data) {
        if (!std::isfinite(v)) throw std::invalid_argument("feature map holds non-finite value");
    }
    return m;
}

inline NdArray array_from_feature_map(const FeatureMap& m) {
    NdArray a;
    a.dims = {static_cast<std::uint32_t>(m.height), static_cast<std::uint32_t>(m.width),
              static_cast<std::uint32_t>(m.channels)};
    a.data = m.data;
    return a;
}

inline InstanceMask mask_from_array(const NdArray& a) {
    if (a.dims.size() != 2) {
        throw std::invalid_argument("mask tensor must have rank 2 (H, W)");
    }
    InstanceMask m(static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]));
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        if (a.data[i] != 0.0 && a.data[i] != 1.0) {
            throw std::invalid_argument("mask values must be 0.0 or 1.0");
        }
        m.data[i] = a.data[i] == 1.0 ? 1 : 0;
    }
    return m;
}

inline NdArray array_from_mask(const InstanceMask& m) {
    NdArray a;
    a.dims = {static_cast<std::uint32_t>(m.height), static_cast<std::uint32_t>(m.width)};
    a.data.reserve(m.data.size());
    for (auto v : m.data) a.data.push_back(v ? 1.0 : 0.0);
    return a;
}

}  // namespace regionfeat
