#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "regionfeat/tensor.hpp"
#include "regionfeat/types.hpp"

namespace regionfeat {

// A WeightField scattered onto the full grid: unsampled cells are zero and
// each part is renormalized to sum 1, so parts read as probability
// distributions over all positions. A part with no mass at all stays
// all-zero (cannot be normalized).
struct DenseWeightMap {
    int parts = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;  // parts * height * width

    DenseWeightMap() = default;
    DenseWeightMap(int k, int h, int w)
        : parts(k), height(h), width(w), data(static_cast<std::size_t>(k) * h * w, 0.0) {
        if (k <= 0 || h <= 0 || w <= 0) {
            throw std::invalid_argument("DenseWeightMap dims must be positive");
        }
    }

    double& at(int k, int y, int x) {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
    double at(int k, int y, int x) const {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
};

inline DenseWeightMap scatter_weights(const WeightField& wf, int height, int width) {
    DenseWeightMap wm(wf.parts, height, width);
    for (std::size_t j = 0; j < wf.positions.size(); ++j) {
        const Position& p = wf.positions[j];
        const int cx = static_cast<int>(std::llround(p.u));
        const int cy = static_cast<int>(std::llround(p.v));
        if (cx < 0 || cx >= width || cy < 0 || cy >= height || p.u != cx || p.v != cy) {
            throw std::invalid_argument("weight-field position is not a cell inside the map");
        }
        for (int k = 0; k < wf.parts; ++k) wm.at(k, cy, cx) += wf.at(k, j);
    }
    for (int k = 0; k < wf.parts; ++k) {
        double total = 0.0;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) total += wm.at(k, y, x);
        }
        if (total > 0.0) {
            const double inv = 1.0 / total;
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) wm.at(k, y, x) *= inv;
            }
        }
    }
    return wm;
}

namespace detail {

// KL(p || q) with epsilon-smoothing applied to q only: q is first lifted by
// epsilon and renormalized; zero-mass cells of p contribute 0 (0*ln 0 = 0).
inline double kl_divergence(const double* p, const double* q, std::size_t n, double epsilon) {
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) denom += q[i] + epsilon;
    double out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] > 0.0) out += p[i] * std::log(p[i] * denom / (q[i] + epsilon));
    }
    return out;
}

}  // namespace detail

// Average KL divergence over all ordered part pairs (k1 != k2).
inline double mean_kl_between_parts(const DenseWeightMap& wm, double epsilon = 1e-8) {
    if (wm.parts < 2) throw std::invalid_argument("mean KL between parts needs K >= 2");
    if (epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
    const std::size_t cells = static_cast<std::size_t>(wm.height) * wm.width;
    double total = 0.0;
    for (int k1 = 0; k1 < wm.parts; ++k1) {
        for (int k2 = 0; k2 < wm.parts; ++k2) {
            if (k1 == k2) continue;
            total += detail::kl_divergence(wm.data.data() + k1 * cells,
                                           wm.data.data() + k2 * cells, cells, epsilon);
        }
    }
    return total / (static_cast<double>(wm.parts) * (wm.parts - 1));
}

// Per-cell maximum over parts, renormalized to a distribution. An all-zero
// map stays zero; downstream smoothing turns it into the uniform
// distribution.
inline std::vector<double> max_pooled_weight_map(const DenseWeightMap& wm) {
    const std::size_t cells = static_cast<std::size_t>(wm.height) * wm.width;
    std::vector<double> pooled(cells, 0.0);
    for (int k = 0; k < wm.parts; ++k) {
        const double* part = wm.data.data() + k * cells;
        for (std::size_t i = 0; i < cells; ++i) pooled[i] = std::max(pooled[i], part[i]);
    }
    double total = 0.0;
    for (double v : pooled) total += v;
    if (total > 0.0) {
        for (double& v : pooled) v /= total;
    }
    return pooled;
}

// KL(mask distribution || max-pooled weight distribution): penalizes pooled
// mass missing from the true foreground.
inline double kl_of_mask(const DenseWeightMap& wm, const InstanceMask& mask,
                         double epsilon = 1e-8) {
    if (mask.height != wm.height || mask.width != wm.width) {
        throw std::invalid_argument("mask dims must match the weight map");
    }
    if (epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
    const std::size_t cells = static_cast<std::size_t>(wm.height) * wm.width;
    double mass = 0.0;
    for (std::uint8_t v : mask.data) mass += v ? 1.0 : 0.0;
    if (mass == 0.0) throw std::invalid_argument("mask must have at least one foreground cell");
    std::vector<double> mask_dist(cells);
    for (std::size_t i = 0; i < cells; ++i) mask_dist[i] = mask.data[i] ? 1.0 / mass : 0.0;
    const std::vector<double> pooled = max_pooled_weight_map(wm);
    return detail::kl_divergence(mask_dist.data(), pooled.data(), cells, epsilon);
}

// Part index selecting the max-pooled map instead of a single part.
constexpr int kMaxPooledPart = -1;

// Writes an 8-bit binary PGM (P5), each pixel round-half-up of
// 255 * w / max(w). An all-zero map exports as all black.
inline void export_weight_map(const DenseWeightMap& wm, int part, const std::string& path) {
    if (part != kMaxPooledPart && (part < 0 || part >= wm.parts)) {
        throw std::invalid_argument("part selector out of range");
    }
    const std::size_t cells = static_cast<std::size_t>(wm.height) * wm.width;
    std::vector<double> values;
    if (part == kMaxPooledPart) {
        values = max_pooled_weight_map(wm);
    } else {
        values.assign(wm.data.begin() + part * cells, wm.data.begin() + (part + 1) * cells);
    }
    double peak = 0.0;
    for (double v : values) peak = std::max(peak, v);
    std::vector<std::uint8_t> pixels(cells, 0);
    if (peak > 0.0) {
        for (std::size_t i = 0; i < cells; ++i) {
            pixels[i] = static_cast<std::uint8_t>(std::floor(255.0 * values[i] / peak + 0.5));
        }
    }
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw std::runtime_error("cannot open PGM output: " + path);
    }
    const std::string header =
        "P5\n" + std::to_string(wm.width) + " " + std::to_string(wm.height) + "\n255\n";
    if (std::fwrite(header.data(), 1, header.size(), file.get()) != header.size() ||
        std::fwrite(pixels.data(), 1, pixels.size(), file.get()) != pixels.size()) {
        throw std::runtime_error("failed writing PGM output: " + path);
    }
}

}  // namespace regionfeat
