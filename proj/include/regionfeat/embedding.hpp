#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "regionfeat/types.hpp"

namespace regionfeat {

// Sinusoidal embedding configuration. embed_dim entries are produced per
// scalar coordinate; geo_dim is the transform dimension the geometric
// attention term projects into.
struct EmbeddingConfig {
    int embed_dim = 512;   // C_E, must be even
    int geo_dim = 256;     // C_g
    double base = 1000.0;  // wavelength base

    EmbeddingConfig() = default;
    EmbeddingConfig(int embed_dim_, int geo_dim_, double base_ = 1000.0)
        : embed_dim(embed_dim_), geo_dim(geo_dim_), base(base_) {}
};

inline void validate_embedding_config(const EmbeddingConfig& cfg) {
    if (cfg.embed_dim <= 0 || cfg.embed_dim % 2 != 0) {
        throw std::invalid_argument("embed_dim must be a positive even integer");
    }
    if (cfg.geo_dim <= 0) throw std::invalid_argument("geo_dim must be positive");
    if (!(cfg.base > 1.0)) throw std::invalid_argument("embedding base must exceed 1");
}

// Interleaved sin/cos features of geometrically spaced wavelengths:
// out[2i] = sin(z / base^(2i/C_E)), out[2i+1] = cos(z / base^(2i/C_E)).
inline void embed_scalar_into(double z, const EmbeddingConfig& cfg, double* out) {
    const int half = cfg.embed_dim / 2;
    for (int i = 0; i < half; ++i) {
        const double wavelength =
            std::pow(cfg.base, (2.0 * i) / static_cast<double>(cfg.embed_dim));
        const double phase = z / wavelength;
        out[2 * i] = std::sin(phase);
        out[2 * i + 1] = std::cos(phase);
    }
}

inline std::vector<double> embed_scalar(double z, const EmbeddingConfig& cfg) {
    validate_embedding_config(cfg);
    std::vector<double> out(static_cast<std::size_t>(cfg.embed_dim));
    embed_scalar_into(z, cfg, out.data());
    return out;
}

// Position embedding: [embed(u), embed(v)], 2*C_E entries.
inline std::vector<double> embed_position(const Position& p, const EmbeddingConfig& cfg) {
    validate_embedding_config(cfg);
    std::vector<double> out(2 * static_cast<std::size_t>(cfg.embed_dim));
    embed_scalar_into(p.u, cfg, out.data());
    embed_scalar_into(p.v, cfg, out.data() + cfg.embed_dim);
    return out;
}

// Box embedding: corners embedded in order (x1, y1, x2, y2), 4*C_E entries.
inline std::vector<double> embed_box(const RoI& b, const EmbeddingConfig& cfg) {
    validate_embedding_config(cfg);
    std::vector<double> out(4 * static_cast<std::size_t>(cfg.embed_dim));
    embed_scalar_into(b.x1, cfg, out.data());
    embed_scalar_into(b.y1, cfg, out.data() + cfg.embed_dim);
    embed_scalar_into(b.x2, cfg, out.data() + 2 * cfg.embed_dim);
    embed_scalar_into(b.y2, cfg, out.data() + 3 * cfg.embed_dim);
    return out;
}

}  // namespace regionfeat
