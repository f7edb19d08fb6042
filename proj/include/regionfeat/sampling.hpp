#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "regionfeat/geometry.hpp"
#include "regionfeat/types.hpp"

namespace regionfeat {

enum class SupportKind {
    roi_1x,       // the RoI itself
    roi_2x,       // concentric box of twice the area
    whole_image,  // the full feature map
};

struct SupportSpec {
    SupportKind kind = SupportKind::whole_image;
    int max_in = 196;   // sample budget inside the RoI
    int max_out = 196;  // sample budget outside the RoI

    static SupportSpec roi_1x(int max_in = 196) { return {SupportKind::roi_1x, max_in, 0}; }
    static SupportSpec roi_2x(int max_in = 196, int max_out = 196) {
        return {SupportKind::roi_2x, max_in, max_out};
    }
    static SupportSpec whole_image(int max_in = 196, int max_out = 196) {
        return {SupportKind::whole_image, max_in, max_out};
    }
};

inline void validate_support_spec(const SupportSpec& s) {
    if (s.max_in < 1) throw std::invalid_argument("SupportSpec.max_in must be >= 1");
    if (s.max_out < 0) throw std::invalid_argument("SupportSpec.max_out must be >= 0");
    if (s.max_out == 0 && s.kind != SupportKind::roi_1x) {
        throw std::invalid_argument("max_out == 0 is only valid for roi_1x support");
    }
}

// Sparse sample set for one RoI: the in-RoI lattice, the context lattice and
// the strides that produced them. Positions are integer cells, in-set first.
struct SamplingPlan {
    std::vector<Position> in_positions;
    std::vector<Position> out_positions;
    int stride_x = 1;
    int stride_y = 1;
    int stride_out = 1;

    std::size_t size() const { return in_positions.size() + out_positions.size(); }

    std::vector<Position> all_positions() const {
        std::vector<Position> p;
        p.reserve(size());
        p.insert(p.end(), in_positions.begin(), in_positions.end());
        p.insert(p.end(), out_positions.begin(), out_positions.end());
        return p;
    }
};

// In-RoI sampling strides: ceil(W_b / sqrt(max_in)) and ceil(H_b / sqrt(max_in)).
inline std::pair<int, int> inside_strides(const RoI& b, int max_in) {
    if (max_in < 1) throw std::invalid_argument("inside_strides requires max_in >= 1");
    const double root = std::sqrt(static_cast<double>(max_in));
    const int sx = std::max(1, static_cast<int>(std::ceil(b.width() / root)));
    const int sy = std::max(1, static_cast<int>(std::ceil(b.height() / root)));
    return {sx, sy};
}

// Context sampling stride: ceil(sqrt(H*W / max_out)), computed exactly in
// integer arithmetic.
inline int outside_stride(int height, int width, int max_out) {
    if (height < 1 || width < 1) throw std::invalid_argument("map dims must be >= 1");
    if (max_out < 1) throw std::invalid_argument("outside_stride requires max_out >= 1");
    const std::int64_t area = static_cast<std::int64_t>(height) * width;
    int s = std::max(1, static_cast<int>(std::ceil(std::sqrt(
                            static_cast<double>(area) / static_cast<double>(max_out)))));
    while (static_cast<std::int64_t>(s) * s * max_out < area) ++s;
    while (s > 1 && static_cast<std::int64_t>(s - 1) * (s - 1) * max_out >= area) --s;
    return s;
}

namespace detail {

// Index range [lo, hi) of cells whose centers fall inside [a, b), clipped to
// [0, extent).
inline std::pair<int, int> cell_range(double a, double b, int extent) {
    int lo = static_cast<int>(std::ceil(a - 0.5));
    int hi = static_cast<int>(std::ceil(b - 0.5));  // first cell with center >= b
    lo = std::max(lo, 0);
    hi = std::min(hi, extent);
    if (hi < lo) hi = lo;
    return {lo, hi};
}

inline bool center_inside(double z, double a, double b) { return z >= a && z < b; }

}  // namespace detail

// Geometry of the support region for a given kind: the RoI itself, the
// concentric sqrt(2)-scaled box, or the whole map.
inline RoI support_box(const RoI& b, int height, int width, SupportKind kind) {
    switch (kind) {
        case SupportKind::roi_1x:
            return b;
        case SupportKind::roi_2x: {
            const double hw = b.width() * std::sqrt(2.0) * 0.5;
            const double hh = b.height() * std::sqrt(2.0) * 0.5;
            return RoI{b.center_x() - hw, b.center_y() - hh, b.center_x() + hw,
                       b.center_y() + hh};
        }
        case SupportKind::whole_image:
            return RoI{0.0, 0.0, static_cast<double>(width), static_cast<double>(height)};
    }
    throw std::logic_error("unreachable support kind");
}

namespace detail {

inline SamplingPlan plan_with_strides(const RoI& b, int height, int width, SupportKind kind,
                                      bool with_out, int sx, int sy, int so) {
    SamplingPlan plan;
    plan.stride_x = sx;
    plan.stride_y = sy;
    plan.stride_out = so;

    const auto [ix_lo, ix_hi] = cell_range(b.x1, b.x2, width);
    const auto [iy_lo, iy_hi] = cell_range(b.y1, b.y2, height);
    for (int iy = iy_lo; iy < iy_hi; iy += sy) {
        for (int ix = ix_lo; ix < ix_hi; ix += sx) {
            plan.in_positions.push_back(
                Position{static_cast<double>(ix), static_cast<double>(iy)});
        }
    }

    if (with_out) {
        const RoI support = support_box(b, height, width, kind);
        for (int iy = 0; iy < height; iy += so) {
            const double cv = iy + 0.5;
            for (int ix = 0; ix < width; ix += so) {
                const double cu = ix + 0.5;
                if (!center_inside(cu, support.x1, support.x2) ||
                    !center_inside(cv, support.y1, support.y2)) {
                    continue;
                }
                if (center_inside(cu, b.x1, b.x2) && center_inside(cv, b.y1, b.y2)) {
                    continue;  // belongs to the in-RoI set
                }
                plan.out_positions.push_back(
                    Position{static_cast<double>(ix), static_cast<double>(iy)});
            }
        }
    }

    // Degenerate RoI with no samples at all: fall back to the single cell
    // nearest the RoI center so downstream weights stay well defined.
    if (plan.size() == 0) {
        const Cell c = nearest_cell(b.center_x(), b.center_y(), height, width);
        plan.in_positions.push_back(
            Position{static_cast<double>(c.x), static_cast<double>(c.y)});
    }
    return plan;
}

inline void check_plan_inputs(const RoI& b, int height, int width, const SupportSpec& spec) {
    validate_roi(b);
    validate_support_spec(spec);
    if (height < 1 || width < 1) throw std::invalid_argument("map dims must be >= 1");
    if (b.x2 < 0.0 || b.y2 < 0.0 || b.x1 > width || b.y1 > height) {
        throw std::invalid_argument("RoI lies fully outside the feature map");
    }
}

}  // namespace detail

// Build the sparse sampling plan for an RoI.
//
// In-RoI cells are sampled on the (stride_x, stride_y) lattice anchored at the
// RoI's top-left in-map cell; context cells on the stride_out lattice anchored
// at cell (0, 0), restricted to the support box minus the RoI. Membership of a
// cell is decided by its center. The two sets are disjoint by construction and
// ordering is deterministic (row-major scans).
inline SamplingPlan build_plan(const RoI& b, int height, int width, const SupportSpec& spec) {
    detail::check_plan_inputs(b, height, width, spec);
    const auto [sx, sy] = inside_strides(b, spec.max_in);
    const bool with_out = spec.kind != SupportKind::roi_1x && spec.max_out > 0;
    const int so = with_out ? outside_stride(height, width, spec.max_out) : 1;
    return detail::plan_with_strides(b, height, width, spec.kind, with_out, sx, sy, so);
}

// Dense enumeration of the support region: stride 1 everywhere, in/out split
// as in build_plan. build_plan reproduces this bit-for-bit once its budgets
// drive every stride to 1.
inline SamplingPlan dense_plan(const RoI& b, int height, int width, const SupportSpec& spec) {
    detail::check_plan_inputs(b, height, width, spec);
    const bool with_out = spec.kind != SupportKind::roi_1x && spec.max_out > 0;
    return detail::plan_with_strides(b, height, width, spec.kind, with_out, 1, 1, 1);
}

}  // namespace regionfeat
