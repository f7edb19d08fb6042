#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "regionfeat/sampling.hpp"

namespace regionfeat {

// Inputs of the five-stage cost model. H*W and omega are independent knobs:
// the two cannot be reconciled into one "dense size" because the reference
// totals back-solve to different values (see complexity notes in README).
struct CostConfig {
    long long n = 300;      // RoI count N
    long long k = 49;       // parts K
    long long c_e = 512;    // embedding dim C_E
    long long c_g = 256;    // transform dim C_g
    long long c_f = 256;    // feature channels C_f
    long long h = 14;       // map height
    long long w = 14;       // map width
    long long omega = 196;  // per-RoI average sample count |Omega_b|
};

struct CostBreakdown {
    long long p1 = 0;  // position-key transform over the map: 2*H*W*C_E*C_g
    long long p2 = 0;  // per-RoI box pipeline: N*C_E*(K*C_g + 4*C_E)
    long long p3 = 0;  // geometric dot products: N*K*omega*C_g
    long long p4 = 0;  // appearance 1x1 conv over the map: H*W*K*C_f
    long long p5 = 0;  // weighted aggregation: N*K*omega*C_f
    long long total = 0;
};

namespace detail {

inline long long checked_mul(long long a, long long b) {
    long long out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("FLOP count overflow");
    return out;
}

inline long long checked_add(long long a, long long b) {
    long long out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("FLOP count overflow");
    return out;
}

}  // namespace detail

inline CostBreakdown flops(const CostConfig& cfg) {
    for (long long v : {cfg.n, cfg.k, cfg.c_e, cfg.c_g, cfg.c_f, cfg.h, cfg.w, cfg.omega}) {
        if (v <= 0) throw std::invalid_argument("cost-model variables must be positive");
    }
    using detail::checked_add;
    using detail::checked_mul;
    CostBreakdown out;
    out.p1 = checked_mul(checked_mul(2, checked_mul(cfg.h, cfg.w)),
                         checked_mul(cfg.c_e, cfg.c_g));
    out.p2 = checked_mul(checked_mul(cfg.n, cfg.c_e),
                         checked_add(checked_mul(cfg.k, cfg.c_g), checked_mul(4, cfg.c_e)));
    out.p3 = checked_mul(checked_mul(cfg.n, cfg.k), checked_mul(cfg.omega, cfg.c_g));
    out.p4 = checked_mul(checked_mul(cfg.h, cfg.w), checked_mul(cfg.k, cfg.c_f));
    out.p5 = checked_mul(checked_mul(cfg.n, cfg.k), checked_mul(cfg.omega, cfg.c_f));
    out.total = checked_add(out.p1, checked_add(out.p2, checked_add(out.p3,
                            checked_add(out.p4, out.p5))));
    return out;
}

// Effective cost of a concrete batch of sampling plans: the average sample
// count feeds the model as omega (rounded to nearest, floor 1).
struct MeasuredCost {
    double omega_avg = 0.0;
    CostBreakdown breakdown;
};

inline MeasuredCost measured_flops(const std::vector<SamplingPlan>& plans, CostConfig cfg) {
    if (plans.empty()) throw std::invalid_argument("measured_flops needs at least one plan");
    double total = 0.0;
    for (const SamplingPlan& p : plans) total += static_cast<double>(p.size());
    MeasuredCost out;
    out.omega_avg = total / static_cast<double>(plans.size());
    cfg.omega = std::max(1LL, static_cast<long long>(std::llround(out.omega_avg)));
    out.breakdown = flops(cfg);
    return out;
}

}  // namespace regionfeat
