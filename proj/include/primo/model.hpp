#pragma once

#include <cmath>

#include "primo/assert.hpp"

namespace primo {

// Closed-form conflict-rate comparison between the 2PC-based scheme and the
// write-conflict-free scheme, from the perspective of one local transaction.
//
//   C_2pc        = 1 - (1-P_c)^(m^2 (1 - R_r^2))
//   C_primo_l    = C_2pc
//   C_primo_d    = 1 - (1-P_c)^(m^2 (1 - R_r^2 + R_r^2 R_u))
//   N_2pc        = R_d n h (2 + 2 t_r/t_l)   ~ 2 R_d n h t_r/t_l
//   N_primo      = R_d n h (2 +   t_r/t_l)   ~   R_d n h t_r/t_l
//   CR_2pc       = 1 - (1-C_2pc)^(N_2pc + N_l)
//   CR_primo     = 1 - (1-C_primo_d)^N_primo (1-C_primo_l)^N_l
//
// Both the exact and the approximate concurrency counts are exposed; the
// approximation holds when t_r >> t_l.
struct AnalyticalParams {
    double pc = 0.01;   // pairwise conflict probability
    double m = 10;      // keys per transaction
    double rr = 0.5;    // read ratio
    double ru = 0.6;    // fraction of read records whose rts must be extended
    double rd = 0.2;    // distributed-transaction ratio
    double n = 4;       // partitions
    double h = 4;       // worker threads per partition
    double tr = 10;     // remote access duration
    double tl = 1;      // local transaction duration
    double nl = 3;      // concurrent local transactions (defaults to h-1)
    bool exact = false; // exact concurrency counts instead of the approximation
};

struct ConflictModel {
    double c_2pc = 0;
    double c_primo_local = 0;
    double c_primo_dist = 0;
    double n_2pc = 0;
    double n_primo = 0;
    double cr_2pc = 0;
    double cr_primo = 0;
};

inline ConflictModel conflict_rate_model(const AnalyticalParams& p) {
    PRIMO_ASSERT_MSG(p.pc >= 0.0 && p.pc <= 1.0, "P_c must be in [0,1]");
    PRIMO_ASSERT_MSG(p.rr >= 0.0 && p.rr <= 1.0, "R_r must be in [0,1]");
    PRIMO_ASSERT_MSG(p.ru >= 0.0 && p.ru <= 1.0, "R_u must be in [0,1]");
    PRIMO_ASSERT_MSG(p.rd >= 0.0 && p.rd <= 1.0, "R_d must be in [0,1]");
    PRIMO_ASSERT_MSG(p.tr > 0.0 && p.tl > 0.0, "durations must be positive");

    ConflictModel out;
    const double m2 = p.m * p.m;
    out.c_2pc = 1.0 - std::pow(1.0 - p.pc, m2 * (1.0 - p.rr * p.rr));
    out.c_primo_local = out.c_2pc;
    out.c_primo_dist = 1.0 - std::pow(1.0 - p.pc, m2 * (1.0 - p.rr * p.rr + p.rr * p.rr * p.ru));

    const double ratio = p.tr / p.tl;
    const double base = p.rd * p.n * p.h;
    out.n_2pc = p.exact ? base * (2.0 + 2.0 * ratio) : base * 2.0 * ratio;
    out.n_primo = p.exact ? base * (2.0 + ratio) : base * ratio;

    out.cr_2pc = 1.0 - std::pow(1.0 - out.c_2pc, out.n_2pc + p.nl);
    out.cr_primo =
        1.0 - std::pow(1.0 - out.c_primo_dist, out.n_primo) * std::pow(1.0 - out.c_primo_local, p.nl);
    return out;
}

// The highlighted exponents 2-2R_r^2 and 1-R_r^2+R_r^2 R_u cross where
// R_r^2 (1+R_u) = 1. Solved numerically by bisection; the closed form
// 1/sqrt(1+R_u) serves as the independent check.
inline double exponent_crossover_read_ratio(double ru) {
    PRIMO_ASSERT(ru >= 0.0 && ru <= 1.0);
    auto diff = [&](double rr) { return 1.0 - rr * rr * (1.0 + ru); };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (diff(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace primo
