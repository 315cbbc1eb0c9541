#pragma once

#include <string>
#include <vector>

#include "herrlab/herr_pipeline.hpp"

namespace herrlab {

// Pinned, reproducible module setups.  Every builtin auto-sizes its guard
// digits and twist-factor depth from its schedule.

struct AssembledModule {
    RingCtx ctx;
    FrobData phi;
    PhiGammaModule mod;
    Schedule schedule;
    std::string name;
};

inline Schedule default_schedule_q3() {
    return Schedule{{QuotWindow{2, 4}, QuotWindow{3, 6}, QuotWindow{4, 8}, QuotWindow{5, 10},
                     QuotWindow{6, 12}, QuotWindow{8, 16}, QuotWindow{10, 20}, QuotWindow{12, 24}}};
}

inline Schedule stretch_schedule_ramified() {
    return Schedule{{QuotWindow{2, 4}, QuotWindow{3, 6}, QuotWindow{4, 8}, QuotWindow{5, 10},
                     QuotWindow{6, 12}}};
}

inline std::vector<std::string> builtin_names() {
    return {"cyclotomic-Q3-trivial", "cyclotomic-Q3-chiLT", "standardLT-Q3-trivial",
            "ramified-Q3sqrt3-trivial"};
}

// Degree budget for substitution series over a schedule: the deep column
// reaches q*N + (m-1)(q-1) and gamma inverses need ~2x headroom.
inline int schedule_degree_budget(const FieldParams& fp, const Schedule& s, int m) {
    const QuotWindow& last = s.levels.back();
    int q = int(fp.q());
    int deep = q * last.N + (m - 1) * (q - 1);
    return last.n + 2 * deep + 16;
}

inline AssembledModule assemble_builtin(const std::string& name, int m,
                                        const Schedule* custom_sched = nullptr) {
    AssembledModule out;
    out.name = name;
    if (name == "cyclotomic-Q3-trivial" || name == "cyclotomic-Q3-chiLT" ||
        name == "standardLT-Q3-trivial") {
        FieldParams fp = qp_field(3);
        out.schedule = custom_sched ? *custom_sched : default_schedule_q3();
        int budget = schedule_degree_budget(fp, out.schedule, m);
        out.ctx = make_ring(fp, m, guard_for(fp, budget, 2));
        FrobKind kind =
            (name == "standardLT-Q3-trivial") ? FrobKind::standard : FrobKind::cyclotomic;
        out.phi = default_frobenius(out.ctx, kind, 16);
        out.mod = trivial_module(out.ctx, out.phi, {ring_int(out.ctx, 4)});
        if (name == "cyclotomic-Q3-chiLT")
            out.mod = chi_lt_twist(out.mod, budget);
    } else if (name == "ramified-Q3sqrt3-trivial") {
        FieldParams fp = ramified_quadratic_field(3);
        out.schedule = custom_sched ? *custom_sched : stretch_schedule_ramified();
        int budget = schedule_degree_budget(fp, out.schedule, m);
        out.ctx = make_ring(fp, m, guard_for(fp, budget, 2));
        out.phi = default_frobenius(out.ctx, FrobKind::standard, 16);
        out.mod = trivial_module(out.ctx, out.phi);
    } else {
        throw ValidationError("unknown builtin: " + name);
    }
    return out;
}

}  // namespace herrlab
