#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "herrlab/complex_engine.hpp"
#include "herrlab/etale_module.hpp"

namespace herrlab {

// Assembles the generalized phi- and psi-Herr complexes on finite window
// quotients, runs the double stabilization loop (direct limit in the tail
// depth N, inverse limit in the cutoff n), and the verification suites.

struct Schedule {
    std::vector<QuotWindow> levels;  // strictly increasing in N and n
};

inline void validate_schedule(const Schedule& s) {
    if (s.levels.size() < 2) throw ValidationError("schedule needs at least two levels");
    for (size_t i = 0; i + 1 < s.levels.size(); ++i)
        if (s.levels[i + 1].N <= s.levels[i].N || s.levels[i + 1].n <= s.levels[i].n)
            throw ValidationError("schedule must be strictly increasing in N and n");
}

enum class PipeVariant { PhiHerr, PsiHerr };

struct DegreeOutcome {
    MLKind kind = MLKind::NotStabilized;
    Divisors value;
    int level = -1;
    bool n_tower_ok = false;
    bool tail_direction_ok = false;
};

struct CohomologyReport {
    std::string variant;
    std::string module_tag;
    int rank_gamma = 0;  // r: degrees run 0 .. r+1
    bool stabilized = false;
    std::vector<DegreeOutcome> degrees;
    // traces: per schedule level, per degree, the divisors at (N_max, n_b)
    std::vector<std::vector<Divisors>> level_traces;
    std::vector<QuotWindow> schedule_echo;
    int window = 3;
    std::string diagnostics;
    // optional H_K-only diagnostic (no-Gamma cone), per level divisor lists
    std::vector<std::vector<Divisors>> hk_traces;
};

namespace detail {

// Subgroup presented inside a window carrier (image of the Delta projector,
// or the full carrier when no projection applies).
struct SubSpace {
    bool full = true;
    Carrier carrier;  // the presented carrier (divisor orders)
    HGroup pres;      // when !full

    int dim() const { return carrier.dim(); }
};

inline SubSpace full_space(const Carrier& c) {
    SubSpace s;
    s.full = true;
    s.carrier = c;
    return s;
}

inline SubSpace projected_space(const ZMod& zm, const Carrier& c, const Mat& idempotent) {
    SubSpace s;
    s.full = false;
    s.pres = make_subquotient(zm, c, idempotent, Mat(c.dim(), 0));
    s.carrier = Carrier{s.pres.divisors};
    return s;
}

// Restrict a full-carrier map to sub-space coordinates.
inline Mat restrict_map(const ZMod& zm, const SubSpace& src, const SubSpace& tgt,
                        const Mat& full) {
    if (src.full && tgt.full) return full;
    Mat R(tgt.dim(), src.dim());
    for (int j = 0; j < src.dim(); ++j) {
        std::vector<i64> v = src.full ? [&] {
            std::vector<i64> e(full.c, 0);
            e[j] = 1;
            return e;
        }()
                                      : src.pres.reps.col(j);
        std::vector<i64> w = mat_apply(zm, full, v);
        if (tgt.full) {
            for (int i = 0; i < tgt.dim(); ++i) R.at(i, j) = w[i];
        } else {
            std::vector<i64> y = tgt.pres.coords(zm, carrier_reduce(zm, tgt.pres.carrier, w));
            for (int i = 0; i < tgt.dim(); ++i) R.at(i, j) = y[i];
        }
    }
    return R;
}

struct LevelComplex {
    QuotWindow w0, w1;
    SubSpace s0, s1;
    FiniteComplex cone;
};

inline QuotWindow h_target_window(const PhiGammaModule& mod, PipeVariant variant, QuotWindow w) {
    const int q = int(mod.ctx.q());
    const int m = mod.ctx.m();
    int lo_phi = smat_min_lo(mod.Phi);
    if (variant == PipeVariant::PhiHerr) {
        // support of phi(X^{-N}) mod pi^m reaches q*N + (m-1)(q-1) plus the
        // matrix entries' own tails
        int N1 = q * w.N + std::max(0, -lo_phi) + (w.N > 0 ? (m - 1) * (q - 1) : 0);
        return QuotWindow{N1, w.n};
    }
    // psi contracts tails, so the target keeps the same depth: the deep-tail
    // quotient is then strictly depth-decreasing for psi, (psi - 1) is
    // bijective on it, and the comparison cone with the full module is
    // acyclic.  The materializer verifies the fit.
    int n1 = op_tail_bound(mod, ModOp::PsiMinusOne, 0, w.n);
    return QuotWindow{w.N, n1};
}

// Build the Delta-projected Koszul cone at one window level.
inline LevelComplex build_level(const PhiGammaModule& mod, PipeVariant variant, QuotWindow w0) {
    const ZMod& zm = mod.ctx.zm();
    LevelComplex lc;
    lc.w0 = w0;
    lc.w1 = h_target_window(mod, variant, w0);
    Carrier c0 = quotient_basis(mod, w0).carrier;
    Carrier c1 = quotient_basis(mod, lc.w1).carrier;
    if (!mod.deltas.empty()) {
        Mat e0 = materialize_op(mod, ModOp::DeltaProjector, 0, w0, w0).m;
        Mat e1 = materialize_op(mod, ModOp::DeltaProjector, 0, lc.w1, lc.w1).m;
        lc.s0 = projected_space(zm, c0, e0);
        lc.s1 = projected_space(zm, c1, e1);
    } else {
        lc.s0 = full_space(c0);
        lc.s1 = full_space(c1);
    }
    const size_t r = mod.gammas.size();
    std::vector<Mat> t0, t1;
    for (size_t i = 0; i < r; ++i) {
        Mat g0 = materialize_op(mod, ModOp::GammaMinusOne, i, w0, w0).m;
        Mat g1 = materialize_op(mod, ModOp::GammaMinusOne, i, lc.w1, lc.w1).m;
        t0.push_back(restrict_map(zm, lc.s0, lc.s0, g0));
        t1.push_back(restrict_map(zm, lc.s1, lc.s1, g1));
    }
    ModOp hop = (variant == PipeVariant::PhiHerr) ? ModOp::PhiMinusOne : ModOp::PsiMinusOne;
    Mat hfull = materialize_op(mod, hop, 0, w0, lc.w1).m;
    Mat hsub = restrict_map(zm, lc.s0, lc.s1, hfull);
    FiniteComplex K0 = koszul(zm, lc.s0.carrier, t0);
    FiniteComplex K1 = koszul(zm, lc.s1.carrier, t1);
    // chain map: h acting componentwise on every Koszul component
    std::vector<Mat> comps;
    for (int i = 0; i <= int(r); ++i) {
        auto subs = koszul_subsets(int(r), i);
        int n0 = lc.s0.dim(), n1 = lc.s1.dim();
        Mat F(int(subs.size()) * n1, int(subs.size()) * n0);
        for (size_t s = 0; s < subs.size(); ++s)
            for (int a = 0; a < n1; ++a)
                for (int b = 0; b < n0; ++b) F.at(int(s) * n1 + a, int(s) * n0 + b) = hsub.at(a, b);
        comps.push_back(F);
    }
    ChainMap cm{K0, K1, comps};
    lc.cone = total_cone(zm, cm);
    return lc;
}

// Transition between level complexes: window transition restricted to the
// projected spaces, extended blockwise over the cone.
inline std::vector<Mat> cone_transition(const PhiGammaModule& mod, const LevelComplex& from,
                                        const LevelComplex& to) {
    const ZMod& zm = mod.ctx.zm();
    Mat tr0 = restrict_map(zm, from.s0, to.s0,
                           materialize_transition(mod, from.w0, to.w0).m);
    Mat tr1 = restrict_map(zm, from.s1, to.s1,
                           materialize_transition(mod, from.w1, to.w1).m);
    const size_t r = mod.gammas.size();
    std::vector<Mat> comps;
    for (int deg = 0; deg <= int(r) + 1; ++deg) {
        auto sub0 = koszul_subsets(int(r), deg);
        auto sub1 = koszul_subsets(int(r), deg - 1);
        int rows = int(sub0.size()) * to.s0.dim() + int(sub1.size()) * to.s1.dim();
        int cols = int(sub0.size()) * from.s0.dim() + int(sub1.size()) * from.s1.dim();
        Mat F(rows, cols);
        for (size_t s = 0; s < sub0.size(); ++s)
            for (int a = 0; a < to.s0.dim(); ++a)
                for (int b = 0; b < from.s0.dim(); ++b)
                    F.at(int(s) * to.s0.dim() + a, int(s) * from.s0.dim() + b) = tr0.at(a, b);
        int ro = int(sub0.size()) * to.s0.dim(), co = int(sub0.size()) * from.s0.dim();
        for (size_t s = 0; s < sub1.size(); ++s)
            for (int a = 0; a < to.s1.dim(); ++a)
                for (int b = 0; b < from.s1.dim(); ++b)
                    F.at(ro + int(s) * to.s1.dim() + a, co + int(s) * from.s1.dim() + b) =
                        tr1.at(a, b);
        comps.push_back(F);
    }
    return comps;
}

inline void check_chain_transition(const ZMod& zm, const FiniteComplex& A, const FiniteComplex& B,
                                   const std::vector<Mat>& f) {
    ChainMap cm{A, B, f};
    validate_chain_map(zm, cm);
}

inline bool transition_surjective(const ZMod& zm, const Carrier& tgt, const Mat& m) {
    Mat img = submodule_canon(zm, tgt, m);
    Mat full = submodule_canon(zm, tgt, Mat::identity(tgt.dim()));
    return img == full;
}

struct WorkerPool {
    explicit WorkerPool(int n) : nworkers(std::max(1, n)) {}
    int nworkers;
    void run(std::vector<std::function<void()>> tasks) {
        if (nworkers <= 1) {
            for (auto& t : tasks) t();
            return;
        }
        std::atomic<size_t> next{0};
        std::vector<std::thread> ths;
        for (int i = 0; i < nworkers; ++i)
            ths.emplace_back([&] {
                for (;;) {
                    size_t k = next.fetch_add(1);
                    if (k >= tasks.size()) return;
                    tasks[k]();
                }
            });
        for (auto& t : ths) t.join();
    }
};

}  // namespace detail

struct PipelineOptions {
    int window = 3;
    int workers = 1;
    long long max_cells = 200000;
    bool hk_diagnostic = false;
};

// The double-stabilization pipeline for the phi- or psi-Herr complex.
inline CohomologyReport run_herr(const PhiGammaModule& mod, PipeVariant variant,
                                 const Schedule& sched, const PipelineOptions& opt = {}) {
    validate_schedule(sched);
    const ZMod& zm = mod.ctx.zm();
    const int r = int(mod.gammas.size());
    const int degs = r + 2;
    CohomologyReport rep;
    rep.variant = (variant == PipeVariant::PhiHerr) ? "phi_herr" : "psi_herr";
    rep.module_tag = mod.twist_tag;
    rep.rank_gamma = r;
    rep.window = opt.window;
    rep.schedule_echo = sched.levels;
    rep.degrees.assign(size_t(degs), {});

    // respect the cell cap: truncate the schedule if needed
    std::vector<QuotWindow> levels;
    bool capped = false;
    for (const QuotWindow& w : sched.levels) {
        long long cells = (long long)mod.rank * w.width() * int(mod.ctx.d->qexp.size());
        if (cells > opt.max_cells) {
            rep.diagnostics += "schedule truncated by max_cells; ";
            capped = true;
            break;
        }
        levels.push_back(w);
    }
    if (levels.size() < size_t(opt.window + 1)) {
        if (!capped) throw ValidationError("schedule too short for the stabilization window");
        // the cap left too little data: an honest NotStabilized report
        rep.stabilized = false;
        rep.diagnostics += "too few levels under the cell cap to run the detectors; ";
        return rep;
    }
    const int T = int(levels.size());

    // rectangular grid of window pairs (N_a, n_b); inclusions raise a,
    // projections lower b
    std::map<std::pair<int, int>, detail::LevelComplex> grid;
    std::map<std::pair<int, int>, std::vector<HGroup>> gridH;
    auto key = [](int a, int b) { return std::make_pair(a, b); };
    std::vector<std::pair<int, int>> points;
    for (int a = 0; a < T; ++a)
        for (int b = 0; b < T; ++b) points.push_back({a, b});
    {
        std::vector<detail::LevelComplex> results(points.size());
        std::vector<std::vector<HGroup>> hres(points.size());
        std::vector<std::function<void()>> tasks;
        for (size_t i = 0; i < points.size(); ++i)
            tasks.push_back([&, i] {
                auto [a, b] = points[i];
                QuotWindow w{levels[size_t(a)].N, levels[size_t(b)].n};
                results[i] = detail::build_level(mod, variant, w);
                hres[i] = cohomology(zm, results[i].cone);
            });
        detail::WorkerPool pool(opt.workers);
        pool.run(std::move(tasks));
        for (size_t i = 0; i < points.size(); ++i) {
            grid[points[i]] = std::move(results[i]);
            gridH[points[i]] = std::move(hres[i]);
        }
    }

    // level traces: divisors at (N_max, n_b)
    for (int b = 0; b < T; ++b) {
        std::vector<Divisors> tr;
        for (int d = 0; d < degs; ++d) tr.push_back(gridH[key(T - 1, b)][size_t(d)].divisors);
        rep.level_traces.push_back(tr);
    }

    // tail (direct-limit) direction, per row b and degree d: images of
    // H(a, b) inside H(T-1, b) must show a plateau of length >= window.
    // Window-edge classes live for one inclusion step before dying, so the
    // plateau detection looks at composite images, not single-step isos.
    //
    // stable_sub[d][b]: the plateau image as a presented subgroup
    std::vector<std::vector<Mat>> stable_gens;
    stable_gens.resize(size_t(degs));
    for (auto& v : stable_gens) v.resize(size_t(T));
    std::vector<bool> tail_ok(size_t(degs), true);
    for (int b = 0; b < T; ++b) {
        // validate the chain transitions along the row once
        for (int a = 0; a + 1 < T; ++a) {
            const auto& from = grid[key(a, b)];
            const auto& to = grid[key(a + 1, b)];
            auto f = detail::cone_transition(mod, from, to);
            detail::check_chain_transition(zm, from.cone, to.cone, f);
        }
        for (int d = 0; d < degs; ++d) {
            // composite maps into H(T-1, b)
            std::vector<Mat> into_top;
            into_top.resize(size_t(T));
            into_top[size_t(T - 1)] = Mat::identity(int(gridH[key(T - 1, b)][size_t(d)].divisors.size()));
            for (int a = T - 2; a >= 0; --a) {
                const auto& from = grid[key(a, b)];
                const auto& to = grid[key(a + 1, b)];
                auto f = detail::cone_transition(mod, from, to);
                LinMap lm{from.cone.terms[size_t(d)], to.cone.terms[size_t(d)], f[size_t(d)]};
                Mat G = induced_map(zm, gridH[key(a, b)][size_t(d)], lm, gridH[key(a + 1, b)][size_t(d)]);
                into_top[size_t(a)] = divisor_map_compose(
                    zm, gridH[key(T - 1, b)][size_t(d)].divisors, into_top[size_t(a + 1)], G);
            }
            const Divisors& dtop = gridH[key(T - 1, b)][size_t(d)].divisors;
            std::vector<Mat> images;
            for (int a = 0; a < T; ++a) {
                Divisors dsrc = gridH[key(a, b)][size_t(d)].divisors;
                images.push_back(divisor_map_image(zm, dsrc, dtop, into_top[size_t(a)]));
            }
            // latest plateau of length >= window among a = 0..T-1
            int best_start = -1;
            int run = 1;
            for (int a = 1; a < T; ++a) {
                if (images[size_t(a)] == images[size_t(a - 1)])
                    ++run;
                else
                    run = 1;
                if (run >= opt.window) best_start = a - run + 1;
            }
            if (best_start < 0) {
                tail_ok[size_t(d)] = false;
                stable_gens[size_t(d)][size_t(b)] = images.back();
            } else {
                stable_gens[size_t(d)][size_t(b)] = images[size_t(best_start)];
            }
        }
    }

    // n direction: ML tower of the plateau images C(b) inside H(T-1, b),
    // with projection-induced maps; carrier transitions asserted surjective
    for (int d = 0; d < degs; ++d) {
        // present C(b) as subquotients of the divisor carriers
        std::vector<HGroup> cpres;
        for (int b = 0; b < T; ++b) {
            Carrier hc{gridH[key(T - 1, b)][size_t(d)].divisors};
            Mat gens = divisor_image_unscale(zm, hc.exps, stable_gens[size_t(d)][size_t(b)]);
            cpres.push_back(make_subquotient(zm, hc, gens, Mat(hc.dim(), 0)));
        }
        TowerOfGroups tower;
        for (int b = 0; b < T; ++b) tower.groups.push_back(cpres[size_t(b)].divisors);
        bool maps_ok = true;
        for (int b = 0; b + 1 < T; ++b) {
            const auto& from = grid[key(T - 1, b + 1)];
            const auto& to = grid[key(T - 1, b)];
            auto f = detail::cone_transition(mod, from, to);
            detail::check_chain_transition(zm, from.cone, to.cone, f);
            if (!detail::transition_surjective(zm, to.cone.terms[size_t(d)], f[size_t(d)]))
                throw Error("n-direction carrier transition is not surjective");
            LinMap lm{from.cone.terms[size_t(d)], to.cone.terms[size_t(d)], f[size_t(d)]};
            Mat G = induced_map(zm, gridH[key(T - 1, b + 1)][size_t(d)], lm,
                                gridH[key(T - 1, b)][size_t(d)]);
            // restrict to the plateau subgroups: map generators through G
            const HGroup& src = cpres[size_t(b + 1)];
            const HGroup& dst = cpres[size_t(b)];
            Mat R(int(dst.divisors.size()), int(src.divisors.size()));
            try {
                for (int jg = 0; jg < int(src.divisors.size()); ++jg) {
                    std::vector<i64> v = mat_apply(zm, G, src.reps.col(jg));
                    v = carrier_reduce(zm, dst.carrier, v);
                    std::vector<i64> y = dst.coords(zm, v);
                    for (int ig = 0; ig < int(dst.divisors.size()); ++ig) R.at(ig, jg) = y[ig];
                }
            } catch (const Error&) {
                maps_ok = false;
            }
            tower.maps.push_back(R);
        }
        DegreeOutcome& out = rep.degrees[size_t(d)];
        out.tail_direction_ok = tail_ok[size_t(d)];
        if (!maps_ok) {
            out.kind = MLKind::NotStabilized;
            out.n_tower_ok = false;
            continue;
        }
        MLResult ml = ml_stabilize(zm, tower, opt.window);
        out.kind = ml.kind;
        out.value = ml.value;
        out.level = ml.level;
        out.n_tower_ok = (ml.kind == MLKind::Stabilized || ml.kind == MLKind::MLZero);
        if (ml.kind == MLKind::MLZero) out.value = {};
    }
    rep.stabilized = true;
    for (const auto& o : rep.degrees)
        if (!(o.n_tower_ok && o.tail_direction_ok)) rep.stabilized = false;

    // optional diagnostic: the no-Gamma complex M --(h-1)--> M, expected
    // not to stabilize (its H^1 is infinite-dimensional)
    if (opt.hk_diagnostic) {
        PhiGammaModule stripped = mod;
        stripped.gammas.clear();
        stripped.deltas.clear();
        // trace along the tail direction, where the divergence of the
        // no-Gamma complex shows up as unbounded cokernel growth
        for (int a = 0; a < T; ++a) {
            QuotWindow w{levels[size_t(a)].N, levels[size_t(T - 1)].n};
            detail::LevelComplex lc = detail::build_level(stripped, variant, w);
            std::vector<Divisors> tr;
            for (const HGroup& h : cohomology(zm, lc.cone)) tr.push_back(h.divisors);
            rep.hk_traces.push_back(tr);
        }
    }
    return rep;
}

inline CohomologyReport phi_herr(const PhiGammaModule& mod, const Schedule& sched,
                                 const PipelineOptions& opt = {}) {
    return run_herr(mod, PipeVariant::PhiHerr, sched, opt);
}

inline CohomologyReport psi_herr(const PhiGammaModule& mod, const Schedule& sched,
                                 const PipelineOptions& opt = {}) {
    return run_herr(mod, PipeVariant::PsiHerr, sched, opt);
}

// ------------------------------------------------------------------
// Iwasawa sequence: stabilization diagnostics for ker/coker of (psi - 1)
// ------------------------------------------------------------------

struct IwasawaReport {
    std::vector<Divisors> ker_trace, coker_trace;  // per schedule level
    std::vector<bool> consistency;                 // |ker| * |im| = |carrier|
    MLKind ker_kind = MLKind::NotStabilized;
    MLKind coker_kind = MLKind::NotStabilized;
    Divisors ker_value, coker_value;
    std::vector<QuotWindow> schedule_echo;
    std::string diagnostics;
};

inline IwasawaReport iwasawa_sequence(const PhiGammaModule& mod, const Schedule& sched,
                                      const PipelineOptions& opt = {}) {
    validate_schedule(sched);
    const ZMod& zm = mod.ctx.zm();
    IwasawaReport rep;
    rep.schedule_echo = sched.levels;
    const int T = int(sched.levels.size());
    std::vector<HGroup> kers, cokers;
    std::vector<LinMap> psimaps;
    std::vector<QuotWindow> tgts;
    for (int t = 0; t < T; ++t) {
        QuotWindow w = sched.levels[size_t(t)];
        QuotWindow w1 = detail::h_target_window(mod, PipeVariant::PsiHerr, w);
        LinMap psi = materialize_op(mod, ModOp::PsiMinusOne, 0, w, w1);
        psimaps.push_back(psi);
        tgts.push_back(w1);
        Mat K = map_kernel(zm, psi);
        HGroup hker = make_subquotient(zm, psi.src, K, Mat(psi.src.dim(), 0));
        Mat I = map_image(zm, psi);
        Mat full = Mat::identity(psi.tgt.dim());
        HGroup hcok = make_subquotient(zm, psi.tgt, full, I);
        rep.ker_trace.push_back(hker.divisors);
        rep.coker_trace.push_back(hcok.divisors);
        kers.push_back(hker);
        cokers.push_back(hcok);
        // |ker| * |im| = |domain| per level
        Divisors imdiv = subgroup_divisors(zm, psi.tgt, psi.m);
        long long lhs = hker.log_order() + divisor_log_order(imdiv);
        long long rhs = 0;
        for (int e : psi.src.exps) rhs += e;
        rep.consistency.push_back(lhs == rhs);
    }
    // stabilization diagnosis on divisor traces (the honest contract here:
    // the 4-term consistency identity plus trace constancy; H^1_Iw towers
    // for torsion coefficients are allowed to keep growing)
    auto classify = [&](const std::vector<Divisors>& tr, MLKind& kind, Divisors& value) {
        bool constant = true;
        for (int t = std::max(0, T - opt.window); t + 1 < T; ++t)
            if (tr[size_t(t)] != tr[size_t(t + 1)]) constant = false;
        bool all_empty = constant && tr.back().empty();
        if (all_empty) {
            kind = MLKind::MLZero;
        } else if (constant) {
            kind = MLKind::Stabilized;
            value = tr.back();
        } else {
            kind = MLKind::NotStabilized;
        }
    };
    classify(rep.ker_trace, rep.ker_kind, rep.ker_value);
    classify(rep.coker_trace, rep.coker_kind, rep.coker_value);
    if (rep.ker_kind == MLKind::NotStabilized || rep.coker_kind == MLKind::NotStabilized)
        rep.diagnostics += "iwasawa towers did not stabilize on this schedule (expected for "
                           "modules with infinite-corank H^1_Iw); ";
    return rep;
}

// ------------------------------------------------------------------
// Exactness lemma suite on the coefficient ring itself
// ------------------------------------------------------------------

struct LemmaReport {
    bool frobenius_bijective_on_tails = true;   // (a)
    bool neumann_residual_zero = true;          // (a) inverse formula
    bool kernel_is_constants = true;            // (b)
    bool surjective_on_tail_windows = true;     // (c)
    std::vector<Divisors> kernel_divisors;      // per (N, n) sample
    std::string detail;
};

inline LemmaReport verify_exactness_lemmas(const RingCtx& ctx, const FrobData& phi, int n_max,
                                           int N_max) {
    const ZMod& zm = ctx.zm();
    LemmaReport rep;
    PhiGammaModule triv;
    triv.ctx = ctx;
    triv.phi = phi;
    triv.rank = 1;
    triv.Phi = smat_identity(ctx, 1);
    triv.twist_tag = "lemma-suite";
    const int q = int(ctx.q());
    // (a) + (c): on positive windows [n, N_max), (Fr - id) is bijective
    for (int n = 1; n <= n_max; ++n) {
        int width = N_max - n;
        if (width <= 0) continue;
        Carrier c;
        for (int e = n; e < N_max; ++e)
            for (int s : ctx.d->qexp) c.exps.push_back(s);
        const int nslots = int(ctx.d->qexp.size());
        Mat M(c.dim(), c.dim());
        for (int e = n; e < N_max; ++e)
            for (int s = 0; s < nslots; ++s) {
                std::vector<i64> y(nslots, 0);
                y[s] = 1;
                LaurentTrunc v = s_monomial(ctx, e, ring_from_canonical(ctx, y));
                LaurentTrunc img = s_sub(phi_substitute(v, phi, N_max), v);
                int col = (e - n) * nslots + s;
                for (const auto& [ee, coeff] : img.c) {
                    if (ee >= N_max || ee < n) continue;
                    auto yy = ring_canonical(coeff);
                    for (int s2 = 0; s2 < nslots; ++s2)
                        if (yy[s2]) M.at((ee - n) * nslots + s2, col) = yy[s2];
                }
            }
        // reduce per-slot orders: bijectivity over the carrier
        bool bij = true;
        {
            LinMap lm{c, c, M};
            Mat K = map_kernel(zm, lm);
            if (!subgroup_divisors(zm, c, K).empty()) bij = false;
            if (!detail::transition_surjective(zm, c, M)) bij = false;
        }
        if (!bij) rep.frobenius_bijective_on_tails = false;
        if (!bij) rep.surjective_on_tail_windows = false;
        // Neumann inverse: beta = -sum Fr^i(alpha) with Fr^I past the window
        SplitMix64 rng(1000 + n);
        for (int trial = 0; trial < 3; ++trial) {
            LaurentTrunc alpha = s_zero(ctx, n, N_max);
            for (int e = n; e < std::min(n + 4, N_max); ++e)
                alpha = s_add(alpha,
                              s_monomial(ctx, e, ring_int(ctx, i64(rng.below(9))), N_max));
            LaurentTrunc beta = s_zero(ctx, n, N_max);
            LaurentTrunc iter = alpha;
            int I = 1;
            while (true) {
                beta = s_sub(beta, iter);
                if ((long long)iter.support_min() * q >= N_max || iter.c.empty()) break;
                iter = window_quotient(phi_substitute(iter, phi, N_max), N_max);
                if (++I > 64) break;
            }
            LaurentTrunc resid =
                s_sub(window_quotient(s_sub(phi_substitute(beta, phi, N_max), beta), N_max),
                      window_quotient(alpha, N_max));
            // residual must vanish on [n, N_max)
            for (const auto& [e, vcoef] : resid.c)
                if (e >= n && e < N_max && !ring_is_zero_mod(vcoef))
                    rep.neumann_residual_zero = false;
        }
    }
    // (b): kernel of (Fr - 1) on [-N, n)-windows is exactly O_L/pi^m
    for (int n = 1; n <= n_max; ++n) {
        QuotWindow w{std::max(1, N_max / 8), n};
        QuotWindow tgt = detail::h_target_window(triv, PipeVariant::PhiHerr, w);
        LinMap fr = materialize_op(triv, ModOp::PhiMinusOne, 0, w, tgt);
        Mat K = map_kernel(zm, fr);
        Divisors kd = subgroup_divisors(zm, fr.src, K);
        rep.kernel_divisors.push_back(kd);
        Divisors rm(ctx.d->qexp.begin(), ctx.d->qexp.end());
        std::sort(rm.rbegin(), rm.rend());
        if (kd != rm) rep.kernel_is_constants = false;
        // and the constants really span it: the canonical kernel contains 1
        QuotientBasis qb = quotient_basis(triv, w);
        std::vector<i64> onevec(qb.dim(), 0);
        auto ycoords = ring_canonical(ring_one(ctx));
        for (int s = 0; s < qb.nslots(); ++s) onevec[size_t(qb.index(0, 0, s))] = ycoords[size_t(s)];
        if (!submodule_contains(zm, K, onevec)) rep.kernel_is_constants = false;
    }
    if (!(rep.frobenius_bijective_on_tails && rep.neumann_residual_zero &&
          rep.kernel_is_constants && rep.surjective_on_tail_windows))
        throw LemmaViolation("exactness lemma suite failed (implementation bug)");
    return rep;
}

// ------------------------------------------------------------------
// Duality check
// ------------------------------------------------------------------

struct DualityReport {
    CohomologyReport a, b;
    bool orders_match = false;
    bool divisors_match = false;
};

inline DualityReport duality_check(const PhiGammaModule& ma, const PhiGammaModule& mb,
                                   const Schedule& sched, const PipelineOptions& opt = {}) {
    DualityReport rep;
    rep.a = phi_herr(ma, sched, opt);
    rep.b = phi_herr(mb, sched, opt);
    if (!rep.a.stabilized || !rep.b.stabilized)
        throw NotStabilizedError("duality check needs both runs stabilized");
    rep.orders_match = true;
    rep.divisors_match = true;
    for (int i = 0; i <= 2; ++i) {
        const Divisors& da = rep.a.degrees[size_t(i)].value;
        const Divisors& db = rep.b.degrees[size_t(2 - i)].value;
        if (divisor_log_order(da) != divisor_log_order(db)) rep.orders_match = false;
        if (da != db) rep.divisors_match = false;
    }
    if (!rep.orders_match) throw DualityMismatch("duality order comparison failed");
    return rep;
}

// ------------------------------------------------------------------
// Degree-0 fast path
// ------------------------------------------------------------------

inline Divisors h0_fast(const PhiGammaModule& mod, QuotWindow w) {
    const ZMod& zm = mod.ctx.zm();
    QuotWindow w1 = detail::h_target_window(mod, PipeVariant::PhiHerr, w);
    std::vector<LinMap> ops;
    ops.push_back(materialize_op(mod, ModOp::PhiMinusOne, 0, w, w1));
    for (size_t i = 0; i < mod.gammas.size(); ++i)
        ops.push_back(materialize_op(mod, ModOp::GammaMinusOne, i, w, w));
    for (size_t j = 0; j < mod.deltas.size(); ++j)
        ops.push_back(materialize_op(mod, ModOp::DeltaMinusOne, j, w, w));
    // stack into one map
    int rows = 0;
    for (const auto& op : ops) rows += op.tgt.dim();
    Carrier tgt;
    for (const auto& op : ops)
        tgt.exps.insert(tgt.exps.end(), op.tgt.exps.begin(), op.tgt.exps.end());
    Mat M(rows, ops[0].src.dim());
    int off = 0;
    for (const auto& op : ops) {
        for (int i = 0; i < op.m.r; ++i)
            for (int j = 0; j < op.m.c; ++j) M.at(off + i, j) = op.m.at(i, j);
        off += op.m.r;
    }
    LinMap joint{ops[0].src, tgt, M};
    Mat K = map_kernel(zm, joint);
    return subgroup_divisors(zm, joint.src, K);
}

}  // namespace herrlab
