#pragma once

#include <functional>
#include <string>
#include <vector>

#include "herrlab/lubin_tate.hpp"

namespace herrlab {

// Etale (phi, Gamma)-modules presented by matrices of truncated Laurent
// series, their semilinear operators, and materialization on finite
// window quotients.

using SeriesVec = std::vector<LaurentTrunc>;
using SeriesMat = std::vector<SeriesVec>;  // row-major, d x d

inline SeriesMat smat_identity(const RingCtx& ctx, int d) {
    SeriesMat m(d, SeriesVec(d, s_zero(ctx)));
    for (int i = 0; i < d; ++i) m[i][i] = s_const(ctx, 1);
    return m;
}

inline SeriesMat smat_scalar(const RingCtx& ctx, int d, const LaurentTrunc& c) {
    SeriesMat m(d, SeriesVec(d, s_zero(ctx)));
    for (int i = 0; i < d; ++i) m[i][i] = c;
    return m;
}

inline SeriesMat smat_mul(const SeriesMat& a, const SeriesMat& b) {
    int d = int(a.size());
    SeriesMat r(d, SeriesVec(d, s_zero(a[0][0].ctx)));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            LaurentTrunc acc = s_mul(a[i][0], b[0][j]);
            for (int k = 1; k < d; ++k) acc = s_add(acc, s_mul(a[i][k], b[k][j]));
            r[i][j] = acc;
        }
    return r;
}

inline SeriesMat smat_scale_series(const SeriesMat& a, const LaurentTrunc& c) {
    SeriesMat r = a;
    for (auto& row : r)
        for (auto& x : row) x = s_mul(x, c);
    return r;
}

inline SeriesVec smat_apply(const SeriesMat& a, const SeriesVec& v) {
    int d = int(a.size());
    SeriesVec r(d, s_zero(v[0].ctx));
    for (int i = 0; i < d; ++i) {
        LaurentTrunc acc = s_mul(a[i][0], v[0]);
        for (int k = 1; k < d; ++k) acc = s_add(acc, s_mul(a[i][k], v[k]));
        r[i] = acc;
    }
    return r;
}

inline bool smat_equal_mod(const SeriesMat& a, const SeriesMat& b) {
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a.size(); ++j)
            if (!s_equal_mod(a[i][j], b[i][j])) return false;
    return true;
}

inline int smat_min_lo(const SeriesMat& a) {
    int lo = 0;
    for (const auto& row : a)
        for (const auto& x : row)
            if (!x.c.empty()) lo = std::min(lo, x.support_min());
    return lo;
}

// Determinant by cofactor expansion (ranks here are tiny).
inline LaurentTrunc smat_det(const SeriesMat& a) {
    int d = int(a.size());
    if (d == 1) return a[0][0];
    LaurentTrunc acc = s_zero(a[0][0].ctx);
    for (int j = 0; j < d; ++j) {
        SeriesMat minor(d - 1, SeriesVec());
        for (int i = 1; i < d; ++i)
            for (int k = 0; k < d; ++k)
                if (k != j) minor[i - 1].push_back(a[i][k]);
        LaurentTrunc term = s_mul(a[0][j], smat_det(minor));
        acc = (j % 2 == 0) ? s_add(acc, term) : s_sub(acc, term);
    }
    return acc;
}

// Inverse via the adjugate; det must be a unit of the truncated Laurent
// ring (some coefficient a unit of R_m, everything below pi-divisible).
inline SeriesMat smat_inverse(const SeriesMat& a, int out_hi) {
    int d = int(a.size());
    const RingCtx& ctx = a[0][0].ctx;
    LaurentTrunc det = smat_det(a);
    LaurentTrunc dinv;
    try {
        dinv = (det.c.size() == 1 && ring_is_unit(det.c.begin()->second) &&
                det.support_min() == 0)
                   ? s_invert(det, out_hi >= kExactHi ? -1 : out_hi)
                   : s_invert_pi_leading(det, out_hi);
    } catch (const NotUnit&) {
        throw NotEtale("matrix determinant is not invertible");
    } catch (const NonInvertibleTail&) {
        throw NotEtale("matrix determinant is not invertible on the window");
    }
    SeriesMat inv(d, SeriesVec(d, s_zero(ctx)));
    if (d == 1) {
        inv[0][0] = dinv;
        return inv;
    }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            // minor deleting row j, column i (adjugate transposes)
            SeriesMat mm;
            for (int r = 0; r < d; ++r) {
                if (r == j) continue;
                SeriesVec row;
                for (int cidx = 0; cidx < d; ++cidx)
                    if (cidx != i) row.push_back(a[r][cidx]);
                mm.push_back(row);
            }
            LaurentTrunc cof = smat_det(mm);
            if ((i + j) % 2 == 1) cof = s_neg(cof);
            inv[i][j] = s_mul(cof, dinv);
        }
    return inv;
}

// ------------------------------------------------------------------

struct PhiGammaModule {
    RingCtx ctx;
    FrobData phi;
    int rank = 1;
    SeriesMat Phi;                                    // matrix of phi_M
    std::vector<std::pair<RingElem, SeriesMat>> gammas;  // (chi_LT value, matrix)
    std::vector<std::pair<RingElem, SeriesMat>> deltas;  // (Teichmueller unit, matrix)
    std::string twist_tag;
};

// Default topological generators of the free part of the unit group
// 1 + pi O_L: 1 + pi t^i for i < e*f in the monomial basis.
inline std::vector<RingElem> default_gamma_units(const RingCtx& ctx) {
    std::vector<RingElem> out;
    const int n = ctx.n();
    for (int i = 0; i < n; ++i) {
        std::vector<i64> mono(n, 0);
        mono[i] = 1;
        RingElem t = ring_from_coords(ctx, mono);
        out.push_back(ring_add(ring_one(ctx), ring_mul(ring_pi(ctx), t)));
    }
    return out;
}

// A Teichmueller generator of the prime-to-p torsion mu_{q-1}.
inline RingElem default_delta_unit(const RingCtx& ctx) {
    const i64 q = ctx.q();
    RingCtx res = make_ring(ctx.d->params, 1, 1);
    for (const RingElem& r : ring_enumerate(res)) {
        if (!ring_is_unit(r)) continue;
        RingElem lift = teichmuller(ring_from_coords(ctx, r.c));
        // order must be exactly q - 1
        RingElem x = lift;
        int ord = 1;
        while (!ring_equal_mod(x, ring_one(ctx)) && ord <= q) {
            x = ring_mul(x, lift);
            ++ord;
        }
        if (ord == q - 1) return lift;
    }
    throw Error("no multiplicative generator found");
}

inline int unit_order(const RingElem& w) {
    RingElem x = w;
    int ord = 1;
    i64 cap = w.ctx.q() + 1;
    while (!ring_equal_mod(x, ring_one(w.ctx))) {
        x = ring_mul(x, w);
        if (++ord > cap) throw ValidationError("delta unit is not torsion of order dividing q-1");
    }
    return ord;
}

namespace detail {
// entrywise substitution through [u]_phi
inline SeriesMat smat_gamma(const SeriesMat& a, const RingElem& u, const FrobData& phi,
                            int out_hi) {
    SeriesMat r = a;
    for (auto& row : r)
        for (auto& x : row) x = gamma_action(x, u, phi, out_hi);
    return r;
}
inline SeriesMat smat_phi(const SeriesMat& a, const FrobData& phi, int out_hi) {
    SeriesMat r = a;
    for (auto& row : r)
        for (auto& x : row) x = phi_substitute(x, phi, out_hi);
    return r;
}
}  // namespace detail

// Re-checkable module invariants: etale flag and all semilinear
// commutation relations, verified as residuals on certified windows.
inline void validate_module(const PhiGammaModule& mod, int check_hi = 8) {
    const RingCtx& ctx = mod.ctx;
    {
        LaurentTrunc det = smat_det(mod.Phi);
        bool ok = false;
        for (const auto& [e, v] : det.c) {
            if (ring_is_unit(v)) {
                ok = true;
                break;
            }
            if (pi_valuation_internal(v) < 1) break;
        }
        if (!ok) throw NotEtale("det(Phi) has no unit coefficient on its window");
    }
    auto commute_check = [&](const RingElem& u, const SeriesMat& G, const char* what) {
        SeriesMat lhs = smat_mul(G, detail::smat_gamma(mod.Phi, u, mod.phi, check_hi));
        SeriesMat rhs = smat_mul(mod.Phi, detail::smat_phi(G, mod.phi, check_hi));
        for (int i = 0; i < mod.rank; ++i)
            for (int j = 0; j < mod.rank; ++j)
                if (!s_equal_mod(lhs[i][j], rhs[i][j]))
                    throw CommutationFailure(std::string(what) + ": semilinear commutation fails");
    };
    for (const auto& [u, G] : mod.gammas) commute_check(u, G, "gamma");
    for (const auto& [w, D] : mod.deltas) commute_check(w, D, "delta");
    // pairwise gamma commutation (and with deltas)
    auto pair_check = [&](const RingElem& u, const SeriesMat& G, const RingElem& v,
                          const SeriesMat& H) {
        SeriesMat lhs = smat_mul(G, detail::smat_gamma(H, u, mod.phi, check_hi));
        SeriesMat rhs = smat_mul(H, detail::smat_gamma(G, v, mod.phi, check_hi));
        for (int i = 0; i < mod.rank; ++i)
            for (int j = 0; j < mod.rank; ++j)
                if (!s_equal_mod(lhs[i][j], rhs[i][j]))
                    throw CommutationFailure("group action matrices do not commute");
    };
    for (size_t i = 0; i < mod.gammas.size(); ++i)
        for (size_t j = i + 1; j < mod.gammas.size(); ++j)
            pair_check(mod.gammas[i].first, mod.gammas[i].second, mod.gammas[j].first,
                       mod.gammas[j].second);
    for (const auto& [w, D] : mod.deltas)
        for (const auto& [u, G] : mod.gammas) pair_check(w, D, u, G);
    // delta torsion: the semilinear power of order(w) is the identity
    for (const auto& [w, D] : mod.deltas) {
        int ord = unit_order(w);
        if (ctx.d->params.p % ord == 0) throw TorsionNotCoprime();
        SeriesMat acc = D;
        RingElem upow = w;
        for (int k = 1; k < ord; ++k) {
            acc = smat_mul(acc, detail::smat_gamma(D, upow, mod.phi, check_hi));
            upow = ring_mul(upow, w);
        }
        SeriesMat id = smat_identity(ctx, mod.rank);
        if (!smat_equal_mod(acc, id))
            throw CommutationFailure("delta matrix power is not the identity");
    }
}

inline PhiGammaModule trivial_module(const RingCtx& ctx, const FrobData& phi,
                                     std::vector<RingElem> gamma_units = {},
                                     std::vector<RingElem> delta_units = {}) {
    PhiGammaModule mod;
    mod.ctx = ctx;
    mod.phi = phi;
    mod.rank = 1;
    mod.Phi = smat_identity(ctx, 1);
    if (gamma_units.empty()) gamma_units = default_gamma_units(ctx);
    if (delta_units.empty() && ctx.q() > 2) delta_units = {default_delta_unit(ctx)};
    for (const RingElem& u : gamma_units) mod.gammas.push_back({u, smat_identity(ctx, 1)});
    for (const RingElem& w : delta_units) mod.deltas.push_back({w, smat_identity(ctx, 1)});
    mod.twist_tag = "trivial";
    validate_module(mod);
    return mod;
}

inline PhiGammaModule rank_one_module(const RingCtx& ctx, const FrobData& phi,
                                      const LaurentTrunc& c_phi,
                                      const std::vector<LaurentTrunc>& c_gammas,
                                      std::vector<RingElem> gamma_units = {},
                                      const std::vector<LaurentTrunc>& c_deltas = {},
                                      std::vector<RingElem> delta_units = {}) {
    PhiGammaModule mod;
    mod.ctx = ctx;
    mod.phi = phi;
    mod.rank = 1;
    mod.Phi = {{c_phi}};
    if (gamma_units.empty()) gamma_units = default_gamma_units(ctx);
    if (delta_units.empty() && ctx.q() > 2 && c_deltas.empty())
        delta_units = {default_delta_unit(ctx)};
    if (c_gammas.size() != gamma_units.size()) throw ValidationError("gamma factor count");
    for (size_t i = 0; i < gamma_units.size(); ++i)
        mod.gammas.push_back({gamma_units[i], {{c_gammas[i]}}});
    for (size_t j = 0; j < delta_units.size(); ++j)
        mod.deltas.push_back(
            {delta_units[j], {{j < c_deltas.size() ? c_deltas[j] : s_const(ctx, 1)}}});
    mod.twist_tag = "rank-one";
    validate_module(mod);
    return mod;
}

// Tensor with the differential line: the phi factor picks up pi^{-1} phi',
// every group element u picks up ([u]_phi)'.
inline PhiGammaModule chi_lt_twist(const PhiGammaModule& mod, int factor_degree = -1) {
    const RingCtx& ctx = mod.ctx;
    if (factor_degree < 0) factor_degree = mod.phi.default_degree;
    PhiGammaModule out = mod;
    LaurentTrunc dphi = s_derivative(mod.phi.series);
    LaurentTrunc phi_factor;
    try {
        phi_factor = s_pi_divide(dphi, 1);
    } catch (const NotDivisible&) {
        throw PrecisionLoss("phi' not divisible by pi");
    } catch (const InsufficientGuard&) {
        throw PrecisionLoss("chi_LT twist exhausted the guard digits");
    }
    out.Phi = smat_scale_series(mod.Phi, phi_factor);
    for (auto& [u, G] : out.gammas) {
        LTEndo en = lt_endomorphism(u, mod.phi, factor_degree);
        G = smat_scale_series(G, s_derivative(en.series));
    }
    for (auto& [w, D] : out.deltas) {
        LTEndo en = lt_endomorphism(w, mod.phi, factor_degree);
        D = smat_scale_series(D, s_derivative(en.series));
    }
    out.twist_tag = mod.twist_tag + "(chi_LT)";
    validate_module(out);
    return out;
}

// Semilinear operator applications on coordinate vectors.
inline SeriesVec apply_phi(const PhiGammaModule& mod, const SeriesVec& v, int out_hi = -1) {
    SeriesVec fv = v;
    for (auto& x : fv) x = phi_substitute(x, mod.phi, out_hi);
    return smat_apply(mod.Phi, fv);
}

inline SeriesVec apply_gamma(const PhiGammaModule& mod, size_t idx, const SeriesVec& v,
                             int out_hi = -1) {
    const auto& [u, G] = mod.gammas.at(idx);
    SeriesVec fv = v;
    for (auto& x : fv) x = gamma_action(x, u, mod.phi, out_hi);
    return smat_apply(G, fv);
}

inline SeriesVec apply_delta(const PhiGammaModule& mod, size_t idx, const SeriesVec& v,
                             int out_hi = -1) {
    const auto& [w, D] = mod.deltas.at(idx);
    SeriesVec fv = v;
    for (auto& x : fv) x = gamma_action(x, w, mod.phi, out_hi);
    return smat_apply(D, fv);
}

// psi normalization: the integral operator satisfies psi(phi(v)) = (q/pi) v;
// the left-inverse variant rescales by pi/q, which only exists when q/pi is
// a unit (that is, over Q_p where q = pi = p).
enum class PsiNormalization { integral, left_inverse };

// psi_M(w) = psi applied to the phi-basis coordinates Phi^{-1} w.
inline SeriesVec apply_psi(const PhiGammaModule& mod, const SeriesVec& v, int inv_hi = 24,
                           PsiNormalization norm = PsiNormalization::integral) {
    SeriesMat inv = smat_inverse(mod.Phi, inv_hi);
    SeriesVec u = smat_apply(inv, v);
    for (auto& x : u) x = psi_series(x, mod.phi);
    if (norm == PsiNormalization::left_inverse) {
        RingElem qoverpi = pi_divide(ring_int(mod.ctx, mod.ctx.q()), 1);
        if (!ring_is_unit(qoverpi))
            throw ValidationError("left-inverse psi needs q/pi to be a unit (L = Q_p)");
        RingElem scale = ring_inv(qoverpi);
        for (auto& x : u) x = s_scale(x, scale);
    }
    return u;
}

// The finite group Delta generated by the delta data: elements keyed by the
// canonical coordinates of their unit.
struct DeltaGroup {
    std::vector<std::pair<RingElem, SeriesMat>> elements;  // includes identity
};

// The image data of the torsion idempotent e = |Delta|^{-1} sum over the
// group.  The invariants form a module over the Delta-fixed subring, so the
// computational carrier is the window-level projector (materialized by
// ModOp::DeltaProjector); this wrapper keeps the module together with its
// enumerated torsion group.  With empty Delta the projector is the identity.
struct DeltaProjected {
    PhiGammaModule base;
    std::vector<std::pair<RingElem, SeriesMat>> group_elements;
};

inline DeltaProjected delta_project(const PhiGammaModule& mod);

inline DeltaGroup delta_group(const PhiGammaModule& mod) {
    const RingCtx& ctx = mod.ctx;
    DeltaGroup g;
    // dedupe by canonical class, but keep the full-precision units: the
    // Teichmueller guard digits matter for the substitution series
    std::map<std::vector<i64>, std::pair<RingElem, SeriesMat>> seen;
    seen[ring_canonical(ring_one(ctx))] = {ring_one(ctx), smat_identity(ctx, mod.rank)};
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [w, D] : mod.deltas) {
            auto next = seen;
            for (const auto& [key, elem] : seen) {
                const auto& [u, mat] = elem;
                RingElem wu = ring_mul(w, u);
                auto k2 = ring_canonical(wu);
                if (next.find(k2) == next.end()) {
                    // (w, D) acting after (u, mat): matrix D * delta_w(mat)
                    next[k2] = {wu, smat_mul(D, detail::smat_gamma(mat, w, mod.phi, 8))};
                    grew = true;
                }
            }
            seen = next;
        }
    }
    for (auto& [key, elem] : seen) g.elements.push_back(elem);
    if (i64(g.elements.size()) % ctx.p() == 0) throw TorsionNotCoprime();
    return g;
}

inline DeltaProjected delta_project(const PhiGammaModule& mod) {
    DeltaProjected out;
    out.base = mod;
    if (!mod.deltas.empty()) out.group_elements = delta_group(mod).elements;
    return out;
}

// ------------------------------------------------------------------
// Finite window quotients
// ------------------------------------------------------------------

struct QuotWindow {
    int N = 0;  // tail depth: window [-N, n)
    int n = 1;
    int width() const { return N + n; }
    bool operator==(const QuotWindow& o) const { return N == o.N && n == o.n; }
};

enum class ModOp { PhiMinusOne, PsiMinusOne, GammaMinusOne, DeltaMinusOne, DeltaProjector };

struct QuotientBasis {
    RingCtx ctx;
    int rank;
    QuotWindow w;
    Carrier carrier;

    int nslots() const { return int(ctx.d->qexp.size()); }
    int dim() const { return rank * w.width() * nslots(); }
    int index(int coord, int exp, int slot) const {
        return (coord * w.width() + (exp + w.N)) * nslots() + slot;
    }
};

inline QuotientBasis quotient_basis(const PhiGammaModule& mod, QuotWindow w) {
    QuotientBasis qb{mod.ctx, mod.rank, w, {}};
    const auto& qexp = mod.ctx.d->qexp;
    qb.carrier.exps.reserve(size_t(qb.dim()));
    for (int c = 0; c < mod.rank; ++c)
        for (int e = -w.N; e < w.n; ++e)
            for (int s : qexp) qb.carrier.exps.push_back(s);
    return qb;
}

inline SeriesVec basis_lift(const QuotientBasis& qb, int coord, int exp, int slot) {
    SeriesVec v(qb.rank, s_zero(qb.ctx));
    std::vector<i64> y(qb.nslots(), 0);
    y[slot] = 1;
    v[coord] = s_monomial(qb.ctx, exp, ring_from_canonical(qb.ctx, y));
    return v;
}

// Conservative bound for the largest n_tgt such that the operator maps the
// X^{n_src}-tail into the X^{n_tgt}-tail (quotient well-definedness).
inline int op_tail_bound(const PhiGammaModule& mod, ModOp op, size_t idx, int n_src) {
    const int q = int(mod.ctx.q());
    switch (op) {
        case ModOp::PhiMinusOne:
            return std::min(n_src, q * n_src + smat_min_lo(mod.Phi));
        case ModOp::PsiMinusOne: {
            // psi(X^j) has support >= ceil((j - q + 1)/q) - (m - 1): each
            // carried pi-digit of the phi-basis lift dips one level (checked
            // against measured supports; the materializer and the chain-map
            // validation re-verify on every run).  The Phi^{-1} factor
            // shifts by its lowest entry.
            int shift = smat_min_lo(smat_inverse(mod.Phi, 8));
            int base = n_src + shift - q + 1;
            int bound = base >= 0 ? (base + q - 1) / q : -((-base) / q);
            bound -= mod.ctx.m() - 1;
            return std::min(n_src, bound);
        }
        case ModOp::GammaMinusOne:
            return std::min(n_src, n_src + smat_min_lo(mod.gammas.at(idx).second));
        case ModOp::DeltaMinusOne:
            return std::min(n_src, n_src + smat_min_lo(mod.deltas.at(idx).second));
        case ModOp::DeltaProjector: {
            int lo = 0;
            for (const auto& [w, D] : mod.deltas) lo = std::min(lo, smat_min_lo(D));
            return std::min(n_src, n_src + lo);
        }
    }
    return n_src;
}

// Materialize one semilinear operator as a carrier map between windows.
// Every basis image is computed exactly in A_L at internal precision; the
// certified window must cover the target and nothing may fall below -N_tgt.
inline LinMap materialize_op(const PhiGammaModule& mod, ModOp op, size_t idx, QuotWindow src,
                             QuotWindow tgt) {
    const RingCtx& ctx = mod.ctx;
    const int q = int(ctx.q());
    QuotientBasis qsrc = quotient_basis(mod, src);
    QuotientBasis qtgt = quotient_basis(mod, tgt);
    if (tgt.n > op_tail_bound(mod, op, idx, src.n))
        throw WindowTooNarrow("target tail bound violates quotient well-definedness");
    Mat M(qtgt.dim(), qsrc.dim());
    DeltaGroup dgroup;
    RingElem card_inv = ring_one(ctx);
    if (op == ModOp::DeltaProjector) {
        dgroup = delta_group(mod);
        card_inv = ring_inv(ring_int(ctx, i64(dgroup.elements.size())));
    }
    for (int c = 0; c < mod.rank; ++c)
        for (int e = -src.N; e < src.n; ++e)
            for (int s = 0; s < qsrc.nslots(); ++s) {
                SeriesVec v = basis_lift(qsrc, c, e, s);
                SeriesVec img;
                switch (op) {
                    case ModOp::PhiMinusOne: {
                        img = apply_phi(mod, v, tgt.n);
                        for (int i = 0; i < mod.rank; ++i) img[i] = s_sub(img[i], v[i]);
                        break;
                    }
                    case ModOp::PsiMinusOne: {
                        int inv_hi = tgt.n + q * (src.N + 2) +
                                     (int(ctx.q()) - 1) * ctx.full_prec() + 4;
                        img = apply_psi(mod, v, inv_hi);
                        for (int i = 0; i < mod.rank; ++i) img[i] = s_sub(img[i], v[i]);
                        break;
                    }
                    case ModOp::GammaMinusOne: {
                        img = apply_gamma(mod, idx, v, tgt.n);
                        for (int i = 0; i < mod.rank; ++i) img[i] = s_sub(img[i], v[i]);
                        break;
                    }
                    case ModOp::DeltaMinusOne: {
                        img = apply_delta(mod, idx, v, tgt.n);
                        for (int i = 0; i < mod.rank; ++i) img[i] = s_sub(img[i], v[i]);
                        break;
                    }
                    case ModOp::DeltaProjector: {
                        img.assign(mod.rank, s_zero(ctx));
                        for (const auto& [w, D] : dgroup.elements) {
                            SeriesVec fv = v;
                            for (auto& x : fv) x = gamma_action(x, w, mod.phi, tgt.n);
                            SeriesVec term = smat_apply(D, fv);
                            for (int i = 0; i < mod.rank; ++i) img[i] = s_add(img[i], term[i]);
                        }
                        for (auto& x : img) x = s_scale(x, card_inv);
                        break;
                    }
                }
                int col = qsrc.index(c, e, s);
                for (int i = 0; i < mod.rank; ++i) {
                    const LaurentTrunc& entry = img[i];
                    if (entry.hi < tgt.n)
                        throw WindowTooNarrow(
                            "operator image not certified to the target window (op=" +
                            std::to_string(int(op)) + " src exp " + std::to_string(e) +
                            ", certified hi " + std::to_string(entry.hi) + " < " +
                            std::to_string(tgt.n) + ")");
                    for (const auto& [ee, coeff] : entry.c) {
                        if (ee >= tgt.n) continue;  // quotient
                        std::vector<i64> y;
                        try {
                            y = ring_canonical(coeff);
                        } catch (const PrecisionLoss&) {
                            throw PrecisionLoss("operator image below working precision");
                        }
                        bool zero = true;
                        for (i64 x : y)
                            if (x) zero = false;
                        if (zero) continue;
                        if (ee < -tgt.N)
                            throw WindowTooNarrow("operator image falls below the target tail");
                        for (int s2 = 0; s2 < qtgt.nslots(); ++s2)
                            if (y[s2]) M.at(qtgt.index(i, ee, s2), col) = y[s2];
                    }
                }
            }
    LinMap lm{qsrc.carrier, qtgt.carrier, std::move(M)};
    check_map(ctx.zm(), lm, "materialized operator");
    return lm;
}

// Transition maps between windows: inclusion in the tail direction combined
// with projection in the n direction (N_tgt >= N_src, n_tgt <= n_src).
inline LinMap materialize_transition(const PhiGammaModule& mod, QuotWindow src, QuotWindow tgt) {
    if (tgt.N < src.N || tgt.n > src.n)
        throw ValidationError("transition needs N to grow and n to shrink");
    QuotientBasis qsrc = quotient_basis(mod, src);
    QuotientBasis qtgt = quotient_basis(mod, tgt);
    Mat M(qtgt.dim(), qsrc.dim());
    for (int c = 0; c < mod.rank; ++c)
        for (int e = -src.N; e < src.n; ++e)
            for (int s = 0; s < qsrc.nslots(); ++s) {
                if (e >= tgt.n) continue;
                M.at(qtgt.index(c, e, s), qsrc.index(c, e, s)) = 1;
            }
    return LinMap{qsrc.carrier, qtgt.carrier, std::move(M)};
}

// Convenience bundle: the named operator matrices with explicit
// source/target windows, all over one source window.
struct FiniteQuotient {
    QuotWindow source;
    QuotWindow phi_target, psi_target;
    LinMap phi_minus_one;
    LinMap psi_minus_one;
    std::vector<LinMap> gamma_minus_one;
    LinMap delta_projector;  // square on the source window
};

inline FiniteQuotient finite_quotient(const PhiGammaModule& mod, int N, int n) {
    if (N < 0 || n < 1) throw ValidationError("window must satisfy N >= 0, n >= 1");
    const int q = int(mod.ctx.q());
    FiniteQuotient fq;
    fq.source = QuotWindow{N, n};
    int lo_phi = smat_min_lo(mod.Phi);
    fq.phi_target = QuotWindow{q * N + std::max(0, -lo_phi) +
                                   (q - 1) * (mod.ctx.full_prec() - 1) * (N > 0 ? 1 : 0),
                               n};
    fq.phi_minus_one = materialize_op(mod, ModOp::PhiMinusOne, 0, fq.source, fq.phi_target);
    int n_psi = op_tail_bound(mod, ModOp::PsiMinusOne, 0, n);
    fq.psi_target = QuotWindow{N + std::max(0, -lo_phi) + q, n_psi};
    fq.psi_minus_one = materialize_op(mod, ModOp::PsiMinusOne, 0, fq.source, fq.psi_target);
    for (size_t i = 0; i < mod.gammas.size(); ++i) {
        QuotWindow gt{N + std::max(0, -smat_min_lo(mod.gammas[i].second)), n};
        fq.gamma_minus_one.push_back(materialize_op(mod, ModOp::GammaMinusOne, i, fq.source, gt));
    }
    if (!mod.deltas.empty())
        fq.delta_projector = materialize_op(mod, ModOp::DeltaProjector, 0, fq.source, fq.source);
    return fq;
}

}  // namespace herrlab
