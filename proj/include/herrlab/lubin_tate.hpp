#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <vector>

#include "herrlab/laurent.hpp"

namespace herrlab {

// Frobenius power series, the group law attached to one, and the o_L-module
// endomorphisms with prescribed linear coefficient.  The endomorphism
// recursion solves the degree-k coefficient of the commutation identity;
// each step divides by pi once, with divisibility asserted.

enum class FrobKind { standard, cyclotomic, custom };

struct LTEndo {
    RingElem mult;
    LaurentTrunc series;
    int degree = 0;
};

namespace detail {
struct EndoMemo {
    std::mutex mu;
    std::map<std::string, LTEndo> table;
};
}  // namespace detail

struct FrobData {
    RingCtx ctx;
    LaurentTrunc series;
    FrobKind kind = FrobKind::standard;
    int default_degree = 16;
    std::shared_ptr<detail::EndoMemo> memo = std::make_shared<detail::EndoMemo>();
};

inline void validate_frobenius(const RingCtx& ctx, const LaurentTrunc& s) {
    const i64 q = ctx.q();
    if (s.support_min() < 1) throw NotAFrobeniusSeries("terms below degree 1");
    if (s.hi <= q && s.hi < kExactHi) throw NotAFrobeniusSeries("series window must reach X^q");
    if (!ring_equal_mod(s_coeff(s, 1), ring_pi(ctx)))
        throw NotAFrobeniusSeries("linear coefficient must be pi");
    for (const auto& [e, v] : s.c) {
        if (e == q) {
            RingElem d = ring_sub(v, ring_one(v.ctx));
            if (!(d.is_zero_exact() || pi_valuation_internal(d) >= 1))
                throw NotAFrobeniusSeries("X^q coefficient must be 1 mod pi");
        } else if (pi_valuation_internal(v) < 1) {
            throw NotAFrobeniusSeries("series must reduce to X^q mod pi");
        }
    }
    if (s.c.find(q) == s.c.end()) throw NotAFrobeniusSeries("missing X^q term");
}

// Binomial coefficients C(n, k) as exact integers (n small).
inline i64 small_binomial(i64 n, i64 k) {
    if (k < 0 || k > n) return 0;
    i64 r = 1;
    for (i64 i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline FrobData default_frobenius(const RingCtx& ctx, FrobKind kind, int degree,
                                  const LaurentTrunc* custom = nullptr) {
    FrobData fd;
    fd.ctx = ctx;
    fd.kind = kind;
    fd.default_degree = degree;
    const i64 q = ctx.q();
    switch (kind) {
        case FrobKind::standard: {
            LaurentTrunc s = s_add(s_scale(s_x(ctx), ring_pi(ctx)),
                                   s_monomial(ctx, int(q), ring_one(ctx)));
            fd.series = s;
            break;
        }
        case FrobKind::cyclotomic: {
            const auto& fp = ctx.d->params;
            if (fp.e != 1 || fp.f != 1 || !ring_equal_mod(ring_pi(ctx), ring_int(ctx, fp.p)))
                throw NotAFrobeniusSeries("cyclotomic kind needs L = Q_p with pi = p");
            LaurentTrunc s = s_zero(ctx, 1, kExactHi);
            for (i64 k = 1; k <= fp.p; ++k)
                s = s_add(s, s_monomial(ctx, int(k), ring_int(ctx, small_binomial(fp.p, k))));
            fd.series = s;
            break;
        }
        case FrobKind::custom: {
            if (!custom) throw NotAFrobeniusSeries("custom kind needs a series");
            fd.series = *custom;
            break;
        }
    }
    validate_frobenius(ctx, fd.series);
    return fd;
}

namespace detail {
inline std::string endo_key(const RingElem& a, int degree) {
    std::ostringstream os;
    os << degree;
    for (i64 x : a.c) os << ':' << x;
    return os.str();
}

// floor(log_q k): the number of q-fold chain steps below degree k.  In the
// coefficient recursions the only non-attenuated error channel is the
// all-X^q term of phi^(k/q) (every other phi-coefficient is divisible by
// pi, and the X^q-power channel on the phi(S) side carries the binomial
// q), so the division ambiguity compounds exactly along q-chains.  That
// gives the a-priori bound prec(c_k) >= full - 1 - floor(log_q k), which
// is sharper than what elementwise interval tracking can see.
inline int chain_steps(i64 q, int k) {
    int s = 0;
    i64 reach = 1;
    while (reach * q <= k) {
        reach *= q;
        ++s;
    }
    return s;
}
}  // namespace detail

// The unique series with linear coefficient a commuting with the Frobenius
// series, computed degree by degree to X^degree inclusive.
inline LTEndo lt_endomorphism(const RingElem& a, const FrobData& phi, int degree = -1) {
    if (degree < 0) degree = phi.default_degree;
    if (degree < 1) throw ValidationError("endomorphism degree must be >= 1");
    const RingCtx& ctx = phi.ctx;
    if (!a.ctx.same(ctx)) throw CtxMismatch();
    {
        std::lock_guard<std::mutex> lock(phi.memo->mu);
        auto it = phi.memo->table.find(detail::endo_key(a, degree));
        if (it != phi.memo->table.end()) return it->second;
    }
    LTEndo out;
    out.mult = a;
    out.degree = degree;
    RingElem pi = ring_pi(ctx);
    if (ring_sub(a, ring_one(ctx)).is_zero_exact()) {
        out.series = s_x(ctx);
    } else if (ring_sub(a, pi).is_zero_exact()) {
        out.series = window_quotient(phi.series, degree + 1);
        if (phi.series.hi >= kExactHi && phi.series.support_max() <= degree)
            out.series.hi = kExactHi;
    } else {
        LaurentTrunc partial = s_scale(s_x(ctx), a);  // exact polynomial throughout
        const int full = ctx.full_prec();
        const i64 q = ctx.q();
        for (int k = 2; k <= degree; ++k) {
            LaurentTrunc lhs = s_compose(phi.series, partial);   // phi([a]_{<k})
            LaurentTrunc rhs = s_compose(partial, phi.series);   // [a]_{<k}(phi)
            RingElem ek = s_coeff(s_sub(lhs, rhs), k);
            RingElem ck;
            if (ek.is_zero_exact()) {
                ck = ring_zero(ctx);
            } else {
                ek.prec = std::max(ek.prec, full - detail::chain_steps(q, k));
                // c_k (pi^k - pi) = E_k and pi^(k-1) - 1 is a unit
                RingElem unit = ring_sub(ring_pow(pi, k - 1), ring_one(ctx));
                try {
                    ck = ring_mul(pi_divide(ek, 1), ring_inv(unit));
                } catch (const NotDivisible&) {
                    throw PrecisionLoss("endomorphism recursion divisibility failed");
                } catch (const InsufficientGuard&) {
                    throw PrecisionLoss("endomorphism recursion ran out of guard digits");
                }
            }
            if (!ck.is_zero_exact()) partial = s_add(partial, s_monomial(ctx, k, ck));
        }
        partial.hi = degree + 1;
        out.series = partial;
    }
    {
        std::lock_guard<std::mutex> lock(phi.memo->mu);
        phi.memo->table.emplace(detail::endo_key(a, degree), out);
    }
    return out;
}

// ------------------------------------------------------------------
// Bivariate truncations (group-law scaffolding)
// ------------------------------------------------------------------

struct BivarTrunc {
    RingCtx ctx;
    int deg = 0;  // total-degree cutoff (exclusive)
    std::map<std::pair<int, int>, RingElem> c;
};

inline BivarTrunc b_zero(const RingCtx& ctx, int deg) { return BivarTrunc{ctx, deg, {}}; }

inline void b_set(BivarTrunc& f, int i, int j, const RingElem& v) {
    if (i + j >= f.deg) return;
    if (v.is_zero_exact())
        f.c.erase({i, j});
    else
        f.c[{i, j}] = v;
}

inline RingElem b_coeff(const BivarTrunc& f, int i, int j) {
    auto it = f.c.find({i, j});
    return it == f.c.end() ? ring_zero(f.ctx) : it->second;
}

inline BivarTrunc b_add(const BivarTrunc& a, const BivarTrunc& b) {
    BivarTrunc r = a;
    r.deg = std::min(a.deg, b.deg);
    for (const auto& [ij, v] : b.c) {
        auto it = r.c.find(ij);
        if (it == r.c.end())
            r.c.emplace(ij, v);
        else
            it->second = ring_add(it->second, v);
    }
    for (auto it = r.c.begin(); it != r.c.end();)
        it = (it->second.is_zero_exact() || it->first.first + it->first.second >= r.deg)
                 ? r.c.erase(it)
                 : std::next(it);
    return r;
}

inline BivarTrunc b_neg(const BivarTrunc& a) {
    BivarTrunc r = a;
    for (auto& [ij, v] : r.c) v = ring_neg(v);
    return r;
}

inline BivarTrunc b_sub(const BivarTrunc& a, const BivarTrunc& b) { return b_add(a, b_neg(b)); }

inline BivarTrunc b_mul(const BivarTrunc& a, const BivarTrunc& b) {
    BivarTrunc r = b_zero(a.ctx, std::min(a.deg, b.deg));
    for (const auto& [ij, v] : a.c)
        for (const auto& [kl, w] : b.c) {
            int i = ij.first + kl.first, j = ij.second + kl.second;
            if (i + j >= r.deg) continue;
            auto key = std::make_pair(i, j);
            auto it = r.c.find(key);
            RingElem prod = ring_mul(v, w);
            if (it == r.c.end())
                r.c.emplace(key, std::move(prod));
            else
                it->second = ring_add(it->second, prod);
        }
    for (auto it = r.c.begin(); it != r.c.end();)
        it = it->second.is_zero_exact() ? r.c.erase(it) : std::next(it);
    return r;
}

inline BivarTrunc b_degree_part(const BivarTrunc& f, int d) {
    BivarTrunc r = b_zero(f.ctx, f.deg);
    for (const auto& [ij, v] : f.c)
        if (ij.first + ij.second == d) r.c.emplace(ij, v);
    return r;
}

// Substitute univariate power series for the two variables.
inline BivarTrunc b_substitute(const BivarTrunc& f, const LaurentTrunc& gx,
                               const LaurentTrunc& gy) {
    const RingCtx& ctx = f.ctx;
    BivarTrunc r = b_zero(ctx, f.deg);
    // precompute powers of gx, gy as bivariate elements
    auto powers = [&](const LaurentTrunc& g, bool is_x) {
        std::vector<BivarTrunc> pw;
        BivarTrunc one = b_zero(ctx, f.deg);
        b_set(one, 0, 0, ring_one(ctx));
        pw.push_back(one);
        BivarTrunc gb = b_zero(ctx, f.deg);
        for (const auto& [e, v] : g.c)
            if (e < f.deg) b_set(gb, is_x ? e : 0, is_x ? 0 : e, v);
        for (int k = 1; k < f.deg; ++k) pw.push_back(b_mul(pw.back(), gb));
        return pw;
    };
    auto px = powers(gx, true), py = powers(gy, false);
    for (const auto& [ij, v] : f.c) {
        BivarTrunc term = b_mul(px[ij.first], py[ij.second]);
        for (auto& [kl, w] : term.c) w = ring_mul(w, v);
        r = b_add(r, term);
    }
    return r;
}

inline BivarTrunc b_swap(const BivarTrunc& f) {
    BivarTrunc r = b_zero(f.ctx, f.deg);
    for (const auto& [ij, v] : f.c) r.c.emplace(std::make_pair(ij.second, ij.first), v);
    return r;
}

inline RingElem b_eval(const BivarTrunc& f, const RingElem& x, const RingElem& y) {
    RingElem acc = ring_zero(f.ctx);
    for (const auto& [ij, v] : f.c)
        acc = ring_add(acc, ring_mul(v, ring_mul(ring_pow(x, ij.first), ring_pow(y, ij.second))));
    return acc;
}

namespace detail {

// Minimal trivariate support for the associativity check.
using TriKey = std::array<int, 3>;
using TriMap = std::map<TriKey, RingElem>;

inline void tri_add_to(const RingCtx&, TriMap& acc, const TriKey& k, const RingElem& v) {
    auto it = acc.find(k);
    if (it == acc.end())
        acc.emplace(k, v);
    else
        it->second = ring_add(it->second, v);
}

inline TriMap tri_mul(const RingCtx& ctx, const TriMap& a, const TriMap& b, int deg) {
    TriMap r;
    for (const auto& [ka, va] : a)
        for (const auto& [kb, vb] : b) {
            TriKey k{ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2]};
            if (k[0] + k[1] + k[2] >= deg) continue;
            tri_add_to(ctx, r, k, ring_mul(va, vb));
        }
    for (auto it = r.begin(); it != r.end();)
        it = it->second.is_zero_exact() ? r.erase(it) : std::next(it);
    return r;
}

// F(u, v) with u, v trivariate.
inline TriMap tri_subst(const RingCtx& ctx, const BivarTrunc& F, const TriMap& u, const TriMap& v,
                        int deg) {
    TriMap one{{TriKey{0, 0, 0}, ring_one(ctx)}};
    std::vector<TriMap> pu{one}, pv{one};
    for (int k = 1; k < deg; ++k) {
        pu.push_back(tri_mul(ctx, pu.back(), u, deg));
        pv.push_back(tri_mul(ctx, pv.back(), v, deg));
    }
    TriMap r;
    for (const auto& [ij, w] : F.c) {
        if (ij.first >= deg || ij.second >= deg) continue;
        TriMap term = tri_mul(ctx, pu[ij.first], pv[ij.second], deg);
        for (const auto& [k, x] : term) tri_add_to(ctx, r, k, ring_mul(x, w));
    }
    for (auto it = r.begin(); it != r.end();)
        it = it->second.is_zero_exact() ? r.erase(it) : std::next(it);
    return r;
}

}  // namespace detail

// The group law F with F = X + Y mod degree 2 and phi(F) = F(phi, phi).
// Associativity is checked coefficientwise up to degree min(D, 14) (the
// trivariate blow-up caps the exact check) and on pi-divisible sample
// points at full cutoff.
inline BivarTrunc lt_group_law(const FrobData& phi, int D) {
    if (D < 2) throw ValidationError("group-law cutoff must be >= 2");
    const RingCtx& ctx = phi.ctx;
    RingElem pi = ring_pi(ctx);
    BivarTrunc F = b_zero(ctx, D);
    b_set(F, 1, 0, ring_one(ctx));
    b_set(F, 0, 1, ring_one(ctx));
    LaurentTrunc phis = phi.series;
    for (int d = 2; d < D; ++d) {
        BivarTrunc lhs = b_substitute(F, phis, phis);  // F_{<d}(phi X, phi Y)
        // phi(F_{<d}): univariate phi composed with the bivariate F
        BivarTrunc rhs = b_zero(ctx, D);
        {
            // Horner in F over phi's coefficients
            int top = phis.support_max();
            for (int e = std::min(top, D - 1); e >= 1; --e) {
                rhs = b_mul(rhs, F);
                RingElem coeff = s_coeff(phis, e);
                if (!coeff.is_zero_exact()) {
                    BivarTrunc cterm = b_zero(ctx, D);
                    b_set(cterm, 0, 0, coeff);
                    rhs = b_add(rhs, cterm);
                }
            }
            rhs = b_mul(rhs, F);
        }
        BivarTrunc diff = b_degree_part(b_sub(lhs, rhs), d);
        RingElem unit_inv = ring_inv(ring_sub(ring_one(ctx), ring_pow(pi, d - 1)));
        for (const auto& [ij, v] : diff.c) {
            RingElem vv = v;
            vv.prec = std::max(vv.prec, ctx.full_prec() - detail::chain_steps(ctx.q(), d));
            RingElem cd;
            try {
                cd = ring_mul(pi_divide(vv, 1), unit_inv);
            } catch (const NotDivisible&) {
                throw PrecisionLoss("group-law recursion divisibility failed");
            } catch (const InsufficientGuard&) {
                throw PrecisionLoss("group-law recursion ran out of guard digits");
            }
            b_set(F, ij.first, ij.second, ring_add(b_coeff(F, ij.first, ij.second), cd));
        }
    }
    // post checks: F(X, 0) = X, symmetry, defining commutation
    for (const auto& [ij, v] : F.c) {
        if (ij.second == 0 && !(ij.first == 1) && !ring_is_zero_mod(v))
            throw Error("group law fails F(X,0) = X");
        if (!ring_equal_mod(v, b_coeff(F, ij.second, ij.first)))
            throw Error("group law not symmetric");
    }
    {
        BivarTrunc lhs = b_substitute(F, phis, phis);
        BivarTrunc rhs = b_zero(ctx, D);
        int top = phis.support_max();
        for (int e = std::min(top, D - 1); e >= 1; --e) {
            rhs = b_mul(rhs, F);
            RingElem coeff = s_coeff(phis, e);
            if (!coeff.is_zero_exact()) {
                BivarTrunc cterm = b_zero(ctx, D);
                b_set(cterm, 0, 0, coeff);
                rhs = b_add(rhs, cterm);
            }
        }
        rhs = b_mul(rhs, F);
        BivarTrunc diff = b_sub(lhs, rhs);
        for (const auto& [ij, v] : diff.c)
            if (!ring_is_zero_mod(v)) throw Error("group law does not commute with phi");
    }
    {
        int adeg = std::min(D, 14);
        detail::TriMap FX, FY;  // F(X,Y) and F(Y,Z) as trivariate maps
        for (const auto& [ij, v] : F.c) {
            if (ij.first + ij.second >= adeg) continue;
            FX[{ij.first, ij.second, 0}] = v;
            FY[{0, ij.first, ij.second}] = v;
        }
        detail::TriMap Z{{detail::TriKey{0, 0, 1}, ring_one(ctx)}};
        detail::TriMap X{{detail::TriKey{1, 0, 0}, ring_one(ctx)}};
        detail::TriMap left = detail::tri_subst(ctx, F, FX, Z, adeg);
        detail::TriMap right = detail::tri_subst(ctx, F, X, FY, adeg);
        for (const auto& [k, v] : left) {
            auto it = right.find(k);
            RingElem other = (it == right.end()) ? ring_zero(ctx) : it->second;
            if (!ring_equal_mod(v, other)) throw Error("group law not associative");
        }
        for (const auto& [k, v] : right)
            if (left.find(k) == left.end() && !ring_is_zero_mod(v))
                throw Error("group law not associative");
    }
    return F;
}

// gamma . f = f([u]_phi(X)) for a unit u.
inline LaurentTrunc gamma_action(const LaurentTrunc& f, const RingElem& u, const FrobData& phi,
                                 int out_hi = kNoHint) {
    if (!ring_is_unit(u)) throw NotUnit("gamma_action needs a unit");
    int depth = std::min(f.support_min(), 0);
    int need_hi = (out_hi != kNoHint) ? out_hi : (f.hi < kExactHi ? f.hi : f.support_max() + 1);
    int degree = std::max(16, need_hi - 2 * depth + 2);
    LTEndo en = lt_endomorphism(u, phi, degree);
    return s_compose(f, en.series, out_hi);
}

// phi . f = f([pi]_phi(X)); Laurent tails go through the pi-leading inverse.
inline LaurentTrunc phi_substitute(const LaurentTrunc& f, const FrobData& phi, int out_hi = kNoHint) {
    const RingCtx& ctx = phi.ctx;
    if (!f.ctx.same(ctx)) throw CtxMismatch();
    const int q = int(ctx.q());
    LaurentTrunc pos{ctx, std::max(f.lo, 0), f.hi, {}};
    for (const auto& [e, v] : f.c)
        if (e >= 0) pos.c.emplace(e, v);
    LaurentTrunc result = s_compose(pos, phi.series);
    if (f.support_min() < 0) {
        int depth = -f.support_min();
        int hi = out_hi;
        if (hi == kNoHint) {
            if (f.hi >= kExactHi)
                throw ValidationError("phi on exact Laurent tails needs a window bound");
            hi = f.hi;
        }
        int inv_hi = hi + (depth + 1) * (q + (q - 1) * ctx.full_prec()) + 2;
        LaurentTrunc inv = s_invert_pi_leading(phi.series, inv_hi);
        LaurentTrunc neg = s_zero(ctx, 0, kExactHi);
        for (int j = depth; j >= 1; --j) {
            neg = s_mul(neg, inv);
            auto it = f.c.find(-j);
            if (it != f.c.end()) neg = s_add(neg, s_monomial(ctx, 0, it->second, neg.hi));
        }
        neg = s_mul(neg, inv);
        result = s_add(result, neg);
    }
    if (f.hi < kExactHi) result.hi = std::min(result.hi, f.hi);
    detail::series_normalize(result);
    return result;
}

// f = sum_i phi(g_i) X^i on the certified window: the phi-basis coordinates
// of f, solved mod pi by exponent-residue extraction and lifted digit by
// digit until the defect vanishes at full internal precision.
struct PhiDecomposition {
    std::vector<LaurentTrunc> g;
    int certified_hi = 0;
};

inline PhiDecomposition phi_decompose(const LaurentTrunc& f, const FrobData& phi) {
    const RingCtx& ctx = phi.ctx;
    if (!f.ctx.same(ctx)) throw CtxMismatch();
    const int q = int(ctx.q());
    const int passes = ctx.full_prec();
    PhiDecomposition out;
    out.g.assign(q, s_zero(ctx, 0, kExactHi));
    LaurentTrunc r = f;
    for (int pass = 0; pass < passes && !s_is_zero_exact(r); ++pass) {
        // split r by exponent residue classes
        std::vector<LaurentTrunc> h(q, s_zero(ctx, 0, kExactHi));
        for (const auto& [e, v] : r.c) {
            int i = ((e % q) + q) % q;
            h[i] = s_add(h[i], s_monomial(ctx, (e - i) / q, v));
        }
        for (int i = 0; i < q; ++i) {
            if (h[i].c.empty()) continue;
            out.g[i] = s_add(out.g[i], h[i]);
            LaurentTrunc sub = s_shift(phi_substitute(h[i], phi, std::max(r.hi - i, 1)), i);
            r = s_sub(r, sub);
        }
    }
    if (!s_is_zero_exact(r))
        throw WindowTooNarrow("phi-basis lift left a nonzero defect on the window");
    out.certified_hi = r.hi;
    auto floor_div = [](int a, int b) { return (a % b != 0 && (a < 0)) ? a / b - 1 : a / b; };
    for (int i = 0; i < q; ++i) {
        if (out.certified_hi < kExactHi) {
            int emax = floor_div(out.certified_hi - 1 - i, q);
            out.g[i].hi = std::min(out.g[i].hi, emax + 1);
            detail::series_normalize(out.g[i]);
        }
    }
    return out;
}

// psi(f) = pi^{-1} * (sum of the diagonal phi-coordinates of multiplication
// by f on the basis 1, X, ..., X^{q-1}); satisfies psi(phi(h)) = (q/pi) h and
// psi(phi(h) g) = h psi(g).
inline LaurentTrunc psi_series(const LaurentTrunc& f, const FrobData& phi) {
    const RingCtx& ctx = phi.ctx;
    const int q = int(ctx.q());
    LaurentTrunc trace = s_zero(ctx, 0, kExactHi);
    for (int i = 0; i < q; ++i) {
        PhiDecomposition dec = phi_decompose(s_shift(f, i), phi);
        trace = s_add(trace, dec.g[size_t(i)]);
    }
    try {
        return s_pi_divide(trace, 1);
    } catch (const NotDivisible&) {
        throw PrecisionLoss("psi trace not divisible by pi");
    } catch (const InsufficientGuard&) {
        throw PrecisionLoss("psi division exhausted the guard digits");
    }
}

}  // namespace herrlab
