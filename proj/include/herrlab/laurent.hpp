#pragma once

#include <map>
#include <vector>

#include "herrlab/local_ring.hpp"

namespace herrlab {

// Truncated Laurent series over R_m.  A value represents an element of
// R_m((X)) / X^hi R_m[[X]] with support contained in [lo, hi).  Exponents
// below lo are exactly zero; exponents at or above hi are unknown.  hi may
// be kExactHi for exactly-known polynomials.  Windows are data: every
// operation returns the largest window on which its result is provably
// exact, and never over-claims.

constexpr int kExactHi = 1 << 28;
constexpr int kNoHint = -(1 << 29);  // "no window hint" sentinel

inline int hi_add(int a, int b) {
    long long s = (long long)a + b;
    if (s >= kExactHi) return kExactHi;
    if (s <= -kExactHi) return -kExactHi;
    return int(s);
}

struct LaurentTrunc {
    RingCtx ctx;
    int lo = 0;
    int hi = kExactHi;
    std::map<int, RingElem> c;

    bool known_on(int e) const { return e < hi; }
    bool empty_window() const { return hi <= lo && c.empty(); }

    int min_prec() const {
        int p = ctx.full_prec();
        for (const auto& [e, v] : c) p = std::min(p, v.prec);
        return p;
    }
    int support_min() const { return c.empty() ? hi : c.begin()->first; }
    int support_max() const { return c.empty() ? lo - 1 : c.rbegin()->first; }
};

namespace detail {
inline void series_normalize(LaurentTrunc& f) {
    for (auto it = f.c.begin(); it != f.c.end();) {
        if (it->first >= f.hi) {
            it = f.c.erase(it);
        } else if (it->second.is_zero_exact() && it->second.prec >= f.ctx.full_prec()) {
            it = f.c.erase(it);
        } else {
            ++it;
        }
    }
    if (!f.c.empty()) f.lo = std::min(f.lo, f.c.begin()->first);
}
}  // namespace detail

inline LaurentTrunc s_zero(const RingCtx& ctx, int lo = 0, int hi = kExactHi) {
    return LaurentTrunc{ctx, lo, hi, {}};
}

inline LaurentTrunc s_monomial(const RingCtx& ctx, int e, const RingElem& coeff,
                               int hi = kExactHi) {
    LaurentTrunc f{ctx, e, hi, {}};
    if (!coeff.is_zero_exact()) f.c.emplace(e, coeff);
    detail::series_normalize(f);
    return f;
}

inline LaurentTrunc s_const(const RingCtx& ctx, i64 v) {
    return s_monomial(ctx, 0, ring_int(ctx, v));
}

inline LaurentTrunc s_x(const RingCtx& ctx) { return s_monomial(ctx, 1, ring_one(ctx)); }

inline RingElem s_coeff(const LaurentTrunc& f, int e) {
    auto it = f.c.find(e);
    return it == f.c.end() ? ring_zero(f.ctx) : it->second;
}

inline void require_same_ctx(const LaurentTrunc& a, const LaurentTrunc& b) {
    if (!a.ctx.same(b.ctx)) throw CtxMismatch();
}

inline LaurentTrunc s_add(const LaurentTrunc& a, const LaurentTrunc& b) {
    require_same_ctx(a, b);
    LaurentTrunc r{a.ctx, std::min(a.lo, b.lo), std::min(a.hi, b.hi), {}};
    for (const auto& [e, v] : a.c)
        if (e < r.hi) r.c.emplace(e, v);
    for (const auto& [e, v] : b.c) {
        if (e >= r.hi) continue;
        auto it = r.c.find(e);
        if (it == r.c.end())
            r.c.emplace(e, v);
        else
            it->second = ring_add(it->second, v);
    }
    detail::series_normalize(r);
    return r;
}

inline LaurentTrunc s_neg(const LaurentTrunc& a) {
    LaurentTrunc r = a;
    for (auto& [e, v] : r.c) v = ring_neg(v);
    return r;
}

inline LaurentTrunc s_sub(const LaurentTrunc& a, const LaurentTrunc& b) {
    return s_add(a, s_neg(b));
}

// hi of a product: unknown tails meet the other factor's lowest support.
// An exactly-known zero annihilates regardless of the other window.
inline LaurentTrunc s_mul(const LaurentTrunc& a, const LaurentTrunc& b) {
    require_same_ctx(a, b);
    if ((a.c.empty() && a.hi >= kExactHi) || (b.c.empty() && b.hi >= kExactHi))
        return LaurentTrunc{a.ctx, 0, kExactHi, {}};
    int hi = std::min(hi_add(a.hi, b.lo), hi_add(b.hi, a.lo));
    LaurentTrunc r{a.ctx, hi_add(a.lo, b.lo), hi, {}};
    for (const auto& [ea, va] : a.c)
        for (const auto& [eb, vb] : b.c) {
            int e = ea + eb;
            if (e >= hi) continue;
            RingElem prod = ring_mul(va, vb);
            auto it = r.c.find(e);
            if (it == r.c.end())
                r.c.emplace(e, std::move(prod));
            else
                it->second = ring_add(it->second, prod);
        }
    detail::series_normalize(r);
    return r;
}

inline LaurentTrunc s_scale(const LaurentTrunc& a, const RingElem& s) {
    LaurentTrunc r = a;
    for (auto& [e, v] : r.c) v = ring_mul(v, s);
    detail::series_normalize(r);
    return r;
}

inline LaurentTrunc s_shift(const LaurentTrunc& a, int k) {
    LaurentTrunc r{a.ctx, hi_add(a.lo, k), hi_add(a.hi, k), {}};
    for (const auto& [e, v] : a.c) r.c.emplace(e + k, v);
    return r;
}

// Truncate all exponents >= n: the image in A/omega^n A^+ at this level.
inline LaurentTrunc window_quotient(const LaurentTrunc& f, int n) {
    LaurentTrunc r{f.ctx, std::min(f.lo, n), std::min(f.hi, n), {}};
    for (const auto& [e, v] : f.c)
        if (e < n) r.c.emplace(e, v);
    detail::series_normalize(r);
    return r;
}

// Restrict the certified window (drops information, keeps soundness).
inline LaurentTrunc s_restrict_hi(const LaurentTrunc& f, int hi) {
    LaurentTrunc r = f;
    r.hi = std::min(r.hi, hi);
    detail::series_normalize(r);
    return r;
}

inline LaurentTrunc s_derivative(const LaurentTrunc& f) {
    LaurentTrunc r{f.ctx, f.lo - 1, hi_add(f.hi, -1), {}};
    for (const auto& [e, v] : f.c) {
        if (e == 0) continue;
        RingElem dv = ring_scale(v, e);
        if (!dv.is_zero_exact() || dv.prec < f.ctx.full_prec()) r.c.emplace(e - 1, dv);
    }
    detail::series_normalize(r);
    return r;
}

// Divide every coefficient by pi^k (guard accounting per coefficient).
inline LaurentTrunc s_pi_divide(const LaurentTrunc& f, int k) {
    LaurentTrunc r{f.ctx, f.lo, f.hi, {}};
    for (const auto& [e, v] : f.c) r.c.emplace(e, pi_divide(v, k));
    detail::series_normalize(r);
    return r;
}

// Class equality in R_m on the common certified window.
inline bool s_equal_mod(const LaurentTrunc& a, const LaurentTrunc& b) {
    require_same_ctx(a, b);
    int hi = std::min(a.hi, b.hi);
    int lo = std::min(a.lo, b.lo);
    if (hi <= lo && a.c.empty() && b.c.empty()) return true;
    for (int pass = 0; pass < 2; ++pass) {
        const LaurentTrunc& x = pass ? b : a;
        const LaurentTrunc& y = pass ? a : b;
        for (const auto& [e, v] : x.c) {
            if (e >= hi) continue;
            if (!ring_equal_mod(v, s_coeff(y, e))) return false;
        }
    }
    return true;
}

inline bool s_is_zero_mod(const LaurentTrunc& a) {
    for (const auto& [e, v] : a.c)
        if (!ring_is_zero_mod(v)) return false;
    return true;
}

// True zero test at full internal precision (guard digits included).
inline bool s_is_zero_exact(const LaurentTrunc& a) {
    for (const auto& [e, v] : a.c)
        if (!v.is_zero_exact()) return false;
    return true;
}

// Inverse of a series whose lowest-order coefficient is a unit of R_m.
// out_hi < 0 means "largest provable window"; an exact non-monomial input
// has no finite provable bound, so an explicit window is required there.
inline LaurentTrunc s_invert(const LaurentTrunc& f, int out_hi = kNoHint) {
    if (f.c.empty()) throw NotUnit("cannot invert the zero window");
    int v = f.support_min();
    const RingElem& lead = f.c.begin()->second;
    if (!ring_is_unit(lead)) throw NotUnit("lowest-order coefficient is not a unit");
    bool monomial = (f.c.size() == 1);
    int provable = (f.hi >= kExactHi) ? kExactHi : hi_add(f.hi, -2 * v);
    if (out_hi == kNoHint) {
        out_hi = provable;
        if (out_hi >= kExactHi && !monomial)
            throw ValidationError("inverse of an exact series needs an explicit window");
    }
    out_hi = std::min(out_hi, provable);
    if (out_hi <= -v && out_hi < kExactHi) throw EmptyWindow("no certified inverse window");
    RingElem linv = ring_inv(lead);
    // f = lead * X^v * (1 + z), z with positive support
    LaurentTrunc z = s_scale(s_shift(f, -v), linv);
    z.c.erase(0);
    z.lo = std::max(z.lo, 1);
    int work_hi = out_hi >= kExactHi ? kExactHi : out_hi + v;
    LaurentTrunc acc = s_const(f.ctx, 1);
    LaurentTrunc term = s_const(f.ctx, 1);
    int cap = (work_hi >= kExactHi ? 4 * f.ctx.full_prec() : work_hi - 1) + 72;
    for (int it = 0; it < cap; ++it) {
        term = s_mul(term, s_neg(z));
        if (work_hi < kExactHi) term = window_quotient(term, work_hi);
        if (s_is_zero_exact(term)) break;
        acc = s_add(acc, term);
    }
    LaurentTrunc r = s_scale(s_shift(acc, -v), linv);
    r.hi = std::min(r.hi, out_hi);
    detail::series_normalize(r);
    return r;
}

// Inverse of a series that is X^w * unit with pi-divisible terms below the
// unit position (the shape of a Frobenius substitution image).  The Neumann
// tail in the pi-divisible part dies after at most full_prec steps, so the
// inverse is computable on any requested window.
inline LaurentTrunc s_invert_pi_leading(const LaurentTrunc& f, int out_hi) {
    const RingCtx& ctx = f.ctx;
    const int mprec = ctx.full_prec();
    int w = kExactHi;
    for (const auto& [e, v] : f.c) {
        if (ring_is_unit(v)) {
            w = e;
            break;
        }
        if (pi_valuation_internal(v) < 1)
            throw NonInvertibleTail("sub-unit coefficient not divisible by pi");
    }
    if (w == kExactHi) throw NonInvertibleTail("no unit coefficient in the certified window");
    RingElem u0 = s_coeff(f, w);
    RingElem u0inv = ring_inv(u0);
    LaurentTrunc z = s_scale(s_shift(f, -w), u0inv);
    z.c.erase(0);
    // the pi-divisible part below the unit position can pull dropped tails
    // back down, one pi-level per step; spread*(full_prec-1) is the reach
    int spread = std::max(0, w - f.support_min());
    int B = hi_add(out_hi + w, mprec * std::max(1, spread));
    LaurentTrunc acc = s_const(ctx, 1);
    LaurentTrunc term = s_const(ctx, 1);
    int cap = 4 * (std::max(B, 1) + mprec * (spread + 2)) + 64;
    for (int it = 0;; ++it) {
        if (it >= cap) throw Error("pi-leading inversion did not terminate");
        term = s_mul(term, s_neg(z));
        if (B < kExactHi) term = window_quotient(term, B);
        if (s_is_zero_exact(term)) break;
        acc = s_add(acc, term);
    }
    LaurentTrunc r = s_scale(s_shift(acc, -w), u0inv);
    int provable = (f.hi >= kExactHi)
                       ? kExactHi
                       : hi_add(f.hi, -2 * w - 2 * (mprec - 1) * std::max(spread, 0));
    r.hi = std::min(provable, out_hi);
    detail::series_normalize(r);
    return r;
}

// Composition f(g(X)).  g must have strictly positive support; Laurent f
// additionally needs the coefficient of X^1 in g to be a unit.  out_hi < 0
// lets the window arithmetic decide (an explicit bound is required when f
// has negative exponents and everything else is exact).
inline LaurentTrunc s_compose(const LaurentTrunc& f, const LaurentTrunc& g, int out_hi = kNoHint) {
    require_same_ctx(f, g);
    if (!g.c.empty() && g.support_min() <= 0)
        throw CompositionUndefined("substituted series has a nonzero constant term");
    const RingCtx& ctx = f.ctx;
    // Horner over the non-negative part; the accumulator starts exact and
    // the unknown tail of f is accounted for by the final cap.
    LaurentTrunc pos = s_zero(ctx, 0, kExactHi);
    int top = f.support_max();
    for (int e = top; e >= 0; --e) {
        pos = s_mul(pos, g);
        auto it = f.c.find(e);
        if (it != f.c.end()) pos = s_add(pos, s_monomial(ctx, 0, it->second, pos.hi));
    }
    LaurentTrunc result = pos;
    if (f.support_min() < 0) {
        auto lead_it = g.c.find(1);
        if (lead_it == g.c.end() || !ring_is_unit(lead_it->second))
            throw CompositionUndefined("Laurent substitution needs a unit linear coefficient");
        int depth = -f.support_min();
        int hint;
        if (out_hi != kNoHint)
            hint = hi_add(out_hi, 2 * depth + 2);
        else if (f.hi < kExactHi || g.hi < kExactHi)
            hint = hi_add(std::min(f.hi, g.hi), 2 * depth + 2);
        else
            throw ValidationError("Laurent composition of exact series needs a window bound");
        LaurentTrunc ginv = s_invert(g, hint);
        LaurentTrunc neg = s_zero(ctx, 0, kExactHi);
        for (int j = depth; j >= 1; --j) {
            neg = s_mul(neg, ginv);
            auto it = f.c.find(-j);
            if (it != f.c.end()) neg = s_add(neg, s_monomial(ctx, 0, it->second, neg.hi));
        }
        neg = s_mul(neg, ginv);
        result = s_add(result, neg);
    }
    // out_hi only sizes the internal inversion; composition with v_X(g) >= 1
    // preserves the X-adic precision of f, so f.hi is the genuine cap.
    if (f.hi < kExactHi) result.hi = std::min(result.hi, f.hi);
    detail::series_normalize(result);
    return result;
}

// Dense coefficient view on [lo, hi) for oracles and materialization.
inline std::vector<RingElem> s_dense(const LaurentTrunc& f, int lo, int hi) {
    std::vector<RingElem> out;
    out.reserve(size_t(hi - lo));
    for (int e = lo; e < hi; ++e) out.push_back(s_coeff(f, e));
    return out;
}

}  // namespace herrlab
