#pragma once

#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "herrlab/fin_ab.hpp"

namespace herrlab {

// The coefficient layer: R_m = O_L/pi^m for L|Q_p finite, presented as a
// finite Z/p^M-algebra on the monomial basis of a defining polynomial.
//
// Internally every element lives in A = O_L/p^M (pi-precision e*M >= m), so
// divisions by pi stay checkable; reduction to R_m happens only when values
// are compared or materialized into matrices.

struct FieldParams {
    i64 p = 3;
    int f = 1;
    int e = 1;
    std::vector<i64> defining_poly;  // monic, degree e*f, low -> high
    std::vector<i64> pi_coords;      // coordinates of pi_L over 1, t, ..., t^(ef-1)

    i64 q() const {
        i64 r = 1;
        for (int i = 0; i < f; ++i) r *= p;
        return r;
    }
    int degree() const { return e * f; }
};

// Q_p itself: O_L = Z_p[t]/(t), pi = p.
inline FieldParams qp_field(i64 p) {
    FieldParams fp;
    fp.p = p;
    fp.f = 1;
    fp.e = 1;
    fp.defining_poly = {0, 1};
    fp.pi_coords = {p};
    return fp;
}

// Totally ramified quadratic Q_p(sqrt(p)): t^2 - p Eisenstein, pi = t.
inline FieldParams ramified_quadratic_field(i64 p) {
    FieldParams fp;
    fp.p = p;
    fp.f = 1;
    fp.e = 2;
    fp.defining_poly = {-p, 0, 1};
    fp.pi_coords = {0, 1};
    return fp;
}

// Unramified quadratic over Q_3: t^2 + 1, pi = p.
inline FieldParams unramified_quadratic_q3() {
    FieldParams fp;
    fp.p = 3;
    fp.f = 2;
    fp.e = 1;
    fp.defining_poly = {1, 0, 1};
    fp.pi_coords = {3, 0};
    return fp;
}

namespace detail {

struct RingCtxData {
    FieldParams params;
    int m = 1;
    int guard = 2;
    ZMod zm;
    int n = 1;         // e*f
    int pi_prec = 0;   // internal precision in pi-levels: e*M
    std::vector<std::vector<i64>> monoprod;  // t^k for k < 2n-1, reduced
    std::vector<Mat> pi_pow;                 // Pi^0 .. Pi^(m + e + 1)
    Mat qU, qUinv;
    std::vector<int> qslots;
    std::vector<int> qexp;  // quotient slot orders (exponents), |R_m| = p^sum
};

}  // namespace detail

class RingCtx {
  public:
    std::shared_ptr<const detail::RingCtxData> d;
    bool same(const RingCtx& o) const { return d == o.d; }
    const ZMod& zm() const { return d->zm; }
    int m() const { return d->m; }
    int n() const { return d->n; }
    i64 p() const { return d->params.p; }
    i64 q() const { return d->params.q(); }
    int full_prec() const { return d->pi_prec; }
    Carrier rm_carrier() const { return Carrier{d->qexp}; }
};

struct RingElem {
    RingCtx ctx;
    std::vector<i64> c;
    int prec = 0;  // the element is trusted modulo pi^prec

    bool is_zero_exact() const {
        for (i64 x : c)
            if (x != 0) return false;
        return true;
    }
};

namespace detail {

inline std::vector<i64> poly_mod_reduce(const ZMod& zm, std::vector<i64> poly,
                                        const std::vector<i64>& def) {
    const int n = int(def.size()) - 1;
    for (int k = int(poly.size()) - 1; k >= n; --k) {
        i64 lead = zm.reduce(poly[k]);
        if (lead == 0) continue;
        for (int j = 0; j < n; ++j)
            poly[k - n + j] = zm.sub(poly[k - n + j], zm.mul(lead, zm.reduce(def[j])));
        poly[k] = 0;
    }
    poly.resize(n);
    for (auto& x : poly) x = zm.reduce(x);
    return poly;
}

}  // namespace detail

inline RingElem ring_from_coords(const RingCtx& ctx, std::vector<i64> coords, int prec = -1) {
    for (auto& x : coords) x = ctx.zm().reduce(x);
    return RingElem{ctx, std::move(coords), prec < 0 ? ctx.full_prec() : prec};
}

inline RingElem ring_int(const RingCtx& ctx, i64 v) {
    std::vector<i64> c(ctx.n(), 0);
    c[0] = ctx.zm().reduce(v);
    return RingElem{ctx, std::move(c), ctx.full_prec()};
}

inline RingElem ring_zero(const RingCtx& ctx) { return ring_int(ctx, 0); }
inline RingElem ring_one(const RingCtx& ctx) { return ring_int(ctx, 1); }
inline RingElem ring_pi(const RingCtx& ctx) { return ring_from_coords(ctx, ctx.d->params.pi_coords); }

inline void require_same_ctx(const RingElem& a, const RingElem& b) {
    if (!a.ctx.same(b.ctx)) throw CtxMismatch();
}

inline RingElem ring_add(const RingElem& a, const RingElem& b) {
    require_same_ctx(a, b);
    const ZMod& zm = a.ctx.zm();
    std::vector<i64> c(a.c.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = zm.add(a.c[i], b.c[i]);
    return RingElem{a.ctx, std::move(c), std::min(a.prec, b.prec)};
}

inline RingElem ring_sub(const RingElem& a, const RingElem& b) {
    require_same_ctx(a, b);
    const ZMod& zm = a.ctx.zm();
    std::vector<i64> c(a.c.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = zm.sub(a.c[i], b.c[i]);
    return RingElem{a.ctx, std::move(c), std::min(a.prec, b.prec)};
}

inline RingElem ring_neg(const RingElem& a) {
    const ZMod& zm = a.ctx.zm();
    std::vector<i64> c(a.c.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = zm.neg(a.c[i]);
    return RingElem{a.ctx, std::move(c), a.prec};
}

// Cheap lower bound for the pi-valuation: e times the smallest p-valuation
// of the coordinates (exact for unramified bases, sound in general).
inline int pi_valuation_lb(const RingElem& a) {
    const auto& d = *a.ctx.d;
    int v = d.zm.M;
    for (i64 x : a.c) v = std::min(v, d.zm.val(x));
    return std::min(d.params.e * v, d.pi_prec);
}

inline RingElem ring_mul(const RingElem& a, const RingElem& b) {
    require_same_ctx(a, b);
    const auto& d = *a.ctx.d;
    const ZMod& zm = d.zm;
    std::vector<i64> c(d.n, 0);
    for (int i = 0; i < d.n; ++i) {
        if (a.c[i] == 0) continue;
        for (int j = 0; j < d.n; ++j) {
            if (b.c[j] == 0) continue;
            i64 coef = zm.mul(a.c[i], b.c[j]);
            const auto& mono = d.monoprod[i + j];
            for (int k = 0; k < d.n; ++k) c[k] = zm.add(c[k], zm.mul(coef, mono[k]));
        }
    }
    // a pi-divisible factor attenuates the other factor's uncertainty
    int prec = std::min(a.prec + pi_valuation_lb(b), b.prec + pi_valuation_lb(a));
    prec = std::min(prec, d.pi_prec);
    return RingElem{a.ctx, std::move(c), prec};
}

inline RingElem ring_scale(const RingElem& a, i64 s) {
    const auto& d = *a.ctx.d;
    const ZMod& zm = d.zm;
    std::vector<i64> c(a.c.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = zm.mul(a.c[i], zm.reduce(s));
    int prec = std::min(a.prec + d.params.e * zm.val(zm.reduce(s)), d.pi_prec);
    return RingElem{a.ctx, std::move(c), prec};
}

inline RingElem operator+(const RingElem& a, const RingElem& b) { return ring_add(a, b); }
inline RingElem operator-(const RingElem& a, const RingElem& b) { return ring_sub(a, b); }
inline RingElem operator*(const RingElem& a, const RingElem& b) { return ring_mul(a, b); }
inline RingElem operator-(const RingElem& a) { return ring_neg(a); }

// Valuation of the class of a in R_m, in [0, m]; the zero class gets m.
inline int pi_valuation(const RingElem& a) {
    const auto& d = *a.ctx.d;
    for (int k = d.m; k >= 1; --k)
        if (solve(d.zm, d.pi_pow[k], a.c).has_value()) return k;
    return 0;
}

// Valuation seen at full internal precision (used by guard bookkeeping).
inline int pi_valuation_internal(const RingElem& a) {
    const auto& d = *a.ctx.d;
    if (a.is_zero_exact()) return d.pi_prec;
    int lo = 0;
    for (int k = 1; k <= std::min(d.pi_prec, int(d.pi_pow.size()) - 1); ++k) {
        if (solve(d.zm, d.pi_pow[k], a.c).has_value())
            lo = k;
        else
            break;
    }
    return lo;
}

inline bool ring_is_unit(const RingElem& a) {
    const auto& d = *a.ctx.d;
    return !solve(d.zm, d.pi_pow[1], a.c).has_value();
}

inline RingElem ring_inv(const RingElem& a) {
    const auto& d = *a.ctx.d;
    // multiplication-by-a matrix on the monomial basis
    Mat Ma(d.n, d.n);
    for (int j = 0; j < d.n; ++j) {
        RingElem ej = ring_from_coords(a.ctx, [&] {
            std::vector<i64> v(d.n, 0);
            v[j] = 1;
            return v;
        }());
        RingElem prod = ring_mul(a, ej);
        for (int i = 0; i < d.n; ++i) Ma.at(i, j) = prod.c[i];
    }
    std::vector<i64> e0(d.n, 0);
    e0[0] = 1;
    Mat inv;
    try {
        inv = mat_inverse(d.zm, Ma);
    } catch (const NotUnit&) {
        throw NotUnit("ring_inv of a non-unit");
    }
    return RingElem{a.ctx, mat_apply(d.zm, inv, e0), a.prec};
}

// Exact division by pi^k with guard accounting.
inline RingElem pi_divide(const RingElem& a, int k) {
    const auto& d = *a.ctx.d;
    if (k == 0) return a;
    if (k < 0 || k >= int(d.pi_pow.size())) throw ValidationError("pi_divide exponent");
    if (a.prec - k < d.m)
        throw InsufficientGuard("pi_divide would drop below the working precision");
    auto sol = solve(d.zm, d.pi_pow[k], a.c);
    if (!sol) throw NotDivisible("element not divisible by pi^k");
    return RingElem{a.ctx, *sol, a.prec - k};
}

inline RingElem ring_pow(const RingElem& a, i64 e) {
    RingElem r = ring_one(a.ctx);
    RingElem base = a;
    while (e > 0) {
        if (e & 1) r = ring_mul(r, base);
        base = ring_mul(base, base);
        e >>= 1;
    }
    return r;
}

// The unique u with u^q = u lifting the residue of a.
inline RingElem teichmuller(const RingElem& a) {
    const auto& d = *a.ctx.d;
    RingElem x = a;
    x.prec = d.pi_prec;
    for (int it = 0; it < d.pi_prec + 4; ++it) {
        RingElem y = ring_pow(x, d.params.q());
        if (y.c == x.c) return x;
        x = std::move(y);
    }
    throw Error("teichmuller iteration failed to converge");
}

// Canonical coordinates of the class of a in R_m (quotient slot basis).
inline std::vector<i64> ring_canonical(const RingElem& a) {
    const auto& d = *a.ctx.d;
    if (a.prec < d.m) throw PrecisionLoss("element below working precision");
    std::vector<i64> y = mat_apply(d.zm, d.qU, a.c);
    std::vector<i64> out(d.qslots.size());
    for (size_t j = 0; j < d.qslots.size(); ++j)
        out[j] = d.zm.reduce(y[d.qslots[j]]) % d.zm.ppow[d.qexp[j]];
    return out;
}

// Lift canonical R_m coordinates back to a representative in A.
inline RingElem ring_from_canonical(const RingCtx& ctx, const std::vector<i64>& y) {
    const auto& d = *ctx.d;
    std::vector<i64> full(d.n, 0);
    for (size_t j = 0; j < d.qslots.size(); ++j) full[d.qslots[j]] = d.zm.reduce(y[j]);
    return RingElem{ctx, mat_apply(d.zm, d.qUinv, full), d.pi_prec};
}

inline bool ring_equal_mod(const RingElem& a, const RingElem& b) {
    require_same_ctx(a, b);
    return ring_canonical(a) == ring_canonical(b);
}

inline bool ring_is_zero_mod(const RingElem& a) {
    for (i64 x : ring_canonical(a))
        if (x != 0) return false;
    return true;
}

inline RingCtx make_ring(const FieldParams& params, int m, int guard = 2) {
    if (m < 1) throw ValidationError("precision level m must be >= 1");
    if (params.p < 3) throw ValidationError("p must be an odd prime");
    for (i64 d = 2; d * d <= params.p; ++d)
        if (params.p % d == 0) throw ValidationError("p must be prime");
    if (params.f < 1 || params.e < 1) throw ValidationError("e, f must be >= 1");
    const int n = params.degree();
    if (int(params.defining_poly.size()) != n + 1 || params.defining_poly[n] != 1)
        throw InvalidPolynomial("defining_poly must be monic of degree e*f");
    if (int(params.pi_coords.size()) != n) throw InvalidPolynomial("pi_coords size");

    auto data = std::make_shared<detail::RingCtxData>();
    data->params = params;
    data->m = m;
    data->guard = guard;
    const int M = (m + params.e - 1) / params.e + guard;
    data->zm = ZMod(params.p, M);
    data->n = n;
    data->pi_prec = params.e * M;
    const ZMod& zm = data->zm;

    // monomial products t^k reduced mod the defining polynomial
    data->monoprod.resize(2 * n - 1);
    for (int k = 0; k < 2 * n - 1; ++k) {
        std::vector<i64> poly(k + 1, 0);
        poly[k] = 1;
        data->monoprod[k] = detail::poly_mod_reduce(zm, poly, params.defining_poly);
    }

    // multiplication-by-pi matrix and its powers
    Mat Pi(n, n);
    for (int j = 0; j < n; ++j) {
        // pi * t^j
        std::vector<i64> acc(n, 0);
        for (int i = 0; i < n; ++i) {
            if (params.pi_coords[i] == 0) continue;
            const auto& mono = data->monoprod[i + j];
            for (int k2 = 0; k2 < n; ++k2)
                acc[k2] = zm.add(acc[k2], zm.mul(zm.reduce(params.pi_coords[i]), mono[k2]));
        }
        for (int i = 0; i < n; ++i) Pi.at(i, j) = acc[i];
    }
    int maxpow = m + params.e + 1;
    data->pi_pow.resize(maxpow + 1);
    data->pi_pow[0] = Mat::identity(n);
    for (int k = 1; k <= maxpow; ++k) data->pi_pow[k] = mat_mul(zm, data->pi_pow[k - 1], Pi);

    // validate: residue ring A/(pi, p) has p^f elements
    {
        Mat gens(n, 2 * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) gens.at(i, j) = Pi.at(i, j);
            gens.at(i, n + i) = zm.reduce(params.p);
        }
        Carrier freec{std::vector<int>(size_t(n), M)};
        Divisors dv = subgroup_divisors(zm, freec, gens);
        long long codim = (long long)n * M - divisor_log_order(dv);
        if (codim != params.f)
            throw InvalidPolynomial("pi/p do not present a uniformizer with residue degree f");
    }
    // validate: v_pi(p) = e
    {
        std::vector<i64> pvec(n, 0);
        pvec[0] = zm.reduce(params.p);
        if (!solve(zm, data->pi_pow[params.e], pvec).has_value())
            throw InvalidPolynomial("p is not divisible by pi^e");
        if (params.e + 1 <= maxpow && solve(zm, data->pi_pow[params.e + 1], pvec).has_value())
            throw InvalidPolynomial("p is divisible by pi^(e+1); ramification index wrong");
    }

    // quotient structure of R_m = A / pi^m A
    {
        SnfResult s = snf(zm, data->pi_pow[m]);
        data->qU = s.U;
        data->qUinv = mat_inverse(zm, s.U);
        long long logcard = 0;
        for (int i = 0; i < n; ++i) {
            int v = (i < int(s.diag_val.size())) ? s.diag_val[i] : M;
            int b = std::min(v, M);
            if (b > 0) {
                data->qslots.push_back(i);
                data->qexp.push_back(b);
                logcard += b;
            }
        }
        if (logcard != (long long)params.f * m)
            throw InvalidPolynomial("|O_L/pi^m| != q^m; inconsistent field data");
        // descending slot order for a canonical carrier
        std::vector<size_t> idx(data->qslots.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](size_t x, size_t y) {
            return data->qexp[x] > data->qexp[y];
        });
        std::vector<int> slots2, exp2;
        for (size_t i : idx) {
            slots2.push_back(data->qslots[i]);
            exp2.push_back(data->qexp[i]);
        }
        data->qslots = slots2;
        data->qexp = exp2;
    }

    RingCtx ctx;
    ctx.d = std::move(data);
    return ctx;
}

// Enumerate all classes of R_m (small rings only; used by oracles).
inline std::vector<RingElem> ring_enumerate(const RingCtx& ctx, long long cap = 100000) {
    const auto& d = *ctx.d;
    long long card = 1;
    for (int e : d.qexp) card *= d.zm.ppow[e];
    if (card > cap) throw ValidationError("ring too large to enumerate");
    std::vector<RingElem> out;
    std::vector<i64> y(d.qexp.size(), 0);
    for (long long idx = 0; idx < card; ++idx) {
        long long t = idx;
        for (size_t j = 0; j < d.qexp.size(); ++j) {
            y[j] = t % d.zm.ppow[d.qexp[j]];
            t /= d.zm.ppow[d.qexp[j]];
        }
        out.push_back(ring_from_canonical(ctx, y));
    }
    return out;
}

inline long long ring_cardinality(const RingCtx& ctx) {
    long long card = 1;
    for (int e : ctx.d->qexp) card *= ctx.zm().ppow[e];
    return card;
}

// Guard digits needed to run the endomorphism recursion to the given degree
// plus `extra_divisions` later pi-divisions (psi, twists): the recursion
// loses one pi-level per q-fold degree chain.
inline int guard_for(const FieldParams& fp, int max_degree, int extra_divisions = 0) {
    int levels = 2 + extra_divisions;
    i64 reach = fp.q();
    while (reach < std::max(max_degree, 1)) {
        reach *= fp.q();
        ++levels;
    }
    int g = (levels + fp.e - 1) / fp.e;
    return std::max(2, g);
}

}  // namespace herrlab
