#pragma once

#include <cstdint>
#include <vector>

#include "herrlab/errors.hpp"

namespace herrlab {

using i64 = long long;

// Arithmetic in Z/p^M.  Values are canonical representatives in [0, p^M).
// p^M stays far below 2^31 for every supported configuration, so products
// fit in i64 with room to spare.
struct ZMod {
    i64 p = 0;
    int M = 0;
    i64 pM = 1;
    std::vector<i64> ppow;  // p^0 .. p^M

    ZMod() = default;
    ZMod(i64 prime, int prec) : p(prime), M(prec) {
        if (prec < 0 || prime < 2) throw ValidationError("bad Z/p^M parameters");
        ppow.assign(M + 1, 1);
        for (int i = 1; i <= M; ++i) {
            ppow[i] = ppow[i - 1] * p;
            if (ppow[i] > (i64(1) << 40)) throw PrecisionOverflow("p^M exceeds configured cap");
        }
        pM = ppow[M];
    }

    bool operator==(const ZMod& o) const { return p == o.p && M == o.M; }

    i64 reduce(i64 x) const {
        x %= pM;
        return x < 0 ? x + pM : x;
    }
    i64 add(i64 a, i64 b) const { return (a + b) % pM; }
    i64 sub(i64 a, i64 b) const { return reduce(a - b); }
    i64 mul(i64 a, i64 b) const { return (a * b) % pM; }
    i64 neg(i64 a) const { return a == 0 ? 0 : pM - a; }

    // p-adic valuation of the class of x; val(0) = M.
    int val(i64 x) const {
        x = reduce(x);
        if (x == 0) return M;
        int v = 0;
        while (x % p == 0) {
            x /= p;
            ++v;
        }
        return v;
    }

    bool is_unit(i64 x) const { return reduce(x) % p != 0; }

    // Inverse of a unit (Hensel lift of the mod-p inverse).
    i64 inv_unit(i64 x) const {
        x = reduce(x);
        if (!is_unit(x)) throw NotUnit("inv of non-unit in Z/p^M");
        // inverse mod p by Fermat, then Newton: y <- y(2 - xy).
        i64 y = 1, xp = x % p;
        for (i64 e = p - 2; e > 0; e >>= 1) {
            if (e & 1) y = (y * xp) % p;
            xp = (xp * xp) % p;
        }
        while (mul(x, y) != 1) y = reduce(y * (2 - x * y % pM) % pM);
        return y;
    }

    // Exact division by p^k (caller guarantees divisibility of the class;
    // the quotient is the canonical representative's quotient).
    i64 div_pow(i64 x, int k) const {
        x = reduce(x);
        if (x % ppow[k] != 0) throw NotDivisible("division by p^k not exact");
        return x / ppow[k];
    }

    i64 pow(i64 base, i64 e) const {
        base = reduce(base);
        i64 r = 1 % pM;
        while (e > 0) {
            if (e & 1) r = mul(r, base);
            base = mul(base, base);
            e >>= 1;
        }
        return r;
    }
};

// SplitMix64 — deterministic sampling for property tests and seeded suites.
struct SplitMix64 {
    std::uint64_t s;
    explicit SplitMix64(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // uniform in [0, n)
    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
    i64 range(i64 lo, i64 hi) { return lo + i64(below(std::uint64_t(hi - lo))); }
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace herrlab
