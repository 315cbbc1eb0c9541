#pragma once

// Brute-force cohomology oracle: enumerates carriers elementwise and reads
// off divisors from order counts.  Independent of the SNF implementation.

#include <set>
#include <vector>

#include "herrlab/complex_engine.hpp"

namespace enumeration {

using herrlab::Carrier;
using herrlab::Divisors;
using herrlab::FiniteComplex;
using herrlab::i64;
using herrlab::Mat;
using herrlab::ZMod;

inline long long carrier_card(const ZMod& zm, const Carrier& c) {
    long long n = 1;
    for (int e : c.exps) n *= zm.ppow[e];
    return n;
}

inline std::vector<std::vector<i64>> enumerate_carrier(const ZMod& zm, const Carrier& c) {
    std::vector<std::vector<i64>> out;
    long long total = carrier_card(zm, c);
    for (long long idx = 0; idx < total; ++idx) {
        long long t = idx;
        std::vector<i64> v(c.exps.size());
        for (size_t j = 0; j < c.exps.size(); ++j) {
            v[j] = t % zm.ppow[c.exps[j]];
            t /= zm.ppow[c.exps[j]];
        }
        out.push_back(v);
    }
    return out;
}

inline std::vector<i64> apply_mod(const ZMod& zm, const Mat& M, const Carrier& tgt,
                                  const std::vector<i64>& x) {
    std::vector<i64> y(M.r, 0);
    for (int j = 0; j < M.c; ++j) {
        if (x[j] == 0) continue;
        for (int i = 0; i < M.r; ++i) y[i] = (y[i] + M.at(i, j) * x[j]) % zm.ppow[tgt.exps[i]];
    }
    return y;
}

// Divisors of ker(d_k)/im(d_{k-1}) by exhaustive counting: with
// C_j = #{x in ker : p^j x in im} one has #{divisor exponents >= j} =
// log_p(C_j / C_{j-1}).
inline Divisors brute_cohomology_at(const ZMod& zm, const FiniteComplex& C, int k) {
    const Carrier& c = C.terms[k];
    std::vector<std::vector<i64>> kernel;
    for (const auto& x : enumerate_carrier(zm, c)) {
        bool in_ker = true;
        if (k + 1 < C.len()) {
            auto y = apply_mod(zm, C.d[k], C.terms[k + 1], x);
            for (i64 v : y)
                if (v) in_ker = false;
        }
        if (in_ker) kernel.push_back(x);
    }
    std::set<std::vector<i64>> image;
    if (k > 0)
        for (const auto& x : enumerate_carrier(zm, C.terms[k - 1]))
            image.insert(apply_mod(zm, C.d[k - 1], c, x));
    else
        image.insert(std::vector<i64>(c.exps.size(), 0));

    auto count_cj = [&](int j) {
        i64 s = zm.ppow[std::min(j, zm.M)];
        long long n = 0;
        for (const auto& x : kernel) {
            std::vector<i64> y(x.size());
            for (size_t i = 0; i < x.size(); ++i) y[i] = (x[i] * s) % zm.ppow[c.exps[i]];
            if (image.count(y)) ++n;
        }
        return n;
    };
    std::vector<int> n_geq;  // n_geq[j-1] = #exponents >= j
    long long prev = count_cj(0);
    for (int j = 1; j <= zm.M; ++j) {
        long long cj = count_cj(j);
        long long ratio = cj / prev;
        int cnt = 0;
        while (ratio > 1) {
            ratio /= zm.p;
            ++cnt;
        }
        n_geq.push_back(cnt);
        prev = cj;
        if (cj == (long long)kernel.size()) break;
    }
    Divisors divs;
    for (int j = int(n_geq.size()); j >= 1; --j) {
        int here = n_geq[j - 1] - (j < int(n_geq.size()) ? n_geq[j] : 0);
        for (int t = 0; t < here; ++t) divs.push_back(j);
    }
    std::sort(divs.rbegin(), divs.rend());
    return divs;
}

inline std::vector<Divisors> brute_cohomology(const ZMod& zm, const FiniteComplex& C) {
    std::vector<Divisors> out;
    for (int k = 0; k < C.len(); ++k) out.push_back(brute_cohomology_at(zm, C, k));
    return out;
}

}  // namespace enumeration
