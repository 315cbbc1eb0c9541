#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "herrlab/fin_ab.hpp"

#include "json.hpp"

namespace herrlab {

// Cochain complexes of finite abelian p-groups with explicit differentials.
// Terms live in degrees lo, lo+1, ..., lo+len-1.
struct FiniteComplex {
    int lo = 0;
    std::vector<Carrier> terms;
    std::vector<Mat> d;  // d[k] : terms[k] -> terms[k+1]; size terms.size()-1

    int len() const { return int(terms.size()); }
    int hi() const { return lo + len() - 1; }

    const Carrier& term_at(int deg) const {
        static const Carrier empty{};
        int k = deg - lo;
        return (k >= 0 && k < len()) ? terms[k] : empty;
    }
};

inline void validate_complex(const ZMod& zm, const FiniteComplex& C) {
    if (int(C.d.size()) + 1 != C.len() && !(C.len() == 0 && C.d.empty()))
        throw NotAComplex("differential count mismatch");
    for (size_t k = 0; k < C.d.size(); ++k) {
        LinMap f{C.terms[k], C.terms[k + 1], C.d[k]};
        check_map(zm, f, "differential");
    }
    for (size_t k = 0; k + 1 < C.d.size(); ++k) {
        Mat dd = mat_mul(zm, C.d[k + 1], C.d[k]);
        for (int i = 0; i < dd.r; ++i)
            for (int j = 0; j < dd.c; ++j)
                if (zm.reduce(dd.at(i, j)) % zm.ppow[C.terms[k + 2].exps[i]] != 0)
                    throw NotAComplex("d^2 != 0");
    }
}

// Kernel/image subquotients in every degree.
inline std::vector<HGroup> cohomology(const ZMod& zm, const FiniteComplex& C) {
    validate_complex(zm, C);
    std::vector<HGroup> out;
    for (int k = 0; k < C.len(); ++k) {
        Mat K;
        if (k + 1 < C.len()) {
            LinMap f{C.terms[k], C.terms[k + 1], C.d[k]};
            K = map_kernel(zm, f);
        } else {
            K = submodule_canon(zm, C.terms[k], Mat::identity(C.terms[k].dim()));
        }
        Mat I(C.terms[k].dim(), 0);
        if (k > 0) {
            LinMap g{C.terms[k - 1], C.terms[k], C.d[k - 1]};
            I = map_image(zm, g);
        }
        out.push_back(make_subquotient(zm, C.terms[k], K, I));
    }
    return out;
}

inline std::vector<Divisors> cohomology_divisors(const ZMod& zm, const FiniteComplex& C) {
    std::vector<Divisors> out;
    for (const HGroup& h : cohomology(zm, C)) out.push_back(h.divisors);
    return out;
}

// Koszul cochain complex of commuting operators t_1..t_r on one carrier.
// Degree-i term is carrier^(r choose i), components indexed by the subsets
// of {0..r-1} of size i in increasing bitmask order.
inline std::vector<unsigned> koszul_subsets(int r, int size) {
    std::vector<unsigned> out;
    for (unsigned mask = 0; mask < (1u << r); ++mask)
        if (__builtin_popcount(mask) == size) out.push_back(mask);
    return out;
}

inline FiniteComplex koszul(const ZMod& zm, const Carrier& M, const std::vector<Mat>& ops) {
    const int r = int(ops.size());
    for (const Mat& t : ops)
        if (t.r != M.dim() || t.c != M.dim()) throw ValidationError("koszul operator shape");
    for (int a = 0; a < r; ++a)
        for (int b = a + 1; b < r; ++b) {
            Mat ab = mat_mul(zm, ops[a], ops[b]);
            Mat ba = mat_mul(zm, ops[b], ops[a]);
            Mat diff = mat_sub(zm, ab, ba);
            for (int i = 0; i < diff.r; ++i)
                for (int j = 0; j < diff.c; ++j)
                    if (zm.reduce(diff.at(i, j)) % zm.ppow[M.exps[i]] != 0)
                        throw NonCommuting("koszul operators do not commute");
        }
    FiniteComplex C;
    C.lo = 0;
    const int n = M.dim();
    for (int i = 0; i <= r; ++i) {
        auto subs = koszul_subsets(r, i);
        Carrier term;
        for (size_t s = 0; s < subs.size(); ++s)
            term.exps.insert(term.exps.end(), M.exps.begin(), M.exps.end());
        C.terms.push_back(term);
    }
    for (int i = 0; i < r; ++i) {
        auto src = koszul_subsets(r, i);
        auto tgt = koszul_subsets(r, i + 1);
        Mat D(int(tgt.size()) * n, int(src.size()) * n);
        for (size_t tt = 0; tt < tgt.size(); ++tt) {
            unsigned T = tgt[tt];
            for (int j = 0; j < r; ++j) {
                if (!(T & (1u << j))) continue;
                unsigned S = T & ~(1u << j);
                size_t ss = std::lower_bound(src.begin(), src.end(), S) - src.begin();
                int sign = __builtin_popcount(T & ((1u << j) - 1)) % 2 ? -1 : 1;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        i64 v = ops[j].at(a, b);
                        if (sign < 0) v = zm.neg(v);
                        D.at(int(tt) * n + a, int(ss) * n + b) =
                            zm.add(D.at(int(tt) * n + a, int(ss) * n + b), v);
                    }
            }
        }
        C.d.push_back(D);
    }
    validate_complex(zm, C);
    return C;
}

// A chain map f : C -> D (degreewise, aligned by absolute degree).
struct ChainMap {
    FiniteComplex C, D;
    std::vector<Mat> f;  // f[k] : C.terms[k] -> D.term at degree C.lo + k
};

inline void validate_chain_map(const ZMod& zm, const ChainMap& cm) {
    if (int(cm.f.size()) != cm.C.len()) throw NotAChainMap("component count");
    for (int k = 0; k < cm.C.len(); ++k) {
        int deg = cm.C.lo + k;
        int dk = deg - cm.D.lo;
        if (dk < 0 || dk >= cm.D.len()) {
            if (!mat_is_zero(cm.f[k])) throw NotAChainMap("map out of range");
            continue;
        }
        LinMap lm{cm.C.terms[k], cm.D.terms[dk], cm.f[k]};
        check_map(zm, lm, "chain map");
        // commute with differentials
        if (k + 1 < cm.C.len() && dk + 1 < cm.D.len()) {
            Mat left = mat_mul(zm, cm.D.d[dk], cm.f[k]);
            Mat right = mat_mul(zm, cm.f[k + 1], cm.C.d[k]);
            Mat diff = mat_sub(zm, left, right);
            for (int i = 0; i < diff.r; ++i)
                for (int j = 0; j < diff.c; ++j)
                    if (zm.reduce(diff.at(i, j)) % zm.ppow[cm.D.terms[dk + 1].exps[i]] != 0)
                        throw NotAChainMap("does not commute with differentials");
        }
    }
}

// Totalization of the two-column double complex with the source in column 0:
// Tot^n = C^n ⊕ D^{n-1}, d(x, y) = (d_C x, f x - d_D y).
inline FiniteComplex total_cone(const ZMod& zm, const ChainMap& cm) {
    validate_chain_map(zm, cm);
    const FiniteComplex &C = cm.C, &D = cm.D;
    int lo = std::min(C.lo, D.lo + 1);
    int hi = std::max(C.hi(), D.hi() + 1);
    FiniteComplex T;
    T.lo = lo;
    auto cterm = [&](int deg) { return C.term_at(deg); };
    auto dterm = [&](int deg) { return D.term_at(deg - 1); };
    for (int deg = lo; deg <= hi; ++deg) {
        Carrier t;
        Carrier a = cterm(deg), b = dterm(deg);
        t.exps = a.exps;
        t.exps.insert(t.exps.end(), b.exps.begin(), b.exps.end());
        T.terms.push_back(t);
    }
    for (int deg = lo; deg < hi; ++deg) {
        Carrier sa = cterm(deg), sb = dterm(deg);
        Carrier ta = cterm(deg + 1), tb = dterm(deg + 1);
        Mat M(ta.dim() + tb.dim(), sa.dim() + sb.dim());
        int kc = deg - C.lo;
        if (kc >= 0 && kc + 1 < C.len())  // d_C block
            for (int i = 0; i < ta.dim(); ++i)
                for (int j = 0; j < sa.dim(); ++j) M.at(i, j) = C.d[kc].at(i, j);
        if (kc >= 0 && kc < int(cm.f.size()) && tb.dim() > 0 && sa.dim() > 0) {  // f block
            int dk = deg - D.lo;
            if (dk >= 0 && dk < D.len())
                for (int i = 0; i < tb.dim(); ++i)
                    for (int j = 0; j < sa.dim(); ++j) M.at(ta.dim() + i, j) = cm.f[kc].at(i, j);
        }
        int kd = deg - 1 - D.lo;
        if (kd >= 0 && kd + 1 < D.len())  // -d_D block
            for (int i = 0; i < tb.dim(); ++i)
                for (int j = 0; j < sb.dim(); ++j)
                    M.at(ta.dim() + i, sa.dim() + j) = zm.neg(D.d[kd].at(i, j));
        T.d.push_back(M);
    }
    validate_complex(zm, T);
    return T;
}

struct QuasiIsoWitness {
    bool is_qiso;
    std::vector<Divisors> cone_divisors;  // per degree of the cone
    int cone_lo;
};

inline QuasiIsoWitness is_quasi_iso(const ZMod& zm, const ChainMap& cm) {
    FiniteComplex cone = total_cone(zm, cm);
    auto divs = cohomology_divisors(zm, cone);
    bool ok = true;
    for (const auto& d : divs)
        if (!d.empty()) ok = false;
    return QuasiIsoWitness{ok, divs, cone.lo};
}

// Pontrjagin dual: same cyclic orders, transposed differentials with the
// order-ratio scaling, grading negated.
inline FiniteComplex pontrjagin_dual(const ZMod& zm, const FiniteComplex& C) {
    FiniteComplex D;
    D.lo = -C.hi();
    for (int k = C.len() - 1; k >= 0; --k) D.terms.push_back(C.terms[k]);
    for (int k = int(C.d.size()) - 1; k >= 0; --k) {
        const Mat& T = C.d[k];
        const Carrier& src = C.terms[k];      // becomes dual target
        const Carrier& tgt = C.terms[k + 1];  // becomes dual source
        Mat Dt(src.dim(), tgt.dim());
        for (int i = 0; i < T.r; ++i)
            for (int j = 0; j < T.c; ++j) {
                // (T^dual)[j][i] = T[i][j] * p^(src_j - tgt_i), exact by the
                // well-definedness of T on the cyclic orders
                i64 x = zm.reduce(T.at(i, j)) % zm.ppow[tgt.exps[i]];
                int shift = src.exps[j] - tgt.exps[i];
                i64 y = (shift >= 0) ? zm.mul(x, zm.ppow[std::min(shift, zm.M)])
                                     : x / zm.ppow[-shift];
                Dt.at(j, i) = zm.reduce(y) % zm.ppow[src.exps[j]];
            }
        D.d.push_back(Dt);
    }
    validate_complex(zm, D);
    return D;
}

// ------------------------------------------------------------------
// Mittag-Leffler diagnostics for inverse towers of finite p-groups.
// ------------------------------------------------------------------

// Inverse system X_0 <- X_1 <- X_2 ... ; maps[k] : groups[k+1] -> groups[k],
// matrices in divisor coordinates.
struct TowerOfGroups {
    std::vector<Divisors> groups;
    std::vector<Mat> maps;
};

enum class MLKind { Stabilized, MLZero, NotStabilized };

struct MLResult {
    MLKind kind;
    Divisors value;  // stabilized divisors (Stabilized only)
    int level = -1;
    std::string diagnostics;
    std::vector<std::vector<Divisors>> image_traces;  // [target][source-offset]
};

inline MLResult ml_stabilize(const ZMod& zm, const TowerOfGroups& T, int w) {
    const int n = int(T.groups.size());
    if (n < w || w < 1) throw ValidationError("tower shorter than stabilization window");
    if (int(T.maps.size()) + 1 != n) throw ValidationError("tower map count");
    MLResult res;
    // composed maps into each target from every deeper source
    // comp[t][s] : groups[s] -> groups[t], s > t
    std::vector<std::vector<Mat>> comp(n);
    for (int t = 0; t < n; ++t) {
        comp[t].resize(n);
        for (int s = t + 1; s < n; ++s) {
            if (s == t + 1)
                comp[t][s] = T.maps[t];
            else
                comp[t][s] = divisor_map_compose(zm, T.groups[t], comp[t][s - 1], T.maps[s - 1]);
        }
    }
    res.image_traces.resize(n);
    std::vector<Mat> stable_img(n);
    std::vector<bool> images_agree(n, false), zero_tail(n, false);
    for (int t = 0; t < n; ++t) {
        std::vector<Mat> imgs;
        for (int s = t + 1; s < n; ++s) {
            Mat img = divisor_map_image(zm, T.groups[s], T.groups[t], comp[t][s]);
            res.image_traces[t].push_back(divisor_image_divisors(zm, T.groups[t], img));
            imgs.push_back(img);
        }
        int have = int(imgs.size());
        if (have >= w) {
            bool agree = true;
            for (int k = have - w; k + 1 < have; ++k)
                if (!(imgs[k] == imgs[k + 1])) agree = false;
            images_agree[t] = agree;
            if (agree) {
                stable_img[t] = imgs.back();
                zero_tail[t] = res.image_traces[t].back().empty();
            }
        }
    }
    // targets with a full window of deeper sources
    int usable = n - w;
    if (usable < 1) {
        res.kind = MLKind::NotStabilized;
        res.diagnostics = "window leaves no comparable targets";
        return res;
    }
    bool all_agree = true, all_zero = true;
    for (int t = 0; t < usable; ++t) {
        if (!images_agree[t]) all_agree = false;
        if (!images_agree[t] || !zero_tail[t]) all_zero = false;
    }
    if (all_zero) {
        int lvl = 0;
        while (lvl < usable && zero_tail[lvl]) ++lvl;
        res.kind = MLKind::MLZero;
        res.level = 0;
        return res;
    }
    if (all_agree) {
        // divisors of the stable images must be constant over the last w
        // comparable targets
        std::vector<Divisors> vals;
        for (int t = std::max(0, usable - w); t < usable; ++t)
            vals.push_back(divisor_image_divisors(zm, T.groups[t], stable_img[t]));
        bool constant = true;
        for (size_t i = 0; i + 1 < vals.size(); ++i)
            if (vals[i] != vals[i + 1]) constant = false;
        if (constant) {
            res.kind = MLKind::Stabilized;
            res.value = vals.back();
            int lvl = usable - 1;
            while (lvl > 0 &&
                   images_agree[lvl - 1] &&
                   divisor_image_divisors(zm, T.groups[lvl - 1], stable_img[lvl - 1]) == res.value)
                --lvl;
            res.level = lvl;
            return res;
        }
        res.kind = MLKind::NotStabilized;
        res.diagnostics = "stable images exist but their divisors keep growing";
        return res;
    }
    res.kind = MLKind::NotStabilized;
    res.diagnostics = "transition images do not agree within the window";
    return res;
}

// ------------------------------------------------------------------
// JSON serialization of complexes (debugging, golden tests)
// ------------------------------------------------------------------

inline nlohmann::json complex_to_json(const FiniteComplex& C) {
    nlohmann::json j;
    j["lo"] = C.lo;
    j["terms"] = nlohmann::json::array();
    for (const Carrier& t : C.terms) j["terms"].push_back(t.exps);
    j["differentials"] = nlohmann::json::array();
    for (const Mat& m : C.d) {
        nlohmann::json jm;
        jm["rows"] = m.r;
        jm["cols"] = m.c;
        jm["entries"] = m.a;
        j["differentials"].push_back(jm);
    }
    return j;
}

inline FiniteComplex complex_from_json(const nlohmann::json& j) {
    FiniteComplex C;
    C.lo = j.at("lo").get<int>();
    for (const auto& t : j.at("terms")) C.terms.push_back(Carrier{t.get<std::vector<int>>()});
    for (const auto& jm : j.at("differentials")) {
        Mat m(jm.at("rows").get<int>(), jm.at("cols").get<int>());
        m.a = jm.at("entries").get<std::vector<i64>>();
        C.d.push_back(m);
    }
    return C;
}

}  // namespace herrlab
