#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "herrlab/zmod.hpp"

namespace herrlab {

// Dense matrices over Z/p^M.  Sizes here are tiny (a few hundred at most),
// so everything is plain cubic algorithms with deterministic pivoting.
struct Mat {
    int r = 0, c = 0;
    std::vector<i64> a;

    Mat() = default;
    Mat(int rows, int cols) : r(rows), c(cols), a(size_t(rows) * cols, 0) {}

    i64& at(int i, int j) { return a[size_t(i) * c + j]; }
    i64 at(int i, int j) const { return a[size_t(i) * c + j]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }

    bool operator==(const Mat& o) const { return r == o.r && c == o.c && a == o.a; }

    Mat transposed() const {
        Mat t(c, r);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) t.at(j, i) = at(i, j);
        return t;
    }

    std::vector<i64> col(int j) const {
        std::vector<i64> v(r);
        for (int i = 0; i < r; ++i) v[i] = at(i, j);
        return v;
    }
    void set_col(int j, const std::vector<i64>& v) {
        for (int i = 0; i < r; ++i) at(i, j) = v[i];
    }
};

inline Mat mat_mul(const ZMod& zm, const Mat& A, const Mat& B) {
    Mat R(A.r, B.c);
    for (int i = 0; i < A.r; ++i)
        for (int k = 0; k < A.c; ++k) {
            i64 aik = A.at(i, k);
            if (aik == 0) continue;
            for (int j = 0; j < B.c; ++j)
                R.at(i, j) = (R.at(i, j) + aik * B.at(k, j)) % zm.pM;
        }
    return R;
}

inline std::vector<i64> mat_apply(const ZMod& zm, const Mat& A, const std::vector<i64>& x) {
    std::vector<i64> y(A.r, 0);
    for (int j = 0; j < A.c; ++j) {
        if (x[j] == 0) continue;
        for (int i = 0; i < A.r; ++i) y[i] = (y[i] + A.at(i, j) * x[j]) % zm.pM;
    }
    return y;
}

inline Mat mat_sub(const ZMod& zm, const Mat& A, const Mat& B) {
    Mat R(A.r, A.c);
    for (size_t i = 0; i < A.a.size(); ++i) R.a[i] = zm.sub(A.a[i], B.a[i]);
    return R;
}

inline bool mat_is_zero(const Mat& A) {
    for (i64 x : A.a)
        if (x != 0) return false;
    return true;
}

// Smith normal form over Z/p^M: U*A*V = D with U, V invertible, D diagonal
// with p-power entries of non-decreasing valuation.  Pivot rule: minimal
// valuation, ties by smallest row then column (deterministic output).
struct SnfResult {
    Mat U, V, D;
    std::vector<int> diag_val;  // valuation of D[k][k] for k < min(r,c)
};

inline SnfResult snf(const ZMod& zm, Mat A) {
    const int r = A.r, c = A.c;
    Mat U = Mat::identity(r), V = Mat::identity(c);
    int steps = std::min(r, c);
    std::vector<int> dval;
    for (int k = 0; k < steps; ++k) {
        int bi = -1, bj = -1, bv = zm.M + 1;
        for (int i = k; i < r; ++i)
            for (int j = k; j < c; ++j) {
                if (A.at(i, j) == 0) continue;
                int v = zm.val(A.at(i, j));
                if (v < bv) bv = v, bi = i, bj = j;
            }
        if (bi < 0) {
            for (int k2 = k; k2 < steps; ++k2) dval.push_back(zm.M);
            break;
        }
        if (bi != k) {
            for (int j = 0; j < c; ++j) std::swap(A.at(k, j), A.at(bi, j));
            for (int j = 0; j < r; ++j) std::swap(U.at(k, j), U.at(bi, j));
        }
        if (bj != k) {
            for (int i = 0; i < r; ++i) std::swap(A.at(i, k), A.at(i, bj));
            for (int i = 0; i < c; ++i) std::swap(V.at(i, k), V.at(i, bj));
        }
        // normalize pivot to exactly p^bv
        i64 piv = A.at(k, k);
        i64 u = piv / zm.ppow[bv];  // unit
        i64 uin = zm.inv_unit(u);
        for (int j = 0; j < c; ++j) A.at(k, j) = zm.mul(A.at(k, j), uin);
        for (int j = 0; j < r; ++j) U.at(k, j) = zm.mul(U.at(k, j), uin);
        // clear column k
        for (int i = k + 1; i < r; ++i) {
            i64 x = A.at(i, k);
            if (x == 0) continue;
            i64 f = x / zm.ppow[bv];
            for (int j = 0; j < c; ++j) A.at(i, j) = zm.sub(A.at(i, j), zm.mul(f, A.at(k, j)));
            for (int j = 0; j < r; ++j) U.at(i, j) = zm.sub(U.at(i, j), zm.mul(f, U.at(k, j)));
        }
        // clear row k
        for (int j = k + 1; j < c; ++j) {
            i64 x = A.at(k, j);
            if (x == 0) continue;
            i64 f = x / zm.ppow[bv];
            for (int i = 0; i < c; ++i) V.at(i, j) = zm.sub(V.at(i, j), zm.mul(f, V.at(i, k)));
            for (int i = 0; i < r; ++i) A.at(i, j) = zm.sub(A.at(i, j), zm.mul(f, A.at(i, k)));
        }
        dval.push_back(bv);
    }
    return SnfResult{std::move(U), std::move(V), std::move(A), std::move(dval)};
}

// Inverse of an invertible square matrix (all pivots units).
inline Mat mat_inverse(const ZMod& zm, Mat A) {
    const int n = A.r;
    Mat I = Mat::identity(n);
    for (int k = 0; k < n; ++k) {
        int piv = -1;
        for (int i = k; i < n; ++i)
            if (zm.is_unit(A.at(i, k))) {
                piv = i;
                break;
            }
        if (piv < 0) throw NotUnit("matrix not invertible over Z/p^M");
        if (piv != k)
            for (int j = 0; j < n; ++j) std::swap(A.at(k, j), A.at(piv, j)),
                                        std::swap(I.at(k, j), I.at(piv, j));
        i64 inv = zm.inv_unit(A.at(k, k));
        for (int j = 0; j < n; ++j) A.at(k, j) = zm.mul(A.at(k, j), inv),
                                    I.at(k, j) = zm.mul(I.at(k, j), inv);
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            i64 f = A.at(i, k);
            if (f == 0) continue;
            for (int j = 0; j < n; ++j) A.at(i, j) = zm.sub(A.at(i, j), zm.mul(f, A.at(k, j))),
                                        I.at(i, j) = zm.sub(I.at(i, j), zm.mul(f, I.at(k, j)));
        }
    }
    return I;
}

// Row Howell form over Z/p^M: canonical generating set of the row span.
// Two matrices have equal row spans iff their Howell forms are identical.
inline Mat row_howell(const ZMod& zm, const Mat& A) {
    std::vector<std::vector<i64>> work;
    for (int i = 0; i < A.r; ++i) {
        std::vector<i64> row(A.c);
        for (int j = 0; j < A.c; ++j) row[j] = A.at(i, j);
        work.push_back(std::move(row));
    }
    std::vector<std::vector<i64>> done;  // pivot rows, by increasing pivot col
    for (int col = 0; col < A.c; ++col) {
        // select minimal-valuation entry at this column among rows whose
        // leading support is exactly col
        int best = -1, bv = zm.M + 1;
        for (size_t i = 0; i < work.size(); ++i) {
            bool lead = true;
            for (int j = 0; j < col; ++j)
                if (work[i][j] != 0) {
                    lead = false;
                    break;
                }
            if (!lead || work[i][col] == 0) continue;
            int v = zm.val(work[i][col]);
            if (v < bv) bv = v, best = int(i);
        }
        if (best < 0) continue;
        std::vector<i64> pivot = work[best];
        work.erase(work.begin() + best);
        i64 u = pivot[col] / zm.ppow[bv];
        i64 uin = zm.inv_unit(u);
        for (auto& x : pivot) x = zm.mul(x, uin);
        // eliminate this column from every other working row with lead >= col
        for (auto& row : work) {
            if (row[col] == 0) continue;
            bool lead = true;
            for (int j = 0; j < col; ++j)
                if (row[j] != 0) {
                    lead = false;
                    break;
                }
            if (!lead) continue;  // cannot happen: earlier pivots cleared
            i64 f = row[col] / zm.ppow[bv];
            for (int j = 0; j < A.c; ++j) row[j] = zm.sub(row[j], zm.mul(f, pivot[j]));
        }
        // annihilator completion: p^(M-bv) * pivot has leading col beyond col
        if (bv > 0) {
            std::vector<i64> ann(A.c);
            bool nonzero = false;
            for (int j = 0; j < A.c; ++j) {
                ann[j] = zm.mul(zm.ppow[zm.M - bv], pivot[j]);
                if (j > col && ann[j] != 0) nonzero = true;
            }
            ann[col] = 0;
            if (nonzero) work.push_back(std::move(ann));
        }
        done.push_back(std::move(pivot));
    }
    // reduce entries above each pivot modulo the pivot value
    for (size_t i = 0; i < done.size(); ++i) {
        int col = 0;
        while (col < A.c && done[i][col] == 0) ++col;
        i64 pv = done[i][col];
        for (size_t k = 0; k < i; ++k) {
            i64 x = done[k][col];
            i64 f = x / pv;  // floor division of representatives
            if (f == 0) continue;
            for (int j = 0; j < A.c; ++j) done[k][j] = zm.sub(done[k][j], zm.mul(f, done[i][j]));
        }
    }
    Mat H(int(done.size()), A.c);
    for (size_t i = 0; i < done.size(); ++i)
        for (int j = 0; j < A.c; ++j) H.at(int(i), j) = done[i][j];
    return H;
}

// Canonical form of the column span.
inline Mat col_howell(const ZMod& zm, const Mat& A) {
    return row_howell(zm, A.transposed()).transposed();
}

// Solve A x = b over Z/p^M (one deterministic solution), or nullopt.
inline std::optional<std::vector<i64>> solve(const ZMod& zm, const Mat& A,
                                             const std::vector<i64>& b) {
    SnfResult s = snf(zm, A);
    std::vector<i64> ub = mat_apply(zm, s.U, b);
    std::vector<i64> w(A.c, 0);
    int diag = int(s.diag_val.size());
    for (int i = 0; i < A.r; ++i) {
        if (i < diag) {
            int v = s.diag_val[i];
            if (zm.val(ub[i]) < v) return std::nullopt;
            if (i < A.c) w[i] = zm.reduce(ub[i] / zm.ppow[std::min(v, zm.M)]);
        } else if (ub[i] != 0) {
            return std::nullopt;
        }
    }
    return mat_apply(zm, s.V, w);
}

// Columns generating ker(A) for A acting on the free module (Z/p^M)^c.
inline Mat kernel_free(const ZMod& zm, const Mat& A) {
    SnfResult s = snf(zm, A);
    std::vector<std::vector<i64>> gens;
    int diag = int(s.diag_val.size());
    for (int j = 0; j < A.c; ++j) {
        int v = (j < diag) ? s.diag_val[j] : zm.M;
        if (v == 0) continue;  // unit pivot: no kernel from this slot
        std::vector<i64> e(A.c, 0);
        e[j] = zm.ppow[zm.M - v];  // p^(M-v) * e_j
        gens.push_back(mat_apply(zm, s.V, e));
    }
    Mat K(A.c, int(gens.size()));
    for (size_t j = 0; j < gens.size(); ++j) K.set_col(int(j), gens[j]);
    return K;
}

}  // namespace herrlab
