#pragma once

// Brute-force reference implementations used only by the test suite.
//
// Forms are stored as full n^k alternating tensors and every operation is
// written from its textbook definition (shuffle sums over all permutations,
// the Hodge star as the solution of its defining relation, pullback by
// evaluating on mapped basis vectors). Nothing here shares code or index
// conventions with include/hwforms -- except the one convention under test,
// the lexicographic ascending multi-index basis, which both sides must
// agree on for coefficients to be comparable at all.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace oracle {

// All ascending k-tuples out of {0..n-1}, lexicographic.
inline std::vector<std::vector<int>> ascending_tuples(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    // iterative odometer
    cur.assign(k, 0);
    for (int i = 0; i < k; ++i) cur[i] = i;
    if (k == 0) {
        out.push_back({});
        return out;
    }
    if (k > n) return out;
    while (true) {
        out.push_back(cur);
        int i = k - 1;
        while (i >= 0 && cur[i] == n - k + i) --i;
        if (i < 0) break;
        ++cur[i];
        for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

// Dense alternating k-tensor on R^n: t has n^k entries, index i1..ik maps to
// ((i1*n + i2)*n + ...) + ik.
struct DenseForm {
    int n = 0, k = 0;
    std::vector<double> t;

    DenseForm() = default;
    DenseForm(int n_, int k_) : n(n_), k(k_) {
        int sz = 1;
        for (int i = 0; i < k; ++i) sz *= n;
        t.assign(sz, 0.0);
    }

    int flat(const std::vector<int>& idx) const {
        int f = 0;
        for (int i = 0; i < k; ++i) f = f * n + idx[i];
        return f;
    }
    double at(const std::vector<int>& idx) const { return t[flat(idx)]; }
    void set(const std::vector<int>& idx, double v) { t[flat(idx)] = v; }
};

inline int perm_sign_of(std::vector<int> idx) {
    int sign = 1;
    for (size_t i = 0; i < idx.size(); ++i)
        for (size_t j = i + 1; j < idx.size(); ++j) {
            if (idx[i] == idx[j]) return 0;
            if (idx[i] > idx[j]) sign = -sign;
        }
    return sign;
}

// Iterate all index tuples (i1..ik) in {0..n-1}^k.
template <class Fn>
void for_all_tuples(int n, int k, const Fn& fn) {
    std::vector<int> idx(k, 0);
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - 1) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = 0;
    }
}

// Build the dense tensor from coefficients on the ascending basis: the
// coefficient of dx^{i1}^..^dx^{ik} (i1<..<ik) is the tensor value at that
// tuple, extended by antisymmetry.
inline DenseForm from_coeffs(int n, int k, const std::vector<double>& coeffs) {
    DenseForm f(n, k);
    if (k == 0) {
        f.t[0] = coeffs[0];
        return f;
    }
    const auto basis = ascending_tuples(n, k);
    for (size_t b = 0; b < basis.size(); ++b) {
        std::vector<int> idx = basis[b];
        std::vector<int> perm(k);
        for (int i = 0; i < k; ++i) perm[i] = i;
        // place the coefficient at every permutation of the tuple
        std::sort(perm.begin(), perm.end());
        do {
            std::vector<int> p(k);
            for (int i = 0; i < k; ++i) p[i] = idx[perm[i]];
            f.set(p, perm_sign_of(p) * coeffs[b]);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return f;
}

inline std::vector<double> to_coeffs(const DenseForm& f) {
    if (f.k == 0) return {f.t[0]};
    std::vector<double> out;
    for (const auto& idx : ascending_tuples(f.n, f.k)) out.push_back(f.at(idx));
    return out;
}

// alpha ^ beta = (k+l)!/(k! l!) Alt(alpha x beta), expanded as the signed sum
// over all permutations of the output slots divided by k! l!.
inline DenseForm wedge(const DenseForm& a, const DenseForm& b) {
    if (a.n != b.n) throw std::invalid_argument("oracle::wedge dim mismatch");
    const int n = a.n, k = a.k, l = b.k;
    DenseForm r(n, k + l);
    double kfact = 1.0, lfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    for (int i = 2; i <= l; ++i) lfact *= i;
    for_all_tuples(n, k + l, [&](const std::vector<int>& idx) {
        std::vector<int> perm(k + l);
        for (int i = 0; i < k + l; ++i) perm[i] = i;
        double s = 0.0;
        do {
            int sign = perm_sign_of(perm);
            std::vector<int> ia(k), ib(l);
            for (int i = 0; i < k; ++i) ia[i] = idx[perm[i]];
            for (int i = 0; i < l; ++i) ib[i] = idx[perm[k + i]];
            s += sign * (k ? a.at(ia) : a.t[0]) * (l ? b.at(ib) : b.t[0]);
        } while (std::next_permutation(perm.begin(), perm.end()));
        r.set(idx, s / (kfact * lfact));
    });
    if (k + l == 0) r.t[0] = a.t[0] * b.t[0];
    return r;
}

// <alpha, beta>_g = (1/k!) a_{i..} b_{j..} g^{i1 j1} .. g^{ik jk}.
inline double inner(const DenseForm& a, const DenseForm& b, const Eigen::MatrixXd& g) {
    if (a.k == 0) return a.t[0] * b.t[0];
    const Eigen::MatrixXd gi = g.inverse();
    double kfact = 1.0;
    for (int i = 2; i <= a.k; ++i) kfact *= i;
    double s = 0.0;
    for_all_tuples(a.n, a.k, [&](const std::vector<int>& ia) {
        if (a.at(ia) == 0.0) return;
        for_all_tuples(a.n, a.k, [&](const std::vector<int>& ib) {
            double prod = a.at(ia) * b.at(ib);
            for (int m = 0; m < a.k; ++m) prod *= gi(ia[m], ib[m]);
            s += prod;
        });
    });
    return s / kfact;
}

// Hodge star by solving beta ^ star(alpha) = <beta, alpha>_g vol_g over the
// basis of test k-forms; unknowns are the ascending coefficients of star(alpha).
inline DenseForm hodge(const DenseForm& a, const Eigen::MatrixXd& g) {
    const int n = a.n, k = a.k;
    const auto unknowns = ascending_tuples(n, n - k);
    const auto tests = ascending_tuples(n, k);
    const int m = static_cast<int>(unknowns.size());
    Eigen::MatrixXd M(m, m);
    Eigen::VectorXd rhs(m);
    const double sq = std::sqrt(g.determinant());
    std::vector<int> top(n);
    for (int i = 0; i < n; ++i) top[i] = i;
    for (int r = 0; r < m; ++r) {
        std::vector<double> beta_c(tests.size(), 0.0);
        beta_c[r] = 1.0;
        const DenseForm beta = from_coeffs(n, k, beta_c);
        for (int c = 0; c < m; ++c) {
            std::vector<double> cand_c(m, 0.0);
            cand_c[c] = 1.0;
            const DenseForm cand = from_coeffs(n, n - k, cand_c);
            const DenseForm w = wedge(beta, cand);
            M(r, c) = (n == 0) ? w.t[0] : w.at(top);
        }
        rhs(r) = inner(beta, a, g) * sq;
    }
    const Eigen::VectorXd x = M.fullPivLu().solve(rhs);
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[i] = x(i);
    return from_coeffs(n, n - k, out);
}

// (F* a)(v1..vk) = a(F v1, .., F vk).
inline DenseForm pullback(const DenseForm& a, const Eigen::MatrixXd& F) {
    DenseForm r(a.n, a.k);
    if (a.k == 0) {
        r.t[0] = a.t[0];
        return r;
    }
    for_all_tuples(a.n, a.k, [&](const std::vector<int>& idx) {
        double s = 0.0;
        for_all_tuples(a.n, a.k, [&](const std::vector<int>& src) {
            double prod = a.at(src);
            if (prod == 0.0) return;
            for (int m = 0; m < a.k; ++m) prod *= F(src[m], idx[m]);
            s += prod;
        });
        r.set(idx, s);
    });
    return r;
}

// sum_a tau_a ^ u^a, returning the coefficient of the top form.
inline double pair_forms_top(const std::vector<DenseForm>& tau,
                             const std::vector<DenseForm>& u) {
    const int n = tau[0].n;
    std::vector<int> top(n);
    for (int i = 0; i < n; ++i) top[i] = i;
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += wedge(tau[a], u[a]).at(top);
    return s;
}

}  // namespace oracle
