#pragma once

// Pointwise exterior algebra in dimension N (2 or 3): alternating k-forms,
// wedge product, Hodge star, musical isomorphisms, pullback, and the duality
// pairing of vector/covector-valued forms.
//
// Conventions fixed repo-wide:
//   * basis k-forms are indexed by strictly ascending multi-indices in
//     lexicographic order, e.g. N=3, k=2: (dx^dy), (dx^dz), (dy^dz);
//   * coordinates are numbered 0..N-1 and printed as x, y, z.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace hwforms {

constexpr int binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    int r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

namespace detail {

// Ascending multi-indices of length k out of 0..n-1, lexicographic.
// Padded to length 3; only the first k entries are meaningful.
inline const std::array<int, 3>* multi_indices(int n, int k) {
    static const std::array<int, 3> tables[4][4][3] = {
        /* n=0,1 unused */ {}, {},
        {   // n = 2
            {{{-1, -1, -1}}},
            {{{0, -1, -1}}, {{1, -1, -1}}},
            {{{0, 1, -1}}},
            {},
        },
        {   // n = 3
            {{{-1, -1, -1}}},
            {{{0, -1, -1}}, {{1, -1, -1}}, {{2, -1, -1}}},
            {{{0, 1, -1}}, {{0, 2, -1}}, {{1, 2, -1}}},
            {{{0, 1, 2}}},
        },
    };
    return tables[n][k];
}

// Sign of the permutation sorting `idx` ascending; 0 on repeated entries.
inline int perm_sign(const int* idx, int len) {
    int sign = 1;
    for (int i = 0; i < len; ++i)
        for (int j = i + 1; j < len; ++j) {
            if (idx[i] == idx[j]) return 0;
            if (idx[i] > idx[j]) sign = -sign;
        }
    return sign;
}

// Position of the ascending index set `idx` (length k) in the basis table.
inline int basis_position(int n, int k, const int* idx) {
    const auto* tab = multi_indices(n, k);
    for (int p = 0; p < binom(n, k); ++p) {
        bool match = true;
        for (int i = 0; i < k; ++i) match &= (tab[p][i] == idx[i]);
        if (match) return p;
    }
    return -1;
}

}  // namespace detail

/// Symmetric positive-definite metric at a point; SPD verified on construction.
template <int N>
class Metric {
    static_assert(N == 2 || N == 3);

public:
    using Mat = Eigen::Matrix<double, N, N>;

    explicit Metric(const Mat& g) : g_(g) {
        if (g != g.transpose()) throw std::invalid_argument("Metric: matrix not symmetric");
        // leading principal minors
        for (int k = 1; k <= N; ++k)
            if (g.topLeftCorner(k, k).determinant() <= 0.0)
                throw std::invalid_argument("Metric: matrix not positive definite");
    }

    static Metric identity() { return Metric(Mat::Identity()); }

    const Mat& matrix() const { return g_; }
    Mat inverse() const { return g_.inverse(); }
    double det() const { return g_.determinant(); }
    double sqrt_det() const { return std::sqrt(g_.determinant()); }

private:
    Mat g_;
};

/// Coefficients of an alternating k-form at a point.
template <int N>
struct KForm {
    static_assert(N == 2 || N == 3);

    int degree = 0;
    std::array<double, 3> c{};  // active size = binom(N, degree)

    KForm() = default;
    explicit KForm(int k) : degree(k) {
        if (k < 0 || k > N) throw std::invalid_argument("KForm: degree out of [0,n]");
    }

    int size() const { return binom(N, degree); }

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }

    /// Basis 1-form dx^axis.
    static KForm d(int axis) {
        KForm f(1);
        f.c[axis] = 1.0;
        return f;
    }

    /// Constant 0-form.
    static KForm scalar(double v) {
        KForm f(0);
        f.c[0] = v;
        return f;
    }

    /// Top form c * dx^0 ^ ... ^ dx^{N-1}.
    static KForm volume(double v = 1.0) {
        KForm f(N);
        f.c[0] = v;
        return f;
    }

    KForm& operator+=(const KForm& o) {
        if (o.degree != degree) throw std::invalid_argument("KForm: degree mismatch in +=");
        for (int i = 0; i < size(); ++i) c[i] += o.c[i];
        return *this;
    }
    KForm& operator-=(const KForm& o) {
        if (o.degree != degree) throw std::invalid_argument("KForm: degree mismatch in -=");
        for (int i = 0; i < size(); ++i) c[i] -= o.c[i];
        return *this;
    }
    KForm& operator*=(double s) {
        for (int i = 0; i < size(); ++i) c[i] *= s;
        return *this;
    }
    friend KForm operator+(KForm a, const KForm& b) { return a += b; }
    friend KForm operator-(KForm a, const KForm& b) { return a -= b; }
    friend KForm operator*(double s, KForm a) { return a *= s; }
    friend KForm operator*(KForm a, double s) { return a *= s; }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < size(); ++i) m = std::max(m, std::abs(c[i]));
        return m;
    }
};

template <int N>
KForm<N> wedge(const KForm<N>& a, const KForm<N>& b) {
    const int k = a.degree, l = b.degree;
    if (k + l > N) throw std::invalid_argument("wedge: result degree exceeds dimension");
    KForm<N> r(k + l);
    const auto* ta = detail::multi_indices(N, k);
    const auto* tb = detail::multi_indices(N, l);
    for (int i = 0; i < a.size(); ++i) {
        if (a.c[i] == 0.0) continue;
        for (int j = 0; j < b.size(); ++j) {
            if (b.c[j] == 0.0) continue;
            int idx[6];
            for (int p = 0; p < k; ++p) idx[p] = ta[i][p];
            for (int p = 0; p < l; ++p) idx[k + p] = tb[j][p];
            const int sign = detail::perm_sign(idx, k + l);
            if (sign == 0) continue;
            int sorted[6];
            std::copy(idx, idx + k + l, sorted);
            std::sort(sorted, sorted + k + l);
            r.c[detail::basis_position(N, k + l, sorted)] += sign * a.c[i] * b.c[j];
        }
    }
    return r;
}

/// Hodge star defined by beta ^ (star alpha) = <beta, alpha>_g vol_g.
template <int N>
KForm<N> hodge(const KForm<N>& a, const Metric<N>& g) {
    const int k = a.degree;
    KForm<N> r(N - k);
    const auto ginv = g.inverse();
    const double sq = g.sqrt_det();
    const auto* tk = detail::multi_indices(N, k);
    const auto* tc = detail::multi_indices(N, N - k);
    for (int jp = 0; jp < r.size(); ++jp) {
        // complement of J, ascending
        int comp[3];
        int nc = 0;
        for (int ax = 0; ax < N; ++ax) {
            bool in_j = false;
            for (int p = 0; p < N - k; ++p) in_j |= (tc[jp][p] == ax);
            if (!in_j) comp[nc++] = ax;
        }
        int idx[3];
        for (int p = 0; p < k; ++p) idx[p] = comp[p];
        for (int p = 0; p < N - k; ++p) idx[k + p] = tc[jp][p];
        const int sign = detail::perm_sign(idx, N);
        // <dx^comp, alpha>_g via Gram determinants of the inverse metric
        double inner = 0.0;
        for (int i = 0; i < a.size(); ++i) {
            if (a.c[i] == 0.0) continue;
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> m(k, k);
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) m(p, q) = ginv(comp[p], tk[i][q]);
            inner += a.c[i] * (k == 0 ? 1.0 : m.determinant());
        }
        r.c[jp] = sign * sq * inner;
    }
    return r;
}

/// Inner product of two k-forms under g (Gram determinant extension).
template <int N>
double inner(const KForm<N>& a, const KForm<N>& b, const Metric<N>& g) {
    if (a.degree != b.degree) throw std::invalid_argument("inner: degree mismatch");
    const int k = a.degree;
    const auto ginv = g.inverse();
    const auto* tk = detail::multi_indices(N, k);
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j) {
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> m(k, k);
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) m(p, q) = ginv(tk[i][p], tk[j][q]);
            s += a.c[i] * b.c[j] * (k == 0 ? 1.0 : m.determinant());
        }
    return s;
}

template <int N>
Eigen::Matrix<double, N, 1> sharp(const KForm<N>& a, const Metric<N>& g) {
    if (a.degree != 1) throw std::invalid_argument("sharp: expects a 1-form");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = a.c[i];
    return g.inverse() * v;
}

template <int N>
KForm<N> flat(const Eigen::Matrix<double, N, 1>& v, const Metric<N>& g) {
    KForm<N> a(1);
    Eigen::Matrix<double, N, 1> w = g.matrix() * v;
    for (int i = 0; i < N; ++i) a.c[i] = w(i);
    return a;
}

/// Pullback along the linear map F: (F* a)(v1..vk) = a(F v1, .., F vk).
template <int N>
KForm<N> pullback(const KForm<N>& a, const Eigen::Matrix<double, N, N>& F) {
    const int k = a.degree;
    KForm<N> r(k);
    const auto* tk = detail::multi_indices(N, k);
    for (int i = 0; i < r.size(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.size(); ++j) {
            if (a.c[j] == 0.0) continue;
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> m(k, k);
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) m(p, q) = F(tk[j][p], tk[i][q]);
            s += a.c[j] * (k == 0 ? 1.0 : m.determinant());
        }
        r.c[i] = s;
    }
    return r;
}

/// Form with an extra vector (or covector) leg, expressed in an orthonormal
/// frame of the deformed configuration. All parts share one degree.
template <int N>
struct LegValuedForm {
    std::array<KForm<N>, N> parts;

    explicit LegValuedForm(int degree = 0) {
        for (auto& p : parts) p = KForm<N>(degree);
    }

    int degree() const { return parts[0].degree; }
};

template <int N>
using VectorValuedForm = LegValuedForm<N>;
template <int N>
using CoVectorValuedForm = LegValuedForm<N>;

/// Duality pairing sum_a tau_a ^ u^a; legs contract through the orthonormal
/// pairing <f^a, f_b> = delta^a_b. Degrees must be complementary.
template <int N>
KForm<N> pair_forms(const CoVectorValuedForm<N>& tau, const VectorValuedForm<N>& u) {
    if (tau.degree() + u.degree() != N)
        throw std::invalid_argument("pair_forms: degrees do not sum to n");
    KForm<N> r(N);
    for (int a = 0; a < N; ++a) r += wedge(tau.parts[a], u.parts[a]);
    return r;
}

/// Debug printer: "c*dx^dy + ..." with full-precision coefficients.
template <int N>
std::string to_string(const KForm<N>& a) {
    static const char* axis_name[3] = {"dx", "dy", "dz"};
    const auto* tk = detail::multi_indices(N, a.degree);
    std::string out;
    for (int i = 0; i < a.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17e", a.c[i]);
        if (!out.empty()) out += " + ";
        out += buf;
        for (int p = 0; p < a.degree; ++p) {
            out += (p == 0 ? "*" : "^");
            out += axis_name[tk[i][p]];
        }
    }
    return out.empty() ? "0" : out;
}

}  // namespace hwforms
