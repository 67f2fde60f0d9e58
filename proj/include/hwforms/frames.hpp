#pragma once

// Cartan moving frames on rectangular chart grids: numerical exterior
// derivative, torsion-free antisymmetric connection 1-forms from the first
// structure equation, curvature from the second, and Euclidean-compatibility
// diagnostics.
//
// Sign convention (fixed here, used everywhere): first structure equation
// d theta^i + omega^i_j ^ theta^j = 0, second Omega^i_j = d omega^i_j +
// omega^i_k ^ omega^k_j. Frames are orthonormal, so omega is antisymmetric.

#include "exterior.hpp"

#include <Eigen/Dense>

#include <array>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hwforms {

/// Uniform rectangular grid on a coordinate chart.
template <int N>
struct ChartGrid {
    static_assert(N == 2 || N == 3);

    std::array<std::array<double, 2>, N> bounds;  // per-axis [lo, hi]
    std::array<int, N> divisions;                 // cells per axis, >= 4

    ChartGrid(const std::array<std::array<double, 2>, N>& b, const std::array<int, N>& div)
        : bounds(b), divisions(div) {
        for (int i = 0; i < N; ++i) {
            if (divisions[i] < 4) throw std::invalid_argument("ChartGrid: divisions must be >= 4");
            if (bounds[i][1] <= bounds[i][0]) throw std::invalid_argument("ChartGrid: empty axis range");
        }
    }

    static ChartGrid unit_box(int div) {
        std::array<std::array<double, 2>, N> b;
        std::array<int, N> d;
        for (int i = 0; i < N; ++i) { b[i] = {0.0, 1.0}; d[i] = div; }
        return ChartGrid(b, d);
    }

    double spacing(int axis) const { return (bounds[axis][1] - bounds[axis][0]) / divisions[axis]; }
    int nodes_per_axis(int axis) const { return divisions[axis] + 1; }

    int num_nodes() const {
        int n = 1;
        for (int i = 0; i < N; ++i) n *= nodes_per_axis(i);
        return n;
    }

    int linear_index(const std::array<int, N>& m) const {
        int idx = 0;
        for (int i = N - 1; i >= 0; --i) idx = idx * nodes_per_axis(i) + m[i];
        return idx;
    }

    std::array<int, N> multi_index(int lin) const {
        std::array<int, N> m{};
        for (int i = 0; i < N; ++i) {
            m[i] = lin % nodes_per_axis(i);
            lin /= nodes_per_axis(i);
        }
        return m;
    }

    Eigen::Matrix<double, N, 1> coord(const std::array<int, N>& m) const {
        Eigen::Matrix<double, N, 1> x;
        for (int i = 0; i < N; ++i) x(i) = bounds[i][0] + m[i] * spacing(i);
        return x;
    }

    bool is_interior(const std::array<int, N>& m, int margin) const {
        for (int i = 0; i < N; ++i)
            if (m[i] < margin || m[i] > divisions[i] - margin) return false;
        return true;
    }

    bool same_layout(const ChartGrid& o) const {
        return bounds == o.bounds && divisions == o.divisions;
    }
};

template <int N, class F>
void for_each_node(const ChartGrid<N>& g, F&& f) {
    std::array<int, N> m{};
    const int total = g.num_nodes();
    for (int lin = 0; lin < total; ++lin) {
        f(lin, m);
        for (int i = 0; i < N; ++i) {
            if (++m[i] <= g.divisions[i]) break;
            m[i] = 0;
        }
    }
}

/// A k-form sampled at every grid node.
template <int N>
struct FormFieldGrid {
    ChartGrid<N> grid;
    int degree;
    std::vector<KForm<N>> values;

    FormFieldGrid(const ChartGrid<N>& g, int k)
        : grid(g), degree(k), values(g.num_nodes(), KForm<N>(k)) {}

    /// Sample an analytic field: fn(x) -> KForm of the declared degree.
    static FormFieldGrid sample(const ChartGrid<N>& g, int k,
                                const std::function<KForm<N>(const Eigen::Matrix<double, N, 1>&)>& fn) {
        FormFieldGrid f(g, k);
        for_each_node(g, [&](int lin, const std::array<int, N>& m) {
            f.values[lin] = fn(g.coord(m));
            if (f.values[lin].degree != k)
                throw std::invalid_argument("FormFieldGrid::sample: degree mismatch");
        });
        return f;
    }

    double max_abs(int margin = 0) const {
        double mx = 0.0;
        for_each_node(grid, [&](int lin, const std::array<int, N>& m) {
            if (margin > 0 && !grid.is_interior(m, margin)) return;
            mx = std::max(mx, values[lin].max_abs());
        });
        return mx;
    }
};

namespace detail {

// Second-order first derivative along `axis` of a per-node scalar accessor.
template <int N, class Get>
double fd_axis(const ChartGrid<N>& g, const Get& get, std::array<int, N> m, int axis) {
    const double h = g.spacing(axis);
    const int last = g.divisions[axis];
    const int i = m[axis];
    auto at = [&](int pos) {
        auto mm = m;
        mm[axis] = pos;
        return get(g.linear_index(mm));
    };
    if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (i == last) return (3.0 * at(last) - 4.0 * at(last - 1) + at(last - 2)) / (2.0 * h);
    return (at(i + 1) - at(i - 1)) / (2.0 * h);
}

}  // namespace detail

/// Numerical exterior derivative: centered differences in the interior,
/// second-order one-sided stencils at the boundary.
template <int N>
FormFieldGrid<N> numeric_d(const FormFieldGrid<N>& f) {
    if (f.degree >= N) throw std::invalid_argument("numeric_d: input is already a top form");
    FormFieldGrid<N> r(f.grid, f.degree + 1);
    for_each_node(f.grid, [&](int lin, const std::array<int, N>& m) {
        KForm<N> out(f.degree + 1);
        for (int axis = 0; axis < N; ++axis) {
            KForm<N> df(f.degree);
            for (int comp = 0; comp < df.size(); ++comp)
                df.c[comp] = detail::fd_axis<N>(
                    f.grid, [&](int nl) { return f.values[nl].c[comp]; }, m, axis);
            out += wedge(KForm<N>::d(axis), df);
        }
        r.values[lin] = out;
    });
    return r;
}

namespace detail {

inline std::string node_string(const Eigen::VectorXd& x) {
    std::string s = "(";
    for (int i = 0; i < x.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", x(i));
        s += buf;
        s += (i + 1 < x.size()) ? "," : ")";
    }
    return s;
}

constexpr int pair_count(int n) { return n * (n - 1) / 2; }

// index of the unordered pair (i,j), i<j, in row-major upper-triangular order
constexpr int pair_index(int n, int i, int j) {
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

}  // namespace detail

/// Coframe theta^i as n degree-1 fields; nondegenerate at every node.
template <int N>
struct CoframeField {
    std::array<FormFieldGrid<N>, N> theta;

    explicit CoframeField(const ChartGrid<N>& g)
        : theta{make_array(g, std::make_integer_sequence<int, N>{})} {}

    const ChartGrid<N>& grid() const { return theta[0].grid; }

    /// Row i = coefficients of theta^i at the node.
    Eigen::Matrix<double, N, N> matrix_at(int lin) const {
        Eigen::Matrix<double, N, N> t;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) t(i, j) = theta[i].values[lin].c[j];
        return t;
    }

    /// Sample from fn(x) -> matrix whose row i holds the coefficients of theta^i.
    static CoframeField sample(const ChartGrid<N>& g,
                               const std::function<Eigen::Matrix<double, N, N>(const Eigen::Matrix<double, N, 1>&)>& fn) {
        CoframeField cf(g);
        for_each_node(g, [&](int lin, const std::array<int, N>& m) {
            const auto t = fn(g.coord(m));
            if (t.determinant() <= 0.0)
                throw std::invalid_argument("CoframeField: degenerate coframe at node " +
                                            detail::node_string(g.coord(m)));
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) cf.theta[i].values[lin].c[j] = t(i, j);
        });
        return cf;
    }

private:
    template <int... I>
    static std::array<FormFieldGrid<N>, N> make_array(const ChartGrid<N>& g,
                                                      std::integer_sequence<int, I...>) {
        return {((void)I, FormFieldGrid<N>(g, 1))...};
    }
};

namespace detail {

template <int N>
std::array<FormFieldGrid<N>, N> d_of_coframe(const CoframeField<N>& cf) {
    if constexpr (N == 2)
        return {numeric_d(cf.theta[0]), numeric_d(cf.theta[1])};
    else
        return {numeric_d(cf.theta[0]), numeric_d(cf.theta[1]), numeric_d(cf.theta[2])};
}

}  // namespace detail

/// Antisymmetric connection omega^i_j; only i<j entries are stored, so the
/// antisymmetry invariant holds exactly by representation.
template <int N>
struct ConnectionField {
    std::vector<FormFieldGrid<N>> entries;  // pair_count(N) degree-1 fields
    ChartGrid<N> grid;

    explicit ConnectionField(const ChartGrid<N>& g)
        : entries(detail::pair_count(N), FormFieldGrid<N>(g, 1)), grid(g) {}

    KForm<N> omega(int i, int j, int lin) const {
        if (i == j) return KForm<N>(1);
        if (i < j) return entries[detail::pair_index(N, i, j)].values[lin];
        return -1.0 * entries[detail::pair_index(N, j, i)].values[lin];
    }

    KForm<N>& upper(int i, int j, int lin) {  // requires i < j
        return entries[detail::pair_index(N, i, j)].values[lin];
    }
};

/// Antisymmetric curvature 2-forms Omega^i_j, same storage scheme.
template <int N>
struct CurvatureField {
    std::vector<FormFieldGrid<N>> entries;
    ChartGrid<N> grid;

    explicit CurvatureField(const ChartGrid<N>& g)
        : entries(detail::pair_count(N), FormFieldGrid<N>(g, 2)), grid(g) {}

    KForm<N> omega2(int i, int j, int lin) const {
        if (i == j) return KForm<N>(2);
        if (i < j) return entries[detail::pair_index(N, i, j)].values[lin];
        return -1.0 * entries[detail::pair_index(N, j, i)].values[lin];
    }

    double max_abs(int margin = 0) const {
        double mx = 0.0;
        for (const auto& e : entries) mx = std::max(mx, e.max_abs(margin));
        return mx;
    }
};

/// Coframe dual to the given frame: pointwise matrix inverse. The frame is
/// supplied as fn(x) -> matrix with column j holding the components of e_j.
template <int N>
CoframeField<N> coframe_from_frame(const ChartGrid<N>& g,
                                   const std::function<Eigen::Matrix<double, N, N>(const Eigen::Matrix<double, N, 1>&)>& frame) {
    CoframeField<N> cf(g);
    for_each_node(g, [&](int lin, const std::array<int, N>& m) {
        const Eigen::Matrix<double, N, N> e = frame(g.coord(m));
        const double det = e.determinant();
        const double scale = std::pow(e.cwiseAbs().maxCoeff(), N);
        if (!(std::abs(det) > 1e-12 * scale))  // also catches the all-zero frame
            throw std::runtime_error("coframe_from_frame: singular frame at node " +
                                     detail::node_string(g.coord(m)));
        const Eigen::Matrix<double, N, N> t = e.inverse();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) cf.theta[i].values[lin].c[j] = t(i, j);
    });
    return cf;
}

/// Unique torsion-free antisymmetric connection of the coframe: solves, at
/// each node, the square linear system given by the coefficients of
/// d theta^i + omega^i_j ^ theta^j = 0.
template <int N>
ConnectionField<N> connection_from_coframe(const CoframeField<N>& cf) {
    const auto& g = cf.grid();
    ConnectionField<N> conn(g);

    std::array<FormFieldGrid<N>, N> dtheta = detail::d_of_coframe(cf);

    constexpr int P = detail::pair_count(N);
    constexpr int K2 = binom(N, 2);
    constexpr int M = P * N;  // unknowns = equations = N*K2
    static_assert(M == N * K2);

    const auto* t2 = detail::multi_indices(N, 2);

    for_each_node(g, [&](int lin, const std::array<int, N>& m) {
        Eigen::Matrix<double, M, M> A = Eigen::Matrix<double, M, M>::Zero();
        Eigen::Matrix<double, M, 1> rhs;
        for (int i = 0; i < N; ++i) {
            for (int kb = 0; kb < K2; ++kb) {
                const int row = i * K2 + kb;
                rhs(row) = -dtheta[i].values[lin].c[kb];
                const int k1 = t2[kb][0], k2 = t2[kb][1];
                for (int j = 0; j < N; ++j) {
                    if (j == i) continue;
                    const double sgn = (i < j) ? 1.0 : -1.0;
                    const int p = (i < j) ? detail::pair_index(N, i, j) : detail::pair_index(N, j, i);
                    const double tj1 = cf.theta[j].values[lin].c[k1];
                    const double tj2 = cf.theta[j].values[lin].c[k2];
                    // (omega^i_j ^ theta^j) coefficient on dx^k1 ^ dx^k2
                    A(row, p * N + k1) += sgn * tj2;
                    A(row, p * N + k2) -= sgn * tj1;
                }
            }
        }
        Eigen::FullPivLU<Eigen::Matrix<double, M, M>> lu(A);
        if (!lu.isInvertible())
            throw std::runtime_error("connection_from_coframe: singular structure system at node " +
                                     detail::node_string(g.coord(m)));
        const Eigen::Matrix<double, M, 1> w = lu.solve(rhs);
        for (int p = 0; p < P; ++p)
            for (int c = 0; c < N; ++c) conn.entries[p].values[lin].c[c] = w(p * N + c);
    });
    return conn;
}

template <int N>
struct TorsionResidual {
    std::vector<double> node_norm;  // max over i of |d theta^i + omega^i_j ^ theta^j|
    double max_norm = 0.0;
    double interior_max = 0.0;  // restricted to nodes >= 2 cells from the boundary
};

/// Max of a per-node field over nodes at least `margin` cells from the
/// boundary. Refinement studies use margin = divisions/8 so the subregion
/// stays fixed in physical space across levels.
template <int N>
double interior_max_norm(const ChartGrid<N>& grid, const std::vector<double>& node_field,
                         int margin) {
    double mx = 0.0;
    for_each_node(grid, [&](int lin, const std::array<int, N>& m) {
        if (grid.is_interior(m, margin)) mx = std::max(mx, node_field[lin]);
    });
    return mx;
}

template <int N>
TorsionResidual<N> torsion_residual(const CoframeField<N>& cf, const ConnectionField<N>& conn) {
    const auto& g = cf.grid();
    if (!g.same_layout(conn.grid)) throw std::invalid_argument("torsion_residual: grid mismatch");
    TorsionResidual<N> res;
    res.node_norm.assign(g.num_nodes(), 0.0);

    std::array<FormFieldGrid<N>, N> dtheta = detail::d_of_coframe(cf);

    for_each_node(g, [&](int lin, const std::array<int, N>& m) {
        double node = 0.0;
        for (int i = 0; i < N; ++i) {
            KForm<N> t = dtheta[i].values[lin];
            for (int j = 0; j < N; ++j)
                if (j != i) t += wedge(conn.omega(i, j, lin), cf.theta[j].values[lin]);
            node = std::max(node, t.max_abs());
        }
        res.node_norm[lin] = node;
        res.max_norm = std::max(res.max_norm, node);
        if (g.is_interior(m, 2)) res.interior_max = std::max(res.interior_max, node);
    });
    return res;
}

/// Second structure equation: Omega^i_j = d omega^i_j + omega^i_k ^ omega^k_j.
template <int N>
CurvatureField<N> curvature(const ConnectionField<N>& conn) {
    CurvatureField<N> curv(conn.grid);
    std::vector<FormFieldGrid<N>> domega;
    domega.reserve(conn.entries.size());
    for (const auto& e : conn.entries) domega.push_back(numeric_d(e));

    for_each_node(conn.grid, [&](int lin, const std::array<int, N>&) {
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) {
                const int p = detail::pair_index(N, i, j);
                KForm<N> om = domega[p].values[lin];
                for (int k = 0; k < N; ++k)
                    if (k != i && k != j)
                        om += wedge(conn.omega(i, k, lin), conn.omega(k, j, lin));
                curv.entries[p].values[lin] = om;
            }
    });
    return curv;
}

/// g = delta_ij theta^i (x) theta^j at every node.
template <int N>
std::vector<Eigen::Matrix<double, N, N>> metric_from_coframe(const CoframeField<N>& cf) {
    std::vector<Eigen::Matrix<double, N, N>> out(cf.grid().num_nodes());
    for_each_node(cf.grid(), [&](int lin, const std::array<int, N>&) {
        const auto t = cf.matrix_at(lin);
        out[lin] = t.transpose() * t;
    });
    return out;
}

/// Euclidean-compatibility diagnostics of a coframe field.
template <int N>
struct FlatnessReport {
    double max_torsion;            // after the connection solve, whole grid
    double max_curvature;          // interior max-norm of Omega coefficients
    bool compatible;               // max_curvature <= tolerance
    ConnectionField<N> connection;
    CurvatureField<N> curvature;
    std::vector<double> torsion_nodes;
};

/// Legacy-VTK structured points with one scalar array per named column.
template <int N>
void save_grid_vtk(const std::string& path, const ChartGrid<N>& grid,
                   const std::vector<std::pair<std::string, const std::vector<double>*>>& scalars) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_grid_vtk: cannot open " + path);
    char buf[96];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "# vtk DataFile Version 2.0\nhwforms grid output\nASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << grid.nodes_per_axis(0) << " " << grid.nodes_per_axis(1) << " "
        << (N == 3 ? grid.nodes_per_axis(N - 1) : 1) << "\n";
    out << "ORIGIN " << num(grid.bounds[0][0]) << " " << num(grid.bounds[1][0]) << " "
        << (N == 3 ? num(grid.bounds[N - 1][0]) : "0") << "\n";
    out << "SPACING " << num(grid.spacing(0)) << " " << num(grid.spacing(1)) << " "
        << (N == 3 ? num(grid.spacing(N - 1)) : "1") << "\n";
    out << "POINT_DATA " << grid.num_nodes() << "\n";
    for (const auto& [name, data] : scalars) {
        if (static_cast<int>(data->size()) != grid.num_nodes())
            throw std::invalid_argument("save_grid_vtk: field '" + name + "' has wrong size");
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : *data) out << num(v) << "\n";
    }
}

/// CSV with node coordinates followed by the named columns.
template <int N>
void save_grid_csv(const std::string& path, const ChartGrid<N>& grid,
                   const std::vector<std::pair<std::string, const std::vector<double>*>>& columns) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_grid_csv: cannot open " + path);
    char buf[96];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    static const char* axis_name[3] = {"x", "y", "z"};
    for (int i = 0; i < N; ++i) out << axis_name[i] << ",";
    for (size_t i = 0; i < columns.size(); ++i)
        out << columns[i].first << (i + 1 < columns.size() ? "," : "\n");
    for_each_node(grid, [&](int lin, const std::array<int, N>& m) {
        const auto x = grid.coord(m);
        for (int i = 0; i < N; ++i) out << num(x(i)) << ",";
        for (size_t i = 0; i < columns.size(); ++i)
            out << num((*columns[i].second)[lin]) << (i + 1 < columns.size() ? "," : "\n");
    });
}

template <int N>
FlatnessReport<N> flatness_report(const CoframeField<N>& cf, double tolerance) {
    auto conn = connection_from_coframe(cf);
    auto tor = torsion_residual(cf, conn);
    auto curv = curvature(conn);
    const double mc = curv.max_abs(2);
    return FlatnessReport<N>{tor.max_norm, mc, mc <= tolerance,
                             std::move(conn), std::move(curv), std::move(tor.node_norm)};
}

}  // namespace hwforms
