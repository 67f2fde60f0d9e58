#pragma once

// Subcommand implementations behind the hwcli front end. They are plain
// functions returning process exit codes so that tests can drive them
// in-process.
//
// Exit codes: 0 ok, 1 check failure, 2 usage/config error, 3 nonconvergence,
// 4 inadmissible state.

#include "hwforms/config.hpp"
#include "hwforms/constitutive.hpp"
#include "hwforms/errors.hpp"
#include "hwforms/exterior.hpp"
#include "hwforms/frame_catalog.hpp"
#include "hwforms/frames.hpp"
#include "hwforms/hw_solver.hpp"
#include "hwforms/kinematics.hpp"
#include "hwforms/mesh.hpp"

#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace hwforms::cli {

constexpr int exit_ok = 0;
constexpr int exit_check_failure = 1;
constexpr int exit_usage = 2;
constexpr int exit_nonconvergence = 3;
constexpr int exit_inadmissible = 4;

// ---------------------------------------------------------------------------
// mesh

struct MeshArgs {
    int dim = 2;
    std::string div;  // "NXxNY" or "NXxNYxNZ"
    std::vector<double> lo, hi;  // optional bounds
    std::string out;
};

namespace detail {

inline std::vector<int> parse_divisions(const std::string& s) {
    std::vector<int> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, 'x')) out.push_back(hwforms::detail::to_int(item, 0));
    return out;
}

template <int N>
int run_mesh(const MeshArgs& args, const std::vector<int>& div) {
    std::array<int, N> d;
    std::array<std::array<double, 2>, N> bounds;
    for (int i = 0; i < N; ++i) {
        d[i] = div[i];
        bounds[i] = {args.lo.empty() ? 0.0 : args.lo[i], args.hi.empty() ? 1.0 : args.hi[i]};
    }
    const auto mesh = build_box_mesh<N>(d, bounds);
    save_off(args.out, mesh);
    std::cout << "wrote " << args.out << ": " << mesh.num_vertices() << " vertices, "
              << mesh.num_elements() << " elements, " << mesh.boundary_facets.size()
              << " boundary facets\n";
    return exit_ok;
}

}  // namespace detail

inline int cmd_mesh(const MeshArgs& args) {
    try {
        if (args.dim != 2 && args.dim != 3) throw std::invalid_argument("dim must be 2 or 3");
        if (args.out.empty()) throw std::invalid_argument("missing output path");
        const auto div = detail::parse_divisions(args.div);
        if (static_cast<int>(div.size()) != args.dim)
            throw std::invalid_argument("--div must have dim entries, e.g. 8x8");
        for (int d : div)
            if (d < 1) throw std::invalid_argument("divisions must be >= 1");
        if (!args.lo.empty() && static_cast<int>(args.lo.size()) != args.dim)
            throw std::invalid_argument("--lo must have dim entries");
        if (!args.hi.empty() && static_cast<int>(args.hi.size()) != args.dim)
            throw std::invalid_argument("--hi must have dim entries");
        return args.dim == 2 ? detail::run_mesh<2>(args, div) : detail::run_mesh<3>(args, div);
    } catch (const std::exception& e) {
        std::cerr << "mesh: " << e.what() << "\n";
        return exit_usage;
    }
}

// ---------------------------------------------------------------------------
// solve

namespace detail {

template <int N>
SimplicialMesh<N> mesh_from_config(const RunConfig& cfg) {
    if (cfg.mesh.rfind("box:", 0) == 0) {
        const auto div = parse_divisions(cfg.mesh.substr(4));
        if (static_cast<int>(div.size()) != N)
            throw std::invalid_argument("mesh box spec needs " + std::to_string(N) + " divisions");
        std::array<int, N> d;
        std::array<std::array<double, 2>, N> bounds;
        for (int i = 0; i < N; ++i) {
            d[i] = div[i];
            bounds[i] = {cfg.box_lo.empty() ? 0.0 : cfg.box_lo[i],
                         cfg.box_hi.empty() ? 1.0 : cfg.box_hi[i]};
        }
        return build_box_mesh<N>(d, bounds);
    }
    return load_off<N>(cfg.mesh);
}

template <int N>
BoundaryData<N> boundary_from_config(const RunConfig& cfg, const SimplicialMesh<N>& mesh) {
    using Vec = Eigen::Matrix<double, N, 1>;
    BoundaryData<N> bcs;
    const auto clauses = parse_dirichlet(cfg.dirichlet, N);
    for (const auto& c : clauses) {
        Eigen::Matrix<double, N, N> A;
        Vec b;
        for (int i = 0; i < N; ++i) {
            b(i) = c.b[i];
            for (int j = 0; j < N; ++j) A(i, j) = c.A[i * N + j];
        }
        for (const auto& f : mesh.boundary_facets) {
            const bool hit = c.all_markers ||
                             std::find(c.markers.begin(), c.markers.end(), f.marker) != c.markers.end();
            if (!hit) continue;
            for (int v : f.vertices) bcs.fix_vertex(v, A * mesh.vertices[v] + b);
        }
    }
    if (bcs.dirichlet.empty()) throw std::invalid_argument("dirichlet clauses match no boundary facet");
    if (!cfg.neumann.empty())
        for (const auto& [marker, t] : parse_neumann(cfg.neumann, N)) {
            Vec tv;
            for (int i = 0; i < N; ++i) tv(i) = t[i];
            bcs.neumann[marker] = tv;
        }
    if (!cfg.body_force.empty()) {
        const auto b = hwforms::detail::parse_vector(cfg.body_force, N, 0);
        for (int i = 0; i < N; ++i) bcs.body_force(i) = b[i];
    }
    return bcs;
}

template <int N>
void write_solution(const std::string& prefix, const SimplicialMesh<N>& mesh,
                    const HWState<N>& state, const EnergyModel& model,
                    const ConvergenceReport& report) {
    const int ne = mesh.num_elements();
    NamedField position{"position", 3, {}}, displacement{"displacement", 3, {}};
    for (int v = 0; v < mesh.num_vertices(); ++v)
        for (int i = 0; i < 3; ++i) {
            const double x = i < N ? state.phi[v](i) : 0.0;
            const double x0 = i < N ? mesh.vertices[v](i) : 0.0;
            position.data.push_back(x);
            displacement.data.push_back(x - x0);
        }

    NamedField theta{"theta", N * N, {}}, traction{"traction", N * N, {}}, cgreen{"C", N * N, {}},
        sigma{"sigma", N * N, {}}, jac{"J", 1, {}}, energy_density{"W", 1, {}},
        compat{"compatibility_residual", 1, {}};
    const auto cres = compatibility_residual(mesh, state.phi, state.theta);
    for (int e = 0; e < ne; ++e) {
        const auto& th = state.theta[e];
        const auto& tr = state.traction[e];
        const auto c = C_from_theta<N>(th);
        const auto sg = cauchy_from_pk1<N>(tr, th, e);
        for (int a = 0; a < N; ++a)
            for (int A = 0; A < N; ++A) {
                theta.data.push_back(th(a, A));
                traction.data.push_back(tr(a, A));
                cgreen.data.push_back(c(a, A));
                sigma.data.push_back(sg(a, A));
            }
        jac.data.push_back(th.determinant());
        energy_density.data.push_back(energy<N>(model, th, e));
        compat.data.push_back(cres.per_element[e].norm());
    }
    save_vtk(prefix + ".vtk", mesh, {position, displacement},
             {theta, traction, cgreen, sigma, jac, energy_density, compat});

    std::vector<std::vector<double>> rows;
    for (const auto& it : report.history)
        rows.push_back({static_cast<double>(it.iter), it.r_phi, it.r_theta, it.r_tau, it.step});
    save_csv(prefix + "_history.csv", {"iter", "r_phi", "r_theta", "r_tau", "step"}, rows);

    std::ofstream rep(prefix + "_report.txt");
    rep << "converged: " << (report.converged ? "yes" : "no") << "\n"
        << "iterations: " << report.iterations << "\n"
        << "final_residual: " << report.final_residual << "\n";
    if (!report.message.empty()) rep << "message: " << report.message << "\n";
}

template <int N>
int run_solve(const RunConfig& cfg) {
    SimplicialMesh<N> mesh;
    BoundaryData<N> bcs;
    EnergyModel model{material_from_string(cfg.material), MaterialParams(cfg.lambda, cfg.mu, N)};
    try {
        mesh = mesh_from_config<N>(cfg);
        bcs = boundary_from_config<N>(cfg, mesh);
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return exit_usage;
    }

    SolverConfig scfg;
    scfg.tol_rel = cfg.tol_rel;
    scfg.tol_abs = cfg.tol_abs;
    scfg.max_iter = cfg.max_iter;
    scfg.mode = (cfg.mode == "condensed") ? SolverMode::condensed : SolverMode::monolithic;

    HWState<N> state;
    try {
        state = initial_state<N>(mesh, bcs, model);
    } catch (const inadmissible_state& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return exit_inadmissible;
    }

    std::pair<HWState<N>, ConvergenceReport> result;
    try {
        result = (scfg.mode == SolverMode::condensed)
                     ? condensed_solve<N>(mesh, bcs, model, scfg, std::move(state))
                     : newton_solve<N>(mesh, bcs, model, scfg, std::move(state));
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return exit_nonconvergence;
    }

    write_solution<N>(cfg.out_prefix, mesh, result.first, model, result.second);
    const auto& rep = result.second;
    std::cout << "solve: " << (rep.converged ? "converged" : "NOT converged") << " in "
              << rep.iterations << " iterations, final residual " << rep.final_residual << "\n";
    if (!rep.converged && !rep.message.empty()) std::cerr << rep.message << "\n";
    return rep.converged ? exit_ok : exit_nonconvergence;
}

}  // namespace detail

inline int cmd_solve(const std::string& config_path) {
    RunConfig cfg;
    try {
        cfg = parse_config_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return exit_usage;
    }
    try {
        return cfg.dim == 2 ? detail::run_solve<2>(cfg) : detail::run_solve<3>(cfg);
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return exit_usage;
    }
}

// ---------------------------------------------------------------------------
// frames

struct FramesArgs {
    std::string field;
    int div = 16;
    int refine = 1;
    double tolerance = 1e-6;  // compatibility threshold scale (multiplied by h^2)
    std::string out_prefix;
};

namespace detail {

inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
    // least-squares fit of log(err) against log(h)
    const int n = static_cast<int>(h.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

inline int cmd_frames(const FramesArgs& args) {
    const auto* example = find_coframe_example(args.field);
    if (!example) {
        std::cerr << "frames: unknown field '" << args.field << "' (available:";
        for (const auto& e : coframe_catalog()) std::cerr << " " << e.name;
        std::cerr << ")\n";
        return exit_usage;
    }
    if (args.div < 4 || args.refine < 1) {
        std::cerr << "frames: need --div >= 4 and --refine >= 1\n";
        return exit_usage;
    }

    std::vector<double> hs, torsion_vs_analytic, curvature_max;
    double max_torsion = 0.0, max_curv = 0.0, gauss = 0.0;
    for (int r = 0; r < args.refine; ++r) {
        const int div = args.div << r;
        const auto grid = example->make_grid(div);
        const auto cf = CoframeField<2>::sample(grid, example->coframe);
        const double h = std::max(grid.spacing(0), grid.spacing(1));
        const auto report = flatness_report(cf, args.tolerance * h * h);

        // residual of the first structure equation with the analytic
        // connection sampled on the grid; decays at the stencil order
        ConnectionField<2> analytic(grid);
        for_each_node(grid, [&](int lin, const std::array<int, 2>& m) {
            analytic.upper(0, 1, lin) = example->omega12(grid.coord(m));
        });
        const int margin = std::max(2, div / 8);
        hs.push_back(h);
        torsion_vs_analytic.push_back(
            interior_max_norm(grid, torsion_residual(cf, analytic).node_norm, margin));
        curvature_max.push_back(report.curvature.max_abs(margin));

        max_torsion = report.max_torsion;
        max_curv = report.max_curvature;

        // Gauss coefficient Omega^1_2 / (theta^1 ^ theta^2) at interior nodes
        gauss = 0.0;
        for_each_node(grid, [&](int lin, const std::array<int, 2>& m) {
            if (!grid.is_interior(m, 2)) return;
            const auto vol = wedge(cf.theta[0].values[lin], cf.theta[1].values[lin]);
            gauss = std::max(gauss, std::abs(report.curvature.omega2(0, 1, lin).c[0] / vol.c[0]));
        });

        if (r == args.refine - 1 && !args.out_prefix.empty()) {
            std::vector<double> w_dx(grid.num_nodes()), w_dy(grid.num_nodes()),
                curv(grid.num_nodes());
            for (int lin = 0; lin < grid.num_nodes(); ++lin) {
                const auto w = report.connection.omega(0, 1, lin);
                w_dx[lin] = w.c[0];
                w_dy[lin] = w.c[1];
                curv[lin] = report.curvature.omega2(0, 1, lin).c[0];
            }
            const std::vector<std::pair<std::string, const std::vector<double>*>> cols = {
                {"omega12_dx", &w_dx},
                {"omega12_dy", &w_dy},
                {"curvature12", &curv},
                {"torsion", &report.torsion_nodes}};
            save_grid_csv(args.out_prefix + ".csv", grid, cols);
            save_grid_vtk(args.out_prefix + ".vtk", grid, cols);
        }
    }

    std::printf("field=%s div=%d max_torsion=%.3e max_curvature=%.3e gauss_max=%.6f",
                args.field.c_str(), args.div << (args.refine - 1), max_torsion, max_curv, gauss);
    if (args.refine >= 2) {
        std::printf(" torsion_slope=%.3f", detail::loglog_slope(hs, torsion_vs_analytic));
        if (curvature_max.front() > 1e-10)  // slope is meaningless at roundoff level
            std::printf(" curvature_slope=%.3f", detail::loglog_slope(hs, curvature_max));
    }
    std::printf("\n");
    return exit_ok;
}

// ---------------------------------------------------------------------------
// check: fast subset of the acceptance properties.

namespace detail {

struct Checker {
    bool all_ok = true;
    std::vector<std::string> failures;

    void record(const std::string& name, bool ok, double worst) {
        std::printf("[%s] %-52s (worst %.3e)\n", ok ? "PASS" : "FAIL", name.c_str(), worst);
        if (!ok) {
            all_ok = false;
            failures.push_back(name);
        }
    }
};

template <int N>
KForm<N> random_form(std::mt19937& rng, int degree) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    KForm<N> f(degree);
    for (int i = 0; i < f.size(); ++i) f.c[i] = u(rng);
    return f;
}

template <int N>
Metric<N> random_metric(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::Matrix<double, N, N> a;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) a(i, j) = u(rng);
    Eigen::Matrix<double, N, N> g = a.transpose() * a + 0.5 * Eigen::Matrix<double, N, N>::Identity();
    g = 0.5 * (g + g.transpose()).eval();  // exact symmetry
    return Metric<N>(g);
}

template <int N>
Eigen::Matrix<double, N, N> random_admissible_theta(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    Eigen::Matrix<double, N, N> t;
    do {
        t = Eigen::Matrix<double, N, N>::Identity();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) t(i, j) += u(rng);
    } while (t.determinant() <= 0.1);
    return t;
}

template <int N>
void check_algebra(Checker& ck, std::mt19937& rng, int cases) {
    std::uniform_int_distribution<int> deg(0, N);
    double worst_anti = 0, worst_hodge = 0, worst_pull = 0;
    for (int c = 0; c < cases; ++c) {
        const int k = deg(rng);
        const int l = std::uniform_int_distribution<int>(0, N - k)(rng);
        const auto a = random_form<N>(rng, k), b = random_form<N>(rng, l);
        const auto ab = wedge(a, b), ba = wedge(b, a);
        const double sign = ((k * l) % 2 == 0) ? 1.0 : -1.0;
        worst_anti = std::max(worst_anti, (ab - sign * ba).max_abs() /
                                              std::max(1.0, ab.max_abs()));
        const auto g = random_metric<N>(rng);
        const auto beta = random_form<N>(rng, k);
        const auto lhs = wedge(beta, hodge(a, g));
        const double rhs = inner(beta, a, g) * g.sqrt_det();
        worst_hodge = std::max(worst_hodge, std::abs(lhs.c[0] - rhs) / std::max(1.0, std::abs(rhs)));
        Eigen::Matrix<double, N, N> F, G;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                F(i, j) = u(rng);
                G(i, j) = u(rng);
            }
        const auto via_product = pullback(a, (F * G).eval());
        const auto composed = pullback(pullback(a, F), G);
        worst_pull = std::max(worst_pull,
                              (via_product - composed).max_abs() / std::max(1.0, a.max_abs()));
    }
    ck.record("wedge graded anticommutativity (n=" + std::to_string(N) + ")", worst_anti <= 1e-13,
              worst_anti);
    ck.record("Hodge defining relation (n=" + std::to_string(N) + ")", worst_hodge <= 1e-12,
              worst_hodge);
    ck.record("pullback functoriality (n=" + std::to_string(N) + ")", worst_pull <= 1e-12,
              worst_pull);
}

template <int N>
void check_gradients(Checker& ck, std::mt19937& rng, int cases) {
    for (MaterialTag tag : {MaterialTag::SaintVenantKirchhoff, MaterialTag::NeoHookean}) {
        EnergyModel model{tag, MaterialParams(1.2, 0.8, N)};
        double worst = 0;
        for (int c = 0; c < cases; ++c) {
            const auto theta = random_admissible_theta<N>(rng);
            const auto p = pk1<N>(model, theta);
            const double h = 1e-5 * std::max(1.0, theta.norm());
            Eigen::Matrix<double, N, N> fd;
            for (int a = 0; a < N; ++a)
                for (int A = 0; A < N; ++A) {
                    auto tp = theta, tm = theta;
                    tp(a, A) += h;
                    tm(a, A) -= h;
                    fd(a, A) = (energy<N>(model, tp) - energy<N>(model, tm)) / (2 * h);
                }
            worst = std::max(worst, (p - fd).norm() / std::max(1.0, p.norm()));
        }
        const std::string name = std::string("pk1 vs finite-difference energy (") +
                                 (tag == MaterialTag::NeoHookean ? "neohookean" : "svk") + ", n=" +
                                 std::to_string(N) + ")";
        ck.record(name, worst <= 1e-6, worst);
    }
}

inline void check_patch(Checker& ck) {
    const auto mesh = build_box_mesh<2>({4, 4}, {{{0.0, 1.0}, {0.0, 1.0}}});
    EnergyModel model{MaterialTag::SaintVenantKirchhoff, MaterialParams(1.0, 1.0, 2)};
    Eigen::Matrix2d A;
    A << 1.1, 0.0, 0.0, 0.95;
    BoundaryData<2> bcs;
    for (const auto& f : mesh.boundary_facets)
        for (int v : f.vertices) bcs.fix_vertex(v, A * mesh.vertices[v]);
    SolverConfig cfg;
    auto [state, report] = newton_solve<2>(mesh, bcs, model, cfg, initial_state(mesh, bcs, model));
    double worst = 0;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        worst = std::max(worst, (state.phi[v] - A * mesh.vertices[v]).norm());
    ck.record("2D patch test (svk, monolithic, 4x4)", report.converged && worst <= 1e-9, worst);
}

}  // namespace detail

inline int cmd_check() {
    detail::Checker ck;
    std::mt19937 rng(20240817);
    detail::check_algebra<2>(ck, rng, 200);
    detail::check_algebra<3>(ck, rng, 200);
    detail::check_gradients<2>(ck, rng, 20);
    detail::check_gradients<3>(ck, rng, 20);
    detail::check_patch(ck);
    if (!ck.all_ok) {
        std::printf("check: %zu failing properties:\n", ck.failures.size());
        for (const auto& f : ck.failures) std::printf("  - %s\n", f.c_str());
        return exit_check_failure;
    }
    std::printf("check: all properties passed\n");
    return exit_ok;
}

}  // namespace hwforms::cli
