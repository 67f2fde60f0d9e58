#include "hwforms/hw_solver.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace hwforms;

namespace {

SimplicialMesh<2> box2(int nx, int ny) {
    return build_box_mesh<2>({nx, ny}, {{{0.0, 1.0}, {0.0, 1.0}}});
}

const EnergyModel svk2{MaterialTag::SaintVenantKirchhoff, MaterialParams(1.0, 1.0, 2)};
const EnergyModel nh2{MaterialTag::NeoHookean, MaterialParams(1.0, 1.0, 2)};

// A random admissible state near the identity, with Theta decoupled from phi
// and T decoupled from pk1 (a genuinely three-field state).
HWState<2> random_state(const SimplicialMesh<2>& mesh, std::mt19937& rng) {
    std::uniform_real_distribution<double> U(-0.05, 0.05);
    HWState<2> s;
    s.phi.resize(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v)
        s.phi[v] = mesh.vertices[v] + Eigen::Vector2d(U(rng), U(rng));
    s.theta.resize(mesh.num_elements());
    s.traction.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        s.theta[e] = Eigen::Matrix2d::Identity();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                s.theta[e](i, j) += U(rng);
                s.traction[e](i, j) = 4.0 * U(rng);
            }
    }
    return s;
}

BoundaryData<2> fix_all_boundary(const SimplicialMesh<2>& mesh, const Eigen::Matrix2d& A,
                                 const Eigen::Vector2d& b = Eigen::Vector2d::Zero()) {
    BoundaryData<2> bcs;
    for (const auto& f : mesh.boundary_facets)
        for (int v : f.vertices) bcs.fix_vertex(v, A * mesh.vertices[v] + b);
    return bcs;
}

}  // namespace

TEST_CASE("functional: trivial values and multiplier degeneracy") {
    const auto mesh = box2(3, 3);
    std::mt19937 rng(61);
    BoundaryData<2> no_bcs;

    // undeformed state, no loads
    HWState<2> s0 = initial_state(mesh, no_bcs, svk2);
    CHECK(assemble_functional(mesh, s0, no_bcs, svk2) == 0.0);

    // at a compatible state the multiplier term vanishes identically:
    // E does not depend on T at all
    auto s = random_state(mesh, rng);
    s.theta = dphi(mesh, s.phi);
    const double e1 = assemble_functional(mesh, s, no_bcs, nh2);
    for (auto& t : s.traction) t += Eigen::Matrix2d::Random();
    CHECK(assemble_functional(mesh, s, no_bcs, nh2) == e1);

    // dE/dT is exactly zero there, not merely small
    for (const auto& r : residual_tau(mesh, s)) CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("residuals are the exact derivatives of the functional") {
    const auto mesh = box2(4, 4);
    std::mt19937 rng(62);
    std::uniform_real_distribution<double> U(-1.0, 1.0);

    BoundaryData<2> bcs;
    bcs.body_force = Eigen::Vector2d(0.03, -0.05);
    bcs.neumann[2] = Eigen::Vector2d(0.02, 0.01);
    // pin the left edge so some dofs are constrained
    for (const auto& f : mesh.boundary_facets)
        if (f.marker == 1)
            for (int v : f.vertices) bcs.fix_vertex(v, mesh.vertices[v]);

    const double h = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
        auto s = random_state(mesh, rng);
        detail::impose_dirichlet(bcs, s.phi);
        for (const auto& model : {svk2, nh2}) {
            const auto r_phi = residual_phi(mesh, s, bcs);
            const auto r_th = residual_theta(mesh, s, model);
            const auto r_ta = residual_tau(mesh, s);

            // a joint random direction in all three fields, Dirichlet dofs frozen
            HWState<2> dir = s;
            for (auto& v : dir.phi) v = Eigen::Vector2d(U(rng), U(rng));
            for (const auto& [v, comps] : bcs.dirichlet)
                for (int i = 0; i < 2; ++i)
                    if (comps[i]) dir.phi[v](i) = 0.0;
            for (auto& t : dir.theta) t = 0.1 * Eigen::Matrix2d::Random();
            for (auto& t : dir.traction) t = Eigen::Matrix2d::Random();

            auto shifted = [&](double step) {
                HWState<2> q = s;
                for (int v = 0; v < mesh.num_vertices(); ++v) q.phi[v] += step * dir.phi[v];
                for (int e = 0; e < mesh.num_elements(); ++e) {
                    q.theta[e] += step * dir.theta[e];
                    q.traction[e] += step * dir.traction[e];
                }
                return assemble_functional(mesh, q, bcs, model);
            };
            const double fd = (shifted(h) - shifted(-h)) / (2 * h);
            double pairing = 0.0;
            for (int v = 0; v < mesh.num_vertices(); ++v) pairing += r_phi[v].dot(dir.phi[v]);
            for (int e = 0; e < mesh.num_elements(); ++e) {
                pairing += (r_th[e].array() * dir.theta[e].array()).sum();
                pairing += (r_ta[e].array() * dir.traction[e].array()).sum();
            }
            CHECK(std::abs(fd - pairing) / std::max(1.0, std::abs(pairing)) < 1e-7);
        }
    }
}

TEST_CASE("residual examples") {
    const auto mesh = box2(4, 4);
    BoundaryData<2> no_bcs;

    // zero T, zero loads -> equilibrium residual 0
    HWState<2> s = initial_state(mesh, no_bcs, svk2);
    for (auto& t : s.traction) t.setZero();
    for (const auto& r : residual_phi(mesh, s, no_bcs)) CHECK(r.cwiseAbs().maxCoeff() == 0.0);

    // SVK with Theta = I: R_theta = -vol T
    for (auto& t : s.traction) t = Eigen::Matrix2d::Constant(0.7);
    const auto r_th = residual_theta(mesh, s, svk2);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double vol = element_geometry(mesh, e).volume;
        CHECK((r_th[e] + vol * s.traction[e]).cwiseAbs().maxCoeff() < 1e-15);
    }

    // constant T: interior divergence of a constant field vanishes
    const auto r_phi = residual_phi(mesh, s, no_bcs);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        bool interior = true;
        for (const auto& f : mesh.boundary_facets)
            for (int w : f.vertices) interior &= (w != v);
        if (interior) CHECK(r_phi[v].cwiseAbs().maxCoeff() < 1e-14);
    }

    // single-element T perturbation only touches that tau/theta block
    std::mt19937 rng(63);
    auto q = random_state(mesh, rng);
    auto base_tau = residual_tau(mesh, q);
    auto base_th = residual_theta(mesh, q, svk2);
    q.traction[5](1, 0) += 0.25;
    const auto new_tau = residual_tau(mesh, q);
    const auto new_th = residual_theta(mesh, q, svk2);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        CHECK((new_tau[e] - base_tau[e]).cwiseAbs().maxCoeff() == 0.0);
        if (e != 5) CHECK((new_th[e] - base_th[e]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("KKT matrix is symmetric") {
    const auto mesh = box2(3, 3);
    std::mt19937 rng(64);
    auto bcs = fix_all_boundary(mesh, Eigen::Matrix2d::Identity());
    const auto s = random_state(mesh, rng);
    int num_free = 0;
    const auto dof = detail::free_dof_map(mesh, bcs, num_free);
    const auto geom = detail::geometry_cache(mesh);
    for (const auto& model : {svk2, nh2}) {
        const auto K = detail::assemble_kkt<2>(mesh, s, model, geom, dof, num_free);
        const Eigen::SparseMatrix<double> D = Eigen::SparseMatrix<double>(K.transpose()) - K;
        double asym = 0.0, scale = 0.0;
        for (int k = 0; k < D.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(D, k); it; ++it)
                asym = std::max(asym, std::abs(it.value()));
        for (int k = 0; k < K.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
                scale = std::max(scale, std::abs(it.value()));
        CHECK(asym <= 1e-12 * scale);
    }
}

TEST_CASE("identity Dirichlet solves in at most one iteration") {
    const auto mesh = box2(4, 4);
    auto bcs = fix_all_boundary(mesh, Eigen::Matrix2d::Identity());
    for (const auto& model : {svk2, nh2}) {
        auto [state, report] =
            newton_solve<2>(mesh, bcs, model, SolverConfig{}, initial_state(mesh, bcs, model));
        CHECK(report.converged);
        CHECK(report.iterations <= 1);
        for (int v = 0; v < mesh.num_vertices(); ++v)
            CHECK((state.phi[v] - mesh.vertices[v]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("patch test on a small 2D mesh, both modes and materials") {
    const auto mesh = box2(4, 4);
    Eigen::Matrix2d A = Eigen::Vector2d(1.1, 0.95).asDiagonal();
    auto bcs = fix_all_boundary(mesh, A);

    for (const auto& model : {svk2, nh2}) {
        for (auto mode : {SolverMode::monolithic, SolverMode::condensed}) {
            const auto s0 = initial_state(mesh, bcs, model);
            auto [state, report] = mode == SolverMode::monolithic
                                       ? newton_solve<2>(mesh, bcs, model, SolverConfig{}, s0)
                                       : condensed_solve<2>(mesh, bcs, model, SolverConfig{}, s0);
            REQUIRE(report.converged);
            const Eigen::Matrix2d P = pk1<2>(model, A);
            for (int v = 0; v < mesh.num_vertices(); ++v)
                CHECK((state.phi[v] - A * mesh.vertices[v]).cwiseAbs().maxCoeff() < 1e-10);
            for (int e = 0; e < mesh.num_elements(); ++e) {
                CHECK((state.theta[e] - A).cwiseAbs().maxCoeff() < 1e-10);
                CHECK((state.traction[e] - P).cwiseAbs().maxCoeff() < 1e-10);
            }
            // converged states close both elementwise EL equations
            CHECK(compatibility_residual(mesh, state.phi, state.theta).norm < 1e-9);
        }
    }
}

TEST_CASE("monolithic and condensed modes agree under load") {
    const auto mesh = box2(4, 4);
    auto bcs = fix_all_boundary(mesh, Eigen::Matrix2d::Identity());
    bcs.body_force = Eigen::Vector2d(0.0, -0.1);

    SolverConfig cfg;
    auto [sm, rm] = newton_solve<2>(mesh, bcs, nh2, cfg, initial_state(mesh, bcs, nh2));
    auto [sc, rc] = condensed_solve<2>(mesh, bcs, nh2, cfg, initial_state(mesh, bcs, nh2));
    REQUIRE(rm.converged);
    REQUIRE(rc.converged);
    CHECK(std::abs(rm.iterations - rc.iterations) <= 1);
    const double tol = 10.0 * cfg.tol_rel;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        CHECK((sm.phi[v] - sc.phi[v]).cwiseAbs().maxCoeff() < tol);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        CHECK((sm.theta[e] - sc.theta[e]).cwiseAbs().maxCoeff() < tol);
        CHECK((sm.traction[e] - sc.traction[e]).cwiseAbs().maxCoeff() < tol);
    }
}

TEST_CASE("objectivity of the solve") {
    const auto mesh = box2(4, 4);
    Eigen::Matrix2d A = Eigen::Vector2d(1.1, 0.95).asDiagonal();
    const double ang = M_PI / 6.0;
    Eigen::Matrix2d R;
    R << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);

    // the default initial guess (phi = X away from the boundary) is
    // inadmissible once the boundary data carries a large rotation, so the
    // initial interior is rotated along with the data
    auto solve_with = [&](const Eigen::Matrix2d& map, const Eigen::Matrix2d& pre) {
        auto bcs = fix_all_boundary(mesh, map);
        HWState<2> init;
        init.phi.resize(mesh.num_vertices());
        for (int v = 0; v < mesh.num_vertices(); ++v) init.phi[v] = pre * mesh.vertices[v];
        detail::impose_dirichlet(bcs, init.phi);
        init.theta = dphi(mesh, init.phi);
        init.traction.resize(mesh.num_elements());
        for (int e = 0; e < mesh.num_elements(); ++e)
            init.traction[e] = pk1<2>(nh2, init.theta[e], e);
        auto [s, rep] = newton_solve<2>(mesh, bcs, nh2, SolverConfig{}, std::move(init));
        REQUIRE(rep.converged);
        return s;
    };
    const auto base = solve_with(A, Eigen::Matrix2d::Identity());
    const auto rotated = solve_with(Eigen::Matrix2d(R * A), R);

    for (int e = 0; e < mesh.num_elements(); ++e) {
        CHECK((rotated.theta[e] - R * base.theta[e]).cwiseAbs().maxCoeff() < 1e-9);
        const Eigen::Matrix2d Cb = C_from_theta<2>(base.theta[e]);
        const Eigen::Matrix2d Cr = C_from_theta<2>(rotated.theta[e]);
        CHECK((Cb - Cr).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(energy<2>(nh2, rotated.theta[e]) ==
              Catch::Approx(energy<2>(nh2, base.theta[e])).margin(1e-9));
        const auto sb = cauchy_from_pk1<2>(pk1<2>(nh2, base.theta[e]), base.theta[e]);
        const auto sr = cauchy_from_pk1<2>(pk1<2>(nh2, rotated.theta[e]), rotated.theta[e]);
        CHECK(sb.trace() == Catch::Approx(sr.trace()).margin(1e-9));
        CHECK(sb.determinant() == Catch::Approx(sr.determinant()).margin(1e-9));
    }
    for (int v = 0; v < mesh.num_vertices(); ++v)
        CHECK((rotated.phi[v] - R * base.phi[v]).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("quadratic convergence near the solution") {
    const auto mesh = box2(4, 4);
    auto bcs = fix_all_boundary(mesh, Eigen::Matrix2d(Eigen::Vector2d(1.05, 0.98).asDiagonal()));
    bcs.body_force = Eigen::Vector2d(0.0, -0.05);
    SolverConfig cfg;
    cfg.tol_rel = 1e-13;
    auto [s, rep] = condensed_solve<2>(mesh, bcs, nh2, cfg, initial_state(mesh, bcs, nh2));
    REQUIRE(rep.converged);
    REQUIRE(rep.history.size() >= 3);
    // r_{k+1} / r_k^2 bounded on the last full-step iterations
    const auto& h = rep.history;
    for (size_t k = h.size() - 2; k + 1 < h.size(); ++k) {
        if (h[k].r_phi <= 0.0 || h[k + 1].r_phi <= 0.0) continue;
        CHECK(h[k + 1].r_phi / (h[k].r_phi * h[k].r_phi) < 1e4);
    }
}

TEST_CASE("nonconvergence is reported, not thrown") {
    const auto mesh = box2(4, 4);
    auto bcs = fix_all_boundary(mesh, Eigen::Matrix2d(Eigen::Vector2d(1.2, 0.85).asDiagonal()));
    SolverConfig cfg;
    cfg.max_iter = 1;
    auto [s, rep] = newton_solve<2>(mesh, bcs, svk2, cfg, initial_state(mesh, bcs, svk2));
    CHECK_FALSE(rep.converged);
    CHECK(rep.message.find("no convergence") != std::string::npos);
    CHECK(rep.history.size() >= 1);
    // the last state is still usable
    CHECK(static_cast<int>(s.phi.size()) == mesh.num_vertices());
}

TEST_CASE("initial_state starts on the constitutive manifold") {
    const auto mesh = box2(3, 3);
    Eigen::Matrix2d A = Eigen::Vector2d(1.2, 0.9).asDiagonal();
    auto bcs = fix_all_boundary(mesh, A);
    const auto s = initial_state(mesh, bcs, nh2);
    // Dirichlet data imposed exactly
    for (const auto& [v, comps] : bcs.dirichlet)
        for (int i = 0; i < 2; ++i)
            CHECK(s.phi[v](i) == (A * mesh.vertices[v])(i));
    // Theta = dphi, T = pk1(Theta)
    const auto d = dphi(mesh, s.phi);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        CHECK((s.theta[e] - d[e]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((s.traction[e] - pk1<2>(nh2, s.theta[e])).cwiseAbs().maxCoeff() == 0.0);
    }
}
