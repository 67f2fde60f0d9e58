#pragma once

// Three-field Hu-Washizu solver. The functional, with Theta the deformation
// 1-forms and T the traction-form coefficients,
//
//   E(phi, Theta, T) = sum_e vol_e [ W(Theta_e) + T_e : (dphi_e - Theta_e) ]
//                      - body-force and traction work terms,
//
// is stationary exactly when the three Euler-Lagrange equations hold:
// compatibility (variation in T), the constitutive rule (variation in Theta)
// and equilibrium (variation in phi). Newton iterates on the monolithic
// symmetric indefinite KKT system; a condensed mode eliminates Theta and T
// elementwise. The multiplier term is the integral of
// pair_forms(traction_forms(T), dphi - Theta), which the pairing identity
// reduces to the matrix contraction used here.

#include "constitutive.hpp"
#include "errors.hpp"
#include "kinematics.hpp"
#include "mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hwforms {

template <int N>
struct HWState {
    DeformationField<N> phi;
    DeformationOneForms<N> theta;
    std::vector<Eigen::Matrix<double, N, N>> traction;  // coefficient matrices of T
};

template <int N>
struct BoundaryData {
    using Vec = Eigen::Matrix<double, N, 1>;
    // vertex -> prescribed position components (unset component = free)
    std::map<int, std::array<std::optional<double>, N>> dirichlet;
    // boundary marker -> constant traction covector
    std::map<int, Vec> neumann;
    Vec body_force = Vec::Zero();

    void fix_vertex(int v, const Vec& x) {
        auto& entry = dirichlet[v];
        for (int i = 0; i < N; ++i) entry[i] = x(i);
    }
};

enum class SolverMode { monolithic, condensed };

struct SolverConfig {
    double tol_rel = 1e-10;
    double tol_abs = 0.0;  // <= 0: use 1e-12 * mu * mesh volume
    int max_iter = 50;
    double ls_backtrack = 0.5;
    double ls_decrease = 1e-4;
    int ls_max = 30;
    SolverMode mode = SolverMode::monolithic;
};

struct IterationRecord {
    int iter;
    double r_phi, r_theta, r_tau;
    double step;
};

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    double final_residual = 0.0;
    std::string message;  // set when converged is false
    std::vector<IterationRecord> history;
};

namespace detail {

template <int N>
std::vector<ElementGeometry<N>> geometry_cache(const SimplicialMesh<N>& mesh) {
    std::vector<ElementGeometry<N>> g;
    g.reserve(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) g.push_back(element_geometry(mesh, e));
    return g;
}

}  // namespace detail

/// Value of the HW functional at a state.
template <int N>
double assemble_functional(const SimplicialMesh<N>& mesh, const HWState<N>& state,
                           const BoundaryData<N>& bcs, const EnergyModel& model) {
    double total = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto geom = element_geometry(mesh, e);
        const auto d = dphi_element(mesh, state.phi, geom, e);
        total += geom.volume * (energy<N>(model, state.theta[e], e) +
                                (state.traction[e].array() * (d - state.theta[e]).array()).sum());
        // body force against the barycentric average of phi (exact for P1)
        Eigen::Matrix<double, N, 1> phibar = Eigen::Matrix<double, N, 1>::Zero();
        for (int v = 0; v <= N; ++v) phibar += state.phi[mesh.elements[e][v]];
        total -= geom.volume * bcs.body_force.dot(phibar / (N + 1));
    }
    for (const auto& f : mesh.boundary_facets) {
        const auto it = bcs.neumann.find(f.marker);
        if (it == bcs.neumann.end()) continue;
        Eigen::Matrix<double, N, 1> phibar = Eigen::Matrix<double, N, 1>::Zero();
        for (int v : f.vertices) phibar += state.phi[v];
        total -= mesh.facet_measure(f) * it->second.dot(phibar / N);
    }
    return total;
}

/// dE/dT: compatibility residual blocks vol_e (dphi_e - Theta_e).
template <int N>
std::vector<Eigen::Matrix<double, N, N>> residual_tau(const SimplicialMesh<N>& mesh,
                                                      const HWState<N>& state) {
    std::vector<Eigen::Matrix<double, N, N>> r(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto geom = element_geometry(mesh, e);
        r[e] = geom.volume * (dphi_element(mesh, state.phi, geom, e) - state.theta[e]);
    }
    return r;
}

/// dE/dTheta: constitutive residual blocks vol_e (pk1(Theta_e) - T_e).
template <int N>
std::vector<Eigen::Matrix<double, N, N>> residual_theta(const SimplicialMesh<N>& mesh,
                                                        const HWState<N>& state,
                                                        const EnergyModel& model) {
    std::vector<Eigen::Matrix<double, N, N>> r(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto geom = element_geometry(mesh, e);
        r[e] = geom.volume * (pk1<N>(model, state.theta[e], e) - state.traction[e]);
    }
    return r;
}

/// dE/dphi: equilibrium residual per vertex, with Dirichlet-constrained
/// components zeroed.
template <int N>
std::vector<Eigen::Matrix<double, N, 1>> residual_phi(const SimplicialMesh<N>& mesh,
                                                      const HWState<N>& state,
                                                      const BoundaryData<N>& bcs) {
    using Vec = Eigen::Matrix<double, N, 1>;
    std::vector<Vec> r(mesh.num_vertices(), Vec::Zero());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto geom = element_geometry(mesh, e);
        for (int v = 0; v <= N; ++v) {
            const int gv = mesh.elements[e][v];
            r[gv] += geom.volume * (state.traction[e] * geom.grad_hats.row(v).transpose());
            r[gv] -= geom.volume * bcs.body_force / (N + 1);
        }
    }
    for (const auto& f : mesh.boundary_facets) {
        const auto it = bcs.neumann.find(f.marker);
        if (it == bcs.neumann.end()) continue;
        const double area = mesh.facet_measure(f);
        for (int v : f.vertices) r[v] -= area * it->second / N;
    }
    for (const auto& [v, comps] : bcs.dirichlet)
        for (int i = 0; i < N; ++i)
            if (comps[i]) r[v](i) = 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Newton solvers.

namespace detail {

// Map (vertex, component) -> reduced dof index, or -1 when Dirichlet-fixed.
template <int N>
std::vector<int> free_dof_map(const SimplicialMesh<N>& mesh, const BoundaryData<N>& bcs,
                              int& num_free) {
    std::vector<int> dof(mesh.num_vertices() * N, 0);
    for (const auto& [v, comps] : bcs.dirichlet)
        for (int i = 0; i < N; ++i)
            if (comps[i]) dof[v * N + i] = -1;
    num_free = 0;
    for (auto& d : dof)
        if (d == 0) d = num_free++;
    return dof;
}

template <int N>
void impose_dirichlet(const BoundaryData<N>& bcs, DeformationField<N>& phi) {
    for (const auto& [v, comps] : bcs.dirichlet)
        for (int i = 0; i < N; ++i)
            if (comps[i]) phi[v](i) = *comps[i];
}

struct ResidualNorms {
    double phi = 0.0, theta = 0.0, tau = 0.0;
    double total() const { return std::sqrt(phi * phi + theta * theta + tau * tau); }
};

template <int N>
ResidualNorms stacked_residual(const SimplicialMesh<N>& mesh, const HWState<N>& state,
                               const BoundaryData<N>& bcs, const EnergyModel& model,
                               const std::vector<int>& dof, Eigen::VectorXd* out) {
    const auto r_phi = residual_phi(mesh, state, bcs);
    const auto r_th = residual_theta(mesh, state, model);
    const auto r_ta = residual_tau(mesh, state);
    ResidualNorms norms;
    const int ne = mesh.num_elements();
    const int nblk = N * N;
    int num_free = 0;
    for (int d : dof) num_free += (d >= 0);
    if (out) out->setZero(num_free + 2 * ne * nblk);
    for (int v = 0; v < static_cast<int>(r_phi.size()); ++v)
        for (int i = 0; i < N; ++i) {
            const int d = dof[v * N + i];
            if (d < 0) continue;
            norms.phi += r_phi[v](i) * r_phi[v](i);
            if (out) (*out)(d) = r_phi[v](i);
        }
    for (int e = 0; e < ne; ++e)
        for (int a = 0; a < N; ++a)
            for (int A = 0; A < N; ++A) {
                norms.theta += r_th[e](a, A) * r_th[e](a, A);
                norms.tau += r_ta[e](a, A) * r_ta[e](a, A);
                if (out) {
                    (*out)(num_free + e * nblk + a * N + A) = r_th[e](a, A);
                    (*out)(num_free + (ne + e) * nblk + a * N + A) = r_ta[e](a, A);
                }
            }
    norms.phi = std::sqrt(norms.phi);
    norms.theta = std::sqrt(norms.theta);
    norms.tau = std::sqrt(norms.tau);
    return norms;
}

// Newton (KKT) matrix in (phi, Theta, T) blocks: [0 0 B; 0 A -I; B^T -I 0].
template <int N>
Eigen::SparseMatrix<double> assemble_kkt(const SimplicialMesh<N>& mesh, const HWState<N>& state,
                                         const EnergyModel& model,
                                         const std::vector<ElementGeometry<N>>& geom,
                                         const std::vector<int>& dof, int num_free) {
    const int ne = mesh.num_elements();
    const int nblk = N * N;
    const int theta_base = num_free;
    const int tau_base = num_free + ne * nblk;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ne * (nblk * nblk + 2 * nblk + 2 * (N + 1) * N * N));
    for (int e = 0; e < ne; ++e) {
        const double vol = geom[e].volume;
        const auto A = tangent<N>(model, state.theta[e], e);
        for (int i = 0; i < nblk; ++i) {
            for (int j = 0; j < nblk; ++j)
                if (A(i, j) != 0.0)
                    trip.emplace_back(theta_base + e * nblk + i, theta_base + e * nblk + j,
                                      vol * A(i, j));
            trip.emplace_back(theta_base + e * nblk + i, tau_base + e * nblk + i, -vol);
            trip.emplace_back(tau_base + e * nblk + i, theta_base + e * nblk + i, -vol);
        }
        for (int v = 0; v <= N; ++v)
            for (int a = 0; a < N; ++a) {
                const int d = dof[mesh.elements[e][v] * N + a];
                if (d < 0) continue;
                for (int A2 = 0; A2 < N; ++A2) {
                    const double val = vol * geom[e].grad_hats(v, A2);
                    trip.emplace_back(d, tau_base + e * nblk + a * N + A2, val);
                    trip.emplace_back(tau_base + e * nblk + a * N + A2, d, val);
                }
            }
    }
    const int total = num_free + 2 * ne * nblk;
    Eigen::SparseMatrix<double> K(total, total);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

inline double effective_tol(const SolverConfig& cfg, double mu, double volume, double r0) {
    const double abs_floor = cfg.tol_abs > 0.0 ? cfg.tol_abs : 1e-12 * mu * volume;
    return std::max(cfg.tol_rel * r0, abs_floor);
}

// Backtracking on the residual 2-norm; trial states with J <= 0 on any
// element are rejected by halving. Returns the accepted step, or 0 when no
// acceptable step exists (caller reports nonconvergence).
template <int N, class ApplyStep, class ResidualNorm>
double line_search(const SolverConfig& cfg, double r_current, const ApplyStep& apply,
                   const ResidualNorm& residual_norm) {
    double s = 1.0;
    for (int bt = 0; bt <= cfg.ls_max; ++bt) {
        try {
            apply(s);
            const double r_trial = residual_norm();
            if (r_trial <= (1.0 - cfg.ls_decrease * s) * r_current) return s;
            if (bt == cfg.ls_max && r_trial < r_current) return s;
        } catch (const inadmissible_state&) {
            // fall through and halve
        }
        s *= cfg.ls_backtrack;
    }
    apply(0.0);  // restore the base state
    return 0.0;
}

// Fallback directions for iterates where the material tangent is indefinite
// (e.g. SVK compressed past its ellipticity range inside a Dirichlet boundary
// layer): Levenberg-Marquardt steps d = (K^T K + tau D)^{-1} K^T rhs with
// D = diag(K^T K) are descent directions for the reduced residual norm for
// any tau > 0. try_step runs the backtracking search and returns the
// accepted step (0 on rejection).
template <class TryStep>
double lm_fallback(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& rhs,
                   const TryStep& try_step) {
    const Eigen::SparseMatrix<double> Kt = K.transpose();
    const Eigen::SparseMatrix<double> KtK = Kt * K;
    const Eigen::VectorXd g = Kt * rhs;
    const int n = static_cast<int>(KtK.rows());
    Eigen::VectorXd d = KtK.diagonal();
    for (int i = 0; i < n; ++i) d(i) = std::max(d(i), 1e-30);
    for (double tau = 1e-6; tau <= 1e10; tau *= 100.0) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(n);
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, tau * d(i));
        Eigen::SparseMatrix<double> D(n, n);
        D.setFromTriplets(trip.begin(), trip.end());
        const Eigen::SparseMatrix<double> M = KtK + D;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
        if (ldlt.info() != Eigen::Success) continue;
        const double step = try_step(ldlt.solve(g));
        if (step > 0.0) return step;
    }
    return 0.0;
}

}  // namespace detail

/// Default initial guess: phi = X with Dirichlet data imposed, Theta = dphi,
/// T = pk1(Theta).
template <int N>
HWState<N> initial_state(const SimplicialMesh<N>& mesh, const BoundaryData<N>& bcs,
                         const EnergyModel& model) {
    HWState<N> s;
    s.phi = mesh.vertices;
    detail::impose_dirichlet(bcs, s.phi);
    s.theta = dphi(mesh, s.phi);
    s.traction.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e)
        s.traction[e] = pk1<N>(model, s.theta[e], e);
    return s;
}

/// Damped Newton on the monolithic saddle-point (KKT) system in
/// (phi, Theta, T).
template <int N>
std::pair<HWState<N>, ConvergenceReport> newton_solve(const SimplicialMesh<N>& mesh,
                                                      const BoundaryData<N>& bcs,
                                                      const EnergyModel& model,
                                                      const SolverConfig& cfg,
                                                      HWState<N> state) {
    detail::impose_dirichlet(bcs, state.phi);
    const auto geom = detail::geometry_cache(mesh);
    int num_free = 0;
    const auto dof = detail::free_dof_map(mesh, bcs, num_free);
    const int ne = mesh.num_elements();
    const int nblk = N * N;
    const int theta_base = num_free;
    const int tau_base = num_free + ne * nblk;
    const int total_dofs = num_free + 2 * ne * nblk;

    ConvergenceReport report;
    Eigen::VectorXd r(total_dofs);
    auto norms = detail::stacked_residual(mesh, state, bcs, model, dof, &r);
    const double r0 = norms.total();
    const double tol = detail::effective_tol(cfg, model.params.mu, mesh.total_volume(), r0);
    report.history.push_back({0, norms.phi, norms.theta, norms.tau, 0.0});

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (norms.total() <= tol) {
            report.converged = true;
            break;
        }

        // Direct factorization of the KKT matrix [0 0 B; 0 A -V; B^T -V 0]
        // by block elimination: the Theta and T unknowns pivot on the
        // -vol*I coupling blocks V (always invertible), leaving the reduced
        // system K dphi = -R_phi - sum_e ghat^T (A_e R_tau,e + R_Theta,e)
        // with K = sum_e vol ghat^T A_e ghat. Recovering (dTheta, dT) from
        // the eliminated rows reproduces the full-system Newton step exactly.
        std::vector<Eigen::Matrix<double, N * N, N * N>> Ae(ne);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(ne) * (N + 1) * (N + 1) * N * N);
        Eigen::VectorXd rhs = -r.head(num_free);
        for (int e = 0; e < ne; ++e) {
            Ae[e] = tangent<N>(model, state.theta[e], e);
            const double vol = geom[e].volume;
            const Eigen::Matrix<double, N * N, 1> corr =
                Ae[e] * r.segment(tau_base + e * nblk, nblk) +
                r.segment(theta_base + e * nblk, nblk);
            for (int v = 0; v <= N; ++v)
                for (int a = 0; a < N; ++a) {
                    const int dv = dof[mesh.elements[e][v] * N + a];
                    if (dv < 0) continue;
                    for (int A2 = 0; A2 < N; ++A2)
                        rhs(dv) -= geom[e].grad_hats(v, A2) * corr(a * N + A2);
                    for (int w = 0; w <= N; ++w)
                        for (int b = 0; b < N; ++b) {
                            const int dw = dof[mesh.elements[e][w] * N + b];
                            if (dw < 0) continue;
                            double val = 0.0;
                            for (int A2 = 0; A2 < N; ++A2)
                                for (int B2 = 0; B2 < N; ++B2)
                                    val += geom[e].grad_hats(v, A2) *
                                           Ae[e](a * N + A2, b * N + B2) *
                                           geom[e].grad_hats(w, B2);
                            trip.emplace_back(dv, dw, vol * val);
                        }
                }
        }
        Eigen::SparseMatrix<double> K(num_free, num_free);
        K.setFromTriplets(trip.begin(), trip.end());

        Eigen::VectorXd delta(total_dofs);
        // Recover (dTheta, dT) from the eliminated rows for a given dphi.
        auto expand = [&](const Eigen::VectorXd& dphi) {
            delta.head(num_free) = dphi;
            for (int e = 0; e < ne; ++e) {
                const double vol = geom[e].volume;
                Eigen::Matrix<double, N * N, 1> dth;
                for (int a = 0; a < N; ++a)
                    for (int A2 = 0; A2 < N; ++A2) {
                        double g = 0.0;
                        for (int v = 0; v <= N; ++v) {
                            const int dv = dof[mesh.elements[e][v] * N + a];
                            if (dv >= 0) g += dphi(dv) * geom[e].grad_hats(v, A2);
                        }
                        dth(a * N + A2) = g + r(tau_base + e * nblk + a * N + A2) / vol;
                    }
                delta.segment(theta_base + e * nblk, nblk) = dth;
                delta.segment(tau_base + e * nblk, nblk) =
                    Ae[e] * dth + r.segment(theta_base + e * nblk, nblk) / vol;
            }
        };

        const HWState<N> base = state;
        auto apply = [&](double s) {
            state = base;
            for (int v = 0; v < mesh.num_vertices(); ++v)
                for (int i = 0; i < N; ++i) {
                    const int d = dof[v * N + i];
                    if (d >= 0) state.phi[v](i) += s * delta(d);
                }
            for (int e = 0; e < ne; ++e)
                for (int a = 0; a < N; ++a)
                    for (int A2 = 0; A2 < N; ++A2) {
                        state.theta[e](a, A2) += s * delta(theta_base + e * nblk + a * N + A2);
                        state.traction[e](a, A2) += s * delta(tau_base + e * nblk + a * N + A2);
                    }
            for (int e = 0; e < ne; ++e) jacobian<N>(state.theta[e], e);  // admissibility gate
            norms = detail::stacked_residual(mesh, state, bcs, model, dof, &r);
        };
        auto try_step = [&](const Eigen::VectorXd& dphi) {
            expand(dphi);
            return detail::line_search<N>(cfg, norms.total(), apply,
                                          [&]() { return norms.total(); });
        };

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(K);
        const bool newton_ok = lu.info() == Eigen::Success;
        double step = newton_ok ? try_step(lu.solve(rhs)) : 0.0;
        if (step == 0.0) step = detail::lm_fallback(K, rhs, try_step);
        if (step == 0.0 && !newton_ok)
            throw std::runtime_error("newton_solve: singular reduced displacement block");
        report.history.push_back({iter + 1, norms.phi, norms.theta, norms.tau, step});
        report.iterations = iter + 1;
        if (step == 0.0) break;
    }

    if (norms.total() <= tol) report.converged = true;
    report.final_residual = norms.total();
    if (!report.converged)
        report.message = "newton_solve: no convergence after " + std::to_string(report.iterations) +
                         " iterations (residual " + std::to_string(norms.total()) + ")";
    return {state, report};
}

/// Condensed mode: Theta_e := dphi_e and T_e := pk1(Theta_e) eliminated
/// exactly (both EL equations are elementwise at this discretization order),
/// leaving a displacement Newton method.
template <int N>
std::pair<HWState<N>, ConvergenceReport> condensed_solve(const SimplicialMesh<N>& mesh,
                                                         const BoundaryData<N>& bcs,
                                                         const EnergyModel& model,
                                                         const SolverConfig& cfg,
                                                         HWState<N> state) {
    detail::impose_dirichlet(bcs, state.phi);
    const auto geom = detail::geometry_cache(mesh);
    int num_free = 0;
    const auto dof = detail::free_dof_map(mesh, bcs, num_free);

    auto condense = [&](HWState<N>& s) {
        s.theta = dphi(mesh, s.phi);
        s.traction.resize(mesh.num_elements());
        for (int e = 0; e < mesh.num_elements(); ++e) {
            jacobian<N>(s.theta[e], e);
            s.traction[e] = pk1<N>(model, s.theta[e], e);
        }
    };
    condense(state);

    ConvergenceReport report;
    auto reduced_residual = [&](const HWState<N>& s, Eigen::VectorXd* out) {
        const auto r_phi = residual_phi(mesh, s, bcs);
        double sq = 0.0;
        if (out) out->setZero(num_free);
        for (int v = 0; v < mesh.num_vertices(); ++v)
            for (int i = 0; i < N; ++i) {
                const int d = dof[v * N + i];
                if (d < 0) continue;
                sq += r_phi[v](i) * r_phi[v](i);
                if (out) (*out)(d) = r_phi[v](i);
            }
        return std::sqrt(sq);
    };

    Eigen::VectorXd r(num_free);
    double rnorm = reduced_residual(state, &r);
    const double r0 = rnorm;
    const double tol = detail::effective_tol(cfg, model.params.mu, mesh.total_volume(), r0);
    report.history.push_back({0, rnorm, 0.0, 0.0, 0.0});

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (rnorm <= tol) {
            report.converged = true;
            break;
        }

        std::vector<Eigen::Triplet<double>> trip;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const double vol = geom[e].volume;
            const auto A = tangent<N>(model, state.theta[e], e);
            for (int v = 0; v <= N; ++v)
                for (int w = 0; w <= N; ++w)
                    for (int a = 0; a < N; ++a)
                        for (int b = 0; b < N; ++b) {
                            const int dv = dof[mesh.elements[e][v] * N + a];
                            const int dw = dof[mesh.elements[e][w] * N + b];
                            if (dv < 0 || dw < 0) continue;
                            double val = 0.0;
                            for (int A2 = 0; A2 < N; ++A2)
                                for (int B2 = 0; B2 < N; ++B2)
                                    val += geom[e].grad_hats(v, A2) * A(a * N + A2, b * N + B2) *
                                           geom[e].grad_hats(w, B2);
                            trip.emplace_back(dv, dw, vol * val);
                        }
        }
        Eigen::SparseMatrix<double> K(num_free, num_free);
        K.setFromTriplets(trip.begin(), trip.end());

        Eigen::VectorXd delta(num_free);
        const HWState<N> base = state;
        auto apply = [&](double s) {
            state = base;
            for (int v = 0; v < mesh.num_vertices(); ++v)
                for (int i = 0; i < N; ++i) {
                    const int d = dof[v * N + i];
                    if (d >= 0) state.phi[v](i) += s * delta(d);
                }
            condense(state);  // throws inadmissible_state on J <= 0
            rnorm = reduced_residual(state, &r);
        };
        auto try_step = [&](const Eigen::VectorXd& dphi) {
            delta = dphi;
            return detail::line_search<N>(cfg, rnorm, apply, [&]() { return rnorm; });
        };

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(K);
        const bool newton_ok = lu.info() == Eigen::Success;
        double step = newton_ok ? try_step(lu.solve(Eigen::VectorXd(-r))) : 0.0;
        if (step == 0.0) step = detail::lm_fallback(K, -r, try_step);
        if (step == 0.0 && !newton_ok)
            throw std::runtime_error("condensed_solve: singular tangent matrix");
        report.history.push_back({iter + 1, rnorm, 0.0, 0.0, step});
        report.iterations = iter + 1;
        if (step == 0.0) break;
    }

    if (rnorm <= tol) report.converged = true;
    report.final_residual = rnorm;
    if (!report.converged)
        report.message = "condensed_solve: no convergence after " +
                         std::to_string(report.iterations) + " iterations (residual " +
                         std::to_string(rnorm) + ")";
    return {state, report};
}

}  // namespace hwforms
