#pragma once

// Stored-energy models (Saint Venant-Kirchhoff, compressible neo-Hookean),
// their first and second derivatives with respect to the deformation 1-forms,
// and the traction (n-1)-forms built from the stress coefficient matrix.
//
// With the deformed frame fixed orthonormal, the derivative P = dW/dTheta is
// the coefficient matrix of the covector part of the stress form (the first
// Piola-Kirchhoff stress), which is how the Doyle-Ericksen-type constitutive
// rule is realized here.

#include "errors.hpp"
#include "exterior.hpp"
#include "kinematics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace hwforms {

struct MaterialParams {
    double lambda;
    double mu;

    MaterialParams(double lambda_, double mu_, int dim) : lambda(lambda_), mu(mu_) {
        if (mu <= 0.0) throw std::invalid_argument("MaterialParams: mu must be positive");
        if (lambda + 2.0 * mu / dim <= 0.0)
            throw std::invalid_argument("MaterialParams: lambda + 2 mu / n must be positive");
    }
};

enum class MaterialTag { SaintVenantKirchhoff, NeoHookean };

inline MaterialTag material_from_string(const std::string& s) {
    if (s == "svk") return MaterialTag::SaintVenantKirchhoff;
    if (s == "neohookean") return MaterialTag::NeoHookean;
    throw std::invalid_argument("unknown material '" + s + "' (expected svk|neohookean)");
}

struct EnergyModel {
    MaterialTag tag;
    MaterialParams params;
};

/// Stored energy density W(Theta).
template <int N>
double energy(const EnergyModel& model, const Eigen::Matrix<double, N, N>& theta,
              int element = -1) {
    const double j = jacobian<N>(theta, element);
    const Eigen::Matrix<double, N, N> c = C_from_theta<N>(theta);
    const double la = model.params.lambda, mu = model.params.mu;
    if (model.tag == MaterialTag::SaintVenantKirchhoff) {
        const Eigen::Matrix<double, N, N> e =
            0.5 * (c - Eigen::Matrix<double, N, N>::Identity());
        const double tre = e.trace();
        return 0.5 * la * tre * tre + mu * (e * e).trace();
    }
    const double lnj = std::log(j);
    return 0.5 * mu * (c.trace() - N) - mu * lnj + 0.5 * la * lnj * lnj;
}

/// P = dW/dTheta (first Piola-Kirchhoff coefficients of the traction forms).
template <int N>
Eigen::Matrix<double, N, N> pk1(const EnergyModel& model,
                                const Eigen::Matrix<double, N, N>& theta, int element = -1) {
    const double j = jacobian<N>(theta, element);
    const double la = model.params.lambda, mu = model.params.mu;
    if (model.tag == MaterialTag::SaintVenantKirchhoff) {
        const Eigen::Matrix<double, N, N> e =
            0.5 * (theta.transpose() * theta - Eigen::Matrix<double, N, N>::Identity());
        return theta * (la * e.trace() * Eigen::Matrix<double, N, N>::Identity() + 2.0 * mu * e);
    }
    const Eigen::Matrix<double, N, N> theta_invT = theta.inverse().transpose();
    return mu * (theta - theta_invT) + la * std::log(j) * theta_invT;
}

/// A = d^2 W / dTheta dTheta as an n^2 x n^2 matrix; entry ((a,A),(b,B)) at
/// row a*N+A, column b*N+B.
template <int N>
Eigen::Matrix<double, N * N, N * N> tangent(const EnergyModel& model,
                                            const Eigen::Matrix<double, N, N>& theta,
                                            int element = -1) {
    const double j = jacobian<N>(theta, element);
    const double la = model.params.lambda, mu = model.params.mu;
    Eigen::Matrix<double, N * N, N * N> A;
    if (model.tag == MaterialTag::SaintVenantKirchhoff) {
        const Eigen::Matrix<double, N, N> e =
            0.5 * (theta.transpose() * theta - Eigen::Matrix<double, N, N>::Identity());
        const Eigen::Matrix<double, N, N> s =
            la * e.trace() * Eigen::Matrix<double, N, N>::Identity() + 2.0 * mu * e;
        const Eigen::Matrix<double, N, N> b = theta * theta.transpose();
        for (int a = 0; a < N; ++a)
            for (int iA = 0; iA < N; ++iA)
                for (int bb = 0; bb < N; ++bb)
                    for (int iB = 0; iB < N; ++iB)
                        A(a * N + iA, bb * N + iB) =
                            (a == bb ? s(iB, iA) : 0.0) + la * theta(a, iA) * theta(bb, iB) +
                            mu * theta(a, iB) * theta(bb, iA) + (iA == iB ? mu * b(a, bb) : 0.0);
        return A;
    }
    const Eigen::Matrix<double, N, N> g = theta.inverse();
    const double lnj = std::log(j);
    for (int a = 0; a < N; ++a)
        for (int iA = 0; iA < N; ++iA)
            for (int bb = 0; bb < N; ++bb)
                for (int iB = 0; iB < N; ++iB)
                    A(a * N + iA, bb * N + iB) =
                        (a == bb && iA == iB ? mu : 0.0) +
                        (mu - la * lnj) * g(iA, bb) * g(iB, a) + la * g(iA, a) * g(iB, bb);
    return A;
}

/// Cauchy stress sigma = J^-1 P Theta^T (diagnostic output).
template <int N>
Eigen::Matrix<double, N, N> cauchy_from_pk1(const Eigen::Matrix<double, N, N>& p,
                                            const Eigen::Matrix<double, N, N>& theta,
                                            int element = -1) {
    const double j = jacobian<N>(theta, element);
    return p * theta.transpose() / j;
}

// ---------------------------------------------------------------------------
// Traction (n-1)-forms.
//
// The covector leg a of the stress form is tau_a = sum_A P_aA mu_A, where
// mu_A is the (n-1)-form dual to dX^A in the sense mu_A ^ dX^B = delta_AB vol.
// Up to the sign (-1)^(n-1) this is the Euclidean Hodge star of dX^A (they
// coincide for n=3); this choice makes pair_forms(tau, u) = (P:U) vol hold
// sign-exactly in both dimensions.

template <int N>
KForm<N> traction_basis(int axis) {
    KForm<N> m = hodge(KForm<N>::d(axis), Metric<N>::identity());
    if constexpr (N == 2) m *= -1.0;
    return m;
}

/// Traction forms of a stress coefficient matrix P (rows = covector legs).
template <int N>
CoVectorValuedForm<N> traction_forms(const Eigen::Matrix<double, N, N>& p) {
    CoVectorValuedForm<N> tau(N - 1);
    for (int a = 0; a < N; ++a)
        for (int iA = 0; iA < N; ++iA) tau.parts[a] += p(a, iA) * traction_basis<N>(iA);
    return tau;
}

/// Exact inverse of traction_forms.
template <int N>
Eigen::Matrix<double, N, N> form_to_matrix(const CoVectorValuedForm<N>& tau) {
    if (tau.degree() != N - 1)
        throw std::invalid_argument("form_to_matrix: expected degree n-1 parts");
    Eigen::Matrix<double, N, N> p;
    for (int a = 0; a < N; ++a)
        for (int iA = 0; iA < N; ++iA) {
            // coefficient of tau_a on the basis mu_A, read off via the pairing
            const KForm<N> top = wedge(tau.parts[a], KForm<N>::d(iA));
            p(a, iA) = top.c[0];
        }
    return p;
}

}  // namespace hwforms
