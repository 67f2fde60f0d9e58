#pragma once

// Deformation kinematics through deformation 1-forms. The deformed frame
// {f_a} is fixed to the ambient Cartesian orthonormal basis, so the matrix
// Theta of the 1-forms theta^a coincides with the deformation gradient and
// C = Theta^T Theta.

#include "errors.hpp"
#include "mesh.hpp"

#include <Eigen/Dense>

#include <vector>

namespace hwforms {

/// Current vertex positions (the deformation phi).
template <int N>
using DeformationField = std::vector<Eigen::Matrix<double, N, 1>>;

/// Per-element matrices of deformation 1-forms (row a = deformed-frame leg,
/// column A = reference coordinate).
template <int N>
using DeformationOneForms = std::vector<Eigen::Matrix<double, N, N>>;

/// Exact differential of the P1 deformation, constant per element.
template <int N>
Eigen::Matrix<double, N, N> dphi_element(const SimplicialMesh<N>& mesh,
                                         const DeformationField<N>& phi,
                                         const ElementGeometry<N>& geom, int e) {
    Eigen::Matrix<double, N, N> d = Eigen::Matrix<double, N, N>::Zero();
    for (int v = 0; v <= N; ++v)
        d += phi[mesh.elements[e][v]] * geom.grad_hats.row(v);
    return d;
}

template <int N>
DeformationOneForms<N> dphi(const SimplicialMesh<N>& mesh, const DeformationField<N>& phi) {
    if (static_cast<int>(phi.size()) != mesh.num_vertices())
        throw std::invalid_argument("dphi: phi size does not match vertex count");
    DeformationOneForms<N> out(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e)
        out[e] = dphi_element(mesh, phi, element_geometry(mesh, e), e);
    return out;
}

/// Right Cauchy-Green tensor C = delta_ab theta^a (x) theta^b = Theta^T Theta.
template <int N>
Eigen::Matrix<double, N, N> C_from_theta(const Eigen::Matrix<double, N, N>& theta) {
    return theta.transpose() * theta;
}

/// J = det Theta; throws the inadmissible-state signal when J <= 0.
template <int N>
double jacobian(const Eigen::Matrix<double, N, N>& theta, int element = -1) {
    const double j = theta.determinant();
    if (j <= 0.0) throw inadmissible_state(element);
    return j;
}

template <int N>
struct CompatibilityResidual {
    std::vector<Eigen::Matrix<double, N, N>> per_element;  // dphi_e - Theta_e
    double norm = 0.0;  // (sum_e vol_e |R_e|_F^2)^(1/2)
};

/// Kinematic-closure residual dphi - Theta.
template <int N>
CompatibilityResidual<N> compatibility_residual(const SimplicialMesh<N>& mesh,
                                                const DeformationField<N>& phi,
                                                const DeformationOneForms<N>& theta) {
    if (static_cast<int>(theta.size()) != mesh.num_elements())
        throw std::invalid_argument("compatibility_residual: Theta size mismatch");
    CompatibilityResidual<N> res;
    res.per_element.resize(mesh.num_elements());
    double sq = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto geom = element_geometry(mesh, e);
        res.per_element[e] = dphi_element(mesh, phi, geom, e) - theta[e];
        sq += geom.volume * res.per_element[e].squaredNorm();
    }
    res.norm = std::sqrt(sq);
    return res;
}

}  // namespace hwforms
