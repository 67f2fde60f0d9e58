#pragma once

// Built-in 2D coframe fields for structure-equation experiments, with their
// analytic connections where one is known in closed form. The rotated
// coframes use rows [cos a, -sin a; sin a, cos a], for which the torsion-free
// antisymmetric connection is omega^1_2 = da.

#include "frames.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hwforms {

struct CoframeExample2D {
    std::string name;
    std::function<ChartGrid<2>(int div)> make_grid;
    std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> coframe;  // rows = theta^i
    // analytic omega^1_2 at x, when available
    std::function<KForm<2>(const Eigen::Vector2d&)> omega12;
    // analytic Gauss curvature at x (Omega^1_2 = K theta^1 ^ theta^2), when available
    std::function<double(const Eigen::Vector2d&)> gauss_curvature;
};

inline Eigen::Matrix2d rotation_coframe(double a) {
    Eigen::Matrix2d t;
    t << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return t;
}

inline const std::vector<CoframeExample2D>& coframe_catalog() {
    static const std::vector<CoframeExample2D> catalog = {
        {
            "cartesian",
            [](int div) { return ChartGrid<2>::unit_box(div); },
            [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Identity().eval(); },
            [](const Eigen::Vector2d&) { return KForm<2>(1); },
            [](const Eigen::Vector2d&) { return 0.0; },
        },
        {
            // orthonormal coframe rotated by a(x,y) = x*y; omega^1_2 = y dx + x dy
            "rot-xy",
            [](int div) { return ChartGrid<2>::unit_box(div); },
            [](const Eigen::Vector2d& x) { return rotation_coframe(x(0) * x(1)); },
            [](const Eigen::Vector2d& x) {
                KForm<2> w(1);
                w.c[0] = x(1);
                w.c[1] = x(0);
                return w;
            },
            [](const Eigen::Vector2d&) { return 0.0; },
        },
        {
            // rotation angle atan2 about a center outside the chart
            "rot-atan2",
            [](int div) { return ChartGrid<2>::unit_box(div); },
            [](const Eigen::Vector2d& x) {
                return rotation_coframe(std::atan2(x(1) + 0.5, x(0) + 0.5));
            },
            [](const Eigen::Vector2d& x) {
                const double dx = x(0) + 0.5, dy = x(1) + 0.5;
                const double r2 = dx * dx + dy * dy;
                KForm<2> w(1);
                w.c[0] = -dy / r2;
                w.c[1] = dx / r2;
                return w;
            },
            [](const Eigen::Vector2d&) { return 0.0; },
        },
        {
            // chart coordinates (r, phi); theta^1 = dr, theta^2 = sin r dphi.
            // omega^1_2 = -cos r dphi; unit Gauss curvature.
            "sphere",
            [](int div) {
                return ChartGrid<2>({{{0.3, 1.2}, {0.0, 1.0}}}, {div, div});
            },
            [](const Eigen::Vector2d& x) {
                Eigen::Matrix2d t;
                t << 1.0, 0.0, 0.0, std::sin(x(0));
                return t;
            },
            [](const Eigen::Vector2d& x) {
                KForm<2> w(1);
                w.c[1] = -std::cos(x(0));
                return w;
            },
            [](const Eigen::Vector2d&) { return 1.0; },
        },
    };
    return catalog;
}

inline const CoframeExample2D* find_coframe_example(const std::string& name) {
    for (const auto& e : coframe_catalog())
        if (e.name == name) return &e;
    return nullptr;
}

}  // namespace hwforms
