#pragma once

// Simplicial meshes (triangles / tetrahedra), P1 hat-function geometry,
// boundary extraction, and OFF / legacy-VTK / CSV file I/O.

#include "errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace hwforms {

template <int N>
struct SimplicialMesh {
    static_assert(N == 2 || N == 3);
    using Vec = Eigen::Matrix<double, N, 1>;

    struct Facet {
        std::array<int, N> vertices;
        int marker = 0;
    };

    std::vector<Vec> vertices;
    std::vector<std::array<int, N + 1>> elements;
    std::vector<Facet> boundary_facets;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_elements() const { return static_cast<int>(elements.size()); }

    double signed_volume(int e) const {
        Eigen::Matrix<double, N, N> edges;
        for (int i = 0; i < N; ++i)
            edges.col(i) = vertices[elements[e][i + 1]] - vertices[elements[e][0]];
        double fact = 1.0;
        for (int i = 2; i <= N; ++i) fact *= i;
        return edges.determinant() / fact;
    }

    /// Swap two vertices of every negatively oriented element.
    void normalize_orientation() {
        for (auto& elem : elements) {
            Eigen::Matrix<double, N, N> edges;
            for (int i = 0; i < N; ++i) edges.col(i) = vertices[elem[i + 1]] - vertices[elem[0]];
            if (edges.determinant() < 0.0) std::swap(elem[N - 1], elem[N]);
        }
    }

    /// Length (2D) or area (3D) of a boundary facet.
    double facet_measure(const Facet& f) const {
        if constexpr (N == 2) {
            return (vertices[f.vertices[1]] - vertices[f.vertices[0]]).norm();
        } else {
            const Vec a = vertices[f.vertices[1]] - vertices[f.vertices[0]];
            const Vec b = vertices[f.vertices[2]] - vertices[f.vertices[0]];
            return 0.5 * a.cross(b).norm();
        }
    }

    double total_volume() const {
        double v = 0.0;
        for (int e = 0; e < num_elements(); ++e) v += std::abs(signed_volume(e));
        return v;
    }
};

/// Constant P1 hat-function gradients and the element volume.
template <int N>
struct ElementGeometry {
    double volume;
    Eigen::Matrix<double, N + 1, N> grad_hats;  // row v = gradient of hat at local vertex v
};

template <int N>
ElementGeometry<N> element_geometry(const SimplicialMesh<N>& mesh, int e) {
    const auto& elem = mesh.elements[e];
    Eigen::Matrix<double, N, N> edges;
    double scale = 0.0;
    for (int i = 0; i < N; ++i) {
        edges.col(i) = mesh.vertices[elem[i + 1]] - mesh.vertices[elem[0]];
        scale = std::max(scale, edges.col(i).cwiseAbs().maxCoeff());
    }
    double fact = 1.0;
    for (int i = 2; i <= N; ++i) fact *= i;
    const double vol = edges.determinant() / fact;
    if (vol <= 1e-14 * std::pow(scale, N))
        throw std::runtime_error("element_geometry: degenerate element " + std::to_string(e));
    ElementGeometry<N> g;
    g.volume = vol;
    const Eigen::Matrix<double, N, N> inv = edges.inverse();
    for (int i = 1; i <= N; ++i) g.grad_hats.row(i) = inv.row(i - 1);
    g.grad_hats.row(0) = -g.grad_hats.bottomRows(N).colwise().sum();
    return g;
}

namespace detail {

template <int N>
using FacetKey = std::array<int, N>;

template <int N>
std::array<int, N> sorted_facet(const std::array<int, N>& f) {
    auto s = f;
    std::sort(s.begin(), s.end());
    return s;
}

// The N+1 facets of an element (facet i omits local vertex i).
template <int N>
std::vector<std::array<int, N>> element_facets(const std::array<int, N + 1>& elem) {
    std::vector<std::array<int, N>> out;
    for (int skip = 0; skip <= N; ++skip) {
        std::array<int, N> f{};
        int p = 0;
        for (int i = 0; i <= N; ++i)
            if (i != skip) f[p++] = elem[i];
        out.push_back(f);
    }
    return out;
}

}  // namespace detail

/// Facets that belong to exactly one element, with box-face markers
/// (-x=1, +x=2, -y=3, +y=4, -z=5, +z=6) where a facet lies on the bounding
/// box; facets off any box face get marker 0.
template <int N>
void extract_boundary(SimplicialMesh<N>& mesh) {
    std::map<detail::FacetKey<N>, std::pair<std::array<int, N>, int>> count;
    for (const auto& elem : mesh.elements)
        for (const auto& f : detail::element_facets<N>(elem)) {
            auto key = detail::sorted_facet<N>(f);
            auto it = count.find(key);
            if (it == count.end())
                count.emplace(key, std::make_pair(f, 1));
            else
                it->second.second += 1;
        }

    Eigen::Matrix<double, N, 1> lo = mesh.vertices[0], hi = mesh.vertices[0];
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const double tol = 1e-12 * (hi - lo).cwiseAbs().maxCoeff();

    mesh.boundary_facets.clear();
    for (const auto& [key, entry] : count) {
        if (entry.second != 1) continue;
        typename SimplicialMesh<N>::Facet facet{entry.first, 0};
        for (int axis = 0; axis < N && facet.marker == 0; ++axis) {
            bool on_lo = true, on_hi = true;
            for (int v : facet.vertices) {
                on_lo &= std::abs(mesh.vertices[v](axis) - lo(axis)) <= tol;
                on_hi &= std::abs(mesh.vertices[v](axis) - hi(axis)) <= tol;
            }
            if (on_lo) facet.marker = 2 * axis + 1;
            if (on_hi) facet.marker = 2 * axis + 2;
        }
        mesh.boundary_facets.push_back(facet);
    }
}

/// Box mesh: 2D cells split along the (lo,lo)-(hi,hi) diagonal, 3D cubes
/// split into 6 tetrahedra (Kuhn subdivision).
template <int N>
SimplicialMesh<N> build_box_mesh(const std::array<int, N>& divisions,
                                 const std::array<std::array<double, 2>, N>& bounds) {
    for (int d : divisions)
        if (d < 1) throw std::invalid_argument("build_box_mesh: divisions must be >= 1");
    SimplicialMesh<N> mesh;

    std::array<int, N> nodes;
    for (int i = 0; i < N; ++i) nodes[i] = divisions[i] + 1;
    auto vid = [&](const std::array<int, N>& m) {
        int idx = 0;
        for (int i = N - 1; i >= 0; --i) idx = idx * nodes[i] + m[i];
        return idx;
    };

    {
        std::array<int, N> m{};
        int total = 1;
        for (int i = 0; i < N; ++i) total *= nodes[i];
        for (int lin = 0; lin < total; ++lin) {
            typename SimplicialMesh<N>::Vec x;
            for (int i = 0; i < N; ++i)
                x(i) = bounds[i][0] + m[i] * (bounds[i][1] - bounds[i][0]) / divisions[i];
            mesh.vertices.push_back(x);
            for (int i = 0; i < N; ++i) {
                if (++m[i] < nodes[i]) break;
                m[i] = 0;
            }
        }
    }

    if constexpr (N == 2) {
        for (int j = 0; j < divisions[1]; ++j)
            for (int i = 0; i < divisions[0]; ++i) {
                const int v00 = vid({i, j}), v10 = vid({i + 1, j});
                const int v01 = vid({i, j + 1}), v11 = vid({i + 1, j + 1});
                mesh.elements.push_back({v00, v10, v11});
                mesh.elements.push_back({v00, v11, v01});
            }
    } else {
        static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (int k = 0; k < divisions[2]; ++k)
            for (int j = 0; j < divisions[1]; ++j)
                for (int i = 0; i < divisions[0]; ++i)
                    for (const auto& perm : perms) {
                        std::array<int, 3> m = {i, j, k};
                        std::array<int, 4> tet;
                        tet[0] = vid(m);
                        for (int s = 0; s < 3; ++s) {
                            m[perm[s]] += 1;
                            tet[s + 1] = vid(m);
                        }
                        mesh.elements.push_back(tet);
                    }
    }

    mesh.normalize_orientation();
    extract_boundary(mesh);
    return mesh;
}

// ---------------------------------------------------------------------------
// OFF input ("OFF" header for 2D with 2-coordinate vertices and 3-index faces;
// "TOFF" for 3D with 3-coordinate vertices and 4-index cells).

namespace detail {

inline bool next_content_line(std::istream& in, std::string& line, int& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        const auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') continue;
        return true;
    }
    return false;
}

}  // namespace detail

template <int N>
SimplicialMesh<N> load_off(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_off: cannot open " + path);
    int line_no = 0;
    std::string line;

    if (!detail::next_content_line(in, line, line_no)) throw parse_error("missing header", line_no);
    std::string header;
    std::istringstream(line) >> header;
    const std::string expected = (N == 2) ? "OFF" : "TOFF";
    if (header != expected)
        throw parse_error("expected header '" + expected + "', got '" + header + "'", line_no);

    if (!detail::next_content_line(in, line, line_no)) throw parse_error("missing counts line", line_no);
    long nv = -1, nf = -1, ne = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nv >> nf)) throw parse_error("malformed counts line", line_no);
        ss >> ne;  // optional edge count, ignored
        if (nv < 0 || nf < 0) throw parse_error("negative counts", line_no);
    }

    SimplicialMesh<N> mesh;
    mesh.vertices.reserve(nv);
    for (long v = 0; v < nv; ++v) {
        if (!detail::next_content_line(in, line, line_no))
            throw parse_error("unexpected end of file in vertex list", line_no);
        std::istringstream ss(line);
        typename SimplicialMesh<N>::Vec x;
        for (int i = 0; i < N; ++i)
            if (!(ss >> x(i))) throw parse_error("malformed vertex line", line_no);
        mesh.vertices.push_back(x);
    }

    mesh.elements.reserve(nf);
    for (long f = 0; f < nf; ++f) {
        if (!detail::next_content_line(in, line, line_no))
            throw parse_error("unexpected end of file in cell list", line_no);
        std::istringstream ss(line);
        int arity = 0;
        if (!(ss >> arity)) throw parse_error("malformed cell line", line_no);
        if (arity != N + 1)
            throw parse_error("expected " + std::to_string(N + 1) + "-vertex cells", line_no);
        std::array<int, N + 1> elem{};
        for (int i = 0; i <= N; ++i) {
            if (!(ss >> elem[i])) throw parse_error("malformed cell line", line_no);
            if (elem[i] < 0 || elem[i] >= nv) throw parse_error("vertex index out of range", line_no);
        }
        mesh.elements.push_back(elem);
    }

    mesh.normalize_orientation();
    extract_boundary(mesh);
    return mesh;
}

template <int N>
void save_off(const std::string& path, const SimplicialMesh<N>& mesh) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_off: cannot open " + path);
    out << (N == 2 ? "OFF" : "TOFF") << "\n";
    out << mesh.num_vertices() << " " << mesh.num_elements() << " 0\n";
    char buf[96];
    for (const auto& v : mesh.vertices) {
        std::string row;
        for (int i = 0; i < N; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", v(i));
            row += buf;
            if (i + 1 < N) row += " ";
        }
        out << row << "\n";
    }
    for (const auto& e : mesh.elements) {
        out << (N + 1);
        for (int i = 0; i <= N; ++i) out << " " << e[i];
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Legacy VTK (ASCII 2.0, unstructured grid) and CSV output.

struct NamedField {
    std::string name;
    int components;            // per point or per cell
    std::vector<double> data;  // size = count * components
};

template <int N>
void save_vtk(const std::string& path, const SimplicialMesh<N>& mesh,
              const std::vector<NamedField>& point_fields,
              const std::vector<NamedField>& cell_fields) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_vtk: cannot open " + path);
    char buf[96];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };

    out << "# vtk DataFile Version 2.0\n";
    out << "hwforms output\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& v : mesh.vertices) {
        out << num(v(0)) << " " << num(v(1)) << " " << num(N == 3 ? v(N - 1) : 0.0) << "\n";
    }
    out << "CELLS " << mesh.num_elements() << " " << mesh.num_elements() * (N + 2) << "\n";
    for (const auto& e : mesh.elements) {
        out << (N + 1);
        for (int i = 0; i <= N; ++i) out << " " << e[i];
        out << "\n";
    }
    out << "CELL_TYPES " << mesh.num_elements() << "\n";
    for (int e = 0; e < mesh.num_elements(); ++e) out << (N == 2 ? 5 : 10) << "\n";

    auto write_fields = [&](const std::vector<NamedField>& fields, int count) {
        out << "FIELD attributes " << fields.size() << "\n";
        for (const auto& f : fields) {
            if (static_cast<int>(f.data.size()) != count * f.components)
                throw std::invalid_argument("save_vtk: field '" + f.name + "' has wrong size");
            out << f.name << " " << f.components << " " << count << " double\n";
            for (int i = 0; i < count; ++i) {
                std::string row;
                for (int c = 0; c < f.components; ++c) {
                    row += num(f.data[i * f.components + c]);
                    if (c + 1 < f.components) row += " ";
                }
                out << row << "\n";
            }
        }
    };
    if (!point_fields.empty()) {
        out << "POINT_DATA " << mesh.num_vertices() << "\n";
        write_fields(point_fields, mesh.num_vertices());
    }
    if (!cell_fields.empty()) {
        out << "CELL_DATA " << mesh.num_elements() << "\n";
        write_fields(cell_fields, mesh.num_elements());
    }
}

inline void save_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path);
    char buf[96];
    for (size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            out << buf << (i + 1 < row.size() ? "," : "\n");
        }
    }
}

}  // namespace hwforms
