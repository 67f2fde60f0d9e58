#include "hwforms/errors.hpp"
#include "hwforms/mesh.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>

using namespace hwforms;

namespace {

std::array<std::array<double, 2>, 2> unit2() { return {{{0.0, 1.0}, {0.0, 1.0}}}; }
std::array<std::array<double, 2>, 3> unit3() { return {{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}}; }

// Oriented-boundary oracle: each interior (n-1)-facet must be visited exactly
// twice across elements, boundary facets exactly once.
template <int N>
void check_facet_counts(const SimplicialMesh<N>& mesh) {
    std::map<std::array<int, N>, int> count;
    for (const auto& elem : mesh.elements)
        for (int skip = 0; skip <= N; ++skip) {
            std::array<int, N> f{};
            int p = 0;
            for (int i = 0; i <= N; ++i)
                if (i != skip) f[p++] = elem[i];
            std::sort(f.begin(), f.end());
            count[f] += 1;
        }
    std::set<std::array<int, N>> boundary;
    for (const auto& f : mesh.boundary_facets) {
        auto s = f.vertices;
        std::sort(s.begin(), s.end());
        boundary.insert(s);
    }
    for (const auto& [facet, c] : count) {
        REQUIRE((c == 1 || c == 2));
        CHECK(boundary.count(facet) == static_cast<size_t>(c == 1 ? 1 : 0));
    }
}

}  // namespace

TEST_CASE("box mesh counts") {
    const auto m2 = build_box_mesh<2>({1, 1}, unit2());
    CHECK(m2.num_vertices() == 4);
    CHECK(m2.num_elements() == 2);
    CHECK(m2.boundary_facets.size() == 4);

    const auto m3 = build_box_mesh<3>({1, 1, 1}, unit3());
    CHECK(m3.num_vertices() == 8);
    CHECK(m3.num_elements() == 6);
    CHECK(m3.boundary_facets.size() == 12);

    CHECK_THROWS_AS(build_box_mesh<2>({0, 1}, unit2()), std::invalid_argument);
}

TEST_CASE("box mesh volume and orientation") {
    for (int d : {1, 2, 5}) {
        const auto m2 = build_box_mesh<2>({d, d + 1}, {{{0.0, 2.0}, {-1.0, 1.0}}});
        CHECK(m2.total_volume() == Catch::Approx(4.0).epsilon(1e-12));
        for (int e = 0; e < m2.num_elements(); ++e) CHECK(m2.signed_volume(e) > 0.0);

        const auto m3 = build_box_mesh<3>({d, d, d}, {{{0.0, 1.0}, {0.0, 2.0}, {0.0, 3.0}}});
        CHECK(m3.total_volume() == Catch::Approx(6.0).epsilon(1e-12));
        for (int e = 0; e < m3.num_elements(); ++e) CHECK(m3.signed_volume(e) > 0.0);
    }
}

TEST_CASE("boundary of the boundary is empty") {
    check_facet_counts(build_box_mesh<2>({3, 4}, unit2()));
    check_facet_counts(build_box_mesh<3>({2, 3, 2}, unit3()));
}

TEST_CASE("box boundary markers") {
    const auto m = build_box_mesh<2>({4, 4}, unit2());
    std::map<int, double> length_by_marker;
    for (const auto& f : m.boundary_facets) {
        CHECK(f.marker >= 1);
        CHECK(f.marker <= 4);
        length_by_marker[f.marker] += m.facet_measure(f);
    }
    for (int marker = 1; marker <= 4; ++marker)
        CHECK(length_by_marker[marker] == Catch::Approx(1.0).epsilon(1e-12));

    const auto m3 = build_box_mesh<3>({2, 2, 2}, unit3());
    std::map<int, double> area;
    for (const auto& f : m3.boundary_facets) area[f.marker] += m3.facet_measure(f);
    for (int marker = 1; marker <= 6; ++marker)
        CHECK(area[marker] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("element geometry of the reference triangle") {
    SimplicialMesh<2> m;
    m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    m.elements = {{0, 1, 2}};
    const auto g = element_geometry(m, 0);
    CHECK(g.volume == Catch::Approx(0.5));
    CHECK(g.grad_hats(0, 0) == Catch::Approx(-1.0));
    CHECK(g.grad_hats(0, 1) == Catch::Approx(-1.0));
    CHECK(g.grad_hats(1, 0) == Catch::Approx(1.0));
    CHECK(g.grad_hats(1, 1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(g.grad_hats(2, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(g.grad_hats(2, 1) == Catch::Approx(1.0));
}

TEST_CASE("hat gradients: partition of unity and FD consistency") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> U(-0.2, 0.2);
    SimplicialMesh<3> m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (auto& v : m.vertices)
        for (int i = 0; i < 3; ++i) v(i) += U(rng);
    m.elements = {{0, 1, 2, 3}};
    m.normalize_orientation();
    const auto g = element_geometry(m, 0);

    CHECK(g.grad_hats.colwise().sum().cwiseAbs().maxCoeff() < 1e-13);

    // hat_v is affine with hat_v(vertex w) = delta_vw; check its gradient by
    // evaluating the affine interpolant along coordinate steps
    for (int v = 0; v < 4; ++v) {
        // affine function a + b.x with the hat's nodal values
        Eigen::Matrix4d A;
        Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
        rhs(v) = 1.0;
        for (int w = 0; w < 4; ++w) {
            A(w, 0) = 1.0;
            A.block<1, 3>(w, 1) = m.vertices[w].transpose();
        }
        const Eigen::Vector4d coef = A.fullPivLu().solve(rhs);
        CHECK((coef.tail<3>() - g.grad_hats.row(v).transpose()).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("geometry is translation invariant") {
    SimplicialMesh<2> m;
    m.vertices = {{0.1, 0.2}, {1.3, 0.4}, {0.5, 1.1}};
    m.elements = {{0, 1, 2}};
    const auto g0 = element_geometry(m, 0);
    for (auto& v : m.vertices) v += Eigen::Vector2d(7.0, -3.0);
    const auto g1 = element_geometry(m, 0);
    CHECK(g0.volume == Catch::Approx(g1.volume).epsilon(1e-13));
    CHECK((g0.grad_hats - g1.grad_hats).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate element is reported with its id") {
    SimplicialMesh<2> m;
    m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
    m.elements = {{0, 1, 2}};
    CHECK_THROWS_WITH(element_geometry(m, 0), Catch::Matchers::ContainsSubstring("element 0"));
}

TEST_CASE("OFF round trip") {
    std::mt19937 rng(32);
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    auto mesh = build_box_mesh<2>({3, 2}, unit2());
    for (auto& v : mesh.vertices) v += Eigen::Vector2d(U(rng) * 1e-3, U(rng) * 1e-3);

    const std::string path = "roundtrip.off";
    save_off(path, mesh);
    const auto loaded = load_off<2>(path);
    REQUIRE(loaded.num_vertices() == mesh.num_vertices());
    REQUIRE(loaded.num_elements() == mesh.num_elements());
    CHECK(loaded.elements == mesh.elements);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        CHECK((loaded.vertices[v] - mesh.vertices[v]).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());

    const std::string path3 = "roundtrip.toff";
    const auto mesh3 = build_box_mesh<3>({2, 1, 1}, unit3());
    save_off(path3, mesh3);
    const auto loaded3 = load_off<3>(path3);
    CHECK(loaded3.elements == mesh3.elements);
    std::remove(path3.c_str());
}

TEST_CASE("minimal OFF file parses") {
    const std::string path = "two_tri.off";
    {
        std::ofstream out(path);
        out << "OFF\n# comment line\n4 2 0\n0 0\n1 0\n1 1\n0 1\n3 0 1 2\n3 0 2 3\n";
    }
    const auto m = load_off<2>(path);
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_elements() == 2);
    CHECK(m.boundary_facets.size() == 4);
    CHECK(m.total_volume() == Catch::Approx(1.0));
    std::remove(path.c_str());
}

TEST_CASE("OFF parse errors carry line numbers") {
    auto write = [](const std::string& path, const std::string& body) {
        std::ofstream out(path);
        out << body;
    };
    const std::string path = "bad.off";

    write(path, "NOFF\n4 2 0\n");
    CHECK_THROWS_AS(load_off<2>(path), parse_error);

    write(path, "OFF\n4 2 0\n0 0\n1 0\n1 1\n0 1\n3 0 1 9\n3 0 2 3\n");
    try {
        load_off<2>(path);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line == 7);
        CHECK(std::string(e.what()).find("out of range") != std::string::npos);
    }

    write(path, "OFF\nnot numbers\n");
    CHECK_THROWS_AS(load_off<2>(path), parse_error);

    write(path, "OFF\n4 2 0\n0 0\n1 0\n");
    CHECK_THROWS_AS(load_off<2>(path), parse_error);  // truncated vertex list

    write(path, "OFF\n3 1 0\n0 0\n1 0\n0 1\n4 0 1 2 2\n");
    CHECK_THROWS_AS(load_off<2>(path), parse_error);  // wrong cell arity

    std::remove(path.c_str());
}

TEST_CASE("negative orientation is normalized on load") {
    const std::string path = "flip.off";
    {
        std::ofstream out(path);
        out << "OFF\n3 1 0\n0 0\n1 0\n0 1\n3 0 2 1\n";  // clockwise triangle
    }
    const auto m = load_off<2>(path);
    CHECK(m.signed_volume(0) > 0.0);
    std::remove(path.c_str());
}

TEST_CASE("VTK output: header, structure, determinism") {
    const auto mesh = build_box_mesh<2>({2, 2}, unit2());
    NamedField pos{"position", 3, {}};
    for (const auto& v : mesh.vertices) {
        pos.data.push_back(v(0));
        pos.data.push_back(v(1));
        pos.data.push_back(0.0);
    }
    NamedField jf{"J", 1, std::vector<double>(mesh.num_elements(), 1.0)};

    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    save_vtk("a.vtk", mesh, {pos}, {jf});
    save_vtk("b.vtk", mesh, {pos}, {jf});
    const std::string a = slurp("a.vtk");
    CHECK(a == slurp("b.vtk"));

    CHECK(a.rfind("# vtk DataFile Version 2.0\n", 0) == 0);
    CHECK(a.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(a.find("POINTS 9 double") != std::string::npos);
    CHECK(a.find("CELLS 8 32") != std::string::npos);
    CHECK(a.find("POINT_DATA 9") != std::string::npos);
    CHECK(a.find("CELL_DATA 8") != std::string::npos);
    CHECK(a.find("position 3 9 double") != std::string::npos);
    CHECK(a.find("J 1 8 double") != std::string::npos);

    NamedField bad{"bad", 2, {1.0}};
    CHECK_THROWS_AS(save_vtk("c.vtk", mesh, {bad}, {}), std::invalid_argument);
    std::remove("a.vtk");
    std::remove("b.vtk");
    std::remove("c.vtk");
}

TEST_CASE("CSV writer") {
    save_csv("t.csv", {"iter", "r"}, {{0.0, 1.0}, {1.0, 0.25}});
    std::ifstream in("t.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "iter,r");
    std::getline(in, line);
    CHECK(line == "0,1");
    std::getline(in, line);
    CHECK(line == "1,0.25");
    std::remove("t.csv");
}
