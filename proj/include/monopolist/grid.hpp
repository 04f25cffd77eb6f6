#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace monopolist {

// Uniform lattice over the square (a,a+1)^2 with n nodes per side.
// Node (i,j) sits at x = (a + i*h, a + j*h), h = 1/(n-1).
struct Grid {
    double a = 0.0;
    int n = 0;

    double h() const { return 1.0 / (n - 1); }
    int num_nodes() const { return n * n; }
    int index(int i, int j) const { return i * n + j; }
    double x1(int i) const { return a + i * h(); }
    double x2(int j) const { return a + j * h(); }
    bool operator==(const Grid&) const = default;
};

Grid make_grid(double a, int n);

struct ScalarField {
    Grid grid;
    std::vector<double> values;  // row-major, index i*n+j

    ScalarField() = default;
    explicit ScalarField(const Grid& g) : grid(g), values(g.num_nodes(), 0.0) {}

    double& at(int i, int j) { return values[grid.index(i, j)]; }
    double at(int i, int j) const { return values[grid.index(i, j)]; }
};

struct VectorField {
    Grid grid;
    std::vector<double> c1, c2;

    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid(g), c1(g.num_nodes(), 0.0), c2(g.num_nodes(), 0.0) {}
};

// Symmetric 2x2 tensor field: entries d11, d12, d22 per node.
struct TensorField {
    Grid grid;
    std::vector<double> d11, d12, d22;

    TensorField() = default;
    explicit TensorField(const Grid& g)
        : grid(g), d11(g.num_nodes(), 0.0), d12(g.num_nodes(), 0.0),
          d22(g.num_nodes(), 0.0) {}
};

// One node on the ordered boundary walk (counterclockwise from (a,a)).
struct BoundaryNode {
    int i = 0, j = 0;
    double x1 = 0.0, x2 = 0.0;
    bool corner = false;
    // Off corners normals[1] duplicates normals[0].
    std::array<std::array<double, 2>, 2> normals{};
    double value = 0.0;
};

struct BoundaryTrace {
    Grid grid;
    std::vector<BoundaryNode> nodes;  // size 4(n-1)
};

// Ordered boundary nodes with outer normals; values left at zero.
BoundaryTrace boundary_walk(const Grid& grid);

// Central differences interior, second-order one-sided at the boundary.
VectorField gradient(const ScalarField& u);

// Second differences for d11/d22 (replicated one node in at the boundary),
// mixed term as Dx applied to Dy u.
TensorField hessian(const ScalarField& u);

// Per boundary node (Du - x) . n using one-sided normal derivatives;
// corners carry the max over both adjacent normals.
BoundaryTrace boundary_normal_residual(const ScalarField& u);

// Eigenvalues of the symmetric 2x2 block at a node, ascending.
std::array<double, 2> tensor_eigenvalues(const TensorField& t, int idx);

// Field file format:
//   # monopolist-field v1
//   n=<int> a=<float17>
//   n lines of n comma-separated values, j ascending per line.
void write_field(const ScalarField& u, const std::string& path);
ScalarField read_field(const std::string& path);

}  // namespace monopolist
