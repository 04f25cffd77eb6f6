#include "monopolist/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace monopolist {

Grid make_grid(double a, int n) {
    if (!std::isfinite(a) || a < 0.0)
        throw std::invalid_argument("a must be nonnegative");
    if (n < 3)
        throw std::invalid_argument("n must be at least 3");
    return Grid{a, n};
}

namespace {

// d/dx along one line of n samples with spacing h.
inline double d1_line(const double* u, int k, int n, int stride, double h) {
    if (k == 0)
        return (-3.0 * u[0] + 4.0 * u[stride] - u[2 * stride]) / (2.0 * h);
    if (k == n - 1)
        return (3.0 * u[k * stride] - 4.0 * u[(k - 1) * stride] +
                u[(k - 2) * stride]) / (2.0 * h);
    return (u[(k + 1) * stride] - u[(k - 1) * stride]) / (2.0 * h);
}

inline double d2_line(const double* u, int k, int n, int stride, double h) {
    int c = k;
    if (k == 0) c = 1;
    if (k == n - 1) c = n - 2;
    return (u[(c - 1) * stride] - 2.0 * u[c * stride] + u[(c + 1) * stride]) /
           (h * h);
}

}  // namespace

VectorField gradient(const ScalarField& u) {
    const Grid& g = u.grid;
    const int n = g.n;
    const double h = g.h();
    VectorField out(g);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int idx = g.index(i, j);
            out.c1[idx] = d1_line(u.values.data() + j, i, n, n, h);
            out.c2[idx] = d1_line(u.values.data() + i * n, j, n, 1, h);
        }
    }
    return out;
}

TensorField hessian(const ScalarField& u) {
    const Grid& g = u.grid;
    const int n = g.n;
    const double h = g.h();
    TensorField out(g);
    // dy first, then dx of it, so the mixed entry stays exact on quadratics.
    std::vector<double> uy(g.num_nodes());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            uy[g.index(i, j)] = d1_line(u.values.data() + i * n, j, n, 1, h);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int idx = g.index(i, j);
            out.d11[idx] = d2_line(u.values.data() + j, i, n, n, h);
            out.d22[idx] = d2_line(u.values.data() + i * n, j, n, 1, h);
            out.d12[idx] = d1_line(uy.data() + j, i, n, n, h);
        }
    }
    return out;
}

std::array<double, 2> tensor_eigenvalues(const TensorField& t, int idx) {
    const double a = t.d11[idx], b = t.d12[idx], c = t.d22[idx];
    const double mean = 0.5 * (a + c);
    const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return {mean - rad, mean + rad};
}

BoundaryTrace boundary_walk(const Grid& grid) {
    BoundaryTrace tr;
    tr.grid = grid;
    const int n = grid.n;
    tr.nodes.reserve(4 * (n - 1));
    auto push = [&](int i, int j, std::array<double, 2> n0,
                    std::array<double, 2> n1, bool corner) {
        BoundaryNode bn;
        bn.i = i;
        bn.j = j;
        bn.x1 = grid.x1(i);
        bn.x2 = grid.x2(j);
        bn.corner = corner;
        bn.normals = {n0, corner ? n1 : n0};
        tr.nodes.push_back(bn);
    };
    const std::array<double, 2> S{0.0, -1.0}, E{1.0, 0.0}, N{0.0, 1.0},
        W{-1.0, 0.0};
    for (int i = 0; i < n - 1; ++i) push(i, 0, S, i == 0 ? W : S, i == 0);
    for (int j = 0; j < n - 1; ++j) push(n - 1, j, E, j == 0 ? S : E, j == 0);
    for (int i = n - 1; i > 0; --i)
        push(i, n - 1, N, i == n - 1 ? E : N, i == n - 1);
    for (int j = n - 1; j > 0; --j) push(0, j, W, j == n - 1 ? N : W, j == n - 1);
    return tr;
}

BoundaryTrace boundary_normal_residual(const ScalarField& u) {
    const Grid& g = u.grid;
    const int n = g.n;
    const double h = g.h();
    BoundaryTrace tr = boundary_walk(g);
    for (auto& bn : tr.nodes) {
        double worst = -1e300;
        const int count = bn.corner ? 2 : 1;
        for (int k = 0; k < count; ++k) {
            const auto& nv = bn.normals[k];
            double dn;
            if (nv[0] != 0.0)
                dn = nv[0] * d1_line(u.values.data() + bn.j, bn.i, n, n, h);
            else
                dn = nv[1] * d1_line(u.values.data() + bn.i * n, bn.j, n, 1, h);
            const double xn = bn.x1 * nv[0] + bn.x2 * nv[1];
            worst = std::max(worst, dn - xn);
        }
        bn.value = worst;
    }
    return tr;
}

void write_field(const ScalarField& u, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    char buf[64];
    out << "# monopolist-field v1\n";
    std::snprintf(buf, sizeof(buf), "%.17g", u.grid.a);
    out << "n=" << u.grid.n << " a=" << buf << "\n";
    const int n = u.grid.n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", u.at(i, j));
            out << buf << (j + 1 < n ? "," : "\n");
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ScalarField read_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "# monopolist-field v1")
        throw std::runtime_error("bad field header in " + path);
    if (!std::getline(in, line))
        throw std::runtime_error("truncated field file " + path);
    int n = 0;
    double a = 0.0;
    if (std::sscanf(line.c_str(), "n=%d a=%lf", &n, &a) != 2)
        throw std::runtime_error("bad field size line in " + path);
    ScalarField u(make_grid(a, n));
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("truncated field file " + path);
        std::stringstream ss(line);
        std::string tok;
        for (int j = 0; j < n; ++j) {
            if (!std::getline(ss, tok, ','))
                throw std::runtime_error("short row in " + path);
            u.at(i, j) = std::stod(tok);
        }
    }
    return u;
}

}  // namespace monopolist
