#include "pngkpz/fredholm.hpp"

#include <tbb/parallel_for.h>

#include <cmath>

#include "pngkpz/integrands.hpp"

namespace pngkpz {

cplx lu_det(const Eigen::MatrixXcd& M) {
    if (M.rows() != M.cols()) throw domain_error("lu_det: matrix must be square");
    if (!M.allFinite()) throw convergence_error("lu_det: non-finite matrix entry");
    if (M.rows() == 0) return 1.0;
    return Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant();
}

NystromGrid NystromGrid::uniform(int p, double L, int nodes, int panels) {
    if (p < 1 || !(L > 0.0) || nodes < 1 || panels < 1) throw domain_error("NystromGrid: bad shape");
    NystromGrid g;
    g.p = p;
    g.L = L;
    const GLRule& gl = gauss_legendre(nodes);
    const double h = L / panels;
    for (int r = 1; r <= p; ++r) {
        const double lo = r < p ? -L : 0.0;
        for (int k = 0; k < panels; ++k)
            for (int j = 0; j < nodes; ++j) {
                g.block.push_back(r);
                g.u.push_back(lo + (k + 0.5) * h + 0.5 * h * gl.x[j]);
                g.w.push_back(0.5 * h * gl.w[j]);
            }
    }
    return g;
}

NystromGrid NystromGrid::steps(const std::vector<long>& n, double nuT, int nodes_per_step) {
    const int p = static_cast<int>(n.size());
    NystromGrid g;
    g.p = p;
    const GLRule& gl = gauss_legendre(nodes_per_step);
    const double h = 1.0 / nuT;
    for (int r = 1; r <= p; ++r) {
        const long len = n[r - 1] - (r > 1 ? n[r - 2] : 0);
        const double lo = r < p ? -static_cast<double>(len) * h : 0.0;
        for (long k = 0; k < len; ++k)
            for (int j = 0; j < nodes_per_step; ++j) {
                g.block.push_back(r);
                g.u.push_back(lo + (k + 0.5) * h + 0.5 * h * gl.x[j]);
                g.w.push_back(0.5 * h * gl.w[j]);
            }
        g.L = std::max(g.L, len * h);
    }
    return g;
}

Eigen::MatrixXcd nystrom_matrix(const BlockKernel& kernel, const NystromGrid& grid) {
    const int n = grid.size();
    Eigen::MatrixXcd A(n, n);
    tbb::parallel_for(0, n, [&](int i) {
        const double si = std::sqrt(grid.w[i]);
        for (int j = 0; j < n; ++j)
            A(i, j) = si * kernel(grid.block[i], grid.u[i], grid.block[j], grid.u[j]) * std::sqrt(grid.w[j]);
    });
    A += Eigen::MatrixXcd::Identity(n, n);
    return A;
}

cplx nystrom_det(const BlockKernel& kernel, const NystromGrid& grid) {
    return lu_det(nystrom_matrix(kernel, grid));
}

BlockKernel embed_discrete(const Eigen::MatrixXcd& M, const std::vector<long>& n, double nuT) {
    const int p = static_cast<int>(n.size());
    if (M.rows() != n.back() || M.cols() != n.back()) throw domain_error("embed_discrete: size mismatch");
    // Index for (block r, coordinate u), or -1 when u falls outside block r.
    auto index = [n, p, nuT](int r, double u) -> long {
        const int rs = rstar(r, p);
        const long base = rs > 0 ? n[rs - 1] : 0;
        const long i = base + static_cast<long>(std::ceil(nuT * u));
        const long lo = r > 1 ? n[r - 2] : 0;
        return (i > lo && i <= n[r - 1]) ? i : -1;
    };
    return [M, index, nuT](int r, double u, int s, double v) -> cplx {
        const long i = index(r, u), j = index(s, v);
        if (i < 0 || j < 0) return 0.0;
        return nuT * M(i - 1, j - 1);
    };
}

}  // namespace pngkpz
