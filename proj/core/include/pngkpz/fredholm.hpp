#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "pngkpz/params.hpp"

namespace pngkpz {

/// Determinant by partially pivoted LU. Throws on non-finite entries.
cplx lu_det(const Eigen::MatrixXcd& M);

/// Quadrature nodes on the direct sum of p-1 copies of (-L, 0) and one (0, L).
struct NystromGrid {
    int p = 1;
    double L = 12.0;
    std::vector<int> block;  // 1-based block of each node
    std::vector<double> u, w;

    int size() const { return static_cast<int>(u.size()); }

    /// Composite Gauss-Legendre, `panels` panels of `nodes` points per block.
    static NystromGrid uniform(int p, double L = 12.0, int nodes = 48, int panels = 1);
    /// Panels aligned with the unit steps of an embedded N x N matrix after the
    /// change of variables u -> nu_T u.
    static NystromGrid steps(const std::vector<long>& n, double nuT, int nodes_per_step = 2);
};

using BlockKernel = std::function<cplx(int r, double u, int s, double v)>;

/// det(I + W^{1/2} K W^{1/2}) on the grid; the fill runs in parallel.
cplx nystrom_det(const BlockKernel& kernel, const NystromGrid& grid);

/// The matrix I + W^{1/2} K W^{1/2} itself, for callers that reuse it.
Eigen::MatrixXcd nystrom_matrix(const BlockKernel& kernel, const NystromGrid& grid);

/// Step kernel F(r,u;s,v) = nu_T M(n_{r*} + ceil(nu_T u), n_{s*} + ceil(nu_T v)),
/// zero when an index leaves its block.
BlockKernel embed_discrete(const Eigen::MatrixXcd& M, const std::vector<long>& n, double nuT);

}  // namespace pngkpz
