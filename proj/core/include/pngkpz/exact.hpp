#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "pngkpz/integrands.hpp"
#include "pngkpz/params.hpp"

namespace pngkpz {

/// Dense complex N x N matrix with the block partition (n_1, ..., n_p).
struct BlockMatrixC {
    std::vector<long> n;
    Eigen::MatrixXcd M;

    /// Entry M(r,i;s,j) with global 1-based indices i in block r, j in block s.
    cplx operator()(int r, long i, int s, long j) const;
};

/// Contour radii for one (epsilon, k1, k2) term: zeta circles around 0 and
/// z circles around 1 indexed by k in (k1, k2].
struct RadiiConfig {
    double tau1 = 0.0, tau2 = 0.0, tau3 = 0.0;
    std::vector<double> R;  // size p + 1, R[k] used for k1 < k <= k2
    int k1 = 0, k2 = 0;

    /// Checks tau2 < tau1 < w_c, tau2 < tau3 < w_c, q < R_k < sqrt(q) and the
    /// epsilon ordering; throws domain_error on violation.
    void validate(const EpsilonVector& eps, double q) const;
};

/// Binary-offset radii rule, rescaled order-preservingly into (q, sqrt q). The zeta
/// circles sit at w_c (1 - delta), w_c (1 - 2 delta); the z circles cross the real axis
/// at evenly spaced points w_c (1 + delta rho) with rho in [0.5, 0.5 + 2 spread].
RadiiConfig radii_for_eps(const EpsilonVector& eps, int k1, int k2, int p, double q,
                          double delta = 0.15, double spread = 1.0);

struct ExactSettings {
    double r_theta = 2.0;
    double tol = 1e-10;
    int theta_nodes = 0;  // 0: start at 16 and double until stable
    int max_theta_nodes = 2048;
    int zeta_nodes = 0;   // 0: heuristic from the radii gaps
    int z_nodes = 0;
    bool refine_nodes = true;  // double contour nodes until a probe determinant is stable
    int max_contour_nodes = 4096;
    double delta = 0.0;   // 0: automatic, 0.6 N^{-1/3} capped by 0.3 sqrt(q)
    double spread = 1.0;
    double mu = 0.0;
    double nuT = 1.0;
    long max_N = 400;
};

struct ExactResult {
    double value = 0.0;
    double imag = 0.0;
    double change = 0.0;  // last theta-doubling change
    int theta_nodes = 0, zeta_nodes = 0, z_nodes = 0;
    double runtime_ms = 0.0;
};

/// Precomputed theta-independent pieces of A(theta) and B(theta).
class ExactFormula {
public:
    ExactFormula(const ModelParams& params, const ExactSettings& settings = {});
    ~ExactFormula();
    ExactFormula(ExactFormula&&) noexcept;

    BlockMatrixC build_A(const std::vector<cplx>& theta) const;
    BlockMatrixC build_B(const std::vector<cplx>& theta) const;
    cplx det_theta(const std::vector<cplx>& theta) const;

    int zeta_nodes() const;
    int z_nodes() const;

    struct Impl;  // opaque, defined in the source file

private:
    std::unique_ptr<Impl> impl_;
};

BlockMatrixC build_A(const std::vector<cplx>& theta, const ModelParams& params,
                     const ExactSettings& settings = {});
BlockMatrixC build_B(const std::vector<cplx>& theta, const ModelParams& params,
                     const ExactSettings& settings = {});
cplx det_theta(const std::vector<cplx>& theta, const ModelParams& params,
               const ExactSettings& settings = {});

/// Theta-contour integral of det(I + A + B) / prod(theta_k - 1). p = 1 routes
/// to single_point_prob.
ExactResult multipoint_prob_exact(const ModelParams& params, const ExactSettings& settings = {});

/// P(G(m,n) < a) as det(I + M) with the double contour kernel.
double single_point_prob(long n, long m, long a, double q, const ExactSettings& settings = {});

// Individual matrices, exposed for verification. Each includes the 1/w_c factor
// and its indicator but no conjugation.
Eigen::MatrixXcd lk_matrix(const ModelParams& params, int k, const RadiiConfig& rc, int Kzeta);
Eigen::MatrixXcd lcd_matrix(const ModelParams& params, int k1, int k2, const RadiiConfig& rc,
                            int Kzeta, int Kz);
Eigen::MatrixXcd j_matrix(const ModelParams& params, int k1, int k2, const RadiiConfig& rc,
                          int Kzeta, int Kz);
Eigen::MatrixXcd lp_matrix(const ModelParams& params, const RadiiConfig& rc, int Kzeta, int Kz);
/// (1/w_c) contour integral of 1/G(w | i-j+1, Delta_{s,r*}(m,a)) for s < r*, else 0.
Eigen::MatrixXcd b_basis(const ModelParams& params, double tau, int Kzeta);

}  // namespace pngkpz
