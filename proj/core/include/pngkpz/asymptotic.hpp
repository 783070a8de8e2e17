#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "pngkpz/fredholm.hpp"
#include "pngkpz/integrands.hpp"
#include "pngkpz/params.hpp"

namespace pngkpz {

/// Limit data (t, x, xi) with the contour abscissas of the basic kernels.
struct LimitInstance {
    std::vector<double> t, x, xi;
    double mu = 0.0;
    double d1 = 0.8, d2 = 1.6, d3 = 0.8;
    double D = 1.0;                 // single z line
    double D_lo = 0.5, D_hi = 2.5;  // interval for chained z lines

    int p() const { return static_cast<int>(t.size()); }
    void validate() const;
    /// Copy with every line moved far enough right (z) or left (zeta) for the
    /// integrands to decay, keeping the d1, d3 < d2 ordering and the D interval width.
    LimitInstance with_decaying_lines() const;
    /// Copies (t, x, xi) from KPZ data; mu defaults to the sufficient bound plus one.
    static LimitInstance from_kpz(const KPZParams& kpz);
};

/// Abscissas D_k for k in (k1, k2], indexed by k (entries outside are unused).
struct DAssignment {
    std::vector<double> D;  // size p + 1
    int k1 = 0, k2 = 0;
    /// Positive, distinct, D_k < D_{k+1} iff eps_k = 1; throws domain_error otherwise.
    void validate(const EpsilonVector& eps) const;
};

/// D_1 = 2^p, D_{k+1} = D_k + (-1)^{eps_k + 1} 2^k restricted to (k1, k2] and mapped
/// affinely onto [lo, hi]. A single line gets the midpoint.
DAssignment d_for_eps(const EpsilonVector& eps, int k1, int k2, int p, double lo = 0.5, double hi = 2.5);

/// Names one basic kernel. Unused indices are ignored by the family.
struct KernelIndex {
    int family = 1;  // 1..7
    int k = 0, k1 = 0, k2 = 0, k3 = 0;
    EpsilonVector eps;
};

struct LineSettings {
    double budget = 45.0;   // Gaussian truncation exponent
    double omega_h = 16.0;  // bound on the phase change per panel
    int nodes_per_panel = 12;
    double u_max = 12.0;    // largest |u|, |v| the kernel will see
};

/// Iterated line-contour integral of a basic kernel, conjugation e^{mu(v-u)} included.
/// Zero when the family indicator fails.
cplx eval_basic_kernel(const KernelIndex& idx, int r, double u, int s, double v, const LimitInstance& inst,
                       const LineSettings& ls = {});

/// The same basic kernel on a grid: rows u, columns v (all in blocks r and s).
Eigen::MatrixXcd basic_kernel_matrix(const KernelIndex& idx, int r, const std::vector<double>& u, int s,
                                     const std::vector<double>& v, const LimitInstance& inst,
                                     const LineSettings& ls = {});

struct AiryFormSettings {
    double lambda_max = 40.0;
    int panels = 20;
    int nodes_per_panel = 10;
};

/// The kernel from its Airy-operator composition: every line integral becomes a
/// closed-form A[.] kernel and each Cauchy factor a half-line lambda integral.
double airy_form_kernel(const KernelIndex& idx, int r, double u, int s, double v, const LimitInstance& inst,
                        const AiryFormSettings& as = {});

/// chi_eps applied pointwise: 1{x < 0} for odd eps, 1{x >= 0} for even eps.
std::vector<double> chi_project(int eps, const std::vector<double>& x, const std::vector<double>& f);

/// F(theta)(r,u;s,v) = -F0 + F1 + F2 - F3 - F4, evaluated pointwise (slow; for checks).
cplx assemble_F(const std::vector<cplx>& theta, int r, double u, int s, double v, const LimitInstance& inst,
                const LineSettings& ls = {});

/// Number of (k1, k2, eps) triples in the F2 sum.
int f2_term_count(int p);

/// Theta-independent pieces of F on a Nystrom grid; F(theta) is a row/column
/// weighted sum of them.
class LimitKernel {
public:
    LimitKernel(const LimitInstance& inst, const NystromGrid& grid, const LineSettings& ls = {});
    ~LimitKernel();
    LimitKernel(LimitKernel&&) noexcept;

    /// W^{1/2} F(theta) W^{1/2} on the grid.
    Eigen::MatrixXcd matrix(const std::vector<cplx>& theta) const;
    cplx det(const std::vector<cplx>& theta) const;
    int terms() const;

    struct Impl;  // opaque, defined in the source file

private:
    std::unique_ptr<Impl> impl_;
};

/// det(I + F(theta)) by Nystrom discretization.
cplx fredholm_det_F(const std::vector<cplx>& theta, const LimitInstance& inst, const NystromGrid& grid,
                    const LineSettings& ls = {});

struct LimitSettings {
    double r_theta = 2.0;
    double tol = 1e-9;
    int theta_nodes = 0;  // 0: start at 8 and double
    int max_theta_nodes = 512;
    double L = 0.0;  // 0: 12 + max |xi_k + x_k^2| t_p^{1/3}
    int grid_nodes = 48;
    int grid_panels = 1;
    LineSettings lines;
};

struct LimitResult {
    double value = 0.0;
    double imag = 0.0;
    double change = 0.0;
    int theta_nodes = 0, grid_nodes = 0;
    double runtime_ms = 0.0;
};

/// Theta integral of det(I + F(theta)) / prod(theta_k - 1); p = 1 gives F_GUE(xi + x^2).
/// Truncation length used when LimitSettings::L is 0.
double auto_truncation(const LimitInstance& inst);

LimitResult multitime_cdf(const LimitInstance& inst, const LimitSettings& settings = {});

/// F_GUE(s) = det(I - K_Ai) on (s, s + L) with n Gauss-Legendre nodes, s in [-10, 6].
double tracy_widom(double s, int nodes = 48, double L = 16.0);

/// Airy kernel K_Ai(x, y) with the diagonal limit.
double airy_kernel(double x, double y);

/// Contour-form single time kernel K(u, v) on (0, inf).
double singletime_kernel(double t, double x, double xi, double u, double v, double d = 0.8, double D = 1.0,
                         const LineSettings& ls = {});

/// det(I - K) on (0, L) with the contour-form kernel.
double singletime_det(double t, double x, double xi, int nodes = 48, double L = 12.0, const LineSettings& ls = {});

}  // namespace pngkpz
