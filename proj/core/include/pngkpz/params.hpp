#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "pngkpz/errors.hpp"

namespace pngkpz {

using cplx = std::complex<double>;

/// Integer power by repeated squaring.
inline cplx ipow(cplx z, long e) {
    if (e < 0) return 1.0 / ipow(z, -e);
    cplx r = 1.0;
    while (e) {
        if (e & 1) r *= z;
        z *= z;
        e >>= 1;
    }
    return r;
}

/// Discrete instance: the event G(m_k, n_k) < a_k for k = 1..p.
struct ModelParams {
    double q = 0.5;
    std::vector<long> m, n, a;

    int p() const { return static_cast<int>(m.size()); }
    long N() const { return n.back(); }
    void validate() const;
    // Some a_k <= 0 makes the event empty since G >= 0.
    bool trivially_zero() const;
};

/// Continuum data (T, t, x, xi) of the KPZ scaling plus conjugation constant.
struct KPZParams {
    double q = 0.5;
    double T = 1.0;
    std::vector<double> t, x, xi;
    double mu = 0.0;

    int p() const { return static_cast<int>(t.size()); }
    void validate() const;
};

struct ScalingConstants {
    double c0, c1, c2, c3, c4;
    double wc;
    double nuT;
};

ScalingConstants compute_constants(double q, double T);

/// Nearest-integer KPZ discretization; throws domain_error if rounding breaks monotonicity.
ModelParams discretize(const KPZParams& kpz);

/// Unrounded (n_k, m_k, a_k) from the scaling formula, for diagnostics and tests.
struct RealTriple {
    double n, m, a;
};
std::vector<RealTriple> scaling_values(const KPZParams& kpz);

/// Sufficient conjugation bound plus one.
double default_mu(const std::vector<double>& t, const std::vector<double>& x);

enum class Quantity { t, x, xi, n, m, a };

/// Delta_{k1,k2} of a quantity with the y_0 = 0 convention, 0 <= k1 < k2 <= p.
double delta(Quantity what, int k1, int k2, const std::vector<double>& t,
             const std::vector<double>& x, const std::vector<double>& xi);
double delta(Quantity what, int k1, int k2, const KPZParams& kpz);
long delta(Quantity what, int k1, int k2, const ModelParams& mp);

/// The triple Delta_{k1,k2}(t, x, xi) used by the limit kernels.
struct TXXi {
    double t, x, xi;
};
TXXi delta_txxi(int k1, int k2, const std::vector<double>& t, const std::vector<double>& x,
                const std::vector<double>& xi);

/// Block of row index i (1-based) under the partition (0,n_1] u ... u (n_{p-1},n_p].
int block_of(long i, const std::vector<long>& n);
inline int rstar(int r, int p) { return r < p - 1 ? r : p - 1; }

/// y(i) = y_{r*} for i in block r, with y_0 = 0.
long block_value(const std::vector<long>& y, long i, const std::vector<long>& n);

using EpsilonVector = std::vector<int>;  // entries in {1,2}, length p-1

/// All epsilon vectors consistent with the summation constraint for (k1, k2).
std::vector<EpsilonVector> admissible_eps(int p, int k1, int k2);

inline int chi(int eps, double x) {
    if (eps != 1 && eps != 2) throw domain_error("chi: eps must be 1 or 2");
    return eps == 1 ? (x < 0.0) : (x >= 0.0);
}

/// theta^eps(i), theta(r|eps), Theta(r|k) and the epsilon sign for a fixed theta.
class ThetaTools {
public:
    ThetaTools(std::vector<cplx> theta, std::vector<long> n);

    int p() const { return p_; }
    cplx theta_eps_i(const EpsilonVector& eps, long i) const;
    cplx theta_r(int r, const EpsilonVector& eps) const;
    cplx Theta(int r, int k) const;
    /// theta(r|eps^k) - theta(r|eps^{k+1}) on the same domain as Theta, without the
    /// r = p, k = p-2 exception. This is the coefficient the block expansion produces.
    cplx Theta_diff(int r, int k) const;
    static EpsilonVector eps_k(int k, int p);
    static int eps_sign(const EpsilonVector& eps, int k1, int k2, int p);

private:
    std::vector<cplx> theta_;
    std::vector<long> n_;
    int p_;
};

}  // namespace pngkpz
