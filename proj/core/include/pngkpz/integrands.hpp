#pragma once

#include <functional>
#include <vector>

#include "pngkpz/params.hpp"

namespace pngkpz {

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
struct GLRule {
    std::vector<double> x, w;
};
const GLRule& gauss_legendre(int n);

/// Discretized contour. Weights already include dz / (2 pi i) and the orientation,
/// so that sum_k f(z_k) w_k approximates the normalized integral (1/2 pi i) int f dz.
struct Contour {
    enum class Kind { circle, vline };
    Kind kind = Kind::circle;
    cplx center = 0.0;
    double radius = 1.0;
    double abscissa = 0.0;
    double halfwidth = 0.0;
    std::vector<cplx> z, w;

    int size() const { return static_cast<int>(z.size()); }

    /// Counterclockwise circle with n trapezoid nodes.
    static Contour circle(cplx center, double radius, int n);
    /// Upward line Re z = d, truncated to |Im z| <= halfwidth, composite GL.
    static Contour vline(double d, double halfwidth, int panels, int nodes_per_panel = 16);
};

/// sum_k f(z_k) w_k; throws convergence_error on a non-finite node value.
cplx quad(const Contour& c, const std::function<cplx(cplx)>& f);

/// log G*(w|n,m,a) = n log w + (a+m) log(1-w) - m log(1 - w/(1-q)). For integer
/// exponents the exponential is branch independent.
cplx log_gstar(cplx w, double n, double m, double a, double q);
cplx gstar(cplx w, double n, double m, double a, double q);

/// G = G*(w|.) / G*(w_c|.), evaluated through the log difference.
cplx log_g_norm(cplx w, double n, double m, double a, double q);
cplx g_norm(cplx w, double n, double m, double a, double q);

/// The limit function exp(t w^3/3 + t^{2/3} x w^2 - t^{1/3} xi w).
cplx log_script_g(cplx w, double t, double x, double xi);
cplx script_g(cplx w, double t, double x, double xi);

/// log of d(i) = exp(mu (n(i) - i) / nu_T); c(i,j) = d(i) / d(j).
double log_conj_d(long i, const std::vector<long>& n, double mu, double nuT);
double conjugation_c(long i, long j, const std::vector<long>& n, double mu, double nuT);

/// Airy function and derivative on [-30, 30]; domain_error outside.
double airy(double s);
double airy_prime(double s);
/// Unchecked variants: any real s (tails handled by the same hybrid).
double airy_unchecked(double s);
double airy_prime_unchecked(double s);

/// A[t,x,xi](u,v) in closed form.
double airy_op(double t, double x, double xi, double u, double v);
/// The same kernel from its defining line integral over Re w = D.
double airy_op_contour(double t, double x, double xi, double u, double v, double D = 1.0);

/// Width |Im w| on Re w = d beyond which |exp(t w^3/3 + s w^2 + ...)| has decayed
/// by exp(-budget), for an integrand with quadratic coefficient -curv * y^2.
double line_halfwidth(double curv, double budget = 40.0);

}  // namespace pngkpz
