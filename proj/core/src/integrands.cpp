#include "pngkpz/integrands.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace pngkpz {

namespace {

constexpr double kPi = 3.14159265358979323846;

GLRule make_gl(int n) {
    GLRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
}

}  // namespace

const GLRule& gauss_legendre(int n) {
    if (n < 1) throw domain_error("gauss_legendre: order must be positive");
    static std::map<int, GLRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gl(n)).first;
    return it->second;
}

Contour Contour::circle(cplx center, double radius, int n) {
    if (n < 8) throw domain_error("contour needs at least 8 nodes");
    if (!(radius > 0.0)) throw domain_error("circle radius must be positive");
    Contour c;
    c.kind = Kind::circle;
    c.center = center;
    c.radius = radius;
    c.z.resize(n);
    c.w.resize(n);
    for (int k = 0; k < n; ++k) {
        const cplx e = std::polar(radius, 2.0 * kPi * k / n);
        c.z[k] = center + e;
        c.w[k] = e / static_cast<double>(n);  // dz / (2 pi i) = r e^{i phi} dphi / (2 pi)
    }
    return c;
}

Contour Contour::vline(double d, double halfwidth, int panels, int nodes_per_panel) {
    if (panels * nodes_per_panel < 8) throw domain_error("contour needs at least 8 nodes");
    if (!(halfwidth > 0.0)) throw domain_error("line halfwidth must be positive");
    Contour c;
    c.kind = Kind::vline;
    c.abscissa = d;
    c.halfwidth = halfwidth;
    const GLRule& gl = gauss_legendre(nodes_per_panel);
    const double h = 2.0 * halfwidth / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = -halfwidth + (p + 0.5) * h;
        for (int k = 0; k < nodes_per_panel; ++k) {
            c.z.emplace_back(d, mid + 0.5 * h * gl.x[k]);
            c.w.emplace_back(0.5 * h * gl.w[k] / (2.0 * kPi), 0.0);  // i dy / (2 pi i)
        }
    }
    return c;
}

cplx quad(const Contour& c, const std::function<cplx(cplx)>& f) {
    cplx s = 0.0;
    for (int k = 0; k < c.size(); ++k) {
        const cplx v = f(c.z[k]);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw convergence_error("quad: non-finite integrand value");
        s += v * c.w[k];
    }
    return s;
}

cplx log_gstar(cplx w, double n, double m, double a, double q) {
    const cplx u = 1.0 - w / (1.0 - q);
    if (w == 0.0 || w == 1.0 || u == 0.0) throw domain_error("gstar: evaluation at a pole");
    return n * std::log(w) + (a + m) * std::log(1.0 - w) - m * std::log(u);
}

cplx gstar(cplx w, double n, double m, double a, double q) { return std::exp(log_gstar(w, n, m, a, q)); }

cplx log_g_norm(cplx w, double n, double m, double a, double q) {
    const double wc = 1.0 - std::sqrt(q);
    return log_gstar(w, n, m, a, q) - log_gstar(wc, n, m, a, q).real();
}

cplx g_norm(cplx w, double n, double m, double a, double q) { return std::exp(log_g_norm(w, n, m, a, q)); }

cplx log_script_g(cplx w, double t, double x, double xi) {
    return t * w * w * w / 3.0 + std::pow(t, 2.0 / 3.0) * x * w * w - std::cbrt(t) * xi * w;
}

cplx script_g(cplx w, double t, double x, double xi) { return std::exp(log_script_g(w, t, x, xi)); }

double log_conj_d(long i, const std::vector<long>& n, double mu, double nuT) {
    return mu * static_cast<double>(block_value(n, i, n) - i) / nuT;
}

double conjugation_c(long i, long j, const std::vector<long>& n, double mu, double nuT) {
    return std::exp(log_conj_d(i, n, mu, nuT) - log_conj_d(j, n, mu, nuT));
}

namespace {

// Ai and Ai' from the line integral (1/pi) int_0^inf Re[(-w)^deriv exp(w^3/3 - s w)] dy,
// w = D + i y. The real exponent is D^3/3 - sD - D y^2, so the tail is Gaussian.
double airy_line(double s, bool deriv) {
    double D, h;
    if (s >= 1.0) {
        D = std::sqrt(s);
        h = 0.25;
    } else {
        D = 0.7;
        h = 0.1;
    }
    const double peak = D * D * D / 3.0 - s * D;
    const double Y = std::sqrt((40.0 + std::max(0.0, peak)) / D) + 0.5;
    const int panels = static_cast<int>(std::ceil(Y / h));
    const double hp = Y / panels;
    const GLRule& gl = gauss_legendre(12);
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * hp;
        double part = 0.0;
        for (size_t k = 0; k < gl.x.size(); ++k) {
            const double y = mid + 0.5 * hp * gl.x[k];
            const double mag = std::exp(peak - D * y * y);
            const double ph = (D * D - s) * y - y * y * y / 3.0;
            const double c = std::cos(ph);
            part += gl.w[k] * (deriv ? mag * (-D * c + y * std::sin(ph)) : mag * c);
        }
        acc += 0.5 * hp * part;
    }
    return acc / kPi;
}

// Large negative argument expansions Ai(-z), Ai'(-z) with the standard u_k, v_k.
double airy_neg_asym(double z, bool deriv) {
    const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
    const double c = std::cos(zeta - kPi / 4.0), sn = std::sin(zeta - kPi / 4.0);
    double even = 0.0, odd = 0.0, u = 1.0, zpow = 1.0, last = 1e300;
    for (int k = 0; k < 60; ++k) {
        if (k > 0) u *= (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
        const double coef = deriv ? -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u : u;
        const double term = coef / zpow;
        if (std::fabs(term) > last) break;
        last = std::fabs(term);
        const double sgn = ((k / 2) % 2) ? -1.0 : 1.0;
        if (k % 2 == 0) even += sgn * term;
        else odd += sgn * term;
        zpow *= zeta;
    }
    const double rp = 1.0 / std::sqrt(kPi);
    if (!deriv) return rp / std::pow(z, 0.25) * (c * even + sn * odd);
    return rp * std::pow(z, 0.25) * (sn * even - c * odd);
}

}  // namespace

double airy_unchecked(double s) { return s < -8.0 ? airy_neg_asym(-s, false) : airy_line(s, false); }

double airy_prime_unchecked(double s) { return s < -8.0 ? airy_neg_asym(-s, true) : airy_line(s, true); }

double airy(double s) {
    if (!(s >= -30.0 && s <= 30.0)) throw domain_error("airy: argument outside [-30, 30]");
    return airy_unchecked(s);
}

double airy_prime(double s) {
    if (!(s >= -30.0 && s <= 30.0)) throw domain_error("airy_prime: argument outside [-30, 30]");
    return airy_prime_unchecked(s);
}

double airy_op(double t, double x, double xi, double u, double v) {
    if (!(t > 0.0)) throw domain_error("airy_op: t must be positive");
    const double s = xi + std::pow(t, -1.0 / 3.0) * (v - u);
    return std::pow(t, -1.0 / 3.0) * airy_unchecked(x * x + s) * std::exp(2.0 / 3.0 * x * x * x + x * s);
}

double line_halfwidth(double curv, double budget) {
    if (!(curv > 0.0)) throw domain_error("line_halfwidth: integrand does not decay on this line");
    return std::sqrt(budget / curv);
}

double airy_op_contour(double t, double x, double xi, double u, double v, double D) {
    if (!(t > 0.0)) throw domain_error("airy_op: t must be positive");
    const double curv = t * D + std::pow(t, 2.0 / 3.0) * x;
    const double Y = line_halfwidth(curv, 45.0);
    const Contour c = Contour::vline(D, Y, static_cast<int>(std::ceil(2.0 * Y / 0.1)), 12);
    const cplx r = quad(c, [&](cplx w) { return std::exp(log_script_g(w, t, x, xi) + w * (u - v)); });
    return r.real();
}

}  // namespace pngkpz
