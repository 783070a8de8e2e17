#include <doctest.h>

#include <boost/math/special_functions/airy.hpp>
#include <cmath>
#include <random>

#include "pngkpz/integrands.hpp"

using namespace pngkpz;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    for (int n : {4, 10, 16}) {
        const auto& g = gauss_legendre(n);
        for (int deg = 0; deg < 2 * n; ++deg) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += g.w[i] * std::pow(g.x[i], deg);
            CHECK(s == doctest::Approx(deg % 2 ? 0.0 : 2.0 / (deg + 1)).epsilon(1e-13));
        }
    }
}

TEST_CASE("contour quadrature conventions") {
    const auto unit = Contour::circle(0.0, 1.0, 64);
    CHECK(std::abs(quad(unit, [](cplx z) { return 1.0 / z; }) - 1.0) < 1e-15);
    CHECK(std::abs(quad(unit, [](cplx z) { return z; })) < 1e-15);
    const auto shifted = Contour::circle(1.0, 0.5, 64);
    CHECK(std::abs(quad(shifted, [](cplx z) { return 1.0 / (z - 1.0); }) - 1.0) < 1e-15);
    // upward line: (1/2 pi i) int e^{z^2/2} dz over Re z = 0 is 1/sqrt(2 pi)
    const auto line = Contour::vline(0.0, 10.0, 8, 16);
    CHECK(std::abs(quad(line, [](cplx z) { return std::exp(z * z / 2.0); }) - 1.0 / std::sqrt(2 * M_PI)) < 1e-14);
    CHECK_THROWS_AS(quad(unit, [](cplx) { return cplx(NAN, 0.0); }), convergence_error);
}

TEST_CASE("theta indicator integral") {
    for (double r : {1.5, 2.0, 3.0})
        for (int l = -3; l <= 5; ++l) {
            const auto c = Contour::circle(0.0, r, 128);
            const cplx v = quad(c, [l](cplx th) { return ipow(th, l) / (th - 1.0); });
            CHECK(std::abs(v - (l >= 0 ? 1.0 : 0.0)) < 1e-12);
            const auto c2 = Contour::circle(0.0, r, 256);
            CHECK(std::abs(quad(c2, [l](cplx th) { return ipow(th, l) / (th - 1.0); }) - v) < 1e-12);
        }
}

TEST_CASE("Gstar and G basics") {
    const double q = 0.4, wc = 1.0 - std::sqrt(q);
    CHECK(std::abs(gstar(cplx(0.3, 0.7), 0, 0, 0, q) - 1.0) < 1e-15);
    CHECK(std::abs(gstar(0.5, 1, 0, 0, q) - 0.5) < 1e-15);
    CHECK(std::abs(g_norm(wc, 7, 3, 11, q) - 1.0) < 1e-14);
    const cplx w(0.2, -0.35);
    const cplx direct = std::pow(w, 3) * std::pow(1.0 - w, 2 + 4) / std::pow(1.0 - w / (1.0 - q), 2);
    CHECK(rel(gstar(w, 3, 2, 4, q), direct) < 1e-14);
    CHECK(rel(g_norm(w, 3, 2, 4, q), direct / gstar(wc, 3, 2, 4, q)) < 1e-13);
    // no overflow at KPZ-scale exponents near w_c
    CHECK(std::isfinite(std::abs(g_norm(cplx(wc, 0.01), 5000, 5000, 1.5 * 5000, q))));
}

TEST_CASE("group property") {
    std::mt19937_64 g(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> k(-6, 6);
    const double q = 0.35;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        cplx w(0.5 + 0.4 * u(g), 0.4 * u(g));
        if (std::abs(w) < 0.05 || std::abs(w - (1.0 - q)) < 0.05 || std::abs(w - 1.0) < 0.05) w += 0.1;
        const double n = k(g), m = k(g), a = k(g), n2 = k(g), m2 = k(g), a2 = k(g);
        worst = std::max(worst, rel(gstar(w, n + n2, m + m2, a + a2, q), gstar(w, n, m, a, q) * gstar(w, n2, m2, a2, q)));
        worst = std::max(worst, rel(gstar(w, -n, -m, -a, q), 1.0 / gstar(w, n, m, a, q)));
        worst = std::max(worst, rel(g_norm(w, n + n2, m + m2, a + a2, q), g_norm(w, n, m, a, q) * g_norm(w, n2, m2, a2, q)));
        worst = std::max(worst, rel(g_norm(w, -n, -m, -a, q), 1.0 / g_norm(w, n, m, a, q)));
        worst = std::max(worst, rel(g_norm(w, 0, 0, 0, q), 1.0));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("contour expansion identities for 1/Gstar") {
    const double q = 0.5, tau = 0.3;
    const long N = 4;
    const double m = 2, a = 3;
    const auto c = Contour::circle(0.0, tau, 128);
    for (cplx z : {cplx(0.6, 0.2), cplx(-0.45, 0.1), cplx(0.0, 0.9)}) {
        for (long i = 1; i <= N; ++i) {
            const cplx lhs = quad(c, [&](cplx zeta) { return 1.0 / (gstar(zeta, i, m, a, q) * (z - zeta)); });
            cplx rhs = 0.0;
            for (long k = 1; k <= N; ++k)
                rhs += quad(c, [&](cplx zeta) { return std::pow(z, -double(k)) / gstar(zeta, i - k + 1, m, a, q); });
            CHECK(std::abs(lhs - rhs) < 1e-10);
        }
        for (long j = 1; j <= N; ++j) {
            const cplx lhs =
                quad(c, [&](cplx zeta) { return std::pow(z, double(N + 1)) / (gstar(zeta, N + 1 - j, m, a, q) * (z - zeta)); });
            cplx rhs = 0.0;
            for (long k = 1; k <= N; ++k)
                rhs += quad(c, [&](cplx zeta) { return std::pow(z, double(k)) / gstar(zeta, k - j + 1, m, a, q); });
            CHECK(std::abs(lhs - rhs) < 1e-10);
        }
    }
    // the integral of 1/Gstar(.|n+1,m,a) is 1 for n = 0 and 0 for n < 0
    CHECK(std::abs(quad(c, [&](cplx zeta) { return 1.0 / gstar(zeta, 1, m, a, q); }) - 1.0) < 1e-12);
    for (double n : {-1.0, -2.0, -4.0}) CHECK(std::abs(quad(c, [&](cplx zeta) { return 1.0 / gstar(zeta, n + 1, m, a, q); })) < 1e-12);
}

TEST_CASE("telescoping sums of G products") {
    const double q = 0.45, wc = 1.0 - std::sqrt(q);
    const double n = 5, m = 2, a = 3, np = 1, mp = 4, ap = -2;
    for (auto [w1, w2] : {std::pair{cplx(0.3, 0.2), cplx(0.9, -0.4)}, std::pair{cplx(-0.2, 0.5), cplx(0.25, 0.05)}})
        for (auto [N1, N2] : {std::pair{0L, 3L}, std::pair{2L, 7L}}) {
            cplx lhs = 0.0;
            for (long l = N1 + 1; l <= N2; ++l) lhs += 1.0 / (g_norm(w1, n - l + 1, m, a, q) * g_norm(w2, l - np, mp, ap, q));
            const cplx rhs = wc / (w1 - w2) *
                             (1.0 / (g_norm(w1, n - N2, m, a, q) * g_norm(w2, N2 - np, mp, ap, q)) -
                              1.0 / (g_norm(w1, n - N1, m, a, q) * g_norm(w2, N1 - np, mp, ap, q)));
            CHECK(rel(lhs, rhs) < 1e-10);
        }
}

TEST_CASE("G converges to the cubic exponential under KPZ scaling") {
    const double q = 0.5, x = 0.3, xi = -0.4, v = 0.2;
    const auto c = compute_constants(q, 1.0);
    const cplx w(0.4, 0.6);
    const cplx target = script_g(w, 1.0, x, xi - v);
    double prev = 1e9;
    for (double K : {1e3, 1e4, 1e5, 1e6, 1e7}) {
        const double n = K - c.c1 * x * std::pow(K, 2.0 / 3.0) + c.c0 * v * std::cbrt(K);
        const double m = K + c.c1 * x * std::pow(K, 2.0 / 3.0);
        const double a = c.c2 * K + c.c3 * xi * std::cbrt(K);
        const double err = std::abs(g_norm(c.wc + c.c4 * w / std::cbrt(K), n, m, a, q) - target);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-2);
}

TEST_CASE("script G") {
    CHECK(std::abs(script_g(0.0, 1.3, 0.2, -0.7) - 1.0) < 1e-15);
    const cplx w(0.3, 1.1);
    CHECK(rel(script_g(w, 2.0, 0.0, 0.0), std::exp(2.0 * w * w * w / 3.0)) < 1e-14);
    // group law in (t, x, xi) after the t^{2/3}, t^{1/3} weighting
    const cplx prod = script_g(w, 1.0, 0.2, 0.1) * script_g(w, 1.0, -0.5, 0.3);
    CHECK(rel(prod, std::exp(2.0 * w * w * w / 3.0 + (0.2 - 0.5) * w * w - (0.1 + 0.3) * w)) < 1e-14);
}

TEST_CASE("conjugation factors") {
    const std::vector<long> n{2, 5, 9};
    for (long i = 1; i <= 9; ++i) CHECK(conjugation_c(i, i, n, 1.3, 2.0) == doctest::Approx(1.0));
    for (long i = 1; i <= 9; ++i)
        for (long j = 1; j <= 9; ++j) {
            CHECK(conjugation_c(i, j, n, 0.0, 2.0) == 1.0);
            for (long k = 1; k <= 9; ++k)
                CHECK(conjugation_c(i, j, n, 0.7, 1.5) * conjugation_c(j, k, n, 0.7, 1.5) ==
                      doctest::Approx(conjugation_c(i, k, n, 0.7, 1.5)).epsilon(1e-13));
        }
    // d(i) = exp(mu (n(i) - i) / nu_T) with n(i) the right end of the block of i
    CHECK(log_conj_d(3, n, 0.5, 2.0) == doctest::Approx(0.5 * (5 - 3) / 2.0));
}

TEST_CASE("Airy function against an independent implementation") {
    // absolute error on the oscillatory side, relative error on the decaying side
    double worst_abs = 0.0, worst_rel = 0.0;
    for (double s = -30.0; s <= 30.0; s += 0.37) {
        const double ref = boost::math::airy_ai(s), refp = boost::math::airy_ai_prime(s);
        if (s <= 0.0) {
            worst_abs = std::max({worst_abs, std::fabs(airy(s) - ref), std::fabs(airy_prime(s) - refp) / std::sqrt(1.0 - s)});
        } else {
            worst_rel = std::max({worst_rel, std::fabs(airy(s) / ref - 1.0), std::fabs(airy_prime(s) / refp - 1.0)});
        }
    }
    CHECK(worst_abs < 1e-12);
    CHECK(worst_rel < 1e-10);
    CHECK(airy(0.0) == doctest::Approx(0.3550280538878172).epsilon(1e-14));
    CHECK(airy(8.0) < 1e-7);
    CHECK(airy(8.0) > 0.0);
    CHECK_THROWS_AS(airy(31.0), domain_error);
    CHECK(std::isfinite(airy_unchecked(-45.0)));
}

TEST_CASE("Airy differential equation") {
    // fourth-order central difference of Ai'
    const double h = 1e-3;
    for (double s : {-2.0, 0.0, 2.0, -7.5, 4.3}) {
        const double d2 = (-airy_prime(s + 2 * h) + 8 * airy_prime(s + h) - 8 * airy_prime(s - h) + airy_prime(s - 2 * h)) / (12 * h);
        CHECK(std::fabs(d2 - s * airy(s)) < 1e-8);
    }
}

TEST_CASE("Airy operator kernel") {
    CHECK(airy_op(1.0, 0.0, 0.4, 0.3, -0.4) == doctest::Approx(airy(0.4 - 0.4 - 0.3)).epsilon(1e-14));
    for (double u : {-0.5, 0.3, 1.2})
        for (double v : {-0.4, 0.1, 0.9}) {
            for (auto [t, x, xi] : {std::tuple{1.0, 0.0, 0.0}, std::tuple{2.0, 0.3, -0.5}, std::tuple{0.7, -0.4, 0.8}}) {
                const double cf = airy_op(t, x, xi, u, v);
                CHECK(std::fabs(cf - airy_op_contour(t, x, xi, u, v, 1.0)) < 1e-8);
                CHECK(std::fabs(cf - airy_op_contour(t, x, xi, u, v, 1.7)) < 1e-8);
                CHECK(airy_op(t, x, xi, u + 0.8, v + 0.8) == doctest::Approx(cf).epsilon(1e-12));
            }
        }
    CHECK_THROWS_AS(airy_op(0.0, 0.0, 0.0, 0.0, 0.0), domain_error);
}

TEST_CASE("line halfwidth bounds the Gaussian tail") {
    for (double curv : {0.5, 1.0, 4.0}) {
        const double y = line_halfwidth(curv, 40.0);
        CHECK(curv * y * y >= 40.0 - 1e-9);
    }
}
