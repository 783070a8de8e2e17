#include <doctest.h>

#include <cmath>

#include "pngkpz/exact.hpp"
#include "pngkpz/oracle.hpp"

using namespace pngkpz;

namespace {

std::vector<cplx> sample_theta(int p) {
    std::vector<cplx> th;
    for (int k = 1; k < p; ++k) th.push_back(std::polar(2.0, 0.3 + k));
    return th;
}

}  // namespace

TEST_CASE("radii rule") {
    for (int p : {2, 3, 4})
        for (int k1 = 0; k1 < p; ++k1)
            for (int k2 = k1 + 1; k2 <= p; ++k2)
                for (const auto& e : admissible_eps(p, k1, k2))
                    for (double q : {0.2, 0.5, 0.8}) CHECK_NOTHROW(radii_for_eps(e, k1, k2, p, q).validate(e, q));
    auto rc = radii_for_eps({1, 1}, 0, 3, 3, 0.5);
    std::swap(rc.tau1, rc.tau2);
    CHECK_THROWS_AS(rc.validate({1, 1}, 0.5), domain_error);
    rc = radii_for_eps({1, 1}, 0, 3, 3, 0.5);
    std::swap(rc.R[1], rc.R[2]);
    CHECK_THROWS_AS(rc.validate({1, 1}, 0.5), domain_error);
    rc = radii_for_eps({1, 1}, 0, 3, 3, 0.5);
    rc.R[3] = 0.9;
    CHECK_THROWS_AS(rc.validate({1, 1}, 0.5), domain_error);
}

TEST_CASE("single point law") {
    for (double q : {0.3, 0.5})
        for (long a = 1; a <= 5; ++a) CHECK(std::fabs(single_point_prob(1, 1, a, q) - (1.0 - std::pow(q, a))) < 1e-10);
    for (auto [n, m, a] : {std::tuple{3L, 2L, 4L}, std::tuple{2L, 5L, 3L}, std::tuple{4L, 4L, 7L}})
        CHECK(std::fabs(single_point_prob(n, m, a, 0.4) - dp_exact_prob({0.4, {m}, {n}, {a}}).prob) < 1e-10);
    CHECK(single_point_prob(2, 2, 0, 0.5) == 0.0);
}

TEST_CASE("exact formula against the dynamic program") {
    CHECK(multipoint_prob_exact({0.5, {1, 2}, {1, 2}, {1, 1}}).value == doctest::Approx(std::pow(0.5, 4)).epsilon(1e-9));
    for (const ModelParams& mp : {ModelParams{0.4, {1, 2}, {1, 3}, {2, 4}}, ModelParams{0.6, {1, 2}, {1, 3}, {2, 4}},
                                  ModelParams{0.5, {2, 3}, {2, 3}, {3, 5}}, ModelParams{0.5, {1, 2, 3}, {1, 2, 4}, {2, 3, 5}},
                                  ModelParams{0.3, {1, 3, 4}, {2, 3, 4}, {2, 4, 6}}}) {
        const auto r = multipoint_prob_exact(mp);
        CHECK(std::fabs(r.value - dp_exact_prob(mp).prob) < 1e-8);
        CHECK(std::fabs(r.imag) < 1e-8);
    }
}

TEST_CASE("theta determinant equals the discrete orthogonalized determinant") {
    for (const ModelParams& mp : {ModelParams{0.4, {1, 2}, {1, 3}, {2, 4}}, ModelParams{0.5, {1, 2, 3}, {1, 2, 4}, {2, 3, 5}}}) {
        const auto th = sample_theta(mp.p());
        const cplx d = ExactFormula(mp).det_theta(th), ref = discrete_L(mp, th).determinant();
        CHECK(std::abs(d - ref) < 1e-9);
    }
}

TEST_CASE("structure of A and B") {
    const ModelParams mp{0.4, {1, 2}, {1, 3}, {2, 4}};
    const auto th = sample_theta(2);
    // B is supported on s < r* and r* <= 1 when p = 2
    CHECK(build_B(th, mp).M.cwiseAbs().maxCoeff() == 0.0);
    const ModelParams mp3{0.5, {1, 2, 3}, {1, 2, 4}, {2, 3, 5}};
    const auto B3 = build_B(sample_theta(3), mp3);
    // supported on column block s < r*, so only rows in blocks 2, 3 against columns in block 1
    for (long i = 1; i <= 4; ++i)
        for (long j = 1; j <= 4; ++j)
            if (block_of(j, mp3.n) >= rstar(block_of(i, mp3.n), 3)) CHECK(B3.M(i - 1, j - 1) == cplx(0.0));
    CHECK(B3.M.cwiseAbs().maxCoeff() > 0.0);
    CHECK(std::abs(B3(3, 4, 1, 1) - B3.M(3, 0)) == 0.0);
}

TEST_CASE("conjugation and contour invariance") {
    const ModelParams mp{0.5, {1, 2, 3}, {1, 2, 4}, {2, 3, 5}};
    const auto th = sample_theta(3);
    ExactSettings s0;
    const cplx d0 = ExactFormula(mp, s0).det_theta(th);
    ExactSettings s1 = s0;
    s1.mu = 1.0;
    CHECK(std::abs(ExactFormula(mp, s1).det_theta(th) - d0) < 1e-8 * std::abs(d0));
    ExactSettings s2 = s0;
    s2.delta = 0.12;
    s2.spread = 0.7;
    CHECK(std::abs(ExactFormula(mp, s2).det_theta(th) - d0) < 1e-8 * std::abs(d0));
    // real data: det(conj theta) = conj det(theta)
    std::vector<cplx> thc;
    for (cplx t : th) thc.push_back(std::conj(t));
    CHECK(std::abs(ExactFormula(mp, s0).det_theta(thc) - std::conj(d0)) < 1e-10);
}

TEST_CASE("consecutive differences of the L_k matrices") {
    // (L_k - L_{k-1})(i,j) = 1{i=j in block k} + 1{i in block k, j <= n_{min(k-1,p-2)}} B(i,j)
    //                      + 1{i > n_k, j <= n_k, k <= p-2} L_k(i,j) - 1{i > n_{k-1}, j <= n_{k-1}, k <= p-1} L_{k-1}(i,j)
    const ModelParams mp{0.5, {1, 2, 3}, {1, 2, 4}, {2, 3, 5}};
    const int p = 3;
    const long N = 4;
    const double q = 0.5, wc = 1.0 - std::sqrt(q);
    const auto rc = radii_for_eps({1, 1}, 0, p, p, q, 0.15, 0.5);
    std::vector<Eigen::MatrixXcd> Lk(p + 1, Eigen::MatrixXcd::Zero(N, N));
    for (int k = 1; k <= p; ++k) Lk[k] = lk_matrix(mp, k, rc, 128);
    Eigen::MatrixXcd Bf(N, N);
    const auto c = Contour::circle(0.0, 0.7 * wc, 128);
    for (long i = 1; i <= N; ++i)
        for (long j = 1; j <= N; ++j)
            Bf(i - 1, j - 1) = quad(c, [&](cplx w) {
                                   return 1.0 / g_norm(w, i - j + 1, block_value(mp.m, i, mp.n) - block_value(mp.m, j, mp.n),
                                                       block_value(mp.a, i, mp.n) - block_value(mp.a, j, mp.n), q);
                               }) / wc;
    for (int k = 1; k <= p; ++k) {
        const long nk1 = k > 1 ? mp.n[k - 2] : 0, nk = mp.n[k - 1];
        const int kmin = std::min(k - 1, p - 2);
        const long nmin = kmin > 0 ? mp.n[kmin - 1] : 0;
        Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(N, N);
        for (long i = 1; i <= N; ++i)
            for (long j = 1; j <= N; ++j) {
                cplx v = 0.0;
                if (i > nk1 && i <= nk && i == j) v += 1.0;
                if (i > nk1 && i <= nk && j <= nmin) v += Bf(i - 1, j - 1);
                if (i > nk && j <= nk && k <= p - 2) v += Lk[k](i - 1, j - 1);
                if (i > nk1 && j <= nk1 && k <= p - 1) v -= Lk[k - 1](i - 1, j - 1);
                R(i - 1, j - 1) = v;
            }
        CHECK((R - (Lk[k] - Lk[k - 1])).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("exact formula domain and budget errors") {
    CHECK_THROWS_AS(multipoint_prob_exact({0.5, {1, 2}, {2, 2}, {1, 1}}), domain_error);
    ExactSettings s;
    s.max_N = 3;
    CHECK_THROWS_AS(multipoint_prob_exact({0.5, {1, 2}, {1, 4}, {2, 4}}, s), budget_error);
    CHECK(multipoint_prob_exact({0.5, {1, 2}, {1, 3}, {0, 4}}).value == 0.0);
}
