#include "pngkpz/exact.hpp"

#include <tbb/parallel_for.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>

namespace pngkpz {

namespace {

constexpr double kPi = 3.14159265358979323846;

long yk(const std::vector<long>& y, int k) { return k == 0 ? 0L : y[k - 1]; }

// Per-node logarithms so that log G(w|n,m,a) is a cheap linear combination.
struct NodeLogs {
    cplx lw, l1, lu;
};

struct LogG {
    double q, lwc, l1c, luc;
    explicit LogG(double q_) : q(q_) {
        const double wc = 1.0 - std::sqrt(q);
        lwc = std::log(wc);
        l1c = std::log(1.0 - wc);
        luc = std::log(1.0 - wc / (1.0 - q));
    }
    NodeLogs at(cplx w) const {
        const cplx u = 1.0 - w / (1.0 - q);
        if (w == 0.0 || w == 1.0 || u == 0.0) throw domain_error("contour node at a pole of G");
        return {std::log(w), std::log(1.0 - w), std::log(u)};
    }
    cplx operator()(const NodeLogs& L, double n, double m, double a) const {
        return n * (L.lw - lwc) + (a + m) * (L.l1 - l1c) - m * (L.lu - luc);
    }
};

struct Nodes {
    std::vector<cplx> z, w;
    std::vector<NodeLogs> logs;
    int size() const { return static_cast<int>(z.size()); }
};

Nodes make_nodes(const Contour& c, const LogG& lg) {
    Nodes nd{c.z, c.w, {}};
    for (const auto& z : c.z) nd.logs.push_back(lg.at(z));
    return nd;
}

Nodes circle0(double r, int K, const LogG& lg) { return make_nodes(Contour::circle(0.0, r, K), lg); }
Nodes circle1(double r, int K, const LogG& lg) { return make_nodes(Contour::circle(1.0, r, K), lg); }

Eigen::MatrixXcd cauchy(const Nodes& a, const Nodes& b) {
    Eigen::MatrixXcd C(a.size(), b.size());
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j) C(i, j) = 1.0 / (a.z[i] - b.z[j]);
    return C;
}

// Diagonal weight-times-G factor for z_k with arguments Delta_k(n,m,a).
Eigen::VectorXcd zdiag(const Nodes& z, const LogG& lg, double n, double m, double a) {
    Eigen::VectorXcd d(z.size());
    for (int b = 0; b < z.size(); ++b) d(b) = z.w[b] * std::exp(lg(z.logs[b], n, m, a));
    return d;
}

struct Geometry {
    const ModelParams& mp;
    int p;
    long N;
    double q, wc;
    LogG lg;
    explicit Geometry(const ModelParams& m)
        : mp(m), p(m.p()), N(m.N()), q(m.q), wc(1.0 - std::sqrt(m.q)), lg(m.q) {}
    long nb(long i) const { return block_value(mp.n, i, mp.n); }
    long mb(long i) const { return block_value(mp.m, i, mp.n); }
    long ab(long i) const { return block_value(mp.a, i, mp.n); }
    double d(Quantity w, int k) const { return static_cast<double>(delta(w, k - 1, k, mp)); }
};

// Rows: weight / G(zeta1 | i - n_k1, m(i) - m_k1, a(i) - a_k1) for i > n_k1.
Eigen::MatrixXcd zeta1_rows(const Geometry& g, const Nodes& z1, int k1) {
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(g.N, z1.size());
    for (long i = yk(g.mp.n, k1) + 1; i <= g.N; ++i)
        for (int a = 0; a < z1.size(); ++a)
            U(i - 1, a) = z1.w[a] * std::exp(-g.lg(z1.logs[a], i - yk(g.mp.n, k1),
                                                   g.mb(i) - yk(g.mp.m, k1), g.ab(i) - yk(g.mp.a, k1)));
    return U;
}

// Columns: weight / G(zeta2 | n_k2 - j + 1, m_k2 - m(j), a_k2 - a(j)) for j <= n_k2.
Eigen::MatrixXcd zeta2_cols(const Geometry& g, const Nodes& z2, int k2) {
    Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(z2.size(), g.N);
    for (long j = 1; j <= yk(g.mp.n, k2); ++j)
        for (int c = 0; c < z2.size(); ++c)
            V(c, j - 1) = z2.w[c] * std::exp(-g.lg(z2.logs[c], yk(g.mp.n, k2) - j + 1,
                                                   yk(g.mp.m, k2) - g.mb(j), yk(g.mp.a, k2) - g.ab(j)));
    return V;
}

// Left part of the chain zeta1 -> z_{k1+1} -> ... -> z_last, including the
// diagonal G factors of z_{k1+1}..z_last when include_last, else up to z_last - 1
// with the coupling into z_last.
Eigen::MatrixXcd chain_left(const Geometry& g, const RadiiConfig& rc, int k1, int last, bool include_last,
                            const Nodes& z1, std::vector<Nodes>& zs, int Kz) {
    zs.clear();
    for (int k = k1 + 1; k <= last; ++k) zs.push_back(circle1(rc.R[k], Kz, g.lg));
    Eigen::MatrixXcd acc = zeta1_rows(g, z1, k1);
    Eigen::MatrixXcd C0 = cauchy(zs[0], z1).transpose();  // 1 / (z - zeta1)
    if (k1 == 0)
        for (int a = 0; a < z1.size(); ++a)
            for (int b = 0; b < zs[0].size(); ++b) C0(a, b) *= (1.0 - z1.z[a]) / (1.0 - zs[0].z[b]);
    acc = acc * C0;
    for (int k = k1 + 1; k <= last; ++k) {
        const Nodes& zk = zs[k - k1 - 1];
        if (k == last && !include_last) break;
        acc = acc * zdiag(zk, g.lg, g.d(Quantity::n, k), g.d(Quantity::m, k), g.d(Quantity::a, k)).asDiagonal();
        if (k < last) acc = acc * cauchy(zk, zs[k - k1]);
    }
    return acc;
}

double auto_delta(long N, double q) {
    const double cap = std::min(0.25, 0.3 * std::sqrt(q));
    return std::clamp(0.6 / std::cbrt(static_cast<double>(N)), 0.04, cap);
}

int round_nodes(double K, int cap) {
    int k = static_cast<int>(std::ceil(K / 8.0)) * 8;
    return std::clamp(k, 32, cap);
}

}  // namespace

cplx BlockMatrixC::operator()(int r, long i, int s, long j) const {
    if (block_of(i, n) != r || block_of(j, n) != s) throw domain_error("BlockMatrixC: index outside block");
    return M(i - 1, j - 1);
}

void RadiiConfig::validate(const EpsilonVector& eps, double q) const {
    const double wc = 1.0 - std::sqrt(q);
    if (!(0.0 < tau2 && tau2 < tau1 && tau1 < wc)) throw domain_error("radii: need tau2 < tau1 < 1 - sqrt(q)");
    if (!(tau2 < tau3 && tau3 < wc)) throw domain_error("radii: need tau2 < tau3 < 1 - sqrt(q)");
    for (int k = k1 + 1; k <= k2; ++k)
        if (!(R[k] > q && R[k] < std::sqrt(q))) throw domain_error("radii: z radius outside (q, sqrt q)");
    for (int k = k1 + 1; k < k2; ++k) {
        const bool up = eps[k - 1] == 2;
        if (up ? !(R[k] < R[k + 1]) : !(R[k] > R[k + 1]))
            throw domain_error("radii: ordering does not match epsilon");
    }
}

RadiiConfig radii_for_eps(const EpsilonVector& eps, int k1, int k2, int p, double q, double delta,
                          double spread) {
    if (!(0 <= k1 && k1 < k2 && k2 <= p)) throw domain_error("radii_for_eps: need 0 <= k1 < k2 <= p");
    if (static_cast<int>(eps.size()) != std::max(p - 1, 0)) throw domain_error("radii_for_eps: eps length");
    const double sq = std::sqrt(q), wc = 1.0 - sq;
    RadiiConfig rc;
    rc.k1 = k1;
    rc.k2 = k2;
    rc.tau1 = wc * (1.0 - delta);
    rc.tau2 = wc * (1.0 - 2.0 * delta);
    rc.tau3 = wc * (1.0 - 1.5 * delta);
    rc.R.assign(p + 1, 0.0);
    // Offsets x_{k+1} = x_k + (-1)^{eps_k} / 2^{k-k1}. Only their order matters, so the
    // distinct offsets are ranked and the circles cross the real axis at evenly spaced
    // points w_c (1 + delta * rho), rho in [0.5, 0.5 + 2 spread]. Keeping every contour
    // within O(delta) of the critical point avoids cancellation for large N.
    std::vector<double> x(k2 - k1, 0.0);
    for (int k = k1 + 2; k <= k2; ++k)
        x[k - k1 - 1] = x[k - k1 - 2] + (eps[k - 2] == 2 ? 1.0 : -1.0) / std::ldexp(1.0, k - 1 - k1);
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const int L = static_cast<int>(x.size());
    for (int k = k1 + 1; k <= k2; ++k) {
        const int rank = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), x[k - k1 - 1]) - sorted.begin());
        // larger rank -> larger radius -> crossing closer to w_c
        const double rho = 0.5 + 2.0 * spread * (L - rank) / (L + 1.0);
        rc.R[k] = sq - wc * delta * rho;
    }
    rc.validate(eps, q);
    return rc;
}

Eigen::MatrixXcd lk_matrix(const ModelParams& mp, int k, const RadiiConfig& rc, int Kzeta) {
    Geometry g(mp);
    const Nodes z1 = circle0(rc.tau1, Kzeta, g.lg), z2 = circle0(rc.tau2, Kzeta, g.lg);
    Eigen::MatrixXcd U(g.N, Kzeta);
    for (long i = 1; i <= g.N; ++i)
        for (int a = 0; a < Kzeta; ++a)
            U(i - 1, a) = z1.w[a] * std::exp(g.lg(z1.logs[a], yk(mp.n, k) - i, yk(mp.m, k) - g.mb(i),
                                                  yk(mp.a, k) - g.ab(i)));
    return U * cauchy(z1, z2) * zeta2_cols(g, z2, k) / g.wc;
}

Eigen::MatrixXcd lcd_matrix(const ModelParams& mp, int k1, int k2, const RadiiConfig& rc, int Kzeta, int Kz) {
    Geometry g(mp);
    const Nodes z1 = circle0(rc.tau1, Kzeta, g.lg), z2 = circle0(rc.tau2, Kzeta, g.lg);
    std::vector<Nodes> zs;
    Eigen::MatrixXcd acc = chain_left(g, rc, k1, k2, true, z1, zs, Kz);
    return acc * cauchy(zs.back(), z2) * zeta2_cols(g, z2, k2) / g.wc;
}

Eigen::MatrixXcd j_matrix(const ModelParams& mp, int k1, int k2, const RadiiConfig& rc, int Kzeta, int Kz) {
    if (k2 >= mp.p()) throw domain_error("j_matrix: need k2 < p");
    Geometry g(mp);
    const Nodes z1 = circle0(rc.tau1, Kzeta, g.lg);
    std::vector<Nodes> zs;
    Eigen::MatrixXcd acc = chain_left(g, rc, k1, k2, false, z1, zs, Kz);
    const Nodes& zl = zs.back();
    Eigen::MatrixXcd Vz = Eigen::MatrixXcd::Zero(zl.size(), g.N);
    for (long j = yk(mp.n, k2 - 1) + 1; j <= yk(mp.n, k2); ++j)
        for (int b = 0; b < zl.size(); ++b)
            Vz(b, j - 1) = zl.w[b] * std::exp(g.lg(zl.logs[b], j - 1 - yk(mp.n, k2 - 1), g.d(Quantity::m, k2),
                                                   g.d(Quantity::a, k2)));
    return acc * Vz / g.wc;
}

Eigen::MatrixXcd lp_matrix(const ModelParams& mp, const RadiiConfig& rc, int Kzeta, int Kz) {
    Geometry g(mp);
    const int p = g.p;
    const Nodes z2 = circle0(rc.tau2, Kzeta, g.lg), zp = circle1(rc.R[p], Kz, g.lg);
    Eigen::MatrixXcd Uz = Eigen::MatrixXcd::Zero(g.N, Kz);
    for (long i = yk(mp.n, p - 1) + 1; i <= g.N; ++i)
        for (int b = 0; b < Kz; ++b)
            Uz(i - 1, b) = zp.w[b] * std::exp(g.lg(zp.logs[b], mp.n[p - 1] - i, g.d(Quantity::m, p),
                                                   g.d(Quantity::a, p)));
    return Uz * cauchy(zp, z2) * zeta2_cols(g, z2, p) / g.wc;
}

Eigen::MatrixXcd b_basis(const ModelParams& mp, double tau, int Kzeta) {
    Geometry g(mp);
    const Nodes w = circle0(tau, Kzeta, g.lg);
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(g.N, g.N);
    for (long i = 1; i <= g.N; ++i) {
        const int rs = rstar(block_of(i, mp.n), g.p);
        for (long j = 1; j <= g.N; ++j) {
            const int s = block_of(j, mp.n);
            if (!(s < rs)) continue;
            const double dm = mp.m[rs - 1] - mp.m[s - 1], da = mp.a[rs - 1] - mp.a[s - 1];
            cplx acc = 0.0;
            for (int a = 0; a < w.size(); ++a) acc += w.w[a] * std::exp(-g.lg(w.logs[a], i - j + 1, dm, da));
            B(i - 1, j - 1) = acc / g.wc;
        }
    }
    return B;
}

struct ExactFormula::Impl {
    ModelParams mp;
    ExactSettings st;
    int p = 0;
    long N = 0;
    int Kzeta = 0, Kz = 0;
    double delta = 0.0;

    // M = sum over terms of diag(coef(r)) * mat, split into A and B parts.
    struct Term {
        Eigen::MatrixXcd mat;
        std::function<cplx(const ThetaTools&, int r)> coef;
        bool is_b = false;
    };
    std::vector<Term> terms;

    Eigen::MatrixXcd combine(const std::vector<cplx>& theta, bool want_a, bool want_b) const {
        ThetaTools tt(theta, mp.n);
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
        std::vector<cplx> c(p + 1);
        for (const auto& t : terms) {
            if ((t.is_b && !want_b) || (!t.is_b && !want_a)) continue;
            for (int r = 1; r <= p; ++r) c[r] = t.coef(tt, r);
            for (long i = 1; i <= N; ++i) {
                const cplx ci = c[block_of(i, mp.n)];
                if (ci != 0.0) M.row(i - 1) += ci * t.mat.row(i - 1);
            }
        }
        return M;
    }
};

namespace {

// Masks rows by block predicate and columns by block predicate.
void mask_blocks(Eigen::MatrixXcd& M, const std::vector<long>& n, const std::function<bool(int)>& row_ok,
                 const std::function<bool(int)>& col_ok) {
    for (long i = 1; i <= M.rows(); ++i)
        for (long j = 1; j <= M.cols(); ++j)
            if (!row_ok(block_of(i, n)) || !col_ok(block_of(j, n))) M(i - 1, j - 1) = 0.0;
}

void conjugate(Eigen::MatrixXcd& M, const std::vector<long>& n, double mu, double nuT) {
    if (mu == 0.0) return;
    for (long i = 1; i <= M.rows(); ++i)
        for (long j = 1; j <= M.cols(); ++j) M(i - 1, j - 1) *= conjugation_c(i, j, n, mu, nuT);
}

// Node counts from the geometric convergence rates of the trapezoid rule.
void heuristic_nodes(const ModelParams& mp, double delta, double spread, int cap, int& Kzeta, int& Kz) {
    const int p = mp.p();
    const double q = mp.q;
    double gz_min = 1e300, gzeta_min = 1e300;
    for (int k1 = 0; k1 < p; ++k1)
        for (int k2 = k1 + 1; k2 <= p; ++k2) {
            const auto epss = admissible_eps(p, k1, k2);
            for (const auto& e : epss) {
                const RadiiConfig rc = radii_for_eps(e, k1, k2, p, q, delta, spread);
                double rmax = 0.0, rmin = 1.0;
                for (int k = k1 + 1; k <= k2; ++k) {
                    rmax = std::max(rmax, rc.R[k]);
                    rmin = std::min(rmin, rc.R[k]);
                    if (k < k2) gz_min = std::min(gz_min, std::fabs(std::log(rc.R[k + 1] / rc.R[k])));
                }
                gz_min = std::min({gz_min, std::log((1.0 - rc.tau1) / rmax), std::log(rmin / q)});
                gzeta_min = std::min({gzeta_min, std::log(rc.tau1 / rc.tau2), std::log((1.0 - rmax) / rc.tau1)});
            }
        }
    Kzeta = round_nodes(36.0 / gzeta_min, cap);
    Kz = round_nodes(36.0 / gz_min, cap);
}

std::unique_ptr<ExactFormula::Impl> build_impl(const ModelParams& mp, const ExactSettings& st, double delta,
                                               int Kzeta, int Kz) {
    auto im = std::make_unique<ExactFormula::Impl>();
    im->mp = mp;
    im->st = st;
    im->p = mp.p();
    im->N = mp.N();
    im->Kzeta = Kzeta;
    im->Kz = Kz;
    im->delta = delta;
    const int p = im->p;
    const auto& n = mp.n;
    using Term = ExactFormula::Impl::Term;

    const RadiiConfig base = radii_for_eps(EpsilonVector(p - 1, 1), 0, p, p, mp.q, delta, st.spread);

    // B: split by column block s so the (1 + Theta(r|s)) factor is a row scaling.
    if (p >= 3) {
        const Eigen::MatrixXcd Bb = b_basis(mp, base.tau3, Kzeta);
        for (int s = 1; s <= p - 2; ++s) {
            Term t;
            t.mat = Bb;
            mask_blocks(t.mat, n, [](int) { return true; }, [s](int c) { return c == s; });
            conjugate(t.mat, n, st.mu, st.nuT);
            t.coef = [s](const ThetaTools& tt, int r) { return 1.0 + tt.Theta_diff(r, s); };
            t.is_b = true;
            im->terms.push_back(std::move(t));
        }
    }
    // A1: Theta(r|k) L_k on blocks with s < k < r*.
    for (int k = 1; k <= p - 2; ++k) {
        Term t;
        t.mat = lk_matrix(mp, k, base, Kzeta);
        mask_blocks(t.mat, n, [k, p](int r) { return k < rstar(r, p); }, [k](int s) { return s < k; });
        conjugate(t.mat, n, st.mu, st.nuT);
        t.coef = [k](const ThetaTools& tt, int r) { return tt.Theta_diff(r, k); };
        im->terms.push_back(std::move(t));
    }
    // A2: group admissible epsilons by the interior entries that fix the radii.
    for (int k1 = 0; k1 < p; ++k1)
        for (int k2 = k1 + 1; k2 <= p; ++k2) {
            std::map<std::vector<int>, std::vector<EpsilonVector>> groups;
            for (const auto& e : admissible_eps(p, k1, k2)) {
                std::vector<int> key(e.begin() + k1, e.begin() + std::max(k1, k2 - 1));
                groups[key].push_back(e);
            }
            const int k2s = std::min(k2, p - 1);
            for (const auto& [key, epss] : groups) {
                const RadiiConfig rc = radii_for_eps(epss.front(), k1, k2, p, mp.q, delta, st.spread);
                Term t;
                t.mat = Eigen::MatrixXcd::Zero(im->N, im->N);
                if (k1 < p - 1) {
                    Eigen::MatrixXcd L = lcd_matrix(mp, k1, k2, rc, Kzeta, Kz);
                    mask_blocks(L, n, [k1, p](int r) { return k1 < rstar(r, p); },
                                [k2, p](int s) { return rstar(s, p) < k2; });
                    t.mat += L;
                    if (k2 < p) {
                        Eigen::MatrixXcd J = j_matrix(mp, k1, k2, rc, Kzeta, Kz);
                        mask_blocks(J, n, [k1, p](int r) { return k1 < rstar(r, p); },
                                    [k2](int s) { return s == k2; });
                        t.mat += J;
                    }
                }
                if (k1 == p - 1 && k2 == p) {
                    Eigen::MatrixXcd Lp = lp_matrix(mp, rc, Kzeta, Kz);
                    mask_blocks(Lp, n, [p](int r) { return r == p; }, [](int) { return true; });
                    t.mat += Lp;
                }
                if (t.mat.isZero(0.0)) continue;
                conjugate(t.mat, n, st.mu, st.nuT);
                t.coef = [epss, k1, k2, k2s, p](const ThetaTools& tt, int r) {
                    cplx c = 0.0;
                    for (const auto& e : epss) {
                        const int sg = ThetaTools::eps_sign(e, k1, k2, p) * (((k1 + k2s) % 2) ? -1 : 1);
                        c += static_cast<double>(sg) * tt.theta_r(r, e);
                    }
                    return c;
                };
                im->terms.push_back(std::move(t));
            }
        }
    return im;
}

cplx det_from(const ExactFormula::Impl& im, const std::vector<cplx>& theta) {
    Eigen::MatrixXcd M = im.combine(theta, true, true);
    M += Eigen::MatrixXcd::Identity(im.N, im.N);
    return Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant();
}

std::vector<cplx> probe_theta(int p, double r) {
    std::vector<cplx> th;
    for (int k = 1; k < p; ++k) th.push_back(std::polar(r, 0.7 + 0.9 * k));
    return th;
}

}  // namespace

ExactFormula::ExactFormula(const ModelParams& params, const ExactSettings& st) {
    params.validate();
    if (params.p() < 2) throw domain_error("ExactFormula: p must be at least 2");
    if (params.N() > st.max_N) throw budget_error("ExactFormula: N exceeds the configured budget");
    const double delta = st.delta > 0.0 ? st.delta : auto_delta(params.N(), params.q);
    int Kzeta = st.zeta_nodes, Kz = st.z_nodes;
    int hz = 0, hzz = 0;
    heuristic_nodes(params, delta, st.spread, st.max_contour_nodes, hz, hzz);
    if (Kzeta <= 0) Kzeta = hz;
    if (Kz <= 0) Kz = hzz;
    impl_ = build_impl(params, st, delta, Kzeta, Kz);
    if (!st.refine_nodes || (st.zeta_nodes > 0 && st.z_nodes > 0)) return;
    const auto th = probe_theta(params.p(), st.r_theta);
    cplx prev = det_from(*impl_, th);
    while (true) {
        const int nzeta = round_nodes(1.5 * Kzeta, 1 << 30), nz = round_nodes(1.5 * Kz, 1 << 30);
        if (nzeta > st.max_contour_nodes || nz > st.max_contour_nodes)
            throw convergence_error("ExactFormula: contour nodes did not stabilize within the cap");
        auto next = build_impl(params, st, delta, nzeta, nz);
        const cplx cur = det_from(*next, th);
        const double change = std::abs(cur - prev) / std::max(1.0, std::abs(cur));
        if (change < std::max(st.tol, 1e-13)) break;  // keep the cheaper, verified grid
        impl_ = std::move(next);
        Kzeta = nzeta;
        Kz = nz;
        prev = cur;
    }
}

ExactFormula::~ExactFormula() = default;
ExactFormula::ExactFormula(ExactFormula&&) noexcept = default;

int ExactFormula::zeta_nodes() const { return impl_->Kzeta; }
int ExactFormula::z_nodes() const { return impl_->Kz; }

BlockMatrixC ExactFormula::build_A(const std::vector<cplx>& theta) const {
    return {impl_->mp.n, impl_->combine(theta, true, false)};
}

BlockMatrixC ExactFormula::build_B(const std::vector<cplx>& theta) const {
    return {impl_->mp.n, impl_->combine(theta, false, true)};
}

cplx ExactFormula::det_theta(const std::vector<cplx>& theta) const { return det_from(*impl_, theta); }

BlockMatrixC build_A(const std::vector<cplx>& theta, const ModelParams& params, const ExactSettings& st) {
    return ExactFormula(params, st).build_A(theta);
}

BlockMatrixC build_B(const std::vector<cplx>& theta, const ModelParams& params, const ExactSettings& st) {
    return ExactFormula(params, st).build_B(theta);
}

cplx det_theta(const std::vector<cplx>& theta, const ModelParams& params, const ExactSettings& st) {
    return ExactFormula(params, st).det_theta(theta);
}

namespace {

// Tensor trapezoid over (p-1) circles of radius r with K nodes each.
cplx theta_sum(const ExactFormula& ef, int p, double r, int K) {
    const int dim = p - 1;
    long total = 1;
    for (int d = 0; d < dim; ++d) total *= K;
    std::vector<cplx> vals(total);
    tbb::parallel_for(0L, total, [&](long idx) {
        std::vector<cplx> th(dim);
        cplx wgt = 1.0;
        long rem = idx;
        for (int d = 0; d < dim; ++d) {
            const cplx e = std::polar(r, 2.0 * kPi * static_cast<double>(rem % K) / K);
            rem /= K;
            th[d] = e;
            wgt *= e / (static_cast<double>(K) * (e - 1.0));  // dtheta / (2 pi i) / (theta - 1)
        }
        vals[idx] = wgt * ef.det_theta(th);
    });
    cplx s = 0.0;
    for (const auto& v : vals) s += v;
    return s;
}

}  // namespace

ExactResult multipoint_prob_exact(const ModelParams& params, const ExactSettings& st) {
    const auto t0 = std::chrono::steady_clock::now();
    params.validate();
    ExactResult res;
    auto finish = [&] {
        res.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return res;
    };
    if (params.trivially_zero()) return finish();
    if (params.p() == 1) {
        res.value = single_point_prob(params.n[0], params.m[0], params.a[0], params.q, st);
        return finish();
    }
    if (!(st.r_theta > 1.0)) throw domain_error("r_theta must exceed 1");
    const ExactFormula ef(params, st);
    res.zeta_nodes = ef.zeta_nodes();
    res.z_nodes = ef.z_nodes();
    const int p = params.p();
    cplx val;
    if (st.theta_nodes > 0) {
        val = theta_sum(ef, p, st.r_theta, st.theta_nodes);
        res.theta_nodes = st.theta_nodes;
    } else {
        int K = 16;
        cplx prev = theta_sum(ef, p, st.r_theta, K);
        while (true) {
            if (2 * K > st.max_theta_nodes) throw convergence_error("theta trapezoid did not converge");
            K *= 2;
            val = theta_sum(ef, p, st.r_theta, K);
            res.change = std::abs(val - prev);
            if (res.change < st.tol) break;
            prev = val;
        }
        res.theta_nodes = K;
    }
    res.value = val.real();
    res.imag = val.imag();
    if (std::fabs(res.imag) > std::max(st.tol, 1e-6))
        throw convergence_error("theta integral has a non-negligible imaginary part");
    return finish();
}

double single_point_prob(long n, long m, long a, double q, const ExactSettings& st) {
    if (n < 1 || m < 1) throw domain_error("single_point_prob: n and m must be positive");
    if (!(q > 0.0 && q < 1.0)) throw domain_error("q must lie in (0,1)");
    if (a <= 0) return 0.0;
    if (n > st.max_N) throw budget_error("single_point_prob: n exceeds the configured budget");
    const double sq = std::sqrt(q), wc = 1.0 - sq;
    const double delta = st.delta > 0.0 ? st.delta : auto_delta(n, q);
    const double tau = wc * (1.0 - delta);
    const double R = sq - wc * delta;
    const LogG lg(q);
    auto eval = [&](int Kzeta, int Kz) {
        const Nodes zeta = circle0(tau, Kzeta, lg), z = circle1(R, Kz, lg);
        Eigen::MatrixXcd Uz(n, Kz), V(Kzeta, n);
        for (long i = 1; i <= n; ++i)
            for (int b = 0; b < Kz; ++b) Uz(i - 1, b) = z.w[b] * std::exp(lg(z.logs[b], n - i, m, a - 1));
        for (long j = 1; j <= n; ++j)
            for (int c = 0; c < Kzeta; ++c) V(c, j - 1) = zeta.w[c] * std::exp(-lg(zeta.logs[c], n - j + 1, m, a - 1));
        Eigen::MatrixXcd M = Uz * cauchy(z, zeta) * V / wc;
        M += Eigen::MatrixXcd::Identity(n, n);
        return Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant();
    };
    const double g = std::min(std::log((1.0 - R) / tau), std::log(R / q));
    int K = st.zeta_nodes > 0 ? st.zeta_nodes : round_nodes(36.0 / g, st.max_contour_nodes);
    cplx prev = eval(K, K);
    if (st.zeta_nodes > 0 || !st.refine_nodes) return prev.real();
    while (2 * K <= st.max_contour_nodes) {
        const cplx cur = eval(2 * K, 2 * K);
        if (std::abs(cur - prev) < std::max(st.tol, 1e-14)) return cur.real();
        prev = cur;
        K *= 2;
    }
    throw convergence_error("single_point_prob: contour nodes did not stabilize");
}

}  // namespace pngkpz
