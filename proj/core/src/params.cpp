#include "pngkpz/params.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pngkpz {

namespace {

void check_q(double q) {
    if (!(q > 0.0 && q < 1.0)) throw domain_error("q must lie in (0,1), got " + std::to_string(q));
}

template <class V>
bool strictly_increasing(const V& v) {
    for (size_t k = 1; k < v.size(); ++k)
        if (!(v[k] > v[k - 1])) return false;
    return true;
}

}  // namespace

void ModelParams::validate() const {
    check_q(q);
    if (m.empty()) throw domain_error("p must be at least 1");
    if (n.size() != m.size() || a.size() != m.size())
        throw domain_error("m, n, a must have equal length");
    if (m.front() < 1 || n.front() < 1) throw domain_error("m and n must be positive");
    if (!strictly_increasing(m) || !strictly_increasing(n))
        throw domain_error("m and n must be strictly increasing");
}

bool ModelParams::trivially_zero() const {
    return std::any_of(a.begin(), a.end(), [](long v) { return v <= 0; });
}

void KPZParams::validate() const {
    check_q(q);
    if (!(T > 0.0)) throw domain_error("T must be positive");
    if (t.empty()) throw domain_error("p must be at least 1");
    if (x.size() != t.size() || xi.size() != t.size())
        throw domain_error("t, x, xi must have equal length");
    if (!(t.front() > 0.0) || !strictly_increasing(t))
        throw domain_error("t must be positive and strictly increasing");
    if (mu < 0.0) throw domain_error("mu must be nonnegative");
}

ScalingConstants compute_constants(double q, double T) {
    check_q(q);
    if (!(T > 0.0)) throw domain_error("T must be positive");
    const double sq = std::sqrt(q);
    ScalingConstants c{};
    c.c0 = std::cbrt((1.0 + sq) / q);
    c.c1 = std::pow(q, -1.0 / 6.0) * std::pow(1.0 + sq, 2.0 / 3.0);
    c.c2 = 2.0 * sq / (1.0 - sq);
    c.c3 = std::pow(q, 1.0 / 6.0) * std::cbrt(1.0 + sq) / (1.0 - sq);
    c.c4 = std::cbrt(q) * (1.0 - sq) / std::cbrt(1.0 + sq);
    c.wc = 1.0 - sq;
    c.nuT = c.c0 * std::cbrt(T);
    return c;
}

std::vector<RealTriple> scaling_values(const KPZParams& kpz) {
    kpz.validate();
    const auto c = compute_constants(kpz.q, kpz.T);
    std::vector<RealTriple> out;
    for (int k = 0; k < kpz.p(); ++k) {
        const double tt = kpz.t[k] * kpz.T;
        const double s23 = std::pow(tt, 2.0 / 3.0);
        out.push_back({tt - c.c1 * kpz.x[k] * s23, tt + c.c1 * kpz.x[k] * s23,
                       c.c2 * tt + c.c3 * kpz.xi[k] * std::cbrt(tt)});
    }
    return out;
}

ModelParams discretize(const KPZParams& kpz) {
    ModelParams mp;
    mp.q = kpz.q;
    for (const auto& v : scaling_values(kpz)) {
        mp.n.push_back(std::lround(v.n));
        mp.m.push_back(std::lround(v.m));
        mp.a.push_back(std::lround(v.a));
    }
    if (mp.n.front() < 1 || mp.m.front() < 1 || !strictly_increasing(mp.n) ||
        !strictly_increasing(mp.m))
        throw domain_error("rounded m or n not strictly increasing; increase T");
    return mp;
}

double default_mu(const std::vector<double>& t, const std::vector<double>& x) {
    double hi = -1e300, lo = 1e300, dt = 1e300;
    for (size_t k = 0; k < t.size(); ++k) {
        const double v = x[k] * std::pow(t[k], 2.0 / 3.0);
        hi = std::max(hi, v);
        lo = std::min(lo, v);
        dt = std::min(dt, t[k] - (k ? t[k - 1] : 0.0));
    }
    return (hi - lo) / std::cbrt(dt) + 1.0;
}

double delta(Quantity what, int k1, int k2, const std::vector<double>& t,
             const std::vector<double>& x, const std::vector<double>& xi) {
    const int p = static_cast<int>(t.size());
    if (!(0 <= k1 && k1 < k2 && k2 <= p)) throw domain_error("delta: need 0 <= k1 < k2 <= p");
    auto at = [](const std::vector<double>& y, int k) { return k == 0 ? 0.0 : y[k - 1]; };
    const double dt = at(t, k2) - at(t, k1);
    switch (what) {
        case Quantity::t:
            return dt;
        case Quantity::x:
            return at(x, k2) * std::pow(at(t, k2) / dt, 2.0 / 3.0) -
                   at(x, k1) * std::pow(at(t, k1) / dt, 2.0 / 3.0);
        case Quantity::xi:
            return at(xi, k2) * std::cbrt(at(t, k2) / dt) - at(xi, k1) * std::cbrt(at(t, k1) / dt);
        default:
            throw domain_error("delta: n, m, a are discrete quantities");
    }
}

double delta(Quantity what, int k1, int k2, const KPZParams& kpz) {
    return delta(what, k1, k2, kpz.t, kpz.x, kpz.xi);
}

long delta(Quantity what, int k1, int k2, const ModelParams& mp) {
    if (!(0 <= k1 && k1 < k2 && k2 <= mp.p())) throw domain_error("delta: need 0 <= k1 < k2 <= p");
    const std::vector<long>* y = nullptr;
    switch (what) {
        case Quantity::n: y = &mp.n; break;
        case Quantity::m: y = &mp.m; break;
        case Quantity::a: y = &mp.a; break;
        default: throw domain_error("delta: t, x, xi are continuum quantities");
    }
    return (*y)[k2 - 1] - (k1 ? (*y)[k1 - 1] : 0L);
}

TXXi delta_txxi(int k1, int k2, const std::vector<double>& t, const std::vector<double>& x,
                const std::vector<double>& xi) {
    return {delta(Quantity::t, k1, k2, t, x, xi), delta(Quantity::x, k1, k2, t, x, xi),
            delta(Quantity::xi, k1, k2, t, x, xi)};
}

int block_of(long i, const std::vector<long>& n) {
    for (size_t r = 0; r < n.size(); ++r)
        if (i <= n[r]) return static_cast<int>(r) + 1;
    throw domain_error("index beyond n_p");
}

long block_value(const std::vector<long>& y, long i, const std::vector<long>& n) {
    const int p = static_cast<int>(n.size());
    const int rs = rstar(block_of(i, n), p);
    return rs == 0 ? 0L : y[rs - 1];
}

std::vector<EpsilonVector> admissible_eps(int p, int k1, int k2) {
    const int lo = std::max(k1, 1), hi = std::min(k2, p - 1);
    std::vector<EpsilonVector> out;
    const int free = std::max(0, hi - lo + 1);
    for (int mask = 0; mask < (1 << free); ++mask) {
        EpsilonVector e(p - 1);
        for (int k = 1; k <= p - 1; ++k) {
            if (k < lo) e[k - 1] = 2;
            else if (k > hi) e[k - 1] = 1;
            else e[k - 1] = ((mask >> (k - lo)) & 1) ? 2 : 1;
        }
        out.push_back(e);
    }
    return out;
}

ThetaTools::ThetaTools(std::vector<cplx> theta, std::vector<long> n)
    : theta_(std::move(theta)), n_(std::move(n)), p_(static_cast<int>(n_.size())) {
    if (static_cast<int>(theta_.size()) != p_ - 1) throw domain_error("theta must have length p-1");
    for (const auto& th : theta_)
        if (th == cplx(0.0)) throw domain_error("theta components must be nonzero");
}

cplx ThetaTools::theta_eps_i(const EpsilonVector& eps, long i) const {
    cplx v = 1.0;
    for (int k = 1; k < p_; ++k) v *= ipow(theta_[k - 1], 2 - eps[k - 1] - (i <= n_[k - 1] ? 1 : 0));
    return v;
}

cplx ThetaTools::theta_r(int r, const EpsilonVector& eps) const {
    cplx v = 1.0;
    for (int k = 1; k < p_; ++k) v *= ipow(theta_[k - 1], (k < r ? 2 : 1) - eps[k - 1]);
    return v;
}

EpsilonVector ThetaTools::eps_k(int k, int p) {
    EpsilonVector e(p - 1, 1);
    for (int j = 0; j < k - 1 && j < p - 1; ++j) e[j] = 2;
    return e;
}

cplx ThetaTools::Theta(int r, int k) const {
    if (!(k >= 1 && k < std::min(r, p_ - 1))) return 0.0;
    const double keep = (r == p_ && k == p_ - 2) ? 0.0 : 1.0;
    return theta_r(r, eps_k(k, p_)) - keep * theta_r(r, eps_k(k + 1, p_));
}

cplx ThetaTools::Theta_diff(int r, int k) const {
    if (!(k >= 1 && k < std::min(r, p_ - 1))) return 0.0;
    return theta_r(r, eps_k(k, p_)) - theta_r(r, eps_k(k + 1, p_));
}

int ThetaTools::eps_sign(const EpsilonVector& eps, int k1, int k2, int p) {
    int s = 0;
    for (int k = std::max(1, k1); k <= std::min(k2, p - 1); ++k) s += eps[k - 1];
    return (s % 2) ? -1 : 1;
}

}  // namespace pngkpz
