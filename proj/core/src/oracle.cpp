#include "pngkpz/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

namespace pngkpz {

namespace {

double log_binom(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// C(n, k) for small arguments by exact product, else via lgamma.
double binom(long n, long k) {
    if (k < 0 || k > n) return 0.0;
    if (n <= 60) {
        double r = 1.0;
        for (long j = 1; j <= k; ++j) r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
        return std::round(r);
    }
    return std::exp(log_binom(static_cast<double>(n), static_cast<double>(k)));
}

double binom_signed(long k, long l) {  // C(k, l) * (-1)^(k - l)
    return ((k - l) % 2 ? -1.0 : 1.0) * binom(k, l);
}

}  // namespace

double w_weight(double q, long m, long x) {
    if (m < 1) throw domain_error("w_weight: m must be positive");
    if (x < 0) return 0.0;
    if (x + m - 1 <= 60)
        return binom(x + m - 1, x) * std::pow(1.0 - q, static_cast<double>(m)) *
               std::pow(q, static_cast<double>(x));
    return std::exp(log_binom(static_cast<double>(x + m - 1), static_cast<double>(x)) +
                    m * std::log1p(-q) + x * std::log(q));
}

double nabla_w(double q, long m, long k, long x) {
    double s = 0.0;
    if (k >= 0) {
        for (long l = 0; l <= k; ++l) s += binom_signed(k, l) * w_weight(q, m, x + l);
    } else {
        // nabla^{-K} f(x) = sum_{y < x} C(x-y-1, K-1) f(y)
        const long K = -k;
        for (long y = 0; y < x; ++y) s += binom(x - y - 1, K - 1) * w_weight(q, m, y);
    }
    return s;
}

double nabla_at(const Sequence& f, long k, long x) {
    double s = 0.0;
    if (k >= 0) {
        for (long l = 0; l <= k; ++l) s += binom_signed(k, l) * f(x + l);
    } else {
        const long K = -k;
        for (long y = f.lo; y < x; ++y) s += binom(x - y - 1, K - 1) * f(y);
    }
    return s;
}

Sequence nabla_pow(const Sequence& f, long k, long hi_out) {
    Sequence out;
    out.lo = f.lo - std::max(k, 0L);
    for (long x = out.lo; x <= hi_out; ++x) out.v.push_back(nabla_at(f, k, x));
    return out;
}

double schutz_determinant(double q, const std::vector<long>& x, const std::vector<long>& y,
                          long steps) {
    const size_t N = x.size();
    if (y.size() != N || N == 0) throw domain_error("schutz_determinant: size mismatch");
    if (!std::is_sorted(x.begin(), x.end()) || !std::is_sorted(y.begin(), y.end()))
        throw domain_error("schutz_determinant: inputs must be nondecreasing");
    if (steps < 1) throw domain_error("schutz_determinant: steps must be positive");
    Eigen::MatrixXd M(N, N);
    for (size_t i = 0; i < N; ++i)
        for (size_t j = 0; j < N; ++j)
            M(i, j) = nabla_w(q, steps, static_cast<long>(j) - static_cast<long>(i), y[j] - x[i]);
    return M.determinant();
}

DPResult dp_exact_prob(const ModelParams& params, std::uint64_t max_states) {
    params.validate();
    DPResult res;
    if (params.trivially_zero()) return res;

    const int N = static_cast<int>(params.N());
    const long cap = params.a.back();
    const double space = std::exp(log_binom(static_cast<double>(cap - 1 + N), static_cast<double>(N)));
    if (space > static_cast<double>(max_states))
        throw budget_error("dp_exact_prob: state space exceeds budget");

    const double q = params.q;
    // Row values are < cap <= 255 by the budget; pack one byte per row.
    if (cap > 255 || N > 8) throw budget_error("dp_exact_prob: instance too large for state packing");
    auto pack = [N](const std::vector<int>& s) {
        std::uint64_t c = 0;
        for (int j = N - 1; j >= 0; --j) c = (c << 8) | static_cast<std::uint64_t>(s[j]);
        return c;
    };
    auto unpack = [N](std::uint64_t c, std::vector<int>& s) {
        for (int j = 0; j < N; ++j) {
            s[j] = static_cast<int>(c & 0xff);
            c >>= 8;
        }
    };
    std::vector<double> qpow(cap + 1);
    for (long k = 0; k <= cap; ++k) qpow[k] = std::pow(q, static_cast<double>(k));

    std::unordered_map<std::uint64_t, double> cur, next;
    cur[pack(std::vector<int>(N, 0))] = 1.0;
    std::vector<int> old(N), fresh(N);
    int k = 0;
    for (long m = 1; m <= params.m.back(); ++m) {
        next.clear();
        for (const auto& [code, mass] : cur) {
            unpack(code, old);
            // Enumerate the new column row by row; overflow past cap is dropped (FAIL).
            std::function<void(int, int, double)> rec = [&](int j, int prev, double pr) {
                if (j == N) {
                    next[pack(fresh)] += pr;
                    return;
                }
                const int base = std::max(prev, old[j]);
                for (int w = 0; base + w < cap; ++w) {
                    fresh[j] = base + w;
                    rec(j + 1, base + w, pr * (1.0 - q) * qpow[w]);
                }
            };
            rec(0, 0, mass);
        }
        while (k < params.p() && params.m[k] == m) {
            const long row = params.n[k] - 1, lim = params.a[k];
            for (auto it = next.begin(); it != next.end();) {
                unpack(it->first, old);
                if (old[row] >= lim) it = next.erase(it);
                else ++it;
            }
            ++k;
        }
        res.states = std::max<std::uint64_t>(res.states, next.size());
        std::swap(cur, next);
    }
    for (const auto& kv : cur) res.prob += kv.second;
    return res;
}

namespace {

// Visit all nondecreasing integer vectors of length N with entries in [lo, hi].
void for_each_weyl(int N, long lo, long hi, const std::function<void(const std::vector<long>&)>& fn) {
    std::vector<long> x(N, lo);
    std::function<void(int, long)> rec = [&](int j, long from) {
        if (j == N) {
            fn(x);
            return;
        }
        for (long v = from; v <= hi; ++v) {
            x[j] = v;
            rec(j + 1, v);
        }
    };
    rec(0, lo);
}

double truncated_sum_once(const ModelParams& mp, long cutoff, std::uint64_t max_terms,
                          std::uint64_t& terms) {
    const int N = static_cast<int>(mp.N());
    const double q = mp.q;
    if (mp.p() == 1) {
        Eigen::MatrixXd M(N, N);
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j) M(i - 1, j - 1) = nabla_w(q, mp.m[0], j - i - 1, mp.a[0]);
        terms = 1;
        return M.determinant();
    }
    if (mp.p() != 2) throw domain_error("truncated_sum_prob: only p <= 2 is supported");
    const long n1 = mp.n[0], m1 = mp.m[0], a1 = mp.a[0];
    const long dm = mp.m[1] - m1, a2 = mp.a[1];
    const long lo = -cutoff, hi = a1 + cutoff;
    double space = 1.0;
    for (int j = 0; j < N; ++j) space = space * static_cast<double>(hi - lo + 1 + j) / (j + 1);
    if (space > static_cast<double>(max_terms)) throw budget_error("truncated_sum_prob: too many terms");

    // Column tables: first determinant depends on x_j only, second on x_i only.
    const long W = hi - lo + 1;
    Eigen::MatrixXd first(N, W), second(W, N);
    for (long x = lo; x <= hi; ++x)
        for (int i = 1; i <= N; ++i) {
            first(i - 1, x - lo) = nabla_w(q, m1, n1 - i, x);
            second(x - lo, i - 1) = nabla_w(q, dm, i - 1 - n1, a2 - x);
        }
    double sum = 0.0;
    terms = 0;
    Eigen::MatrixXd D1(N, N), D2(N, N);
    for_each_weyl(N, lo, hi, [&](const std::vector<long>& x) {
        if (x[n1 - 1] >= a1) return;
        for (int j = 0; j < N; ++j) {
            D1.col(j) = first.col(x[j] - lo);
            D2.row(j) = second.row(x[j] - lo);
        }
        sum += D1.determinant() * D2.determinant();
        ++terms;
    });
    return sum;
}

}  // namespace

TruncatedSum truncated_sum_prob(const ModelParams& params, long cutoff, std::uint64_t max_terms) {
    params.validate();
    TruncatedSum out;
    if (params.trivially_zero()) return out;
    std::uint64_t t0 = 0, t1 = 0;
    out.value = truncated_sum_once(params, cutoff, max_terms, t0);
    const double more = truncated_sum_once(params, cutoff + 5, max_terms, t1);
    out.tail = std::fabs(more - out.value);
    out.terms = t0;
    return out;
}

SbpReport verify_sbp(int instances, int N, std::uint64_t seed, int fixed_k) {
    if (N < 1 || N > 3) throw domain_error("verify_sbp: N must be in 1..3");
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> small(0, N);
    SbpReport rep;
    auto rand_seq = [&](long lo, int width) {
        Sequence s{lo, std::vector<double>(width)};
        for (auto& v : s.v) v = U(eng);
        return s;
    };
    for (int it = 0; it < instances; ++it) {
        const long L = -2;
        const Sequence f = rand_seq(L, 3), g = rand_seq(L, 3);
        std::vector<long> ai(N), bj(N), xs(N), ys(N), zs(N);
        for (int i = 0; i < N; ++i) {
            ai[i] = small(eng);
            bj[i] = small(eng);
            xs[i] = small(eng) - 1;
            ys[i] = small(eng) - 1;
            zs[i] = small(eng) + 1;
        }
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        std::sort(zs.begin(), zs.end());
        const long A = 2;

        // Boundary collapse: sum over z with z_N < A.
        {
            double lhs = 0.0;
            const long lo = *std::min_element(xs.begin(), xs.end()) + L - N - 1;
            Eigen::MatrixXd M(N, N);
            for_each_weyl(N, lo, A - 1, [&](const std::vector<long>& z) {
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j) M(i, j) = nabla_at(g, (j + 1) - ai[i], z[j] - xs[i]);
                lhs += M.determinant();
            });
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) M(i, j) = nabla_at(g, j - ai[i], A - xs[i]);
            const double rhs = M.determinant();
            rep.max_abs_b = std::max(rep.max_abs_b, std::fabs(lhs - rhs));
            rep.scale = std::max({rep.scale, std::fabs(lhs), std::fabs(rhs)});
        }
        // Derivative shuffling around index k.
        {
            const int k = (fixed_k >= 1 && fixed_k <= N) ? fixed_k : 1 + static_cast<int>(eng() % N);
            const long lo = *std::min_element(ys.begin(), ys.end()) + L - 2 * N - 1;
            const long hi = *std::max_element(zs.begin(), zs.end()) - L + 2 * N + 1;
            double lhs = 0.0, rhs = 0.0;
            Eigen::MatrixXd F(N, N), Gm(N, N);
            for_each_weyl(N, lo, hi, [&](const std::vector<long>& x) {
                if (x[k - 1] >= A) return;
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j) {
                        F(i, j) = nabla_at(f, (j + 1) - ai[i], x[j] - ys[i]);
                        Gm(i, j) = nabla_at(g, bj[j] - (i + 1), zs[j] - x[i]);
                    }
                lhs += F.determinant() * Gm.determinant();
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j) {
                        F(i, j) = nabla_at(f, k - ai[i], x[j] - ys[i]);
                        Gm(i, j) = nabla_at(g, bj[j] - k, zs[j] - x[i]);
                    }
                rhs += F.determinant() * Gm.determinant();
            });
            rep.max_abs_a = std::max(rep.max_abs_a, std::fabs(lhs - rhs));
            rep.scale = std::max({rep.scale, std::fabs(lhs), std::fabs(rhs)});
        }
        ++rep.instances;
    }
    return rep;
}

Eigen::MatrixXcd discrete_L(const ModelParams& mp, const std::vector<cplx>& theta) {
    mp.validate();
    const int p = mp.p();
    if (p < 2) throw domain_error("discrete_L: p must be at least 2");
    if (static_cast<int>(theta.size()) != p - 1) throw domain_error("discrete_L: theta length");
    const long N = mp.N();
    const double q = mp.q;
    auto d = [&](Quantity w, int k) { return delta(w, k - 1, k, mp); };

    // Exact support windows for the summation variables x_1..x_{p-1}.
    std::vector<long> lo(p), hi(p);
    lo[1] = -mp.a[0] - mp.n[0] - 1;
    for (int k = 2; k < p; ++k) lo[k] = lo[k - 1] - d(Quantity::a, k) - d(Quantity::n, k);
    hi[p - 1] = d(Quantity::a, p) + N + 1;
    for (int k = p - 2; k >= 1; --k) hi[k] = hi[k + 1] + d(Quantity::a, k + 1) + d(Quantity::n, k + 1);

    const double sgn01 = (mp.n[0] % 2) ? -1.0 : 1.0;
    Eigen::MatrixXcd acc(N, hi[1] - lo[1] + 1);
    for (long i = 1; i <= N; ++i)
        for (long x = lo[1]; x <= hi[1]; ++x)
            acc(i - 1, x - lo[1]) = sgn01 * nabla_w(q, mp.m[0], mp.n[0] - i, x + mp.a[0]) *
                                    (x < 0 ? theta[0] : cplx(1.0));
    for (int k = 2; k < p; ++k) {
        const long dn = d(Quantity::n, k), dm = d(Quantity::m, k), da = d(Quantity::a, k);
        const double sg = (dn % 2) ? -1.0 : 1.0;
        Eigen::MatrixXcd f(hi[k - 1] - lo[k - 1] + 1, hi[k] - lo[k] + 1);
        for (long x = lo[k - 1]; x <= hi[k - 1]; ++x)
            for (long y = lo[k]; y <= hi[k]; ++y)
                f(x - lo[k - 1], y - lo[k]) =
                    sg * nabla_w(q, dm, dn, y - x + da) * (y < 0 ? theta[k - 1] : cplx(1.0));
        acc = acc * f;
    }
    const long np1 = mp.n[p - 2], dm = d(Quantity::m, p), da = d(Quantity::a, p);
    const double sg = (np1 % 2) ? -1.0 : 1.0;
    Eigen::MatrixXcd last(hi[p - 1] - lo[p - 1] + 1, N);
    for (long x = lo[p - 1]; x <= hi[p - 1]; ++x)
        for (long j = 1; j <= N; ++j)
            last(x - lo[p - 1], j - 1) = sg * nabla_w(q, dm, j - 1 - np1, da - x);
    Eigen::MatrixXcd L = acc * last;
    for (long i = 1; i <= N; ++i) {
        cplx rowf = 1.0;
        for (int k = 1; k < p; ++k)
            if (i <= mp.n[k - 1]) rowf /= theta[k - 1];
        L.row(i - 1) *= rowf;
    }
    return L;
}

}  // namespace pngkpz
