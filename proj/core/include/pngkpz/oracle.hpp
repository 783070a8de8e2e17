#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "pngkpz/params.hpp"

namespace pngkpz {

/// Negative binomial weight w_m(x) = C(x+m-1, x) (1-q)^m q^x for x >= 0.
double w_weight(double q, long m, long x);

/// Pointwise nabla^k w_m(x); k < 0 means repeated prefix sums.
double nabla_w(double q, long m, long k, long x);

/// Integer-indexed sequence, zero outside [lo, lo + v.size()).
struct Sequence {
    long lo = 0;
    std::vector<double> v;

    long hi() const { return lo + static_cast<long>(v.size()) - 1; }
    double operator()(long x) const {
        return (x < lo || x > hi()) ? 0.0 : v[static_cast<size_t>(x - lo)];
    }
};

/// nabla^k f on the window [f.lo - max(k,0), hi_out]. For k < 0 the true result
/// has unbounded support to the right; it is reported on the window only.
Sequence nabla_pow(const Sequence& f, long k, long hi_out);

/// Pointwise nabla^k f(x) for a finite-support sequence.
double nabla_at(const Sequence& f, long k, long x);

/// det[nabla^{j-i} w_steps(y_j - x_i)] for nondecreasing x, y.
double schutz_determinant(double q, const std::vector<long>& x, const std::vector<long>& y,
                          long steps);

struct DPResult {
    double prob = 0.0;
    std::uint64_t states = 0;  // peak number of live states
};

/// Exact P(G(m_k,n_k) < a_k for all k) by a column transfer-matrix DP over
/// capped nondecreasing states. Throws budget_error above max_states.
DPResult dp_exact_prob(const ModelParams& params, std::uint64_t max_states = 1000000);

struct TruncatedSum {
    double value = 0.0;
    double tail = 0.0;  // |value(cutoff + 5) - value(cutoff)|
    std::uint64_t terms = 0;
};

/// Sum of products of determinants over Weyl-chamber vectors whose
/// coordinates lie in [-cutoff, a_r + cutoff]. Supports p = 1 and p = 2.
TruncatedSum truncated_sum_prob(const ModelParams& params, long cutoff,
                                std::uint64_t max_terms = 5000000);

struct SbpReport {
    double max_abs_b = 0.0;  // boundary-collapse identity
    double max_abs_a = 0.0;  // derivative-shuffling identity
    double scale = 0.0;      // largest magnitude among compared sides
    int instances = 0;
};

/// Random small-N checks of the two summation-by-parts identities. The shuffle
/// index k is drawn at random unless fixed_k is in 1..N.
SbpReport verify_sbp(int instances, int N, std::uint64_t seed, int fixed_k = 0);

/// N x N matrix L(i,j|theta) built from the negative binomial kernels with
/// trivial row and column operations. Finite sums, no truncation.
Eigen::MatrixXcd discrete_L(const ModelParams& params, const std::vector<cplx>& theta);

}  // namespace pngkpz
