#pragma once

#include <cstdint>
#include <vector>

#include "pngkpz/params.hpp"

namespace pngkpz {

/// i.i.d. geometric weights omega(m, n), 1 <= m <= M, 1 <= n <= N.
struct WeightField {
    double q = 0.5;
    int M = 0, N = 0;
    std::uint64_t seed = 0;
    std::vector<long> omega;  // column-major in m: omega[(m-1)*N + (n-1)]

    long at(int m, int n) const { return omega[static_cast<size_t>(m - 1) * N + (n - 1)]; }
};

/// Last-passage values with zero boundary, same layout as WeightField.
struct GrowthTable {
    int M = 0, N = 0;
    std::vector<long> g;

    long at(int m, int n) const {
        if (m <= 0 || n <= 0) return 0;
        return g[static_cast<size_t>(m - 1) * N + (n - 1)];
    }
};

WeightField sample_weights(double q, int M, int N, std::uint64_t seed);
GrowthTable build_table(const WeightField& field);

/// PNG height h(x, t); linear interpolation in x when x + t is even.
double png_height(const GrowthTable& table, long x, long t);

/// Rescaled height H_T(x, t) with lattice arguments snapped to odd parity.
double rescaled_height(const GrowthTable& table, const KPZParams& kpz, double x, double t);

struct MCResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::uint64_t hits = 0, samples = 0;
};

/// Monte Carlo estimate of P(G(m_k, n_k) < a_k for all k). Result is
/// independent of the worker count for a fixed seed.
MCResult mc_multipoint(const ModelParams& params, std::uint64_t nsamples, std::uint64_t seed,
                       int workers = 0);

/// Geometric variate from a uniform in (0,1] via the inverse CDF.
long geometric_from_uniform(double u, double log_q);

}  // namespace pngkpz
