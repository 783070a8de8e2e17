#include "pngkpz/growth.hpp"

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <random>

namespace pngkpz {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One generator per (seed, stream); streams are chunk indices, not threads.
std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 1)));
}

double unit_open_closed(std::mt19937_64& eng) {
    // 53-bit uniform in (0, 1]
    return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
}

constexpr std::uint64_t kChunk = 1u << 14;

}  // namespace

long geometric_from_uniform(double u, double log_q) {
    return static_cast<long>(std::floor(std::log(u) / log_q));
}

WeightField sample_weights(double q, int M, int N, std::uint64_t seed) {
    if (!(q > 0.0 && q < 1.0)) throw domain_error("q must lie in (0,1)");
    if (M < 1 || N < 1) throw domain_error("grid must be nonempty");
    WeightField f{q, M, N, seed, std::vector<long>(static_cast<size_t>(M) * N)};
    auto eng = stream_engine(seed, 0);
    const double lq = std::log(q);
    for (auto& w : f.omega) w = geometric_from_uniform(unit_open_closed(eng), lq);
    return f;
}

GrowthTable build_table(const WeightField& field) {
    GrowthTable t{field.M, field.N, std::vector<long>(field.omega.size())};
    for (int m = 1; m <= field.M; ++m)
        for (int n = 1; n <= field.N; ++n)
            t.g[static_cast<size_t>(m - 1) * field.N + (n - 1)] =
                std::max(t.at(m - 1, n), t.at(m, n - 1)) + field.at(m, n);
    return t;
}

double png_height(const GrowthTable& table, long x, long t) {
    if (t == 0) return 0.0;
    if (t < 0 || std::labs(x) >= t) throw domain_error("png_height: need |x| < t");
    if ((x + t) % 2 == 0)
        return 0.5 * (png_height(table, x - 1, t) + png_height(table, x + 1, t));
    const long m = (t + x + 1) / 2, n = (t - x + 1) / 2;
    if (m > table.M || n > table.N) throw domain_error("png_height: table too small");
    return static_cast<double>(table.at(static_cast<int>(m), static_cast<int>(n)));
}

double rescaled_height(const GrowthTable& table, const KPZParams& kpz, double x, double t) {
    const auto c = compute_constants(kpz.q, kpz.T);
    const double tt = t * kpz.T;
    const double xr = 2.0 * c.c1 * x * std::pow(tt, 2.0 / 3.0);
    const long tl = std::lround(2.0 * tt);
    long xl = std::lround(xr);
    if ((xl + tl) % 2 == 0) xl += (xr >= static_cast<double>(xl)) ? 1 : -1;
    return (png_height(table, xl, tl) - c.c2 * tt) / (c.c3 * std::cbrt(tt));
}

MCResult mc_multipoint(const ModelParams& params, std::uint64_t nsamples, std::uint64_t seed,
                       int workers) {
    params.validate();
    MCResult res;
    res.samples = nsamples;
    if (nsamples == 0) throw domain_error("nsamples must be positive");
    if (params.trivially_zero()) return res;

    const int M = static_cast<int>(params.m.back()), N = static_cast<int>(params.n.back());
    const int p = params.p();
    const double lq = std::log(params.q);
    const std::uint64_t nchunks = (nsamples + kChunk - 1) / kChunk;
    std::atomic<std::uint64_t> hits{0};

    auto run_chunk = [&](std::uint64_t c) {
        auto eng = stream_engine(seed, c);
        std::vector<long> col(N + 1, 0);
        const std::uint64_t lo = c * kChunk, hi = std::min(nsamples, lo + kChunk);
        std::uint64_t local = 0;
        for (std::uint64_t s = lo; s < hi; ++s) {
            std::fill(col.begin(), col.end(), 0L);
            bool ok = true;
            int k = 0;
            for (int m = 1; m <= M && ok; ++m) {
                for (int n = 1; n <= N; ++n)
                    col[n] = std::max(col[n], col[n - 1]) +
                             geometric_from_uniform(unit_open_closed(eng), lq);
                while (k < p && params.m[k] == m) {
                    if (col[params.n[k]] >= params.a[k]) ok = false;
                    ++k;
                }
            }
            local += ok;
        }
        hits += local;
    };

    std::unique_ptr<tbb::global_control> limit;
    if (workers > 0)
        limit = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                      workers);
    tbb::parallel_for(tbb::blocked_range<std::uint64_t>(0, nchunks),
                      [&](const tbb::blocked_range<std::uint64_t>& r) {
                          for (auto c = r.begin(); c != r.end(); ++c) run_chunk(c);
                      });

    res.hits = hits.load();
    res.estimate = static_cast<double>(res.hits) / static_cast<double>(nsamples);
    res.stderr_ = std::sqrt(res.estimate * (1.0 - res.estimate) / static_cast<double>(nsamples));
    return res;
}

}  // namespace pngkpz
