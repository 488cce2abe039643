#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "dyson/configuration.hpp"
#include "dyson/errors.hpp"

namespace dyson {

// ----- deterministic splittable RNG -------------------------------------------

struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t s) : state(s) {}
    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

class Xoshiro256pp {
public:
    // per-stream seeding: SplitMix64 over (seed, stream) fills the state
    Xoshiro256pp(uint64_t seed, uint64_t stream) {
        SplitMix64 sm(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
        for (auto& w : s_) w = sm.next();
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    uint64_t next() {
        uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

    // uniform in (0, 1]
    double uniform() { return (double(next() >> 11) + 1.0) * 0x1.0p-53; }

    // standard normal, Box-Muller with one cached spare
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline const char* prng_name() { return "xoshiro256++ (splitmix64-seeded per-path streams, Box-Muller normals)"; }

// ----- simulation plan and results ---------------------------------------------

struct SimPlan {
    Configuration initial;
    double dt = 1e-3;
    std::vector<double> t_snapshots;
    long long n_paths = 1;
    uint64_t seed = 1;
    double g_min = 1e-4;  // collision guard
    int max_halvings = 20;
    int threads = 0;  // 0 = DYSON_THREADS or hardware
};

struct SimResult {
    int n = 0;                                // particles per path
    long long n_paths = 0;
    std::vector<double> times;                // snapshot times, increasing
    std::vector<std::vector<double>> snaps;   // [snapshot][path*n + j], ordered in j
    std::vector<double> start;                // regularized initial positions
    uint64_t seed = 0;
};

struct EmpiricalField {
    std::vector<double> edges;       // 1D bins, or x-edges for 2D
    std::vector<double> edges2;      // y-edges when 2D
    std::vector<long long> counts;   // row-major for 2D
    std::vector<double> density;
    std::vector<double> se;
    long long n_paths = 0;
};

inline int thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DYSON_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(std::min(hw, 8u));
}

namespace detail {

// one Euler-Maruyama span of length h; on a guard violation the span is
// re-done as two halves with fresh noise, up to max_halvings levels deep
inline void em_span(std::vector<double>& x, double h, double g_min, int depth, int max_depth,
                    Xoshiro256pp& rng) {
    int n = int(x.size());
    std::vector<double> y(x.size());
    for (int j = 0; j < n; ++j) {
        double drift = 0.0;
        for (int k = 0; k < n; ++k)
            if (k != j) drift += 1.0 / (x[j] - x[k]);
        y[j] = x[j] + h * drift + std::sqrt(h) * rng.normal();
    }
    bool ok = true;
    for (int j = 0; j + 1 < n; ++j)
        if (!(y[j + 1] - y[j] > g_min)) ok = false;
    if (ok) {
        x = std::move(y);
        return;
    }
    if (depth >= max_depth)
        throw step_failure("collision guard unsatisfiable after " + std::to_string(max_depth) +
                           " halvings at h = " + std::to_string(h));
    em_span(x, h / 2.0, g_min, depth + 1, max_depth, rng);
    em_span(x, h / 2.0, g_min, depth + 1, max_depth, rng);
}

inline std::vector<double> regularized_start(const Configuration& initial, double g_min) {
    std::vector<double> xs = initial.expanded();
    if (xs.empty()) throw invalid_parameter("simulation needs at least one particle");
    // coincident starts split by +-eps around the common value
    double eps = g_min / 10.0;
    std::vector<double> out;
    size_t i = 0;
    while (i < xs.size()) {
        size_t j = i;
        while (j < xs.size() && xs[j] == xs[i]) ++j;
        size_t g = j - i;
        for (size_t r = 0; r < g; ++r)
            out.push_back(xs[i] + (double(r) - double(g - 1) / 2.0) * eps);
        i = j;
    }
    return out;
}

} // namespace detail

inline SimResult simulate(const SimPlan& plan) {
    if (!(plan.dt > 0.0)) throw invalid_parameter("dt must be positive");
    if (plan.n_paths < 1) throw invalid_parameter("n_paths must be >= 1");
    if (plan.t_snapshots.empty()) throw invalid_parameter("need at least one snapshot time");
    double prev = 0.0;
    for (double t : plan.t_snapshots) {
        if (!(t > prev)) throw invalid_parameter("snapshot times must be increasing and positive");
        prev = t;
    }
    if (!plan.initial.is_finite())
        throw precondition_violation("simulation needs a finite initial configuration");

    SimResult res;
    res.start = detail::regularized_start(plan.initial, plan.g_min);
    res.n = int(res.start.size());
    res.n_paths = plan.n_paths;
    res.times = plan.t_snapshots;
    res.seed = plan.seed;
    size_t S = res.times.size();
    res.snaps.assign(S, std::vector<double>(size_t(res.n) * size_t(plan.n_paths)));

    auto run_range = [&](long long p_lo, long long p_hi) {
        for (long long p = p_lo; p < p_hi; ++p) {
            Xoshiro256pp rng(plan.seed, uint64_t(p));
            std::vector<double> x = res.start;
            double t_cur = 0.0;
            for (size_t si = 0; si < S; ++si) {
                double ts = res.times[si];
                while (t_cur < ts - 1e-15) {
                    double h = std::min(plan.dt, ts - t_cur);
                    detail::em_span(x, h, plan.g_min, 0, plan.max_halvings, rng);
                    t_cur += h;
                }
                for (int j = 0; j < res.n; ++j)
                    res.snaps[si][size_t(p) * size_t(res.n) + size_t(j)] = x[size_t(j)];
            }
        }
    };

    int T = thread_count(plan.threads);
    if (T <= 1 || plan.n_paths < 2 * T) {
        run_range(0, plan.n_paths);
    } else {
        std::vector<std::thread> workers;
        long long chunk = (plan.n_paths + T - 1) / T;
        for (int w = 0; w < T; ++w) {
            long long lo = w * chunk, hi = std::min<long long>(plan.n_paths, lo + chunk);
            if (lo >= hi) break;
            workers.emplace_back(run_range, lo, hi);
        }
        for (auto& th : workers) th.join();
    }
    return res;
}

namespace detail {

inline size_t snapshot_index(const SimResult& r, double t) {
    for (size_t i = 0; i < r.times.size(); ++i)
        if (std::abs(r.times[i] - t) <= 1e-12) return i;
    throw invalid_parameter("time is not a snapshot time");
}

inline int bin_of(const std::vector<double>& edges, double x) {
    if (x < edges.front() || x >= edges.back()) return -1;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    return int(it - edges.begin()) - 1;
}

} // namespace detail

// histogram estimate of rho_1(t, x) with binomial standard errors
inline EmpiricalField estimate_density(const SimResult& r, double t,
                                       const std::vector<double>& edges) {
    if (edges.size() < 2) throw invalid_parameter("need at least two bin edges");
    size_t si = detail::snapshot_index(r, t);
    EmpiricalField f;
    f.edges = edges;
    f.n_paths = r.n_paths;
    f.counts.assign(edges.size() - 1, 0);
    const std::vector<double>& xs = r.snaps[si];
    for (double x : xs) {
        int b = detail::bin_of(edges, x);
        if (b >= 0) ++f.counts[size_t(b)];
    }
    double trials = double(r.n_paths) * double(r.n);
    f.density.resize(f.counts.size());
    f.se.resize(f.counts.size());
    for (size_t b = 0; b < f.counts.size(); ++b) {
        double w = edges[b + 1] - edges[b];
        double c = double(f.counts[b]);
        f.density[b] = c / (double(r.n_paths) * w);
        f.se[b] = std::sqrt(std::max(c * (1.0 - c / trials), 1.0)) / (double(r.n_paths) * w);
    }
    return f;
}

// empirical rho_2(t, x, y) over ordered particle pairs (j != k), row-major grid
inline EmpiricalField estimate_two_point(const SimResult& r, double t,
                                         const std::vector<double>& xedges,
                                         const std::vector<double>& yedges) {
    if (xedges.size() < 2 || yedges.size() < 2)
        throw invalid_parameter("need at least two bin edges per axis");
    size_t si = detail::snapshot_index(r, t);
    EmpiricalField f;
    f.edges = xedges;
    f.edges2 = yedges;
    f.n_paths = r.n_paths;
    size_t BX = xedges.size() - 1, BY = yedges.size() - 1;
    f.counts.assign(BX * BY, 0);
    const std::vector<double>& xs = r.snaps[si];
    int n = r.n;
    for (long long p = 0; p < r.n_paths; ++p) {
        const double* row = xs.data() + size_t(p) * size_t(n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (j == k) continue;
                int bx = detail::bin_of(xedges, row[j]);
                int by = detail::bin_of(yedges, row[k]);
                if (bx >= 0 && by >= 0) ++f.counts[size_t(bx) * BY + size_t(by)];
            }
    }
    f.density.resize(f.counts.size());
    f.se.resize(f.counts.size());
    for (size_t bx = 0; bx < BX; ++bx)
        for (size_t by = 0; by < BY; ++by) {
            double area = (xedges[bx + 1] - xedges[bx]) * (yedges[by + 1] - yedges[by]);
            double c = double(f.counts[bx * BY + by]);
            f.density[bx * BY + by] = c / (double(r.n_paths) * area);
            f.se[bx * BY + by] = std::sqrt(std::max(c, 1.0)) / (double(r.n_paths) * area);
        }
    return f;
}

// joint density of (particle at t1, particle at t2), all ordered pairs
inline EmpiricalField estimate_two_time(const SimResult& r, double t1, double t2,
                                        const std::vector<double>& xedges,
                                        const std::vector<double>& yedges) {
    if (xedges.size() < 2 || yedges.size() < 2)
        throw invalid_parameter("need at least two bin edges per axis");
    size_t s1 = detail::snapshot_index(r, t1);
    size_t s2 = detail::snapshot_index(r, t2);
    EmpiricalField f;
    f.edges = xedges;
    f.edges2 = yedges;
    f.n_paths = r.n_paths;
    size_t BX = xedges.size() - 1, BY = yedges.size() - 1;
    f.counts.assign(BX * BY, 0);
    int n = r.n;
    for (long long p = 0; p < r.n_paths; ++p) {
        const double* a = r.snaps[s1].data() + size_t(p) * size_t(n);
        const double* b = r.snaps[s2].data() + size_t(p) * size_t(n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                int bx = detail::bin_of(xedges, a[j]);
                int by = detail::bin_of(yedges, b[k]);
                if (bx >= 0 && by >= 0) ++f.counts[size_t(bx) * BY + size_t(by)];
            }
    }
    f.density.resize(f.counts.size());
    f.se.resize(f.counts.size());
    for (size_t bx = 0; bx < BX; ++bx)
        for (size_t by = 0; by < BY; ++by) {
            double area = (xedges[bx + 1] - xedges[bx]) * (yedges[by + 1] - yedges[by]);
            double c = double(f.counts[bx * BY + by]);
            f.density[bx * BY + by] = c / (double(r.n_paths) * area);
            f.se[bx * BY + by] = std::sqrt(std::max(c, 1.0)) / (double(r.n_paths) * area);
        }
    return f;
}

// sample mean and SE of the center-of-mass increment sum_j X_j(t) - sum_j X_j(0)
inline std::pair<double, double> center_of_mass_drift(const SimResult& r, double t) {
    size_t si = detail::snapshot_index(r, t);
    double start_sum = 0.0;
    for (double x : r.start) start_sum += x;
    double mean = 0.0, m2 = 0.0;
    long long cnt = 0;
    for (long long p = 0; p < r.n_paths; ++p) {
        double s = 0.0;
        for (int j = 0; j < r.n; ++j) s += r.snaps[si][size_t(p) * size_t(r.n) + size_t(j)];
        double d = s - start_sum;
        ++cnt;
        double delta = d - mean;
        mean += delta / double(cnt);
        m2 += delta * (d - mean);
    }
    double var = cnt > 1 ? m2 / double(cnt - 1) : 0.0;
    return {mean, std::sqrt(var / double(cnt))};
}

} // namespace dyson
