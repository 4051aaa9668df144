#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace mmfg {

using Vec = std::vector<double>;

namespace util {

/// Worker count for slice-parallel loops. MMFG_WORKERS overrides; default 1.
inline int worker_count() {
    if (const char* env = std::getenv("MMFG_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

/// Runs fn(i) for i in [0, n). Work is chunked over workers; every fn(i)
/// writes only to slot i of preallocated output, so results do not depend
/// on the worker count. The first worker exception is rethrown after join.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    int workers = worker_count();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(w);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::size_t chunk = (n + w - 1) / w;
    for (std::size_t k = 0; k < w; ++k) {
        std::size_t lo = k * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// log(sum_i w_i * exp(x_i)) with the usual max shift. Weights must be >= 0.
inline double log_sum_exp(const Vec& x, const Vec& w) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (w[i] > 0.0 && x[i] > m) m = x[i];
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (w[i] > 0.0) s += w[i] * std::exp(x[i] - m);
    return m + std::log(s);
}

/// Shortest decimal string that round-trips the double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline double l1_distance(const Vec& a, const Vec& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
    return d;
}

inline double sum(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
}

/// Deterministic RNG with portable double generation (the standard
/// distributions are implementation-defined; this is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // in [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }
    /// Random probability vector of length n (normalized positive entries).
    Vec simplex(std::size_t n) {
        Vec v(n);
        double s = 0.0;
        for (auto& x : v) {
            x = 0.05 + uniform();
            s += x;
        }
        for (auto& x : v) x /= s;
        return v;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace util
}  // namespace mmfg
