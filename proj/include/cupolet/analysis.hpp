#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "cupolet/cupolet.hpp"
#include "cupolet/entangle.hpp"

namespace cupolet {

/// Weights of the chaotic state over the catalog's cupolets at one instant.
struct StateVector {
    std::vector<std::pair<std::string, double>> weights;  // catalog key -> alpha
    double timestamp = 0.0;

    double weight_of(const std::string& key) const {
        for (const auto& [k, w] : weights)
            if (k == key) return w;
        return 0.0;
    }
};

/// Gaussian-kernel weights on the distance from s to each cupolet's orbit,
/// normalized to sum 1. Computed with the common-shift trick so far-away
/// states cannot underflow to 0/0.
inline StateVector superposition_weights(const State& s, const Catalog& cat,
                                         double kernel_width) {
    if (cat.entries.empty()) throw EmptyCatalog("superposition needs a non-empty catalog");
    if (!(kernel_width > 0)) throw FormatError("kernel width must be positive");
    StateVector sv;
    sv.timestamp = s.t;
    std::vector<double> d2;
    d2.reserve(cat.entries.size());
    double d2_min = std::numeric_limits<double>::infinity();
    for (const auto& [key, cup] : cat.entries) {
        if (cup.orbit_samples.empty())
            throw EmptyCatalog("cupolet " + cup.name + " carries no orbit samples");
        double d = distance_to_orbit(s, cup);
        d2.push_back(d * d);
        d2_min = std::min(d2_min, d * d);
    }
    double sum = 0.0;
    std::size_t i = 0;
    const double w2 = kernel_width * kernel_width;
    for (const auto& [key, cup] : cat.entries) {
        double a = std::exp(-(d2[i] - d2_min) / w2);
        sv.weights.emplace_back(key, a);
        sum += a;
        ++i;
    }
    for (auto& [key, a] : sv.weights) a /= sum;
    return sv;
}

/// True iff after the transient the trajectory's weight on cupolet `key`
/// exceeds the threshold at every crossing.
inline bool collapse_check(const std::vector<State>& crossing_states, long long transient,
                           const std::string& key, const Catalog& cat, double kernel_width,
                           double threshold) {
    if (cat.entries.find(key) == cat.entries.end())
        throw EmptyCatalog("collapse target " + key + " is not in the catalog");
    for (std::size_t i = static_cast<std::size_t>(std::max<long long>(transient, 0));
         i < crossing_states.size(); ++i) {
        StateVector sv = superposition_weights(crossing_states[i], cat, kernel_width);
        if (!(sv.weight_of(key) > threshold)) return false;
    }
    return true;
}

/// Block entropies of a binary word and the Kolmogorov-style rate estimate.
struct EntropyEstimate {
    std::vector<long long> block_sizes;
    std::vector<double> H;  // nats
    double rate = 0.0;      // nats per symbol
};

/// Empirical n-block entropies with cyclic counting: every position starts a
/// block, wrapping at the end. Counting cyclically keeps the marginalization
/// identity exact, so H(n) is non-decreasing and a repeated word of period p
/// gives H(n) = ln p exactly once n >= p, hence rate 0 exactly.
inline EntropyEstimate block_entropy_rate(const std::string& symbols, long long n_max) {
    if (n_max < 2 || n_max > 60) throw FormatError("block entropy needs 2 <= n_max <= 60");
    const auto len = static_cast<long long>(symbols.size());
    if (len < 10 * n_max)
        throw InsufficientData("need at least 10 * n_max symbols, have " + std::to_string(len));
    for (char c : symbols)
        if (c != '0' && c != '1') throw FormatError("symbol stream must be binary");

    EntropyEstimate est;
    for (long long n = 1; n <= n_max; ++n) {
        std::unordered_map<std::uint64_t, long long> counts;
        counts.reserve(static_cast<std::size_t>(std::min<long long>(len, 1LL << std::min<long long>(n, 20))));
        std::uint64_t block = 0;
        const std::uint64_t mask = n >= 64 ? ~0ull : (1ull << n) - 1;
        for (long long i = 0; i < n - 1; ++i)
            block = (block << 1 | static_cast<std::uint64_t>(symbols[static_cast<std::size_t>(i)] - '0'));
        for (long long i = 0; i < len; ++i) {
            const auto next = static_cast<std::uint64_t>(
                symbols[static_cast<std::size_t>((i + n - 1) % len)] - '0');
            block = (block << 1 | next) & mask;
            counts[block] += 1;
        }
        double H = 0.0;
        const double N = static_cast<double>(len);
        for (const auto& [b, c] : counts) {
            const double p = static_cast<double>(c) / N;
            H -= p * std::log(p);
        }
        est.block_sizes.push_back(n);
        est.H.push_back(H);
    }
    est.rate = est.H[static_cast<std::size_t>(n_max - 1)] - est.H[static_cast<std::size_t>(n_max - 2)];
    return est;
}

namespace detail {

/// Benettin two-trajectory estimate for an arbitrary 3-D field.
template <class Rhs>
inline double benettin_exponent(Rhs&& rhs, Vec<3> y, double dt, double duration,
                                int renorm_steps, double delta0, std::mt19937_64& rng,
                                double blowup = 1e6) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec<3> d{u(rng), u(rng), u(rng)};
    double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    Vec<3> z{y[0] + delta0 * d[0] / norm, y[1] + delta0 * d[1] / norm,
             y[2] + delta0 * d[2] / norm};
    const auto total_steps = static_cast<long long>(duration / dt);
    double log_sum = 0.0;
    long long renorms = 0;
    for (long long step = 1; step <= total_steps; ++step) {
        y = rk4_step(y, dt, rhs);
        z = rk4_step(z, dt, rhs);
        for (double c : y)
            if (std::abs(c) > blowup) throw NumericalBlowup("reference trajectory diverged");
        if (step % renorm_steps == 0) {
            Vec<3> dv{z[0] - y[0], z[1] - y[1], z[2] - y[2]};
            const double dist = std::sqrt(dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]);
            if (dist > 0) {
                log_sum += std::log(dist / delta0);
                for (int i = 0; i < 3; ++i) z[i] = y[i] + dv[i] * (delta0 / dist);
            }
            ++renorms;
        }
    }
    const double elapsed = static_cast<double>(renorms) * static_cast<double>(renorm_steps) * dt;
    return log_sum / elapsed;
}

}  // namespace detail

/// Largest Lyapunov exponent of the double scroll attractor, by two-
/// trajectory renormalization after a settle-in transient.
inline double max_lyapunov(const SystemConfig& cfg, double duration) {
    if (duration < 1.0) throw FormatError("Lyapunov estimation needs duration >= 1");
    std::mt19937_64 rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double anchor = lobe_anchor(cfg);
    Vec<3> y{anchor + 0.01 * u(rng), 0.005 * u(rng), -cfg.G * anchor + 0.01 * u(rng)};
    detail::DoubleScrollRhs rhs{&cfg};
    const auto settle = static_cast<long long>(100.0 / cfg.step_size);
    for (long long i = 0; i < settle; ++i) {
        y = rk4_step(y, cfg.step_size, rhs);
        detail::check_blowup(y, cfg);
    }
    return detail::benettin_exponent(rhs, y, cfg.step_size, duration, 50, 1e-8, rng,
                                     cfg.blowup_norm);
}

/// Finite-time exponent of one orbit period starting from a given state:
/// ln(|growth|)/T of a small perturbation carried around once, uncontrolled.
template <class Rhs>
inline double one_period_exponent(Rhs&& rhs, const Vec<3>& start, double period_time,
                                  double dt, const Vec<3>& direction, double delta0) {
    Vec<3> y = start;
    double norm = std::sqrt(direction[0] * direction[0] + direction[1] * direction[1] +
                            direction[2] * direction[2]);
    Vec<3> z{start[0] + delta0 * direction[0] / norm, start[1] + delta0 * direction[1] / norm,
             start[2] + delta0 * direction[2] / norm};
    const auto steps = static_cast<long long>(std::llround(period_time / dt));
    for (long long i = 0; i < steps; ++i) {
        y = rk4_step(y, dt, rhs);
        z = rk4_step(z, dt, rhs);
    }
    Vec<3> dv{z[0] - y[0], z[1] - y[1], z[2] - y[2]};
    const double dist = std::sqrt(dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]);
    return std::log(dist / delta0) / period_time;
}

/// Local Lyapunov exponent of a cupolet: the one-period exponent averaged
/// over starting phases (cycle nodes), seeded perturbation directions.
inline double local_lyapunov(const Cupolet& cup, const SectionSet& ss, const SystemConfig& cfg,
                             int max_phases = 16) {
    if (cup.orbit_samples.empty())
        throw EmptyCatalog("local exponent needs a cupolet with orbit samples");
    detail::DoubleScrollRhs rhs{&cfg};
    std::mt19937_64 rng(cfg.rng_seed ^ 0xda3e39cb94b95bdbull);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const long long P = cup.period_crossings;
    const long long n_phases = std::min<long long>(P, max_phases);
    double sum = 0.0;
    for (long long k = 0; k < n_phases; ++k) {
        const long long idx = k * P / n_phases;
        const CycleNode& nd = cup.bin_cycle[static_cast<std::size_t>(idx)];
        State c = bin_center(nd.plane, nd.bin, ss);
        Vec<3> dir{u(rng), u(rng), u(rng)};
        sum += one_period_exponent(rhs, detail::to_vec(c), cup.period_time, cfg.step_size, dir,
                                   1e-9);
    }
    return sum / static_cast<double>(n_phases);
}

inline constexpr std::size_t kSpectrumPoints = 1024;

namespace detail {

/// In-place iterative radix-2 FFT; n must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

/// v_c1 waveform of one period, uniformly resampled to kSpectrumPoints.
inline std::vector<double> resample_waveform(const Cupolet& cup) {
    if (cup.orbit_samples.empty() || cup.period_time <= 0)
        throw EmptyCatalog("spectrum needs a cupolet with orbit samples");
    const auto& smp = cup.orbit_samples;
    std::vector<double> wave(kSpectrumPoints);
    std::size_t lo = 0;
    for (std::size_t i = 0; i < kSpectrumPoints; ++i) {
        const double t = cup.period_time * static_cast<double>(i) /
                         static_cast<double>(kSpectrumPoints);
        while (lo + 1 < smp.size() && smp[lo + 1].t <= t) ++lo;
        if (lo + 1 < smp.size()) {
            const double span = smp[lo + 1].t - smp[lo].t;
            const double f = span > 0 ? (t - smp[lo].t) / span : 0.0;
            wave[i] = smp[lo].v_c1 + f * (smp[lo + 1].v_c1 - smp[lo].v_c1);
        } else {
            // Wrap the final stretch onto the first sample one period later.
            const double span = cup.period_time - smp.back().t;
            const double f = span > 0 ? (t - smp.back().t) / span : 0.0;
            wave[i] = smp.back().v_c1 + f * (smp.front().v_c1 - smp.back().v_c1);
        }
    }
    return wave;
}

/// Magnitude spectrum of one period of the v_c1 waveform.
inline std::vector<double> cupolet_spectrum(const Cupolet& cup) {
    std::vector<double> wave = resample_waveform(cup);
    std::vector<std::complex<double>> a(wave.begin(), wave.end());
    detail::fft_radix2(a);
    std::vector<double> mags(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mags[i] = std::abs(a[i]);
    return mags;
}

/// Share of non-DC power carried by the strongest one-sided frequency bin.
inline double dominant_peak_share(const std::vector<double>& mags) {
    const std::size_t n = mags.size();
    double total = 0.0, best = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        double p = mags[k] * mags[k];
        if (k != n / 2) p += mags[n - k] * mags[n - k];
        total += p;
        best = std::max(best, p);
    }
    return total > 0 ? best / total : 0.0;
}

struct GramMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> m;
};

/// Pairwise inner products of the zero-meaned, unit-normalized single-period
/// waveforms of every cupolet in the catalog.
inline GramMatrix gram_matrix(const Catalog& cat) {
    if (cat.entries.size() < 2)
        throw EmptyCatalog("gram matrix needs at least two cupolets");
    GramMatrix g;
    std::vector<std::vector<double>> waves;
    for (const auto& [key, cup] : cat.entries) {
        std::vector<double> w = resample_waveform(cup);
        double mean = 0.0;
        for (double x : w) mean += x;
        mean /= static_cast<double>(w.size());
        double norm2 = 0.0;
        for (double& x : w) {
            x -= mean;
            norm2 += x * x;
        }
        const double norm = std::sqrt(norm2);
        if (norm > 0)
            for (double& x : w) x /= norm;
        waves.push_back(std::move(w));
        g.names.push_back(cup.name);
    }
    const std::size_t n = waves.size();
    g.m.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < kSpectrumPoints; ++k) dot += waves[i][k] * waves[j][k];
            g.m[i][j] = dot;
            g.m[j][i] = dot;
        }
    return g;
}

}  // namespace cupolet
