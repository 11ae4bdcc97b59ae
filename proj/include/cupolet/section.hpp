#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cupolet/config.hpp"
#include "cupolet/dynsys.hpp"
#include "cupolet/errors.hpp"
#include "cupolet/parallel.hpp"

namespace cupolet {

/// One control surface: the half-plane {v_c2 = 0} on the outward side of a
/// lobe's equilibrium, crossed in a single direction. Crossing positions are
/// reduced to a 1-D coordinate along the principal direction of the
/// calibration cloud; the transverse in-plane coordinate is remembered per
/// bin so bin centers sit on the attractor ribbon.
struct PlaneGeometry {
    double anchor_v = 0.0;    // signed equilibrium v_c1; side condition is v_c1 beyond it
    int direction = 0;        // required sign of dv_c2/dt at a crossing
    double mean_v = 0.0;      // crossing-cloud centroid, (v_c1, i_l)
    double mean_i = 0.0;
    double axis_v = 0.0;      // unit principal direction in (v_c1, i_l)
    double axis_i = 0.0;
    double lo = 0.0;          // axis-coordinate range of the calibrated cloud
    double hi = 0.0;
    std::vector<double> bin_ortho;  // per-bin local mean of the transverse coordinate

    double axis_coord(const State& s) const {
        return (s.v_c1 - mean_v) * axis_v + (s.i_l - mean_i) * axis_i;
    }
    double ortho_coord(const State& s) const {
        return -(s.v_c1 - mean_v) * axis_i + (s.i_l - mean_i) * axis_v;
    }
    bool on_side(double v_c1) const {
        return anchor_v > 0 ? v_c1 >= anchor_v : v_c1 <= anchor_v;
    }
};

struct SectionSet {
    PlaneGeometry plane[2];  // 0 = left lobe, 1 = right lobe
    long long bins_per_plane = 0;
    double crossing_tolerance = 0.0;
    State default_start;           // bin center of the first calibration crossing
    double attractor_diameter = 0.0;
    Vec<3> bbox_lo{}, bbox_hi{};
    std::uint64_t fingerprint = 0;

    double bin_width(int plane_id) const {
        return (plane[plane_id].hi - plane[plane_id].lo) / static_cast<double>(bins_per_plane);
    }
};

struct BinRef {
    int plane = 0;
    long long bin = 0;
    bool out_of_range = false;
};

namespace detail {

/// Sign-change crossing of v_c2 = 0 located inside one integration step,
/// refined by bisection until |v_c2| <= tol.
inline State refine_crossing(const State& step_start, const SystemConfig& cfg, double tol) {
    State lo = step_start;
    const bool lo_neg = lo.v_c2 < 0;
    double h = cfg.step_size;
    for (int it = 0; it < 200 && std::abs(lo.v_c2) > tol; ++it) {
        h *= 0.5;
        DoubleScrollRhs rhs{&cfg};
        Vec<3> y = rk4_step(to_vec(lo), h, rhs);
        State mid = to_state(y, lo.t + h);
        if ((mid.v_c2 < 0) == lo_neg) lo = mid;
    }
    return lo;
}

struct RawCrossing {
    State state;
    int plane;
    int direction;
};

/// Advances until v_c2 changes sign on the outward side of either lobe and
/// returns the refined crossing. Detection skips the very first step so a
/// caller sitting on a fresh crossing does not re-detect it. When `trace` is
/// given, every intermediate step plus the refined crossing is appended.
template <class PlaneFilter>
inline RawCrossing next_raw_crossing(State s, const SystemConfig& cfg, double anchor,
                                     PlaneFilter&& accept,
                                     std::vector<State>* trace = nullptr) {
    const double t_limit = s.t + cfg.max_arc_time;
    double prev_v2 = s.v_c2;
    bool first = true;
    while (s.t < t_limit) {
        State ns = step_once(s, cfg);
        if (!first && (prev_v2 < 0) != (ns.v_c2 < 0)) {
            State c = refine_crossing(s, cfg, cfg.crossing_tolerance);
            int plane = -1;
            if (c.v_c1 >= anchor) plane = 1;
            else if (c.v_c1 <= -anchor) plane = 0;
            if (plane >= 0) {
                int dir = vector_field(c, cfg).v_c2 > 0 ? +1 : -1;
                if (accept(plane, dir)) {
                    if (trace) trace->push_back(c);
                    return RawCrossing{c, plane, dir};
                }
            }
        }
        first = false;
        prev_v2 = ns.v_c2;
        if (trace) trace->push_back(ns);
        s = ns;
    }
    throw CrossingTimeout("no control-plane crossing within max_arc_time");
}

}  // namespace detail

/// Advances a state to its first directional crossing of either control
/// plane. The returned state satisfies |v_c2| <= crossing_tolerance.
inline std::pair<State, int> integrate_to_crossing(const State& s, const SystemConfig& cfg,
                                                   const SectionSet& ss,
                                                   std::vector<State>* trace = nullptr) {
    auto rc = detail::next_raw_crossing(
        s, cfg, std::abs(ss.plane[1].anchor_v),
        [&](int plane, int dir) { return dir == ss.plane[plane].direction; }, trace);
    return {rc.state, rc.plane};
}

/// Maps an on-section state to its control bin. Coordinates outside the
/// calibrated range clamp to the end bin and set the out-of-range flag.
inline BinRef bin_lookup(const State& p, const SectionSet& ss) {
    if (std::abs(p.v_c2) > ss.crossing_tolerance)
        throw NotOnSection("point is not on a control plane (v_c2 too large)");
    int plane;
    if (ss.plane[1].on_side(p.v_c1)) plane = 1;
    else if (ss.plane[0].on_side(p.v_c1)) plane = 0;
    else throw NotOnSection("point is outside both lobes' control surfaces");

    const PlaneGeometry& pg = ss.plane[plane];
    const double u = pg.axis_coord(p);
    const double w = ss.bin_width(plane);
    BinRef ref;
    ref.plane = plane;
    if (u < pg.lo) {
        ref.bin = 0;
        ref.out_of_range = true;
    } else if (u > pg.hi) {
        ref.bin = ss.bins_per_plane - 1;
        ref.out_of_range = true;
    } else {
        ref.bin = std::min(static_cast<long long>((u - pg.lo) / w), ss.bins_per_plane - 1);
    }
    return ref;
}

/// State at a bin interval's midpoint, with the transverse coordinate taken
/// from the calibration cloud's local mean. Lies exactly on the plane.
inline State bin_center(int plane_id, long long bin_index, const SectionSet& ss) {
    if (plane_id < 0 || plane_id > 1 || bin_index < 0 || bin_index >= ss.bins_per_plane)
        throw IndexOutOfRange("bin reference outside the section partition");
    const PlaneGeometry& pg = ss.plane[plane_id];
    const double u = pg.lo + (static_cast<double>(bin_index) + 0.5) * ss.bin_width(plane_id);
    const double o = pg.bin_ortho[static_cast<size_t>(bin_index)];
    State c;
    c.v_c1 = pg.mean_v + u * pg.axis_v - o * pg.axis_i;
    c.v_c2 = 0.0;
    c.i_l = pg.mean_i + u * pg.axis_i + o * pg.axis_v;
    c.t = 0.0;
    return c;
}

/// Runs an uncontrolled trajectory, discards a 100-crossing transient and
/// builds the two control planes from the recorded crossing clouds.
inline SectionSet calibrate(const SystemConfig& cfg, long long n_crossings,
                            std::uint64_t rng_seed) {
    cfg.validate();
    if (n_crossings < 1000)
        throw CalibrationFailure("calibration requires n_crossings >= 1000");

    const double anchor = lobe_anchor(cfg);
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    State s{anchor + 0.01 * u(rng), 0.005 * u(rng), -cfg.G * anchor + 0.01 * u(rng), 0.0};

    Vec<3> bb_lo{1e300, 1e300, 1e300}, bb_hi{-1e300, -1e300, -1e300};

    struct Rec {
        State state;
        int plane;
        int dir;
    };
    std::vector<Rec> recs;
    recs.reserve(static_cast<size_t>(n_crossings));

    const long long transient = 100;
    long long seen = 0;
    double prev_v2 = s.v_c2;
    bool first = true;
    while (seen < transient + n_crossings) {
        State ns = step_once(s, cfg);
        bb_lo[0] = std::min(bb_lo[0], ns.v_c1);
        bb_lo[1] = std::min(bb_lo[1], ns.v_c2);
        bb_lo[2] = std::min(bb_lo[2], ns.i_l);
        bb_hi[0] = std::max(bb_hi[0], ns.v_c1);
        bb_hi[1] = std::max(bb_hi[1], ns.v_c2);
        bb_hi[2] = std::max(bb_hi[2], ns.i_l);
        if (!first && (prev_v2 < 0) != (ns.v_c2 < 0)) {
            State c = detail::refine_crossing(s, cfg, cfg.crossing_tolerance);
            int plane = -1;
            if (c.v_c1 >= anchor) plane = 1;
            else if (c.v_c1 <= -anchor) plane = 0;
            if (plane >= 0) {
                ++seen;
                if (seen > transient) {
                    int dir = vector_field(c, cfg).v_c2 > 0 ? +1 : -1;
                    recs.push_back(Rec{c, plane, dir});
                }
            }
        }
        first = false;
        prev_v2 = ns.v_c2;
        s = ns;
    }

    SectionSet ss;
    ss.bins_per_plane = cfg.bins_per_plane;
    ss.crossing_tolerance = cfg.crossing_tolerance;
    ss.fingerprint = cfg.fingerprint();
    ss.bbox_lo = bb_lo;
    ss.bbox_hi = bb_hi;
    {
        double dx = bb_hi[0] - bb_lo[0], dy = bb_hi[1] - bb_lo[1], dz = bb_hi[2] - bb_lo[2];
        ss.attractor_diameter = std::sqrt(dx * dx + dy * dy + dz * dz);
    }

    for (int p = 0; p < 2; ++p) {
        long long n_p = 0, n_up = 0;
        for (const auto& r : recs)
            if (r.plane == p) {
                ++n_p;
                if (r.dir > 0) ++n_up;
            }
        if (n_p * 10 < static_cast<long long>(recs.size()))
            throw CalibrationFailure("control plane " + std::to_string(p) +
                                     " received fewer than 10% of crossings");
        PlaneGeometry& pg = ss.plane[p];
        pg.anchor_v = p == 1 ? anchor : -anchor;
        pg.direction = 2 * n_up >= n_p ? +1 : -1;
    }

    for (int p = 0; p < 2; ++p) {
        PlaneGeometry& pg = ss.plane[p];
        double mv = 0.0, mi = 0.0;
        long long n = 0;
        for (const auto& r : recs)
            if (r.plane == p && r.dir == pg.direction) {
                mv += r.state.v_c1;
                mi += r.state.i_l;
                ++n;
            }
        mv /= static_cast<double>(n);
        mi /= static_cast<double>(n);

        double cvv = 0.0, cii = 0.0, cvi = 0.0;
        for (const auto& r : recs)
            if (r.plane == p && r.dir == pg.direction) {
                double a = r.state.v_c1 - mv, b = r.state.i_l - mi;
                cvv += a * a;
                cii += b * b;
                cvi += a * b;
            }
        // Leading eigenvector of the 2x2 covariance, sign-normalized.
        double half_tr = 0.5 * (cvv + cii);
        double disc = std::sqrt(std::max(0.0, half_tr * half_tr - (cvv * cii - cvi * cvi)));
        double lam = half_tr + disc;
        double ev_v, ev_i;
        if (std::abs(cvi) > 1e-300) {
            ev_v = lam - cii;
            ev_i = cvi;
        } else {
            ev_v = cvv >= cii ? 1.0 : 0.0;
            ev_i = cvv >= cii ? 0.0 : 1.0;
        }
        double norm = std::hypot(ev_v, ev_i);
        ev_v /= norm;
        ev_i /= norm;
        if (ev_v < 0 || (ev_v == 0 && ev_i < 0)) {
            ev_v = -ev_v;
            ev_i = -ev_i;
        }
        pg.mean_v = mv;
        pg.mean_i = mi;
        pg.axis_v = ev_v;
        pg.axis_i = ev_i;

        double lo = 1e300, hi = -1e300;
        for (const auto& r : recs)
            if (r.plane == p && r.dir == pg.direction) {
                double uc = pg.axis_coord(r.state);
                lo = std::min(lo, uc);
                hi = std::max(hi, uc);
            }
        double pad = 0.01 * (hi - lo);
        pg.lo = lo - pad;
        pg.hi = hi + pad;

        // Transverse coordinate per bin: local mean where the cloud has
        // points, linear interpolation across empty bins.
        const auto nb = static_cast<size_t>(cfg.bins_per_plane);
        std::vector<double> sum(nb, 0.0);
        std::vector<long long> count(nb, 0);
        const double w = (pg.hi - pg.lo) / static_cast<double>(cfg.bins_per_plane);
        for (const auto& r : recs)
            if (r.plane == p && r.dir == pg.direction) {
                double uc = pg.axis_coord(r.state);
                auto b = static_cast<long long>((uc - pg.lo) / w);
                b = std::clamp(b, 0LL, cfg.bins_per_plane - 1);
                sum[static_cast<size_t>(b)] += pg.ortho_coord(r.state);
                count[static_cast<size_t>(b)] += 1;
            }
        pg.bin_ortho.assign(nb, 0.0);
        long long prev_filled = -1;
        for (size_t b = 0; b < nb; ++b) {
            if (count[b] == 0) continue;
            double mean_o = sum[b] / static_cast<double>(count[b]);
            pg.bin_ortho[b] = mean_o;
            if (prev_filled < 0) {
                for (size_t j = 0; j < b; ++j) pg.bin_ortho[j] = mean_o;
            } else {
                double prev_o = pg.bin_ortho[static_cast<size_t>(prev_filled)];
                double span = static_cast<double>(b) - static_cast<double>(prev_filled);
                for (auto j = static_cast<size_t>(prev_filled) + 1; j < b; ++j)
                    pg.bin_ortho[j] =
                        prev_o + (mean_o - prev_o) *
                                     (static_cast<double>(j) - static_cast<double>(prev_filled)) / span;
            }
            prev_filled = static_cast<long long>(b);
        }
        if (prev_filled >= 0)
            for (auto j = static_cast<size_t>(prev_filled) + 1; j < nb; ++j)
                pg.bin_ortho[j] = pg.bin_ortho[static_cast<size_t>(prev_filled)];
    }

    // Deterministic, reproducible start for cupolet generation.
    for (const auto& r : recs) {
        if (r.dir == ss.plane[r.plane].direction) {
            BinRef b = bin_lookup(r.state, ss);
            ss.default_start = bin_center(b.plane, b.bin, ss);
            break;
        }
    }
    return ss;
}

/// Per-bin record of the next M_max lobe symbols under free evolution.
struct CodingTable {
    long long m_max = 0;
    std::vector<std::string> words[2];  // words[plane][bin], symbols in {0,1}
    std::uint64_t fingerprint = 0;
};

/// Future lobe word of one bin: free-run from the bin center and record the
/// next m_max plane labels.
inline std::string future_word(int plane_id, long long bin_index, const SectionSet& ss,
                               const SystemConfig& cfg, long long m_max) {
    std::string word;
    word.reserve(static_cast<size_t>(m_max));
    State s = bin_center(plane_id, bin_index, ss);
    for (long long k = 0; k < m_max; ++k) {
        auto [c, plane] = integrate_to_crossing(s, cfg, ss);
        word.push_back(plane == 1 ? '1' : '0');
        s = c;
    }
    return word;
}

inline CodingTable build_coding_table(const SectionSet& ss, const SystemConfig& cfg,
                                      int workers = 0) {
    CodingTable ct;
    ct.m_max = cfg.M_max;
    ct.fingerprint = ss.fingerprint;
    for (int p = 0; p < 2; ++p) ct.words[p].assign(static_cast<size_t>(ss.bins_per_plane), {});
    const auto nb = static_cast<size_t>(ss.bins_per_plane);
    parallel_for(2 * nb, workers, [&](size_t idx) {
        int p = idx < nb ? 0 : 1;
        size_t b = idx < nb ? idx : idx - nb;
        try {
            ct.words[p][b] = future_word(p, static_cast<long long>(b), ss, cfg, cfg.M_max);
        } catch (const CrossingTimeout&) {
            throw CrossingTimeout("coding table: timeout from plane " + std::to_string(p) +
                                  " bin " + std::to_string(b));
        }
    });
    return ct;
}

/// Nearest bin on the same plane whose future word keeps the next M-1 lobe
/// symbols and flips the M-th: the smallest relocation that changes the lobe
/// M loops downstream. Ties break toward the lower index.
inline long long macro_target(int plane_id, long long bin_index, const CodingTable& ct,
                              long long M) {
    if (M < 1 || M > ct.m_max)
        throw IndexOutOfRange("macrocontrol horizon outside [1, M_max]");
    const auto& words = ct.words[plane_id];
    if (bin_index < 0 || bin_index >= static_cast<long long>(words.size()))
        throw IndexOutOfRange("bin index outside the coding table");
    const std::string& cur = words[static_cast<size_t>(bin_index)];
    const auto m = static_cast<size_t>(M);
    long long best = -1;
    long long best_dist = -1;
    for (long long b = 0; b < static_cast<long long>(words.size()); ++b) {
        const std::string& w = words[static_cast<size_t>(b)];
        if (w.compare(0, m - 1, cur, 0, m - 1) != 0) continue;
        if (w[m - 1] == cur[m - 1]) continue;
        long long dist = std::abs(b - bin_index);
        if (best < 0 || dist < best_dist || (dist == best_dist && b < best)) {
            best = b;
            best_dist = dist;
        }
    }
    if (best < 0)
        throw NoReachableTarget("no bin flips the lobe " + std::to_string(M) +
                                " loops downstream");
    return best;
}

/// Macro target at the smallest feasible horizon >= M. Bins that have just
/// switched lobes cannot flip their next symbols (the flow forbids an
/// immediate switch-back), so the requested horizon escalates past the
/// grammar-locked positions.
inline long long macro_target_escalating(int plane_id, long long bin_index,
                                         const CodingTable& ct, long long M) {
    for (long long m = M; m <= ct.m_max; ++m) {
        try {
            return macro_target(plane_id, bin_index, ct, m);
        } catch (const NoReachableTarget&) {
        }
    }
    throw NoReachableTarget("no reachable macro target for plane " + std::to_string(plane_id) +
                            " bin " + std::to_string(bin_index) + " at any horizon >= " +
                            std::to_string(M));
}

}  // namespace cupolet
