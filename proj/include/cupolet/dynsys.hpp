#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cupolet/config.hpp"
#include "cupolet/errors.hpp"

namespace cupolet {

/// Point on a trajectory of the double scroll oscillator.
struct State {
    double v_c1 = 0.0;
    double v_c2 = 0.0;
    double i_l = 0.0;
    double t = 0.0;

    bool finite() const {
        return std::isfinite(v_c1) && std::isfinite(v_c2) && std::isfinite(i_l) && std::isfinite(t);
    }
};

inline bool operator==(const State& a, const State& b) {
    return a.v_c1 == b.v_c1 && a.v_c2 == b.v_c2 && a.i_l == b.i_l && a.t == b.t;
}

template <std::size_t N>
using Vec = std::array<double, N>;

/// Three-branch piecewise-linear conductance of the Chua diode. Odd in v.
inline double g_piecewise(double v, const SystemConfig& cfg) {
    if (v >= cfg.Bp) return cfg.m0 * (v - cfg.Bp) + cfg.m1 * cfg.Bp;
    if (v <= -cfg.Bp) return cfg.m0 * (v + cfg.Bp) - cfg.m1 * cfg.Bp;
    return cfg.m1 * v;
}

/// Right-hand side of the double scroll circuit equations.
inline State vector_field(const State& s, const SystemConfig& cfg) {
    State d;
    d.v_c1 = (cfg.G * (s.v_c2 - s.v_c1) - g_piecewise(s.v_c1, cfg)) / cfg.C1;
    d.v_c2 = (cfg.G * (s.v_c1 - s.v_c2) + s.i_l) / cfg.C2;
    d.i_l = -s.v_c2 / cfg.L;
    d.t = 1.0;
    return d;
}

/// The three fixed points: the origin plus a symmetric outer pair, one per
/// lobe. The outer pair solves -G v = g(v) on the outer branches.
inline std::vector<State> equilibria(const SystemConfig& cfg) {
    const double denom = cfg.m0 + cfg.G;
    if (denom == 0.0)
        throw DegenerateParameters("outer branch slope cancels line load (m0 == -G)");
    const double v = cfg.Bp * (cfg.m0 - cfg.m1) / denom;
    if (std::abs(v) < cfg.Bp)
        throw DegenerateParameters("outer equilibrium falls inside the inner branch");
    const double va = std::abs(v);
    State plus{va, 0.0, -cfg.G * va, 0.0};
    State minus{-va, 0.0, cfg.G * va, 0.0};
    return {State{0.0, 0.0, 0.0, 0.0}, plus, minus};
}

/// Outward anchor |v_c1| of the lobe equilibria; control surfaces start here.
inline double lobe_anchor(const SystemConfig& cfg) {
    const double denom = cfg.m0 + cfg.G;
    if (denom == 0.0)
        throw DegenerateParameters("outer branch slope cancels line load (m0 == -G)");
    return std::abs(cfg.Bp * (cfg.m0 - cfg.m1) / denom);
}

/// One classical 4th-order Runge-Kutta step of an autonomous system.
template <std::size_t N, class Rhs>
inline Vec<N> rk4_step(const Vec<N>& y, double h, Rhs&& f) {
    Vec<N> k1 = f(y);
    Vec<N> tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    Vec<N> k2 = f(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    Vec<N> k3 = f(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * k3[i];
    Vec<N> k4 = f(tmp);
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

namespace detail {

inline Vec<3> to_vec(const State& s) { return {s.v_c1, s.v_c2, s.i_l}; }

inline State to_state(const Vec<3>& y, double t) { return State{y[0], y[1], y[2], t}; }

struct DoubleScrollRhs {
    const SystemConfig* cfg;
    Vec<3> operator()(const Vec<3>& y) const {
        Vec<3> d;
        d[0] = (cfg->G * (y[1] - y[0]) - g_piecewise(y[0], *cfg)) / cfg->C1;
        d[1] = (cfg->G * (y[0] - y[1]) + y[2]) / cfg->C2;
        d[2] = -y[1] / cfg->L;
        return d;
    }
};

inline void check_blowup(const Vec<3>& y, const SystemConfig& cfg) {
    if (std::abs(y[0]) > cfg.blowup_norm || std::abs(y[1]) > cfg.blowup_norm ||
        std::abs(y[2]) > cfg.blowup_norm)
        throw NumericalBlowup("state left the configured bound");
}

}  // namespace detail

/// Advances a state by one fixed step of the double scroll flow.
inline State step_once(const State& s, const SystemConfig& cfg) {
    detail::DoubleScrollRhs rhs{&cfg};
    Vec<3> y = rk4_step(detail::to_vec(s), cfg.step_size, rhs);
    detail::check_blowup(y, cfg);
    return detail::to_state(y, s.t + cfg.step_size);
}

}  // namespace cupolet
