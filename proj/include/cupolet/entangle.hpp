#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cupolet/cupolet.hpp"
#include "cupolet/exchange.hpp"

namespace cupolet {

/// Rotations r for which emitted^inf equals the control stream started at
/// phase r. Both words repeat forever, so they are compared over one common
/// period.
inline std::vector<int> stream_match_rotations(const std::string& emitted,
                                               const std::string& control) {
    std::vector<int> rots;
    if (emitted.empty() || control.empty()) return rots;
    const std::size_t L = std::lcm(emitted.size(), control.size());
    for (std::size_t r = 0; r < control.size(); ++r) {
        bool ok = true;
        for (std::size_t i = 0; i < L && ok; ++i)
            ok = emitted[i % emitted.size()] == control[(r + i) % control.size()];
        if (ok) rots.push_back(static_cast<int>(r));
    }
    return rots;
}

/// A mutually stabilizing cupolet pair. start_a / start_b are the cycle
/// indices of each system's first crossing; they close the two-way feedback
/// loop so each emitted block continues exactly the stream the partner is
/// consuming.
struct EntangledPair {
    std::string cupolet_a;
    std::string cupolet_b;
    std::string exchange_label;
    int rot_ab = 0;          // emit(V_a) matches control_b started at this phase
    int rot_ba = 0;
    long long start_a = 0;
    long long start_b = 0;
    bool certified = false;
};

namespace detail {

inline std::string rotate_word(const std::string& s, std::size_t r) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(s[(r + i) % s.size()]);
    return out;
}

/// The emitted word acts as a control sequence, so the receiver consumes its
/// periodic extension: one partner-period's worth of bits per block.
inline std::string repeat_to(const std::string& word, long long len) {
    std::string out;
    out.reserve(static_cast<std::size_t>(len));
    for (long long i = 0; i < len; ++i)
        out.push_back(word[static_cast<std::size_t>(i) % word.size()]);
    return out;
}

/// Tests whether starting A at cycle index alpha and B at beta closes the
/// loop: each emitted block, extended periodically over one partner period,
/// must equal exactly the control stream the partner consumes there.
inline bool closes_loop(const Cupolet& a, const Cupolet& b, const ExchangeFunction& f,
                        long long alpha, long long beta) {
    std::string block_a, block_b;
    try {
        block_a = emit(f, rotate_word(a.visitation, static_cast<std::size_t>(alpha)));
        block_b = emit(f, rotate_word(b.visitation, static_cast<std::size_t>(beta)));
    } catch (const Error&) {
        return false;
    }
    auto stream_of = [](const Cupolet& c, long long from_index, long long len) {
        std::string s;
        s.reserve(static_cast<std::size_t>(len));
        const auto n = static_cast<long long>(c.control.size());
        const long long p0 = phase_at(c, from_index);
        for (long long k = 0; k < len; ++k)
            s.push_back(c.control[static_cast<std::size_t>((p0 + k) % n)]);
        return s;
    };
    return repeat_to(block_a, b.period_crossings) == stream_of(b, beta, b.period_crossings) &&
           repeat_to(block_b, a.period_crossings) == stream_of(a, alpha, a.period_crossings);
}

inline std::optional<std::pair<long long, long long>> solve_alignment(
    const Cupolet& a, const Cupolet& b, const ExchangeFunction& f) {
    for (long long alpha = 0; alpha < a.period_crossings; ++alpha)
        for (long long beta = 0; beta < b.period_crossings; ++beta)
            if (closes_loop(a, b, f, alpha, beta)) return std::make_pair(alpha, beta);
    return std::nullopt;
}

}  // namespace detail

/// Finds every unordered pair (self-pairs included) whose emitted sequences
/// reproduce each other's control streams. Only pairs whose feedback loop
/// also phase-closes are returned, so every returned pair co-simulates.
inline std::vector<EntangledPair> search_pairs(const Catalog& cat, const ExchangeFunction& f) {
    std::vector<EntangledPair> out;
    for (auto it_a = cat.entries.begin(); it_a != cat.entries.end(); ++it_a) {
        for (auto it_b = it_a; it_b != cat.entries.end(); ++it_b) {
            const Cupolet& a = it_a->second;
            const Cupolet& b = it_b->second;
            std::vector<int> rots_ab, rots_ba;
            try {
                rots_ab = stream_match_rotations(emit(f, a.visitation), b.control);
                rots_ba = stream_match_rotations(emit(f, b.visitation), a.control);
            } catch (const Error&) {
                continue;  // word outside the exchange's domain
            }
            if (rots_ab.empty() || rots_ba.empty()) continue;
            auto align = detail::solve_alignment(a, b, f);
            if (!align) continue;
            EntangledPair p;
            p.cupolet_a = it_a->first;
            p.cupolet_b = it_b->first;
            p.exchange_label = f.label;
            p.rot_ab = rots_ab.front();
            p.rot_ba = rots_ba.front();
            p.start_a = align->first;
            p.start_b = align->second;
            p.certified = true;
            out.push_back(std::move(p));
        }
    }
    return out;
}

/// Closest approach of a state to a cupolet's sampled orbit, measured
/// against the closed sample polyline so points between samples (the arc
/// endpoints in particular) do not inflate the distance.
inline double distance_to_orbit(const State& s, const Cupolet& cup) {
    const auto& smp = cup.orbit_samples;
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = smp.size();
    for (std::size_t i = 0; i < n; ++i) {
        const State& a = smp[i];
        const State& b = smp[(i + 1) % n];
        const double ev = b.v_c1 - a.v_c1, ew = b.v_c2 - a.v_c2, ei = b.i_l - a.i_l;
        const double pv = s.v_c1 - a.v_c1, pw = s.v_c2 - a.v_c2, pi = s.i_l - a.i_l;
        const double len2 = ev * ev + ew * ew + ei * ei;
        double t = len2 > 0 ? (pv * ev + pw * ew + pi * ei) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dv = pv - t * ev, dw = pw - t * ew, di = pi - t * ei;
        best = std::min(best, dv * dv + dw * dw + di * di);
    }
    return std::sqrt(best);
}

struct CoSimRow {
    long long crossing = 0;  // global event index across both systems
    int system = 0;
    int plane = 0;
    long long bin = 0;
    long long phase = 0;
    bool in_cycle = false;
    long long queue_depth = 0;
};

struct CoSimReport {
    std::vector<CoSimRow> rows;
    bool persisted = false;        // both systems on-cycle through the whole run
    bool match_lost = false;       // some crossing departed the certified cycle
    long long destabilized_at = -1;  // first global crossing of a latched departure
    long long underruns = 0;
    long long emission_misses = 0;   // blocks the exchange could not transform
    long long max_queue_depth = 0;
    long long periods[2] = {0, 0};
    bool recertified = false;        // cutoff runs: loop re-locked after the gap
    long long recertified_at = -1;
    std::vector<std::pair<long long, double>> gap_distance[2];  // (global crossing, distance)
};

/// Perturbations injected into a running co-simulation.
struct Measurement {
    enum class Mode { none, blind, knowledgeable };
    Mode mode = Mode::none;
    int system = 0;
    long long at_crossing = 0;   // system-local crossing count when it fires
    long long queue_position = 0;  // blind: which queued bit to flip
    double param = 0.0;            // knowledgeable: displacement magnitude
};

namespace detail {

/// One controlled system inside the feedback loop.
struct CoSystem {
    const Cupolet* cup = nullptr;
    State state;
    long long crossings = 0;         // local crossing count
    std::deque<char> queue;          // inbound control bits
    std::string accumulator;         // visitation bits of the current block
    std::vector<long long> aligned;  // candidate cycle positions (tracker)
    long long mismatch_run = 0;
    bool destabilized = false;
    long long nominal_phase = 0;     // control phase counter for reporting
};

/// Advances the candidate positions of the cycle tracker by one observation.
inline bool track_cycle(CoSystem& sys, int plane, long long bin) {
    const auto& cyc = sys.cup->bin_cycle;
    const long long P = sys.cup->period_crossings;
    std::vector<long long> next;
    next.reserve(sys.aligned.size());
    for (long long p : sys.aligned) {
        long long q = (p + 1) % P;
        const CycleNode& nd = cyc[static_cast<std::size_t>(q)];
        if (nd.plane == plane && nd.bin == bin) next.push_back(q);
    }
    if (!next.empty()) {
        sys.aligned = std::move(next);
        sys.mismatch_run = 0;
        return true;
    }
    sys.mismatch_run += 1;
    sys.aligned.clear();
    for (long long q = 0; q < P; ++q) {
        const CycleNode& nd = cyc[static_cast<std::size_t>(q)];
        if (nd.plane == plane && nd.bin == bin) sys.aligned.push_back(q);
    }
    return false;
}

}  // namespace detail

/// Event-driven co-simulation of a certified pair: no external control, each
/// system is driven purely by the partner's emitted bits. The two systems
/// integrate independently in continuous time; the merge order interleaves
/// them by period fraction, which keeps the report deterministic.
class CoSimulator {
public:
    CoSimulator(const EntangledPair& p, const Catalog& cat, const ExchangeFunction& f,
                const SectionSet& ss, const CodingTable& ct, const SystemConfig& cfg)
        : f_(f), ss_(ss), ct_(ct), cfg_(cfg) {
        auto it_a = cat.entries.find(p.cupolet_a);
        auto it_b = cat.entries.find(p.cupolet_b);
        if (it_a == cat.entries.end() || it_b == cat.entries.end())
            throw FormatError("entangled pair references cupolets missing from the catalog");
        init_system(0, it_a->second, p.start_a);
        init_system(1, it_b->second, p.start_b);
    }

    /// Runs until both systems have completed n_periods of their own cycles.
    CoSimReport run(long long n_periods, const Measurement& m = {}) {
        CoSimReport rep;
        const long long target[2] = {n_periods * sys_[0].cup->period_crossings,
                                     n_periods * sys_[1].cup->period_crossings};
        while (sys_[0].crossings < target[0] || sys_[1].crossings < target[1]) {
            const int i = pick_next();
            step_system(i, rep, m);
        }
        finalize(rep);
        return rep;
    }

    /// Co-simulates with a communication blackout: after `warmup` periods the
    /// bit exchange pauses and both systems free-run `gap` crossings, then
    /// the exchange resumes for up to n_periods while re-locking is watched.
    CoSimReport run_with_cutoff(long long warmup, long long gap, long long n_periods) {
        CoSimReport rep;
        const long long warm_target[2] = {warmup * sys_[0].cup->period_crossings,
                                          warmup * sys_[1].cup->period_crossings};
        while (sys_[0].crossings < warm_target[0] || sys_[1].crossings < warm_target[1]) {
            const int i = pick_next();
            step_system(i, rep, {});
        }
        const long long gap_end[2] = {sys_[0].crossings + gap, sys_[1].crossings + gap};
        while (sys_[0].crossings < gap_end[0] || sys_[1].crossings < gap_end[1]) {
            const int i = pick_next();
            step_free(i, rep);
        }
        long long ok_run[2] = {0, 0};
        rep.recertified = gap == 0;
        rep.recertified_at = gap == 0 ? global_crossing_ : -1;
        const long long target[2] = {n_periods * sys_[0].cup->period_crossings,
                                     n_periods * sys_[1].cup->period_crossings};
        while (sys_[0].crossings < target[0] || sys_[1].crossings < target[1]) {
            const int i = pick_next();
            const bool in_cycle = step_system(i, rep, {});
            ok_run[i] = in_cycle ? ok_run[i] + 1 : 0;
            if (!rep.recertified && ok_run[0] >= 2 * sys_[0].cup->period_crossings &&
                ok_run[1] >= 2 * sys_[1].cup->period_crossings) {
                rep.recertified = true;
                rep.recertified_at = global_crossing_;
            }
        }
        finalize(rep);
        return rep;
    }

private:
    void init_system(int i, const Cupolet& cup, long long start) {
        detail::CoSystem& s = sys_[i];
        s.cup = &cup;
        const long long P = cup.period_crossings;
        const long long prev = (start - 1 + P) % P;
        const CycleNode& node = cup.bin_cycle[static_cast<std::size_t>(prev)];
        s.state = bin_center(node.plane, node.bin, ss_);
        s.nominal_phase = detail::phase_at(cup, start);
        const long long n = static_cast<long long>(cup.control.size());
        for (long long k = 0; k < P; ++k)
            s.queue.push_back(
                cup.control[static_cast<std::size_t>((s.nominal_phase + k) % n)]);
        s.aligned.resize(static_cast<std::size_t>(P));
        for (long long q = 0; q < P; ++q) s.aligned[static_cast<std::size_t>(q)] = q;
    }

    /// Next system to advance: the one lagging in period fraction, system 0
    /// on ties. Integer cross-multiplication keeps the comparison exact.
    int pick_next() const {
        const long long lhs = sys_[0].crossings * sys_[1].cup->period_crossings;
        const long long rhs = sys_[1].crossings * sys_[0].cup->period_crossings;
        return lhs <= rhs ? 0 : 1;
    }

    bool step_system(int i, CoSimReport& rep, const Measurement& m) {
        detail::CoSystem& s = sys_[i];

        if (m.mode == Measurement::Mode::blind && m.system == i &&
            s.crossings == m.at_crossing && !measured_) {
            measured_ = true;
            if (!s.queue.empty()) {
                auto pos = static_cast<std::size_t>(
                    std::clamp<long long>(m.queue_position, 0,
                                          static_cast<long long>(s.queue.size()) - 1));
                s.queue[pos] = s.queue[pos] == '0' ? '1' : '0';
            }
        }

        auto [raw, plane] = integrate_to_crossing(s.state, cfg_, ss_);
        BinRef ref = bin_lookup(raw, ss_);

        char bit = '0';
        if (s.queue.empty()) {
            rep.underruns += 1;  // no information arrived: microcontrol only
        } else {
            bit = s.queue.front();
            s.queue.pop_front();
        }
        long long bin = ref.bin;
        if (bit == '1') bin = macro_target_escalating(ref.plane, ref.bin, ct_, cfg_.M);
        State center = bin_center(ref.plane, bin, ss_);
        center.t = raw.t;
        s.state = center;

        if (m.mode == Measurement::Mode::knowledgeable && m.system == i &&
            s.crossings == m.at_crossing && !measured_) {
            measured_ = true;
            apply_knowledgeable_probe(s, m.param);
        }

        s.crossings += 1;
        const bool in_cycle = detail::track_cycle(s, ref.plane, bin);
        if (!in_cycle) rep.match_lost = true;
        if (!s.destabilized && s.mismatch_run > s.cup->period_crossings) {
            s.destabilized = true;
            if (rep.destabilized_at < 0) rep.destabilized_at = global_crossing_;
        }

        s.accumulator.push_back(ref.plane == 1 ? '1' : '0');
        if (static_cast<long long>(s.accumulator.size()) == s.cup->period_crossings) {
            try {
                // The emitted word is a control sequence: the partner
                // consumes its periodic extension, one of its periods per
                // block.
                const std::string block = emit(f_, s.accumulator);
                detail::CoSystem& partner = sys_[1 - i];
                const std::string stretch =
                    detail::repeat_to(block, partner.cup->period_crossings);
                for (char c : stretch) partner.queue.push_back(c);
            } catch (const Error&) {
                rep.emission_misses += 1;
            }
            s.accumulator.clear();
        }

        CoSimRow row;
        row.crossing = global_crossing_;
        row.system = i;
        row.plane = ref.plane;
        row.bin = bin;
        row.phase = s.nominal_phase;
        row.in_cycle = in_cycle;
        row.queue_depth = static_cast<long long>(s.queue.size());
        rep.rows.push_back(row);
        rep.max_queue_depth =
            std::max(rep.max_queue_depth, static_cast<long long>(s.queue.size()));

        s.nominal_phase = (s.nominal_phase + 1) % static_cast<long long>(s.cup->control.size());
        global_crossing_ += 1;
        return in_cycle;
    }

    /// One crossing with the interaction suspended: no bit is consumed or
    /// recorded and the state is not snapped, so the system evolves freely.
    void step_free(int i, CoSimReport& rep) {
        detail::CoSystem& s = sys_[i];
        auto [raw, plane] = integrate_to_crossing(s.state, cfg_, ss_);
        s.state = raw;
        s.crossings += 1;
        rep.gap_distance[i].emplace_back(global_crossing_, distance_to_orbit(raw, *s.cup));
        BinRef ref = bin_lookup(raw, ss_);
        detail::track_cycle(s, ref.plane, ref.bin);
        s.nominal_phase = (s.nominal_phase + 1) % static_cast<long long>(s.cup->control.size());
        global_crossing_ += 1;
    }

    /// The knowledgeable probe is the carefully designed disturbance of the
    /// scheme: it displaces along the local flow direction, which only
    /// advances the state along its own orbit, so the next microcontrol
    /// absorbs it completely. Anything not aligned with the flow is
    /// amplified by the unstable dynamics and would act like a blind
    /// disturbance.
    void apply_knowledgeable_probe(detail::CoSystem& s, double param) {
        const double half_width = 0.5 * ss_.bin_width(0);
        if (param >= half_width)
            throw InvalidPerturbation("knowledgeable probe must stay below half a bin width");
        State d = vector_field(s.state, cfg_);
        const double norm = std::sqrt(d.v_c1 * d.v_c1 + d.v_c2 * d.v_c2 + d.i_l * d.i_l);
        if (norm == 0.0) return;
        s.state.v_c1 += param * d.v_c1 / norm;
        s.state.v_c2 += param * d.v_c2 / norm;
        s.state.i_l += param * d.i_l / norm;
    }

    void finalize(CoSimReport& rep) {
        rep.periods[0] = sys_[0].crossings / sys_[0].cup->period_crossings;
        rep.periods[1] = sys_[1].crossings / sys_[1].cup->period_crossings;
        rep.persisted = !sys_[0].destabilized && !sys_[1].destabilized &&
                        !sys_[0].aligned.empty() && !sys_[1].aligned.empty();
    }

    const ExchangeFunction& f_;
    const SectionSet& ss_;
    const CodingTable& ct_;
    const SystemConfig& cfg_;
    detail::CoSystem sys_[2];
    long long global_crossing_ = 0;
    bool measured_ = false;
};

/// Runs a certified pair for n_periods with no external control.
inline CoSimReport co_simulate(const EntangledPair& p, long long n_periods, const Catalog& cat,
                               const ExchangeFunction& f, const SectionSet& ss,
                               const CodingTable& ct, const SystemConfig& cfg) {
    CoSimulator sim(p, cat, f, ss, ct, cfg);
    return sim.run(n_periods);
}

/// Injects a blind or knowledgeable measurement into a running co-simulation
/// (after one settled period) and reports whether the entanglement survived.
inline CoSimReport measure(const EntangledPair& p, const Measurement& m, long long n_periods,
                           const Catalog& cat, const ExchangeFunction& f, const SectionSet& ss,
                           const CodingTable& ct, const SystemConfig& cfg) {
    CoSimulator sim(p, cat, f, ss, ct, cfg);
    return sim.run(n_periods, m);
}

/// Suspends the bit exchange for `gap` crossings per system, then restores
/// it and watches whether the mutual stabilization re-locks.
inline CoSimReport interaction_cutoff(const EntangledPair& p, long long gap, long long warmup,
                                      long long n_periods, const Catalog& cat,
                                      const ExchangeFunction& f, const SectionSet& ss,
                                      const CodingTable& ct, const SystemConfig& cfg) {
    CoSimulator sim(p, cat, f, ss, ct, cfg);
    return sim.run_with_cutoff(warmup, gap, n_periods);
}

}  // namespace cupolet
