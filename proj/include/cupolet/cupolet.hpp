#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cupolet/control.hpp"
#include "cupolet/errors.hpp"
#include "cupolet/parallel.hpp"
#include "cupolet/section.hpp"

namespace cupolet {

/// One node of the finite-state control cycle.
struct CycleNode {
    int plane = 0;
    long long bin = 0;
    long long phase = 0;

    friend bool operator==(const CycleNode&, const CycleNode&) = default;
    friend auto operator<=>(const CycleNode&, const CycleNode&) = default;
};

struct CycleDetection {
    long long transient = 0;
    std::vector<CycleNode> cycle;
};

/// First-recurrence cycle detection over a finite stream of control states.
/// Returns nothing when every element is distinct.
inline std::optional<CycleDetection> detect_cycle(std::span<const CycleNode> stream) {
    std::map<CycleNode, long long> seen;
    for (long long i = 0; i < static_cast<long long>(stream.size()); ++i) {
        auto [it, inserted] = seen.emplace(stream[static_cast<size_t>(i)], i);
        if (!inserted) {
            CycleDetection d;
            d.transient = it->second;
            d.cycle.assign(stream.begin() + it->second, stream.begin() + i);
            return d;
        }
    }
    return std::nullopt;
}

/// A stabilized periodic orbit together with the data that identifies it:
/// the canonical control word, the finite-state cycle it settles on, its
/// visitation word and one densely sampled period.
struct Cupolet {
    std::string name;          // "C" + canonical control word
    std::string control;       // canonical control word
    std::string visitation;    // plane id per crossing, one period
    std::vector<CycleNode> bin_cycle;
    long long period_crossings = 0;
    double period_time = 0.0;
    std::vector<State> orbit_samples;  // samples_per_arc per crossing-to-crossing arc
    std::uint64_t fingerprint = 0;
};

inline constexpr int kSamplesPerArc = 64;

struct Catalog {
    std::uint64_t fingerprint = 0;
    std::map<std::string, Cupolet> entries;  // keyed by canonical control word
};

namespace detail {

/// Phase of the control bit consumed at cycle index i.
inline long long phase_at(const Cupolet& c, long long i) {
    return c.bin_cycle[static_cast<std::size_t>(i % c.period_crossings)].phase;
}

inline std::size_t least_rotation_index(const std::string& s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        for (std::size_t k = 0; k < s.size(); ++k) {
            char a = s[(i + k) % s.size()];
            char b = s[(best + k) % s.size()];
            if (a < b) {
                best = i;
                break;
            }
            if (a > b) break;
        }
    }
    return best;
}

/// Linear interpolation of a time-ordered trace at the given time.
inline State sample_trace(const std::vector<State>& trace, double t) {
    std::size_t lo = 0, hi = trace.size() - 1;
    while (lo + 1 < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (trace[mid].t <= t) lo = mid;
        else hi = mid;
    }
    const State& a = trace[lo];
    const State& b = trace[hi];
    double span = b.t - a.t;
    double f = span > 0 ? (t - a.t) / span : 0.0;
    State out;
    out.v_c1 = a.v_c1 + f * (b.v_c1 - a.v_c1);
    out.v_c2 = a.v_c2 + f * (b.v_c2 - a.v_c2);
    out.i_l = a.i_l + f * (b.i_l - a.i_l);
    out.t = t;
    return out;
}

}  // namespace detail

/// Re-simulates one period of a detected cycle from its first node,
/// collecting kSamplesPerArc uniform-in-time samples per arc. The traversal
/// must land back on the stored cycle; anything else is a detection bug.
inline void resimulate_period(Cupolet& cup, const SectionSet& ss, const CodingTable& ct,
                              const SystemConfig& cfg) {
    State s = bin_center(cup.bin_cycle.front().plane, cup.bin_cycle.front().bin, ss);
    s.t = 0.0;
    cup.orbit_samples.clear();
    cup.orbit_samples.reserve(static_cast<size_t>(cup.period_crossings) * kSamplesPerArc);
    for (long long k = 0; k < cup.period_crossings; ++k) {
        // Starting from the center of node k, the next crossing lands on
        // node k+1 and consumes that node's control bit.
        const CycleNode& node =
            cup.bin_cycle[static_cast<size_t>((k + 1) % cup.period_crossings)];
        const char bit = cup.control[static_cast<size_t>(node.phase)];
        std::vector<State> trace;
        trace.push_back(s);
        auto step = [&] {
            auto [raw, plane] = integrate_to_crossing(s, cfg, ss, &trace);
            BinRef ref = bin_lookup(raw, ss);
            long long bin = ref.bin;
            if (bit == '1') bin = macro_target_escalating(ref.plane, ref.bin, ct, cfg.M);
            if (plane != node.plane || bin != node.bin)
                throw NotStabilized("cycle replay diverged from the recorded bin cycle");
            State center = bin_center(ref.plane, bin, ss);
            center.t = raw.t;
            return center;
        }();
        const double t0 = trace.front().t;
        const double t1 = trace.back().t;
        for (int j = 0; j < kSamplesPerArc; ++j)
            cup.orbit_samples.push_back(
                detail::sample_trace(trace, t0 + (t1 - t0) * j / kSamplesPerArc));
        s = step;
    }
    cup.period_time = s.t;
}

/// Stabilizes the repeating control word into a cupolet. The orbit is
/// identified by the canonical rotation of its finite-state cycle, so any
/// rotation of the same word and any admissible start state produce the
/// identical record.
inline Cupolet generate(const ControlWord& w, const SectionSet& ss, const CodingTable& ct,
                        const SystemConfig& cfg, const State* start = nullptr) {
    RunResult run = run_controlled(start ? *start : ss.default_start, w, cfg.max_crossings,
                                   ss, ct, cfg);

    // Canonicalize the control word and re-index the cycle's phases into it.
    const std::size_t rot = detail::least_rotation_index(w.bits);
    const long long n = w.length();
    std::vector<CycleNode> cycle;
    cycle.reserve(static_cast<size_t>(run.period));
    for (long long k = 0; k < run.period; ++k) {
        const CrossingRecord& r = run.records[static_cast<size_t>(run.transient + k)];
        cycle.push_back(CycleNode{
            r.plane, r.bin,
            (r.phase + n - static_cast<long long>(rot)) % n});
    }

    Cupolet cup;
    cup.control = w.canonical();
    cup.name = "C" + cup.control;
    cup.bin_cycle = least_rotation(cycle);
    cup.period_crossings = run.period;
    cup.fingerprint = ss.fingerprint;
    cup.visitation.reserve(cycle.size());
    for (const CycleNode& nd : cup.bin_cycle)
        cup.visitation.push_back(nd.plane == 1 ? '1' : '0');
    resimulate_period(cup, ss, ct, cfg);
    return cup;
}

struct IcIndependenceReport {
    bool independent = false;
    long long trials = 0;
    long long failures = 0;            // NotStabilized / NoReachableTarget runs
    std::vector<std::string> notes;    // one line per failed trial
    std::vector<std::vector<CycleNode>> cycles;  // canonical cycle per successful trial
};

/// Draws a state near the attractor: jittered start, then a seeded number of
/// uncontrolled crossings so trials begin at unrelated points.
inline State random_attractor_state(const SystemConfig& cfg, const SectionSet& ss,
                                    std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> settle(5, 40);
    const double anchor = lobe_anchor(cfg);
    State s{anchor + 0.02 * u(rng), 0.005 * u(rng), -cfg.G * anchor + 0.02 * u(rng), 0.0};
    int n = settle(rng);
    for (int i = 0; i < n; ++i) s = integrate_to_crossing(s, cfg, ss).first;
    return s;
}

inline bool all_cycles_equal(const std::vector<std::vector<CycleNode>>& cycles) {
    for (std::size_t i = 1; i < cycles.size(); ++i)
        if (cycles[i] != cycles.front()) return false;
    return !cycles.empty();
}

/// Regenerates the cupolet from k random attractor states and checks that
/// every run settles on the same canonical cycle.
inline IcIndependenceReport verify_ic_independence(const ControlWord& w, long long k,
                                                   std::uint64_t rng_seed, const SectionSet& ss,
                                                   const CodingTable& ct,
                                                   const SystemConfig& cfg) {
    if (k < 2) throw FormatError("ic-independence check needs k >= 2 trials");
    IcIndependenceReport rep;
    rep.trials = k;
    std::mt19937_64 rng(rng_seed);
    for (long long i = 0; i < k; ++i) {
        State s = random_attractor_state(cfg, ss, rng);
        try {
            Cupolet cup = generate(w, ss, ct, cfg, &s);
            rep.cycles.push_back(cup.bin_cycle);
        } catch (const Error& e) {
            rep.failures += 1;
            rep.notes.push_back("trial " + std::to_string(i) + ": " + e.what());
        }
    }
    rep.independent = rep.failures == 0 && all_cycles_equal(rep.cycles);
    return rep;
}

/// Representatives of all repeating binary words of length <= n_max, up to
/// rotation and repetition: the aperiodic necklaces, as their least
/// rotations, ordered by (length, lexicographic).
inline std::vector<std::string> aperiodic_necklaces(long long n_max) {
    std::vector<std::string> out;
    for (long long n = 1; n <= n_max; ++n) {
        for (std::uint64_t bitsv = 0; bitsv < (1ull << n); ++bitsv) {
            std::string word(static_cast<size_t>(n), '0');
            for (long long j = 0; j < n; ++j)
                if (bitsv >> j & 1) word[static_cast<size_t>(j)] = '1';
            if (least_rotation(word) != word) continue;
            bool periodic = false;
            for (long long d = 1; d < n && !periodic; ++d) {
                if (n % d != 0) continue;
                bool rep = true;
                for (long long j = d; j < n && rep; ++j)
                    rep = word[static_cast<size_t>(j)] == word[static_cast<size_t>(j - d)];
                periodic = rep;
            }
            if (!periodic) out.push_back(std::move(word));
        }
    }
    return out;
}

struct EnumerationReport {
    long long candidates = 0;
    long long generated = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // word -> reason
};

/// Generates every candidate word and stores the successes. Per-word
/// failures are expected for some sequences and recorded, not fatal.
inline Catalog enumerate_catalog(long long n_max, const SectionSet& ss, const CodingTable& ct,
                                 const SystemConfig& cfg, int workers = 0,
                                 EnumerationReport* report = nullptr) {
    if (n_max < 1) throw FormatError("enumeration needs n_max >= 1");
    const std::vector<std::string> words = aperiodic_necklaces(n_max);

    std::vector<std::optional<Cupolet>> slots(words.size());
    std::vector<std::string> errors(words.size());
    parallel_for(words.size(), workers, [&](std::size_t i) {
        try {
            slots[i] = generate(ControlWord(words[i]), ss, ct, cfg);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });

    Catalog cat;
    cat.fingerprint = ss.fingerprint;
    if (report) {
        report->candidates = static_cast<long long>(words.size());
        report->generated = 0;
        report->failures.clear();
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (slots[i]) {
            cat.entries.emplace(slots[i]->control, std::move(*slots[i]));
            if (report) report->generated += 1;
        } else if (report) {
            report->failures.emplace_back(words[i], errors[i]);
        }
    }
    return cat;
}

/// Groups of distinct control words that settled on the same bin cycle. The
/// one-to-one claim is audited, not assumed; collisions are reported.
inline std::vector<std::vector<std::string>> audit_injectivity(const Catalog& cat) {
    std::map<std::vector<CycleNode>, std::vector<std::string>> by_cycle;
    for (const auto& [word, cup] : cat.entries) {
        // Phases distinguish rotations of one word, not orbits; compare the
        // spatial cycle only.
        std::vector<CycleNode> spatial = cup.bin_cycle;
        for (auto& nd : spatial) nd.phase = 0;
        by_cycle[least_rotation(spatial)].push_back(word);
    }
    std::vector<std::vector<std::string>> collisions;
    for (auto& [cycle, words] : by_cycle)
        if (words.size() > 1) collisions.push_back(words);
    return collisions;
}

}  // namespace cupolet
