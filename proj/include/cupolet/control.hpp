#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cupolet/errors.hpp"
#include "cupolet/section.hpp"

namespace cupolet {

/// Lexicographically least rotation of a word; canonical form of repeating
/// control sequences and of bin cycles.
template <class Seq>
inline Seq least_rotation(const Seq& s) {
    const std::size_t n = s.size();
    if (n <= 1) return s;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const auto& a = s[(i + k) % n];
            const auto& b = s[(best + k) % n];
            if (a < b) {
                best = i;
                break;
            }
            if (b < a) break;
        }
    }
    Seq out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(s[(best + k) % n]);
    return out;
}

/// A repeating binary control sequence. '1' applies a macrocontrol at the
/// crossing, '0' leaves the trajectory with the microcontrol snap only.
struct ControlWord {
    std::string bits;

    explicit ControlWord(std::string_view b) : bits(b) {
        if (bits.empty()) throw FormatError("control word must be non-empty");
        for (char c : bits)
            if (c != '0' && c != '1')
                throw FormatError("control word must be binary: '" + bits + "'");
    }

    std::string canonical() const { return least_rotation(bits); }
    char bit(long long phase) const {
        return bits[static_cast<std::size_t>(phase % static_cast<long long>(bits.size()))];
    }
    long long length() const { return static_cast<long long>(bits.size()); }
};

/// One crossing of the controlled run: the plane crossed (= visitation bit),
/// the bin occupied after the control was applied, and the control phase
/// consumed. Post-control states are exact bin centers, so this triple fully
/// determines the future of the run.
struct CrossingRecord {
    int plane = 0;
    long long bin = 0;
    long long phase = 0;
    double t = 0.0;

    std::tuple<int, long long, long long> key() const { return {plane, bin, phase}; }
};

struct ControlledCrossingResult {
    State state;          // exact bin center after control
    CrossingRecord record;
    State raw;            // refined crossing point before control
    bool out_of_range = false;
};

/// Integrates to the next crossing and applies one control bit: '0' snaps to
/// the crossing bin's center, '1' relocates to the macro target's center.
inline ControlledCrossingResult controlled_crossing(const State& s, char bit,
                                                    const SectionSet& ss, const CodingTable& ct,
                                                    const SystemConfig& cfg,
                                                    long long phase = 0) {
    auto [raw, plane] = integrate_to_crossing(s, cfg, ss);
    BinRef ref = bin_lookup(raw, ss);
    long long bin = ref.bin;
    if (bit == '1') bin = macro_target_escalating(ref.plane, ref.bin, ct, cfg.M);
    State center = bin_center(ref.plane, bin, ss);
    center.t = raw.t;
    ControlledCrossingResult res;
    res.state = center;
    res.record = CrossingRecord{ref.plane, bin, phase, raw.t};
    res.raw = raw;
    res.out_of_range = ref.out_of_range;
    return res;
}

struct RunResult {
    std::vector<CrossingRecord> records;
    std::string visitation;      // plane id per crossing, full stream
    long long transient = 0;     // crossings before the detected cycle
    long long period = 0;        // cycle length in crossings
    State final_state;
};

namespace detail {

struct TripleHash {
    std::size_t operator()(const std::tuple<int, long long, long long>& k) const {
        auto h = static_cast<std::size_t>(std::get<0>(k));
        h = h * 1000003u + static_cast<std::size_t>(std::get<1>(k));
        h = h * 1000003u + static_cast<std::size_t>(std::get<2>(k));
        return h;
    }
};

}  // namespace detail

/// Applies the repeating control word until the (plane, bin, phase) stream
/// recurs. The first recurrence closes the cycle: everything before it is
/// transient, everything after repeats forever.
inline RunResult run_controlled(const State& s0, const ControlWord& w, long long max_crossings,
                                const SectionSet& ss, const CodingTable& ct,
                                const SystemConfig& cfg) {
    if (max_crossings < 1) throw NotStabilized("max_crossings must be >= 1");
    RunResult out;
    std::unordered_map<std::tuple<int, long long, long long>, long long, detail::TripleHash> seen;
    State s = s0;
    for (long long i = 0; i < max_crossings; ++i) {
        const long long phase = i % w.length();
        auto step = controlled_crossing(s, w.bit(phase), ss, ct, cfg, phase);
        out.records.push_back(step.record);
        out.visitation.push_back(step.record.plane == 1 ? '1' : '0');
        s = step.state;
        auto [it, inserted] = seen.emplace(step.record.key(), i);
        if (!inserted) {
            out.transient = it->second;
            out.period = i - it->second;
            out.final_state = s;
            return out;
        }
    }
    throw NotStabilized("no periodic cycle within " + std::to_string(max_crossings) +
                        " crossings");
}

}  // namespace cupolet
