#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cupolet/errors.hpp"

namespace cupolet {

/// Shortest round-trip decimal form of a double. Used everywhere a double is
/// serialized so that emitted files are byte-stable and re-load exactly.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw FormatError("bad numeric value: '" + std::string(s) + "'");
    return x;
}

inline long long parse_int(std::string_view s) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw FormatError("bad integer value: '" + std::string(s) + "'");
    return v;
}

/// All knobs of a run. Every derived artifact (coding table, catalog, graph,
/// report) carries fingerprint() so mismatched files cannot be mixed.
struct SystemConfig {
    // Double scroll circuit parameters.
    double C1 = 1.0 / 9.0;
    double C2 = 1.0;
    double L = 1.0 / 7.0;
    double G = 0.7;
    double m0 = -0.5;
    double m1 = -0.8;
    double Bp = 1.0;

    // Integration.
    double step_size = 0.005;
    double crossing_tolerance = 1e-10;
    double max_arc_time = 100.0;   // per-crossing integration budget
    double blowup_norm = 1e3;      // |component| beyond this raises NumericalBlowup
    long long max_crossings = 10000;
    long long calib_crossings = 10000;  // crossings recorded when calibrating sections

    // Control geometry. Bins that have just switched lobes cannot flip
    // their next symbols (the flow forbids an immediate switch-back), so
    // '1' bits escalate past grammar-locked horizons; see
    // macro_target_escalating. The default horizon and calibration seed are
    // the ones under which the reference control words stabilize
    // independently of the initial state.
    long long bins_per_plane = 1600;
    long long M = 3;       // macrocontrol horizon (loops downstream)
    long long M_max = 16;  // coding-table depth

    std::uint64_t rng_seed = 18;

    void validate() const {
        if (!(C1 > 0 && C2 > 0 && L > 0))
            throw DegenerateParameters("C1, C2, L must be positive");
        if (!(Bp > 0)) throw DegenerateParameters("Bp must be positive");
        if (!(step_size > 0)) throw DegenerateParameters("step_size must be positive");
        if (!(M >= 1 && M <= M_max))
            throw DegenerateParameters("require 1 <= M <= M_max");
        if (bins_per_plane < 2)
            throw DegenerateParameters("bins_per_plane must be >= 2");
        if (max_crossings < 1)
            throw DegenerateParameters("max_crossings must be >= 1");
        if (calib_crossings < 1000)
            throw DegenerateParameters("calib_crossings must be >= 1000");
    }

    /// Canonical key = value listing; the fingerprint hashes exactly this.
    std::string canonical_text() const {
        std::ostringstream os;
        os << "C1 = " << format_double(C1) << '\n'
           << "C2 = " << format_double(C2) << '\n'
           << "L = " << format_double(L) << '\n'
           << "G = " << format_double(G) << '\n'
           << "m0 = " << format_double(m0) << '\n'
           << "m1 = " << format_double(m1) << '\n'
           << "Bp = " << format_double(Bp) << '\n'
           << "step_size = " << format_double(step_size) << '\n'
           << "crossing_tolerance = " << format_double(crossing_tolerance) << '\n'
           << "max_arc_time = " << format_double(max_arc_time) << '\n'
           << "blowup_norm = " << format_double(blowup_norm) << '\n'
           << "max_crossings = " << max_crossings << '\n'
           << "calib_crossings = " << calib_crossings << '\n'
           << "bins_per_plane = " << bins_per_plane << '\n'
           << "M = " << M << '\n'
           << "M_max = " << M_max << '\n'
           << "rng_seed = " << rng_seed << '\n';
        return os.str();
    }

    std::uint64_t fingerprint() const {
        // FNV-1a 64-bit over the canonical text.
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : canonical_text()) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    void set(std::string_view key, std::string_view value) {
        if (key == "C1") C1 = parse_double(value);
        else if (key == "C2") C2 = parse_double(value);
        else if (key == "L") L = parse_double(value);
        else if (key == "G") G = parse_double(value);
        else if (key == "m0") m0 = parse_double(value);
        else if (key == "m1") m1 = parse_double(value);
        else if (key == "Bp") Bp = parse_double(value);
        else if (key == "step_size") step_size = parse_double(value);
        else if (key == "crossing_tolerance") crossing_tolerance = parse_double(value);
        else if (key == "max_arc_time") max_arc_time = parse_double(value);
        else if (key == "blowup_norm") blowup_norm = parse_double(value);
        else if (key == "max_crossings") max_crossings = parse_int(value);
        else if (key == "calib_crossings") calib_crossings = parse_int(value);
        else if (key == "bins_per_plane") bins_per_plane = parse_int(value);
        else if (key == "M") M = parse_int(value);
        else if (key == "M_max") M_max = parse_int(value);
        else if (key == "rng_seed") rng_seed = static_cast<std::uint64_t>(parse_int(value));
        else throw FormatError("unknown config key: '" + std::string(key) + "'");
    }
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Reads `key = value` lines; '#' starts a comment, blank lines are skipped.
inline SystemConfig read_config(std::istream& in) {
    SystemConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw FormatError("config line missing '=': '" + line + "'");
        cfg.set(trim(v.substr(0, eq)), trim(v.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

inline void write_config(std::ostream& out, const SystemConfig& cfg) {
    out << "# cupolet-config v1\n" << cfg.canonical_text();
}

inline std::string fingerprint_hex(std::uint64_t fp) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[fp & 0xf];
        fp >>= 4;
    }
    return s;
}

}  // namespace cupolet
