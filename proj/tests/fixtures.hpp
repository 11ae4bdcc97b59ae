#pragma once

// Shared, lazily built dynamics fixtures so the suite calibrates only once.

#include "cupolet/cupolet_lab.hpp"

namespace fixtures {

inline const cupolet::SystemConfig& cfg() {
    static cupolet::SystemConfig c;
    return c;
}

inline const cupolet::SectionSet& sections() {
    static cupolet::SectionSet ss =
        cupolet::calibrate(cfg(), cfg().calib_crossings, cfg().rng_seed);
    return ss;
}

inline const cupolet::CodingTable& coding() {
    static cupolet::CodingTable ct = cupolet::build_coding_table(sections(), cfg(), 0);
    return ct;
}

inline const cupolet::Catalog& catalog_n4() {
    static cupolet::Catalog cat = cupolet::enumerate_catalog(4, sections(), coding(), cfg(), 0);
    return cat;
}

inline const cupolet::Catalog& catalog_n6() {
    static cupolet::Catalog cat = cupolet::enumerate_catalog(6, sections(), coding(), cfg(), 0);
    return cat;
}

/// Lookup exchange that entangles two catalog cupolets: each one-period
/// visitation block maps to the control stream its partner consumes. The
/// table carries every rotation of the visitation words so the exchange
/// commutes with phase shifts, like the closed-form kinds do.
inline cupolet::ExchangeFunction mutual_lookup(const cupolet::Cupolet& a,
                                               const cupolet::Cupolet& b) {
    auto stream = [](const cupolet::Cupolet& c, long long from_index, long long len) {
        std::string s;
        const auto n = static_cast<long long>(c.control.size());
        const long long p0 = cupolet::detail::phase_at(c, from_index);
        for (long long k = 0; k < len; ++k)
            s.push_back(c.control[static_cast<std::size_t>((p0 + k) % n)]);
        return s;
    };
    std::map<std::string, std::string> tbl;
    auto add_rotations = [&](const cupolet::Cupolet& from, const cupolet::Cupolet& to) {
        const auto P = static_cast<std::size_t>(from.period_crossings);
        for (std::size_t r = 0; r < P; ++r) {
            std::string rot;
            rot.reserve(P);
            for (std::size_t i = 0; i < P; ++i) rot.push_back(from.visitation[(r + i) % P]);
            tbl.emplace(rot, stream(to, static_cast<long long>(r), to.period_crossings));
        }
    };
    add_rotations(a, b);
    if (a.control != b.control) add_rotations(b, a);
    return cupolet::ExchangeFunction::lookup(std::move(tbl), "lookup:mutual");
}

}  // namespace fixtures
