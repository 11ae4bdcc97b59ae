#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cupolet/analysis.hpp"
#include "cupolet/cupolet.hpp"
#include "cupolet/entangle.hpp"
#include "cupolet/section.hpp"
#include "cupolet/targeting.hpp"
#include "cupolet/version.hpp"

namespace cupolet {

/// Provenance block written into report files: enough to reproduce the run.
struct RunManifest {
    std::uint64_t fingerprint = 0;
    std::string command;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;

    void write(std::ostream& out, const std::string& kind) const {
        out << "# cupolet-" << kind << " v1 fingerprint=" << fingerprint_hex(fingerprint)
            << '\n';
        out << "# tool " << kToolName << ' ' << kToolVersion << '\n';
        if (!command.empty()) out << "# command " << command << '\n';
        out << "# seed " << seed << '\n';
        for (const auto& p : inputs) out << "# input " << p << '\n';
        for (const auto& p : outputs) out << "# output " << p << '\n';
    }
};

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open for reading: " + path);
    return in;
}

/// Reads the `# cupolet-<kind> v1 fingerprint=<hex>` header line.
inline std::uint64_t parse_header(std::istream& in, const std::string& kind,
                                  const std::string& path) {
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path + ": empty file");
    const std::string prefix = "# cupolet-" + kind + " v1 fingerprint=";
    if (line.rfind(prefix, 0) != 0)
        throw FormatError(path + ": missing '" + prefix + "<hex>' header");
    std::uint64_t fp = 0;
    for (char c : line.substr(prefix.size())) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else break;
        fp = fp << 4 | static_cast<std::uint64_t>(d);
    }
    return fp;
}

inline void check_fingerprint(std::uint64_t stored, std::uint64_t expected,
                              const std::string& path) {
    if (stored != expected)
        throw FingerprintMismatch(path + ": config fingerprint " + fingerprint_hex(stored) +
                                  " does not match current config " +
                                  fingerprint_hex(expected));
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace detail

// --- coding table ----------------------------------------------------------

inline void write_coding_table(const std::string& path, const CodingTable& ct) {
    auto out = detail::open_out(path);
    out << "# cupolet-coding-table v1 fingerprint=" << fingerprint_hex(ct.fingerprint) << '\n';
    for (int p = 0; p < 2; ++p)
        for (std::size_t b = 0; b < ct.words[p].size(); ++b)
            out << p << '\t' << b << '\t' << ct.words[p][b] << '\n';
}

inline CodingTable read_coding_table(const std::string& path, std::uint64_t expected_fp) {
    auto in = detail::open_in(path);
    CodingTable ct;
    ct.fingerprint = detail::parse_header(in, "coding-table", path);
    detail::check_fingerprint(ct.fingerprint, expected_fp, path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto f = detail::split(line, '\t');
        if (f.size() != 3) throw FormatError(path + ": bad coding-table line '" + line + "'");
        const auto plane = static_cast<int>(parse_int(f[0]));
        const auto bin = static_cast<std::size_t>(parse_int(f[1]));
        if (plane < 0 || plane > 1) throw FormatError(path + ": bad plane id");
        if (ct.words[plane].size() <= bin) ct.words[plane].resize(bin + 1);
        ct.words[plane][bin] = std::string(f[2]);
        ct.m_max = static_cast<long long>(f[2].size());
    }
    for (int p = 0; p < 2; ++p)
        for (const auto& w : ct.words[p])
            if (w.empty()) throw FormatError(path + ": coding table is not total over bins");
    return ct;
}

// --- catalog ----------------------------------------------------------------

inline void write_catalog(const std::string& path, const std::string& samples_path,
                          const Catalog& cat) {
    auto out = detail::open_out(path);
    out << "# cupolet-catalog v1 fingerprint=" << fingerprint_hex(cat.fingerprint) << '\n';
    for (const auto& [key, cup] : cat.entries) {
        out << cup.name << '\t' << cup.control << '\t' << cup.period_crossings << '\t'
            << format_double(cup.period_time) << '\t' << cup.visitation << '\t';
        for (std::size_t i = 0; i < cup.bin_cycle.size(); ++i) {
            const CycleNode& nd = cup.bin_cycle[i];
            if (i) out << ',';
            out << nd.plane << ':' << nd.bin << ':' << nd.phase;
        }
        out << '\n';
    }
    auto sout = detail::open_out(samples_path);
    sout << "# cupolet-samples v1 fingerprint=" << fingerprint_hex(cat.fingerprint) << '\n';
    for (const auto& [key, cup] : cat.entries) {
        for (const State& s : cup.orbit_samples)
            sout << format_double(s.t) << ' ' << format_double(s.v_c1) << ' '
                 << format_double(s.v_c2) << ' ' << format_double(s.i_l) << '\n';
        sout << '\n';
    }
}

inline Catalog read_catalog(const std::string& path, const std::string& samples_path,
                            std::uint64_t expected_fp) {
    auto in = detail::open_in(path);
    Catalog cat;
    cat.fingerprint = detail::parse_header(in, "catalog", path);
    detail::check_fingerprint(cat.fingerprint, expected_fp, path);
    std::string line;
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto f = detail::split(line, '\t');
        if (f.size() != 6) throw FormatError(path + ": bad catalog line '" + line + "'");
        Cupolet cup;
        cup.name = std::string(f[0]);
        cup.control = std::string(f[1]);
        cup.period_crossings = parse_int(f[2]);
        cup.period_time = parse_double(f[3]);
        cup.visitation = std::string(f[4]);
        for (auto part : detail::split(f[5], ',')) {
            auto triple = detail::split(part, ':');
            if (triple.size() != 3)
                throw FormatError(path + ": bad bin-cycle entry '" + std::string(part) + "'");
            cup.bin_cycle.push_back(CycleNode{static_cast<int>(parse_int(triple[0])),
                                              parse_int(triple[1]), parse_int(triple[2])});
        }
        cup.fingerprint = cat.fingerprint;
        order.push_back(cup.control);
        cat.entries.emplace(cup.control, std::move(cup));
    }
    if (!samples_path.empty()) {
        auto sin = detail::open_in(samples_path);
        const std::uint64_t fp = detail::parse_header(sin, "samples", samples_path);
        detail::check_fingerprint(fp, expected_fp, samples_path);
        std::size_t idx = 0;
        std::vector<State> block;
        while (std::getline(sin, line)) {
            if (!line.empty() && line[0] == '#') continue;
            if (line.empty()) {
                if (!block.empty() && idx < order.size())
                    cat.entries.at(order[idx]).orbit_samples = std::move(block);
                block.clear();
                ++idx;
                continue;
            }
            auto f = detail::split(line, ' ');
            if (f.size() != 4)
                throw FormatError(samples_path + ": bad sample row '" + line + "'");
            State s;
            s.t = parse_double(f[0]);
            s.v_c1 = parse_double(f[1]);
            s.v_c2 = parse_double(f[2]);
            s.i_l = parse_double(f[3]);
            block.push_back(s);
        }
        if (!block.empty() && idx < order.size())
            cat.entries.at(order[idx]).orbit_samples = std::move(block);
    }
    return cat;
}

// --- transition graph --------------------------------------------------------

inline void write_graph(const std::string& path, const TransitionGraph& g,
                        const RunManifest& manifest) {
    auto out = detail::open_out(path);
    RunManifest m = manifest;
    m.fingerprint = g.fingerprint;
    m.write(out, "graph");
    out << "from,to,weight\n";
    for (const auto& [edge, w] : g.edges)
        out << 'C' << edge.first << ",C" << edge.second << ',' << w << '\n';
}

inline TransitionGraph read_graph(const std::string& path, std::uint64_t expected_fp) {
    auto in = detail::open_in(path);
    TransitionGraph g;
    g.fingerprint = detail::parse_header(in, "graph", path);
    detail::check_fingerprint(g.fingerprint, expected_fp, path);
    std::string line;
    std::map<std::string, bool> seen;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line == "from,to,weight") continue;
        auto f = detail::split(line, ',');
        if (f.size() != 3) throw FormatError(path + ": bad edge line '" + line + "'");
        auto strip = [&](std::string_view v) {
            if (v.empty() || v.front() != 'C')
                throw FormatError(path + ": node names carry a C prefix: '" + line + "'");
            return std::string(v.substr(1));
        };
        std::string a = strip(f[0]), b = strip(f[1]);
        g.edges[{a, b}] = parse_int(f[2]);
        seen[a] = seen[b] = true;
    }
    for (const auto& [k, used] : seen) g.nodes.push_back(k);
    return g;
}

// --- reports -----------------------------------------------------------------

inline void write_pairs(const std::string& path, const std::vector<EntangledPair>& ps,
                        const RunManifest& manifest) {
    auto out = detail::open_out(path);
    manifest.write(out, "pairs");
    out << "cupolet_a,cupolet_b,exchange,rot_ab,rot_ba,start_a,start_b,certified\n";
    for (const auto& p : ps)
        out << 'C' << p.cupolet_a << ",C" << p.cupolet_b << ',' << p.exchange_label << ','
            << p.rot_ab << ',' << p.rot_ba << ',' << p.start_a << ',' << p.start_b << ','
            << (p.certified ? 1 : 0) << '\n';
}

inline void write_cosim_report(const std::string& path, const CoSimReport& rep,
                               const RunManifest& manifest) {
    auto out = detail::open_out(path);
    manifest.write(out, "report");
    out << "# persisted " << (rep.persisted ? 1 : 0) << '\n';
    if (rep.destabilized_at >= 0) out << "# destabilized_at " << rep.destabilized_at << '\n';
    if (rep.recertified_at >= 0) out << "# recertified_at " << rep.recertified_at << '\n';
    out << "# underruns " << rep.underruns << '\n';
    out << "crossing,system,plane,bin,phase,in_cycle,queue_depth\n";
    for (const auto& r : rep.rows)
        out << r.crossing << ',' << r.system << ',' << r.plane << ',' << r.bin << ','
            << r.phase << ',' << (r.in_cycle ? 1 : 0) << ',' << r.queue_depth << '\n';
}

inline void write_entropy_report(const std::string& path, const EntropyEstimate& est,
                                 const RunManifest& manifest) {
    auto out = detail::open_out(path);
    manifest.write(out, "entropy");
    out << "n,H\n";
    for (std::size_t i = 0; i < est.block_sizes.size(); ++i)
        out << est.block_sizes[i] << ',' << format_double(est.H[i]) << '\n';
    out << "rate," << format_double(est.rate) << '\n';
}

inline void write_spectrum_report(const std::string& path, const std::vector<double>& mags,
                                  const RunManifest& manifest) {
    auto out = detail::open_out(path);
    manifest.write(out, "spectrum");
    out << "k,magnitude\n";
    for (std::size_t k = 0; k < mags.size(); ++k)
        out << k << ',' << format_double(mags[k]) << '\n';
}

inline void write_gram_report(const std::string& path, const GramMatrix& g,
                              const RunManifest& manifest) {
    auto out = detail::open_out(path);
    manifest.write(out, "gram");
    out << "name";
    for (const auto& n : g.names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < g.names.size(); ++i) {
        out << g.names[i];
        for (double v : g.m[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

inline void write_weights_report(const std::string& path,
                                 const std::vector<StateVector>& series,
                                 const RunManifest& manifest) {
    auto out = detail::open_out(path);
    manifest.write(out, "weights");
    out << "timestamp";
    if (!series.empty())
        for (const auto& [k, a] : series.front().weights) out << ",C" << k;
    out << '\n';
    for (const auto& sv : series) {
        out << format_double(sv.timestamp);
        for (const auto& [k, a] : sv.weights) out << ',' << format_double(a);
        out << '\n';
    }
}

inline void write_lyapunov_report(const std::string& path,
                                  const std::vector<std::pair<double, double>>& series,
                                  const RunManifest& manifest) {
    auto out = detail::open_out(path);
    manifest.write(out, "lyapunov");
    out << "duration,lambda\n";
    for (const auto& [t, l] : series)
        out << format_double(t) << ',' << format_double(l) << '\n';
}

}  // namespace cupolet
