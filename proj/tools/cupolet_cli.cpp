// Command-line front end: calibration, cupolet generation and enumeration,
// entanglement search / co-simulation / measurement, targeting and the
// analysis reports, all reproducible from one config + seed.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cupolet/cupolet_lab.hpp"

namespace fs = std::filesystem;
using namespace cupolet;

namespace {

struct Cli {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string lab_dir;
    int workers = 0;
    std::string command_line;

    SystemConfig cfg;
    std::optional<SectionSet> sections;
    std::optional<CodingTable> coding;

    fs::path file(const std::string& name) const { return fs::path(lab_dir) / name; }

    void load_config() {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw FormatError("cannot open config file: " + config_path);
            cfg = read_config(in);
        }
        for (const auto& kv : overrides) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw FormatError("override must look like key=value: '" + kv + "'");
            cfg.set(trim(std::string_view(kv).substr(0, eq)),
                    trim(std::string_view(kv).substr(eq + 1)));
        }
        if (seed) cfg.rng_seed = *seed;
        cfg.validate();
    }

    const SectionSet& ensure_sections() {
        if (!sections) sections = calibrate(cfg, cfg.calib_crossings, cfg.rng_seed);
        return *sections;
    }

    /// Coding table: loaded from the lab dir when present (fingerprint
    /// checked), built and cached otherwise.
    const CodingTable& ensure_coding() {
        if (coding) return *coding;
        const SectionSet& ss = ensure_sections();
        const fs::path path = file("coding_table.tsv");
        if (fs::exists(path)) {
            coding = read_coding_table(path.string(), cfg.fingerprint());
        } else {
            coding = build_coding_table(ss, cfg, workers);
            write_coding_table(path.string(), *coding);
        }
        return *coding;
    }

    Catalog load_catalog(bool with_samples = true) const {
        const fs::path path = file("catalog.tsv");
        if (!fs::exists(path))
            throw FormatError("no catalog at " + path.string() +
                              "; run gen or enumerate first");
        return read_catalog(path.string(),
                            with_samples ? file("catalog.samples.txt").string()
                                         : std::string{},
                            cfg.fingerprint());
    }

    void store_catalog(const Catalog& cat) const {
        write_catalog(file("catalog.tsv").string(), file("catalog.samples.txt").string(), cat);
    }

    RunManifest manifest(std::vector<std::string> inputs = {},
                         std::vector<std::string> outputs = {}) const {
        RunManifest m;
        m.fingerprint = cfg.fingerprint();
        m.command = command_line;
        m.seed = cfg.rng_seed;
        m.inputs = std::move(inputs);
        m.outputs = std::move(outputs);
        return m;
    }
};

std::string word_arg(const std::string& arg) {
    std::string w = arg;
    if (!w.empty() && (w[0] == 'C' || w[0] == 'c')) w = w.substr(1);
    if (w.empty()) throw FormatError("empty control word in '" + arg + "'");
    for (char c : w)
        if (c != '0' && c != '1')
            throw FormatError("expected a binary control word or C-name, got '" + arg + "'");
    return w;
}

std::pair<std::string, std::string> pair_arg(const std::string& arg) {
    auto comma = arg.find(',');
    if (comma == std::string::npos)
        throw FormatError("expected --pair <a,b>, got '" + arg + "'");
    return {word_arg(arg.substr(0, comma)), word_arg(arg.substr(comma + 1))};
}

const EntangledPair& find_pair(const std::vector<EntangledPair>& ps, const std::string& a,
                               const std::string& b) {
    for (const auto& p : ps)
        if ((p.cupolet_a == a && p.cupolet_b == b) || (p.cupolet_a == b && p.cupolet_b == a))
            return p;
    throw NotStabilized("pair (C" + a + ", C" + b + ") is not certified under this exchange");
}

int run_calibrate(Cli& cli) {
    const SectionSet& ss = cli.ensure_sections();
    const CodingTable& ct = cli.ensure_coding();
    write_coding_table(cli.file("coding_table.tsv").string(), ct);
    std::cout << "fingerprint " << fingerprint_hex(cli.cfg.fingerprint()) << '\n';
    for (int p = 0; p < 2; ++p)
        std::cout << "plane " << p << " axis=(" << format_double(ss.plane[p].axis_v) << ","
                  << format_double(ss.plane[p].axis_i) << ") range=["
                  << format_double(ss.plane[p].lo) << "," << format_double(ss.plane[p].hi)
                  << "] direction=" << ss.plane[p].direction << '\n';
    std::cout << "attractor_diameter " << format_double(ss.attractor_diameter) << '\n';
    std::cout << "coding_table " << cli.file("coding_table.tsv").string() << '\n';
    return 0;
}

int run_gen(Cli& cli, const std::string& bits) {
    const SectionSet& ss = cli.ensure_sections();
    const CodingTable& ct = cli.ensure_coding();
    Catalog cat;
    if (fs::exists(cli.file("catalog.tsv")))
        cat = cli.load_catalog();
    else
        cat.fingerprint = cli.cfg.fingerprint();
    Cupolet cup = generate(ControlWord(bits), ss, ct, cli.cfg);
    cat.entries.insert_or_assign(cup.control, cup);
    cli.store_catalog(cat);
    std::cout << cup.name << " period_crossings=" << cup.period_crossings
              << " period_time=" << format_double(cup.period_time) << " V" << cup.visitation
              << '\n';
    return 0;
}

int run_enumerate(Cli& cli, long long max_bits) {
    const SectionSet& ss = cli.ensure_sections();
    const CodingTable& ct = cli.ensure_coding();
    EnumerationReport rep;
    Catalog cat = enumerate_catalog(max_bits, ss, ct, cli.cfg, cli.workers, &rep);
    cli.store_catalog(cat);
    std::cout << "candidates " << rep.candidates << '\n';
    std::cout << "generated " << rep.generated << '\n';
    for (const auto& [w, why] : rep.failures)
        std::cerr << "failed C" << w << ": " << why << '\n';
    auto collisions = audit_injectivity(cat);
    std::cout << "bin_cycle_collisions " << collisions.size() << '\n';
    for (const auto& group : collisions) {
        std::cerr << "collision:";
        for (const auto& w : group) std::cerr << " C" << w;
        std::cerr << '\n';
    }
    return 0;
}

int run_visit(Cli& cli, const std::string& name) {
    Catalog cat = cli.load_catalog(false);
    auto it = cat.entries.find(word_arg(name));
    if (it == cat.entries.end())
        throw FormatError("cupolet " + name + " is not in the catalog");
    const Cupolet& c = it->second;
    std::cout << c.name << " control=" << c.control
              << " period_crossings=" << c.period_crossings
              << " period_time=" << format_double(c.period_time) << '\n';
    std::cout << 'V' << c.visitation << '\n';
    return 0;
}

int run_search(Cli& cli, const std::string& exchange) {
    Catalog cat = cli.load_catalog(false);
    ExchangeFunction f = ExchangeFunction::parse(exchange);
    auto pairs = search_pairs(cat, f);
    const std::string out = cli.file("pairs.csv").string();
    write_pairs(out, pairs, cli.manifest({cli.file("catalog.tsv").string()}, {out}));
    std::cout << "pairs " << pairs.size() << '\n';
    for (const auto& p : pairs)
        std::cout << 'C' << p.cupolet_a << " C" << p.cupolet_b << " rot_ab=" << p.rot_ab
                  << " rot_ba=" << p.rot_ba << '\n';
    return 0;
}

int run_cosim(Cli& cli, const std::string& pair, const std::string& exchange,
              long long periods) {
    const SectionSet& ss = cli.ensure_sections();
    const CodingTable& ct = cli.ensure_coding();
    Catalog cat = cli.load_catalog();
    ExchangeFunction f = ExchangeFunction::parse(exchange);
    auto [a, b] = pair_arg(pair);
    auto pairs = search_pairs(cat, f);
    const EntangledPair& p = find_pair(pairs, a, b);
    CoSimReport rep = co_simulate(p, periods, cat, f, ss, ct, cli.cfg);
    const std::string out = cli.file("cosim_C" + a + "_C" + b + ".csv").string();
    write_cosim_report(out, rep, cli.manifest({cli.file("catalog.tsv").string()}, {out}));
    std::cout << "persisted " << (rep.persisted ? 1 : 0) << '\n';
    std::cout << "periods " << rep.periods[0] << ' ' << rep.periods[1] << '\n';
    std::cout << "max_queue_depth " << rep.max_queue_depth << '\n';
    std::cout << "report " << out << '\n';
    return rep.persisted ? 0 : 1;
}

int run_measure(Cli& cli, const std::string& pair, const std::string& exchange,
                const std::string& mode, double param, long long at, long long position,
                int system, long long periods) {
    const SectionSet& ss = cli.ensure_sections();
    const CodingTable& ct = cli.ensure_coding();
    Catalog cat = cli.load_catalog();
    ExchangeFunction f = ExchangeFunction::parse(exchange);
    auto [a, b] = pair_arg(pair);
    auto pairs = search_pairs(cat, f);
    const EntangledPair& p = find_pair(pairs, a, b);

    Measurement m;
    m.system = system;
    m.mode = mode == "blind" ? Measurement::Mode::blind : Measurement::Mode::knowledgeable;
    const Cupolet& sys_cup = cat.entries.at(system == 0 ? p.cupolet_a : p.cupolet_b);
    m.at_crossing = at >= 0 ? at : sys_cup.period_crossings;  // default: after one period
    m.queue_position = position;
    m.param = param >= 0 ? param : 0.4 * 0.5 * ss.bin_width(0);
    CoSimReport rep = measure(p, m, periods, cat, f, ss, ct, cli.cfg);
    const std::string out =
        cli.file("measure_" + mode + "_C" + a + "_C" + b + ".csv").string();
    write_cosim_report(out, rep, cli.manifest({cli.file("catalog.tsv").string()}, {out}));
    std::cout << "mode " << mode << '\n';
    std::cout << "entanglement " << (rep.match_lost ? "destroyed" : "preserved") << '\n';
    std::cout << "report " << out << '\n';
    return 0;
}

int run_target(Cli& cli, const std::string& from, const std::string& to) {
    const SectionSet& ss = cli.ensure_sections();
    const CodingTable& ct = cli.ensure_coding();
    Catalog cat = cli.load_catalog();
    const std::string a = word_arg(from), b = word_arg(to);
    if (!cat.entries.count(a) || !cat.entries.count(b))
        throw FormatError("both endpoints must be catalog cupolets");

    TransitionGraph g;
    const fs::path gpath = cli.file("graph.csv");
    bool loaded = false;
    if (fs::exists(gpath)) {
        g = read_graph(gpath.string(), cli.cfg.fingerprint());
        loaded = std::find(g.nodes.begin(), g.nodes.end(), a) != g.nodes.end() &&
                 std::find(g.nodes.begin(), g.nodes.end(), b) != g.nodes.end();
    }
    if (!loaded) {
        std::vector<EdgeFailure> failures;
        g = build_graph(cat, ss, ct, cli.cfg, cli.workers, &failures);
        for (const auto& fe : failures)
            std::cerr << "edge C" << fe.from << "->C" << fe.to << " failed: " << fe.reason
                      << '\n';
        write_graph(gpath.string(), g,
                    cli.manifest({cli.file("catalog.tsv").string()}, {gpath.string()}));
    }
    auto path = shortest_path(g, a, b);
    if (!path) {
        std::cout << "unreachable\n";
        return 1;
    }
    std::cout << "cost " << path->cost << '\n';
    std::cout << "path";
    for (const auto& n : path->nodes) std::cout << " C" << n;
    std::cout << '\n';
    ExecutionReport rep = execute_path(*path, cat, ss, ct, cli.cfg);
    std::cout << "realized_transient " << rep.realized_transient << '\n';
    std::cout << (rep.success ? "arrived" : "failed") << '\n';
    return rep.success ? 0 : 1;
}

int run_entropy(Cli& cli, long long crossings, long long nmax) {
    const SectionSet& ss = cli.ensure_sections();
    State s = ss.default_start;
    std::string stream;
    stream.reserve(static_cast<std::size_t>(crossings));
    for (long long i = 0; i < crossings; ++i) {
        auto [c, plane] = integrate_to_crossing(s, cli.cfg, ss);
        stream.push_back(plane == 1 ? '1' : '0');
        s = c;
    }
    EntropyEstimate est = block_entropy_rate(stream, nmax);
    const std::string out = cli.file("entropy.csv").string();
    write_entropy_report(out, est, cli.manifest({}, {out}));
    std::cout << "rate " << format_double(est.rate) << '\n';
    std::cout << "report " << out << '\n';
    return 0;
}

int run_spectrum(Cli& cli, const std::string& name) {
    Catalog cat = cli.load_catalog();
    auto it = cat.entries.find(word_arg(name));
    if (it == cat.entries.end())
        throw FormatError("cupolet " + name + " is not in the catalog");
    auto mags = cupolet_spectrum(it->second);
    const std::string out = cli.file("spectrum_" + it->second.name + ".csv").string();
    write_spectrum_report(out, mags, cli.manifest({cli.file("catalog.tsv").string()}, {out}));
    std::cout << "dominant_peak_share " << format_double(dominant_peak_share(mags)) << '\n';
    std::cout << "report " << out << '\n';
    return 0;
}

int run_lyapunov(Cli& cli, double duration) {
    const double l1 = max_lyapunov(cli.cfg, duration);
    const double l2 = max_lyapunov(cli.cfg, 2 * duration);
    std::vector<std::pair<double, double>> series{{duration, l1}, {2 * duration, l2}};
    const std::string out = cli.file("lyapunov.csv").string();
    write_lyapunov_report(out, series, cli.manifest({}, {out}));
    std::cout << "lambda " << format_double(l1) << '\n';
    std::cout << "lambda_2x " << format_double(l2) << '\n';
    std::cout << "report " << out << '\n';
    return 0;
}

int run_gram(Cli& cli) {
    Catalog cat = cli.load_catalog();
    GramMatrix g = gram_matrix(cat);
    const std::string out = cli.file("gram.csv").string();
    write_gram_report(out, g, cli.manifest({cli.file("catalog.tsv").string()}, {out}));
    std::cout << "cupolets " << g.names.size() << '\n';
    std::cout << "report " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "cupolet-lab: stabilized periodic orbits of the double scroll oscillator, "
        "their entanglement, targeting and analysis"};
    app.require_subcommand(1);

    Cli cli;
    const char* env_dir = std::getenv("CUPOLET_LAB_DIR");
    cli.lab_dir = env_dir ? env_dir : ".";

    app.add_option("--config", cli.config_path, "config file of key = value lines");
    app.add_option("--set", cli.overrides, "override one config key (key=value)");
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override rng_seed");
    app.add_option("--lab-dir", cli.lab_dir, "workspace directory (env CUPOLET_LAB_DIR)");
    app.add_option("--workers", cli.workers, "parallel worker bound (0 = all cores)");

    auto* c_cal = app.add_subcommand("calibrate", "calibrate sections, build the coding table");

    auto* c_gen = app.add_subcommand("gen", "stabilize one control word into the catalog");
    std::string bits;
    c_gen->add_option("--bits", bits, "binary control word")->required();

    auto* c_enum = app.add_subcommand("enumerate", "generate all words up to --max-bits");
    long long max_bits = 4;
    c_enum->add_option("--max-bits", max_bits, "maximum control word length")->required();

    auto* c_visit = app.add_subcommand("visit", "print a stored cupolet's visitation word");
    std::string visit_name;
    c_visit->add_option("--name", visit_name, "cupolet name or control word")->required();

    auto* c_ent = app.add_subcommand("entangle", "entanglement search and experiments");
    c_ent->require_subcommand(1);
    auto* c_search = c_ent->add_subcommand("search", "find mutually stabilizing pairs");
    std::string exchange = "identity";
    c_search->add_option("--exchange", exchange, "identity | not | rundec | lookup:<path>");
    auto* c_cosim = c_ent->add_subcommand("cosim", "co-simulate a certified pair");
    std::string pair_names;
    long long periods = 100;
    c_cosim->add_option("--pair", pair_names, "pair as <a,b>")->required();
    c_cosim->add_option("--exchange", exchange, "identity | not | rundec | lookup:<path>");
    c_cosim->add_option("--periods", periods, "periods to run");
    auto* c_meas = c_ent->add_subcommand("measure", "disturb a co-simulated pair");
    std::string mode;
    double param = -1.0;
    long long at = -1, position = 0;
    int system = 0;
    c_meas->add_option("--mode", mode, "blind | knowledgeable")
        ->required()
        ->check(CLI::IsMember({"blind", "knowledgeable"}));
    c_meas->add_option("--pair", pair_names, "pair as <a,b>")->required();
    c_meas->add_option("--exchange", exchange, "identity | not | rundec | lookup:<path>");
    c_meas->add_option("--param", param, "knowledgeable displacement magnitude");
    c_meas->add_option("--at", at, "system-local crossing at which the probe fires");
    c_meas->add_option("--position", position, "blind: queued bit position to flip");
    c_meas->add_option("--system", system, "which system is measured (0 or 1)");
    c_meas->add_option("--periods", periods, "periods to run");

    auto* c_target = app.add_subcommand("target", "shortest switching path between cupolets");
    std::string from, to;
    c_target->add_option("--from", from, "source cupolet")->required();
    c_target->add_option("--to", to, "destination cupolet")->required();

    auto* c_entropy =
        app.add_subcommand("entropy", "block entropy of the free visitation stream");
    long long ent_crossings = 10000, nmax = 8;
    c_entropy->add_option("--crossings", ent_crossings, "stream length in crossings");
    c_entropy->add_option("--nmax", nmax, "largest block size");

    auto* c_spec = app.add_subcommand("spectrum", "single-period magnitude spectrum");
    std::string spec_name;
    c_spec->add_option("--name", spec_name, "cupolet name or control word")->required();

    auto* c_lyap = app.add_subcommand("lyapunov", "largest Lyapunov exponent estimate");
    double duration = 1000.0;
    c_lyap->add_option("--duration", duration, "integration time");

    auto* c_gram = app.add_subcommand("gram", "pairwise waveform inner products");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    {
        std::string joined;
        for (int i = 1; i < argc; ++i) {
            if (i > 1) joined += ' ';
            joined += argv[i];
        }
        cli.command_line = joined;
    }
    if (seed_opt->count() > 0) cli.seed = seed_val;

    try {
        cli.load_config();
        fs::create_directories(cli.lab_dir);
        if (app.got_subcommand(c_cal)) return run_calibrate(cli);
        if (app.got_subcommand(c_gen)) return run_gen(cli, bits);
        if (app.got_subcommand(c_enum)) return run_enumerate(cli, max_bits);
        if (app.got_subcommand(c_visit)) return run_visit(cli, visit_name);
        if (app.got_subcommand(c_ent)) {
            if (c_ent->got_subcommand(c_search)) return run_search(cli, exchange);
            if (c_ent->got_subcommand(c_cosim))
                return run_cosim(cli, pair_names, exchange, periods);
            if (c_ent->got_subcommand(c_meas))
                return run_measure(cli, pair_names, exchange, mode, param, at, position,
                                   system, periods);
        }
        if (app.got_subcommand(c_target)) return run_target(cli, from, to);
        if (app.got_subcommand(c_entropy)) return run_entropy(cli, ent_crossings, nmax);
        if (app.got_subcommand(c_spec)) return run_spectrum(cli, spec_name);
        if (app.got_subcommand(c_lyap)) return run_lyapunov(cli, duration);
        if (app.got_subcommand(c_gram)) return run_gram(cli);
        std::cerr << "no subcommand dispatched\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
}
