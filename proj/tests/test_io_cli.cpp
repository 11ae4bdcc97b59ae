#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cupolet/io.hpp"
#include "fixtures.hpp"

using namespace cupolet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cupolet_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& n) const { return (path / n).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& lab, const std::string& args, std::string* out = nullptr) {
    const std::string cmd = std::string(CUPOLET_CLI_PATH) + " --lab-dir " + lab + " " + args +
                            " > " + lab + "/stdout.txt 2> " + lab + "/stderr.txt";
    const int rc = std::system(cmd.c_str());
    if (out) *out = slurp(lab + "/stdout.txt");
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("config round trip and fingerprint mixing", "[io]") {
    SystemConfig cfg;
    cfg.bins_per_plane = 123 + 1600;
    cfg.rng_seed = 77;
    std::ostringstream os;
    write_config(os, cfg);
    std::istringstream is(os.str());
    SystemConfig back = read_config(is);
    CHECK(back.fingerprint() == cfg.fingerprint());
    CHECK(back.bins_per_plane == cfg.bins_per_plane);

    std::istringstream bad("nonsense_key = 3\n");
    CHECK_THROWS_AS(read_config(bad), FormatError);
}

TEST_CASE("coding table files round trip and verify fingerprints", "[io]") {
    TempDir tmp;
    CodingTable ct;
    ct.m_max = 4;
    ct.fingerprint = fixtures::cfg().fingerprint();
    ct.words[0] = {"0101", "0011"};
    ct.words[1] = {"1111", "1000"};
    write_coding_table(tmp.file("ct.tsv"), ct);
    CodingTable back = read_coding_table(tmp.file("ct.tsv"), ct.fingerprint);
    CHECK(back.words[0] == ct.words[0]);
    CHECK(back.words[1] == ct.words[1]);
    CHECK(back.m_max == 4);
    CHECK_THROWS_AS(read_coding_table(tmp.file("ct.tsv"), ct.fingerprint + 1),
                    FingerprintMismatch);
}

TEST_CASE("catalog files round trip with orbit samples", "[io][slow]") {
    TempDir tmp;
    const Catalog& cat = fixtures::catalog_n4();
    write_catalog(tmp.file("cat.tsv"), tmp.file("cat.samples.txt"), cat);
    Catalog back = read_catalog(tmp.file("cat.tsv"), tmp.file("cat.samples.txt"),
                                cat.fingerprint);
    REQUIRE(back.entries.size() == cat.entries.size());
    for (const auto& [key, cup] : cat.entries) {
        const Cupolet& b = back.entries.at(key);
        CHECK(b.name == cup.name);
        CHECK(b.visitation == cup.visitation);
        CHECK(b.bin_cycle == cup.bin_cycle);
        CHECK(b.period_crossings == cup.period_crossings);
        CHECK(b.period_time == cup.period_time);  // exact: shortest round-trip format
        REQUIRE(b.orbit_samples.size() == cup.orbit_samples.size());
        CHECK(b.orbit_samples[5] == cup.orbit_samples[5]);
    }
}

TEST_CASE("graph files round trip", "[io][slow]") {
    TempDir tmp;
    TransitionGraph g;
    g.fingerprint = fixtures::cfg().fingerprint();
    g.nodes = {"0", "01"};
    g.edges[{"0", "0"}] = 0;
    g.edges[{"01", "01"}] = 0;
    g.edges[{"0", "01"}] = 17;
    g.edges[{"01", "0"}] = 23;
    RunManifest m;
    m.fingerprint = g.fingerprint;
    write_graph(tmp.file("graph.csv"), g, m);
    TransitionGraph back = read_graph(tmp.file("graph.csv"), g.fingerprint);
    CHECK(back.edges == g.edges);
    CHECK(back.nodes == g.nodes);
}

TEST_CASE("cli rejects unknown flags with exit 2 and prints help", "[cli]") {
    TempDir tmp;
    CHECK(run_cli(tmp.file(""), "--definitely-not-a-flag") == 2);
    CHECK(run_cli(tmp.file(""), "gen") == 2);  // missing required --bits
    std::string out;
    CHECK(run_cli(tmp.file(""), "--help", &out) == 0);
    CHECK(out.find("calibrate") != std::string::npos);
    CHECK(out.find("entangle") != std::string::npos);
}

TEST_CASE("cli generates catalogs and reports reproducibly", "[cli][slow]") {
    TempDir tmp;
    const std::string lab = tmp.file("");
    std::string out;
    REQUIRE(run_cli(lab, "gen --bits 00000000011", &out) == 0);
    CHECK(out.find("C00000000011") != std::string::npos);

    const std::string first_catalog = slurp(tmp.file("catalog.tsv"));
    const std::string first_samples = slurp(tmp.file("catalog.samples.txt"));
    REQUIRE(run_cli(lab, "gen --bits 00000000011", &out) == 0);
    CHECK(slurp(tmp.file("catalog.tsv")) == first_catalog);       // byte identical
    CHECK(slurp(tmp.file("catalog.samples.txt")) == first_samples);

    // The record is discoverable.
    REQUIRE(run_cli(lab, "visit --name C00000000011", &out) == 0);
    CHECK(out.find("V") != std::string::npos);

    // Mixing a different config with the stored artifacts aborts.
    CHECK(run_cli(lab, "--set bins_per_plane=1700 visit --name C00000000011") == 1);

    // Unknown cupolets are domain failures.
    CHECK(run_cli(lab, "visit --name C010101") == 1);

    // Entropy and lyapunov reports carry the config fingerprint.
    REQUIRE(run_cli(lab, "entropy --crossings 2000 --nmax 6") == 0);
    const std::string entropy_a = slurp(tmp.file("entropy.csv"));
    CHECK(entropy_a.find(fingerprint_hex(fixtures::cfg().fingerprint())) != std::string::npos);
    REQUIRE(run_cli(lab, "entropy --crossings 2000 --nmax 6") == 0);
    CHECK(slurp(tmp.file("entropy.csv")) == entropy_a);
}

TEST_CASE("cli spectra, gram and pair search run end to end", "[cli][slow]") {
    TempDir tmp;
    const std::string lab = tmp.file("");
    REQUIRE(run_cli(lab, "enumerate --max-bits 3") == 0);
    std::string out;
    REQUIRE(run_cli(lab, "spectrum --name C1", &out) == 0);
    CHECK(out.find("dominant_peak_share") != std::string::npos);
    REQUIRE(run_cli(lab, "gram") == 0);
    REQUIRE(run_cli(lab, "entangle search --exchange identity", &out) == 0);
    CHECK(out.find("pairs") != std::string::npos);
    CHECK(fs::exists(tmp.file("pairs.csv")));

    // Searching with a lookup exchange built from catalog words.
    Catalog cat = read_catalog(tmp.file("catalog.tsv"), "", fixtures::cfg().fingerprint());
    const Cupolet& a = cat.entries.at("1");
    // Re-read the full catalog (samples included) to build the mutual map.
    cat = read_catalog(tmp.file("catalog.tsv"), tmp.file("catalog.samples.txt"),
                       fixtures::cfg().fingerprint());
    const Cupolet& b = cat.entries.at("011");
    ExchangeFunction f = fixtures::mutual_lookup(cat.entries.at("1"), b);
    {
        std::ofstream tsv(tmp.file("mutual.tsv"));
        for (const auto& [k, v] : f.table) tsv << k << '\t' << v << '\n';
    }
    REQUIRE(run_cli(lab, "entangle search --exchange lookup:" + tmp.file("mutual.tsv"), &out) ==
            0);
    CHECK(out.find("pairs 1") != std::string::npos);
    REQUIRE(run_cli(lab,
                    "entangle cosim --pair C1,C011 --periods 30 --exchange lookup:" +
                        tmp.file("mutual.tsv"),
                    &out) == 0);
    CHECK(out.find("persisted 1") != std::string::npos);
    REQUIRE(run_cli(lab,
                    "entangle measure --mode knowledgeable --pair C1,C011 --periods 30 "
                    "--exchange lookup:" +
                        tmp.file("mutual.tsv"),
                    &out) == 0);
    CHECK(out.find("preserved") != std::string::npos);
    REQUIRE(run_cli(lab,
                    "entangle measure --mode blind --pair C1,C011 --periods 30 "
                    "--exchange lookup:" +
                        tmp.file("mutual.tsv"),
                    &out) == 0);
    CHECK(out.find("destroyed") != std::string::npos);
    (void)a;
}

TEST_CASE("cli targeting runs end to end", "[cli][slow]") {
    TempDir tmp;
    const std::string lab = tmp.file("");
    REQUIRE(run_cli(lab, "enumerate --max-bits 3") == 0);
    std::string out;
    REQUIRE(run_cli(lab, "target --from C1 --to C001", &out) == 0);
    CHECK(out.find("arrived") != std::string::npos);
    CHECK(fs::exists(tmp.file("graph.csv")));
    const std::string graph_a = slurp(tmp.file("graph.csv"));
    // Rerun loads the cached graph; bytes stay put.
    REQUIRE(run_cli(lab, "target --from C1 --to C001", &out) == 0);
    CHECK(slurp(tmp.file("graph.csv")) == graph_a);
}
