#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cupolet/analysis.hpp"
#include "fixtures.hpp"

using namespace cupolet;
using Catch::Approx;

namespace {

State random_attractor_point(std::mt19937_64& rng) {
    const auto& cfg = fixtures::cfg();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    State s{1.5 + 0.05 * u(rng), 0.01 * u(rng), -1.05 + 0.05 * u(rng), 0.0};
    const int settle = 2000 + static_cast<int>(rng() % 3000);
    for (int i = 0; i < settle; ++i) s = step_once(s, cfg);
    return s;
}

double default_kernel() {
    return 0.05 * fixtures::sections().attractor_diameter;
}

}  // namespace

TEST_CASE("superposition weights are a probability vector", "[analysis]") {
    const auto& cat = fixtures::catalog_n4();
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        State s = random_attractor_point(rng);
        StateVector sv = superposition_weights(s, cat, default_kernel());
        double sum = 0.0;
        for (const auto& [k, a] : sv.weights) {
            CHECK(a >= 0.0);
            sum += a;
        }
        CHECK(sum == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("a state on one orbit collapses its weight there", "[analysis]") {
    const auto& cat = fixtures::catalog_n4();
    // Pick the catalog cupolet whose orbit is farthest from the others.
    const Cupolet& cup = cat.entries.at("0");
    const State on_orbit = cup.orbit_samples[cup.orbit_samples.size() / 3];
    // A narrow kernel realizes the stabilized limit: weight concentrates.
    StateVector sv = superposition_weights(on_orbit, cat, 0.01 * default_kernel());
    CHECK(sv.weight_of("0") >= 0.99);
}

TEST_CASE("equidistant states split their weight equally", "[analysis]") {
    Catalog cat;
    cat.fingerprint = 1;
    auto make = [&](const std::string& word, double x) {
        Cupolet c;
        c.control = word;
        c.name = "C" + word;
        c.period_crossings = 1;
        c.period_time = 1.0;
        c.orbit_samples = {State{x, 0.0, 0.0, 0.0}};
        cat.entries.emplace(word, std::move(c));
    };
    make("0", -1.0);
    make("1", +1.0);
    StateVector sv = superposition_weights(State{0.0, 0.0, 0.0, 0.0}, cat, 0.7);
    CHECK(sv.weight_of("0") == Approx(0.5).margin(1e-12));
    CHECK(sv.weight_of("1") == Approx(0.5).margin(1e-12));
}

TEST_CASE("superposition rejects an empty catalog", "[analysis]") {
    Catalog cat;
    CHECK_THROWS_AS(superposition_weights(State{}, cat, 1.0), EmptyCatalog);
}

TEST_CASE("controlled runs collapse onto their cupolet", "[analysis][slow]") {
    const auto& cat = fixtures::catalog_n4();
    const auto& ss = fixtures::sections();
    const auto& ct = fixtures::coding();
    const auto& cfg = fixtures::cfg();
    RunResult run = run_controlled(ss.default_start, ControlWord("01"), cfg.max_crossings,
                                   ss, ct, cfg);
    std::vector<State> states;
    states.reserve(run.records.size());
    for (const auto& rec : run.records)
        states.push_back(bin_center(rec.plane, rec.bin, ss));
    CHECK(collapse_check(states, run.transient, "01", cat, default_kernel(), 0.95));
    CHECK(collapse_check(states, run.transient, "01", cat, default_kernel(), 0.0));
    // An uncontrolled chaotic run never keeps a single dominant weight.
    std::vector<State> free_states;
    State f = ss.default_start;
    for (int i = 0; i < 120; ++i) {
        auto [c, plane] = integrate_to_crossing(f, cfg, ss);
        free_states.push_back(c);
        f = c;
    }
    bool dominated = false;
    for (const auto& [key, cup] : cat.entries)
        dominated = dominated ||
                    collapse_check(free_states, 20, key, cat, default_kernel(), 0.95);
    CHECK_FALSE(dominated);
}

TEST_CASE("block entropies are monotone with a bracketed rate", "[analysis]") {
    std::mt19937_64 rng(31);
    std::string coin(20000, '0');
    std::bernoulli_distribution bit(0.5);
    for (auto& c : coin)
        if (bit(rng)) c = '1';
    EntropyEstimate est = block_entropy_rate(coin, 8);
    for (std::size_t i = 1; i < est.H.size(); ++i) CHECK(est.H[i] >= est.H[i - 1] - 1e-12);
    CHECK(est.rate >= 0.0);
    CHECK(est.rate <= std::log(2.0) + 1e-12);
}

TEST_CASE("a fair coin word has rate ln 2", "[analysis]") {
    std::mt19937_64 rng(33);
    std::string coin(100000, '0');
    std::bernoulli_distribution bit(0.5);
    for (auto& c : coin)
        if (bit(rng)) c = '1';
    EntropyEstimate est = block_entropy_rate(coin, 8);
    CHECK(est.rate == Approx(std::log(2.0)).epsilon(0.05));
}

TEST_CASE("a repeated word has rate exactly zero past its period", "[analysis]") {
    std::string word = "0111010";  // period 7
    std::string repeated;
    for (int i = 0; i < 40; ++i) repeated += word;
    EntropyEstimate est = block_entropy_rate(repeated, 9);
    CHECK(est.rate == 0.0);
    // H(n) saturates at ln(period).
    CHECK(est.H.back() == Approx(std::log(7.0)).margin(1e-12));
}

TEST_CASE("entropy estimation guards its preconditions", "[analysis]") {
    CHECK_THROWS_AS(block_entropy_rate("0101", 8), InsufficientData);
    CHECK_THROWS_AS(block_entropy_rate(std::string(100, '0'), 1), FormatError);
    CHECK_THROWS_AS(block_entropy_rate(std::string(100, '2'), 4), FormatError);
}

TEST_CASE("the attractor's largest exponent is positive and stable", "[analysis][slow]") {
    const auto& cfg = fixtures::cfg();
    const double l1 = max_lyapunov(cfg, 300.0);
    CHECK(l1 > 0.0);
    const double l2 = max_lyapunov(cfg, 600.0);
    CHECK(std::abs(l2 - l1) < 0.10 * std::abs(l1));
}

TEST_CASE("a contracting linear field has exponent -1", "[analysis]") {
    auto rhs = [](const Vec<3>& y) { return Vec<3>{-y[0], -y[1], -y[2]}; };
    std::mt19937_64 rng(5);
    const double l = detail::benettin_exponent(rhs, Vec<3>{1.0, 0.5, -0.2}, 0.005, 50.0, 50,
                                               1e-8, rng);
    CHECK(l == Approx(-1.0).epsilon(0.05));
}

TEST_CASE("one-period exponents split stable from unstable orbits", "[analysis][slow]") {
    // Hopf normal form: attracting limit cycle of radius 1, period 2*pi.
    auto hopf = [](const Vec<3>& y) {
        const double r2 = y[0] * y[0] + y[1] * y[1];
        return Vec<3>{-y[1] + y[0] * (1.0 - r2), y[0] + y[1] * (1.0 - r2), -y[2]};
    };
    const double two_pi = 2.0 * M_PI;
    // Radial perturbations contract at rate -2.
    const double radial =
        one_period_exponent(hopf, Vec<3>{1.0, 0.0, 0.0}, two_pi, 0.001, Vec<3>{1, 0, 0}, 1e-7);
    CHECK(radial == Approx(-2.0).epsilon(0.05));
    const double mixed = one_period_exponent(hopf, Vec<3>{1.0, 0.0, 0.0}, two_pi, 0.001,
                                             Vec<3>{0.3, 0.4, 0.2}, 1e-7);
    CHECK(mixed < 0.0);

    // Double scroll cupolets ride unstable orbits: positive local exponents.
    const auto& cat = fixtures::catalog_n4();
    const auto& ss = fixtures::sections();
    const auto& cfg = fixtures::cfg();
    for (const auto& key : {"0", "01"}) {
        const double l = local_lyapunov(cat.entries.at(key), ss, cfg);
        CHECK(l > 0.0);
    }
}

TEST_CASE("phase subsets give consistent local exponents", "[analysis][slow]") {
    const auto& cat = fixtures::catalog_n4();
    const auto& ss = fixtures::sections();
    const auto& cfg = fixtures::cfg();
    const Cupolet& cup = cat.entries.at("0");
    const double full = local_lyapunov(cup, ss, cfg, 16);
    const double sub = local_lyapunov(cup, ss, cfg, 8);
    CHECK(std::abs(sub - full) < 0.20 * std::abs(full));
}

TEST_CASE("spectra satisfy Parseval's identity", "[analysis]") {
    const auto& cat = fixtures::catalog_n4();
    const Cupolet& cup = cat.entries.begin()->second;
    std::vector<double> wave = resample_waveform(cup);
    std::vector<double> mags = cupolet_spectrum(cup);
    double time_power = 0.0, freq_power = 0.0;
    for (double x : wave) time_power += x * x;
    for (double m : mags) freq_power += m * m;
    CHECK(freq_power == Approx(static_cast<double>(wave.size()) * time_power).epsilon(1e-6));
}

TEST_CASE("a pure sinusoid concentrates in its frequency bin", "[analysis]") {
    Cupolet cup;
    cup.control = "t";
    cup.period_crossings = 1;
    cup.period_time = 1.0;
    for (int i = 0; i < 256; ++i) {
        State s;
        s.t = static_cast<double>(i) / 256.0;
        s.v_c1 = std::sin(2.0 * M_PI * 3.0 * s.t);
        cup.orbit_samples.push_back(s);
    }
    auto mags = cupolet_spectrum(cup);
    // Bin 3 carries the tone.
    std::size_t peak = 1;
    for (std::size_t k = 1; k <= mags.size() / 2; ++k)
        if (mags[k] > mags[peak]) peak = k;
    CHECK(peak == 3);
    CHECK(dominant_peak_share(mags) > 0.99);
}

TEST_CASE("the simplest cupolet is dominant-peak heavy", "[analysis]") {
    const auto& cat = fixtures::catalog_n4();
    const Cupolet* simplest = nullptr;
    for (const auto& [key, cup] : cat.entries)
        if (!simplest || cup.period_crossings < simplest->period_crossings) simplest = &cup;
    REQUIRE(simplest);
    CHECK(dominant_peak_share(cupolet_spectrum(*simplest)) >= 0.5);
}

TEST_CASE("longer periods carry more spectral peaks", "[analysis]") {
    const auto& cat = fixtures::catalog_n4();
    const Cupolet* simplest = nullptr;
    const Cupolet* longest = nullptr;
    for (const auto& [key, cup] : cat.entries) {
        if (!simplest || cup.period_crossings < simplest->period_crossings) simplest = &cup;
        if (!longest || cup.period_crossings > longest->period_crossings) longest = &cup;
    }
    auto count_peaks = [](const std::vector<double>& mags) {
        double top = 0.0;
        for (std::size_t k = 1; k <= mags.size() / 2; ++k) top = std::max(top, mags[k]);
        long long n = 0;
        for (std::size_t k = 1; k <= mags.size() / 2; ++k)
            if (mags[k] > 0.01 * top) ++n;
        return n;
    };
    CHECK(count_peaks(cupolet_spectrum(*longest)) >
          count_peaks(cupolet_spectrum(*simplest)));
}

TEST_CASE("the gram matrix is a normalized inner-product table", "[analysis]") {
    const auto& cat = fixtures::catalog_n4();
    GramMatrix g = gram_matrix(cat);
    const std::size_t n = g.names.size();
    REQUIRE(n == cat.entries.size());
    double max_off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(g.m[i][i] == Approx(1.0).margin(1e-9));
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(g.m[i][j] == g.m[j][i]);
            if (i != j) max_off = std::max(max_off, std::abs(g.m[i][j]));
        }
    }
    // Waveforms overlap; no orthogonality.
    CHECK(max_off > 0.1);
}

TEST_CASE("the gram matrix is positive semidefinite", "[analysis]") {
    const auto& cat = fixtures::catalog_n4();
    GramMatrix g = gram_matrix(cat);
    // Jacobi eigenvalue sweep, small symmetric matrix.
    auto m = g.m;
    const std::size_t n = m.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
        if (off < 1e-18) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(m[p][q]) < 1e-15) continue;
                const double theta = 0.5 * std::atan2(2.0 * m[p][q], m[q][q] - m[p][p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
    }
    for (std::size_t i = 0; i < n; ++i) CHECK(m[i][i] >= -1e-9);
}

TEST_CASE("gram matrix needs at least two cupolets", "[analysis]") {
    Catalog cat;
    CHECK_THROWS_AS(gram_matrix(cat), EmptyCatalog);
}
