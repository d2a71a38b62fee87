#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qsread/bare.hpp"
#include "qsread/freq_grid.hpp"

using namespace qsread;
using std::numbers::pi;

namespace {
double rel(cdouble a, cdouble b) { return std::abs(a - b) / std::abs(b); }
} // namespace

TEST_CASE("make_grid bosonic frequencies") {
    const auto g = make_grid(2 * pi, Statistics::bosonic, 2);
    REQUIRE(g.size() == 5);
    const double expect[] = {-2, -1, 0, 1, 2};
    for (int i = 0; i < 5; ++i) CHECK(g.frequencies()[i] == doctest::Approx(expect[i]).epsilon(1e-15));
    CHECK(g.frequency(0) == 0.0);
}

TEST_CASE("make_grid fermionic frequencies") {
    const auto g = make_grid(pi, Statistics::fermionic, 1);
    REQUIRE(g.size() == 2);
    CHECK(g.frequency(0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(g.frequency(1) == doctest::Approx(1.0).epsilon(1e-15));
    // no zero frequency
    for (double w : g.frequencies()) CHECK(std::abs(w) > 0.1);
}

TEST_CASE("make_grid unit beta") {
    const auto g = make_grid(1.0, Statistics::bosonic, 1);
    CHECK(g.frequency(-1) == doctest::Approx(-2 * pi));
    CHECK(g.frequency(0) == 0.0);
    CHECK(g.frequency(1) == doctest::Approx(2 * pi));
}

TEST_CASE("make_grid rejects bad parameters") {
    CHECK_THROWS_AS(make_grid(0.0, Statistics::bosonic, 4), domain_error);
    CHECK_THROWS_AS(make_grid(-1.0, Statistics::bosonic, 4), domain_error);
    CHECK_THROWS_AS(make_grid(1.0, Statistics::bosonic, 0), domain_error);
}

TEST_CASE("grid symmetry under omega -> -omega") {
    const auto gb = make_grid(3.7, Statistics::bosonic, 12);
    for (int n = 1; n <= 12; ++n) CHECK(gb.frequency(-n) == -gb.frequency(n));
    const auto gf = make_grid(3.7, Statistics::fermionic, 12);
    for (int n = 1; n <= 12; ++n) CHECK(gf.frequency(1 - n) == -gf.frequency(n));
}

TEST_CASE("tau_to_freq of a constant is c*beta at n=0 only") {
    const double beta = 2.5, c = 1.7;
    const auto s = sample_uniform([&](double) { return cdouble(c, 0); }, beta, 256,
                                  Statistics::bosonic);
    const auto out = tau_to_freq(s, make_grid(beta, Statistics::bosonic, 8));
    CHECK(out.at_n(0).real() == doctest::Approx(c * beta).epsilon(1e-12));
    for (int n = 1; n <= 8; ++n) {
        CHECK(std::abs(out.at_n(n)) < 1e-12);
        CHECK(std::abs(out.at_n(-n)) < 1e-12);
    }
    CHECK(out.meta.at("quadrature") == "trapezoid");
}

TEST_CASE("tau_to_freq of zero is zero") {
    const auto s = sample_uniform([](double) { return cdouble(0, 0); }, 1.0, 64,
                                  Statistics::bosonic);
    const auto out = tau_to_freq(s, make_grid(1.0, Statistics::bosonic, 4));
    for (const auto& v : out.values) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("tau_to_freq reproduces cavity_bare within quadrature tolerance") {
    // composite trapezoid at M=2048: absolute aliasing error ~1e-6 at the outer
    // frequencies (relative error there is O((N/M)^2), not small)
    const double wd = 1.0, beta = 5.0;
    const auto grid = make_grid(beta, Statistics::bosonic, 256);
    const auto s = sample_uniform([&](double t) { return cdouble(cavity_bare_tau(wd, beta, t), 0); },
                                  beta, 2048, Statistics::bosonic);
    const auto got = tau_to_freq(s, grid);
    const auto exact = cavity_bare(wd, grid);
    double max_abs = 0;
    for (int i = 0; i < grid.size(); ++i)
        max_abs = std::max(max_abs, std::abs(got.values[i] - exact.values[i]));
    CHECK(max_abs < 2e-6);
    // relative accuracy degrades like the aliasing estimate (pi^2/3)(n/M)^2
    for (int n = -16; n <= 16; ++n)
        CHECK(rel(got.at_n(n), exact.at_n(n)) < 1e-6 + 4.0 * (n / 2048.0) * (n / 2048.0));
}

TEST_CASE("tau_to_freq resolution guard") {
    const auto s = sample_uniform([](double) { return cdouble(1, 0); }, 1.0, 64,
                                  Statistics::bosonic);
    // N=64 needs more than 64 panels for 4 points per period
    CHECK_THROWS_AS(tau_to_freq(s, make_grid(1.0, Statistics::bosonic, 64)), resolution_error);
}

TEST_CASE("tau_to_freq statistics mismatch") {
    const auto s = sample_uniform([](double) { return cdouble(1, 0); }, 1.0, 64,
                                  Statistics::fermionic);
    CHECK_THROWS_AS(tau_to_freq(s, make_grid(1.0, Statistics::bosonic, 4)), statistics_error);
}

TEST_CASE("freq_to_tau of cavity_bare hits the closed form at tau=1") {
    const double wd = 1.0, beta = 5.0;
    const auto series = cavity_bare(wd, make_grid(beta, Statistics::bosonic, 200));
    const cdouble got = freq_to_tau_at(series, 1.0);
    const double exact = cavity_bare_tau(wd, beta, 1.0);
    CHECK(rel(got, cdouble(exact, 0)) < 1e-6);
    CHECK(std::abs(got.imag()) < 1e-12);
}

TEST_CASE("freq_to_tau of the zero series is zero") {
    CorrelatorSeries z(make_grid(2.0, Statistics::bosonic, 16));
    CHECK(std::abs(freq_to_tau_at(z, 0.7)) == 0.0);
}

TEST_CASE("freq_to_tau domain handling") {
    const auto series = cavity_bare(1.0, make_grid(2.0, Statistics::bosonic, 16));
    CHECK_THROWS_AS(freq_to_tau_at(series, -0.5), domain_error);
    CHECK_THROWS_AS(freq_to_tau_at(series, 2.5, {.tail_correction = true, .allow_kms = true}),
                    domain_error);
    // negative tau with KMS: bosonic C(tau) = C(tau + beta)
    const cdouble a = freq_to_tau_at(series, -0.5, {.tail_correction = true, .allow_kms = true});
    const cdouble b = freq_to_tau_at(series, 1.5);
    CHECK(std::abs(a - b) < 1e-12);
    // endpoint needs tail correction
    CHECK_THROWS_AS(freq_to_tau_at(series, 0.0, {.tail_correction = false}), domain_error);
}

TEST_CASE("roundtrip freq_to_tau . tau_to_freq at three resolutions") {
    const double wd = 1.0, beta = 5.0;
    std::vector<double> taus;
    for (int i = 0; i < 64; ++i) taus.push_back(0.05 * beta + (0.90 * beta) * i / 63.0);

    double prev_err = 1e9;
    for (const auto [mesh, N] : {std::pair{512, 64}, {1024, 128}, {2048, 256}}) {
        const auto s = sample_uniform(
            [&](double t) { return cdouble(cavity_bare_tau(wd, beta, t), 0); }, beta, mesh,
            Statistics::bosonic);
        const auto freq = tau_to_freq(s, make_grid(beta, Statistics::bosonic, N));
        const auto back = freq_to_tau(freq, taus);
        double err = 0;
        for (std::size_t i = 0; i < taus.size(); ++i)
            err = std::max(err, std::abs(back.values[i] - cavity_bare_tau(wd, beta, taus[i])));
        CHECK(err < prev_err); // converges with refinement
        prev_err = err;
    }
    CHECK(prev_err < 1e-6); // the default-resolution target
}

TEST_CASE("transform linearity") {
    const double beta = 3.0;
    const auto grid = make_grid(beta, Statistics::bosonic, 16);
    auto f1 = [](double t) { return cdouble(std::exp(-0.3 * t), 0.1 * t); };
    auto f2 = [](double t) { return cdouble(std::cos(t), -0.2); };
    const auto s1 = sample_uniform(f1, beta, 256, Statistics::bosonic);
    const auto s2 = sample_uniform(f2, beta, 256, Statistics::bosonic);
    const auto sc = sample_uniform([&](double t) { return 2.0 * f1(t) - 0.5 * f2(t); }, beta,
                                   256, Statistics::bosonic);
    const auto o1 = tau_to_freq(s1, grid);
    const auto o2 = tau_to_freq(s2, grid);
    const auto oc = tau_to_freq(sc, grid);
    for (int i = 0; i < grid.size(); ++i)
        CHECK(std::abs(oc.values[i] - (2.0 * o1.values[i] - 0.5 * o2.values[i])) < 1e-13);
}

TEST_CASE("real tau input gives conjugate-symmetric frequency output") {
    const double beta = 4.0;
    const auto grid = make_grid(beta, Statistics::bosonic, 32);
    const auto s = sample_uniform([&](double t) { return cdouble(std::exp(-t) + t * t / 7, 0); },
                                  beta, 512, Statistics::bosonic);
    const auto out = tau_to_freq(s, grid);
    for (int n = 1; n <= 32; ++n)
        CHECK(std::abs(out.at_n(-n) - std::conj(out.at_n(n))) < 1e-14);
}

TEST_CASE("kms_extend bosonic and fermionic") {
    const double beta = 2.0;
    auto f = [](double t) { return cdouble(1.0 + t, -t); };
    const auto sb = sample_uniform(f, beta, 128, Statistics::bosonic);
    const auto sf = sample_uniform(f, beta, 128, Statistics::fermionic);
    CHECK(std::abs(kms_extend(sb, -beta / 2) - f(beta / 2)) < 1e-14);
    CHECK(std::abs(kms_extend(sf, -beta / 2) + f(beta / 2)) < 1e-14);
    const auto zero = sample_uniform([](double) { return cdouble(0, 0); }, beta, 32,
                                     Statistics::bosonic);
    CHECK(std::abs(kms_extend(zero, -0.3)) == 0.0);
    CHECK_THROWS_AS(kms_extend(sb, 0.5), domain_error);
    CHECK_THROWS_AS(kms_extend(sb, -2.5), domain_error);
}
