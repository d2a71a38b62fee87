#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qsread/bare.hpp"
#include "qsread/dyson.hpp"

using namespace qsread;
using std::numbers::pi;

namespace {

// Independent oracle for the particle-hole bubble: explicit internal Matsubara
// sum (1/beta) sum_m G0(k, iv_m) G0(k+q, iv_m + iw_n), truncated symmetrically
// with the 1/(iv_m)^2 tail handled analytically.
cdouble bubble_internal_sum(const LatticeSpec& lat, int q, int n, double beta,
                            long half_range = 200000) {
    const cdouble iwn(0.0, 2.0 * pi * n / beta);
    cdouble total = 0.0;
    for (int k = 0; k < lat.L; ++k) {
        const double ek = dispersion(lat, k);
        const double ekq = dispersion(lat, (k + q) % lat.L);
        cdouble acc = 0.0;
        for (long m = -half_range; m < half_range; ++m) {
            const cdouble ivm(0.0, pi * (2.0 * m + 1.0) / beta);
            acc += 1.0 / ((ivm - ek) * (ivm + iwn - ekq)) - 1.0 / (ivm * (ivm + iwn));
        }
        acc /= beta;
        // analytic value of the subtracted reference sum
        if (n == 0) acc += -beta / 4.0;
        total += acc;
    }
    return total;
}

} // namespace

TEST_CASE("cavity_bare closed-form values") {
    const auto g = make_grid(2 * pi, Statistics::bosonic, 8);
    const auto s = cavity_bare(1.0, g);
    CHECK(s.at_n(0).real() == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(s.at_n(1).real() == doctest::Approx(-1.0).epsilon(1e-15)); // omega_1 = 1
    // real, negative, even in n, decaying
    for (int n = 0; n <= 8; ++n) {
        CHECK(s.at_n(n).imag() == 0.0);
        CHECK(s.at_n(n).real() < 0.0);
        CHECK(s.at_n(-n) == s.at_n(n));
        if (n > 0) CHECK(std::abs(s.at_n(n)) < std::abs(s.at_n(n - 1)));
    }
    CHECK_THROWS_AS(cavity_bare(1.0, make_grid(1.0, Statistics::fermionic, 4)), statistics_error);
}

TEST_CASE("cavity_bare_tau limits and KMS") {
    // zero-temperature limit: n_th underflows to 0
    CHECK(cavity_bare_tau(1.0, 1e4, 1.0) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-15));
    const double wd = 0.9, beta = 3.0;
    const double nth = bose_occupation(beta, wd);
    CHECK(cavity_bare_tau(wd, beta, 0.0) == doctest::Approx(-(2 * nth + 1)).epsilon(1e-14));
    for (double tau : {0.4, 1.1, 2.7})
        CHECK(cavity_bare_tau(wd, beta, tau - beta) ==
              doctest::Approx(cavity_bare_tau(wd, beta, tau)).epsilon(1e-13));
    CHECK_THROWS_AS(cavity_bare_tau(wd, beta, 3.5), domain_error);
    CHECK_THROWS_AS(cavity_bare_tau(wd, beta, -3.5), domain_error);
}

TEST_CASE("oscillator_bare equals the cavity closed form") {
    const auto g = make_grid(5.0, Statistics::bosonic, 16);
    const auto s = oscillator_bare(0.8, g);
    CHECK(s.at_n(0).real() == doctest::Approx(-2.5).epsilon(1e-15));
    const auto c = cavity_bare(0.8, g);
    for (int i = 0; i < g.size(); ++i) CHECK(s.values[i] == c.values[i]);
    const auto g2 = make_grid(2 * pi, Statistics::bosonic, 4);
    CHECK(oscillator_bare(1.0, g2).at_n(1).real() == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("flat_bath_self_energy modes") {
    const auto g = make_grid(5.0, Statistics::bosonic, 8);
    DetectorSpec det;
    det.omega_d = 1.0;
    det.bath = FlatBath{0.1, 0.0};
    const auto paper = flat_bath_self_energy(det, g, FlatBathMode::paper_literal);
    for (const auto& v : paper.values) CHECK(std::abs(v - cdouble(0.0, -0.1)) < 1e-15);

    const auto sym = flat_bath_self_energy(det, g, FlatBathMode::symmetric);
    CHECK(sym.values[g.index_of(-1)] == std::conj(sym.values[g.index_of(1)]));
    CHECK(sym.values[g.index_of(0)] == cdouble(0.0, 0.0)); // delta_omega_d = 0 at omega_0

    DetectorSpec nodamp;
    nodamp.bath = FlatBath{0.0, 0.0};
    const auto zero = flat_bath_self_energy(nodamp, g, FlatBathMode::paper_literal);
    for (const auto& v : zero.values) CHECK(std::abs(v) == 0.0);
    // undamped Dyson output reduces to the bare cavity
    const auto drb = dyson_solve(cavity_bare(1.0, g), zero);
    const auto bare = cavity_bare(1.0, g);
    for (int i = 0; i < g.size(); ++i) CHECK(drb.values[i] == bare.values[i]);

    DetectorSpec disc;
    disc.bath = DiscreteBath{{{0.1, 0.9}}};
    CHECK_THROWS_AS(flat_bath_self_energy(disc, g, FlatBathMode::paper_literal), domain_error);
}

TEST_CASE("discrete_bath_self_energy") {
    const auto g = make_grid(5.0, Statistics::bosonic, 4);
    const auto one = discrete_bath_self_energy({{0.1, 1.0}}, g);
    CHECK(one.values[g.index_of(0)].real() == doctest::Approx(-0.02).epsilon(1e-15));
    const auto none = discrete_bath_self_energy({}, g);
    for (const auto& v : none.values) CHECK(std::abs(v) == 0.0);
    // two identical modes act as one with |c|^2 doubled
    const auto twice = discrete_bath_self_energy({{0.1, 1.0}, {0.1, 1.0}}, g);
    const auto dbl = discrete_bath_self_energy({{0.1 * std::sqrt(2.0), 1.0}}, g);
    for (int i = 0; i < g.size(); ++i) CHECK(std::abs(twice.values[i] - dbl.values[i]) < 1e-16);
}

TEST_CASE("dispersion of the tight-binding band") {
    LatticeSpec lat;
    lat.L = 4;
    lat.hopping = 1.0;
    lat.mu = 0.0;
    CHECK(dispersion(lat, 0) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(dispersion(lat, 1) == doctest::Approx(0.0).scale(1).epsilon(1e-15));
    for (int k = 0; k < 2; ++k)
        CHECK(dispersion(lat, k) == doctest::Approx(-dispersion(lat, k + 2)).scale(1));
    lat.boundary = Boundary::open;
    CHECK_THROWS_AS(dispersion(lat, 0), domain_error);
}

TEST_CASE("free fermion propagator") {
    const auto g = make_grid(pi, Statistics::fermionic, 6);
    const auto s = free_fermion_propagator(0.0, g);
    CHECK(std::abs(s.at_n(1) - cdouble(0.0, -1.0)) < 1e-15); // 1/(i*1) = -i
    for (int n = 1; n <= 6; ++n) {
        CHECK(std::abs(s.at_n(1 - n) - std::conj(s.at_n(n))) < 1e-16);
        CHECK(std::abs(s.at_n(n)) <= 1.0 / std::abs(g.frequency(n)) + 1e-16);
    }
    CHECK_THROWS_AS(free_fermion_propagator(0.0, make_grid(1.0, Statistics::bosonic, 4)),
                    statistics_error);
}

TEST_CASE("density_bubble basic structure") {
    LatticeSpec lat;
    lat.L = 4;
    lat.hopping = 1.0;
    lat.mu = 0.0;
    const double beta = 5.0;
    const auto g = make_grid(beta, Statistics::bosonic, 16);
    const auto q0 = density_bubble(lat, 0, g, beta);
    for (int n = 1; n <= 16; ++n) {
        CHECK(std::abs(q0.at_n(n)) == 0.0);
        CHECK(std::abs(q0.at_n(-n)) == 0.0);
    }
    // q=0 static value is the number fluctuation -beta sum f(1-f)
    double fluct = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double f = fermi_function(beta, dispersion(lat, k));
        fluct += f * (1 - f);
    }
    CHECK(q0.at_n(0).real() == doctest::Approx(-beta * fluct).epsilon(1e-14));

    // empty band: mu far below the band bottom
    LatticeSpec empty = lat;
    empty.mu = -100.0;
    const auto vac = density_bubble(empty, 2, g, beta);
    for (const auto& v : vac.values) CHECK(std::abs(v) < 1e-200);

    // static value real and non-positive at every q
    for (int q = 0; q < 4; ++q) {
        const auto b = density_bubble(lat, q, g, beta);
        CHECK(std::abs(b.at_n(0).imag()) < 1e-16);
        CHECK(b.at_n(0).real() <= 1e-16);
    }

    // spinhalf doubles every term
    LatticeSpec half = lat;
    half.spin = Spin::spinhalf;
    const auto b1 = density_bubble(lat, 1, g, beta);
    const auto b2 = density_bubble(half, 1, g, beta);
    for (int i = 0; i < g.size(); ++i) CHECK(std::abs(b2.values[i] - 2.0 * b1.values[i]) < 1e-15);
}

TEST_CASE("density_bubble against the internal-frequency-sum oracle") {
    LatticeSpec lat;
    lat.L = 4;
    lat.hopping = 1.0;
    lat.mu = 0.0;
    const double beta = 5.0;
    const auto g = make_grid(beta, Statistics::bosonic, 2);
    const auto b = density_bubble(lat, 2, g, beta);
    const cdouble oracle = bubble_internal_sum(lat, 2, 1, beta);
    CHECK(std::abs(b.at_n(1) - oracle) < 1e-6);
    // frozen regression value for (L=4, t=1, mu=0, beta=5, q=2, n=1)
    CHECK(b.at_n(1).real() == doctest::Approx(-0.455043599052351).epsilon(1e-13));
    CHECK(std::abs(b.at_n(1).imag()) < 1e-15);
}

TEST_CASE("density_bubble high-frequency decay bound") {
    LatticeSpec lat;
    lat.L = 4;
    lat.hopping = 1.0;
    lat.mu = 0.0;
    const double beta = 5.0;
    const int N = 64;
    const auto g = make_grid(beta, Statistics::bosonic, N);
    const double K = 8.0; // fitted once on this lattice family and fixed
    for (int q = 0; q < 4; ++q) {
        const auto b = density_bubble(lat, q, g, beta);
        for (int n = N / 2; n <= N; ++n) {
            const double w = g.frequency(n);
            CHECK(std::abs(b.at_n(n)) <= K / (w * w));
        }
    }
}

TEST_CASE("tau_to_freq consistency with cavity_bare for three parameter pairs") {
    for (const auto [wd, beta] : {std::pair{1.0, 5.0}, {0.7, 3.0}, {2.0, 8.0}}) {
        const int mesh = 2048;
        const auto grid = make_grid(beta, Statistics::bosonic, 64);
        const auto s = sample_uniform(
            [wd_ = wd, b_ = beta](double t) { return cdouble(cavity_bare_tau(wd_, b_, t), 0); },
            beta, mesh, Statistics::bosonic);
        const auto got = tau_to_freq(s, grid);
        const auto exact = cavity_bare(wd, grid);
        const double tol = wd * beta * beta / (3.0 * mesh * mesh) + 1e-9;
        for (int i = 0; i < grid.size(); ++i)
            CHECK(std::abs(got.values[i] - exact.values[i]) < tol);
    }
}
