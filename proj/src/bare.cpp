#include "qsread/bare.hpp"

#include <cmath>
#include <numbers>

namespace qsread {

namespace {
constexpr double pi = std::numbers::pi;

void require_bosonic(const MatsubaraGrid& g, const char* who) {
    if (g.statistics() != Statistics::bosonic)
        throw statistics_error(std::string(who) + ": requires a bosonic grid");
}
} // namespace

void DetectorSpec::validate() const {
    if (!(omega_d > 0.0)) throw domain_error("DetectorSpec: omega_d must be positive");
    if (const auto* fb = std::get_if<FlatBath>(&bath)) {
        if (fb->kappa < 0.0) throw domain_error("DetectorSpec: kappa must be >= 0");
    } else {
        for (const auto& m : std::get<DiscreteBath>(bath).modes)
            if (!(m.omega > 0.0)) throw domain_error("DetectorSpec: bath mode frequencies must be positive");
    }
}

void OscillatorSpec::validate() const {
    if (!(omega_s > 0.0)) throw domain_error("OscillatorSpec: omega_s must be positive");
}

void LatticeSpec::validate() const {
    if (L < 2) throw domain_error("LatticeSpec: L must be >= 2");
    if (probe_site < 1 || probe_site > L)
        throw domain_error("LatticeSpec: probe_site must lie in [1, L]");
}

void CouplingSpec::validate() const {
    if (!std::isfinite(lambda)) throw domain_error("CouplingSpec: lambda must be finite");
}

double bose_occupation(double beta, double omega) {
    return 1.0 / std::expm1(beta * omega);
}

double fermi_function(double beta, double epsilon) {
    // stable for both signs of epsilon
    if (epsilon >= 0.0) {
        const double e = std::exp(-beta * epsilon);
        return e / (1.0 + e);
    }
    return 1.0 / (std::exp(beta * epsilon) + 1.0);
}

CorrelatorSeries cavity_bare(double omega_d, const MatsubaraGrid& grid) {
    require_bosonic(grid, "cavity_bare");
    if (!(omega_d > 0.0)) throw domain_error("cavity_bare: omega_d must be positive");
    CorrelatorSeries out(grid, "D_R0");
    for (int i = 0; i < grid.size(); ++i) {
        const double w = grid.frequencies()[i];
        // (i w)^2 - w_d^2 = -(w^2 + w_d^2), negative for all real w
        const double den = -(w * w + omega_d * omega_d);
        if (std::abs(den) < 1e-300)
            throw pole_error("cavity_bare: pole guard tripped at n=" + std::to_string(grid.n_of(i)));
        out.values[i] = 2.0 * omega_d / den;
    }
    return out;
}

double cavity_bare_tau(double omega_d, double beta, double tau) {
    if (!(tau > -beta && tau <= beta))
        throw domain_error("cavity_bare_tau: tau must lie in (-beta, beta]");
    const double nth = bose_occupation(beta, omega_d);
    if (tau >= 0.0)
        return -(std::exp(-omega_d * tau) * (nth + 1.0) + std::exp(omega_d * tau) * nth);
    return -(std::exp(-omega_d * tau) * nth + std::exp(omega_d * tau) * (nth + 1.0));
}

CorrelatorSeries oscillator_bare(double omega_s, const MatsubaraGrid& grid) {
    CorrelatorSeries out = cavity_bare(omega_s, grid);
    out.label = "C_S0";
    return out;
}

SelfEnergy flat_bath_self_energy(const DetectorSpec& detector, const MatsubaraGrid& grid,
                                 FlatBathMode mode) {
    require_bosonic(grid, "flat_bath_self_energy");
    const auto* fb = std::get_if<FlatBath>(&detector.bath);
    if (!fb) throw domain_error("flat_bath_self_energy: detector does not carry a flat bath");
    SelfEnergy sig(grid);
    for (int i = 0; i < grid.size(); ++i) {
        const double w = grid.frequencies()[i];
        double s = 1.0;
        if (mode == FlatBathMode::symmetric) s = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        sig.values[i] = cdouble(fb->delta_omega_d, -fb->kappa * s);
    }
    return sig;
}

SelfEnergy discrete_bath_self_energy(const std::vector<BathMode>& modes,
                                     const MatsubaraGrid& grid) {
    require_bosonic(grid, "discrete_bath_self_energy");
    for (const auto& m : modes)
        if (!(m.omega > 0.0))
            throw domain_error("discrete_bath_self_energy: mode frequencies must be positive");
    SelfEnergy sig(grid);
    for (int i = 0; i < grid.size(); ++i) {
        const double w = grid.frequencies()[i];
        cdouble acc = 0.0;
        for (const auto& m : modes)
            acc += m.c * m.c * 2.0 * m.omega / (-(w * w) - m.omega * m.omega);
        sig.values[i] = acc;
    }
    return sig;
}

double dispersion(const LatticeSpec& lattice, int k_index) {
    if (lattice.boundary != Boundary::periodic)
        throw domain_error("dispersion: open chains have no momentum-space dispersion "
                           "(handled by the ED oracle in real space)");
    if (k_index < 0 || k_index >= lattice.L)
        throw domain_error("dispersion: k index outside [0, L)");
    return -2.0 * lattice.hopping * std::cos(2.0 * pi * k_index / lattice.L) - lattice.mu;
}

CorrelatorSeries free_fermion_propagator(double epsilon_k, const MatsubaraGrid& grid) {
    if (grid.statistics() != Statistics::fermionic)
        throw statistics_error("free_fermion_propagator: requires a fermionic grid");
    CorrelatorSeries out(grid, "G_0");
    for (int i = 0; i < grid.size(); ++i)
        out.values[i] = 1.0 / (cdouble(0.0, grid.frequencies()[i]) - epsilon_k);
    return out;
}

CorrelatorSeries density_bubble(const LatticeSpec& lattice, int q_index,
                                const MatsubaraGrid& grid, double beta) {
    require_bosonic(grid, "density_bubble");
    lattice.validate();
    if (lattice.boundary != Boundary::periodic)
        throw domain_error("density_bubble: requires a periodic lattice");
    const int L = lattice.L;
    const double spin_factor = lattice.spin == Spin::spinhalf ? 2.0 : 1.0;
    CorrelatorSeries out(grid, "C_S0_bubble(q=" + std::to_string(q_index) + ")");
    for (int i = 0; i < grid.size(); ++i) {
        const double w = grid.frequencies()[i];
        const bool static_point = std::abs(w) < 1e-300;
        cdouble acc = 0.0;
        for (int k = 0; k < L; ++k) {
            const double ek = dispersion(lattice, k);
            const double ekq = dispersion(lattice, (k + q_index) % L);
            if (std::abs(ek - ekq) < 1e-12) {
                if (static_point) {
                    const double f = fermi_function(beta, ek);
                    acc += -beta * f * (1.0 - f);
                }
                // degenerate terms vanish for n != 0
            } else {
                acc += (fermi_function(beta, ek) - fermi_function(beta, ekq)) /
                       (cdouble(0.0, w) + ek - ekq);
            }
        }
        out.values[i] = spin_factor * acc;
    }
    return out;
}

CorrelatorSeries site_density_correlator(const LatticeSpec& lattice,
                                         const MatsubaraGrid& grid, double beta) {
    CorrelatorSeries out(grid, "C_S0_site");
    const int L = lattice.L;
    for (int q = 0; q < L; ++q) {
        const CorrelatorSeries b = density_bubble(lattice, q, grid, beta);
        for (int i = 0; i < grid.size(); ++i) out.values[i] += b.values[i] / double(L * L);
    }
    return out;
}

} // namespace qsread
