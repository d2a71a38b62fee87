#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "qsread/freq_grid.hpp"

namespace qsread {

// ---------- specs ----------

struct FlatBath {
    double kappa = 0.0;         // bandwidth J(w) = kappa
    double delta_omega_d = 0.0; // Cauchy principal-value shift
};

struct BathMode {
    double c = 0.0;     // coupling coefficient
    double omega = 0.0; // mode frequency, > 0
};

struct DiscreteBath {
    std::vector<BathMode> modes;
};

struct DetectorSpec {
    double omega_d = 1.0; // cavity frequency, > 0
    std::variant<FlatBath, DiscreteBath> bath = FlatBath{};
    void validate() const;
};

struct OscillatorSpec {
    double omega_s = 1.0; // oscillator frequency, > 0
    void validate() const;
};

enum class Spin { spinless, spinhalf };
enum class Boundary { periodic, open };

struct LatticeSpec {
    int L = 2;          // site count
    double hopping = 1.0;
    double mu = 0.0;    // chemical potential (inside the dispersion)
    Spin spin = Spin::spinless;
    int probe_site = 1; // 1-based index R0
    Boundary boundary = Boundary::periodic;
    void validate() const;
};

struct CouplingSpec {
    double lambda = 0.0; // simulator-detector coupling, 0 permitted
    void validate() const;
};

enum class FlatBathMode { paper_literal, symmetric };

/// Self-energy insertion on a grid, composable into Dyson equations.
struct SelfEnergy {
    MatsubaraGrid grid;
    std::vector<cdouble> values;
    explicit SelfEnergy(MatsubaraGrid g) : grid(std::move(g)), values(grid.size(), cdouble{}) {}
};

// ---------- closed forms ----------

/// D_R0(i w_n) = 2 w_d / ((i w_n)^2 - w_d^2) on a bosonic grid.
CorrelatorSeries cavity_bare(double omega_d, const MatsubaraGrid& grid);

/// Bare cavity correlator in imaginary time,
/// -(e^{-w_d tau}(n_th + 1) + e^{w_d tau} n_th) for tau > 0 and the KMS mirror
/// for tau < 0, with n_th = 1/(e^{beta w_d} - 1). tau must lie in (-beta, beta].
double cavity_bare_tau(double omega_d, double beta, double tau);

/// C_S0 of the oscillator quadrature; same closed form as cavity_bare.
CorrelatorSeries oscillator_bare(double omega_s, const MatsubaraGrid& grid);

/// Flat-spectrum bath insertion. paper_literal: delta_w_d - i kappa at every n
/// (reproduces the printed closed form, breaks conjugate symmetry).
/// symmetric: delta_w_d - i kappa sign(w_n), real at w_0 = 0.
SelfEnergy flat_bath_self_energy(const DetectorSpec& detector, const MatsubaraGrid& grid,
                                 FlatBathMode mode);

/// Sum_i |c_i|^2 2 w_i / ((i w_n)^2 - w_i^2).
SelfEnergy discrete_bath_self_energy(const std::vector<BathMode>& modes,
                                     const MatsubaraGrid& grid);

/// 1D tight-binding band e_k = -2 t cos(2 pi k / L) - mu (periodic boundary only).
double dispersion(const LatticeSpec& lattice, int k_index);

/// G_0(k, i w_n) = 1 / (i w_n - e_k) on a fermionic grid.
CorrelatorSeries free_fermion_propagator(double epsilon_k, const MatsubaraGrid& grid);

/// Particle-hole bubble of the free gas at momentum transfer q:
///   sum_{k,sigma} [f(e_k) - f(e_{k+q})] / (i w_n + e_k - e_{k+q}),
/// degenerate terms (e_k = e_{k+q}) at n = 0 contribute -beta f (1 - f) per spin.
CorrelatorSeries density_bubble(const LatticeSpec& lattice, int q_index,
                                const MatsubaraGrid& grid, double beta);

/// Probe-site density correlator of the free gas: (1/L^2) sum_q bubble(q).
CorrelatorSeries site_density_correlator(const LatticeSpec& lattice,
                                         const MatsubaraGrid& grid, double beta);

/// Bose occupation (e^{beta w} - 1)^{-1}.
double bose_occupation(double beta, double omega);

/// Fermi function (e^{beta e} + 1)^{-1}.
double fermi_function(double beta, double epsilon);

} // namespace qsread
