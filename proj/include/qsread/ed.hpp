#pragma once

#include <array>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "qsread/bare.hpp"
#include "qsread/dyson.hpp"
#include "qsread/report.hpp"

namespace qsread {

// ---------- system description ----------

struct Truncation {
    int n_max_cavity = 0;     // 0 = auto by the thermal-weight rule
    int n_max_oscillator = 0; // 0 = auto
    int n_max_bath_mode = 0;  // 0 = auto (per-mode), applied to every bath mode otherwise
    double thermal_weight_floor = 1e-12; // rule: smallest kept Boltzmann weight per mode
    long dimension_budget = 20000;
};

struct SystemSpec {
    DetectorSpec detector; // ED requires a discrete bath
    std::variant<OscillatorSpec, LatticeSpec> simulator;
    CouplingSpec coupling;
    double beta = 1.0;
    Truncation truncation;
    bool mean_subtract = true; // lattice coupling operator n_R0 - <n_R0>_0
    void validate() const;
    bool is_oscillator() const { return std::holds_alternative<OscillatorSpec>(simulator); }
};

/// Minimal n_max with e^{-beta omega n_max} / Z_mode below the weight floor.
int thermal_cutoff(double beta, double omega, double weight_floor = 1e-12);

// ---------- matrices ----------

/// Real sparse operator stored per column: cols[j] = {(row, value), ...}.
struct SparseOp {
    long dim = 0;
    std::vector<std::vector<std::pair<long, double>>> cols;

    explicit SparseOp(long d = 0) : dim(d), cols(d) {}
    void add(long row, long col, double v);
    SparseOp transposed() const;
    std::vector<double> dense() const; // column-major
};

SparseOp sparse_product(const SparseOp& a, const SparseOp& b); // a*b
SparseOp sparse_sum(const SparseOp& a, const SparseOp& b, double ca = 1.0, double cb = 1.0);

/// Tensor-product occupation basis: boson slots (dim n_max+1 each) and at most
/// one fermion slot of n_orbitals sites (dim 2^n_orbitals, site-major ordering,
/// c_i carries the parity sign of all lower orbitals).
struct TensorBasis {
    std::vector<long> slot_dims;
    int fermion_slot = -1; // index into slot_dims, -1 if none
    int n_orbitals = 0;
    long dim() const;
    long stride(int slot) const;
};

SparseOp boson_annihilate(const TensorBasis& basis, int slot);
SparseOp fermion_annihilate(const TensorBasis& basis, int orbital);

// ---------- model assembly ----------

enum class Part { full, detector_and_bath, simulator_alone };

/// Assembled Hamiltonian (dense column-major, real symmetric) plus the named
/// coupling operators in the same occupation basis:
///   "Gamma_R" = a + a^dag of the cavity (absent for simulator_alone),
///   "O_S"     = oscillator quadrature or (mean-subtracted) probe-site density.
struct Model {
    TensorBasis basis;
    std::vector<double> H; // column-major dim x dim
    std::map<std::string, SparseOp> operators;
    std::map<std::string, std::string> provenance;
    long dim() const { return basis.dim(); }
};

Model build_hamiltonian(const SystemSpec& spec, Part part = Part::full);

// ---------- spectra and Lehmann sums ----------

/// Full spectrum of one Hermitian model at inverse temperature beta, with the
/// thermally relevant eigenrows of registered operators cached for Lehmann sums.
class SpectralData {
  public:
    double beta() const { return beta_; }
    long dim() const { return dim_; }
    const std::vector<double>& energies() const { return energies_; }
    double ground_energy() const { return energies_.front(); }
    /// Z = sum_m e^{-beta E_m}.
    double partition_function() const;
    /// sum_m e^{-beta (E_m - E_0)} (ground-state-shifted Z used internally).
    double partition_shifted() const { return z_shifted_; }
    /// e^{-beta (E_m - E_0)}.
    double weight(long m) const { return weights_[m]; }
    const std::vector<long>& thermal_states() const { return thermal_; }

    bool has_operator(const std::string& name) const { return ops_.count(name) != 0; }
    /// <m|op|m'> (full matrix kept only for dim <= full_matrix_limit).
    double op_element(const std::string& name, long m, long mp) const;

    /// Discards the eigenvector matrix; no further operators can be registered.
    void release_basis();

    static constexpr long full_matrix_limit = 1024;

  private:
    friend SpectralData diagonalize(const Model&, double, double);
    friend SpectralData diagonalize_dense(std::vector<double>, long, double, double);
    friend void register_operator(SpectralData&, const Model&, const std::string&);
    friend void register_operator(SpectralData&, const std::string&, const SparseOp&);
    friend CorrelatorSeries lehmann_correlator(const SpectralData&, const std::string&,
                                               const std::string&, const MatsubaraGrid&);
    friend cdouble wick_residual(const SpectralData&, const std::string&,
                                 const std::array<double, 4>&);

    struct OpRows {
        bool symmetric = false;
        std::vector<double> rows;   // |thermal| x dim, row-major: <m|op|.>
        std::vector<double> rows_t; // <.|op|m> as rows, filled for nonsymmetric ops
        std::vector<double> full;   // dense eigenbasis matrix for small systems
    };

    double beta_ = 0.0;
    long dim_ = 0;
    std::vector<double> energies_;
    std::vector<double> weights_; // e^{-beta (E - E0)}
    double z_shifted_ = 0.0;
    std::vector<long> thermal_;
    std::vector<double> eigvec_; // column-major, empty after release_basis()
    std::map<std::string, OpRows> ops_;
};

/// Dense real-symmetric diagonalization (LAPACK dsyevd) of the model Hamiltonian.
/// thermal_floor sets which states count as thermally occupied in Lehmann sums.
SpectralData diagonalize(const Model& model, double beta, double thermal_floor = 1e-20);

/// Same entry point for a raw column-major symmetric matrix (used by tests).
/// Throws on non-Hermitian input beyond 1e-10.
SpectralData diagonalize_dense(std::vector<double> H, long dim, double beta,
                               double thermal_floor = 1e-20);

/// Transforms model.operators[name] to the eigenbasis and caches its thermal rows.
void register_operator(SpectralData& data, const Model& model, const std::string& name);
void register_operator(SpectralData& data, const std::string& name, const SparseOp& op);

/// Lehmann-representation Matsubara correlator of two registered operators:
/// C(i w_n) = (1/Z) sum_{m,m'} A_mm' B_m'm (e^{-beta E_m} - xi e^{-beta E_m'})
///            / (i w_n - (E_m' - E_m)),
/// xi = +1 bosonic / -1 fermionic; degenerate bosonic n = 0 terms take the
/// analytic limit -(beta/Z) e^{-beta E_m} A_mm' B_m'm.
CorrelatorSeries lehmann_correlator(const SpectralData& data, const std::string& opA,
                                    const std::string& opB, const MatsubaraGrid& grid);

/// <T O(t1)O(t2)O(t3)O(t4)> minus its three Wick pairings, all by Lehmann sums
/// in the tau domain. Times must be distinct and lie in (0, beta); O must be
/// registered mean-free.
cdouble wick_residual(const SpectralData& data, const std::string& op,
                      const std::array<double, 4>& taus);

// ---------- readout experiment ----------

struct ReadoutResult {
    DressedSet set;
    CorrelatorSeries extracted;
    ComparisonReport extraction_report; // extracted vs ED C_S0
};

/// Computes D_RB (lambda = 0 subsystem), D_R (full), C_S0 (simulator alone),
/// C_S (oscillator scenario), applies the extraction formula and reports the
/// per-frequency deviation of the extracted series from C_S0.
ReadoutResult readout_experiment(const SystemSpec& spec, const MatsubaraGrid& grid,
                                 double report_tolerance = 1e-6);

/// Truncation monotonicity check: recomputes the readout with each boson cutoff
/// raised by `bump` and throws convergence_error if any reported correlator moves
/// by more than tolerance (relative).
void check_truncation(const SystemSpec& spec, const MatsubaraGrid& grid,
                      double tolerance, int bump = 4);

} // namespace qsread
