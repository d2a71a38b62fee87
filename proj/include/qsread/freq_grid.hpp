#pragma once

#include <complex>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qsread/errors.hpp"

namespace qsread {

using cdouble = std::complex<double>;

enum class Statistics { bosonic, fermionic };

std::string to_string(Statistics s);
Statistics statistics_from_string(const std::string& s);

/// Symmetric Matsubara frequency grid.
///
/// Bosonic: indices n in [-N, N], omega_n = 2 pi n / beta (includes omega_0 = 0).
/// Fermionic: indices n in [-N+1, N], omega_n = pi (2n - 1) / beta (no zero frequency).
/// Frequencies are strictly increasing in n and the grid maps onto itself under
/// omega -> -omega (n -> -n bosonic, n -> 1-n fermionic).
class MatsubaraGrid {
  public:
    MatsubaraGrid(double beta, Statistics statistics, int N);

    double beta() const { return beta_; }
    Statistics statistics() const { return stat_; }
    int N() const { return N_; }
    int size() const { return static_cast<int>(freqs_.size()); }
    int n_min() const { return stat_ == Statistics::bosonic ? -N_ : 1 - N_; }
    int n_max() const { return N_; }

    /// Frequency by Matsubara index n.
    double frequency(int n) const { return freqs_[index_of(n)]; }
    /// Storage index of Matsubara index n.
    int index_of(int n) const;
    /// Matsubara index of storage slot i.
    int n_of(int i) const { return n_min() + i; }

    std::span<const double> frequencies() const { return freqs_; }

    bool operator==(const MatsubaraGrid& o) const {
        return beta_ == o.beta_ && stat_ == o.stat_ && N_ == o.N_;
    }

  private:
    double beta_;
    Statistics stat_;
    int N_;
    std::vector<double> freqs_;
};

/// make_grid(beta, statistics, N): factory enforcing beta > 0, N >= 1.
MatsubaraGrid make_grid(double beta, Statistics statistics, int N);

/// Two-point correlator tabulated on a Matsubara grid.
struct CorrelatorSeries {
    MatsubaraGrid grid;
    std::vector<cdouble> values; // one per storage index
    std::string label;
    Statistics operator_statistics;
    bool conj_symmetric = true; // Hermitian-pair symmetry C(-w_n) = conj(C(w_n))
    std::map<std::string, std::string> meta;

    CorrelatorSeries(MatsubaraGrid g, std::string lbl = "");

    cdouble at_n(int n) const { return values[grid.index_of(n)]; }
    cdouble& at_n(int n) { return values[grid.index_of(n)]; }
    int size() const { return grid.size(); }
};

/// Correlator sampled at imaginary times in (-beta, beta].
struct TauSeries {
    double beta;
    std::vector<double> tau_points;
    std::vector<cdouble> values;
    Statistics operator_statistics;
};

/// Samples f on the uniform mesh tau_j = j beta / mesh, j = 0..mesh (endpoints are
/// the one-sided limits C(0+), C(beta-)).
TauSeries sample_uniform(const std::function<cdouble(double)>& f, double beta,
                         int mesh, Statistics statistics);

/// Composite-trapezoid transform of a uniformly sampled TauSeries to the grid:
/// C(i w_n) = int_0^beta dtau e^{i w_n tau} C(tau).
/// Requires at least 4 mesh points per period of the highest grid frequency.
CorrelatorSeries tau_to_freq(const TauSeries& series, const MatsubaraGrid& grid);

struct FreqToTauOptions {
    bool tail_correction = true; // fit a/(iw) + b/(iw)^2 on the outer 10% and resum analytically
    bool allow_kms = false;      // map tau in (-beta, 0) through the KMS relation
};

/// Truncated Matsubara sum (1/beta) sum_n e^{-i w_n tau} C(i w_n), optionally
/// tail-corrected. tau must lie in (0, beta); endpoints need tail_correction,
/// negative tau needs allow_kms.
cdouble freq_to_tau_at(const CorrelatorSeries& series, double tau,
                       const FreqToTauOptions& opt = {});

TauSeries freq_to_tau(const CorrelatorSeries& series, std::span<const double> taus,
                      const FreqToTauOptions& opt = {});

/// KMS extension to tau in (-beta, 0): +C(tau + beta) bosonic, -C(tau + beta) fermionic.
/// The shifted time is looked up in the series (linear interpolation between
/// stored points when it does not coincide with one).
cdouble kms_extend(const TauSeries& series, double tau);

} // namespace qsread
