#pragma once

#include <optional>

#include "qsread/bare.hpp"

namespace qsread {

/// The correlators of one readout scenario on a shared grid.
struct DressedSet {
    std::optional<CorrelatorSeries> D_R0;
    std::optional<CorrelatorSeries> D_RB;
    std::optional<CorrelatorSeries> D_R;
    std::optional<CorrelatorSeries> C_S0;
    std::optional<CorrelatorSeries> C_S; // oscillator scenario only
    std::map<std::string, std::string> provenance;
};

/// Pointwise Dyson resummation: full(n) = bare(n) / (1 - bare(n) sigma(n)).
/// Throws pole_error naming the offending n when |1 - bare sigma| <= guard.
CorrelatorSeries dyson_solve(const CorrelatorSeries& bare, const SelfEnergy& sigma,
                             double pole_guard = 1e-12);

/// D_RB: cavity dressed by its bath (flat closed form or discrete mode sum).
CorrelatorSeries detector_with_bath(const DetectorSpec& detector, const MatsubaraGrid& grid,
                                    FlatBathMode mode = FlatBathMode::paper_literal);

/// D_R = (1 - |lambda|^2 D_RB C_S0)^{-1} D_RB.
CorrelatorSeries detector_full_oscillator(const CorrelatorSeries& D_RB,
                                          const CorrelatorSeries& C_S0, double lambda,
                                          double pole_guard = 1e-12);

/// C_S = (1 - |lambda|^2 C_S0 D_RB)^{-1} C_S0.
CorrelatorSeries simulator_full(const CorrelatorSeries& C_S0, const CorrelatorSeries& D_RB,
                                double lambda, double pole_guard = 1e-12);

/// D_R = (1 - |lambda|^2 D_RB C_SL)^{-1} D_RB with the lowest-order bubble as C_SL.
CorrelatorSeries detector_full_fermion(const CorrelatorSeries& D_RB,
                                       const CorrelatorSeries& C_SL_approx, double lambda,
                                       double pole_guard = 1e-12);

/// Readout extraction: (D_RB^{-1} - D_R^{-1}) / |lambda|^2, pointwise.
CorrelatorSeries extract(const CorrelatorSeries& D_RB, const CorrelatorSeries& D_R,
                         double lambda);

} // namespace qsread
