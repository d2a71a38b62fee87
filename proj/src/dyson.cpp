#include "qsread/dyson.hpp"

#include <cmath>

namespace qsread {

namespace {

void require_same_grid(const MatsubaraGrid& a, const MatsubaraGrid& b, const char* who) {
    if (!(a == b)) throw domain_error(std::string(who) + ": series do not share one grid");
}

// full = bare / (1 - bare * insertion), shared by all scenario compositions
CorrelatorSeries resum(const CorrelatorSeries& bare, const std::vector<cdouble>& insertion,
                       double pole_guard, const char* who) {
    CorrelatorSeries out(bare.grid, bare.label);
    out.operator_statistics = bare.operator_statistics;
    out.conj_symmetric = bare.conj_symmetric;
    for (int i = 0; i < bare.size(); ++i) {
        const cdouble den = 1.0 - bare.values[i] * insertion[i];
        if (std::abs(den) <= pole_guard)
            throw pole_error(std::string(who) + ": resummation within pole guard at n=" +
                             std::to_string(bare.grid.n_of(i)));
        out.values[i] = bare.values[i] / den;
    }
    return out;
}

} // namespace

CorrelatorSeries dyson_solve(const CorrelatorSeries& bare, const SelfEnergy& sigma,
                             double pole_guard) {
    require_same_grid(bare.grid, sigma.grid, "dyson_solve");
    return resum(bare, sigma.values, pole_guard, "dyson_solve");
}

CorrelatorSeries detector_with_bath(const DetectorSpec& detector, const MatsubaraGrid& grid,
                                    FlatBathMode mode) {
    detector.validate();
    SelfEnergy sigma(grid);
    bool symmetric = true;
    if (std::holds_alternative<FlatBath>(detector.bath)) {
        sigma = flat_bath_self_energy(detector, grid, mode);
        symmetric = mode == FlatBathMode::symmetric;
    } else {
        sigma = discrete_bath_self_energy(std::get<DiscreteBath>(detector.bath).modes, grid);
    }
    CorrelatorSeries out = dyson_solve(cavity_bare(detector.omega_d, grid), sigma);
    out.label = "D_RB";
    out.conj_symmetric = symmetric;
    return out;
}

CorrelatorSeries detector_full_oscillator(const CorrelatorSeries& D_RB,
                                          const CorrelatorSeries& C_S0, double lambda,
                                          double pole_guard) {
    require_same_grid(D_RB.grid, C_S0.grid, "detector_full_oscillator");
    std::vector<cdouble> ins(D_RB.size());
    for (int i = 0; i < D_RB.size(); ++i) ins[i] = lambda * lambda * C_S0.values[i];
    CorrelatorSeries out = resum(D_RB, ins, pole_guard, "detector_full_oscillator");
    out.label = "D_R";
    out.conj_symmetric = D_RB.conj_symmetric && C_S0.conj_symmetric;
    return out;
}

CorrelatorSeries simulator_full(const CorrelatorSeries& C_S0, const CorrelatorSeries& D_RB,
                                double lambda, double pole_guard) {
    require_same_grid(C_S0.grid, D_RB.grid, "simulator_full");
    std::vector<cdouble> ins(C_S0.size());
    for (int i = 0; i < C_S0.size(); ++i) ins[i] = lambda * lambda * D_RB.values[i];
    CorrelatorSeries out = resum(C_S0, ins, pole_guard, "simulator_full");
    out.label = "C_S";
    out.conj_symmetric = D_RB.conj_symmetric && C_S0.conj_symmetric;
    return out;
}

CorrelatorSeries detector_full_fermion(const CorrelatorSeries& D_RB,
                                       const CorrelatorSeries& C_SL_approx, double lambda,
                                       double pole_guard) {
    if (C_SL_approx.operator_statistics != Statistics::bosonic)
        throw statistics_error("detector_full_fermion: C_SL must be bosonic (density pair)");
    require_same_grid(D_RB.grid, C_SL_approx.grid, "detector_full_fermion");
    std::vector<cdouble> ins(D_RB.size());
    for (int i = 0; i < D_RB.size(); ++i) ins[i] = lambda * lambda * C_SL_approx.values[i];
    CorrelatorSeries out = resum(D_RB, ins, pole_guard, "detector_full_fermion");
    out.label = "D_R";
    out.conj_symmetric = D_RB.conj_symmetric && C_SL_approx.conj_symmetric;
    return out;
}

CorrelatorSeries extract(const CorrelatorSeries& D_RB, const CorrelatorSeries& D_R,
                         double lambda) {
    require_same_grid(D_RB.grid, D_R.grid, "extract");
    if (lambda == 0.0) throw extraction_error("extract: undefined at lambda = 0");
    CorrelatorSeries out(D_RB.grid, "extracted");
    out.conj_symmetric = D_RB.conj_symmetric && D_R.conj_symmetric;
    const double l2 = lambda * lambda;
    for (int i = 0; i < D_RB.size(); ++i) {
        if (std::abs(D_RB.values[i]) < 1e-300 || std::abs(D_R.values[i]) < 1e-300)
            throw extraction_error("extract: zero-magnitude correlator at n=" +
                                   std::to_string(D_RB.grid.n_of(i)));
        out.values[i] = (1.0 / D_RB.values[i] - 1.0 / D_R.values[i]) / l2;
    }
    return out;
}

} // namespace qsread
