#include "qsread/freq_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qsread/parallel.hpp"

namespace qsread {

namespace {
constexpr double pi = std::numbers::pi;
}

std::string to_string(Statistics s) {
    return s == Statistics::bosonic ? "bosonic" : "fermionic";
}

Statistics statistics_from_string(const std::string& s) {
    if (s == "bosonic") return Statistics::bosonic;
    if (s == "fermionic") return Statistics::fermionic;
    throw domain_error("unknown statistics '" + s + "'");
}

MatsubaraGrid::MatsubaraGrid(double beta, Statistics statistics, int N)
    : beta_(beta), stat_(statistics), N_(N) {
    if (!(beta > 0.0)) throw domain_error("MatsubaraGrid: beta must be positive");
    if (N < 1) throw domain_error("MatsubaraGrid: N must be >= 1");
    freqs_.reserve(stat_ == Statistics::bosonic ? 2 * N + 1 : 2 * N);
    for (int n = n_min(); n <= n_max(); ++n) {
        double w = stat_ == Statistics::bosonic ? 2.0 * pi * n / beta_
                                                : pi * (2.0 * n - 1.0) / beta_;
        freqs_.push_back(w);
    }
}

int MatsubaraGrid::index_of(int n) const {
    if (n < n_min() || n > n_max())
        throw domain_error("MatsubaraGrid: index " + std::to_string(n) + " outside grid");
    return n - n_min();
}

MatsubaraGrid make_grid(double beta, Statistics statistics, int N) {
    return MatsubaraGrid(beta, statistics, N);
}

CorrelatorSeries::CorrelatorSeries(MatsubaraGrid g, std::string lbl)
    : grid(std::move(g)), values(grid.size(), cdouble{0.0, 0.0}), label(std::move(lbl)),
      operator_statistics(grid.statistics()) {}

TauSeries sample_uniform(const std::function<cdouble(double)>& f, double beta,
                         int mesh, Statistics statistics) {
    if (!(beta > 0.0)) throw domain_error("sample_uniform: beta must be positive");
    if (mesh < 2) throw domain_error("sample_uniform: mesh must be >= 2");
    TauSeries out;
    out.beta = beta;
    out.operator_statistics = statistics;
    out.tau_points.resize(mesh + 1);
    out.values.resize(mesh + 1);
    for (int j = 0; j <= mesh; ++j) {
        out.tau_points[j] = beta * j / mesh;
        out.values[j] = f(out.tau_points[j]);
    }
    return out;
}

namespace {

// Checks the series is a uniform mesh over [0, beta] and returns the panel count.
int uniform_mesh_panels(const TauSeries& s) {
    const std::size_t m = s.tau_points.size();
    if (m < 3) throw resolution_error("tau_to_freq: mesh has fewer than 3 points");
    const double tol = 1e-9 * s.beta;
    if (std::abs(s.tau_points.front()) > tol || std::abs(s.tau_points.back() - s.beta) > tol)
        throw domain_error("tau_to_freq: mesh must span [0, beta]");
    const double h = s.beta / static_cast<double>(m - 1);
    for (std::size_t j = 0; j < m; ++j)
        if (std::abs(s.tau_points[j] - h * static_cast<double>(j)) > tol)
            throw domain_error("tau_to_freq: mesh is not uniform");
    return static_cast<int>(m - 1);
}

} // namespace

CorrelatorSeries tau_to_freq(const TauSeries& series, const MatsubaraGrid& grid) {
    if (series.operator_statistics != grid.statistics())
        throw statistics_error("tau_to_freq: series statistics do not match grid");
    if (std::abs(series.beta - grid.beta()) > 1e-12 * grid.beta())
        throw domain_error("tau_to_freq: series beta does not match grid beta");
    const int M = uniform_mesh_panels(series);
    const double h = grid.beta() / M;
    const double w_top = std::abs(grid.frequencies().back());
    // 4 points per period of the fastest mode: 2 pi / (w h) >= 4
    if (w_top * h > 0.5 * pi)
        throw resolution_error("tau_to_freq: mesh too coarse for N=" + std::to_string(grid.N()) +
                               " (need >= 4 points per period of the highest frequency)");

    CorrelatorSeries out(grid);
    parallel_for(grid.size(), [&](std::size_t i) {
        const double w = grid.frequencies()[static_cast<int>(i)];
        cdouble acc = 0.5 * (series.values.front() + series.values.back() *
                                 std::exp(cdouble(0.0, w * grid.beta())));
        for (int j = 1; j < M; ++j)
            acc += series.values[j] * std::exp(cdouble(0.0, w * series.tau_points[j]));
        out.values[i] = h * acc;
    });
    out.meta["quadrature"] = "trapezoid";
    out.meta["mesh_points"] = std::to_string(M + 1);
    return out;
}

namespace {

struct TailCoeffs {
    cdouble a{0.0, 0.0}; // coefficient of 1/(i w)
    cdouble b{0.0, 0.0}; // coefficient of 1/(i w)^2
};

// Least-squares fit of value(n) ~ a/(iw) + b/(iw)^2 over the outermost 10% of
// stored frequencies on both ends (n = 0 excluded).
TailCoeffs fit_tail(const CorrelatorSeries& s) {
    const int sz = s.grid.size();
    int k = std::max(2, static_cast<int>(std::lround(0.10 * s.grid.N())));
    k = std::min(k, sz / 2);
    std::vector<int> idx;
    for (int i = 0; i < k; ++i) idx.push_back(i);
    for (int i = sz - k; i < sz; ++i) idx.push_back(i);

    cdouble a11 = 0, a12 = 0, a22 = 0, r1 = 0, r2 = 0;
    for (int i : idx) {
        const double w = s.grid.frequencies()[i];
        if (std::abs(w) < 1e-300) continue;
        const cdouble p1 = 1.0 / cdouble(0.0, w);
        const cdouble p2 = p1 * p1;
        a11 += std::conj(p1) * p1;
        a12 += std::conj(p1) * p2;
        a22 += std::conj(p2) * p2;
        r1 += std::conj(p1) * s.values[i];
        r2 += std::conj(p2) * s.values[i];
    }
    const cdouble det = a11 * a22 - a12 * std::conj(a12);
    TailCoeffs t;
    if (std::abs(det) < 1e-300) return t; // zero series; no tail
    t.a = (r1 * a22 - r2 * a12) / det;
    t.b = (a11 * r2 - std::conj(a12) * r1) / det;
    return t;
}

// Analytic full-range sums of the tail basis for 0 < tau < beta:
//   S1 = (1/beta) sum_n e^{-i w_n tau} / (i w_n)   (n = 0 excluded for bosons)
//   S2 = (1/beta) sum_n e^{-i w_n tau} / (i w_n)^2
void tail_sums(Statistics st, double beta, double tau, double& S1, double& S2) {
    if (st == Statistics::bosonic) {
        S1 = tau / beta - 0.5;
        S2 = -(beta / 12.0 - tau / 2.0 + tau * tau / (2.0 * beta));
    } else {
        S1 = -0.5;
        S2 = (2.0 * tau - beta) / 4.0;
    }
}

cdouble eval_interior(const CorrelatorSeries& s, double tau, bool tail) {
    const double beta = s.grid.beta();
    cdouble acc = 0;
    TailCoeffs t;
    if (tail) t = fit_tail(s);
    for (int i = 0; i < s.grid.size(); ++i) {
        const double w = s.grid.frequencies()[i];
        cdouble v = s.values[i];
        if (tail && std::abs(w) > 1e-300) {
            const cdouble iw = cdouble(0.0, w);
            v -= t.a / iw + t.b / (iw * iw);
        }
        acc += v * std::exp(cdouble(0.0, -w * tau));
    }
    acc /= beta;
    if (tail) {
        double S1, S2;
        tail_sums(s.grid.statistics(), beta, tau, S1, S2);
        acc += t.a * S1 + t.b * S2;
    }
    return acc;
}

} // namespace

cdouble freq_to_tau_at(const CorrelatorSeries& series, double tau, const FreqToTauOptions& opt) {
    const double beta = series.grid.beta();
    const double eps = 1e-12 * beta;
    double sign = 1.0;
    if (tau < -eps) {
        if (!opt.allow_kms)
            throw domain_error("freq_to_tau: tau outside (0, beta) without KMS extension requested");
        if (tau <= -beta + eps)
            throw domain_error("freq_to_tau: tau outside (-beta, beta]");
        tau += beta;
        if (series.grid.statistics() == Statistics::fermionic) sign = -1.0;
    }
    const bool at_endpoint = tau < eps || tau > beta - eps;
    if (tau < -eps || tau > beta + eps)
        throw domain_error("freq_to_tau: tau outside (0, beta)");
    if (at_endpoint && !opt.tail_correction)
        throw domain_error("freq_to_tau: endpoint evaluation requires the tail-correction mode");
    // Endpoints evaluate the one-sided limits C(0+), C(beta-): the analytic tail
    // sums are themselves one-sided there, so clamping tau is exact.
    tau = std::clamp(tau, 0.0, beta);
    return sign * eval_interior(series, tau, opt.tail_correction);
}

TauSeries freq_to_tau(const CorrelatorSeries& series, std::span<const double> taus,
                      const FreqToTauOptions& opt) {
    TauSeries out;
    out.beta = series.grid.beta();
    out.operator_statistics = series.operator_statistics;
    out.tau_points.assign(taus.begin(), taus.end());
    out.values.resize(taus.size());
    parallel_for(taus.size(), [&](std::size_t i) {
        out.values[i] = freq_to_tau_at(series, taus[i], opt);
    });
    return out;
}

cdouble kms_extend(const TauSeries& series, double tau) {
    const double beta = series.beta;
    if (!(tau > -beta && tau < 0.0))
        throw domain_error("kms_extend: tau must lie in (-beta, 0)");
    const double target = tau + beta;
    const double sign = series.operator_statistics == Statistics::bosonic ? 1.0 : -1.0;
    const double tol = 1e-9 * beta;
    // exact point match first
    for (std::size_t j = 0; j < series.tau_points.size(); ++j)
        if (std::abs(series.tau_points[j] - target) <= tol) return sign * series.values[j];
    // otherwise linear interpolation between bracketing stored points
    auto it = std::upper_bound(series.tau_points.begin(), series.tau_points.end(), target);
    if (it == series.tau_points.begin() || it == series.tau_points.end())
        throw domain_error("kms_extend: tau + beta outside the stored range");
    const std::size_t hi = static_cast<std::size_t>(it - series.tau_points.begin());
    const std::size_t lo = hi - 1;
    const double t0 = series.tau_points[lo], t1 = series.tau_points[hi];
    const double x = (target - t0) / (t1 - t0);
    return sign * ((1.0 - x) * series.values[lo] + x * series.values[hi]);
}

} // namespace qsread
