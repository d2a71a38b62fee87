#include "qsread/continuation.hpp"

#include <cmath>

namespace qsread {

namespace {

// minimal complex arithmetic on __float128 for the Thiele recurrences
struct qcomplex {
    __float128 re = 0, im = 0;
    qcomplex() = default;
    qcomplex(__float128 r, __float128 i) : re(r), im(i) {}
    qcomplex(cdouble z) : re(z.real()), im(z.imag()) {}
    cdouble to_double() const { return {static_cast<double>(re), static_cast<double>(im)}; }
};

qcomplex operator+(qcomplex a, qcomplex b) { return {a.re + b.re, a.im + b.im}; }
qcomplex operator-(qcomplex a, qcomplex b) { return {a.re - b.re, a.im - b.im}; }
qcomplex operator*(qcomplex a, qcomplex b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
qcomplex operator/(qcomplex a, qcomplex b) {
    const __float128 d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
__float128 qabs2(qcomplex a) { return a.re * a.re + a.im * a.im; }

} // namespace

cdouble RationalForm::eval(cdouble z) const {
    auto horner = [&](const std::vector<cdouble>& c) {
        cdouble acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
        return acc;
    };
    return horner(num) / horner(den);
}

RationalForm rational_cavity_bare(double omega_d) {
    return {{2.0 * omega_d}, {-omega_d * omega_d, 0.0, 1.0}};
}

RationalForm rational_oscillator_bare(double omega_s) { return rational_cavity_bare(omega_s); }

RationalForm rational_detector_with_bath(double omega_d, double kappa, double delta_omega_d) {
    const double wt2 = omega_d * omega_d + 2.0 * omega_d * delta_omega_d;
    return {{2.0 * omega_d}, {cdouble(-wt2, 2.0 * omega_d * kappa), 0.0, 1.0}};
}

cdouble continue_rational(const RationalForm& form, double omega, double eta) {
    if (!(eta > 0.0)) throw domain_error("continue_rational: eta must be positive");
    return form.eval(cdouble(omega, eta));
}

PadeApproximant pade_fit(const CorrelatorSeries& series, int order) {
    // positive frequencies, ascending
    std::vector<cdouble> zs, fs;
    for (int i = 0; i < series.grid.size(); ++i) {
        const double w = series.grid.frequencies()[i];
        if (w > 0.0) {
            zs.emplace_back(0.0, w);
            fs.push_back(series.values[i]);
        }
    }
    if (order < 1 || order > static_cast<int>(zs.size()))
        throw continuation_error("pade_fit: order must lie in [1, #positive frequencies]");
    for (const auto& v : fs)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw continuation_error("pade_fit: non-finite input value");

    // symmetric-mode requirement: C(-w_n) = conj(C(w_n))
    double worst = 0.0;
    for (int i = 0; i < series.grid.size(); ++i) {
        const double w = series.grid.frequencies()[i];
        if (w <= 0.0) continue;
        const int n = series.grid.n_of(i);
        const int n_neg = series.grid.statistics() == Statistics::bosonic ? -n : 1 - n;
        const cdouble a = series.values[i];
        const cdouble b = std::conj(series.at_n(n_neg));
        worst = std::max(worst, std::abs(a - b) / std::max(1e-300, std::abs(a)));
    }
    if (worst > 1e-10)
        throw continuation_error("pade_fit: input is not conjugate-symmetric (deviation " +
                                 std::to_string(worst) + "); paper-literal series must go "
                                 "through continue_rational");

    zs.resize(order);
    fs.resize(order);

    // Thiele inverse differences, g_p(z_p); truncate when the remaining residuals vanish
    // (input already interpolated exactly, e.g. constants or low-degree rationals)
    std::vector<qcomplex> g(fs.begin(), fs.end());
    std::vector<qcomplex> qz(zs.begin(), zs.end());
    std::vector<cdouble> coeff;
    coeff.push_back(g[0].to_double());
    int used = 1;
    for (int p = 1; p < order; ++p) {
        // residual scale of the remaining points at the previous level
        __float128 resid = 0;
        for (int i = p; i < order; ++i) resid += qabs2(g[p - 1] - g[i]);
        const __float128 scale = qabs2(g[p - 1]);
        if (resid <= scale * static_cast<__float128>(1e-60)) break; // exactly interpolated
        std::vector<qcomplex> next(order);
        for (int i = p; i < order; ++i)
            next[i] = (g[p - 1] - g[i]) / ((qz[i] - qz[p - 1]) * g[i]);
        g = std::move(next);
        coeff.push_back(g[p].to_double());
        ++used;
    }

    PadeApproximant out;
    out.order = order;
    out.points.assign(zs.begin(), zs.begin() + used);
    out.point_values.assign(fs.begin(), fs.begin() + used);
    out.coefficients = std::move(coeff);
    out.omega_max = zs[order - 1].imag();

    // fit-quality gate over every requested point
    double max_dev = 0.0;
    for (int i = 0; i < order; ++i) {
        const PadeEval e = pade_eval(out, 0.0, zs[i].imag());
        max_dev = std::max(max_dev, std::abs(e.value - fs[i]) / std::max(1e-300, std::abs(fs[i])));
    }
    if (max_dev > pade_gate_tolerance)
        throw continuation_error("pade_fit: ill-conditioned continuation, max interpolation "
                                 "deviation " + std::to_string(max_dev));
    return out;
}

PadeEval pade_eval(const PadeApproximant& approx, double omega, double eta) {
    if (!(eta > 0.0)) throw domain_error("pade_eval: eta must be positive");
    const qcomplex z(cdouble(omega, eta));
    const int M = static_cast<int>(approx.coefficients.size());
    qcomplex acc(1.0, 0.0);
    for (int k = M - 1; k >= 1; --k) {
        const qcomplex term =
            qcomplex(approx.coefficients[k]) * (z - qcomplex(approx.points[k - 1]));
        acc = qcomplex(1.0, 0.0) + term / acc;
        if (qabs2(acc) == 0)
            throw continuation_error("pade_eval: zero denominator in recurrence");
    }
    const qcomplex val = qcomplex(approx.coefficients[0]) / acc;
    PadeEval out;
    out.value = val.to_double();
    if (!std::isfinite(out.value.real()) || !std::isfinite(out.value.imag()))
        throw continuation_error("pade_eval: recurrence overflow");
    out.extrapolated = std::hypot(omega, eta) > approx.omega_max;
    return out;
}

RetardedSeries continue_series(const PadeApproximant& approx, std::span<const double> omegas,
                               double eta, const std::string& label) {
    RetardedSeries out;
    out.eta = eta;
    out.label = label;
    out.omega_points.assign(omegas.begin(), omegas.end());
    out.values.resize(omegas.size());
    out.extrapolated.resize(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const PadeEval e = pade_eval(approx, omegas[i], eta);
        out.values[i] = e.value;
        out.extrapolated[i] = e.extrapolated;
    }
    return out;
}

double locate_peak(const PadeApproximant& approx, double omega_lo, double omega_hi, double eta,
                   int scan_points) {
    double best_w = omega_lo, best = -1.0;
    for (int i = 0; i < scan_points; ++i) {
        const double w = omega_lo + (omega_hi - omega_lo) * i / (scan_points - 1);
        const double mag = std::abs(pade_eval(approx, w, eta).value);
        if (mag > best) {
            best = mag;
            best_w = w;
        }
    }
    return best_w;
}

} // namespace qsread
