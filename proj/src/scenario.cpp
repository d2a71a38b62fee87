#include "qsread/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "qsread/io.hpp"
#include "qsread/parallel.hpp"

namespace qsread {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string lam_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", lambda);
    return buf;
}

const std::set<std::string>& known_tasks() {
    static const std::set<std::string> t{"bare", "dressed", "extract", "oracle",
                                         "wick", "continue", "compare"};
    return t;
}

// ---------- field-path JSON access ----------

const ordered_json* find_path(const ordered_json& j, const std::string& path) {
    const ordered_json* cur = &j;
    std::size_t pos = 0;
    while (pos < path.size()) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

template <typename T>
T require(const ordered_json& j, const std::string& path) {
    const ordered_json* v = find_path(j, path);
    if (!v) throw config_error("missing required field `" + path + "`");
    try {
        return v->get<T>();
    } catch (const std::exception&) {
        throw config_error("field `" + path + "` has the wrong type");
    }
}

template <typename T>
T value_or(const ordered_json& j, const std::string& path, T def) {
    const ordered_json* v = find_path(j, path);
    if (!v) return def;
    try {
        return v->get<T>();
    } catch (const std::exception&) {
        throw config_error("field `" + path + "` has the wrong type");
    }
}

} // namespace

// public dimension helper lives next to the parsing code that needs it
long hilbert_dimension(const SystemSpec& spec, Part part) {
    const auto& bath = std::get<DiscreteBath>(spec.detector.bath);
    const double floor = spec.truncation.thermal_weight_floor;
    long dim = 1;
    if (part != Part::simulator_alone) {
        const int nc = spec.truncation.n_max_cavity > 0
                           ? spec.truncation.n_max_cavity
                           : thermal_cutoff(spec.beta, spec.detector.omega_d, floor);
        dim *= nc + 1;
        for (const auto& m : bath.modes) {
            const int nb = spec.truncation.n_max_bath_mode > 0
                               ? spec.truncation.n_max_bath_mode
                               : thermal_cutoff(spec.beta, m.omega, floor);
            dim *= nb + 1;
        }
    }
    if (part != Part::detector_and_bath) {
        if (spec.is_oscillator()) {
            const auto& osc = std::get<OscillatorSpec>(spec.simulator);
            const int ns = spec.truncation.n_max_oscillator > 0
                               ? spec.truncation.n_max_oscillator
                               : thermal_cutoff(spec.beta, osc.omega_s, floor);
            dim *= ns + 1;
        } else {
            const auto& lat = std::get<LatticeSpec>(spec.simulator);
            dim *= 1L << (lat.spin == Spin::spinhalf ? 2 * lat.L : lat.L);
        }
    }
    return dim;
}

const std::map<std::string, double>& default_tolerances() {
    static const std::map<std::string, double> t{
        {"extraction_identity", 1e-10}, {"oracle_extraction", 1e-6},
        {"lambda_ratio_band", 0.15},    {"wick_quadrature", 1e-10},
        {"wick_floor", 1e-8},           {"pade_window", 1e-4},
        {"pole_location", 0.01},        {"truncation", 1e-6},
    };
    return t;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot read config file " + path.string());
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }

    ScenarioConfig c;

    // system
    c.system.beta = require<double>(j, "system.beta");
    c.system.detector.omega_d = require<double>(j, "system.detector.omega_d");
    const std::string bath_type = require<std::string>(j, "system.detector.bath.type");
    if (bath_type == "flat") {
        FlatBath fb;
        fb.kappa = require<double>(j, "system.detector.bath.kappa");
        fb.delta_omega_d = value_or(j, "system.detector.bath.delta_omega_d", 0.0);
        c.system.detector.bath = fb;
    } else if (bath_type == "discrete") {
        DiscreteBath db;
        const ordered_json* modes = find_path(j, "system.detector.bath.modes");
        if (!modes || !modes->is_array())
            throw config_error("missing required field `system.detector.bath.modes`");
        for (const auto& m : *modes)
            db.modes.push_back({m.at("c").get<double>(), m.at("omega").get<double>()});
        c.system.detector.bath = db;
    } else {
        throw config_error("field `system.detector.bath.type` must be 'flat' or 'discrete'");
    }

    const std::string sim_type = require<std::string>(j, "system.simulator.type");
    if (sim_type == "oscillator") {
        OscillatorSpec o;
        o.omega_s = require<double>(j, "system.simulator.omega_s");
        c.system.simulator = o;
    } else if (sim_type == "lattice") {
        LatticeSpec l;
        l.L = require<int>(j, "system.simulator.L");
        l.hopping = require<double>(j, "system.simulator.hopping");
        l.mu = value_or(j, "system.simulator.mu", 0.0);
        l.spin = value_or<std::string>(j, "system.simulator.spin", "spinless") == "spinhalf"
                     ? Spin::spinhalf
                     : Spin::spinless;
        l.probe_site = value_or(j, "system.simulator.probe_site", 1);
        l.boundary = value_or<std::string>(j, "system.simulator.boundary", "periodic") == "open"
                         ? Boundary::open
                         : Boundary::periodic;
        c.system.simulator = l;
    } else {
        throw config_error("field `system.simulator.type` must be 'oscillator' or 'lattice'");
    }

    // coupling: number or array
    {
        const ordered_json* lam = find_path(j, "system.coupling.lambda");
        if (!lam) throw config_error("missing required field `system.coupling.lambda`");
        if (lam->is_array()) {
            for (const auto& v : *lam) c.lambdas.push_back(v.get<double>());
            if (c.lambdas.empty())
                throw config_error("field `system.coupling.lambda` must not be an empty array");
        } else {
            c.lambdas.push_back(lam->get<double>());
        }
        c.system.coupling.lambda = c.lambdas.front();
    }

    c.system.truncation.n_max_cavity = value_or(j, "system.truncation.n_max_cavity", 0);
    c.system.truncation.n_max_oscillator = value_or(j, "system.truncation.n_max_oscillator", 0);
    c.system.truncation.n_max_bath_mode = value_or(j, "system.truncation.n_max_bath_mode", 0);
    c.system.truncation.thermal_weight_floor =
        value_or(j, "system.truncation.thermal_weight_floor", 1e-12);
    c.system.truncation.dimension_budget =
        value_or<long>(j, "system.truncation.dimension_budget", 20000);

    // grid
    c.grid_beta = require<double>(j, "grid.beta");
    c.grid_statistics = statistics_from_string(value_or<std::string>(j, "grid.statistics", "bosonic"));
    c.grid_N = require<int>(j, "grid.N");
    if (std::abs(c.grid_beta - c.system.beta) > 1e-12 * std::max(1.0, c.system.beta))
        throw config_error("field `grid.beta` must equal `system.beta`");

    // tasks
    {
        const ordered_json* tasks = find_path(j, "tasks");
        if (!tasks || !tasks->is_array()) throw config_error("missing required field `tasks`");
        for (const auto& t : *tasks) {
            const std::string name = t.get<std::string>();
            if (!known_tasks().count(name)) throw config_error("unknown task '" + name + "'");
            c.tasks.push_back(name);
        }
    }

    // modes
    const std::string bm = value_or<std::string>(j, "modes.bath_mode", "paper_literal");
    if (bm == "paper_literal")
        c.bath_mode = FlatBathMode::paper_literal;
    else if (bm == "symmetric")
        c.bath_mode = FlatBathMode::symmetric;
    else
        throw config_error("field `modes.bath_mode` must be 'paper_literal' or 'symmetric'");
    c.system.mean_subtract = value_or(j, "modes.mean_subtract", true);
    c.tail_correction = value_or(j, "modes.tail_correction", true);
    c.convergence_check = value_or(j, "modes.convergence_check", false);

    // tolerances
    c.tolerances = default_tolerances();
    if (const ordered_json* tol = find_path(j, "tolerances")) {
        for (const auto& [k, v] : tol->items()) {
            if (!default_tolerances().count(k))
                throw config_error("unknown tolerance name '" + k + "'");
            c.tolerances[k] = v.get<double>();
        }
    }

    // wick times
    if (const ordered_json* wt = find_path(j, "wick_times")) {
        if (!wt->is_array() || wt->size() != 4)
            throw config_error("field `wick_times` must be an array of four times");
        for (int i = 0; i < 4; ++i) c.wick_times[i] = (*wt)[i].get<double>();
        c.wick_times_given = true;
    } else {
        for (int i = 0; i < 4; ++i) c.wick_times[i] = c.system.beta * (0.1 + 0.2 * i);
    }

    // continuation window
    c.continuation_order = value_or(j, "continuation.order", 6);
    c.continuation_eta = value_or(j, "continuation.eta", 1e-3);
    c.continuation_window_lo = value_or(j, "continuation.omega_lo", 0.5);
    c.continuation_window_hi = value_or(j, "continuation.omega_hi", 1.5);
    c.continuation_points = value_or(j, "continuation.points", 101);

    c.output_dir = value_or<std::string>(j, "output_dir", "");
    if (c.output_dir.empty()) {
        const char* env = std::getenv("QSREAD_OUTPUT_DIR");
        c.output_dir = env ? env : "qsread_out";
    }
    c.seed = value_or<long>(j, "seed", 0);

    // structural validation of the physical spec (throws domain errors -> config errors)
    try {
        c.system.detector.validate();
        c.system.coupling.validate();
        if (c.system.is_oscillator())
            std::get<OscillatorSpec>(c.system.simulator).validate();
        else
            std::get<LatticeSpec>(c.system.simulator).validate();
    } catch (const error& e) {
        throw config_error(e.what());
    }

    // auto-insert prerequisites: extract needs a producer, compare/continue need extract
    {
        std::vector<std::string> expanded;
        bool have_producer = false, have_extract = false;
        auto ensure_producer = [&]() {
            if (!have_producer) {
                expanded.push_back("dressed");
                c.auto_inserted.push_back("dressed");
                have_producer = true;
            }
        };
        auto ensure_extract = [&]() {
            ensure_producer();
            if (!have_extract) {
                expanded.push_back("extract");
                c.auto_inserted.push_back("extract");
                have_extract = true;
            }
        };
        for (const auto& t : c.tasks) {
            if (t == "dressed" || t == "oracle") have_producer = true;
            if (t == "extract") ensure_producer(), have_extract = true;
            if (t == "compare" || t == "continue") ensure_extract();
            expanded.push_back(t);
        }
        c.tasks = std::move(expanded);
    }

    // pre-flight dimension check for ED tasks
    const bool wants_ed = std::count(c.tasks.begin(), c.tasks.end(), "oracle") ||
                          std::count(c.tasks.begin(), c.tasks.end(), "wick");
    if (wants_ed) {
        if (!std::holds_alternative<DiscreteBath>(c.system.detector.bath))
            throw config_error("oracle/wick tasks need a discrete bath (ED cannot represent "
                               "a flat continuum)");
        const long dim = hilbert_dimension(c.system, Part::full);
        if (dim > c.system.truncation.dimension_budget)
            throw config_error("Hilbert dimension " + std::to_string(dim) +
                               " exceeds budget " +
                               std::to_string(c.system.truncation.dimension_budget));
    }

    // resolved-config echo for provenance
    ordered_json echo = j;
    echo["resolved"] = {{"version", version_string},
                        {"config_format_version", config_format_version},
                        {"tasks", c.tasks},
                        {"auto_inserted", c.auto_inserted},
                        {"output_dir", c.output_dir.string()}};
    {
        ordered_json tol;
        for (const auto& [k, v] : c.tolerances) tol[k] = v;
        echo["resolved"]["tolerances"] = tol;
    }
    c.echo = echo.dump(2);
    return c;
}

ValidationReport validate_config(const std::filesystem::path& path) {
    ValidationReport r;
    try {
        ScenarioConfig c = parse_config(path);
        r.auto_inserted_tasks = c.auto_inserted;
    } catch (const error& e) {
        r.errors.push_back(e.what());
    }
    return r;
}

// ---------- execution ----------

namespace {

struct LambdaArtifacts {
    std::optional<DressedSet> set;
    std::optional<CorrelatorSeries> extracted;
    std::optional<CorrelatorSeries> reference; // what extraction should recover
    std::string reference_tolerance;           // tolerance name for compare
    std::optional<CorrelatorSeries> oracle_cs0;
};

struct RunState {
    ScenarioConfig cfg;
    MatsubaraGrid grid;
    std::map<double, LambdaArtifacts> per_lambda;
    std::vector<ComparisonReport> comparisons;
    bool ratio_pass = true;
    std::optional<double> ratio_value;
};

void write_provenance(const RunState& st) {
    std::ofstream f(st.cfg.output_dir / "provenance.json");
    f << st.cfg.echo << "\n";
}

void task_bare(RunState& st) {
    const auto dir = st.cfg.output_dir / "bare";
    std::filesystem::create_directories(dir);
    CorrelatorSeries dr0 = cavity_bare(st.cfg.system.detector.omega_d, st.grid);
    write_csv(dr0, dir / "D_R0.csv");
    write_json(dr0, dir / "D_R0.json");
    CorrelatorSeries cs0 =
        st.cfg.system.is_oscillator()
            ? oscillator_bare(std::get<OscillatorSpec>(st.cfg.system.simulator).omega_s, st.grid)
            : site_density_correlator(std::get<LatticeSpec>(st.cfg.system.simulator), st.grid,
                                      st.cfg.system.beta);
    cs0.label = "C_S0";
    write_csv(cs0, dir / "C_S0.csv");
    write_json(cs0, dir / "C_S0.json");
}

void task_dressed(RunState& st) {
    for (double lam : st.cfg.lambdas) {
        DressedSet set;
        set.D_R0 = cavity_bare(st.cfg.system.detector.omega_d, st.grid);
        set.D_RB = detector_with_bath(st.cfg.system.detector, st.grid, st.cfg.bath_mode);
        if (st.cfg.system.is_oscillator()) {
            const auto& osc = std::get<OscillatorSpec>(st.cfg.system.simulator);
            set.C_S0 = oscillator_bare(osc.omega_s, st.grid);
            set.D_R = detector_full_oscillator(*set.D_RB, *set.C_S0, lam);
            set.C_S = simulator_full(*set.C_S0, *set.D_RB, lam);
        } else {
            const auto& lat = std::get<LatticeSpec>(st.cfg.system.simulator);
            CorrelatorSeries csl = site_density_correlator(lat, st.grid, st.cfg.system.beta);
            csl.label = "C_SL_approx";
            set.C_S0 = csl;
            set.D_R = detector_full_fermion(*set.D_RB, csl, lam);
        }
        set.provenance["path"] = "closed_form";
        set.provenance["lambda"] = lam_tag(lam);
        set.provenance["bath_mode"] =
            st.cfg.bath_mode == FlatBathMode::paper_literal ? "paper_literal" : "symmetric";
        auto& art = st.per_lambda[lam];
        art.set = std::move(set);
        art.reference = art.set->C_S0;
        art.reference_tolerance = "extraction_identity";
        write_dressed_set(*art.set, st.cfg.output_dir / ("closed_lambda_" + lam_tag(lam)));
    }
}

void task_oracle(RunState& st) {
    for (double lam : st.cfg.lambdas) {
        SystemSpec spec = st.cfg.system;
        spec.coupling.lambda = lam;
        if (st.cfg.convergence_check)
            check_truncation(spec, st.grid, st.cfg.tolerances.at("truncation"));
        ReadoutResult res =
            readout_experiment(spec, st.grid, st.cfg.tolerances.at("oracle_extraction"));
        auto& art = st.per_lambda[lam];
        art.set = std::move(res.set);
        art.extracted = std::move(res.extracted);
        art.oracle_cs0 = art.set->C_S0;
        art.reference = art.set->C_S0;
        art.reference_tolerance = "oracle_extraction";
        write_dressed_set(*art.set, st.cfg.output_dir / ("oracle_lambda_" + lam_tag(lam)));
        write_csv(*art.extracted,
                  st.cfg.output_dir / ("oracle_lambda_" + lam_tag(lam)) / "extracted.csv");
        write_json(*art.extracted,
                   st.cfg.output_dir / ("oracle_lambda_" + lam_tag(lam)) / "extracted.json");
        write_report_json(res.extraction_report,
                          st.cfg.output_dir /
                              ("report_oracle_extraction_lambda_" + lam_tag(lam) + ".json"));
    }
}

void task_extract(RunState& st) {
    for (double lam : st.cfg.lambdas) {
        auto& art = st.per_lambda.at(lam);
        if (!art.set || !art.set->D_RB || !art.set->D_R)
            throw error("extract: no dressed correlators available for lambda=" + lam_tag(lam));
        if (!art.extracted) art.extracted = extract(*art.set->D_RB, *art.set->D_R, lam);
        const auto dir = st.cfg.output_dir / ("extract_lambda_" + lam_tag(lam));
        std::filesystem::create_directories(dir);
        write_csv(*art.extracted, dir / "extracted.csv");
        write_json(*art.extracted, dir / "extracted.json");
    }
}

void task_wick(RunState& st) {
    const SystemSpec& spec0 = st.cfg.system;
    ordered_json out;
    const auto& times = st.cfg.wick_times;
    out["times"] = times;

    // control: detector quadrature on the bare cavity (linear in ladder operators)
    {
        SystemSpec s = spec0;
        s.coupling.lambda = 0.0;
        std::get<DiscreteBath>(s.detector.bath).modes.clear();
        Model m = build_hamiltonian(s, Part::detector_and_bath);
        SpectralData d = diagonalize_dense(std::move(m.H), m.dim(), s.beta);
        register_operator(d, m, "Gamma_R");
        const cdouble r = wick_residual(d, "Gamma_R", times);
        out["quadrature_residual"] = std::abs(r);
        out["quadrature_pass"] = std::abs(r) <= st.cfg.tolerances.at("wick_quadrature");
    }
    // simulator coupling operator at lambda = 0
    {
        SystemSpec s = spec0;
        s.coupling.lambda = 0.0;
        Model m = build_hamiltonian(s, Part::simulator_alone);
        SpectralData d = diagonalize_dense(std::move(m.H), m.dim(), s.beta);
        register_operator(d, m, "O_S");
        const cdouble r = wick_residual(d, "O_S", times);
        out["coupling_operator_residual_re"] = r.real();
        out["coupling_operator_residual_abs"] = std::abs(r);
        if (spec0.is_oscillator()) {
            out["coupling_operator_pass"] =
                std::abs(r) <= st.cfg.tolerances.at("wick_quadrature");
        } else {
            // density operator must violate the factorization
            out["coupling_operator_pass"] =
                std::abs(r) > st.cfg.tolerances.at("wick_floor");
        }
    }
    const bool pass =
        out["quadrature_pass"].get<bool>() && out["coupling_operator_pass"].get<bool>();
    out["pass"] = pass;
    std::ofstream f(st.cfg.output_dir / "report_wick.json");
    f << out.dump(2) << "\n";
    ComparisonReport cr;
    cr.label_a = "wick_dichotomy";
    cr.label_b = spec0.is_oscillator() ? "quadrature operators" : "quadrature vs density";
    cr.tolerance_name = "wick_quadrature/wick_floor";
    cr.pass = pass;
    st.comparisons.push_back(cr);
}

void task_continue(RunState& st) {
    const double eta = st.cfg.continuation_eta;
    std::vector<double> omegas(st.cfg.continuation_points);
    for (int i = 0; i < st.cfg.continuation_points; ++i)
        omegas[i] = st.cfg.continuation_window_lo +
                    (st.cfg.continuation_window_hi - st.cfg.continuation_window_lo) * i /
                        (st.cfg.continuation_points - 1);

    const double lam = st.cfg.lambdas.front();
    const auto& art = st.per_lambda.at(lam);
    const auto dir = st.cfg.output_dir / "retarded";
    std::filesystem::create_directories(dir);
    ordered_json rep;

    // D_RB: Pade for symmetric series, exact substitution for paper-literal flat baths
    if (art.set && art.set->D_RB) {
        const auto& drb = *art.set->D_RB;
        if (drb.conj_symmetric) {
            PadeApproximant pa = pade_fit(drb, st.cfg.continuation_order);
            RetardedSeries rs = continue_series(pa, omegas, eta, "D_RB_retarded");
            write_csv(rs, dir / "D_RB.csv");
            write_json(rs, dir / "D_RB.json");
            if (const auto* fb = std::get_if<FlatBath>(&st.cfg.system.detector.bath)) {
                const RationalForm form = rational_detector_with_bath(
                    st.cfg.system.detector.omega_d, fb->kappa, fb->delta_omega_d);
                double max_rel = 0.0;
                for (std::size_t i = 0; i < omegas.size(); ++i) {
                    const cdouble ref = continue_rational(form, omegas[i], eta);
                    max_rel = std::max(max_rel, std::abs(rs.values[i] - ref) / std::abs(ref));
                }
                rep["D_RB_pade_vs_rational_max_rel"] = max_rel;
                rep["D_RB_pass"] = max_rel <= st.cfg.tolerances.at("pade_window");
            }
        } else if (const auto* fb = std::get_if<FlatBath>(&st.cfg.system.detector.bath)) {
            const RationalForm form = rational_detector_with_bath(st.cfg.system.detector.omega_d,
                                                                  fb->kappa, fb->delta_omega_d);
            RetardedSeries rs;
            rs.eta = eta;
            rs.label = "D_RB_retarded (paper_literal closed form)";
            rs.omega_points = omegas;
            rs.values.resize(omegas.size());
            rs.extrapolated.assign(omegas.size(), false);
            for (std::size_t i = 0; i < omegas.size(); ++i)
                rs.values[i] = continue_rational(form, omegas[i], eta);
            write_csv(rs, dir / "D_RB.csv");
            write_json(rs, dir / "D_RB.json");
            rep["D_RB_path"] = "continue_rational (paper_literal input is not conj-symmetric)";
        }
    }

    // extracted simulator correlator: Pade, pole location against omega_s
    if (art.extracted && st.cfg.system.is_oscillator()) {
        PadeApproximant pa = pade_fit(*art.extracted, st.cfg.continuation_order);
        RetardedSeries rs = continue_series(pa, omegas, eta, "C_S0_retarded");
        write_csv(rs, dir / "C_S0.csv");
        write_json(rs, dir / "C_S0.json");
        const double ws = std::get<OscillatorSpec>(st.cfg.system.simulator).omega_s;
        const double peak = locate_peak(pa, 0.5 * ws, 1.5 * ws, eta);
        rep["pole_located_at"] = peak;
        rep["pole_expected"] = ws;
        const double dev = std::abs(peak - ws) / ws;
        rep["pole_rel_dev"] = dev;
        rep["pole_pass"] = dev <= st.cfg.tolerances.at("pole_location");
    }

    bool pass = true;
    if (rep.contains("D_RB_pass")) pass = pass && rep["D_RB_pass"].get<bool>();
    if (rep.contains("pole_pass")) pass = pass && rep["pole_pass"].get<bool>();
    rep["pass"] = pass;
    std::ofstream f(st.cfg.output_dir / "report_continuation.json");
    f << rep.dump(2) << "\n";
    ComparisonReport cr;
    cr.label_a = "continued retarded correlators";
    cr.label_b = "closed-form references";
    cr.tolerance_name = "pade_window/pole_location";
    cr.pass = pass;
    st.comparisons.push_back(cr);
}

void task_compare(RunState& st) {
    // per-lambda extraction fidelity
    for (double lam : st.cfg.lambdas) {
        const auto& art = st.per_lambda.at(lam);
        if (!art.extracted || !art.reference)
            throw error("compare: nothing extracted for lambda=" + lam_tag(lam));
        ComparisonReport r =
            compare_series(*art.extracted, *art.reference, art.reference_tolerance,
                           st.cfg.tolerances.at(art.reference_tolerance));
        r.label_a = "extracted(lambda=" + lam_tag(lam) + ")";
        r.label_b = art.reference->label;
        write_report_json(r, st.cfg.output_dir /
                                 ("report_compare_lambda_" + lam_tag(lam) + ".json"));
        st.comparisons.push_back(std::move(r));
    }
    // lambda-independence (oscillator) / lambda^2 deviation ratio (lattice oracle)
    if (st.cfg.lambdas.size() >= 2) {
        if (st.cfg.system.is_oscillator()) {
            for (std::size_t i = 0; i + 1 < st.cfg.lambdas.size(); ++i) {
                const auto& a = st.per_lambda.at(st.cfg.lambdas[i]);
                const auto& b = st.per_lambda.at(st.cfg.lambdas[i + 1]);
                ComparisonReport r = compare_series(
                    *a.extracted, *b.extracted, a.reference_tolerance,
                    st.cfg.tolerances.at(a.reference_tolerance));
                r.label_a = "extracted(lambda=" + lam_tag(st.cfg.lambdas[i]) + ")";
                r.label_b = "extracted(lambda=" + lam_tag(st.cfg.lambdas[i + 1]) + ")";
                write_report_json(r, st.cfg.output_dir /
                                         ("report_lambda_independence_" + std::to_string(i) +
                                          ".json"));
                st.comparisons.push_back(std::move(r));
            }
        } else if (st.cfg.lambdas.size() == 2 && st.per_lambda.begin()->second.oracle_cs0) {
            // deviation-norm ratio against (lam1/lam2)^2
            auto norm_dev = [&](double lam) {
                const auto& art = st.per_lambda.at(lam);
                double s = 0.0;
                for (int i = 0; i < art.extracted->size(); ++i)
                    s += std::norm(art.extracted->values[i] - art.reference->values[i]);
                return std::sqrt(s);
            };
            const double l1 = st.cfg.lambdas[0], l2 = st.cfg.lambdas[1];
            const double ratio = norm_dev(l1) / norm_dev(l2);
            const double expected = (l1 * l1) / (l2 * l2);
            const double band = st.cfg.tolerances.at("lambda_ratio_band");
            const bool pass = ratio >= expected * (1.0 - band) && ratio <= expected * (1.0 + band);
            st.ratio_value = ratio;
            st.ratio_pass = pass;
            ordered_json out;
            out["lambda_pair"] = {l1, l2};
            out["deviation_norm_ratio"] = ratio;
            out["expected"] = expected;
            out["band"] = band;
            out["pass"] = pass;
            std::ofstream f(st.cfg.output_dir / "report_lambda_ratio.json");
            f << out.dump(2) << "\n";
            ComparisonReport cr;
            cr.label_a = "deviation-norm ratio";
            cr.label_b = "lambda^2 scaling";
            cr.tolerance_name = "lambda_ratio_band";
            cr.tolerance = band;
            cr.max_rel = std::abs(ratio - expected) / expected;
            cr.pass = pass;
            st.comparisons.push_back(cr);
        }
    }
}

} // namespace

int run_scenario(const std::filesystem::path& config_path, const RunOverrides& overrides) {
    try {
        ScenarioConfig cfg = parse_config(config_path);
        if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
        if (overrides.threads > 0) set_max_threads(overrides.threads);
        for (const auto& [k, v] : overrides.tolerances) {
            if (!default_tolerances().count(k))
                throw config_error("unknown tolerance override '" + k + "'");
            cfg.tolerances[k] = v;
        }

        MatsubaraGrid grid = make_grid(cfg.grid_beta, cfg.grid_statistics, cfg.grid_N);
        RunState st{std::move(cfg), std::move(grid), {}, {}, true, {}};
        std::filesystem::create_directories(st.cfg.output_dir);
        write_provenance(st);

        for (const auto& task : st.cfg.tasks) {
            try {
                if (task == "bare") task_bare(st);
                else if (task == "dressed") task_dressed(st);
                else if (task == "oracle") task_oracle(st);
                else if (task == "extract") task_extract(st);
                else if (task == "wick") task_wick(st);
                else if (task == "continue") task_continue(st);
                else if (task == "compare") task_compare(st);
            } catch (const error&) {
                std::cerr << "task '" << task << "' failed:\n";
                throw;
            }
        }

        bool all_pass = true;
        for (const auto& r : st.comparisons) {
            std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.label_a << " vs " << r.label_b;
            if (r.tolerance > 0.0)
                std::cout << " (max rel " << r.max_rel << ", tol " << r.tolerance << ")";
            std::cout << "\n";
            all_pass = all_pass && r.pass;
        }
        return all_pass ? 0 : 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace qsread
