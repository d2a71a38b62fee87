#include "qsread/io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace qsread {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw error("cannot open " + path.string() + " for writing");
    f << text;
}

// nlohmann emits shortest round-trip doubles; deterministic for identical inputs
ordered_json jnum(double x) { return ordered_json(x); }

} // namespace

void write_csv(const CorrelatorSeries& s, const std::filesystem::path& path) {
    std::string out = "n, omega_n, re, im\n";
    for (int i = 0; i < s.size(); ++i) {
        out += std::to_string(s.grid.n_of(i)) + ", " + fmt17(s.grid.frequencies()[i]) + ", " +
               fmt17(s.values[i].real()) + ", " + fmt17(s.values[i].imag()) + "\n";
    }
    write_text(path, out);
}

void write_json(const CorrelatorSeries& s, const std::filesystem::path& path) {
    ordered_json j;
    j["beta"] = jnum(s.grid.beta());
    j["statistics"] = to_string(s.grid.statistics());
    j["label"] = s.label;
    j["conj_symmetric"] = s.conj_symmetric;
    if (!s.meta.empty()) j["meta"] = s.meta;
    auto& vals = j["values"] = ordered_json::array();
    for (int i = 0; i < s.size(); ++i) {
        ordered_json e;
        e["n"] = s.grid.n_of(i);
        e["omega"] = jnum(s.grid.frequencies()[i]);
        e["re"] = jnum(s.values[i].real());
        e["im"] = jnum(s.values[i].imag());
        vals.push_back(e);
    }
    write_text(path, j.dump(2) + "\n");
}

CorrelatorSeries read_json_series(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw error("cannot open " + path.string());
    ordered_json j = ordered_json::parse(f);
    const double beta = j.at("beta").get<double>();
    const Statistics st = statistics_from_string(j.at("statistics").get<std::string>());
    const auto& vals = j.at("values");
    const int count = static_cast<int>(vals.size());
    const int N = st == Statistics::bosonic ? (count - 1) / 2 : count / 2;
    CorrelatorSeries s(make_grid(beta, st, N), j.value("label", ""));
    if (s.size() != count) throw error("read_json_series: inconsistent value count");
    for (int i = 0; i < count; ++i) {
        const auto& e = vals[i];
        s.values[i] = cdouble(e.at("re").get<double>(), e.at("im").get<double>());
    }
    s.conj_symmetric = j.value("conj_symmetric", true);
    return s;
}

void write_csv(const RetardedSeries& s, const std::filesystem::path& path) {
    std::string out = "omega, eta, re, im\n";
    for (std::size_t i = 0; i < s.omega_points.size(); ++i) {
        out += fmt17(s.omega_points[i]) + ", " + fmt17(s.eta) + ", " +
               fmt17(s.values[i].real()) + ", " + fmt17(s.values[i].imag()) + "\n";
    }
    write_text(path, out);
}

void write_json(const RetardedSeries& s, const std::filesystem::path& path) {
    ordered_json j;
    j["eta"] = jnum(s.eta);
    j["label"] = s.label;
    auto& vals = j["values"] = ordered_json::array();
    for (std::size_t i = 0; i < s.omega_points.size(); ++i) {
        ordered_json e;
        e["omega"] = jnum(s.omega_points[i]);
        e["re"] = jnum(s.values[i].real());
        e["im"] = jnum(s.values[i].imag());
        e["extrapolated"] = static_cast<bool>(s.extrapolated[i]);
        vals.push_back(e);
    }
    write_text(path, j.dump(2) + "\n");
}

void write_dressed_set(const DressedSet& set, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::optional<CorrelatorSeries>& s, const char* name) {
        if (!s) return;
        write_csv(*s, dir / (std::string(name) + ".csv"));
        write_json(*s, dir / (std::string(name) + ".json"));
    };
    put(set.D_R0, "D_R0");
    put(set.D_RB, "D_RB");
    put(set.D_R, "D_R");
    put(set.C_S0, "C_S0");
    put(set.C_S, "C_S");
    ordered_json prov(set.provenance);
    write_text(dir / "provenance.json", prov.dump(2) + "\n");
}

void write_report_json(const ComparisonReport& r, const std::filesystem::path& path) {
    ordered_json j;
    j["compared"] = {r.label_a, r.label_b};
    j["tolerance_name"] = r.tolerance_name;
    j["tolerance"] = jnum(r.tolerance);
    j["pass"] = r.pass;
    j["max_abs"] = jnum(r.max_abs);
    j["mean_abs"] = jnum(r.mean_abs);
    j["max_rel"] = jnum(r.max_rel);
    j["mean_rel"] = jnum(r.mean_rel);
    auto& rows = j["per_frequency"] = ordered_json::array();
    for (std::size_t i = 0; i < r.n_index.size(); ++i) {
        ordered_json e;
        e["n"] = r.n_index[i];
        e["abs"] = jnum(r.abs_dev[i]);
        e["rel"] = jnum(r.rel_dev[i]);
        rows.push_back(e);
    }
    write_text(path, j.dump(2) + "\n");
}

} // namespace qsread

namespace qsread {

ComparisonReport compare_series(const CorrelatorSeries& a, const CorrelatorSeries& b,
                                const std::string& tolerance_name, double tolerance) {
    if (!(a.grid == b.grid))
        throw domain_error("compare_series: series do not share one grid");
    ComparisonReport r;
    r.label_a = a.label;
    r.label_b = b.label;
    r.tolerance_name = tolerance_name;
    r.tolerance = tolerance;
    const int n = a.size();
    r.n_index.resize(n);
    r.abs_dev.resize(n);
    r.rel_dev.resize(n);
    double sum_abs = 0.0, sum_rel = 0.0;
    for (int i = 0; i < n; ++i) {
        r.n_index[i] = a.grid.n_of(i);
        const double ad = std::abs(a.values[i] - b.values[i]);
        const double mag = std::abs(b.values[i]);
        const double rd = mag > 1e-300 ? ad / mag : ad;
        r.abs_dev[i] = ad;
        r.rel_dev[i] = rd;
        sum_abs += ad;
        sum_rel += rd;
        r.max_abs = std::max(r.max_abs, ad);
        r.max_rel = std::max(r.max_rel, rd);
    }
    r.mean_abs = sum_abs / n;
    r.mean_rel = sum_rel / n;
    r.pass = r.max_rel <= tolerance;
    return r;
}

} // namespace qsread
