#include "qsread/ed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include <lapacke.h>

#include "qsread/parallel.hpp"

extern "C" {
void dgemm_(const char* transa, const char* transb, const int* m, const int* n, const int* k,
            const double* alpha, const double* a, const int* lda, const double* b,
            const int* ldb, const double* beta, double* c, const int* ldc);
}

namespace qsread {

namespace {

void gemm(char ta, char tb, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
    dgemm_(&ta, &tb, &m, &n, &k, &alpha, a, &lda, b, &ldb, &beta, c, &ldc);
}

} // namespace

// ---------- SparseOp ----------

void SparseOp::add(long row, long col, double v) {
    if (v == 0.0) return;
    for (auto& e : cols[col]) {
        if (e.first == row) {
            e.second += v;
            return;
        }
    }
    cols[col].emplace_back(row, v);
}

SparseOp SparseOp::transposed() const {
    SparseOp t(dim);
    for (long j = 0; j < dim; ++j)
        for (const auto& [r, v] : cols[j]) t.cols[r].emplace_back(j, v);
    return t;
}

std::vector<double> SparseOp::dense() const {
    std::vector<double> out(static_cast<std::size_t>(dim) * dim, 0.0);
    for (long j = 0; j < dim; ++j)
        for (const auto& [r, v] : cols[j]) out[r + static_cast<std::size_t>(dim) * j] += v;
    return out;
}

SparseOp sparse_product(const SparseOp& a, const SparseOp& b) {
    SparseOp c(a.dim);
    for (long j = 0; j < b.dim; ++j)
        for (const auto& [r1, v1] : b.cols[j])
            for (const auto& [r2, v2] : a.cols[r1]) c.add(r2, j, v1 * v2);
    return c;
}

SparseOp sparse_sum(const SparseOp& a, const SparseOp& b, double ca, double cb) {
    SparseOp c(a.dim);
    for (long j = 0; j < a.dim; ++j) {
        for (const auto& [r, v] : a.cols[j]) c.add(r, j, ca * v);
        for (const auto& [r, v] : b.cols[j]) c.add(r, j, cb * v);
    }
    return c;
}

// ---------- TensorBasis ----------

long TensorBasis::dim() const {
    long d = 1;
    for (long s : slot_dims) d *= s;
    return d;
}

long TensorBasis::stride(int slot) const {
    long s = 1;
    for (std::size_t k = slot + 1; k < slot_dims.size(); ++k) s *= slot_dims[k];
    return s;
}

SparseOp boson_annihilate(const TensorBasis& basis, int slot) {
    const long d = basis.dim();
    const long str = basis.stride(slot);
    const long sd = basis.slot_dims[slot];
    SparseOp a(d);
    for (long s = 0; s < d; ++s) {
        const long n = (s / str) % sd;
        if (n >= 1) a.cols[s].emplace_back(s - str, std::sqrt(static_cast<double>(n)));
    }
    return a;
}

SparseOp fermion_annihilate(const TensorBasis& basis, int orbital) {
    if (basis.fermion_slot < 0) throw domain_error("fermion_annihilate: basis has no fermion slot");
    const long d = basis.dim();
    const long str = basis.stride(basis.fermion_slot);
    const long sd = basis.slot_dims[basis.fermion_slot];
    SparseOp c(d);
    const long bit = 1L << orbital;
    for (long s = 0; s < d; ++s) {
        const long f = (s / str) % sd;
        if (f & bit) {
            const int parity = std::popcount(static_cast<unsigned long>(f & (bit - 1)));
            c.cols[s].emplace_back(s - str * bit, parity % 2 == 0 ? 1.0 : -1.0);
        }
    }
    return c;
}

// ---------- spec handling ----------

int thermal_cutoff(double beta, double omega, double weight_floor) {
    if (!(beta > 0.0) || !(omega > 0.0))
        throw domain_error("thermal_cutoff: beta and omega must be positive");
    const double z_mode = 1.0 / (1.0 - std::exp(-beta * omega));
    int n = 1;
    while (std::exp(-beta * omega * n) / z_mode >= weight_floor) ++n;
    return n;
}

void SystemSpec::validate() const {
    detector.validate();
    coupling.validate();
    if (!(beta > 0.0)) throw domain_error("SystemSpec: beta must be positive");
    if (!std::holds_alternative<DiscreteBath>(detector.bath))
        throw domain_error("SystemSpec: ED requires a discrete bath (flat spectra are a "
                           "continuum idealization)");
    if (is_oscillator())
        std::get<OscillatorSpec>(simulator).validate();
    else
        std::get<LatticeSpec>(simulator).validate();
    if (truncation.n_max_cavity < 0 || truncation.n_max_oscillator < 0 ||
        truncation.n_max_bath_mode < 0)
        throw domain_error("SystemSpec: cutoffs must be >= 1 (0 selects the thermal rule)");
    if (truncation.dimension_budget < 2)
        throw domain_error("SystemSpec: dimension budget must be at least 2");
}

namespace {

struct ResolvedCutoffs {
    int cavity;
    std::vector<int> bath;
    int oscillator = 0; // unused for lattice simulators
};

ResolvedCutoffs resolve_cutoffs(const SystemSpec& spec) {
    const auto& bath = std::get<DiscreteBath>(spec.detector.bath);
    const double floor = spec.truncation.thermal_weight_floor;
    ResolvedCutoffs r;
    r.cavity = spec.truncation.n_max_cavity > 0
                   ? spec.truncation.n_max_cavity
                   : thermal_cutoff(spec.beta, spec.detector.omega_d, floor);
    for (const auto& m : bath.modes)
        r.bath.push_back(spec.truncation.n_max_bath_mode > 0
                             ? spec.truncation.n_max_bath_mode
                             : thermal_cutoff(spec.beta, m.omega, floor));
    if (spec.is_oscillator()) {
        const auto& osc = std::get<OscillatorSpec>(spec.simulator);
        r.oscillator = spec.truncation.n_max_oscillator > 0
                           ? spec.truncation.n_max_oscillator
                           : thermal_cutoff(spec.beta, osc.omega_s, floor);
    }
    return r;
}

int lattice_orbitals(const LatticeSpec& lat) {
    return lat.spin == Spin::spinhalf ? 2 * lat.L : lat.L;
}

// orbital index of (site, spin); site-major, spin inner
int orbital_of(const LatticeSpec& lat, int site, int spin) {
    return lat.spin == Spin::spinhalf ? 2 * site + spin : site;
}

void scatter(std::vector<double>& H, long dim, const SparseOp& op, double scale) {
    for (long j = 0; j < dim; ++j)
        for (const auto& [r, v] : op.cols[j]) H[r + static_cast<std::size_t>(dim) * j] += scale * v;
}

// chain H inside a standalone fermion basis, used for the unperturbed density mean
double chain_density_mean(const LatticeSpec& lat, double beta);

SparseOp lattice_hamiltonian(const TensorBasis& basis, const LatticeSpec& lat) {
    SparseOp H(basis.dim());
    const int nspin = lat.spin == Spin::spinhalf ? 2 : 1;
    std::vector<std::pair<int, int>> bonds;
    for (int i = 0; i + 1 < lat.L; ++i) bonds.emplace_back(i, i + 1);
    // L = 2 ring would duplicate the single bond
    if (lat.boundary == Boundary::periodic && lat.L > 2) bonds.emplace_back(lat.L - 1, 0);
    for (int sp = 0; sp < nspin; ++sp) {
        for (auto [i, j] : bonds) {
            SparseOp ci = fermion_annihilate(basis, orbital_of(lat, i, sp));
            SparseOp cj = fermion_annihilate(basis, orbital_of(lat, j, sp));
            SparseOp hop = sparse_sum(sparse_product(ci.transposed(), cj),
                                      sparse_product(cj.transposed(), ci));
            H = sparse_sum(H, hop, 1.0, -lat.hopping);
        }
        for (int i = 0; i < lat.L; ++i) {
            SparseOp ci = fermion_annihilate(basis, orbital_of(lat, i, sp));
            H = sparse_sum(H, sparse_product(ci.transposed(), ci), 1.0, -lat.mu);
        }
    }
    return H;
}

double chain_density_mean(const LatticeSpec& lat, double beta) {
    TensorBasis basis;
    basis.fermion_slot = 0;
    basis.n_orbitals = lattice_orbitals(lat);
    basis.slot_dims.push_back(1L << basis.n_orbitals);
    const long dim = basis.dim();
    std::vector<double> H(static_cast<std::size_t>(dim) * dim, 0.0);
    scatter(H, dim, lattice_hamiltonian(basis, lat), 1.0);
    SpectralData d = diagonalize_dense(std::move(H), dim, beta);
    const int nspin = lat.spin == Spin::spinhalf ? 2 : 1;
    SparseOp n_op(dim);
    for (int sp = 0; sp < nspin; ++sp) {
        SparseOp c = fermion_annihilate(basis, orbital_of(lat, lat.probe_site - 1, sp));
        n_op = sparse_sum(n_op, sparse_product(c.transposed(), c));
    }
    register_operator(d, "n_probe", n_op);
    double mean = 0.0;
    for (long m = 0; m < dim; ++m) mean += d.weight(m) * d.op_element("n_probe", m, m);
    return mean / d.partition_shifted();
}

SparseOp probe_density(const TensorBasis& basis, const LatticeSpec& lat, bool mean_subtract,
                       double beta, double* mean_out) {
    const int site = lat.probe_site - 1;
    const int nspin = lat.spin == Spin::spinhalf ? 2 : 1;
    SparseOp n_op(basis.dim());
    for (int sp = 0; sp < nspin; ++sp) {
        SparseOp c = fermion_annihilate(basis, orbital_of(lat, site, sp));
        n_op = sparse_sum(n_op, sparse_product(c.transposed(), c));
    }
    double mean = 0.0;
    if (mean_subtract) {
        mean = chain_density_mean(lat, beta);
        for (long s = 0; s < basis.dim(); ++s) n_op.add(s, s, -mean);
    }
    if (mean_out) *mean_out = mean;
    return n_op;
}

} // namespace

Model build_hamiltonian(const SystemSpec& spec, Part part) {
    spec.validate();
    const auto& bathmodes = std::get<DiscreteBath>(spec.detector.bath).modes;
    const ResolvedCutoffs cut = resolve_cutoffs(spec);

    Model m;
    const bool with_detector = part != Part::simulator_alone;
    const bool with_simulator = part != Part::detector_and_bath;

    if (with_detector) {
        m.basis.slot_dims.push_back(cut.cavity + 1);
        for (int b : cut.bath) m.basis.slot_dims.push_back(b + 1);
    }
    if (with_simulator) {
        if (spec.is_oscillator()) {
            m.basis.slot_dims.push_back(cut.oscillator + 1);
        } else {
            const auto& lat = std::get<LatticeSpec>(spec.simulator);
            m.basis.fermion_slot = static_cast<int>(m.basis.slot_dims.size());
            m.basis.n_orbitals = lattice_orbitals(lat);
            if (m.basis.n_orbitals > 20)
                throw dimension_error("build_hamiltonian: lattice Fock space beyond 2^20");
            m.basis.slot_dims.push_back(1L << m.basis.n_orbitals);
        }
    }

    const long dim = m.basis.dim();
    if (dim > spec.truncation.dimension_budget)
        throw dimension_error("build_hamiltonian: Hilbert dimension " + std::to_string(dim) +
                              " exceeds budget " +
                              std::to_string(spec.truncation.dimension_budget));

    m.H.assign(static_cast<std::size_t>(dim) * dim, 0.0);

    SparseOp gamma_r(dim); // cavity quadrature
    if (with_detector) {
        SparseOp a = boson_annihilate(m.basis, 0);
        gamma_r = sparse_sum(a, a.transposed());
        scatter(m.H, dim, sparse_product(a.transposed(), a), spec.detector.omega_d);
        for (std::size_t b = 0; b < bathmodes.size(); ++b) {
            SparseOp ab = boson_annihilate(m.basis, static_cast<int>(b) + 1);
            scatter(m.H, dim, sparse_product(ab.transposed(), ab), bathmodes[b].omega);
            scatter(m.H, dim, sparse_product(gamma_r, sparse_sum(ab, ab.transposed())),
                    bathmodes[b].c);
        }
        m.operators.emplace("Gamma_R", gamma_r);
    }

    if (with_simulator) {
        SparseOp o_s(dim);
        if (spec.is_oscillator()) {
            const auto& osc = std::get<OscillatorSpec>(spec.simulator);
            const int slot = static_cast<int>(m.basis.slot_dims.size()) - 1;
            SparseOp as = boson_annihilate(m.basis, slot);
            o_s = sparse_sum(as, as.transposed());
            scatter(m.H, dim, sparse_product(as.transposed(), as), osc.omega_s);
            m.provenance["oscillator_slot"] = std::to_string(slot);
        } else {
            const auto& lat = std::get<LatticeSpec>(spec.simulator);
            scatter(m.H, dim, lattice_hamiltonian(m.basis, lat), 1.0);
            double mean = 0.0;
            o_s = probe_density(m.basis, lat, spec.mean_subtract, spec.beta, &mean);
            m.provenance["density_mean_subtracted"] = std::to_string(mean);
            m.provenance["fermion_ordering"] = "site-major, spin inner; c_i sign = parity of lower orbitals";
        }
        m.operators.emplace("O_S", o_s);
        if (with_detector && spec.coupling.lambda != 0.0)
            scatter(m.H, dim, sparse_product(o_s, gamma_r), spec.coupling.lambda);
    }

    m.provenance["slot_order"] = "cavity, bath modes, simulator";
    m.provenance["dim"] = std::to_string(dim);
    m.provenance["n_max_cavity"] = std::to_string(cut.cavity);
    for (std::size_t b = 0; b < cut.bath.size(); ++b)
        m.provenance["n_max_bath_" + std::to_string(b)] = std::to_string(cut.bath[b]);
    if (spec.is_oscillator()) m.provenance["n_max_oscillator"] = std::to_string(cut.oscillator);
    return m;
}

// ---------- diagonalization ----------

double SpectralData::partition_function() const {
    return z_shifted_ * std::exp(-beta_ * energies_.front());
}

void SpectralData::release_basis() {
    eigvec_.clear();
    eigvec_.shrink_to_fit();
}

double SpectralData::op_element(const std::string& name, long m, long mp) const {
    const auto& od = ops_.at(name);
    if (od.full.empty())
        throw domain_error("op_element: full matrix kept only for dim <= " +
                           std::to_string(full_matrix_limit));
    return od.full[m + static_cast<std::size_t>(dim_) * mp];
}

SpectralData diagonalize_dense(std::vector<double> H, long dim, double beta,
                               double thermal_floor) {
    if (dim < 1 || H.size() != static_cast<std::size_t>(dim) * dim)
        throw domain_error("diagonalize: matrix size mismatch");
    if (beta < 0.0) throw domain_error("diagonalize: beta must be >= 0");
    double asym = 0.0;
    for (long j = 0; j < dim; ++j)
        for (long i = j + 1; i < dim; ++i)
            asym = std::max(asym, std::abs(H[i + static_cast<std::size_t>(dim) * j] -
                                           H[j + static_cast<std::size_t>(dim) * i]));
    if (asym > 1e-10)
        throw domain_error("diagonalize: input not Hermitian (asymmetry " + std::to_string(asym) + ")");

    SpectralData d;
    d.beta_ = beta;
    d.dim_ = dim;
    d.energies_.assign(dim, 0.0);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<int>(dim), H.data(),
                                    static_cast<int>(dim), d.energies_.data());
    if (info != 0)
        throw error("diagonalize: LAPACK dsyevd failed with info=" + std::to_string(info));
    d.eigvec_ = std::move(H);

    d.weights_.resize(dim);
    const double e0 = d.energies_.front();
    for (long m = 0; m < dim; ++m) d.weights_[m] = std::exp(-beta * (d.energies_[m] - e0));
    d.z_shifted_ = std::accumulate(d.weights_.begin(), d.weights_.end(), 0.0);
    for (long m = 0; m < dim; ++m)
        if (d.weights_[m] > thermal_floor) d.thermal_.push_back(m);
    return d;
}

SpectralData diagonalize(const Model& model, double beta, double thermal_floor) {
    return diagonalize_dense(model.H, model.dim(), beta, thermal_floor);
}

void register_operator(SpectralData& data, const std::string& name, const SparseOp& op) {
    if (data.eigvec_.empty())
        throw domain_error("register_operator: eigenbasis released");
    const long dim = data.dim_;
    if (op.dim != dim) throw domain_error("register_operator: operator dimension mismatch");

    // structural symmetry test
    bool symmetric = true;
    {
        SparseOp t = op.transposed();
        for (long j = 0; j < dim && symmetric; ++j) {
            if (op.cols[j].size() != t.cols[j].size()) { symmetric = false; break; }
            auto a = op.cols[j], b = t.cols[j];
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            for (std::size_t k = 0; k < a.size(); ++k)
                if (a[k].first != b[k].first || std::abs(a[k].second - b[k].second) > 1e-14) {
                    symmetric = false;
                    break;
                }
        }
    }

    SpectralData::OpRows od;
    od.symmetric = symmetric;
    const long nt = static_cast<long>(data.thermal_.size());
    const double* V = data.eigvec_.data();

    // V_slab: columns of V at the thermal indices
    std::vector<double> slab(static_cast<std::size_t>(dim) * nt);
    for (long t = 0; t < nt; ++t)
        std::memcpy(slab.data() + static_cast<std::size_t>(dim) * t,
                    V + static_cast<std::size_t>(dim) * data.thermal_[t],
                    sizeof(double) * dim);

    auto eigen_rows = [&](bool transpose_op) {
        // rows(m_t, :) = (V^T Op V)[m_t, :], via W = Op^T V_slab then W^T V
        std::vector<double> W(static_cast<std::size_t>(dim) * nt, 0.0);
        for (long j = 0; j < dim; ++j) {
            const auto& entries = op.cols[j];
            for (const auto& [r, v] : entries) {
                // regular: W = Op^T slab, (Op^T X)[j,t] = sum_r Op[r,j] X[r,t]
                // transposed: W = Op slab, (Op X)[r,t] = sum_j Op[r,j] X[j,t]
                const long from = transpose_op ? r : j;
                const long x = transpose_op ? j : r;
                for (long t = 0; t < nt; ++t)
                    W[from + static_cast<std::size_t>(dim) * t] +=
                        v * slab[x + static_cast<std::size_t>(dim) * t];
            }
        }
        std::vector<double> rows(static_cast<std::size_t>(nt) * dim, 0.0);
        gemm('T', 'N', static_cast<int>(nt), static_cast<int>(dim), static_cast<int>(dim), 1.0,
             W.data(), static_cast<int>(dim), V, static_cast<int>(dim), 0.0, rows.data(),
             static_cast<int>(nt));
        return rows; // column-major nt x dim
    };

    od.rows = eigen_rows(false);
    if (!symmetric) od.rows_t = eigen_rows(true);

    if (dim <= SpectralData::full_matrix_limit) {
        // full = V^T (Op V)
        std::vector<double> OV(static_cast<std::size_t>(dim) * dim, 0.0);
        for (long j = 0; j < dim; ++j)
            for (const auto& [r, v] : op.cols[j])
                for (long c = 0; c < dim; ++c)
                    OV[r + static_cast<std::size_t>(dim) * c] +=
                        v * V[j + static_cast<std::size_t>(dim) * c];
        // careful: (Op V)[r, c] = sum_j Op[r, j] V[j, c]
        od.full.assign(static_cast<std::size_t>(dim) * dim, 0.0);
        gemm('T', 'N', static_cast<int>(dim), static_cast<int>(dim), static_cast<int>(dim), 1.0,
             V, static_cast<int>(dim), OV.data(), static_cast<int>(dim), 0.0, od.full.data(),
             static_cast<int>(dim));
    }
    data.ops_[name] = std::move(od);
}

void register_operator(SpectralData& data, const Model& model, const std::string& name) {
    register_operator(data, name, model.operators.at(name));
}

// ---------- Lehmann correlator ----------

CorrelatorSeries lehmann_correlator(const SpectralData& data, const std::string& opA,
                                    const std::string& opB, const MatsubaraGrid& grid) {
    if (std::abs(grid.beta() - data.beta_) > 1e-12 * std::max(1.0, data.beta_))
        throw domain_error("lehmann_correlator: grid beta does not match spectral data");
    const auto& A = data.ops_.at(opA);
    const auto& B = data.ops_.at(opB);
    const double xi = grid.statistics() == Statistics::bosonic ? 1.0 : -1.0;
    const long dim = data.dim_;
    const long nt = static_cast<long>(data.thermal_.size());
    const double zs = data.z_shifted_;
    const double escale = std::max(1.0, std::abs(data.energies_.back() - data.energies_.front()));
    const double deg_tol = 1e-12 * escale;

    // thermal rank lookup (therm' < m skipping)
    std::vector<long> rank(dim, -1);
    for (long t = 0; t < nt; ++t) rank[data.thermal_[t]] = t;

    CorrelatorSeries out(grid, "lehmann(" + opA + "," + opB + ")");
    out.operator_statistics = grid.statistics();
    out.conj_symmetric = opA == opB && A.symmetric;

    parallel_for(grid.size(), [&](std::size_t fi) {
        const double wn = grid.frequencies()[fi];
        const cdouble iw(0.0, wn);
        const bool zero_freq = std::abs(wn) < 1e-300;
        cdouble acc = 0.0;
        for (long t = 0; t < nt; ++t) {
            const long m = data.thermal_[t];
            const double wm = data.weights_[m];
            const double Em = data.energies_[m];
            const double* arow = A.rows.data() + t; // column-major nt x dim, stride nt
            const double* brow = B.rows.data() + t;
            const double* arow_t = A.symmetric ? arow : A.rows_t.data() + t;
            const double* brow_t = B.symmetric ? brow : B.rows_t.data() + t;
            for (long mp = 0; mp < dim; ++mp) {
                const long rk = rank[mp];
                if (rk >= 0 && rk < t) continue; // pair handled from the other side
                const double ab = arow[nt * mp] * brow_t[nt * mp];  // A_mm' B_m'm
                const double ba = arow_t[nt * mp] * brow[nt * mp];  // A_m'm B_mm'
                if (ab == 0.0 && ba == 0.0) continue;
                const double wmp = data.weights_[mp];
                const double delta = data.energies_[mp] - Em;
                const bool same = mp == m;
                if (std::abs(delta) <= deg_tol && xi > 0.0 && zero_freq) {
                    // analytic limit of the bosonic zero-frequency degenerate term
                    acc += -data.beta_ / zs * wm * ab;
                    if (!same) acc += -data.beta_ / zs * wmp * ba;
                } else {
                    acc += ab * (wm - xi * wmp) / zs / (iw - delta);
                    if (!same) acc += ba * (wmp - xi * wm) / zs / (iw + delta);
                }
            }
        }
        out.values[fi] = acc;
    });
    return out;
}

// ---------- Wick residual ----------

namespace {

// <T O(t1) O(t2)> via the full eigenbasis matrix (small systems)
double two_point(const SpectralData& d, const std::vector<double>& O, double t1, double t2) {
    const double ta = std::max(t1, t2), tb = std::min(t1, t2);
    const long dim = d.dim();
    const auto& E = d.energies();
    const double e0 = E.front();
    double acc = 0.0;
    for (long m = 0; m < dim; ++m) {
        const double wa = std::exp(-(E[m] - e0) * (d.beta() - ta + tb));
        if (wa < 1e-300) continue;
        double inner = 0.0;
        for (long n = 0; n < dim; ++n) {
            const double el = O[m + static_cast<std::size_t>(dim) * n] *
                              O[n + static_cast<std::size_t>(dim) * m];
            if (el == 0.0) continue;
            inner += el * std::exp(-(E[n] - e0) * (ta - tb));
        }
        acc += wa * inner;
    }
    return acc / d.partition_shifted();
}

} // namespace

cdouble wick_residual(const SpectralData& data, const std::string& op,
                      const std::array<double, 4>& taus) {
    const auto& od = data.ops_.at(op);
    if (od.full.empty())
        throw domain_error("wick_residual: needs the full eigenbasis matrix (dim <= " +
                           std::to_string(SpectralData::full_matrix_limit) + ")");
    for (double t : taus)
        if (!(t > 0.0 && t < data.beta()))
            throw domain_error("wick_residual: times must lie in (0, beta)");
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (std::abs(taus[i] - taus[j]) < 1e-12)
                throw domain_error("wick_residual: coincident times (ordering ambiguous)");

    const long dim = data.dim();
    const auto& O = od.full;
    // mean-free requirement
    double mean = 0.0, scale = 0.0;
    for (long m = 0; m < dim; ++m) {
        mean += data.weight(m) * O[m + static_cast<std::size_t>(dim) * m];
        scale = std::max(scale, std::abs(O[m + static_cast<std::size_t>(dim) * m]));
    }
    for (std::size_t k = 0; k < O.size(); ++k) scale = std::max(scale, std::abs(O[k]));
    mean /= data.partition_shifted();
    if (std::abs(mean) > 1e-8 * std::max(1.0, scale))
        throw domain_error("wick_residual: operator is not mean-free (<O> = " +
                           std::to_string(mean) + ")");

    // sorted descending: <T O...O> = Tr[e^{-bH} O(ta)O(tb)O(tc)O(td)] / Z
    std::array<double, 4> ts = taus;
    std::sort(ts.begin(), ts.end(), std::greater<>());
    const auto& E = data.energies();
    const double e0 = E.front();
    const double beta = data.beta();

    auto weights = [&](double interval) {
        std::vector<double> w(dim);
        for (long m = 0; m < dim; ++m) w[m] = std::exp(-(E[m] - e0) * interval);
        return w;
    };
    const auto wa = weights(beta - ts[0] + ts[3]);
    const auto wb = weights(ts[0] - ts[1]);
    const auto wc = weights(ts[1] - ts[2]);
    const auto wd = weights(ts[2] - ts[3]);

    // T1 = (O diag(wb)) (O diag(wc)); T2 = T1 (O diag(wd)); four = tr(diag(wa) T2 O)/Z
    auto scale_cols = [&](const std::vector<double>& M, const std::vector<double>& w) {
        std::vector<double> out(M.size());
        for (long j = 0; j < dim; ++j)
            for (long i = 0; i < dim; ++i)
                out[i + static_cast<std::size_t>(dim) * j] =
                    M[i + static_cast<std::size_t>(dim) * j] * w[j];
        return out;
    };
    auto matmul = [&](const std::vector<double>& A, const std::vector<double>& B) {
        std::vector<double> C(static_cast<std::size_t>(dim) * dim, 0.0);
        gemm('N', 'N', static_cast<int>(dim), static_cast<int>(dim), static_cast<int>(dim), 1.0,
             A.data(), static_cast<int>(dim), B.data(), static_cast<int>(dim), 0.0, C.data(),
             static_cast<int>(dim));
        return C;
    };
    const auto T1 = matmul(scale_cols(O, wb), scale_cols(O, wc));
    const auto T2 = matmul(T1, scale_cols(O, wd));
    double four = 0.0;
    for (long m = 0; m < dim; ++m) {
        double diag = 0.0;
        for (long q = 0; q < dim; ++q)
            diag += T2[m + static_cast<std::size_t>(dim) * q] *
                    O[q + static_cast<std::size_t>(dim) * m];
        four += wa[m] * diag;
    }
    four /= data.partition_shifted();

    const double c12 = two_point(data, O, taus[0], taus[1]);
    const double c34 = two_point(data, O, taus[2], taus[3]);
    const double c13 = two_point(data, O, taus[0], taus[2]);
    const double c24 = two_point(data, O, taus[1], taus[3]);
    const double c14 = two_point(data, O, taus[0], taus[3]);
    const double c23 = two_point(data, O, taus[1], taus[2]);
    return cdouble(four - (c12 * c34 + c13 * c24 + c14 * c23), 0.0);
}

// ---------- readout experiment ----------

ReadoutResult readout_experiment(const SystemSpec& spec, const MatsubaraGrid& grid,
                                 double report_tolerance) {
    spec.validate();
    if (grid.statistics() != Statistics::bosonic)
        throw statistics_error("readout_experiment: quadrature/density readout needs a bosonic grid");
    if (std::abs(grid.beta() - spec.beta) > 1e-12 * spec.beta)
        throw domain_error("readout_experiment: grid beta does not match the system");

    ReadoutResult res{DressedSet{}, CorrelatorSeries(grid), ComparisonReport{}};

    // D_R0: bare cavity within the same oracle
    {
        SystemSpec bare = spec;
        bare.coupling.lambda = 0.0;
        std::get<DiscreteBath>(bare.detector.bath).modes.clear();
        Model m = build_hamiltonian(bare, Part::detector_and_bath);
        SpectralData d = diagonalize_dense(std::move(m.H), m.dim(), spec.beta);
        register_operator(d, m, "Gamma_R");
        auto s = lehmann_correlator(d, "Gamma_R", "Gamma_R", grid);
        s.label = "D_R0";
        res.set.D_R0 = std::move(s);
    }

    // D_RB: cavity + bath, simulator decoupled
    {
        Model m = build_hamiltonian(spec, Part::detector_and_bath);
        SpectralData d = diagonalize_dense(std::move(m.H), m.dim(), spec.beta);
        register_operator(d, m, "Gamma_R");
        auto s = lehmann_correlator(d, "Gamma_R", "Gamma_R", grid);
        s.label = "D_RB";
        res.set.D_RB = std::move(s);
    }

    // C_S0: simulator alone
    {
        Model m = build_hamiltonian(spec, Part::simulator_alone);
        SpectralData d = diagonalize_dense(std::move(m.H), m.dim(), spec.beta);
        register_operator(d, m, "O_S");
        auto s = lehmann_correlator(d, "O_S", "O_S", grid);
        s.label = "C_S0";
        res.set.C_S0 = std::move(s);
    }

    // D_R (and C_S for the oscillator scenario) in the full coupled system
    {
        Model m = build_hamiltonian(spec, Part::full);
        SpectralData d = diagonalize_dense(std::move(m.H), m.dim(), spec.beta);
        register_operator(d, m, "Gamma_R");
        if (spec.is_oscillator()) register_operator(d, m, "O_S");
        d.release_basis();
        for (const auto& [k, v] : m.provenance) res.set.provenance[k] = v;
        auto s = lehmann_correlator(d, "Gamma_R", "Gamma_R", grid);
        s.label = "D_R";
        res.set.D_R = std::move(s);
        if (spec.is_oscillator()) {
            auto cs = lehmann_correlator(d, "O_S", "O_S", grid);
            cs.label = "C_S";
            res.set.C_S = std::move(cs);
        }
    }

    res.extracted = extract(*res.set.D_RB, *res.set.D_R, spec.coupling.lambda);
    res.extraction_report =
        compare_series(res.extracted, *res.set.C_S0, "oracle_extraction", report_tolerance);
    res.set.provenance["beta"] = std::to_string(spec.beta);
    res.set.provenance["lambda"] = std::to_string(spec.coupling.lambda);
    return res;
}

void check_truncation(const SystemSpec& spec, const MatsubaraGrid& grid, double tolerance,
                      int bump) {
    const ReadoutResult base = readout_experiment(spec, grid);
    const ResolvedCutoffs cut = resolve_cutoffs(spec);

    auto max_rel = [](const CorrelatorSeries& a, const CorrelatorSeries& b) {
        double r = 0.0;
        for (int i = 0; i < a.size(); ++i) {
            const double mag = std::max(std::abs(b.values[i]), 1e-300);
            r = std::max(r, std::abs(a.values[i] - b.values[i]) / mag);
        }
        return r;
    };

    // one variant per truncation field: cavity, bath (shared), oscillator
    std::vector<SystemSpec> variants;
    {
        SystemSpec s = spec;
        s.truncation.n_max_cavity = cut.cavity + bump;
        variants.push_back(s);
    }
    if (!cut.bath.empty()) {
        SystemSpec s = spec;
        s.truncation.n_max_bath_mode =
            *std::max_element(cut.bath.begin(), cut.bath.end()) + bump;
        variants.push_back(s);
    }
    if (spec.is_oscillator()) {
        SystemSpec s = spec;
        s.truncation.n_max_oscillator = cut.oscillator + bump;
        variants.push_back(s);
    }
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const ReadoutResult r = readout_experiment(variants[v], grid);
        double worst = 0.0;
        worst = std::max(worst, max_rel(*r.set.D_RB, *base.set.D_RB));
        worst = std::max(worst, max_rel(*r.set.D_R, *base.set.D_R));
        worst = std::max(worst, max_rel(*r.set.C_S0, *base.set.C_S0));
        worst = std::max(worst, max_rel(r.extracted, base.extracted));
        if (worst > tolerance)
            throw convergence_error("check_truncation: variant " + std::to_string(v) +
                                    " moved a correlator by " + std::to_string(worst) +
                                    " (> " + std::to_string(tolerance) + ")");
    }
}

} // namespace qsread
