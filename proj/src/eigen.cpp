#include "ptflat/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ptflat/error.hpp"
#include "ptflat/random.hpp"

namespace ptflat {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Single-linkage radius (relative to ||H||_F) for defective-cluster search.
constexpr double kDefectRadius = 1e-5;
// Clusters tighter than this (relative) are left alone.
constexpr double kDefectFloor = 1e3 * kEps;
// sigma_min / sigma_max of cluster vectors below which a cluster counts as defective.
constexpr double kDependentVectors = 1e-4;
// Degenerate clusters for eigenvector orthogonalization.
constexpr double kDegenerateRadius = 1e-8;

void check_input(const CMatrix& m) {
    if (m.rows() != m.cols()) {
        throw InvalidArgument("eigen solver needs a square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (m.rows() == 0) throw InvalidArgument("eigen solver needs dimension >= 1");
    if (!m.allFinite()) throw InvalidArgument("matrix has non-finite entries");
}

struct Schur {
    CMatrix t;               // upper triangular
    std::optional<CMatrix> q;  // unitary, B = Q T Q^H
    std::vector<cplx> w;
};

// Upper Hessenberg form of `a` (in place); Q is returned when requested.
std::optional<CMatrix> reduce_to_hessenberg(CMatrix& a, bool want_q) {
    const auto n = static_cast<lapack_int>(a.rows());
    std::vector<cplx> tau(static_cast<std::size_t>(std::max<lapack_int>(1, n - 1)));
    lapack_int info = LAPACKE_zgehrd(LAPACK_COL_MAJOR, n, 1, n, a.data(), n, tau.data());
    if (info != 0) throw Error("zgehrd failed with info " + std::to_string(info));
    std::optional<CMatrix> q;
    if (want_q) {
        q = a;
        info = LAPACKE_zunghr(LAPACK_COL_MAJOR, n, 1, n, q->data(), n, tau.data());
        if (info != 0) throw Error("zunghr failed with info " + std::to_string(info));
    }
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = j + 2; i < a.rows(); ++i) a(i, j) = 0.0;
    }
    return q;
}

// Shifted QR iteration on a Hessenberg matrix. job 'E' = eigenvalues only,
// 'S' = Schur form T (left in `h`).
std::vector<cplx> hessenberg_qr(CMatrix& h, char job, CMatrix* z) {
    const auto n = static_cast<lapack_int>(h.rows());
    std::vector<cplx> w(static_cast<std::size_t>(n));
    cplx dummy{};
    const lapack_int info =
        LAPACKE_zhseqr(LAPACK_COL_MAJOR, job, z ? 'V' : 'N', n, 1, n, h.data(), n, w.data(),
                       z ? z->data() : &dummy, z ? n : 1);
    if (info > 0) {
        throw ConvergenceError("shifted QR iteration did not converge: eigenvalue index " +
                               std::to_string(info) + " of " + std::to_string(n) +
                               " unresolved after the iteration cap");
    }
    if (info < 0) throw Error("zhseqr rejected argument " + std::to_string(-info));
    return w;
}

CMatrix apply_balancing(const CMatrix& m, const Eigen::VectorXd& d) {
    CMatrix b = m;
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, j) *= d(j) / d(i);
    }
    return b;
}

CVector start_vector(Eigen::Index n, std::uint64_t seed) {
    SplitMix64 rng(0x5eed0000ULL + seed);
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(rng.symmetric(), rng.symmetric());
    return v / v.norm();
}

// In-place solve of (T - shift I) y = y for upper-triangular T. Pivots
// smaller than `tiny` are replaced by `tiny`; the partial solution is
// rescaled whenever it threatens to overflow (only its direction matters).
void solve_shifted_upper(const CMatrix& t, cplx shift, double tiny, CVector& y) {
    constexpr double big = 1e100;
    for (Eigen::Index i = t.rows() - 1; i >= 0; --i) {
        cplx d = t(i, i) - shift;
        if (std::abs(d) < tiny) d = tiny;
        cplx v = y(i) / d;
        if (std::abs(v) > big) {
            const double s = 1.0 / std::abs(v);
            y *= s;
            v *= s;
        }
        y(i) = v;
        if (i > 0) y.head(i) -= v * t.col(i).head(i);
    }
}

void orthogonalize(CVector& v, const std::vector<CVector>& basis) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& u : basis) v -= u.dot(v) * u;
    }
}

double diameter(const std::vector<cplx>& values, const std::vector<std::size_t>& members) {
    double d = 0.0;
    for (auto i : members) {
        for (auto j : members) d = std::max(d, std::abs(values[i] - values[j]));
    }
    return d;
}

// Connected components of the graph |lambda_i - lambda_j| <= radius.
std::vector<std::vector<std::size_t>> link_clusters(const std::vector<cplx>& values,
                                                    double radius) {
    const auto n = values.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    std::vector<std::size_t> by_re(n);
    std::iota(by_re.begin(), by_re.end(), 0);
    std::sort(by_re.begin(), by_re.end(),
              [&](auto a, auto b) { return values[a].real() < values[b].real(); });
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto i = by_re[a], j = by_re[b];
            if (values[j].real() - values[i].real() > radius) break;
            if (std::abs(values[i] - values[j]) <= radius) parent[find(i)] = find(j);
        }
    }
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& g : groups) {
        if (!g.empty()) out.push_back(std::move(g));
    }
    return out;
}

std::vector<std::vector<std::size_t>> defect_candidates(const std::vector<cplx>& values,
                                                        double norm) {
    std::vector<std::vector<std::size_t>> out;
    for (auto& c : link_clusters(values, kDefectRadius * norm)) {
        if (c.size() < 2) continue;
        const double d = diameter(values, c);
        if (d > kDefectFloor * norm && d <= kDefectRadius * norm) out.push_back(std::move(c));
    }
    return out;
}

// A perturbed Jordan block of size m splits into an eps^(1/m) circle whose
// eigenvectors are nearly parallel; the cluster mean stays accurate to O(eps).
void collapse_defective(std::vector<cplx>& values, const CMatrix& t, double norm,
                        const std::vector<std::vector<std::size_t>>& candidates) {
    const double tiny = kEps * norm;
    for (const auto& c : candidates) {
        CMatrix y(t.rows(), static_cast<Eigen::Index>(c.size()));
        for (std::size_t l = 0; l < c.size(); ++l) {
            CVector v = start_vector(t.rows(), c[l]);
            for (int it = 0; it < 2; ++it) {
                solve_shifted_upper(t, values[c[l]], tiny, v);
                v.normalize();
            }
            y.col(static_cast<Eigen::Index>(l)) = v;
        }
        Eigen::JacobiSVD<CMatrix> svd(y);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) < kDependentVectors * s(0)) {
            cplx mean = 0.0;
            for (auto i : c) mean += values[i];
            mean /= static_cast<double>(c.size());
            for (auto i : c) values[i] = mean;
        }
    }
}

std::vector<std::size_t> canonical_order(const std::vector<cplx>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return canonical_less(values[a], values[b]); });
    return order;
}

double residual(const CMatrix& m, const CVector& x, cplx lambda) {
    return (m * x - lambda * x).norm();
}

} // namespace

bool canonical_less(cplx lhs, cplx rhs) {
    if (lhs.real() != rhs.real()) return lhs.real() < rhs.real();
    return lhs.imag() < rhs.imag();
}

Eigen::VectorXd balancing_scale(const CMatrix& m) {
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    const auto n = m.rows();
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    CMatrix b = m;
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(b(j, i).real()) + std::abs(b(j, i).imag());
                r += std::abs(b(i, j).real()) + std::abs(b(i, j).imag());
            }
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0;
            double g = r / radix;
            while (c < g && f < 1e150) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g && f > 1e-150) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                d(i) *= f;
                b.row(i) /= f;
                b.col(i) *= f;
            }
        }
        if (done) break;
    }
    return d;
}

EigenSet eigenvalues(const CMatrix& m, const EigenOptions& options) {
    check_input(m);
    EigenSet out;
    out.matrix_norm = m.norm();
    if (m.rows() == 1) {
        out.values = {m(0, 0)};
        return out;
    }
    const Eigen::VectorXd d = balancing_scale(m);
    CMatrix h = apply_balancing(m, d);
    reduce_to_hessenberg(h, false);
    CMatrix work = h;
    auto values = hessenberg_qr(work, 'E', nullptr);

    if (options.refine_defective && out.matrix_norm > 0.0) {
        if (!defect_candidates(values, out.matrix_norm).empty()) {
            work = h;
            values = hessenberg_qr(work, 'S', nullptr);
            collapse_defective(values, work, out.matrix_norm,
                               defect_candidates(values, out.matrix_norm));
        }
    }
    for (auto i : canonical_order(values)) out.values.push_back(values[i]);
    return out;
}

EigenSet eigenpairs(const CMatrix& m, const EigenOptions& options) {
    check_input(m);
    EigenSet out;
    const double norm = m.norm();
    out.matrix_norm = norm;
    const auto n = m.rows();

    if (norm == 0.0) {
        out.values.assign(static_cast<std::size_t>(n), cplx(0.0));
        out.vectors = CMatrix::Identity(n, n);
        out.residuals.assign(static_cast<std::size_t>(n), 0.0);
        return out;
    }

    const Eigen::VectorXd d = balancing_scale(m);
    CMatrix t = apply_balancing(m, d);
    CMatrix q = CMatrix::Identity(n, n);
    if (n > 1) {
        q = *reduce_to_hessenberg(t, true);
        hessenberg_qr(t, 'S', &q);
    }
    std::vector<cplx> values(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = t(i, i);
    if (options.refine_defective) {
        collapse_defective(values, t, norm, defect_candidates(values, norm));
    }

    const auto order = canonical_order(values);
    for (auto i : order) out.values.push_back(values[i]);

    // Inverse iteration on T, one vector per value; degenerate clusters get
    // start vectors and iterates orthogonal to earlier members.
    const double tiny = kEps * norm;
    CMatrix y(n, n);
    for (const auto& cluster : link_clusters(out.values, kDegenerateRadius * norm)) {
        std::vector<std::size_t> members = cluster;
        std::sort(members.begin(), members.end());
        std::vector<CVector> accepted;
        for (auto j : members) {
            CVector v = start_vector(n, j);
            orthogonalize(v, accepted);
            v.normalize();
            for (int it = 0; it < 3; ++it) {
                solve_shifted_upper(t, out.values[j], tiny, v);
                v.normalize();
                if (!accepted.empty()) {
                    CVector w = v;
                    orthogonalize(w, accepted);
                    if (w.norm() > 1e-6) v = w.normalized();
                }
            }
            accepted.push_back(v);
            y.col(static_cast<Eigen::Index>(j)) = v;
        }
    }

    CMatrix x = q * y;
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) *= d(i);
    for (Eigen::Index j = 0; j < n; ++j) x.col(j).normalize();

    out.residuals.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        out.residuals[static_cast<std::size_t>(j)] =
            residual(m, x.col(j), out.values[static_cast<std::size_t>(j)]);
    }

    // Orthogonalize within degenerate clusters in the original basis; keep a
    // rotated vector only if it stays certified.
    const double tol = options.tol_residual * norm;
    for (const auto& cluster : link_clusters(out.values, kDegenerateRadius * norm)) {
        if (cluster.size() < 2) continue;
        std::vector<std::size_t> members = cluster;
        std::sort(members.begin(), members.end());
        std::vector<CVector> basis;
        for (auto j : members) {
            const auto col = static_cast<Eigen::Index>(j);
            CVector w = x.col(col);
            orthogonalize(w, basis);
            if (w.norm() > 1e-6) {
                w.normalize();
                const double r = residual(m, w, out.values[j]);
                if (r <= std::max(tol, out.residuals[j])) {
                    x.col(col) = w;
                    out.residuals[j] = r;
                }
            }
            basis.push_back(x.col(col));
            basis.back().normalize();
        }
    }

    // Fall back to inverse iteration on the original matrix for stragglers.
    for (Eigen::Index j = 0; j < n; ++j) {
        auto& r = out.residuals[static_cast<std::size_t>(j)];
        if (r <= tol) continue;
        const cplx lambda = out.values[static_cast<std::size_t>(j)];
        CMatrix shifted = m - lambda * CMatrix::Identity(n, n);
        shifted.diagonal().array() += cplx(tiny, 0.0);
        Eigen::PartialPivLU<CMatrix> lu(shifted);
        CVector v = x.col(j);
        for (int it = 0; it < 3 && r > tol; ++it) {
            v = lu.solve(v);
            v.normalize();
            r = residual(m, v, lambda);
        }
        if (r > tol) {
            throw ConvergenceError("eigenvector " + std::to_string(j) +
                                   " failed the residual certificate (" + std::to_string(r) +
                                   " > " + std::to_string(tol) + ")");
        }
        x.col(j) = v;
    }
    out.vectors = std::move(x);
    return out;
}

} // namespace ptflat
