#include "ptflat/spectra.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <thread>

#include "ptflat/error.hpp"

namespace ptflat {

namespace {

void sort_canonical(std::vector<cplx>& values) {
    std::sort(values.begin(), values.end(), canonical_less);
}

// +-sqrt(radicand) with the principal branch.
std::pair<cplx, cplx> plus_minus_sqrt(double radicand) {
    const cplx r = std::sqrt(cplx(radicand, 0.0));
    return {r, -r};
}

double bottleneck_bruteforce(const std::vector<cplx>& lhs, const std::vector<cplx>& rhs) {
    std::vector<std::size_t> perm(rhs.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (std::size_t i = 0; i < lhs.size() && worst < best; ++i) {
            worst = std::max(worst, std::abs(lhs[i] - rhs[perm[i]]));
        }
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

std::vector<cplx> analytic_bands(LatticeKind kind, double rho, double k, double coupling) {
    if (!std::isfinite(rho) || rho < 0.0) throw InvalidArgument("rho must be finite and >= 0");
    const double c = bloch_phase(k).real();
    const double v2 = coupling * coupling;
    std::vector<cplx> out;
    switch (kind) {
    case LatticeKind::lieb: {
        const auto [a1, a2] = plus_minus_sqrt(2.0 * (1.0 + c) * v2 - rho * rho);
        const auto [b1, b2] = plus_minus_sqrt((4.0 + 2.0 * c) * v2 - rho * rho);
        out = {0.0, a1, a2, b1, b2};
        break;
    }
    case LatticeKind::kagome: {
        if (rho != 0.0) {
            throw Unsupported("kagome bands have no closed form with gain/loss (rho != 0)");
        }
        const auto [a1, a2] = plus_minus_sqrt(2.0 * (1.0 + c));
        const double s = std::sqrt(3.0 + 2.0 * c);
        out = {-2.0 * coupling, a1 * coupling, a2 * coupling, (1.0 + s) * coupling,
               (1.0 - s) * coupling};
        break;
    }
    case LatticeKind::stub: {
        if (rho != 0.0) {
            throw Unsupported("stub bands have no closed form with gain/loss (rho != 0)");
        }
        const double s = std::sqrt(3.0 + 2.0 * c) * coupling;
        out = {0.0, s, -s};
        break;
    }
    }
    sort_canonical(out);
    return out;
}

namespace {

std::vector<double> k_grid(std::size_t k_count) {
    if (k_count < 2) throw InvalidArgument("k_count must be >= 2");
    std::vector<double> grid(k_count);
    for (std::size_t m = 0; m < k_count; ++m) {
        grid[m] = std::numbers::pi *
                  (2.0 * static_cast<double>(m) / static_cast<double>(k_count) - 1.0);
    }
    return grid;
}

} // namespace

BandSet band_structure(const UnitCellSpec& cell, const GainLossProfile& profile, double rho,
                       std::size_t k_count) {
    BandSet out;
    out.source = BandSource::bloch;
    out.k_grid = k_grid(k_count);
    out.bands.reserve(k_count);
    for (double k : out.k_grid) {
        out.bands.push_back(eigenvalues(bloch_matrix(cell, profile, rho, k).matrix).values);
    }
    return out;
}

BandSet analytic_band_structure(LatticeKind kind, double rho, std::size_t k_count,
                                double coupling) {
    BandSet out;
    out.source = BandSource::analytic;
    out.k_grid = k_grid(k_count);
    for (double k : out.k_grid) out.bands.push_back(analytic_bands(kind, rho, k, coupling));
    return out;
}

double participation_ratio(const CVector& v) {
    if (v.size() == 0) throw InvalidArgument("participation ratio of an empty vector");
    const double scale = v.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw InvalidArgument("participation ratio of a zero vector");
    double s2 = 0.0, s4 = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::norm(v(i) / scale);
        s2 += a;
        s4 += a * a;
    }
    return s2 * s2 / s4;
}

double stable_fraction(const EigenSet& es, double tol_stable) {
    if (es.values.empty()) throw InvalidArgument("stable fraction of an empty spectrum");
    const auto stable = std::count_if(es.values.begin(), es.values.end(),
                                      [&](cplx l) { return std::abs(l.imag()) <= tol_stable; });
    return static_cast<double>(stable) / static_cast<double>(es.values.size());
}

double lieb_stable_fraction_oracle(double rho) {
    if (!(rho >= 0.0)) throw InvalidArgument("rho must be >= 0");
    const double pi = std::numbers::pi;
    const double r2 = rho * rho;
    // 2(1 + cos k) > rho^2  <=>  cos k > rho^2/2 - 1
    const double g1 = rho <= 2.0 ? std::acos(std::clamp(r2 / 2.0 - 1.0, -1.0, 1.0)) / pi : 0.0;
    // 4 + 2 cos k > rho^2  <=>  cos k > (rho^2 - 4)/2
    double g2 = 0.0;
    if (rho <= std::sqrt(2.0)) {
        g2 = 1.0;
    } else if (rho <= std::sqrt(6.0)) {
        g2 = std::acos(std::clamp((r2 - 4.0) / 2.0, -1.0, 1.0)) / pi;
    }
    return (1.0 + 2.0 * g1 + 2.0 * g2) / 5.0;
}

std::size_t flat_band_multiplicity(const EigenSet& es, cplx value, double tol) {
    return static_cast<std::size_t>(std::count_if(
        es.values.begin(), es.values.end(), [&](cplx l) { return std::abs(l - value) <= tol; }));
}

std::optional<double> average_pr_stable(const EigenSet& es, double tol_stable) {
    if (!es.vectors) throw InvalidArgument("average_pr_stable needs eigenvectors");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < es.values.size(); ++j) {
        if (std::abs(es.values[j].imag()) > tol_stable) continue;
        sum += participation_ratio(es.vectors->col(static_cast<Eigen::Index>(j)));
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::optional<double> find_flat_band(const UnitCellSpec& cell) {
    const auto profile = neutral_profile();
    const std::vector<double> probes{0.3, 1.1, 2.3, -0.7};
    std::vector<std::vector<cplx>> spectra;
    for (double k : probes) spectra.push_back(eigenvalues(bloch_matrix(cell, profile, 0.0, k).matrix).values);
    constexpr double tol = 1e-9;
    for (cplx candidate : spectra.front()) {
        const bool everywhere = std::all_of(spectra.begin() + 1, spectra.end(), [&](const auto& s) {
            return std::any_of(s.begin(), s.end(),
                               [&](cplx l) { return std::abs(l - candidate) <= tol * cell.coupling; });
        });
        if (everywhere) return std::round(candidate.real() * 1e9) / 1e9;
    }
    return std::nullopt;
}

ScanResult scan_rho(const UnitCellSpec& cell, const GainLossProfile& profile, std::size_t n_cells,
                    Boundary boundary, const std::vector<double>& rho_grid,
                    const ScanOptions& options) {
    if (rho_grid.empty()) throw InvalidArgument("rho grid is empty");
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        if (!std::isfinite(rho_grid[i]) || rho_grid[i] < 0.0) {
            throw InvalidArgument("rho grid values must be finite and >= 0");
        }
        if (i > 0 && !(rho_grid[i] > rho_grid[i - 1])) {
            throw InvalidArgument("rho grid must be strictly increasing");
        }
    }
    ScanResult result;
    result.context = {cell.name, n_cells, boundary, options.tol_stable, options.flat_tol,
                      options.flat_value ? options.flat_value : find_flat_band(cell)};
    result.rows.resize(rho_grid.size());

    auto compute_row = [&](std::size_t i) {
        const double rho = rho_grid[i];
        const auto h = build_ribbon(cell, profile, rho, n_cells, boundary);
        const auto es = options.with_vectors ? eigenpairs(h.matrix) : eigenvalues(h.matrix);
        ScanRow row;
        row.rho = rho;
        row.stable_fraction = stable_fraction(es, options.tol_stable);
        if (options.with_vectors) row.avg_pr_stable = average_pr_stable(es, options.tol_stable);
        if (result.context.flat_value) {
            row.flat_multiplicity =
                flat_band_multiplicity(es, *result.context.flat_value, options.flat_tol);
        }
        result.rows[i] = row;
    };

    unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rho_grid.size())));
    std::vector<std::exception_ptr> errors(rho_grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rho_grid.size(); i = next++) {
            try {
                compute_row(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return result;
}

std::vector<double> uniform_grid(double min, double max, double step) {
    if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step)) {
        throw InvalidArgument("grid bounds must be finite");
    }
    if (!(step > 0.0)) throw InvalidArgument("grid step must be > 0");
    if (max < min) throw InvalidArgument("grid max must be >= min");
    const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-6)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = min + static_cast<double>(i) * step;
    return grid;
}

double multiset_distance(const std::vector<cplx>& lhs, const std::vector<cplx>& rhs) {
    if (lhs.size() != rhs.size()) {
        throw InvalidArgument("multisets differ in size (" + std::to_string(lhs.size()) + " vs " +
                              std::to_string(rhs.size()) + ")");
    }
    if (lhs.empty()) return 0.0;
    if (lhs.size() <= 8) return bottleneck_bruteforce(lhs, rhs);

    struct Pair {
        double d;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(lhs.size() * rhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        for (std::size_t j = 0; j < rhs.size(); ++j) pairs.push_back({std::abs(lhs[i] - rhs[j]), i, j});
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
    std::vector<bool> used_l(lhs.size()), used_r(rhs.size());
    std::size_t matched = 0;
    double worst = 0.0;
    for (const auto& p : pairs) {
        if (used_l[p.i] || used_r[p.j]) continue;
        used_l[p.i] = used_r[p.j] = true;
        worst = std::max(worst, p.d);
        if (++matched == lhs.size()) break;
    }
    return worst;
}

} // namespace ptflat
