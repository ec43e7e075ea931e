#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ptflat/eigen.hpp"
#include "ptflat/lattice.hpp"

namespace ptflat {

/// Absolute stability / flat-band tolerance, in units of V.
inline constexpr double kDefaultTolerance = 1e-8;

enum class BandSource { bloch, analytic };

struct BandSet {
    std::vector<double> k_grid;
    std::vector<std::vector<cplx>> bands;  // per k, canonical order
    BandSource source = BandSource::bloch;
};

/// Closed-form bands with V = `coupling`. Lieb accepts any rho; kagome and
/// stub only rho = 0 (Unsupported otherwise). Principal square roots, so a
/// negative radicand yields a +-i pair. Canonical order.
std::vector<cplx> analytic_bands(LatticeKind kind, double rho, double k, double coupling = 1.0);

/// Bloch eigenvalues on k_m = -pi + 2 pi m / k_count, m = 0 .. k_count-1.
BandSet band_structure(const UnitCellSpec& cell, const GainLossProfile& profile, double rho,
                       std::size_t k_count);

/// Same grid evaluated with analytic_bands().
BandSet analytic_band_structure(LatticeKind kind, double rho, std::size_t k_count,
                                double coupling = 1.0);

/// (sum |c|^2)^2 / sum |c|^4. Throws InvalidArgument for a zero vector.
double participation_ratio(const CVector& v);

double stable_fraction(const EigenSet& es, double tol_stable = kDefaultTolerance);

/// Fraction of stable states of the infinite PT Lieb ribbon (V = 1): the
/// measure of k for which each radicand of the Lieb bands is positive,
/// weighted by the number of bands.
double lieb_stable_fraction_oracle(double rho);

std::size_t flat_band_multiplicity(const EigenSet& es, cplx value,
                                   double tol = kDefaultTolerance);

/// Mean participation ratio over eigenpairs with |Im lambda| <= tol_stable;
/// nullopt when there are none. Requires vectors.
std::optional<double> average_pr_stable(const EigenSet& es, double tol_stable = kDefaultTolerance);

/// Flat band of the Hermitian (rho = 0) Bloch problem: an eigenvalue shared
/// by every probe momentum. nullopt if the cell has none.
std::optional<double> find_flat_band(const UnitCellSpec& cell);

struct ScanRow {
    double rho = 0.0;
    double stable_fraction = 0.0;
    std::optional<double> avg_pr_stable;
    std::size_t flat_multiplicity = 0;
};

struct ScanContext {
    std::string lattice;
    std::size_t n_cells = 0;
    Boundary boundary = Boundary::open;
    double tol_stable = kDefaultTolerance;
    double flat_tol = kDefaultTolerance;
    std::optional<double> flat_value;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    ScanContext context;
};

struct ScanOptions {
    double tol_stable = kDefaultTolerance;
    double flat_tol = kDefaultTolerance;
    /// Defaults to find_flat_band(cell).
    std::optional<double> flat_value;
    /// Compute eigenvectors (needed for avg_pr_stable).
    bool with_vectors = true;
    /// 0 = hardware concurrency.
    unsigned threads = 0;
};

/// One row per rho: build ribbon, diagonalize, collect observables. Rows are
/// computed independently (possibly concurrently) and returned in grid order.
ScanResult scan_rho(const UnitCellSpec& cell, const GainLossProfile& profile, std::size_t n_cells,
                    Boundary boundary, const std::vector<double>& rho_grid,
                    const ScanOptions& options = {});

/// Inclusive uniform grid min, min+step, ... <= max (+ step/1e6 slack).
std::vector<double> uniform_grid(double min, double max, double step);

/// Largest |lhs_i - rhs_pi(i)| under greedy nearest matching. Both inputs
/// must have equal size.
double multiset_distance(const std::vector<cplx>& lhs, const std::vector<cplx>& rhs);

} // namespace ptflat
