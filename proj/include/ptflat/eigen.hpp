#pragma once

#include <optional>
#include <vector>

#include "ptflat/lattice.hpp"

namespace ptflat {

/// Eigenvalues (optionally eigenvectors) of a dense complex matrix in
/// canonical order: real part ascending, then imaginary part ascending.
struct EigenSet {
    std::vector<cplx> values;
    /// Column j is the unit-norm right eigenvector for values[j].
    std::optional<CMatrix> vectors;
    /// ||H v_j - lambda_j v_j||_2, filled together with `vectors`.
    std::vector<double> residuals;
    /// Frobenius norm of the decomposed matrix.
    double matrix_norm = 0.0;

    std::size_t size() const { return values.size(); }
    bool has_vectors() const { return vectors.has_value(); }
};

struct EigenOptions {
    /// Residual certificate: residual_j <= tol_residual * ||H||_F.
    double tol_residual = 1e-9;
    /// Collapse numerically defective clusters onto their mean.
    bool refine_defective = true;
};

bool canonical_less(cplx lhs, cplx rhs);

/// All n eigenvalues with multiplicity. Throws InvalidArgument for
/// non-square or non-finite input, ConvergenceError if QR iteration stalls.
EigenSet eigenvalues(const CMatrix& m, const EigenOptions& options = {});

/// Eigenvalues plus residual-certified unit eigenvectors. Vectors of
/// clusters with |lambda_i - lambda_j| <= 1e-8 ||H||_F are re-orthogonalized
/// where the eigenspace allows it.
EigenSet eigenpairs(const CMatrix& m, const EigenOptions& options = {});

/// Power-of-two diagonal scaling D such that D^{-1} M D has comparable row
/// and column norms. Returns the diagonal of D.
Eigen::VectorXd balancing_scale(const CMatrix& m);

} // namespace ptflat
