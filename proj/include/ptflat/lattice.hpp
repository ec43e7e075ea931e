#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ptflat {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class LatticeKind { lieb, kagome, stub };

std::string_view to_string(LatticeKind kind);
std::optional<LatticeKind> lattice_kind_from_string(std::string_view name);

/// Nearest-neighbour bond. For inter-cell bonds `a` lives in cell n and `b`
/// in cell n+1; intra-cell bonds are undirected.
struct Bond {
    std::string a;
    std::string b;

    friend bool operator==(const Bond&, const Bond&) = default;
};

/// Geometry of a quasi-one-dimensional ribbon: the transverse unit cell,
/// its bonds and the uniform coupling V.
struct UnitCellSpec {
    std::string name;
    std::vector<std::string> sites;
    std::vector<Bond> intra_bonds;
    std::vector<Bond> inter_bonds;
    double coupling = 1.0;

    std::size_t size() const { return sites.size(); }
    std::optional<std::size_t> index_of(std::string_view label) const;
    /// Like index_of() but throws InvalidArgument for unknown labels.
    std::size_t require_index(std::string_view label) const;
};

/// Throws InvalidArgument if the cell breaks any structural invariant
/// (declared endpoints, no self/duplicate bonds, V > 0, connected ribbon).
void validate(const UnitCellSpec& cell);

/// Same cell with bonds in canonical order: intra bonds oriented by site
/// index and sorted, inter bonds sorted by (a, b) index.
UnitCellSpec canonicalized(const UnitCellSpec& cell);

/// Semantic equality: same name, sites (in order), coupling and bond sets.
bool equivalent(const UnitCellSpec& lhs, const UnitCellSpec& rhs);

enum class ProfileKind { cell_periodic, longitudinal_split };

std::string_view to_string(ProfileKind kind);

/// PT gain/loss pattern in units of rho. Positive multiplier = gain.
///
/// cell_periodic: every cell carries the same multipliers and `parity` is the
/// transverse mirror (an involution on labels; absent labels are fixed
/// points). longitudinal_split: +1 left of the ribbon's mirror plane, -1 to
/// the right, 0 on it; multipliers/parity are unused.
struct GainLossProfile {
    ProfileKind kind = ProfileKind::cell_periodic;
    std::map<std::string, double> multipliers;
    std::map<std::string, std::string> parity;

    double multiplier(const std::string& label) const;
    const std::string& partner(const std::string& label) const;
};

/// Throws InvalidArgument unless the profile is a valid PT pattern for
/// `cell`: labels exist, parity is an involution, multipliers are odd under
/// it and vanish on its fixed points.
void validate(const GainLossProfile& profile, const UnitCellSpec& cell);

bool equivalent(const GainLossProfile& lhs, const GainLossProfile& rhs,
                const UnitCellSpec& cell);

UnitCellSpec build_unit_cell(LatticeKind kind);
GainLossProfile build_gain_loss_profile(LatticeKind kind);

/// Cell-periodic profile with every multiplier zero and identity parity.
GainLossProfile neutral_profile();

/// e^{ik} evaluated as cos(pi x) + i sin(pi x), x = k/pi reduced to (-1, 1],
/// with exact values at multiples of pi/2.
cplx bloch_phase(double k);

struct BlochMatrix {
    double k = 0.0;
    CMatrix matrix;
};

/// M(k)_{ab} = V sum_{bonds a->b} e^{ikd} + i rho m_a delta_{ab}.
BlochMatrix bloch_matrix(const UnitCellSpec& cell, const GainLossProfile& profile,
                         double rho, double k);

enum class Boundary { open, periodic };

std::string_view to_string(Boundary boundary);
std::optional<Boundary> boundary_from_string(std::string_view name);

struct SiteRef {
    std::size_t cell = 0;
    std::string label;
};

/// Dense Hamiltonian of a finite ribbon. Row order is cell-major, sites in
/// declaration order; the longitudinal-split termination column (if any)
/// comes last as cell index n_cells.
struct RibbonHamiltonian {
    CMatrix matrix;
    std::size_t n_cells = 0;
    Boundary boundary = Boundary::open;
    std::vector<SiteRef> sites;
    std::map<std::pair<std::size_t, std::string>, std::size_t> site_index;
    std::vector<double> multipliers;
    UnitCellSpec cell;
    GainLossProfile profile;
    double rho = 0.0;

    std::size_t dimension() const { return sites.size(); }
    std::optional<std::size_t> index(std::size_t cell_index, const std::string& label) const;
};

RibbonHamiltonian build_ribbon(const UnitCellSpec& cell, const GainLossProfile& profile,
                               double rho, std::size_t n_cells, Boundary boundary);

/// Sites forming the extra column that closes a longitudinal-split ribbon
/// symmetrically: receivers of inter-cell bonds plus everything reachable
/// from them through intra bonds without passing an inter-bond source.
std::vector<std::string> termination_sites(const UnitCellSpec& cell);

struct PtViolation {
    std::size_t row = 0;
    std::size_t col = 0;
    cplx expected;  // conj(H(row', col')) with (row', col') the parity image
    cplx actual;
};

struct PtReport {
    bool symmetric = false;
    std::vector<std::size_t> permutation;
    std::vector<PtViolation> violations;  // capped at max_listed
    std::size_t violation_count = 0;

    static constexpr std::size_t max_listed = 64;
};

/// Compares P H P^{-1} with conj(H) entry by entry (exact equality).
/// Throws InvalidArgument if the profile's parity cannot be realized as a
/// permutation of the finite ribbon.
PtReport check_pt_symmetry(const RibbonHamiltonian& h);

std::string describe(const PtReport& report, const RibbonHamiltonian& h);

} // namespace ptflat
