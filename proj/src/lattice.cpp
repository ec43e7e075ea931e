#include "ptflat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include "ptflat/error.hpp"

namespace ptflat {

namespace {

const std::string& checked_label(const UnitCellSpec& cell, const std::string& label,
                                 std::string_view context) {
    if (!cell.index_of(label)) {
        throw InvalidArgument(std::string(context) + " references undeclared site '" + label +
                              "'");
    }
    return label;
}

// Smallest-index-first orientation for undirected bonds.
std::pair<std::size_t, std::size_t> oriented(const UnitCellSpec& cell, const Bond& bond) {
    auto a = cell.require_index(bond.a);
    auto b = cell.require_index(bond.b);
    return a <= b ? std::pair{a, b} : std::pair{b, a};
}

bool is_exact_half(double x) { return x == 0.0 || std::abs(x) == 0.5 || std::abs(x) == 1.0; }

} // namespace

std::string_view to_string(LatticeKind kind) {
    switch (kind) {
    case LatticeKind::lieb: return "lieb";
    case LatticeKind::kagome: return "kagome";
    case LatticeKind::stub: return "stub";
    }
    return "unknown";
}

std::optional<LatticeKind> lattice_kind_from_string(std::string_view name) {
    if (name == "lieb") return LatticeKind::lieb;
    if (name == "kagome") return LatticeKind::kagome;
    if (name == "stub") return LatticeKind::stub;
    return std::nullopt;
}

std::string_view to_string(ProfileKind kind) {
    return kind == ProfileKind::cell_periodic ? "cell-periodic" : "longitudinal-split";
}

std::string_view to_string(Boundary boundary) {
    return boundary == Boundary::open ? "open" : "periodic";
}

std::optional<Boundary> boundary_from_string(std::string_view name) {
    if (name == "open") return Boundary::open;
    if (name == "periodic") return Boundary::periodic;
    return std::nullopt;
}

std::optional<std::size_t> UnitCellSpec::index_of(std::string_view label) const {
    auto it = std::find(sites.begin(), sites.end(), label);
    if (it == sites.end()) return std::nullopt;
    return static_cast<std::size_t>(it - sites.begin());
}

std::size_t UnitCellSpec::require_index(std::string_view label) const {
    if (auto i = index_of(label)) return *i;
    throw InvalidArgument("unknown site '" + std::string(label) + "' in cell '" + name + "'");
}

void validate(const UnitCellSpec& cell) {
    if (cell.sites.empty()) throw InvalidArgument("unit cell '" + cell.name + "' has no sites");
    if (!(cell.coupling > 0.0) || !std::isfinite(cell.coupling)) {
        throw InvalidArgument("coupling must be a positive finite number");
    }
    std::set<std::string> seen;
    for (const auto& s : cell.sites) {
        if (s.empty()) throw InvalidArgument("empty site label");
        if (!seen.insert(s).second) throw InvalidArgument("duplicate site '" + s + "'");
    }

    std::set<std::pair<std::size_t, std::size_t>> intra;
    for (const auto& bond : cell.intra_bonds) {
        checked_label(cell, bond.a, "intra bond");
        checked_label(cell, bond.b, "intra bond");
        if (bond.a == bond.b) throw InvalidArgument("self-bond on site '" + bond.a + "'");
        if (!intra.insert(oriented(cell, bond)).second) {
            throw InvalidArgument("duplicate bond " + bond.a + "-" + bond.b);
        }
    }
    std::set<std::pair<std::size_t, std::size_t>> inter;
    for (const auto& bond : cell.inter_bonds) {
        checked_label(cell, bond.a, "inter bond");
        checked_label(cell, bond.b, "inter bond");
        if (!inter.insert({cell.require_index(bond.a), cell.require_index(bond.b)}).second) {
            throw InvalidArgument("duplicate inter-cell bond " + bond.a + "->" + bond.b + "'");
        }
    }

    // The infinite ribbon is connected iff the quotient graph is connected and
    // at least one bond crosses cells (any such bond closes a cycle of net
    // offset 1).
    if (cell.inter_bonds.empty()) {
        throw InvalidArgument("ribbon is disconnected along its axis: no inter-cell bonds");
    }
    const auto n = cell.size();
    std::vector<std::vector<std::size_t>> adj(n);
    auto link = [&](const Bond& b) {
        auto i = cell.require_index(b.a), j = cell.require_index(b.b);
        adj[i].push_back(j);
        adj[j].push_back(i);
    };
    for (const auto& b : cell.intra_bonds) link(b);
    for (const auto& b : cell.inter_bonds) link(b);
    std::vector<bool> reached(n, false);
    std::queue<std::size_t> todo;
    todo.push(0);
    reached[0] = true;
    while (!todo.empty()) {
        auto i = todo.front();
        todo.pop();
        for (auto j : adj[i]) {
            if (!reached[j]) {
                reached[j] = true;
                todo.push(j);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!reached[i]) {
            throw InvalidArgument("ribbon graph is disconnected: site '" + cell.sites[i] +
                                  "' is unreachable");
        }
    }
}

UnitCellSpec canonicalized(const UnitCellSpec& cell) {
    UnitCellSpec out = cell;
    for (auto& b : out.intra_bonds) {
        if (cell.require_index(b.a) > cell.require_index(b.b)) std::swap(b.a, b.b);
    }
    auto by_index = [&](const Bond& x, const Bond& y) {
        return std::pair{cell.require_index(x.a), cell.require_index(x.b)} <
               std::pair{cell.require_index(y.a), cell.require_index(y.b)};
    };
    std::sort(out.intra_bonds.begin(), out.intra_bonds.end(), by_index);
    std::sort(out.inter_bonds.begin(), out.inter_bonds.end(), by_index);
    return out;
}

bool equivalent(const UnitCellSpec& lhs, const UnitCellSpec& rhs) {
    if (lhs.name != rhs.name || lhs.sites != rhs.sites || lhs.coupling != rhs.coupling) {
        return false;
    }
    auto l = canonicalized(lhs);
    auto r = canonicalized(rhs);
    return l.intra_bonds == r.intra_bonds && l.inter_bonds == r.inter_bonds;
}

double GainLossProfile::multiplier(const std::string& label) const {
    auto it = multipliers.find(label);
    return it == multipliers.end() ? 0.0 : it->second;
}

const std::string& GainLossProfile::partner(const std::string& label) const {
    auto it = parity.find(label);
    return it == parity.end() ? label : it->second;
}

void validate(const GainLossProfile& profile, const UnitCellSpec& cell) {
    if (profile.kind == ProfileKind::longitudinal_split) return;
    for (const auto& [label, m] : profile.multipliers) {
        checked_label(cell, label, "gain/loss multiplier");
        if (!std::isfinite(m)) throw InvalidArgument("multiplier of '" + label + "' is not finite");
    }
    for (const auto& [from, to] : profile.parity) {
        checked_label(cell, from, "parity");
        checked_label(cell, to, "parity");
        if (profile.partner(to) != from) {
            throw InvalidArgument("parity is not an involution: " + from + "->" + to + " but " +
                                  to + "->" + profile.partner(to));
        }
    }
    for (const auto& site : cell.sites) {
        const auto& image = profile.partner(site);
        const double m = profile.multiplier(site);
        if (image == site && m != 0.0) {
            throw InvalidArgument("parity fixed point requires multiplier 0 (site '" + site + "')");
        }
        if (profile.multiplier(image) != -m) {
            throw InvalidArgument("multipliers are not odd under parity: " + site + " and " +
                                  image);
        }
    }
}

bool equivalent(const GainLossProfile& lhs, const GainLossProfile& rhs,
                const UnitCellSpec& cell) {
    if (lhs.kind != rhs.kind) return false;
    if (lhs.kind == ProfileKind::longitudinal_split) return true;
    return std::all_of(cell.sites.begin(), cell.sites.end(), [&](const std::string& s) {
        return lhs.multiplier(s) == rhs.multiplier(s) && lhs.partner(s) == rhs.partner(s);
    });
}

UnitCellSpec build_unit_cell(LatticeKind kind) {
    UnitCellSpec cell;
    cell.name = std::string(to_string(kind));
    switch (kind) {
    case LatticeKind::lieb:
        // bottom chain b-p-b'..., top chain t-q-t'..., rung b-r-t
        cell.sites = {"b", "p", "t", "q", "r"};
        cell.intra_bonds = {{"b", "p"}, {"t", "q"}, {"b", "r"}, {"t", "r"}};
        cell.inter_bonds = {{"p", "b"}, {"q", "t"}};
        break;
    case LatticeKind::kagome:
        // bowties sharing site 3
        cell.sites = {"1", "2", "3", "4", "5"};
        cell.intra_bonds = {{"1", "2"}, {"1", "3"}, {"2", "3"}, {"3", "4"}, {"3", "5"}, {"4", "5"}};
        cell.inter_bonds = {{"2", "1"}, {"5", "4"}};
        break;
    case LatticeKind::stub:
        cell.sites = {"A", "B", "C"};
        cell.intra_bonds = {{"A", "B"}, {"A", "C"}};
        cell.inter_bonds = {{"B", "A"}};
        break;
    }
    return cell;
}

GainLossProfile build_gain_loss_profile(LatticeKind kind) {
    GainLossProfile profile;
    switch (kind) {
    case LatticeKind::lieb:
        profile.multipliers = {{"b", 1.0}, {"p", -1.0}, {"t", -1.0}, {"q", 1.0}, {"r", 0.0}};
        profile.parity = {{"b", "t"}, {"t", "b"}, {"p", "q"}, {"q", "p"}};
        break;
    case LatticeKind::kagome:
        profile.multipliers = {{"1", 1.0}, {"2", 1.0}, {"3", 0.0}, {"4", -1.0}, {"5", -1.0}};
        profile.parity = {{"1", "4"}, {"4", "1"}, {"2", "5"}, {"5", "2"}};
        break;
    case LatticeKind::stub:
        profile.kind = ProfileKind::longitudinal_split;
        break;
    }
    return profile;
}

GainLossProfile neutral_profile() { return GainLossProfile{}; }

cplx bloch_phase(double k) {
    if (!std::isfinite(k)) throw InvalidArgument("Bloch momentum must be finite");
    double x = k / std::numbers::pi;
    x -= 2.0 * std::round(0.5 * x);  // x in [-1, 1]
    const double half = std::round(2.0 * x) / 2.0;
    if (std::abs(x - half) <= 4.0 * std::numeric_limits<double>::epsilon()) x = half;
    if (x == -1.0) x = 1.0;
    if (is_exact_half(x)) {
        if (x == 0.0) return {1.0, 0.0};
        if (x == 1.0) return {-1.0, 0.0};
        return {0.0, x > 0 ? 1.0 : -1.0};
    }
    const double angle = std::numbers::pi * x;
    return {std::cos(angle), std::sin(angle)};
}

BlochMatrix bloch_matrix(const UnitCellSpec& cell, const GainLossProfile& profile, double rho,
                         double k) {
    if (profile.kind != ProfileKind::cell_periodic) {
        throw InvalidArgument("longitudinal-split profiles have no Bloch form");
    }
    validate(cell);
    validate(profile, cell);
    const auto n = static_cast<Eigen::Index>(cell.size());
    const double v = cell.coupling;
    const cplx phase = bloch_phase(k);

    BlochMatrix out{k, CMatrix::Zero(n, n)};
    auto& m = out.matrix;
    for (const auto& bond : cell.intra_bonds) {
        auto a = static_cast<Eigen::Index>(cell.require_index(bond.a));
        auto b = static_cast<Eigen::Index>(cell.require_index(bond.b));
        m(a, b) += v;
        m(b, a) += v;
    }
    for (const auto& bond : cell.inter_bonds) {
        auto a = static_cast<Eigen::Index>(cell.require_index(bond.a));
        auto b = static_cast<Eigen::Index>(cell.require_index(bond.b));
        m(a, b) += v * phase;
        m(b, a) += v * std::conj(phase);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) += cplx(0.0, rho * profile.multiplier(cell.sites[static_cast<std::size_t>(i)]));
    }
    return out;
}

std::optional<std::size_t> RibbonHamiltonian::index(std::size_t cell_index,
                                                    const std::string& label) const {
    auto it = site_index.find({cell_index, label});
    if (it == site_index.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> termination_sites(const UnitCellSpec& cell) {
    std::set<std::string> sources, members;
    std::queue<std::string> todo;
    for (const auto& b : cell.inter_bonds) sources.insert(b.a);
    for (const auto& b : cell.inter_bonds) {
        if (members.insert(b.b).second) todo.push(b.b);
    }
    while (!todo.empty()) {
        auto s = todo.front();
        todo.pop();
        for (const auto& b : cell.intra_bonds) {
            const std::string* other = nullptr;
            if (b.a == s) other = &b.b;
            if (b.b == s) other = &b.a;
            if (other && !sources.contains(*other) && members.insert(*other).second) {
                todo.push(*other);
            }
        }
    }
    std::vector<std::string> out;
    for (const auto& s : cell.sites) {
        if (members.contains(s)) out.push_back(s);
    }
    return out;
}

namespace {

// Longitudinal column position: termination-type sites sit on even
// positions 2j, the remaining sites between columns at 2j+1.
std::size_t column_position(std::size_t cell_index, bool termination_type) {
    return 2 * cell_index + (termination_type ? 0 : 1);
}

} // namespace

RibbonHamiltonian build_ribbon(const UnitCellSpec& cell, const GainLossProfile& profile,
                               double rho, std::size_t n_cells, Boundary boundary) {
    validate(cell);
    validate(profile, cell);
    if (n_cells < 2) throw InvalidArgument("a ribbon needs at least 2 cells");
    if (!std::isfinite(rho) || rho < 0.0) throw InvalidArgument("rho must be finite and >= 0");
    const bool split = profile.kind == ProfileKind::longitudinal_split;
    if (split && boundary == Boundary::periodic) {
        throw InvalidArgument("longitudinal-split profile is not periodic; use open boundary");
    }

    RibbonHamiltonian h;
    h.n_cells = n_cells;
    h.boundary = boundary;
    h.cell = cell;
    h.profile = profile;
    h.rho = rho;

    const auto termination = split ? termination_sites(cell) : std::vector<std::string>{};
    const std::set<std::string> term_set(termination.begin(), termination.end());

    auto add_site = [&](std::size_t c, const std::string& label) {
        h.site_index[{c, label}] = h.sites.size();
        h.sites.push_back({c, label});
    };
    for (std::size_t c = 0; c < n_cells; ++c) {
        for (const auto& s : cell.sites) add_site(c, s);
    }
    for (const auto& s : termination) add_site(n_cells, s);

    const auto dim = static_cast<Eigen::Index>(h.sites.size());
    h.matrix = CMatrix::Zero(dim, dim);
    const double v = cell.coupling;
    auto couple = [&](std::size_t ca, const std::string& a, std::size_t cb, const std::string& b) {
        auto i = h.index(ca, a), j = h.index(cb, b);
        if (!i || !j) return;
        h.matrix(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j)) += v;
        h.matrix(static_cast<Eigen::Index>(*j), static_cast<Eigen::Index>(*i)) += v;
    };
    const std::size_t columns = split ? n_cells + 1 : n_cells;
    for (std::size_t c = 0; c < columns; ++c) {
        for (const auto& bond : cell.intra_bonds) couple(c, bond.a, c, bond.b);
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        std::size_t next = c + 1;
        if (next == n_cells) {
            if (boundary == Boundary::periodic) {
                next = 0;
            } else if (!split) {
                continue;
            }
        }
        for (const auto& bond : cell.inter_bonds) couple(c, bond.a, next, bond.b);
    }

    h.multipliers.assign(h.sites.size(), 0.0);
    for (std::size_t i = 0; i < h.sites.size(); ++i) {
        const auto& site = h.sites[i];
        double m = 0.0;
        if (split) {
            const auto pos = column_position(site.cell, term_set.contains(site.label));
            if (pos < n_cells) m = 1.0;
            if (pos > n_cells) m = -1.0;
        } else {
            m = profile.multiplier(site.label);
        }
        h.multipliers[i] = m;
        h.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += cplx(0.0, rho * m);
    }
    return h;
}

namespace {

std::vector<std::size_t> parity_permutation(const RibbonHamiltonian& h) {
    const auto& profile = h.profile;
    std::vector<std::size_t> perm(h.sites.size());
    if (profile.kind == ProfileKind::cell_periodic) {
        validate(profile, h.cell);
        for (std::size_t i = 0; i < h.sites.size(); ++i) {
            const auto& site = h.sites[i];
            auto j = h.index(site.cell, profile.partner(site.label));
            if (!j) {
                throw InvalidArgument("parity image of site '" + site.label + "' in cell " +
                                      std::to_string(site.cell) + " does not exist");
            }
            perm[i] = *j;
        }
        return perm;
    }

    if (h.boundary != Boundary::open) {
        throw InvalidArgument("longitudinal mirror needs an open ribbon");
    }
    const auto termination = termination_sites(h.cell);
    const std::set<std::string> term_set(termination.begin(), termination.end());
    const std::size_t n = h.n_cells;
    for (std::size_t i = 0; i < h.sites.size(); ++i) {
        const auto& site = h.sites[i];
        const bool term = term_set.contains(site.label);
        const auto pos = column_position(site.cell, term);
        const auto mirrored = 2 * n - pos;
        const std::size_t cell = term ? mirrored / 2 : (mirrored - 1) / 2;
        auto j = h.index(cell, site.label);
        if (!j) {
            throw InvalidArgument("asymmetric termination: site '" + site.label + "' in cell " +
                                  std::to_string(site.cell) + " has no longitudinal mirror image");
        }
        perm[i] = *j;
    }
    return perm;
}

} // namespace

PtReport check_pt_symmetry(const RibbonHamiltonian& h) {
    PtReport report;
    report.permutation = parity_permutation(h);
    const auto& perm = report.permutation;
    const auto n = h.sites.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (perm[perm[i]] != i) {
            throw InvalidArgument("parity map is not an involution on the finite ribbon");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const cplx expected = std::conj(h.matrix(static_cast<Eigen::Index>(i),
                                                     static_cast<Eigen::Index>(j)));
            const cplx actual = h.matrix(static_cast<Eigen::Index>(perm[i]),
                                         static_cast<Eigen::Index>(perm[j]));
            if (expected.real() != actual.real() || expected.imag() != actual.imag()) {
                if (report.violations.size() < PtReport::max_listed) {
                    report.violations.push_back({perm[i], perm[j], expected, actual});
                }
                ++report.violation_count;
            }
        }
    }
    report.symmetric = report.violation_count == 0;
    return report;
}

std::string describe(const PtReport& report, const RibbonHamiltonian& h) {
    std::ostringstream os;
    if (report.symmetric) {
        os << "PT symmetric (" << h.dimension() << " sites)";
        return os.str();
    }
    os << report.violation_count << " entries violate P H P^-1 = conj(H)";
    for (const auto& v : report.violations) {
        const auto& r = h.sites[v.row];
        const auto& c = h.sites[v.col];
        os << "\n  (" << r.label << "@" << r.cell << ", " << c.label << "@" << c.cell
           << "): expected " << v.expected << " got " << v.actual;
    }
    return os.str();
}

} // namespace ptflat
