#include "ptflat/validation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <fmt/format.h>

#include "ptflat/dynamics.hpp"
#include "ptflat/eigen.hpp"
#include "ptflat/error.hpp"
#include "ptflat/io.hpp"
#include "ptflat/random.hpp"
#include "ptflat/spectra.hpp"

namespace ptflat {

namespace {

constexpr std::size_t kCells = 20;
constexpr std::size_t kKPoints = 64;

std::string sci(double v) { return fmt::format("{:.3e}", v); }

CheckResult check(std::string name, bool passed, std::string measured, std::string required) {
    return {std::move(name), passed, std::move(measured), std::move(required)};
}

double max_band_deviation(LatticeKind kind, double rho) {
    auto profile = build_gain_loss_profile(kind);
    if (profile.kind == ProfileKind::longitudinal_split) profile = neutral_profile();
    const auto numeric = band_structure(build_unit_cell(kind), profile, rho, kKPoints);
    const auto exact = analytic_band_structure(kind, rho, kKPoints);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.bands.size(); ++i) {
        worst = std::max(worst, multiset_distance(numeric.bands[i], exact.bands[i]));
    }
    return worst;
}

CheckResult bands_check(const std::string& name, LatticeKind kind, const std::vector<double>& rhos) {
    double worst = 0.0;
    for (double rho : rhos) worst = std::max(worst, max_band_deviation(kind, rho));
    return check(name, worst <= 1e-10, "max-dev " + sci(worst), "<= 1e-10");
}

std::vector<double> persistence_grid(std::optional<double> extra) {
    auto grid = uniform_grid(0.0, 10.0, 0.5);
    if (extra && *extra >= 0.0) grid.push_back(*extra);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

CheckResult lieb_flat_persistence(std::optional<double> extra) {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    const auto profile = build_gain_loss_profile(LatticeKind::lieb);
    std::size_t worst = SIZE_MAX;
    double worst_rho = 0.0;
    for (double rho : persistence_grid(extra)) {
        const auto es = eigenvalues(build_ribbon(cell, profile, rho, kCells, Boundary::open).matrix);
        const auto m = flat_band_multiplicity(es, 0.0);
        if (m < worst) {
            worst = m;
            worst_rho = rho;
        }
    }
    return check("lieb_flat_band_persistence", worst >= kCells,
                 fmt::format("min multiplicity {} at rho={}", worst, format_real(worst_rho)),
                 fmt::format(">= {} for rho in [0, 10]", kCells));
}

CheckResult lieb_stability_thresholds() {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    const auto profile = build_gain_loss_profile(LatticeKind::lieb);
    const double tol = 2.0 / static_cast<double>(kCells);
    double worst = 0.0;
    for (double rho : uniform_grid(0.0, 3.0, 0.25)) {
        if (std::abs(rho - 2.0) < 0.05 || std::abs(rho - std::sqrt(6.0)) < 0.05) continue;
        const auto es = eigenvalues(build_ribbon(cell, profile, rho, kCells, Boundary::periodic).matrix);
        worst = std::max(worst, std::abs(stable_fraction(es) - lieb_stable_fraction_oracle(rho)));
    }
    return check("lieb_stable_fraction_oracle", worst <= tol, "max |f - oracle| " + sci(worst),
                 "<= " + format_real(tol));
}

CheckResult kagome_flat_lost() {
    const auto es = eigenvalues(build_ribbon(build_unit_cell(LatticeKind::kagome),
                                             build_gain_loss_profile(LatticeKind::kagome), 0.1, kCells,
                                             Boundary::open)
                                    .matrix);
    const auto m = flat_band_multiplicity(es, -2.0, 1e-6);
    return check("kagome_flat_band_lost", m < 4, fmt::format("{} states within 1e-6 of -2 at rho=0.1", m),
                 "< 4");
}

CheckResult kagome_stability() {
    const auto cell = build_unit_cell(LatticeKind::kagome);
    const auto profile = build_gain_loss_profile(LatticeKind::kagome);
    auto fraction = [&](double rho) {
        return stable_fraction(eigenvalues(build_ribbon(cell, profile, rho, kCells, Boundary::open).matrix));
    };
    const double f0 = fraction(0.0), f1 = fraction(1.0), f3 = fraction(3.0);
    return check("kagome_stable_fraction", f0 == 1.0 && f3 < f0 && f3 > 0.0,
                 fmt::format("f(0)={} f(1)={} f(3)={}", format_real(f0), format_real(f1), format_real(f3)),
                 "f(0)=1, f(3)<1, f(3)>0");
}

std::vector<CheckResult> stub_checks() {
    std::vector<CheckResult> out;
    out.push_back(bands_check("stub_hermitian_bands", LatticeKind::stub, {0.0}));

    const auto cell = build_unit_cell(LatticeKind::stub);
    const auto profile = build_gain_loss_profile(LatticeKind::stub);
    std::size_t worst_flat = 0;
    const auto grid = uniform_grid(0.0, 5.0, 0.1);
    std::vector<double> fractions;
    for (double rho : grid) {
        const auto es = eigenvalues(build_ribbon(cell, profile, rho, kCells, Boundary::open).matrix);
        fractions.push_back(stable_fraction(es));
        if (rho > 0.0) worst_flat = std::max(worst_flat, flat_band_multiplicity(es, 0.0));
    }
    out.push_back(check("stub_flat_band_lost", worst_flat < 4,
                        fmt::format("max multiplicity {} for rho > 0", worst_flat), "< 4"));

    std::size_t i1 = 0;
    while (i1 + 1 < grid.size() && fractions[i1 + 1] == 1.0) ++i1;
    std::optional<std::size_t> i2;
    for (std::size_t i = grid.size(); i-- > i1 + 1;) {
        if (fractions[i] != 0.0) break;
        i2 = i;
    }
    std::string measured = "rho1=" + format_real(grid[i1]);
    if (i2) {
        measured += " rho2=" + format_real(grid[*i2]);
    } else {
        measured += fmt::format(" rho2=none (f({})={})", format_real(grid.back()), format_real(fractions.back()));
    }
    out.push_back(check("stub_stable_fraction_reaches_zero", i2.has_value(), measured,
                        "stable fraction exactly 0 beyond some rho2"));
    return out;
}

std::vector<CheckResult> eigensolver_checks() {
    std::vector<CheckResult> out;
    SplitMix64 rng(7);
    auto random_matrix = [&](Eigen::Index n) {
        CMatrix m(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double re = rng.symmetric();
                m(i, j) = cplx(re, rng.symmetric());
            }
        }
        return m;
    };

    const CMatrix a = random_matrix(60);
    const auto es = eigenpairs(a);
    const double worst = *std::max_element(es.residuals.begin(), es.residuals.end()) / es.matrix_norm;
    out.push_back(check("eigen_residuals", worst <= 1e-9, "max residual/||H|| " + sci(worst), "<= 1e-9"));

    double rel = 0.0;
    for (Eigen::Index n = 1; n <= 8; ++n) {
        const CMatrix m = random_matrix(n);
        const auto vals = eigenvalues(m).values;
        cplx det = 1.0, tr = 0.0;
        for (cplx l : vals) {
            det *= l;
            tr += l;
        }
        const cplx det_ref = m.partialPivLu().determinant();
        rel = std::max(rel, std::abs(det - det_ref) / std::abs(det_ref));
        rel = std::max(rel, std::abs(tr - m.trace()) / std::max(1.0, std::abs(m.trace())));
    }
    out.push_back(check("eigen_trace_determinant", rel <= 1e-9, "max relative error " + sci(rel), "<= 1e-9"));

    CMatrix h = random_matrix(60);
    h = (h + h.adjoint()).eval();
    const auto hs = eigenvalues(h);
    double im = 0.0;
    for (cplx l : hs.values) im = std::max(im, std::abs(l.imag()));
    out.push_back(check("eigen_hermitian_real", im <= 1e-10 * hs.matrix_norm,
                        "max |Im|/||H|| " + sci(im / hs.matrix_norm), "<= 1e-10"));
    return out;
}

double bloch_finite_distance(const UnitCellSpec& cell, const GainLossProfile& profile, double rho,
                             std::size_t n) {
    std::vector<cplx> bloch;
    for (std::size_t m = 0; m < n; ++m) {
        const double k = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        const auto vals = eigenvalues(bloch_matrix(cell, profile, rho, k).matrix).values;
        bloch.insert(bloch.end(), vals.begin(), vals.end());
    }
    const auto finite = eigenvalues(build_ribbon(cell, profile, rho, n, Boundary::periodic).matrix).values;
    return multiset_distance(finite, bloch);
}

CheckResult bloch_finite_check(const std::string& name, const UnitCellSpec& cell,
                               const GainLossProfile& profile, const std::vector<double>& rhos) {
    double worst = 0.0;
    for (double rho : rhos) worst = std::max(worst, bloch_finite_distance(cell, profile, rho, kCells));
    return check(name, worst <= 1e-8, "max multiset distance " + sci(worst), "<= 1e-8");
}

std::vector<CheckResult> dynamics_checks() {
    std::vector<CheckResult> out;
    const auto cell = build_unit_cell(LatticeKind::lieb);
    const auto profile = build_gain_loss_profile(LatticeKind::lieb);

    const auto h0 = build_ribbon(cell, profile, 0.0, kCells, Boundary::open);
    const auto traj = propagate(h0, random_state(h0.dimension(), 42), 100.0, 0.001);
    double drift = 0.0;
    for (const auto& s : traj.samples) drift = std::max(drift, std::abs(s.power / traj.samples.front().power - 1.0));
    out.push_back(check("power_conservation", drift <= 1e-8, "max |P/P0 - 1| " + sci(drift), "<= 1e-8"));

    const auto cls = cls_state(LatticeKind::lieb, kCells / 2, h0);
    PropagateOptions keep;
    keep.keep_states = true;
    const auto cls_traj = propagate(h0, cls, 100.0, 0.001, keep);
    double leak = 0.0;
    for (const auto& state : cls_traj.snapshots) {
        for (Eigen::Index i = 0; i < state.size(); ++i) {
            if (cls.amplitudes(i) == 0.0) leak = std::max(leak, std::abs(state(i)));
        }
    }
    out.push_back(check("cls_no_diffraction", leak <= 1e-6, "max |C| off support " + sci(leak), "<= 1e-6"));

    const auto h3 = build_ribbon(cell, profile, 3.0, kCells, Boundary::open);
    const double oracle = spectral_growth_rate(eigenvalues(h3.matrix));
    const double fitted = estimate_growth_rate(h3.matrix, random_state(h3.dimension(), 42).amplitudes, 40.0, 0.005).rate;
    const double dev = std::abs(fitted / oracle - 1.0);
    out.push_back(check("growth_rate", dev <= 0.02,
                        fmt::format("fitted {} vs 2 max(-Im) {} (rel {})", format_real(fitted), format_real(oracle), sci(dev)),
                        "rel <= 0.02"));

    // deep in the broken phase the power error is a clean dz^4 term
    const auto c0 = random_state(h3.dimension(), 42);
    auto power_at = [&](double dz) { return propagate(h3, c0, 1.0, dz).samples.back().power; };
    const double p1 = power_at(0.04), p2 = power_at(0.02), p3 = power_at(0.01);
    const double ratio = (p1 - p2) / (p2 - p3);
    out.push_back(check("rk4_step_halving", ratio >= 13.0 && ratio <= 19.0, "ratio " + format_real(ratio),
                        "in [13, 19]"));
    return out;
}

std::vector<CheckResult> parser_checks() {
    std::vector<CheckResult> out;
    bool round_trip = true;
    for (auto kind : {LatticeKind::lieb, LatticeKind::kagome, LatticeKind::stub}) {
        const auto doc = builtin_document(kind);
        round_trip = round_trip && equivalent(parse_lattice(serialize(doc)), doc);
    }
    out.push_back(check("parser_round_trip", round_trip, round_trip ? "equal" : "differs", "equal"));

    std::string located = "accepted";
    bool rejected = false;
    try {
        parse_lattice("lattice bad\nsite a 1\nsite b 0\nbond a b 0\nbond a a +1\n");
    } catch (const ParseError& e) {
        rejected = e.where().line == 2 && e.message().find("parity fixed point") != std::string::npos;
        located = fmt::format("{}:{} {}", e.where().line, e.where().column, e.message());
    }
    out.push_back(check("parser_oddness_diagnostic", rejected, located, "rejected at 2:8"));
    return out;
}

CheckResult pt_symmetry_check(const ResolvedLattice& lattice, double rho) {
    const auto& doc = lattice.doc;
    std::vector<Boundary> boundaries{Boundary::open};
    if (doc.profile.kind == ProfileKind::cell_periodic) boundaries.push_back(Boundary::periodic);
    std::size_t violations = 0;
    std::string detail;
    for (auto b : boundaries) {
        const auto h = build_ribbon(doc.cell, doc.profile, rho, 6, b);
        const auto report = check_pt_symmetry(h);
        violations += report.violation_count;
        if (!report.symmetric && detail.empty()) {
            // first offending entry only; the full list is in describe()
            std::string text = describe(report, h);
            std::size_t cut = text.find('\n');
            if (cut != std::string::npos) cut = text.find('\n', cut + 1);
            text = text.substr(0, cut);
            std::replace(text.begin(), text.end(), '\n', ';');
            detail = " (" + std::string(to_string(b)) + ": " + text + ")";
        }
    }
    return check("pt_symmetry", violations == 0, fmt::format("{} violations at rho={}{}", violations, format_real(rho), detail),
                 "P H P^-1 = conj(H)");
}

void guarded(std::vector<CheckResult>& out, const std::string& name,
             const std::function<std::vector<CheckResult>()>& body) {
    try {
        auto results = body();
        out.insert(out.end(), results.begin(), results.end());
    } catch (const std::exception& e) {
        out.push_back(check(name, false, std::string("error: ") + e.what(), "completes"));
    }
}

std::vector<CheckResult> lattice_checks(LatticeKind kind, std::optional<double> rho) {
    switch (kind) {
    case LatticeKind::lieb: {
        std::vector<double> rhos{0.5, 1.0, 2.0, 3.0};
        if (rho) rhos.push_back(*rho);
        return {bands_check("lieb_hermitian_bands", kind, {0.0}), bands_check("lieb_pt_bands", kind, rhos),
                lieb_flat_persistence(rho), lieb_stability_thresholds()};
    }
    case LatticeKind::kagome:
        return {bands_check("kagome_hermitian_bands", kind, {0.0}), kagome_flat_lost(), kagome_stability()};
    case LatticeKind::stub:
        return stub_checks();
    }
    return {};
}

} // namespace

bool ValidationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

ValidationReport run_validation(const ValidationOptions& options) {
    ValidationReport report;
    auto& out = report.checks;
    if (options.lattice) {
        const auto& lattice = *options.lattice;
        const double rho = options.rho.value_or(1.0);
        guarded(out, "pt_symmetry", [&] { return std::vector{pt_symmetry_check(lattice, rho)}; });
        if (lattice.doc.profile.kind == ProfileKind::cell_periodic) {
            guarded(out, "bloch_finite_equivalence", [&] {
                return std::vector{bloch_finite_check("bloch_finite_equivalence", lattice.doc.cell,
                                                      lattice.doc.profile, {0.0, rho})};
            });
        }
        guarded(out, "parser_round_trip", [&] {
            const bool same = equivalent(parse_lattice(serialize(lattice.doc)), lattice.doc);
            return std::vector{check("parser_round_trip", same, same ? "equal" : "differs", "equal")};
        });
        if (lattice.builtin) {
            guarded(out, std::string(to_string(*lattice.builtin)) + "_checks",
                    [&] { return lattice_checks(*lattice.builtin, options.rho); });
        }
        return report;
    }

    for (auto kind : {LatticeKind::lieb, LatticeKind::kagome, LatticeKind::stub}) {
        guarded(out, std::string(to_string(kind)) + "_checks", [&] { return lattice_checks(kind, options.rho); });
    }
    guarded(out, "eigensolver", eigensolver_checks);
    guarded(out, "bloch_finite_equivalence", [] {
        std::vector<CheckResult> r;
        for (auto kind : {LatticeKind::lieb, LatticeKind::kagome, LatticeKind::stub}) {
            const auto profile = kind == LatticeKind::stub ? neutral_profile() : build_gain_loss_profile(kind);
            r.push_back(bloch_finite_check(std::string(to_string(kind)) + "_bloch_finite_equivalence",
                                           build_unit_cell(kind), profile, {0.0, 1.0}));
        }
        return r;
    });
    guarded(out, "dynamics", dynamics_checks);
    guarded(out, "parser", parser_checks);
    return report;
}

std::string format_report(const ValidationReport& report) {
    std::string text;
    std::size_t failed = 0;
    for (const auto& c : report.checks) {
        if (!c.passed) ++failed;
        text += fmt::format("[{}] {}: {} (required {})\n", c.passed ? "PASS" : "FAIL", c.name, c.measured, c.required);
    }
    text += fmt::format("{} checks, {} failed\n", report.checks.size(), failed);
    return text;
}

} // namespace ptflat
