#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ptflat/lattice_dsl.hpp"

namespace ptflat {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string measured;
    std::string required;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

struct ValidationOptions {
    /// Restrict to checks for one lattice; all built-in checks when empty.
    std::optional<ResolvedLattice> lattice;
    /// Extra gain/loss value folded into the lattice-specific checks.
    std::optional<double> rho;
};

/// Reduced-size cross-checks of band formulas, flat bands, stability
/// thresholds, the eigensolver, Bloch/finite equivalence, dynamics and the
/// lattice parser. Never throws for a failed check; a check that raises is
/// reported as failed with the error text.
ValidationReport run_validation(const ValidationOptions& options = {});

/// One line per check: "[PASS] name: measured ... (required ...)".
std::string format_report(const ValidationReport& report);

} // namespace ptflat
