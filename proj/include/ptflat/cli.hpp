#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "ptflat/io.hpp"
#include "ptflat/lattice.hpp"

namespace ptflat {

enum class Command { bands, spectrum, scan, evolve, validate };
enum class InitialKind { cls, single_site, random };

/// Exit status of run_cli().
enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1,  // validate found a failing check, or a numerical failure
    exit_invalid = 2,       // bad flags, grid, lattice file or parse error
    exit_unsupported = 3,   // e.g. analytic comparison without a closed form
};

struct RunConfig {
    Command command = Command::bands;
    /// Built-in name or .lat path; validate runs every built-in check when empty.
    std::optional<std::string> lattice;
    std::optional<double> rho;
    double rho_min = 0.0;
    double rho_max = 3.0;
    double rho_step = 0.01;
    std::size_t n_cells = 40;
    std::size_t k_count = 256;
    Boundary boundary = Boundary::open;
    double z_max = 100.0;
    double dz = 0.001;
    std::size_t sample_stride = 100;
    InitialKind initial = InitialKind::cls;
    std::uint64_t seed = 42;
    /// CLS anchor cell or single-site row; centre of the ribbon by default.
    std::optional<std::size_t> site;
    double tol_stable = 1e-8;
    bool compare_analytic = false;
    unsigned threads = 0;
    std::string out = "-";
    OutputFormat format = OutputFormat::csv;
};

/// Entry point of the ptflat tool. argv[0] is the program name. Tables go to
/// `out` (or the --out file), diagnostics and summaries to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Executes an already parsed configuration.
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

} // namespace ptflat
