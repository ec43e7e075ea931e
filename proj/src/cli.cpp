#include "ptflat/cli.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "ptflat/dynamics.hpp"
#include "ptflat/error.hpp"
#include "ptflat/lattice_dsl.hpp"
#include "ptflat/spectra.hpp"
#include "ptflat/validation.hpp"

namespace ptflat {

namespace {

std::string_view to_string(Command c) {
    switch (c) {
    case Command::bands: return "bands";
    case Command::spectrum: return "spectrum";
    case Command::scan: return "scan";
    case Command::evolve: return "evolve";
    case Command::validate: return "validate";
    }
    return "?";
}

std::string_view to_string(InitialKind k) {
    switch (k) {
    case InitialKind::cls: return "cls";
    case InitialKind::single_site: return "single-site";
    case InitialKind::random: return "random";
    }
    return "?";
}

// Writes to --out, where "-" means the caller's stream.
void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
    if (cfg.out == "-") {
        out << text;
        return;
    }
    std::ofstream file(cfg.out, std::ios::binary);
    if (!file) throw InvalidArgument("cannot open output file '" + cfg.out + "'");
    file << text;
    if (!file) throw InvalidArgument("failed writing '" + cfg.out + "'");
}

void emit_table(const RunConfig& cfg, std::ostream& out, const Table& table) {
    std::ostringstream os;
    write_table(os, table, cfg.format);
    emit(cfg, out, os.str());
}

ResolvedLattice lattice_of(const RunConfig& cfg) { return resolve_lattice(cfg.lattice.value_or("lieb")); }

void require_positive(double v, const char* flag) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(flag) + " must be > 0");
}

double rho_of(const RunConfig& cfg) {
    const double rho = cfg.rho.value_or(0.0);
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("--rho must be finite and >= 0");
    return rho;
}

Table base_table(const RunConfig& cfg, const ResolvedLattice& lattice) {
    Table t;
    t.command = std::string(to_string(cfg.command));
    t.config.emplace_back("lattice", cfg.lattice.value_or("lieb"));
    t.config.emplace_back("cell", lattice.doc.cell.name);
    t.config.emplace_back("profile", std::string(to_string(lattice.doc.profile.kind)));
    return t;
}

// Pairs numeric and analytic values greedily by distance (nearest pairs first).
std::vector<cplx> match_analytic(const std::vector<cplx>& numeric, const std::vector<cplx>& exact) {
    struct Pair {
        double d;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        for (std::size_t j = 0; j < exact.size(); ++j) pairs.push_back({std::abs(numeric[i] - exact[j]), i, j});
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
    std::vector<cplx> out(numeric.size());
    std::vector<bool> used_i(numeric.size()), used_j(exact.size());
    for (const auto& p : pairs) {
        if (used_i[p.i] || used_j[p.j]) continue;
        used_i[p.i] = used_j[p.j] = true;
        out[p.i] = exact[p.j];
    }
    return out;
}

int cmd_bands(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto lattice = lattice_of(cfg);
    const double rho = rho_of(cfg);
    if (cfg.k_count < 2) throw InvalidArgument("--kpoints must be >= 2");

    GainLossProfile profile = lattice.doc.profile;
    if (profile.kind == ProfileKind::longitudinal_split) {
        if (rho != 0.0) {
            throw Unsupported("the " + lattice.doc.cell.name +
                              " gain/loss profile is not cell-periodic; Bloch bands need rho = 0");
        }
        profile = neutral_profile();
    }
    if (cfg.compare_analytic && !lattice.builtin) {
        throw Unsupported("no closed-form bands for custom lattice '" + lattice.doc.cell.name + "'");
    }
    std::optional<BandSet> exact;
    if (cfg.compare_analytic) {
        exact = analytic_band_structure(*lattice.builtin, rho, cfg.k_count, lattice.doc.cell.coupling);
    }
    const auto numeric = band_structure(lattice.doc.cell, profile, rho, cfg.k_count);

    Table t = base_table(cfg, lattice);
    t.config.emplace_back("rho", format_real(rho));
    t.config.emplace_back("kpoints", std::to_string(cfg.k_count));
    t.config.emplace_back("compare_analytic", cfg.compare_analytic ? "true" : "false");
    t.columns = {"k", "band_index", "re_lambda", "im_lambda"};
    if (exact) t.columns.insert(t.columns.end(), {"re_analytic", "im_analytic", "deviation"});

    double max_dev = 0.0;
    for (std::size_t m = 0; m < numeric.k_grid.size(); ++m) {
        const auto& bands = numeric.bands[m];
        std::vector<cplx> paired;
        if (exact) paired = match_analytic(bands, exact->bands[m]);
        for (std::size_t b = 0; b < bands.size(); ++b) {
            std::vector<std::optional<double>> row{numeric.k_grid[m], static_cast<double>(b), bands[b].real(),
                                                   bands[b].imag()};
            if (exact) {
                const double dev = std::abs(bands[b] - paired[b]);
                max_dev = std::max(max_dev, dev);
                row.insert(row.end(), {paired[b].real(), paired[b].imag(), dev});
            }
            t.rows.push_back(std::move(row));
        }
    }
    if (exact) {
        t.notes.push_back("max-dev=" + format_real(max_dev));
        err << "max-dev " << format_real(max_dev) << '\n';
    }
    emit_table(cfg, out, t);
    return exit_ok;
}

int cmd_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto lattice = lattice_of(cfg);
    const double rho = rho_of(cfg);
    const auto h = build_ribbon(lattice.doc.cell, lattice.doc.profile, rho, cfg.n_cells, cfg.boundary);
    const auto es = eigenpairs(h.matrix);

    Table t = base_table(cfg, lattice);
    t.config.emplace_back("rho", format_real(rho));
    t.config.emplace_back("cells", std::to_string(cfg.n_cells));
    t.config.emplace_back("boundary", std::string(to_string(cfg.boundary)));
    t.config.emplace_back("tol", format_real(cfg.tol_stable));
    t.columns = {"index", "re_lambda", "im_lambda", "pr", "residual"};
    for (std::size_t j = 0; j < es.size(); ++j) {
        t.rows.push_back({static_cast<double>(j), es.values[j].real(), es.values[j].imag(),
                          participation_ratio(es.vectors->col(static_cast<Eigen::Index>(j))), es.residuals[j]});
    }
    t.notes.push_back("stable_fraction=" + format_real(stable_fraction(es, cfg.tol_stable)));
    if (auto flat = find_flat_band(lattice.doc.cell)) {
        t.notes.push_back(fmt::format("flat_multiplicity={} at {}", flat_band_multiplicity(es, *flat, cfg.tol_stable),
                                      format_real(*flat)));
    }
    emit_table(cfg, out, t);
    return exit_ok;
}

int cmd_scan(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto lattice = lattice_of(cfg);
    const auto grid = uniform_grid(cfg.rho_min, cfg.rho_max, cfg.rho_step);
    if (cfg.rho_min < 0.0) throw InvalidArgument("--rho-min must be >= 0");
    ScanOptions options;
    options.tol_stable = cfg.tol_stable;
    options.flat_tol = cfg.tol_stable;
    options.threads = cfg.threads;
    const auto result = scan_rho(lattice.doc.cell, lattice.doc.profile, cfg.n_cells, cfg.boundary, grid, options);

    Table t = base_table(cfg, lattice);
    t.config.emplace_back("rho_min", format_real(cfg.rho_min));
    t.config.emplace_back("rho_max", format_real(cfg.rho_max));
    t.config.emplace_back("rho_step", format_real(cfg.rho_step));
    t.config.emplace_back("cells", std::to_string(cfg.n_cells));
    t.config.emplace_back("boundary", std::string(to_string(cfg.boundary)));
    t.config.emplace_back("tol", format_real(cfg.tol_stable));
    t.config.emplace_back("flat_value", result.context.flat_value ? format_real(*result.context.flat_value) : "none");
    t.columns = {"rho", "stable_fraction", "avg_pr_stable", "flat_multiplicity"};
    for (const auto& r : result.rows) {
        std::optional<double> flat;
        if (result.context.flat_value) flat = static_cast<double>(r.flat_multiplicity);
        t.rows.push_back({r.rho, r.stable_fraction, r.avg_pr_stable, flat});
    }
    emit_table(cfg, out, t);
    return exit_ok;
}

int cmd_evolve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto lattice = lattice_of(cfg);
    const double rho = rho_of(cfg);
    require_positive(cfg.dz, "--dz");
    require_positive(cfg.z_max, "--z-max");
    if (cfg.sample_stride == 0) throw InvalidArgument("--stride must be >= 1");
    const auto h = build_ribbon(lattice.doc.cell, lattice.doc.profile, rho, cfg.n_cells, cfg.boundary);

    StateVector c0;
    std::string initial(to_string(cfg.initial));
    switch (cfg.initial) {
    case InitialKind::cls: {
        if (!lattice.builtin) throw Unsupported("compact states are defined for the built-in lattices only");
        const std::size_t cell = cfg.site.value_or((cfg.n_cells - 1) / 2);
        c0 = cls_state(*lattice.builtin, cell, h);
        initial += fmt::format("@{}", cell);
        break;
    }
    case InitialKind::single_site: {
        const std::size_t row = cfg.site.value_or(*h.index(cfg.n_cells / 2, lattice.doc.cell.sites.front()));
        c0 = single_site_state(h, row);
        initial += fmt::format("@{}", row);
        break;
    }
    case InitialKind::random:
        c0 = random_state(h.dimension(), cfg.seed);
        initial += fmt::format("@{}", cfg.seed);
        break;
    }

    PropagateOptions options;
    options.sample_stride = cfg.sample_stride;
    const auto traj = propagate(h, c0, cfg.z_max, cfg.dz, options);

    Table t = base_table(cfg, lattice);
    t.config.emplace_back("rho", format_real(rho));
    t.config.emplace_back("cells", std::to_string(cfg.n_cells));
    t.config.emplace_back("boundary", std::string(to_string(cfg.boundary)));
    t.config.emplace_back("z_max", format_real(cfg.z_max));
    t.config.emplace_back("dz", format_real(cfg.dz));
    t.config.emplace_back("stride", std::to_string(cfg.sample_stride));
    t.config.emplace_back("initial", initial);
    t.columns = {"z", "power", "pr"};
    for (const auto& s : traj.samples) t.rows.push_back({s.z, s.power, s.pr});
    if (traj.blowup) {
        t.notes.push_back("broken-phase blowup at z=" + format_real(traj.final_state.z) +
                          " (power > 1e12 x initial)");
    }

    const double spectral = spectral_growth_rate(eigenvalues(h.matrix));
    if (spectral > cfg.tol_stable) {
        const auto fit = estimate_growth_rate(h.matrix, c0.amplitudes, cfg.z_max, cfg.dz);
        const std::string summary = fmt::format("growth_rate fitted={} spectral={} rel_dev={}", format_real(fit.rate),
                                                format_real(spectral), format_real(std::abs(fit.rate / spectral - 1.0)));
        t.notes.push_back(summary);
        err << summary << '\n';
    }
    emit_table(cfg, out, t);
    return exit_ok;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    ValidationOptions options;
    if (cfg.lattice) options.lattice = resolve_lattice(*cfg.lattice);
    options.rho = cfg.rho;
    const auto report = run_validation(options);
    emit(cfg, out, format_report(report));
    return report.all_passed() ? exit_ok : exit_check_failed;
}

} // namespace

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (cfg.n_cells < 2) throw InvalidArgument("--cells must be >= 2");
        require_positive(cfg.tol_stable, "--tol");
        switch (cfg.command) {
        case Command::bands: return cmd_bands(cfg, out, err);
        case Command::spectrum: return cmd_spectrum(cfg, out, err);
        case Command::scan: return cmd_scan(cfg, out, err);
        case Command::evolve: return cmd_evolve(cfg, out, err);
        case Command::validate: return cmd_validate(cfg, out, err);
        }
    } catch (const Unsupported& e) {
        err << "error: " << e.what() << '\n';
        return exit_unsupported;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_check_failed;
    }
    return exit_invalid;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"PT-symmetric flat-band ribbons: bands, spectra, scans, dynamics"};
    app.name("ptflat");
    app.require_subcommand(1);

    RunConfig cfg;
    std::string lattice = "lieb";
    double rho = 0.0;
    std::string boundary = "open";
    std::string format = "csv";
    std::string initial = "cls";

    auto common = [&](CLI::App* sub, bool lattice_flag) {
        if (lattice_flag) sub->add_option("--lattice", lattice, "lieb, kagome, stub or a .lat file");
        sub->add_option("--out", cfg.out, "output path, - for standard output");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };
    auto ribbon = [&](CLI::App* sub) {
        sub->add_option("--cells", cfg.n_cells, "number of unit cells");
        sub->add_option("--boundary", boundary, "open or periodic")->check(CLI::IsMember({"open", "periodic"}));
        sub->add_option("--tol", cfg.tol_stable, "stability / flat-band tolerance");
    };

    auto* bands = app.add_subcommand("bands", "Bloch band structure");
    common(bands, true);
    bands->add_option("--rho", rho, "gain/loss strength");
    bands->add_option("--kpoints", cfg.k_count, "number of k points");
    bands->add_flag("--compare-analytic", cfg.compare_analytic, "add closed-form columns");

    auto* spectrum = app.add_subcommand("spectrum", "finite ribbon eigenvalues");
    common(spectrum, true);
    spectrum->add_option("--rho", rho, "gain/loss strength");
    ribbon(spectrum);

    auto* scan = app.add_subcommand("scan", "stability scan over rho");
    common(scan, true);
    scan->add_option("--rho-min", cfg.rho_min);
    scan->add_option("--rho-max", cfg.rho_max);
    scan->add_option("--rho-step", cfg.rho_step);
    scan->add_option("--threads", cfg.threads, "worker threads, 0 = all cores");
    ribbon(scan);

    auto* evolve = app.add_subcommand("evolve", "propagate dC/dz = i H C");
    common(evolve, true);
    evolve->add_option("--rho", rho, "gain/loss strength");
    ribbon(evolve);
    evolve->add_option("--z-max", cfg.z_max);
    evolve->add_option("--dz", cfg.dz);
    evolve->add_option("--stride", cfg.sample_stride, "steps between samples");
    evolve->add_option("--initial", initial, "cls, single-site or random")
        ->check(CLI::IsMember({"cls", "single-site", "random"}));
    evolve->add_option("--seed", cfg.seed, "seed of the random initial state");
    evolve->add_option("--site", cfg.site, "CLS anchor cell or single-site row");

    auto* validate = app.add_subcommand("validate", "reduced-size cross-checks");
    validate->add_option("--lattice", lattice, "restrict to one lattice");
    validate->add_option("--rho", rho, "extra gain/loss value for lattice checks");
    validate->add_option("--out", cfg.out, "output path, - for standard output");

    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_invalid;
    }

    for (auto [sub, cmd] : {std::pair{bands, Command::bands}, {spectrum, Command::spectrum}, {scan, Command::scan},
                            {evolve, Command::evolve}, {validate, Command::validate}}) {
        if (sub->parsed()) {
            cfg.command = cmd;
            if (sub->count("--lattice") || cmd != Command::validate) cfg.lattice = lattice;
            if (sub->get_option_no_throw("--rho") && sub->count("--rho")) cfg.rho = rho;
        }
    }
    cfg.boundary = *boundary_from_string(boundary);
    cfg.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
    cfg.initial = initial == "cls" ? InitialKind::cls
                  : initial == "single-site" ? InitialKind::single_site
                                             : InitialKind::random;
    return run_command(cfg, out, err);
}

} // namespace ptflat
