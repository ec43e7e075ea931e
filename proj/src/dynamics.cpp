#include "ptflat/dynamics.hpp"

#include <cmath>

#include <Eigen/SparseCore>

#include "ptflat/error.hpp"
#include "ptflat/random.hpp"
#include "ptflat/spectra.hpp"

namespace ptflat {

namespace {

using SparseH = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

void check_step(const CMatrix& h, const CVector& c0, double z_max, double dz) {
    if (h.rows() != h.cols()) throw InvalidArgument("Hamiltonian must be square");
    if (c0.size() != h.rows()) {
        throw InvalidArgument("initial state dimension " + std::to_string(c0.size()) +
                              " does not match the ribbon (" + std::to_string(h.rows()) + ")");
    }
    if (!(dz > 0.0) || !std::isfinite(dz)) throw InvalidArgument("dz must be > 0");
    if (!(z_max >= dz) || !std::isfinite(z_max)) throw InvalidArgument("z_max must be >= dz");
    if (!(c0.squaredNorm() > 0.0)) throw InvalidArgument("initial state is zero");
}

std::size_t step_count(double z_max, double dz) {
    return static_cast<std::size_t>(std::max(1.0, std::round(z_max / dz)));
}

// One classical RK4 step of dC/dz = i H C.
class Rk4 {
public:
    explicit Rk4(const CMatrix& h) : h_(h.sparseView()), k1_(h.rows()), k2_(h.rows()),
                                      k3_(h.rows()), k4_(h.rows()), tmp_(h.rows()) {}

    void step(CVector& c, double dz) {
        const cplx i{0.0, 1.0};
        k1_.noalias() = i * (h_ * c);
        tmp_ = c + (0.5 * dz) * k1_;
        k2_.noalias() = i * (h_ * tmp_);
        tmp_ = c + (0.5 * dz) * k2_;
        k3_.noalias() = i * (h_ * tmp_);
        tmp_ = c + dz * k3_;
        k4_.noalias() = i * (h_ * tmp_);
        c += (dz / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    SparseH h_;
    CVector k1_, k2_, k3_, k4_, tmp_;
};

} // namespace

Trajectory propagate(const CMatrix& h, const StateVector& c0, double z_max, double dz,
                     const PropagateOptions& options) {
    check_step(h, c0.amplitudes, z_max, dz);
    if (options.sample_stride == 0) throw InvalidArgument("sample_stride must be >= 1");
    const std::size_t steps = step_count(z_max, dz);
    const double step = z_max / static_cast<double>(steps);

    Trajectory out;
    CVector c = c0.amplitudes;
    const double p0 = c.squaredNorm();
    auto record = [&](double z) {
        out.samples.push_back({z, c.squaredNorm(), participation_ratio(c)});
        if (options.keep_states) out.snapshots.push_back(c);
    };
    record(c0.z);

    Rk4 rk4(h);
    double z = c0.z;
    for (std::size_t s = 1; s <= steps; ++s) {
        rk4.step(c, step);
        z = c0.z + static_cast<double>(s) * step;
        const double power = c.squaredNorm();
        if (!std::isfinite(power) || power > options.blowup_factor * p0) {
            out.blowup = true;
            if (std::isfinite(power)) record(z);
            break;
        }
        if (s % options.sample_stride == 0 || s == steps) record(z);
    }
    out.final_state = {c, z};
    return out;
}

Trajectory propagate(const RibbonHamiltonian& h, const StateVector& c0, double z_max, double dz,
                     const PropagateOptions& options) {
    return propagate(h.matrix, c0, z_max, dz, options);
}

StateVector cls_state(LatticeKind kind, std::size_t cell_index, const RibbonHamiltonian& ribbon) {
    if (kind == LatticeKind::kagome) {
        throw Unsupported("no compact localized state is defined for the kagome ribbon");
    }
    if (ribbon.rho != 0.0) throw InvalidArgument("compact localized states need rho = 0");
    const std::size_t n = ribbon.n_cells;
    const bool wraps = ribbon.boundary == Boundary::periodic;
    // the support spans cells cell_index and cell_index + 1
    if (cell_index >= n || (!wraps && (cell_index == 0 || cell_index + 2 >= n))) {
        throw InvalidArgument("cell " + std::to_string(cell_index) +
                              " is at the ribbon boundary; compact state needs an interior cell");
    }
    const std::size_t next = (cell_index + 1) % n;

    StateVector out{CVector::Zero(static_cast<Eigen::Index>(ribbon.dimension())), 0.0};
    auto set = [&](std::size_t cell, const std::string& label, double value) {
        auto row = ribbon.index(cell, label);
        if (!row) {
            throw InvalidArgument("ribbon has no site '" + label + "' in cell " +
                                  std::to_string(cell) + " for a " +
                                  std::string(to_string(kind)) + " compact state");
        }
        out.amplitudes(static_cast<Eigen::Index>(*row)) = value;
    };
    if (kind == LatticeKind::lieb) {
        set(cell_index, "p", 1.0);
        set(cell_index, "q", 1.0);
        set(cell_index, "r", -1.0);
        set(next, "r", -1.0);
    } else {
        set(cell_index, "B", 1.0);
        set(cell_index, "C", -1.0);
        set(next, "C", -1.0);
    }
    return out;
}

StateVector single_site_state(const RibbonHamiltonian& ribbon, std::size_t row) {
    if (row >= ribbon.dimension()) throw InvalidArgument("site index out of range");
    StateVector out{CVector::Zero(static_cast<Eigen::Index>(ribbon.dimension())), 0.0};
    out.amplitudes(static_cast<Eigen::Index>(row)) = 1.0;
    return out;
}

StateVector random_state(std::size_t dimension, std::uint64_t seed) {
    if (dimension == 0) throw InvalidArgument("random state needs dimension >= 1");
    SplitMix64 rng(seed);
    StateVector out{CVector(static_cast<Eigen::Index>(dimension)), 0.0};
    for (Eigen::Index i = 0; i < out.amplitudes.size(); ++i) {
        const double re = rng.symmetric();
        const double im = rng.symmetric();
        out.amplitudes(i) = cplx(re, im);
    }
    return out;
}

double spectral_growth_rate(const EigenSet& es) {
    if (es.values.empty()) throw InvalidArgument("empty spectrum");
    double worst = -std::numeric_limits<double>::infinity();
    for (cplx l : es.values) worst = std::max(worst, -l.imag());
    return 2.0 * worst;
}

GrowthEstimate estimate_growth_rate(const CMatrix& h, const CVector& c0, double z_span,
                                    double dz) {
    check_step(h, c0, z_span, dz);
    const std::size_t steps = step_count(z_span, dz);
    const double step = z_span / static_cast<double>(steps);
    Rk4 rk4(h);
    CVector c = c0 / c0.norm();
    double log_power = 0.0;

    // least squares of ln P against z over the second half
    double sz = 0.0, sp = 0.0, szz = 0.0, szp = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 1; s <= steps; ++s) {
        rk4.step(c, step);
        const double p = c.squaredNorm();
        if (!(p > 0.0) || !std::isfinite(p)) throw ConvergenceError("state lost during integration");
        if (p > 1e6 || p < 1e-6) {
            log_power += std::log(p);
            c /= std::sqrt(p);
        }
        if (2 * s >= steps) {
            const double z = static_cast<double>(s) * step;
            const double lp = log_power + std::log(c.squaredNorm());
            sz += z;
            sp += lp;
            szz += z * z;
            szp += z * lp;
            ++count;
        }
    }
    const auto nc = static_cast<double>(count);
    const double denom = nc * szz - sz * sz;
    if (count < 2 || denom <= 0.0) throw InvalidArgument("z_span too short for a growth fit");
    return {(nc * szp - sz * sp) / denom, z_span};
}

} // namespace ptflat
