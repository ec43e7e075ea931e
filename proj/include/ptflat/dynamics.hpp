#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ptflat/eigen.hpp"
#include "ptflat/lattice.hpp"

namespace ptflat {

/// Mode amplitudes C_n at propagation distance z (units 1/V).
struct StateVector {
    CVector amplitudes;
    double z = 0.0;
};

struct TrajectorySample {
    double z = 0.0;
    double power = 0.0;  // sum |C_n|^2
    double pr = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    StateVector final_state;
    /// Power exceeded blowup_factor times its initial value; integration stopped.
    bool blowup = false;
    /// Full states at each sample, only with PropagateOptions::keep_states.
    std::vector<CVector> snapshots;
};

struct PropagateOptions {
    std::size_t sample_stride = 100;
    bool keep_states = false;
    double blowup_factor = 1e12;
};

/// Integrates dC/dz = i H C with classical fixed-step RK4. The step count is
/// round(z_max/dz) and the step is adjusted so the last sample lands on z_max.
Trajectory propagate(const RibbonHamiltonian& h, const StateVector& c0, double z_max, double dz,
                     const PropagateOptions& options = {});
Trajectory propagate(const CMatrix& h, const StateVector& c0, double z_max, double dz,
                     const PropagateOptions& options = {});

/// Compact localized flat-band state of a rho = 0 ribbon, anchored at
/// `cell_index`. Lieb: p_n = q_n = +1, r_n = r_{n+1} = -1. Stub: B_n = +1,
/// C_n = C_{n+1} = -1. Kagome is Unsupported.
StateVector cls_state(LatticeKind kind, std::size_t cell_index, const RibbonHamiltonian& ribbon);

StateVector single_site_state(const RibbonHamiltonian& ribbon, std::size_t row);

/// Real and imaginary parts uniform on [-1, 1) from SplitMix64(seed), drawn
/// row by row (real first).
StateVector random_state(std::size_t dimension, std::uint64_t seed);

/// 2 max_j(-Im lambda_j): the asymptotic growth rate of the power.
double spectral_growth_rate(const EigenSet& es);

struct GrowthEstimate {
    double rate = 0.0;
    double z_span = 0.0;
};

/// Asymptotic power growth rate from dynamics alone: RK4 with periodic
/// renormalization so the accumulated log-power never overflows, then a
/// least-squares slope of ln P over the second half of [0, z_span].
GrowthEstimate estimate_growth_rate(const CMatrix& h, const CVector& c0, double z_span, double dz);

} // namespace ptflat
