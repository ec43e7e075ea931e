#include <gtest/gtest.h>

#include <cmath>

#include "ptflat/dynamics.hpp"
#include "ptflat/error.hpp"
#include "ptflat/random.hpp"
#include "ptflat/spectra.hpp"

using namespace ptflat;

namespace {

RibbonHamiltonian ribbon(LatticeKind kind, double rho, std::size_t n) {
    return build_ribbon(build_unit_cell(kind), build_gain_loss_profile(kind), rho, n, Boundary::open);
}

double max_power_drift(const Trajectory& t) {
    double worst = 0.0;
    for (const auto& s : t.samples) worst = std::max(worst, std::abs(s.power / t.samples.front().power - 1.0));
    return worst;
}

} // namespace

TEST(SplitMix, ReferenceSequence) {
    SplitMix64 rng(0);
    EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
    SplitMix64 u(123);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.symmetric();
        EXPECT_GE(x, -1.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(RandomState, SeededAndReproducible) {
    const auto a = random_state(30, 42);
    const auto b = random_state(30, 42);
    EXPECT_EQ(a.amplitudes, b.amplitudes);
    EXPECT_NE(a.amplitudes, random_state(30, 43).amplitudes);
    SplitMix64 rng(42);
    const double re = rng.symmetric();
    EXPECT_EQ(a.amplitudes(0), cplx(re, rng.symmetric()));
    EXPECT_THROW(random_state(0, 1), InvalidArgument);
}

TEST(CompactStates, AreZeroModes) {
    for (auto kind : {LatticeKind::lieb, LatticeKind::stub}) {
        const auto h = ribbon(kind, 0.0, 12);
        const auto v = cls_state(kind, 4, h).amplitudes;
        EXPECT_LE((h.matrix * v).norm(), 1e-12) << to_string(kind);
    }
    const auto periodic = build_ribbon(build_unit_cell(LatticeKind::lieb), build_gain_loss_profile(LatticeKind::lieb),
                                       0.0, 6, Boundary::periodic);
    EXPECT_LE((periodic.matrix * cls_state(LatticeKind::lieb, 5, periodic).amplitudes).norm(), 1e-12);
}

TEST(CompactStates, Preconditions) {
    const auto h = ribbon(LatticeKind::lieb, 0.0, 10);
    EXPECT_THROW(cls_state(LatticeKind::lieb, 0, h), InvalidArgument);
    EXPECT_THROW(cls_state(LatticeKind::lieb, 8, h), InvalidArgument);
    EXPECT_NO_THROW(cls_state(LatticeKind::lieb, 7, h));
    EXPECT_THROW(cls_state(LatticeKind::kagome, 4, ribbon(LatticeKind::kagome, 0.0, 10)), Unsupported);
    EXPECT_THROW(cls_state(LatticeKind::lieb, 4, ribbon(LatticeKind::lieb, 0.5, 10)), InvalidArgument);
}

TEST(Propagate, SamplingContract) {
    const auto h = ribbon(LatticeKind::lieb, 0.0, 6);
    PropagateOptions opt;
    opt.sample_stride = 7;
    const auto t = propagate(h, random_state(h.dimension(), 1), 1.0, 0.01, opt);
    ASSERT_EQ(t.samples.size(), 1u + 100u / 7u + 1u);
    EXPECT_EQ(t.samples.front().z, 0.0);
    EXPECT_DOUBLE_EQ(t.samples.back().z, 1.0);
    for (std::size_t i = 1; i < t.samples.size(); ++i) EXPECT_GT(t.samples[i].z, t.samples[i - 1].z);
    for (const auto& s : t.samples) EXPECT_GT(s.power, 0.0);
    EXPECT_FALSE(t.blowup);
    EXPECT_TRUE(t.snapshots.empty());
}

TEST(Propagate, RejectsBadArguments) {
    const auto h = ribbon(LatticeKind::lieb, 0.0, 4);
    const auto c = random_state(h.dimension(), 1);
    EXPECT_THROW(propagate(h, c, 1.0, 0.0), InvalidArgument);
    EXPECT_THROW(propagate(h, c, 0.001, 0.01), InvalidArgument);
    EXPECT_THROW(propagate(h, random_state(3, 1), 1.0, 0.1), InvalidArgument);
    EXPECT_THROW(propagate(h, StateVector{CVector::Zero(20), 0.0}, 1.0, 0.1), InvalidArgument);
    PropagateOptions zero;
    zero.sample_stride = 0;
    EXPECT_THROW(propagate(h, c, 1.0, 0.1, zero), InvalidArgument);
}

TEST(Propagate, HermitianPowerConservation) {
    for (auto kind : {LatticeKind::lieb, LatticeKind::kagome, LatticeKind::stub}) {
        const auto h = ribbon(kind, 0.0, 20);
        const auto t = propagate(h, random_state(h.dimension(), 5), 100.0, 0.001);
        EXPECT_LE(max_power_drift(t), 1e-8) << to_string(kind);
    }
}

TEST(Propagate, StubSingleSiteConservesPower) {
    const auto h = ribbon(LatticeKind::stub, 0.0, 20);
    const auto t = propagate(h, single_site_state(h, *h.index(10, "A")), 100.0, 0.001);
    EXPECT_LE(max_power_drift(t), 1e-8);
    EXPECT_THROW(single_site_state(h, h.dimension()), InvalidArgument);
}

TEST(Propagate, LiebCompactStateDoesNotDiffract) {
    const auto h = ribbon(LatticeKind::lieb, 0.0, 20);
    const auto c0 = cls_state(LatticeKind::lieb, 10, h);
    PropagateOptions keep;
    keep.keep_states = true;
    const auto t = propagate(h, c0, 100.0, 0.001, keep);
    ASSERT_EQ(t.snapshots.size(), t.samples.size());
    double leak = 0.0;
    for (const auto& s : t.snapshots) {
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (c0.amplitudes(i) == 0.0) leak = std::max(leak, std::abs(s(i)));
        }
    }
    EXPECT_LE(leak, 1e-6);
    for (const auto& s : t.samples) EXPECT_NEAR(s.pr, 4.0, 1e-9);
}

TEST(Propagate, EnergyShiftOnlyChangesPhase) {
    const auto h = ribbon(LatticeKind::kagome, 0.6, 10);
    const CMatrix shifted = h.matrix + 0.75 * CMatrix::Identity(h.matrix.rows(), h.matrix.cols());
    const auto c0 = random_state(h.dimension(), 11);
    const auto a = propagate(h.matrix, c0, 10.0, 0.001);
    const auto b = propagate(shifted, c0, 10.0, 0.001);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_NEAR(b.samples[i].power, a.samples[i].power, 1e-10 * a.samples[i].power);
        EXPECT_NEAR(b.samples[i].pr, a.samples[i].pr, 1e-10 * a.samples[i].pr);
    }
}

TEST(Propagate, Rk4FourthOrder) {
    const auto h = ribbon(LatticeKind::lieb, 3.0, 20);
    const auto c0 = random_state(h.dimension(), 42);
    auto power = [&](double dz) { return propagate(h, c0, 1.0, dz).samples.back().power; };
    const double p1 = power(0.04), p2 = power(0.02), p3 = power(0.01);
    const double ratio = (p1 - p2) / (p2 - p3);
    EXPECT_GE(ratio, 13.0);
    EXPECT_LE(ratio, 19.0);
}

TEST(Propagate, BlowupStopsEarly) {
    const auto h = ribbon(LatticeKind::lieb, 3.0, 10);
    const auto t = propagate(h, random_state(h.dimension(), 42), 100.0, 0.001);
    EXPECT_TRUE(t.blowup);
    EXPECT_LT(t.final_state.z, 100.0);
    EXPECT_GT(t.samples.back().power, 1e12 * t.samples.front().power);
}

TEST(GrowthRate, MatchesSpectrumInBrokenPhases) {
    struct Case {
        LatticeKind kind;
        double rho;
    };
    for (auto c : {Case{LatticeKind::lieb, 3.0}, Case{LatticeKind::kagome, 1.0}, Case{LatticeKind::stub, 1.0}}) {
        const auto h = ribbon(c.kind, c.rho, 20);
        const double oracle = spectral_growth_rate(eigenvalues(h.matrix));
        ASSERT_GT(oracle, 0.0);
        const auto fit = estimate_growth_rate(h.matrix, random_state(h.dimension(), 42).amplitudes, 60.0, 0.005);
        EXPECT_NEAR(fit.rate / oracle, 1.0, 0.02) << to_string(c.kind);
    }
}

TEST(GrowthRate, SpectralRateOfHermitianIsZero) {
    const auto es = eigenvalues(ribbon(LatticeKind::lieb, 0.0, 10).matrix);
    EXPECT_NEAR(spectral_growth_rate(es), 0.0, 1e-12);
    EXPECT_THROW(spectral_growth_rate(EigenSet{}), InvalidArgument);
}
