#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ptflat/error.hpp"
#include "ptflat/lattice.hpp"

using namespace ptflat;

namespace {

constexpr double pi = std::numbers::pi;
const cplx I{0.0, 1.0};

const LatticeKind kAll[] = {LatticeKind::lieb, LatticeKind::kagome, LatticeKind::stub};

UnitCellSpec two_site_chain() {
    return {"chain", {"a", "b"}, {{"a", "b"}}, {{"b", "a"}}, 1.0};
}

GainLossProfile cell_profile(LatticeKind kind) {
    auto p = build_gain_loss_profile(kind);
    return p.kind == ProfileKind::cell_periodic ? p : neutral_profile();
}

} // namespace

TEST(UnitCell, BuiltinShapes) {
    struct Shape {
        LatticeKind kind;
        std::size_t sites, intra, inter;
    };
    for (auto s : {Shape{LatticeKind::lieb, 5, 4, 2}, Shape{LatticeKind::kagome, 5, 6, 2},
                   Shape{LatticeKind::stub, 3, 2, 1}}) {
        const auto cell = build_unit_cell(s.kind);
        EXPECT_EQ(cell.size(), s.sites);
        EXPECT_EQ(cell.intra_bonds.size(), s.intra);
        EXPECT_EQ(cell.inter_bonds.size(), s.inter);
        EXPECT_EQ(cell.coupling, 1.0);
        EXPECT_NO_THROW(validate(cell));
    }
}

TEST(UnitCell, KindNamesRoundTrip) {
    for (auto kind : kAll) EXPECT_EQ(lattice_kind_from_string(to_string(kind)), kind);
    EXPECT_FALSE(lattice_kind_from_string("honeycomb"));
    EXPECT_EQ(boundary_from_string("periodic"), Boundary::periodic);
    EXPECT_FALSE(boundary_from_string("closed"));
}

TEST(UnitCell, RejectsBrokenCells) {
    auto expect_invalid = [](UnitCellSpec cell, const char* fragment) {
        try {
            validate(cell);
            FAIL() << "accepted: " << fragment;
        } catch (const InvalidArgument& e) {
            EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
        }
    };
    auto c = two_site_chain();
    c.intra_bonds.push_back({"a", "z"});
    expect_invalid(c, "undeclared");

    c = two_site_chain();
    c.intra_bonds.push_back({"a", "a"});
    expect_invalid(c, "self-bond");

    c = two_site_chain();
    c.intra_bonds.push_back({"b", "a"});
    expect_invalid(c, "duplicate");

    c = two_site_chain();
    c.sites.push_back("a");
    expect_invalid(c, "duplicate site");

    c = two_site_chain();
    c.coupling = 0.0;
    expect_invalid(c, "coupling");

    c = two_site_chain();
    c.inter_bonds.clear();
    expect_invalid(c, "inter-cell");

    c = two_site_chain();
    c.sites.push_back("island");
    expect_invalid(c, "disconnected");
}

TEST(UnitCell, CanonicalizedIsEquivalent) {
    auto cell = build_unit_cell(LatticeKind::kagome);
    std::reverse(cell.intra_bonds.begin(), cell.intra_bonds.end());
    for (auto& b : cell.intra_bonds) std::swap(b.a, b.b);
    EXPECT_TRUE(equivalent(cell, build_unit_cell(LatticeKind::kagome)));
    EXPECT_EQ(canonicalized(cell).intra_bonds, canonicalized(build_unit_cell(LatticeKind::kagome)).intra_bonds);

    auto other = build_unit_cell(LatticeKind::kagome);
    other.inter_bonds[0] = {"1", "2"};  // reversed direction is a different ribbon
    EXPECT_FALSE(equivalent(other, build_unit_cell(LatticeKind::kagome)));
}

TEST(Profile, BuiltinsAreValidAndOdd) {
    for (auto kind : kAll) {
        const auto cell = build_unit_cell(kind);
        const auto profile = build_gain_loss_profile(kind);
        EXPECT_NO_THROW(validate(profile, cell));
        if (profile.kind != ProfileKind::cell_periodic) continue;
        double sum = 0.0;
        for (const auto& s : cell.sites) {
            EXPECT_EQ(profile.multiplier(profile.partner(s)), -profile.multiplier(s)) << s;
            EXPECT_EQ(profile.partner(profile.partner(s)), s);
            sum += profile.multiplier(s);
        }
        EXPECT_EQ(sum, 0.0);
    }
    EXPECT_EQ(build_gain_loss_profile(LatticeKind::stub).kind, ProfileKind::longitudinal_split);
    EXPECT_EQ(to_string(ProfileKind::longitudinal_split), "longitudinal-split");
}

TEST(Profile, RejectsViolations) {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    auto profile = build_gain_loss_profile(LatticeKind::lieb);

    auto fixed = profile;
    fixed.multipliers["r"] = 0.5;
    EXPECT_THROW(validate(fixed, cell), InvalidArgument);
    try {
        validate(fixed, cell);
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("parity fixed point requires multiplier 0"), std::string::npos);
    }

    auto even = profile;
    even.multipliers["t"] = 1.0;
    EXPECT_THROW(validate(even, cell), InvalidArgument);

    auto broken = profile;
    broken.parity["b"] = "p";  // b->p while t->b remains
    EXPECT_THROW(validate(broken, cell), InvalidArgument);

    auto unknown = profile;
    unknown.multipliers["zz"] = 1.0;
    EXPECT_THROW(validate(unknown, cell), InvalidArgument);
}

TEST(BlochPhase, ExactAtQuarterTurns) {
    EXPECT_EQ(bloch_phase(0.0), cplx(1.0, 0.0));
    EXPECT_EQ(bloch_phase(pi / 2), cplx(0.0, 1.0));
    EXPECT_EQ(bloch_phase(-pi / 2), cplx(0.0, -1.0));
    EXPECT_EQ(bloch_phase(pi).real(), -1.0);
    EXPECT_EQ(bloch_phase(pi).imag(), 0.0);
    EXPECT_EQ(bloch_phase(-pi).real(), -1.0);
}

TEST(BlochPhase, MatchesPolar) {
    for (double k = -7.0; k <= 7.0; k += 0.173) {
        EXPECT_NEAR(std::abs(bloch_phase(k) - std::polar(1.0, k)), 0.0, 1e-15) << k;
    }
    EXPECT_THROW(bloch_phase(std::nan("")), InvalidArgument);
}

TEST(BlochMatrix, LiebElementwiseOracle) {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    const auto profile = build_gain_loss_profile(LatticeKind::lieb);
    const double rho = 0.7, k = 0.9;
    const auto m = bloch_matrix(cell, profile, rho, k).matrix;
    // sites b p t q r
    const cplx e = std::polar(1.0, k);
    CMatrix ref = CMatrix::Zero(5, 5);
    ref(0, 1) = 1.0 + std::conj(e);
    ref(1, 0) = 1.0 + e;
    ref(2, 3) = 1.0 + std::conj(e);
    ref(3, 2) = 1.0 + e;
    ref(0, 4) = ref(4, 0) = 1.0;
    ref(2, 4) = ref(4, 2) = 1.0;
    ref(0, 0) = I * rho;
    ref(1, 1) = -I * rho;
    ref(2, 2) = -I * rho;
    ref(3, 3) = I * rho;
    EXPECT_LE((m - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BlochMatrix, HermitianAtZeroRhoAndConjugateInK) {
    for (auto kind : kAll) {
        const auto cell = build_unit_cell(kind);
        const auto profile = cell_profile(kind);
        for (double k : {-2.5, -0.3, 0.0, 1.2, 3.0}) {
            const auto m = bloch_matrix(cell, profile, 0.0, k).matrix;
            EXPECT_LE((m - m.adjoint()).cwiseAbs().maxCoeff(), 0.0);
            const auto mk = bloch_matrix(cell, profile, 0.0, -k).matrix;
            EXPECT_LE((mk - m.conjugate()).cwiseAbs().maxCoeff(), 1e-15);
        }
    }
}

TEST(BlochMatrix, TraceVanishesForOddProfiles) {
    for (auto kind : kAll) {
        const auto m = bloch_matrix(build_unit_cell(kind), cell_profile(kind), 2.3, 0.4).matrix;
        EXPECT_EQ(m.trace(), cplx(0.0, 0.0));
    }
}

TEST(BlochMatrix, PeriodicInK) {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    const auto profile = build_gain_loss_profile(LatticeKind::lieb);
    for (double k : {0.25, -0.5, 1.5, 2.0}) {  // dyadic
        const auto a = bloch_matrix(cell, profile, 1.0, k).matrix;
        const auto b = bloch_matrix(cell, profile, 1.0, k + 2.0 * pi).matrix;
        EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-14) << k;
    }
}

TEST(BlochMatrix, RejectsSplitProfile) {
    EXPECT_THROW(bloch_matrix(build_unit_cell(LatticeKind::stub), build_gain_loss_profile(LatticeKind::stub), 0.0, 0.0),
                 InvalidArgument);
}

TEST(Ribbon, DimensionsAndIndexing) {
    const auto lieb = build_ribbon(build_unit_cell(LatticeKind::lieb), build_gain_loss_profile(LatticeKind::lieb), 1.0,
                                   7, Boundary::open);
    EXPECT_EQ(lieb.dimension(), 35u);
    EXPECT_EQ(lieb.index(3, "t"), 17u);
    EXPECT_FALSE(lieb.index(7, "t"));

    const auto stub = build_ribbon(build_unit_cell(LatticeKind::stub), build_gain_loss_profile(LatticeKind::stub), 1.0,
                                   7, Boundary::open);
    // one closing A-C column
    EXPECT_EQ(stub.dimension(), 7u * 3u + 2u);
    EXPECT_TRUE(stub.index(7, "A"));
    EXPECT_TRUE(stub.index(7, "C"));
    EXPECT_FALSE(stub.index(7, "B"));
    EXPECT_EQ(termination_sites(build_unit_cell(LatticeKind::stub)), (std::vector<std::string>{"A", "C"}));
}

TEST(Ribbon, OpenLiebMatchesHandBuiltMatrix) {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    const auto h = build_ribbon(cell, build_gain_loss_profile(LatticeKind::lieb), 0.5, 3, Boundary::open);
    CMatrix ref = CMatrix::Zero(15, 15);
    auto link = [&](int i, int j) { ref(i, j) = ref(j, i) = 1.0; };
    const double m[5] = {1, -1, -1, 1, 0};
    for (int c = 0; c < 3; ++c) {
        const int o = 5 * c;
        link(o + 0, o + 1);
        link(o + 2, o + 3);
        link(o + 0, o + 4);
        link(o + 2, o + 4);
        if (c < 2) {
            link(o + 1, o + 5);
            link(o + 3, o + 7);
        }
        for (int s = 0; s < 5; ++s) ref(o + s, o + s) = I * 0.5 * m[s];
    }
    EXPECT_EQ((h.matrix - ref).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ribbon, PeriodicWrapsAround) {
    const auto h = build_ribbon(build_unit_cell(LatticeKind::lieb), build_gain_loss_profile(LatticeKind::lieb), 0.0, 4,
                                Boundary::periodic);
    EXPECT_EQ(h.matrix(*h.index(3, "p"), *h.index(0, "b")), cplx(1.0));
    EXPECT_EQ(h.matrix(*h.index(0, "b"), *h.index(3, "p")), cplx(1.0));
    // two cells: both bonds p(0)-b(1) and p(1)-b(0) exist
    const auto two = build_ribbon(two_site_chain(), neutral_profile(), 0.0, 2, Boundary::periodic);
    EXPECT_EQ(two.matrix(*two.index(0, "b"), *two.index(1, "a")), cplx(1.0));
    EXPECT_EQ(two.matrix(*two.index(1, "b"), *two.index(0, "a")), cplx(1.0));
}

TEST(Ribbon, SplitProfileIsOddAlongTheAxis) {
    const auto h = build_ribbon(build_unit_cell(LatticeKind::stub), build_gain_loss_profile(LatticeKind::stub), 2.0,
                                10, Boundary::open);
    double sum = 0.0;
    std::size_t gain = 0, loss = 0;
    for (double m : h.multipliers) {
        sum += m;
        gain += m > 0;
        loss += m < 0;
    }
    EXPECT_EQ(sum, 0.0);
    EXPECT_EQ(gain, loss);
    EXPECT_GT(gain, 0u);
    EXPECT_EQ(h.matrix.trace(), cplx(0.0));
    EXPECT_EQ(h.multipliers[*h.index(0, "A")], 1.0);
    EXPECT_EQ(h.multipliers[*h.index(10, "A")], -1.0);
}

TEST(Ribbon, RejectsBadArguments) {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    const auto profile = build_gain_loss_profile(LatticeKind::lieb);
    EXPECT_THROW(build_ribbon(cell, profile, 1.0, 1, Boundary::open), InvalidArgument);
    EXPECT_THROW(build_ribbon(cell, profile, -1.0, 5, Boundary::open), InvalidArgument);
    EXPECT_THROW(build_ribbon(build_unit_cell(LatticeKind::stub), build_gain_loss_profile(LatticeKind::stub), 1.0, 5,
                              Boundary::periodic),
                 InvalidArgument);
}

TEST(PtSymmetry, BuiltinRibbonsAreSymmetric) {
    for (auto kind : kAll) {
        const auto profile = build_gain_loss_profile(kind);
        for (auto boundary : {Boundary::open, Boundary::periodic}) {
            if (profile.kind == ProfileKind::longitudinal_split && boundary == Boundary::periodic) continue;
            for (std::size_t n : {2u, 5u, 8u}) {
                const auto h = build_ribbon(build_unit_cell(kind), profile, 1.3, n, boundary);
                const auto report = check_pt_symmetry(h);
                EXPECT_TRUE(report.symmetric) << to_string(kind) << " n=" << n << "\n" << describe(report, h);
                EXPECT_EQ(report.violation_count, 0u);
            }
        }
    }
}

TEST(PtSymmetry, WrongParityIsReported) {
    const auto cell = build_unit_cell(LatticeKind::lieb);
    auto profile = build_gain_loss_profile(LatticeKind::lieb);
    profile.parity = {{"b", "p"}, {"p", "b"}, {"t", "q"}, {"q", "t"}};
    ASSERT_NO_THROW(validate(profile, cell));  // odd, but not a lattice symmetry
    const auto h = build_ribbon(cell, profile, 1.0, 4, Boundary::open);
    const auto report = check_pt_symmetry(h);
    EXPECT_FALSE(report.symmetric);
    EXPECT_GT(report.violation_count, 0u);
    EXPECT_LE(report.violations.size(), PtReport::max_listed);
    EXPECT_NE(describe(report, h).find("violate"), std::string::npos);
}

TEST(PtSymmetry, PermutationIsAnInvolution) {
    const auto h = build_ribbon(build_unit_cell(LatticeKind::stub), build_gain_loss_profile(LatticeKind::stub), 1.0, 6,
                                Boundary::open);
    const auto report = check_pt_symmetry(h);
    ASSERT_EQ(report.permutation.size(), h.dimension());
    for (std::size_t i = 0; i < h.dimension(); ++i) EXPECT_EQ(report.permutation[report.permutation[i]], i);
}
