#include "doctest.h"
#include "oracles.hpp"

#include "cidyn/hilbert.hpp"

using namespace cidyn;

TEST_SUITE("hilbert") {
  TEST_CASE("fock annihilation matrix elements") {
    const DenseMatrix a2 = fock_annihilation(2).dense();
    CHECK(a2(0, 1) == Complex(1.0));
    CHECK(a2(0, 0) == Complex(0.0));
    CHECK(a2(1, 0) == Complex(0.0));
    CHECK(a2(1, 1) == Complex(0.0));

    const auto a4 = fock_annihilation(4);
    const DenseMatrix n4 = (a4.adjoint() * a4).dense();
    for (int k = 0; k < 4; ++k) CHECK(n4(k, k).real() == doctest::Approx(k).epsilon(1e-15));

    CHECK(fock_annihilation(5).coeff(2, 3).real() == doctest::Approx(1.7320508).epsilon(1e-7));
    CHECK((fock_annihilation(7).dense() - oracle::annihilation(7)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(fock_annihilation(0), InvalidArgument);
  }

  TEST_CASE("truncated commutator") {
    for (int n = 1; n <= 12; ++n) {
      const auto a = fock_annihilation(n);
      DenseMatrix expected = DenseMatrix::Identity(n, n);
      expected(n - 1, n - 1) -= static_cast<double>(n);
      // sqrt(k)^2 rounds, so exact up to a few ulp
      CHECK((commutator(a, a.adjoint()).dense() - expected).cwiseAbs().maxCoeff() <= 4 * n * 2.3e-16);
    }
  }

  TEST_CASE("ion projectors") {
    const DenseMatrix p = ion_projector("g", "0").dense();
    CHECK(p(0, 1) == Complex(1.0));
    CHECK(p.cwiseAbs().sum() == 1.0);
    const DenseMatrix p00 = ion_projector(Level::zero, Level::zero).dense();
    CHECK(p00(1, 1) == Complex(1.0));
    CHECK(p00.cwiseAbs().sum() == 1.0);
    const auto prod = ion_projector("g", "0") * ion_projector("0", "g");
    CHECK((prod.dense() - ion_projector("g", "g").dense()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(ion_projector("2", "g"), InvalidArgument);
    CHECK_THROWS_AS(parse_level("e"), InvalidArgument);
  }

  TEST_CASE("embedding against explicit kron and index formula") {
    const BasisSpec b{3, 2};
    CHECK(b.dim() == 54);
    const DenseMatrix i3 = DenseMatrix::Identity(3, 3);
    const DenseMatrix ax = oracle::annihilation(3);
    const DenseMatrix ny = oracle::annihilation(2).adjoint() * oracle::annihilation(2);
    const DenseMatrix sig = ion_projector("1", "g").dense();
    const DenseMatrix id2 = DenseMatrix::Identity(2, 2);
    using oracle::kron;
    CHECK((embed(fock_annihilation(3), Slot::mode_x, b).dense() - kron(kron(kron(i3, i3), ax), id2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((embed(ion_projector("1", "g"), Slot::ion_right, b).dense() - kron(kron(kron(i3, sig), DenseMatrix::Identity(3, 3)), id2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    const auto nyop = embed(fock_annihilation(2).adjoint() * fock_annihilation(2), Slot::mode_y, b);
    CHECK((nyop.dense() - kron(kron(kron(i3, i3), DenseMatrix::Identity(3, 3)), ny)).cwiseAbs().maxCoeff() == 0.0);

    // index formula ((3 l + r) nx + n_x) ny + n_y
    for (int l = 0; l < 3; ++l)
      for (int r = 0; r < 3; ++r)
        for (int x = 0; x < 3; ++x)
          for (int y = 0; y < 2; ++y) {
            const Index i = b.index(static_cast<Level>(l), static_cast<Level>(r), x, y);
            CHECK(i == ((3 * l + r) * 3 + x) * 2 + y);
            const auto c = b.coordinates(i);
            CHECK(c.spin == 3 * l + r);
            CHECK(c.nx == x);
            CHECK(c.ny == y);
          }
  }

  TEST_CASE("embedding properties") {
    const BasisSpec b{5, 4};
    const auto ax = embed(fock_annihilation(5), Slot::mode_x, b);
    CHECK(ax.dim() == 9 * 5 * 4);
    CHECK(embed(OperatorMatrix::identity(3, std::string(kIonTag)), Slot::ion_left, b).dense() ==
          DenseMatrix::Identity(b.dim(), b.dim()));
    const auto a = fock_annihilation(4);
    const auto ny = embed(a.adjoint() * a, Slot::mode_y, b);
    CHECK(commutator(ax, ny).max_abs() < 1e-14);
    CHECK_THROWS_AS(embed(fock_annihilation(4), Slot::mode_x, b), DimensionError);
    CHECK_THROWS_AS(embed(fock_annihilation(5), Slot::ion_left, b), DimensionError);
  }

  TEST_CASE("embedding preserves spectra") {
    const BasisSpec b{2, 2};
    DenseMatrix h(3, 3);
    h << 1.0, Complex(0.5, 0.25), 0.0, Complex(0.5, -0.25), -2.0, 0.3, 0.0, 0.3, 0.7;
    const OperatorMatrix op(h, std::string(kIonTag));
    const Eigen::VectorXd local = Eigen::SelfAdjointEigenSolver<DenseMatrix>(h).eigenvalues();
    const Eigen::VectorXd global = Eigen::SelfAdjointEigenSolver<DenseMatrix>(embed(op, Slot::ion_right, b).dense()).eigenvalues();
    // each local eigenvalue appears dim / 3 = 12 times, in ascending order
    for (Index k = 0; k < global.size(); ++k) CHECK(global(k) == doctest::Approx(local(k / 12)).epsilon(1e-12));
  }

  TEST_CASE("products across slots need no re-indexing") {
    const BasisSpec b{3, 3};
    const auto ax = embed(fock_annihilation(3), Slot::mode_x, b);
    const auto ay = embed(fock_annihilation(3), Slot::mode_y, b);
    const auto s = embed(ion_projector("0", "1"), Slot::ion_left, b);
    const DenseMatrix direct = ax.dense() * s.dense() * ay.adjoint().dense();
    CHECK(((ax * s * ay.adjoint()).dense() - direct).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("tags and mismatches") {
    const BasisSpec b{6, 4};
    CHECK(BasisSpec::from_tag(b.tag()) == b);
    CHECK_FALSE(BasisSpec::from_tag("fock6").has_value());
    const auto x = embed(fock_annihilation(6), Slot::mode_x, b);
    const auto other = embed(fock_annihilation(6), Slot::mode_x, BasisSpec{6, 5});
    CHECK_THROWS_AS(x + other, DimensionError);
    CHECK_THROWS_AS((BasisSpec{0, 3}.validate()), InvalidArgument);
  }

  TEST_CASE("expectation values") {
    const BasisSpec b{4, 3};
    PureState vac{StateVector::Zero(b.dim()), b.tag()};
    vac.amplitudes(b.index(Level::g, Level::g, 0, 0)) = 1.0;
    const auto a = fock_annihilation(4);
    CHECK(std::abs(expectation(vac, embed(a.adjoint() * a, Slot::mode_x, b))) == 0.0);
    DensityState rho{DenseMatrix::Identity(b.dim(), b.dim()) / static_cast<double>(b.dim()), b.tag()};
    CHECK(expectation(rho, OperatorMatrix::identity(b.dim(), b.tag())).real() == doctest::Approx(1.0).epsilon(1e-14));
    PureState bad = vac;
    bad.amplitudes *= 2.0;
    CHECK_THROWS_AS(expectation(bad, OperatorMatrix::identity(b.dim(), b.tag())), InvalidArgument);
    CHECK_THROWS_AS(expectation(vac, OperatorMatrix::identity(b.dim(), "other")), DimensionError);
  }

  TEST_CASE("dense and sparse storage agree") {
    const BasisSpec small{1, 1};
    const BasisSpec big{4, 4};
    CHECK_FALSE(embed(fock_annihilation(1), Slot::mode_x, small).is_sparse());
    const auto ax = embed(fock_annihilation(4), Slot::mode_x, big);
    CHECK(ax.is_sparse());
    CHECK(ax.hermiticity_error() > 0.5);
    CHECK((ax + ax.adjoint()).hermiticity_error() == 0.0);
  }
}
