#include <doctest.h>

#include <random>

#include "chainscat/error.hpp"
#include "chainscat/haar.hpp"
#include "chainscat/matrix_io.hpp"
#include "chainscat/single_channel.hpp"
#include "chainscat/smatrix.hpp"
#include "support/oracles.hpp"

using namespace chainscat;

TEST_SUITE("smatrix") {

TEST_CASE("validate") {
  CHECK(validate(ScatteringMatrix::identity(1), 1e-9));
  CHECK(validate(materialize(SingleChannelParams::from_lambda(0.5, 0.0)), 1e-12));

  CMatrix scaled = ScatteringMatrix::identity(1).matrix();
  scaled(0, 1) *= 1.01;
  scaled(1, 0) *= 1.01;
  CHECK_FALSE(validate(ScatteringMatrix(scaled), 1e-9));

  CHECK_THROWS_AS(ScatteringMatrix(CMatrix::Identity(3, 3)), StructuralError);
  CHECK_THROWS_AS(ScatteringMatrix(CMatrix::Identity(2, 4)), StructuralError);
}

TEST_CASE("s_to_t examples") {
  const auto t = s_to_t(ScatteringMatrix::identity(3));
  CHECK(oracle::max_abs(t.matrix() - CMatrix::Identity(6, 6)) == 0.0);

  HaarSampler haar(2, 11);
  for (int k = 0; k < 50; ++k) {
    const auto s = haar.next();
    const auto tm = s_to_t(s);
    CHECK(pseudo_unitarity_residual(tm) < 1e-12 * std::max(1.0, tm.matrix().squaredNorm()));
    CHECK(oracle::max_abs(tm.matrix() - oracle::transfer(s.matrix())) < 1e-11 * tm.matrix().cwiseAbs().maxCoeff());
  }

  CMatrix reflector = CMatrix::Identity(2, 2);
  try {
    s_to_t(ScatteringMatrix(reflector));
    FAIL("perfect reflector converted");
  } catch (const SingularBlockError& e) {
    CHECK(e.block() == "t^R");
  }
}

TEST_CASE("t_to_s examples") {
  const auto s = t_to_s(TransferMatrix::identity(2));
  CHECK(oracle::max_abs(s.matrix() - ScatteringMatrix::identity(2).matrix()) == 0.0);

  HaarSampler haar(3, 5);
  for (int k = 0; k < 100; ++k) {
    const auto s3 = haar.next();
    CHECK(oracle::max_abs(t_to_s(s_to_t(s3)).matrix() - s3.matrix()) < tolerance::kRoundTrip);
  }

  const auto p = SingleChannelParams::from_lambda(0.5, 0.2 * kPi);
  const auto back = parametrize(t_to_s(s_to_t(materialize(p))));
  CHECK(back.A == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(wrap_phase(back.alpha_L - p.alpha_L)) < 1e-12);
  CHECK(std::abs(wrap_phase(back.beta_L - p.beta_L)) < 1e-12);
  CHECK(std::abs(wrap_phase(back.beta_R - p.beta_R)) < 1e-12);

  CMatrix bad = CMatrix::Identity(2, 2);
  bad(1, 1) = 0.0;
  try {
    t_to_s(TransferMatrix(bad));
    FAIL("singular x4 accepted");
  } catch (const SingularBlockError& e) {
    CHECK(e.block() == "x4");
  }
}

TEST_CASE("compose against the series oracle") {
  std::mt19937_64 rng(7);
  for (int d : {1, 2, 3}) {
    for (int k = 0; k < 30; ++k) {
      const ScatteringMatrix a(oracle::random_unitary(2 * d, rng));
      const ScatteringMatrix b(oracle::random_unitary(2 * d, rng));
      const auto c = compose(a, b);
      CHECK(oracle::max_abs(c.matrix() - oracle::series(a.matrix(), b.matrix())) < 1e-11);
      CHECK(unitarity_residual(c) < 1e-12);
    }
  }
}

TEST_CASE("compose examples") {
  HaarSampler haar(2, 3);
  const auto s = haar.next();
  CHECK(oracle::max_abs(compose(s, ScatteringMatrix::identity(2)).matrix() - s.matrix()) < 1e-15);
  CHECK(oracle::max_abs(compose(ScatteringMatrix::identity(2), s).matrix() - s.matrix()) < 1e-15);

  // chain r^L = 1 followed by a reflector with r^L = 1 and r^R = -1: the
  // cavity 1 - r_n^R r^L = 2 is regular.
  CMatrix chain = CMatrix::Zero(2, 2);
  chain(0, 0) = 1.0;
  chain(1, 1) = -1.0;
  CMatrix gen = chain;
  const auto c = compose(ScatteringMatrix(chain), ScatteringMatrix(gen));
  CHECK(std::abs(c.matrix()(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(c.matrix()(0, 1)) == 0.0);
  CHECK(std::abs(c.matrix()(1, 0)) == 0.0);

  // facing perfect mirrors: r_n^R = 1, r^L = 1
  CMatrix mirror = CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(compose(ScatteringMatrix(mirror), ScatteringMatrix(mirror)), ResonantCavityError);
  CHECK_THROWS_AS(compose(ScatteringMatrix::identity(1), ScatteringMatrix::identity(2)), StructuralError);

  for (int k = 0; k < 50; ++k) {
    const auto a = haar.next(), b = haar.next();
    const CMatrix lhs = s_to_t(compose(a, b)).matrix();
    const CMatrix rhs = oracle::transfer(b.matrix()) * oracle::transfer(a.matrix());
    CHECK(oracle::max_abs(lhs - rhs) < 1e-11 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("group properties") {
  HaarSampler haar(3, 21);
  for (int k = 0; k < 30; ++k) {
    const auto a = haar.next(), b = haar.next(), c = haar.next();
    const auto left = compose(compose(a, b), c);
    const auto right = compose(a, compose(b, c));
    CHECK(oracle::max_abs(left.matrix() - right.matrix()) < 1e-9);
  }
}

TEST_CASE("unitarity survives long chains") {
  for (int d : {1, 3}) {
    HaarSampler haar(d, 100 + d);
    auto s = haar.next();
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      s = compose(s, haar.next());
      worst = std::max(worst, unitarity_residual(s));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("nearest_unitary") {
  CMatrix m = ScatteringMatrix::identity(2).matrix();
  m(0, 2) = 1.001;
  m(1, 1) = 0.002;
  const auto u = nearest_unitary(ScatteringMatrix(m));
  CHECK(unitarity_residual(u) < 1e-14);
  HaarSampler haar(2, 1);
  const auto s = haar.next();
  CHECK(oracle::max_abs(nearest_unitary(s).matrix() - s.matrix()) < 1e-14);
}

TEST_CASE("transport examples") {
  const auto single = transport(materialize(SingleChannelParams::from_lambda(0.5, 0.3)));
  CHECK(single.reflection == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(single.transmission == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(single.variance == doctest::Approx(0.0).epsilon(1e-14));

  for (int d : {1, 4}) {
    const auto id = transport(ScatteringMatrix::identity(d), Side::right);
    CHECK(id.transmission == 1.0);
    CHECK(id.reflection == 0.0);
    CHECK(id.variance == 0.0);
  }

  HaarSampler haar(3, 9);
  for (int k = 0; k < 100; ++k) {
    const auto s = haar.next();
    const auto l = transport(s, Side::left);
    const auto r = transport(s, Side::right);
    CHECK(std::abs(l.variance - r.variance) < 1e-12);
    CHECK(std::abs(l.transmission + l.reflection - 1.0) < 1e-12);

    // variance oracle: eigenvalues of r^dag r
    const int d = 3;
    const CMatrix rl = s.r_left();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rl.adjoint() * rl);
    const double mean = es.eigenvalues().mean();
    const double var = ((es.eigenvalues().array() - mean).square().sum() / d) / (d + 1);
    CHECK(std::abs(l.variance - var) < 1e-12);
  }
}

TEST_CASE("matrix file round trip") {
  HaarSampler haar(2, 4);
  const auto s = haar.next();
  const auto parsed = parse_matrix_json(to_json(s));
  CHECK(parsed.matrix.matrix() == s.matrix());
  CHECK(parsed.residual < 1e-12);

  CHECK_THROWS_AS(parse_matrix_json(R"({"d": 1, "re": [[1, 0], [0, 2]], "im": [[0, 0], [0, 0]]})"),
                  StructuralError);
  CHECK_THROWS_AS(parse_matrix_json(R"({"d": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]})"),
                  StructuralError);
  CHECK_THROWS_AS(parse_matrix_json("not json"), StructuralError);

  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) CHECK(std::stod(format_double(x)) == x);
}

}  // TEST_SUITE
