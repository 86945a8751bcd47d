#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "chainscat/error.hpp"
#include "chainscat/single_channel.hpp"
#include "chainscat/smatrix.hpp"
#include "support/oracles.hpp"

using namespace chainscat;

namespace {

// Eigenvalues of the materialised transfer matrix, sorted by modulus.
std::pair<Complex, Complex> transfer_eigenvalues(const SingleChannelParams& p) {
  Eigen::ComplexEigenSolver<CMatrix> es(oracle::transfer(materialize(p).matrix()));
  Complex a = es.eigenvalues()(0), b = es.eigenvalues()(1);
  if (std::abs(a) > std::abs(b)) std::swap(a, b);
  return {a, b};
}

// Slope of log B_n against n by least squares over [n0, n1).
double log_slope(const std::vector<double>& log_b, std::size_t n0) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(log_b.size() - n0);
  for (std::size_t i = n0; i < log_b.size(); ++i) {
    sx += i;
    sy += log_b[i];
    sxx += double(i) * i;
    sxy += i * log_b[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("single_channel") {

TEST_CASE("parametrisation") {
  const auto p = SingleChannelParams::from_lambda(0.5, 0.4, 1.1, 0.2);
  CHECK(p.A * p.A + p.B * p.B == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.lambda() == doctest::Approx(0.4));
  CHECK(validate(materialize(p), 1e-14));

  const auto q = parametrize(materialize(p));
  CHECK(q.A == doctest::Approx(p.A).epsilon(1e-14));
  CHECK(std::abs(wrap_phase(q.alpha_L - p.alpha_L)) < 1e-14);
  CHECK(std::abs(wrap_phase(q.beta_L - p.beta_L)) < 1e-14);

  const auto tiny = SingleChannelParams::from_transmission(1e-200, 0.3);
  CHECK(tiny.B == 1e-200);
  CHECK(tiny.A == 1.0);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const ScatteringMatrix s(oracle::random_unitary(2, rng));
    CHECK(oracle::max_abs(materialize(parametrize(s)).matrix() - s.matrix()) < 1e-13);
  }
  CHECK_THROWS_AS(parametrize(ScatteringMatrix(CMatrix::Identity(2, 2))), DegenerateTransferError);
  CHECK_THROWS_AS(parametrize(ScatteringMatrix::identity(2)), StructuralError);
}

TEST_CASE("discriminant examples") {
  CHECK(discriminant(SingleChannelParams::from_lambda(0.5, 0.628319)) == doctest::Approx(-0.095492).epsilon(1e-5));
  CHECK(discriminant(SingleChannelParams::from_lambda(0.5, 0.314159)) == doctest::Approx(0.154508).epsilon(1e-5));
  for (double lam : {0.0, 0.7, 2.0, -1.3}) CHECK(discriminant(SingleChannelParams::from_lambda(0.0, lam)) <= 0.0);
}

TEST_CASE("eigenvalues against the transfer matrix") {
  const auto ballistic = SingleChannelParams::from_lambda(0.5, 0.628319);
  auto [k1, k2] = eigenvalues_1d(ballistic);
  CHECK(std::abs(std::abs(k1) - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(k2) - 1.0) < 1e-12);
  CHECK(std::abs(k1 - std::conj(k2)) < 1e-12);

  const auto localised = SingleChannelParams::from_lambda(0.5, 0.314159);
  std::tie(k1, k2) = eigenvalues_1d(localised);
  const double D = discriminant(localised);
  CHECK(std::abs(k2) == doctest::Approx((std::cos(0.314159) + std::sqrt(D)) / std::sqrt(0.75)).epsilon(1e-13));
  CHECK(std::abs(k1) < 1.0);
  CHECK(std::abs(k2) > 1.0);

  for (double lam : {0.2, 1.0, 2.5}) {
    std::tie(k1, k2) = eigenvalues_1d(SingleChannelParams::from_lambda(0.0, lam));
    CHECK(std::abs(std::abs(k1) - 1.0) < 1e-14);
    CHECK(std::abs(std::abs(k2) - 1.0) < 1e-14);
  }

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const auto p = SingleChannelParams::from_lambda(0.99 * u(rng), kTwoPi * u(rng), kTwoPi * u(rng), u(rng));
    std::tie(k1, k2) = eigenvalues_1d(p);
    const auto [o1, o2] = transfer_eigenvalues(p);
    // a 2x2 defective-free pair; match as sets
    const double direct = std::abs(k1 - o1) + std::abs(k2 - o2);
    const double swapped = std::abs(k1 - o2) + std::abs(k2 - o1);
    CHECK(std::min(direct, swapped) < 1e-10);
    CHECK(std::abs(std::abs(k1 * std::conj(k2)) - 1.0) < 1e-12);
  }

  CHECK_THROWS_AS(eigenvalues_1d(SingleChannelParams::from_lambda(1.0, 0.3)), DegenerateTransferError);
}

TEST_CASE("fixed points") {
  const auto ballistic = SingleChannelParams::from_lambda(0.5, 0.628319);
  const auto fp = fixed_points(ballistic);
  CHECK(fp.kind == FixedPointKind::elliptic);
  CHECK(fp.A == doctest::Approx(0.557536).epsilon(1e-6));
  CHECK(std::abs(fp.chi) >= kPi / 2);
  const auto s = ChainState1D::from_static(fp.A, fp.chi, ballistic);
  const auto next = static_step(s, ballistic);
  CHECK(std::abs(next.A - fp.A) < 1e-12);
  CHECK(std::abs(wrap_phase(next.chi(ballistic) - fp.chi)) < 1e-12);

  // negative sin(lambda) branch
  const auto mirror = SingleChannelParams::from_lambda(0.5, -0.628319);
  const auto fm = fixed_points(mirror);
  const auto sm = static_step(ChainState1D::from_static(fm.A, fm.chi, mirror), mirror);
  CHECK(std::abs(sm.A - fm.A) < 1e-12);
  CHECK(std::abs(wrap_phase(sm.chi(mirror) - fm.chi)) < 1e-12);

  const auto localised = SingleChannelParams::from_lambda(0.5, 0.314159);
  const auto fa = fixed_points(localised);
  CHECK(fa.kind == FixedPointKind::attractor);
  CHECK(fa.A == 1.0);

  // orbit converges to the attractor and B_n contracts at |kappa_1|
  auto st = ChainState1D::from_static(0.3, 1.0, localised);
  std::vector<double> log_b;
  for (int n = 0; n < 400; ++n) {
    log_b.push_back(st.log_B);
    st = static_step(st, localised);
  }
  CHECK(std::abs(wrap_phase(st.chi(localised) - fa.chi)) < 1e-9);
  CHECK(std::exp(log_slope(log_b, 100)) == doctest::Approx(fa.contraction).epsilon(0.01));
  CHECK(fa.contraction == doctest::Approx(std::abs(eigenvalues_1d(localised).first)).epsilon(1e-14));

  CHECK_THROWS_AS(fixed_points(SingleChannelParams::from_lambda(std::sin(0.4), 0.4)), MarginalCaseError);
}

TEST_CASE("static step examples") {
  const auto free = SingleChannelParams::from_lambda(0.0, 0.37);
  const auto s = ChainState1D::from_static(0.6, 2.0, free);
  const auto t = static_step(s, free);
  CHECK(t.A == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(std::abs(wrap_phase(t.chi(free) - 2.0 - 2 * 0.37)) < 1e-14);

  const auto gen = SingleChannelParams::from_lambda(0.5, 0.628319);
  auto st = ChainState1D::from_static(0.3, 1.0, gen);
  double max_a = 0.0;
  for (int n = 0; n < 10000; ++n) {
    st = static_step(st, gen);
    max_a = std::max(max_a, st.A);
    CHECK_MESSAGE((st.A >= 0.0 && st.A <= 1.0), "n=" << n);
  }
  CHECK(max_a < 0.99);
}

TEST_CASE("static and noisy steps agree with compose") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&] { return SingleChannelParams::from_lambda(u(rng), kTwoPi * u(rng), kTwoPi * u(rng), u(rng) - 0.5); };

  for (int chain = 0; chain < 5; ++chain) {
    const auto first = draw();
    auto state = ChainState1D::single(first);
    ScatteringMatrix s = materialize(first);
    double worst = 0.0;
    for (int n = 0; n < 10000; ++n) {
      const auto g = draw();
      state = noisy_step(state, g);
      s = compose(s, materialize(g));
      if (n < 100 || n % 97 == 0) worst = std::max(worst, oracle::max_abs(state.to_matrix().matrix() - s.matrix()));
    }
    CHECK(worst < 1e-6);
  }

  const auto gen = SingleChannelParams::from_lambda(0.5, 0.628319, 0.3, 0.1);
  auto a = ChainState1D::single(gen);
  auto b = a;
  ScatteringMatrix s = materialize(gen);
  for (int n = 0; n < 200; ++n) {
    a = static_step(a, gen);
    b = noisy_step(b, gen);
    s = compose(s, materialize(gen));
    CHECK(a.A == b.A);
    CHECK(a.phi == b.phi);
  }
  CHECK(oracle::max_abs(a.to_matrix().matrix() - s.matrix()) < 1e-10);
}

TEST_CASE("B product identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto state = ChainState1D::single(SingleChannelParams::from_transmission(u(rng), 0.3));
  double product = state.B;
  for (int n = 0; n < 100; ++n) {
    const auto g = SingleChannelParams::from_transmission(u(rng), kPi / 10, kTwoPi * u(rng));
    const double y = state.phi + g.alpha_L;
    const double p = state.A * g.A;
    product *= g.B / std::sqrt(1.0 + 2.0 * p * std::cos(y) + p * p);
    state = noisy_step(state, g);
  }
  CHECK(std::abs(state.B / product - 1.0) < 1e-12);
  CHECK(std::abs(state.log_B - std::log(product)) < 1e-12);

  auto approx = ChainState1D::single(SingleChannelParams::from_transmission(0.7, 0.3));
  double sum = approx.log_B;
  for (int n = 0; n < 100; ++n) {
    const auto g = SingleChannelParams::from_transmission(u(rng), kPi / 10, kTwoPi * u(rng));
    const double x = g.B, y = approx.phi + g.alpha_L;
    sum += std::log(x / std::sqrt(1.0 + 2.0 * std::sqrt(1 - x * x) * std::cos(y) + (1 - x * x)));
    approx = approximate_step(approx, g);
  }
  CHECK(std::abs(approx.log_B - sum) < 1e-12);
}

TEST_CASE("transmission factor") {
  CHECK(transmission_factor(1.0, 0.4) == doctest::Approx(1.0));
  CHECK(transmission_factor(0.6, 0.0) == doctest::Approx(0.6 / 1.8));
  CHECK(std::isfinite(log_transmission_factor(1e-9, kPi)));
  // near the reflecting limit: f = x / (1 - sqrt(1 - x^2)) at y = pi
  const double x = 1e-6;
  CHECK(log_transmission_factor(x, kPi) == doctest::Approx(std::log(x) - std::log(x * x / (1 + std::sqrt(1 - x * x)))).epsilon(1e-7));
}

TEST_CASE("integral of motion") {
  const auto gen = SingleChannelParams::from_lambda(0.5, 0.628319);
  CHECK(integral_F(ChainState1D::from_static(0.0, 1.3, gen), gen) == doctest::Approx(std::sin(0.628319)));

  auto st = ChainState1D::from_static(0.3, 1.0, gen);
  const double f1 = integral_F(st, gen);
  double drift = 0.0;
  for (int n = 0; n < 10000; ++n) {
    st = static_step(st, gen);
    drift = std::max(drift, std::abs(integral_F(st, gen) - f1));
  }
  CHECK(drift < 1e-10);

  // a later point on the same orbit, used as a fresh initial condition
  const auto other = ChainState1D::from_static(st.A, st.chi(gen), gen);
  CHECK(std::abs(integral_F(other, gen) - f1) < 1e-10);

  CHECK_THROWS_AS(integral_F(ChainState1D::from_static(1.0, 0.0, gen), gen), DegenerateTransferError);
}

TEST_CASE("perfect reflector corner") {
  const auto gen = SingleChannelParams::from_lambda(1.0, 0.4);
  const auto s = ChainState1D::from_static(1.0, kPi, gen);
  const auto t = static_step(s, gen);
  CHECK(t.A == 1.0);
  CHECK(t.B == 0.0);
  CHECK(std::isfinite(t.phi));
  CHECK(std::isinf(t.log_B));
}

TEST_CASE("D-dichotomy on random generators") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const auto g = SingleChannelParams::from_lambda(0.95 * u(rng), kTwoPi * u(rng), kTwoPi * u(rng));
    const double D = discriminant(g);
    if (std::abs(D) < 1e-3) continue;
    auto st = ChainState1D::single(g);
    double min_log_b = 0.0;
    for (int n = 0; n < 2000; ++n) {
      st = static_step(st, g);
      min_log_b = std::min(min_log_b, st.log_B);
    }
    if (D < 0) {
      CHECK(min_log_b > std::log(1e-6));
    } else {
      CHECK(st.log_B < -1.0);
    }
    ++checked;
  }
  CHECK(checked > 80);
}

}  // TEST_SUITE
