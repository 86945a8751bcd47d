#include <doctest.h>

#include <algorithm>
#include <random>

#include "chainscat/error.hpp"
#include "chainscat/haar.hpp"
#include "chainscat/multi_channel.hpp"
#include "chainscat/single_channel.hpp"
#include "support/oracles.hpp"

using namespace chainscat;

namespace {

// Block-diagonal scattering matrix of decoupled single-channel scatterers.
ScatteringMatrix decoupled(const std::vector<SingleChannelParams>& parts) {
  const int d = static_cast<int>(parts.size());
  CMatrix m = CMatrix::Zero(2 * d, 2 * d);
  for (int i = 0; i < d; ++i) {
    const CMatrix s = materialize(parts[i]).matrix();
    m(i, i) = s(0, 0);
    m(i, d + i) = s(0, 1);
    m(d + i, i) = s(1, 0);
    m(d + i, d + i) = s(1, 1);
  }
  return ScatteringMatrix(m);
}

ScatteringMatrix haar_with(int d, TransportClass label, std::uint64_t seed) {
  HaarSampler haar(d, seed);
  for (;;) {
    auto s = haar.next();
    if (classify(s).label == label) return s;
  }
}

std::vector<double> sorted_moduli(const CVector& v) {
  std::vector<double> m;
  for (const auto& z : v) m.push_back(std::abs(z));
  std::sort(m.begin(), m.end());
  return m;
}

}  // namespace

TEST_SUITE("multi_channel") {

TEST_CASE("classify examples") {
  const auto id = classify(ScatteringMatrix::identity(4));
  CHECK(id.label == TransportClass::ballistic);
  CHECK(id.d_u == 0);
  CHECK(id.decay_rate == 0.0);
  for (const auto& k : id.spectrum) CHECK(std::abs(std::abs(k) - 1.0) < 1e-15);

  const auto gen = SingleChannelParams::from_lambda(0.5, 0.314159, 0.2, 0.1);
  const auto one = classify(materialize(gen));
  CHECK(one.d_u == 1);
  CHECK(one.label == TransportClass::totally_localised);
  CHECK(one.decay_rate == doctest::Approx(std::log(std::abs(eigenvalues_1d(gen).second))).epsilon(1e-12));

  HaarSampler haar(3, 8);
  for (int k = 0; k < 200; ++k) {
    const auto c = classify(haar.next());
    CHECK(pairing_residual(c.spectrum) < 1e-9);
    CHECK(c.d_u <= c.d);
    CHECK(c.label == class_of(c.d_u, c.d));
    CHECK(c.decay_rate >= 0.0);
  }

  const auto json = one.json();
  CHECK(json.find("\"label\":\"totally_localised\"") != std::string::npos);
  CHECK_THROWS_AS(classify(ScatteringMatrix(CMatrix::Identity(2, 2))), SingularBlockError);
}

TEST_CASE("class labels") {
  CHECK(class_of(0, 3) == TransportClass::ballistic);
  CHECK(class_of(1, 3) == TransportClass::partially_localised);
  CHECK(class_of(3, 3) == TransportClass::totally_localised);
  CHECK(to_string(TransportClass::partially_localised) == "partially_localised");
}

TEST_CASE("band assignment is exhaustive") {
  HaarSampler haar(4, 17);
  for (int k = 0; k < 300; ++k) {
    const auto t = s_to_t(haar.next());
    const auto sp = transfer_spectrum(t);
    CHECK(sp.outside + sp.inside + sp.on_circle == 8);
    CHECK(sp.outside == sp.inside);
    CHECK(sp.d_u() == 4 - sp.on_circle / 2);
  }
}

TEST_CASE("eigenvector structure") {
  const auto s = haar_with(2, TransportClass::totally_localised, 4);
  const auto es = eigenvector_structure(s);
  CHECK(es.max_outside_vKv < 1e-9);
  for (const auto& m : es.modes) {
    if (!m.outside || m.degenerate) continue;
    CHECK(std::abs(m.vKv) < 1e-9);
    CHECK(std::abs(m.alpha_norm2 - m.beta_norm2) < 1e-9);
    CHECK(std::abs(m.zeta_norm2 - m.eta_norm2) < 1e-9);
    CHECK(m.beta_norm2 > 0.0);
  }

  // direct check of the outside-mode identity from a plain eigen-decomposition
  const CMatrix t = oracle::transfer(s.matrix());
  Eigen::ComplexEigenSolver<CMatrix> ev(t);
  const CMatrix k = TransferMatrix::metric(2);
  for (int i = 0; i < 4; ++i) {
    if (std::abs(ev.eigenvalues()(i)) < 1.0 + 1e-6) continue;
    const CVector v = ev.eigenvectors().col(i).normalized();
    CHECK(std::abs((v.adjoint() * k * v)(0)) < 1e-9);
  }

  const auto ball = decoupled({SingleChannelParams::from_lambda(0.5, 0.628319),
                               SingleChannelParams::from_lambda(0.3, 1.1, 0.4)});
  const auto eb = eigenvector_structure(ball);
  CHECK(eb.classification.label == TransportClass::ballistic);
  CHECK(eb.min_circle_vKv > 1e-3);
  for (const auto& m : eb.modes) CHECK(std::abs(m.vKv) > 1e-3);
}

TEST_CASE("spectrum of chain powers") {
  const auto s = haar_with(2, TransportClass::partially_localised, 6);
  const auto c = classify(s);
  ScatteringMatrix chain = s;
  CMatrix power = oracle::transfer(s.matrix());
  const CMatrix t = power;
  int resolved = 0;
  for (int n = 1; n <= 10; ++n) {
    if (n > 1) {
      chain = compose(chain, s);
      power = t * power;
    }
    CVector kn = c.spectrum;
    for (auto& z : kn) z = std::pow(z, n);
    const auto expect = sorted_moduli(kn);
    // small moduli are only resolved while T_n stays well conditioned
    if (expect.back() / expect.front() < 1e6) {
      ++resolved;
      const auto got = sorted_moduli(transfer_spectrum(s_to_t(chain)).eigenvalues);
      for (std::size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(got[i] / expect[i] - 1.0) < 1e-8);

      const auto trace = transport(t_to_s(TransferMatrix(power)));
      CHECK(std::abs(trace.transmission - transport(chain).transmission) < 1e-8);
    }
  }
  CHECK(resolved >= 2);
}

TEST_CASE("classification invariant under a common channel rotation") {
  std::mt19937_64 rng(31);
  HaarSampler haar(3, 12);
  for (int k = 0; k < 20; ++k) {
    const auto s = haar.next();
    const CMatrix u = oracle::random_unitary(3, rng);
    CMatrix rot = CMatrix::Zero(6, 6);
    rot.topLeftCorner(3, 3) = u;
    rot.bottomRightCorner(3, 3) = u;
    const ScatteringMatrix s2(rot * s.matrix() * rot.adjoint());
    const auto a = classify(s), b = classify(s2);
    CHECK(a.label == b.label);
    CHECK(a.d_u == b.d_u);
    const auto ma = sorted_moduli(a.spectrum), mb = sorted_moduli(b.spectrum);
    for (std::size_t i = 0; i < ma.size(); ++i) CHECK(std::abs(ma[i] - mb[i]) < 1e-8 * std::max(1.0, ma[i]));
  }
}

TEST_CASE("plateau law on a partially localised sample") {
  const auto s = haar_with(3, TransportClass::partially_localised, 3);
  const auto c = classify(s);
  const auto n_max = static_cast<std::int64_t>(std::clamp(40.0 / c.slowest_rate, 200.0, 20000.0));
  const auto trace = evolve_chain(s, n_max);
  CHECK(trace.plateau_tracked);
  CHECK(trace.plateau_found);
  CHECK(trace.max_plateau_deviation < 1e-6);
  CHECK(trace.beta == 1);
  CHECK(std::abs(trace.rate_ratio - 1.0) < 0.2);
  for (const auto& r : trace.rows) CHECK((r.T >= -1e-12 && r.T <= 1.0 + 1e-12));

  // order of magnitude #K / d
  const double expect = static_cast<double>(c.d_u) / 3.0;
  CHECK(trace.plateau > expect / 30.0);
  CHECK(trace.plateau < std::min(1.0, 30.0 * expect));

  const auto pv = plateau_transmission(s, n_max);
  CHECK(pv.normalized == doctest::Approx(trace.rows.back().T0));
  CHECK(pv.unnormalized == doctest::Approx(3.0 * pv.normalized));
}

TEST_CASE("decay exponent beta") {
  // total localisation: T_n = |t_n|^2 decays at twice the slowest rate
  const auto total = haar_with(2, TransportClass::totally_localised, 10);
  const auto ct = classify(total);
  const auto tr = evolve_chain(total, static_cast<std::int64_t>(std::clamp(100.0 / ct.slowest_rate, 50.0, 20000.0)));
  CHECK(tr.beta == 2);
  CHECK(std::abs(tr.rate_ratio / 2.0 - 1.0) < 0.02);
  const auto pv = plateau_transmission(total, 10);
  CHECK(pv.totally_localised);
  CHECK(pv.normalized == 0.0);

  // decoupled localised + ballistic channels: the projected off-diagonal
  // blocks vanish and the transient decays at 2 I
  const auto split = decoupled({SingleChannelParams::from_lambda(0.5, 0.314159),
                                SingleChannelParams::from_lambda(0.5, 0.628319)});
  const auto cs = classify(split);
  CHECK(cs.label == TransportClass::partially_localised);
  const auto ts = evolve_chain(split, 400);
  CHECK(ts.beta == 2);
  CHECK(std::abs(ts.fitted_rate / (2.0 * cs.decay_rate) - 1.0) < 0.2);

  // generic coupling: exponent I
  const auto generic = haar_with(3, TransportClass::partially_localised, 21);
  const auto cg = classify(generic);
  const auto tg = evolve_chain(generic, static_cast<std::int64_t>(std::clamp(40.0 / cg.slowest_rate, 200.0, 20000.0)));
  CHECK(tg.beta == 1);
}

TEST_CASE("evolve examples") {
  const auto ball = materialize(SingleChannelParams::from_lambda(0.5, 0.628319));
  const auto tb = evolve_chain(ball, 100000);
  CHECK(tb.min_T > 0.1);
  CHECK(tb.max_residual < 1e-10);
  CHECK_FALSE(tb.plateau_tracked);

  const auto free = evolve_chain(ScatteringMatrix::identity(3), 100);
  for (const auto& r : free.rows) CHECK(r.T == 1.0);

  const auto pv = plateau_transmission(ball, 5);
  CHECK(pv.degenerate_use);

  EvolveOptions opts;
  opts.reunitarize = true;
  CHECK(evolve_chain(ball, 10, opts).rows.size() == 10);
  CHECK(evolve_chain(ball, 3).csv().rfind("n,T_n,R_n,unitarity_residual\n", 0) == 0);
  CHECK_THROWS_AS(evolve_chain(ball, 0), StructuralError);
}

}  // TEST_SUITE
