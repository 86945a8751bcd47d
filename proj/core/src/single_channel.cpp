#include "chainscat/single_channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainscat/error.hpp"

namespace chainscat {
namespace {

constexpr Complex kI{0.0, 1.0};

// |1 + A_n A e^{-i chi}|^2 below this is the A_n = A = 1 corner.
constexpr double kCornerDenominator = 1e-300;

void check_amplitude(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw StructuralError(std::string(name) + " must lie in [0, 1]");
}

// One exact lengthening step written in the noisy-map variables; the static
// map is the same recursion with chi = phi + alpha_L.
ChainState1D advance(const ChainState1D& s, const SingleChannelParams& g) {
  const double y = s.phi + g.alpha_L;
  const double p = s.A * g.A;
  const Complex e = std::polar(1.0, -y);
  const Complex w = 1.0 + p * e;
  const double den = std::norm(w);

  ChainState1D out = s;
  out.n = s.n + 1;
  if (den < kCornerDenominator || (s.B == 0.0 && g.B == 0.0)) {
    const double wrapped = wrap_phase(y);
    out.A = 1.0;
    out.B = 0.0;
    out.log_B = -std::numeric_limits<double>::infinity();
    out.phi = wrap_phase(s.phi + 2.0 * g.lambda() - wrapped);
    out.beta_L = s.beta_L + g.beta_L - 0.5 * wrapped;
    out.beta_R = s.beta_R + g.beta_R - 0.5 * wrapped;
    return out;
  }
  const double c = p * std::cos(y);
  const double a2 = (s.A * s.A + g.A * g.A + 2.0 * c) / (1.0 + 2.0 * c + p * p);
  out.A = std::sqrt(std::clamp(a2, 0.0, 1.0));
  out.B = s.B * g.B / std::sqrt(den);
  out.log_B = s.log_B + std::log(g.B) - 0.5 * std::log(den);
  const double arg_w = std::arg(w);
  out.phi = wrap_phase(s.phi + 2.0 * g.lambda() + std::arg(w * (s.A + g.A * e)));
  out.beta_L = s.beta_L + g.beta_L + arg_w;
  out.beta_R = s.beta_R + g.beta_R + arg_w;
  return out;
}

}  // namespace

SingleChannelParams SingleChannelParams::from_lambda(double A, double lambda, double alpha_L, double delta) {
  check_amplitude(A, "A");
  return {A, std::sqrt((1.0 - A) * (1.0 + A)), alpha_L, lambda + delta, lambda - delta};
}

SingleChannelParams SingleChannelParams::from_transmission(double B, double lambda, double alpha_L,
                                                           double delta) {
  check_amplitude(B, "B");
  return {std::sqrt((1.0 - B) * (1.0 + B)), B, alpha_L, lambda + delta, lambda - delta};
}

ScatteringMatrix materialize(const SingleChannelParams& p) {
  CMatrix m(2, 2);
  m(0, 0) = p.A * std::polar(1.0, p.alpha_L);
  m(0, 1) = p.B * std::polar(1.0, p.beta_R);
  m(1, 0) = p.B * std::polar(1.0, p.beta_L);
  m(1, 1) = -p.A * std::polar(1.0, p.beta_L + p.beta_R - p.alpha_L);
  return ScatteringMatrix(std::move(m));
}

SingleChannelParams parametrize(const ScatteringMatrix& s) {
  if (s.channels() != 1) throw StructuralError("parametrize requires a single-channel matrix");
  const Complex rl = s.matrix()(0, 0), tr = s.matrix()(0, 1), tl = s.matrix()(1, 0);
  const double b = 0.5 * (std::abs(tl) + std::abs(tr));
  if (b == 0.0) throw DegenerateTransferError("perfect reflector: transmission phases undefined");
  SingleChannelParams p;
  p.A = std::abs(rl);
  p.B = b;
  p.alpha_L = wrap_positive(std::arg(rl));
  p.beta_L = wrap_positive(std::arg(tl));
  p.beta_R = wrap_positive(std::arg(tr));
  return p;
}

ChainState1D ChainState1D::single(const SingleChannelParams& first) {
  ChainState1D s;
  s.A = first.A;
  s.B = first.B;
  s.log_B = std::log(first.B);
  s.phi = first.beta_L + first.beta_R - first.alpha_L;
  s.beta_L = first.beta_L;
  s.beta_R = first.beta_R;
  s.n = 1;
  return s;
}

ChainState1D ChainState1D::from_static(double A, double chi, const SingleChannelParams& gen, double beta_L,
                                       double beta_R) {
  check_amplitude(A, "A_n");
  ChainState1D s;
  s.A = A;
  s.B = std::sqrt((1.0 - A) * (1.0 + A));
  s.log_B = std::log(s.B);
  s.phi = chi - gen.alpha_L;
  s.beta_L = beta_L;
  s.beta_R = beta_R;
  return s;
}

ChainState1D ChainState1D::from_matrix(const ScatteringMatrix& m, std::int64_t n) {
  ChainState1D s = single(parametrize(m));
  s.n = n;
  return s;
}

SingleChannelParams ChainState1D::params() const { return {A, B, alpha_L(), beta_L, beta_R}; }

ChainState1D static_step(const ChainState1D& state, const SingleChannelParams& gen) { return advance(state, gen); }

ChainState1D noisy_step(const ChainState1D& state, const SingleChannelParams& gen) { return advance(state, gen); }

ChainState1D approximate_step(const ChainState1D& state, const SingleChannelParams& gen) {
  const double y = state.phi + gen.alpha_L;
  ChainState1D out = state;
  out.n = state.n + 1;
  const double lf = log_transmission_factor(gen.B, y);
  out.log_B = state.log_B + lf;
  out.B = state.B * std::exp(lf);
  out.A = std::sqrt(std::max(0.0, (1.0 - out.B) * (1.0 + out.B)));
  out.phi = wrap_phase(state.phi + 2.0 * gen.lambda() + 2.0 * std::arg(1.0 + gen.A * std::polar(1.0, -y)));
  return out;
}

double transmission_factor(double x, double y) { return std::exp(log_transmission_factor(x, y)); }

double log_transmission_factor(double x, double y) {
  const double a = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  // 1 + 2a cos y + a^2 = (1 - a)^2 + 4a cos^2(y/2), with 1 - a = x^2 / (1 + a)
  const double gap = x * x / (1.0 + a);
  const double c = std::cos(0.5 * y);
  return std::log(x) - 0.5 * std::log(gap * gap + 4.0 * a * c * c);
}

double discriminant(const SingleChannelParams& gen) {
  const double s = std::sin(gen.lambda());
  return gen.A * gen.A - s * s;
}

std::pair<Complex, Complex> eigenvalues_1d(const SingleChannelParams& gen) {
  if (!(gen.B > 0.0)) throw DegenerateTransferError("eigenvalues_1d: A = 1 has no transfer matrix");
  const double lambda = gen.lambda();
  const Complex root = std::sqrt(Complex(discriminant(gen), 0.0));
  const Complex phase = std::polar(1.0, 0.5 * (gen.beta_L - gen.beta_R)) / gen.B;
  Complex k1 = phase * (std::cos(lambda) + root);
  Complex k2 = phase * (std::cos(lambda) - root);
  if (std::abs(k1) > std::abs(k2)) std::swap(k1, k2);
  return {k1, k2};
}

FixedPointReport fixed_points(const SingleChannelParams& gen) {
  const double D = discriminant(gen);
  if (std::abs(D) < tolerance::kMarginal) throw MarginalCaseError("fixed_points: marginal generator (D = 0)");
  const double lambda = gen.lambda();
  const double s = std::sin(lambda);

  FixedPointReport r{};
  r.D = D;
  if (D < 0.0) {
    r.kind = FixedPointKind::elliptic;
    // |u| - sqrt(u^2 - 1) with u = sin(lambda)/A, written without cancellation.
    r.A = gen.A / (std::abs(s) + std::sqrt(-D));
    r.chi = wrap_phase(lambda + 0.5 * kPi);
    if (std::abs(r.chi) < 0.5 * kPi) r.chi = wrap_phase(lambda - 0.5 * kPi);
    r.contraction = 1.0;
  } else {
    r.kind = FixedPointKind::attractor;
    const double u = s / gen.A;
    r.A = 1.0;
    r.chi = wrap_phase(lambda + std::arg(kI * u + std::sqrt(std::max(0.0, 1.0 - u * u))));
    r.contraction = std::abs(eigenvalues_1d(gen).first);
  }
  return r;
}

double integral_F(const ChainState1D& state, const SingleChannelParams& gen) {
  if (!(state.B > 0.0) || state.A >= 1.0) throw DegenerateTransferError("integral_F: undefined at A_n = 1");
  const double lambda = gen.lambda();
  return (std::sin(lambda) + state.A * gen.A * std::sin(lambda - state.chi(gen))) / (state.B * state.B);
}

}  // namespace chainscat
