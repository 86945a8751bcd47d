#include "chainscat/smatrix.hpp"

#include <string>

#include "chainscat/error.hpp"

namespace chainscat {
namespace {

int half_dimension(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0 || m.rows() % 2 != 0) {
    throw StructuralError(std::string(what) + " must be square with even positive size, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return static_cast<int>(m.rows() / 2);
}

Eigen::PartialPivLU<CMatrix> checked_lu(const CMatrix& block, const char* name) {
  Eigen::PartialPivLU<CMatrix> lu(block);
  const double rcond = lu.rcond();
  if (!(rcond >= 1.0 / tolerance::kMaxCondition)) throw SingularBlockError(name, rcond);
  return lu;
}

}  // namespace

ScatteringMatrix::ScatteringMatrix(CMatrix m) : m_(std::move(m)), d_(half_dimension(m_, "scattering matrix")) {}

ScatteringMatrix ScatteringMatrix::identity(int d) {
  if (d < 1) throw StructuralError("channel count must be positive");
  CMatrix m = CMatrix::Zero(2 * d, 2 * d);
  m.topRightCorner(d, d).setIdentity();
  m.bottomLeftCorner(d, d).setIdentity();
  return ScatteringMatrix(std::move(m));
}

ScatteringMatrix ScatteringMatrix::from_blocks(const CMatrix& r_left, const CMatrix& t_right,
                                               const CMatrix& t_left, const CMatrix& r_right) {
  const auto d = r_left.rows();
  for (const CMatrix* b : {&r_left, &t_right, &t_left, &r_right}) {
    if (b->rows() != d || b->cols() != d) throw StructuralError("scattering blocks must all be d x d");
  }
  CMatrix m(2 * d, 2 * d);
  m << r_left, t_right, t_left, r_right;
  return ScatteringMatrix(std::move(m));
}

TransferMatrix::TransferMatrix(CMatrix m) : m_(std::move(m)), d_(half_dimension(m_, "transfer matrix")) {}

TransferMatrix TransferMatrix::identity(int d) {
  if (d < 1) throw StructuralError("channel count must be positive");
  return TransferMatrix(CMatrix::Identity(2 * d, 2 * d));
}

CMatrix TransferMatrix::metric(int d) {
  CMatrix k = CMatrix::Identity(2 * d, 2 * d);
  k.bottomRightCorner(d, d) *= -1.0;
  return k;
}

double unitarity_residual(const ScatteringMatrix& s) {
  const CMatrix& m = s.matrix();
  const auto n = m.rows();
  const double a = (m.adjoint() * m - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  const double b = (m * m.adjoint() - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  return std::max(a, b);
}

double pseudo_unitarity_residual(const TransferMatrix& t) {
  const CMatrix& m = t.matrix();
  const CMatrix k = TransferMatrix::metric(t.channels());
  const double a = (m.adjoint() * k * m - k).cwiseAbs().maxCoeff();
  const double b = (m * k * m.adjoint() - k).cwiseAbs().maxCoeff();
  return std::max(a, b);
}

bool validate(const ScatteringMatrix& s, double tol) {
  if (!(tol > 0.0)) throw StructuralError("tolerance must be positive");
  return unitarity_residual(s) <= tol;
}

bool validate(const TransferMatrix& t, double tol) {
  if (!(tol > 0.0)) throw StructuralError("tolerance must be positive");
  return pseudo_unitarity_residual(t) <= tol;
}

TransferMatrix s_to_t(const ScatteringMatrix& s) {
  const int d = s.channels();
  const auto lu = checked_lu(s.t_right(), "t^R");
  const CMatrix ti = lu.inverse();
  const CMatrix ti_rl = ti * s.r_left();
  const CMatrix rr_ti = s.r_right() * ti;

  CMatrix m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = s.t_left() - s.r_right() * ti_rl;
  m.topRightCorner(d, d) = rr_ti;
  m.bottomLeftCorner(d, d) = -ti_rl;
  m.bottomRightCorner(d, d) = ti;
  return TransferMatrix(std::move(m));
}

ScatteringMatrix t_to_s(const TransferMatrix& t) {
  const int d = t.channels();
  const auto lu = checked_lu(t.x4(), "x4");
  const CMatrix x4i = lu.inverse();
  const CMatrix x4i_x3 = x4i * t.x3();

  CMatrix m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = -x4i_x3;
  m.topRightCorner(d, d) = x4i;
  m.bottomLeftCorner(d, d) = t.x1() - t.x2() * x4i_x3;
  m.bottomRightCorner(d, d) = t.x2() * x4i;
  return ScatteringMatrix(std::move(m));
}

ScatteringMatrix compose(const ScatteringMatrix& chain, const ScatteringMatrix& generator) {
  const int d = chain.channels();
  if (generator.channels() != d) {
    throw StructuralError("channel mismatch in compose: " + std::to_string(d) + " vs " +
                          std::to_string(generator.channels()));
  }
  const CMatrix id = CMatrix::Identity(d, d);
  const CMatrix rr_n = chain.r_right();
  const CMatrix rl = generator.r_left();

  Eigen::PartialPivLU<CMatrix> lu_l(id - rr_n * rl);
  Eigen::PartialPivLU<CMatrix> lu_lp(id - rl * rr_n);
  const double rcond = std::min(lu_l.rcond(), lu_lp.rcond());
  if (!(rcond >= 1.0 / tolerance::kMaxCondition)) {
    throw ResonantCavityError("1 - r_n^R r^L is singular (reciprocal condition " + std::to_string(rcond) +
                              "): facing perfect reflectors");
  }

  const CMatrix li_tl_n = lu_l.solve(CMatrix(chain.t_left()));
  const CMatrix lpi_tr = lu_lp.solve(CMatrix(generator.t_right()));

  CMatrix m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = chain.r_left() + chain.t_right() * rl * li_tl_n;
  m.topRightCorner(d, d) = chain.t_right() * lpi_tr;
  m.bottomLeftCorner(d, d) = generator.t_left() * li_tl_n;
  m.bottomRightCorner(d, d) = generator.r_right() + generator.t_left() * rr_n * lpi_tr;
  return ScatteringMatrix(std::move(m));
}

ScatteringMatrix nearest_unitary(const ScatteringMatrix& s) {
  Eigen::JacobiSVD<CMatrix> svd(s.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return ScatteringMatrix(svd.matrixU() * svd.matrixV().adjoint());
}

TransportStats transport(const ScatteringMatrix& s, Side side) {
  const int d = s.channels();
  const CMatrix r = side == Side::left ? CMatrix(s.r_left()) : CMatrix(s.r_right());
  // transmission from the t block keeps relative precision when it is tiny
  const CMatrix t = side == Side::left ? CMatrix(s.t_left()) : CMatrix(s.t_right());
  const CMatrix tau = t.adjoint() * t;
  TransportStats out;
  out.reflection = (r.adjoint() * r).trace().real() / d;
  out.transmission = tau.trace().real() / d;
  const double second = (tau * tau).trace().real() / d;
  out.variance = std::max(0.0, (second - out.transmission * out.transmission) / (d + 1));
  return out;
}

}  // namespace chainscat
