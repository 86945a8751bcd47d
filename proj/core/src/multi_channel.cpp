#include "chainscat/multi_channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "chainscat/error.hpp"
#include "chainscat/matrix_io.hpp"

namespace chainscat {
namespace {

std::vector<int> sorted_order(const CVector& ev) {
  std::vector<int> idx(static_cast<std::size_t>(ev.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double ma = std::abs(ev(a)), mb = std::abs(ev(b));
    if (ma != mb) return ma < mb;
    return std::arg(ev(a)) < std::arg(ev(b));
  });
  return idx;
}

// Orthonormal basis of the orthogonal complement of span(columns of v).
CMatrix complement_basis(const CMatrix& v, int d) {
  if (v.cols() == 0) return CMatrix::Identity(d, d);
  Eigen::HouseholderQR<CMatrix> qr(v);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  return q.rightCols(d - v.cols());
}

// Least-squares slope and intercept of y against x.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace

std::string_view to_string(TransportClass c) {
  switch (c) {
    case TransportClass::ballistic:
      return "ballistic";
    case TransportClass::partially_localised:
      return "partially_localised";
    case TransportClass::totally_localised:
      return "totally_localised";
  }
  return "unknown";
}

TransportClass class_of(int d_u, int d) {
  if (d_u == 0) return TransportClass::ballistic;
  if (d_u >= d) return TransportClass::totally_localised;
  return TransportClass::partially_localised;
}

TransferSpectrum transfer_spectrum(const TransferMatrix& t, double tol) {
  Eigen::ComplexEigenSolver<CMatrix> es(t.matrix(), false);
  if (es.info() != Eigen::Success) throw DefectiveSpectrumError("eigenvalue iteration did not converge");
  const CVector& ev = es.eigenvalues();
  TransferSpectrum s;
  s.eigenvalues.resize(ev.size());
  const auto order = sorted_order(ev);
  s.max_modulus = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Complex k = ev(order[i]);
    s.eigenvalues(static_cast<Eigen::Index>(i)) = k;
    const double m = std::abs(k);
    s.max_modulus = std::max(s.max_modulus, m);
    if (m > 1.0 + tol) {
      ++s.outside;
    } else if (m < 1.0 - tol) {
      ++s.inside;
    } else {
      ++s.on_circle;
    }
  }
  return s;
}

double pairing_residual(const CVector& ev) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const Complex partner = 1.0 / std::conj(ev(i));
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < ev.size(); ++j) best = std::min(best, std::abs(ev(j) - partner));
    worst = std::max(worst, best / std::abs(partner));
  }
  return worst;
}

std::string SpectralClassification::json() const {
  std::ostringstream os;
  os << "{\"spectrum\":[";
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    if (i) os << ',';
    os << '[' << format_double(spectrum(i).real()) << ',' << format_double(spectrum(i).imag()) << ']';
  }
  os << "],\"d_u\":" << d_u << ",\"label\":\"" << to_string(label) << "\",\"I\":" << format_double(decay_rate)
     << '}';
  return os.str();
}

SpectralClassification classify(const ScatteringMatrix& s, double tol) { return classify(s_to_t(s), tol); }

SpectralClassification classify(const TransferMatrix& t, double tol) {
  const int d = t.channels();
  Eigen::ComplexEigenSolver<CMatrix> es(t.matrix(), true);
  if (es.info() != Eigen::Success) throw DefectiveSpectrumError("eigenvalue iteration did not converge");

  SpectralClassification c;
  c.d = d;
  const auto order = sorted_order(es.eigenvalues());
  const Eigen::Index m = 2 * d;
  c.spectrum.resize(m);
  c.right.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    c.spectrum(i) = es.eigenvalues()(order[static_cast<std::size_t>(i)]);
    c.right.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]).normalized();
  }

  Eigen::JacobiSVD<CMatrix> svd(c.right);
  const auto& sv = svd.singularValues();
  c.eigenvector_condition = sv(m - 1) > 0.0 ? sv(0) / sv(m - 1) : std::numeric_limits<double>::infinity();
  c.defective = !(c.eigenvector_condition <= tolerance::kMaxCondition);
  c.left = Eigen::FullPivLU<CMatrix>(c.right).inverse();

  double max_mod = 0.0, min_outside = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mod = std::abs(c.spectrum(i));
    max_mod = std::max(max_mod, mod);
    if (mod > 1.0 + tol) {
      c.outside.push_back(static_cast<int>(i));
      min_outside = std::min(min_outside, mod);
    }
  }
  c.d_u = static_cast<int>(c.outside.size());
  c.label = class_of(c.d_u, d);
  c.decay_rate = std::max(0.0, std::log(max_mod));
  c.slowest_rate = c.outside.empty() ? 0.0 : std::log(min_outside);
  return c;
}

EigenvectorStructure eigenvector_structure(const ScatteringMatrix& s, double tol) {
  EigenvectorStructure e;
  e.classification = classify(s, tol);
  const SpectralClassification& c = e.classification;
  if (c.defective) {
    throw DefectiveSpectrumError("eigenvector matrix condition " + std::to_string(c.eigenvector_condition));
  }
  const int d = c.d;
  const Eigen::Index m = 2 * d;

  std::vector<int> cluster(static_cast<std::size_t>(m), -1);
  int clusters = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (cluster[static_cast<std::size_t>(i)] >= 0) continue;
    cluster[static_cast<std::size_t>(i)] = clusters;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double scale = std::max(std::abs(c.spectrum(i)), std::abs(c.spectrum(j)));
      if (std::abs(c.spectrum(i) - c.spectrum(j)) <= tolerance::kDegenerate * scale) {
        cluster[static_cast<std::size_t>(j)] = clusters;
      }
    }
    ++clusters;
  }
  std::vector<int> sizes(static_cast<std::size_t>(clusters), 0);
  for (int k : cluster) ++sizes[static_cast<std::size_t>(k)];

  for (Eigen::Index i = 0; i < m; ++i) {
    ModeStructure mode;
    mode.kappa = c.spectrum(i);
    const double mod = std::abs(mode.kappa);
    mode.outside = mod > 1.0 + tol;
    mode.on_circle = !mode.outside && mod >= 1.0 - tol;
    mode.cluster = cluster[static_cast<std::size_t>(i)];
    mode.degenerate = sizes[static_cast<std::size_t>(mode.cluster)] > 1;
    e.has_degeneracy = e.has_degeneracy || mode.degenerate;

    const CVector v = c.right.col(i);
    mode.alpha_norm2 = v.head(d).squaredNorm();
    mode.beta_norm2 = v.tail(d).squaredNorm();
    mode.vKv = mode.alpha_norm2 - mode.beta_norm2;
    const CVector u = c.left.row(i).adjoint().normalized();
    mode.zeta_norm2 = u.head(d).squaredNorm();
    mode.eta_norm2 = u.tail(d).squaredNorm();
    mode.uKu = mode.zeta_norm2 - mode.eta_norm2;

    if (!mode.degenerate) {
      if (mode.outside) e.max_outside_vKv = std::max(e.max_outside_vKv, std::abs(mode.vKv));
      if (mode.on_circle) e.min_circle_vKv = std::min(e.min_circle_vKv, std::abs(mode.vKv));
    }
    e.modes.push_back(mode);
  }
  return e;
}

PlateauModel::PlateauModel(const ScatteringMatrix& generator, double tol) : spec_(classify(generator, tol)) {
  if (spec_.defective) {
    throw DefectiveSpectrumError("eigenvector matrix condition " + std::to_string(spec_.eigenvector_condition));
  }
  const int d = spec_.d;
  const int k = spec_.d_u;
  if (k >= d) return;

  CMatrix beta(d, k), eta_h(d, k);
  for (int j = 0; j < k; ++j) {
    const int i = spec_.outside[static_cast<std::size_t>(j)];
    beta.col(j) = spec_.right.col(i).tail(d);
    eta_h.col(j) = spec_.left.row(i).tail(d).adjoint();
  }
  const CMatrix q_left = complement_basis(beta, d);
  const CMatrix q_right = complement_basis(eta_h, d);

  for (int i = 0; i < 2 * d; ++i) {
    if (std::find(spec_.outside.begin(), spec_.outside.end(), i) == spec_.outside.end()) rest_.push_back(i);
  }
  const auto r = static_cast<Eigen::Index>(rest_.size());
  rest_right_.resize(d - k, r);
  rest_left_.resize(r, d - k);
  for (Eigen::Index j = 0; j < r; ++j) {
    const int i = rest_[static_cast<std::size_t>(j)];
    rest_right_.col(j) = q_left.adjoint() * spec_.right.col(i).tail(d);
    rest_left_.row(j) = spec_.left.row(i).tail(d) * q_right;
  }
}

double PlateauModel::unnormalized(std::int64_t n) const {
  if (spec_.label == TransportClass::totally_localised) return 0.0;
  CVector powers(static_cast<Eigen::Index>(rest_.size()));
  for (Eigen::Index j = 0; j < powers.size(); ++j) {
    powers(j) = std::pow(spec_.spectrum(rest_[static_cast<std::size_t>(j)]), static_cast<double>(n));
  }
  const CMatrix x = rest_right_ * powers.asDiagonal() * rest_left_;
  const CMatrix inv = Eigen::FullPivLU<CMatrix>(x).inverse();
  return inv.squaredNorm();
}

PlateauValue plateau_transmission(const ScatteringMatrix& generator, std::int64_t n) {
  const PlateauModel model(generator);
  PlateauValue v;
  v.unnormalized = model.unnormalized(n);
  v.normalized = model.normalized(n);
  v.degenerate_use = model.degenerate_use();
  v.totally_localised = model.classification().label == TransportClass::totally_localised;
  return v;
}

std::string ChainTrace::csv(const std::string& comment) const {
  std::ostringstream os;
  if (!comment.empty()) os << comment << '\n';
  os << "n,T_n,R_n,unitarity_residual\n";
  for (const TraceRow& r : rows) {
    os << r.n << ',' << format_double(r.T) << ',' << format_double(r.R) << ',' << format_double(r.residual) << '\n';
  }
  return os.str();
}

ChainTrace evolve_chain(const ScatteringMatrix& generator, std::int64_t n_max, const EvolveOptions& options) {
  if (n_max < 1) throw StructuralError("evolve_chain: n_max must be at least 1");
  ChainTrace trace;
  std::optional<PlateauModel> model;
  if (options.track_plateau && !options.initial) {
    model.emplace(generator);
    trace.classification = model->classification();
    trace.plateau_tracked = trace.classification.label != TransportClass::ballistic;
  } else {
    trace.classification = classify(generator);
  }

  ScatteringMatrix s = options.initial.value_or(generator);
  trace.rows.reserve(static_cast<std::size_t>(n_max));
  for (std::int64_t n = 1; n <= n_max; ++n) {
    if (n > 1) {
      try {
        s = compose(s, generator);
      } catch (const ResonantCavityError& e) {
        throw ResonantCavityError("chain length " + std::to_string(n) + ": " + e.what());
      }
    }
    TraceRow row;
    row.n = n;
    row.residual = unitarity_residual(s);
    if (options.reunitarize && row.residual > tolerance::kUnitarity / 10.0) {
      s = nearest_unitary(s);
      ++trace.reunitarizations;
      row.residual = unitarity_residual(s);
    }
    const TransportStats ts = transport(s);
    row.T = ts.transmission;
    row.R = ts.reflection;
    if (trace.plateau_tracked) row.T0 = model->normalized(n);
    trace.min_T = std::min(trace.min_T, row.T);
    trace.max_residual = std::max(trace.max_residual, row.residual);
    trace.rows.push_back(row);
  }
  if (!trace.plateau_tracked) return trace;

  const std::size_t start = trace.rows.size() - trace.rows.size() / 4;
  trace.window_start = trace.rows[std::min(start, trace.rows.size() - 1)].n;
  trace.plateau_found = start < trace.rows.size();
  trace.band_lo = trace.model_lo = std::numeric_limits<double>::infinity();
  trace.band_hi = trace.model_hi = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = start; i < trace.rows.size(); ++i) {
    const TraceRow& r = trace.rows[i];
    const double dev = std::abs(r.T - r.T0);
    trace.max_plateau_deviation = std::max(trace.max_plateau_deviation, dev);
    if (!(dev < options.plateau_threshold)) trace.plateau_found = false;
    trace.band_lo = std::min(trace.band_lo, r.T);
    trace.band_hi = std::max(trace.band_hi, r.T);
    trace.model_lo = std::min(trace.model_lo, r.T0);
    trace.model_hi = std::max(trace.model_hi, r.T0);
    sum += r.T;
  }
  trace.plateau = sum / static_cast<double>(trace.rows.size() - start);

  // The decaying term is resolved down to rounding of T itself when the
  // plateau is nonzero, and to underflow when it is zero. It carries a
  // quasi-periodic modulation with deep dips, so the fit uses its upper
  // envelope max_{m >= n} |T_m - T_0[S_m]|.
  const bool total = trace.classification.label == TransportClass::totally_localised;
  const double floor = total ? 1e-300 : 1e-11;
  std::vector<double> xs, ys;
  for (const TraceRow& r : trace.rows) {
    const double dev = std::abs(r.T - r.T0);
    if (r.n >= 4 && dev > floor && std::isfinite(dev)) {
      xs.push_back(static_cast<double>(r.n));
      ys.push_back(dev);
    }
  }
  for (std::size_t i = ys.size(); i-- > 1;) ys[i - 1] = std::max(ys[i - 1], ys[i]);
  for (double& y : ys) y = std::log(y);
  trace.fit_points = xs.size();
  if (xs.size() >= 3) {
    trace.fitted_rate = -line_fit(xs, ys).first;
    trace.rate_ratio = trace.fitted_rate / trace.classification.slowest_rate;
    if (std::abs(trace.rate_ratio - 1.0) <= 0.2) {
      trace.beta = 1;
    } else if (std::abs(trace.rate_ratio - 2.0) <= 0.4) {
      trace.beta = 2;
    }
  }
  return trace;
}

}  // namespace chainscat
