#include "qr/approx.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace qr {

std::vector<RatPoint> uniform_grid(const BoxDomain& box, int per_axis) {
  int n = box.dim();
  std::vector<std::vector<Rat>> axes(n);
  for (int i = 0; i < n; ++i) {
    const auto& [a, b] = box.axes[i];
    axes[i].resize(per_axis);
    if (per_axis == 1) {
      axes[i][0] = (a + b) / 2;
    } else {
      Rat step = (b - a) / Rat(per_axis - 1);
      for (int j = 0; j < per_axis; ++j) axes[i][j] = a + step * j;
    }
  }
  std::vector<RatPoint> pts;
  pts.reserve(static_cast<std::size_t>(std::pow(per_axis, n)));
  RatPoint cur(n);
  std::vector<int> idx(n, 0);
  while (true) {
    for (int i = 0; i < n; ++i) cur[i] = axes[i][idx[i]];
    pts.push_back(cur);
    int i = n - 1;
    while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
    if (i < 0) break;
  }
  return pts;
}

int fit_points_per_axis(int dim, int degree) {
  int base = 4 * (degree + 1);
  if (dim == 1) {
    // Uniform-grid least squares needs ~d^2 samples to stay stable at high
    // degree; cap to keep the QR affordable.
    long quad = static_cast<long>(degree) * degree / 3;
    return static_cast<int>(std::min<long>(std::max<long>(base, quad), 40000));
  }
  return base;
}

namespace {

// Exponent pairs/tuples of total degree <= d, ordered by (total, lex).
std::vector<std::vector<int>> basis_exponents(int dim, int degree) {
  std::vector<std::vector<int>> out;
  if (dim == 1) {
    for (int i = 0; i <= degree; ++i) out.push_back({i});
  } else if (dim == 2) {
    for (int t = 0; t <= degree; ++t)
      for (int i = 0; i <= t; ++i) out.push_back({i, t - i});
  } else {
    // recursive general case (rarely used; n <= 2 at desk scale)
    std::vector<int> cur(dim, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == dim - 1) {
        for (int i = 0; i <= left; ++i) {
          cur[pos] = i;
          out.push_back(cur);
        }
        return;
      }
      for (int i = 0; i <= left; ++i) {
        cur[pos] = i;
        rec(pos + 1, left - i);
      }
    };
    rec(0, degree);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int ta = 0, tb = 0;
    for (int x : a) ta += x;
    for (int x : b) tb += x;
    if (ta != tb) return ta < tb;
    return a < b;
  });
  return out;
}

std::vector<std::vector<Rat>> chebyshev_coeff_table(int max_deg) {
  // T_0 = 1, T_1 = xi, T_{k+1} = 2 xi T_k - T_{k-1}; dense ascending coeffs.
  std::vector<std::vector<Rat>> T(max_deg + 1);
  T[0] = {Rat(1)};
  if (max_deg >= 1) T[1] = {Rat(0), Rat(1)};
  for (int k = 2; k <= max_deg; ++k) {
    T[k].assign(k + 1, Rat(0));
    for (std::size_t i = 0; i < T[k - 1].size(); ++i) T[k][i + 1] += 2 * T[k - 1][i];
    for (std::size_t i = 0; i < T[k - 2].size(); ++i) T[k][i] -= T[k - 2][i];
  }
  return T;
}

// xi_i = (2 x_i - a - b) / (b - a) as exact MultiPoly in x.
MultiPoly axis_normalizer(const BoxDomain& box, int axis) {
  const auto& [a, b] = box.axes[axis];
  MultiPoly xi = MultiPoly::variable(box.dim(), axis).scaled(Rat(2) / (b - a));
  xi += MultiPoly::constant(box.dim(), -(a + b) / (b - a));
  return xi;
}

struct FitProblem {
  std::vector<std::vector<int>> basis;  // Chebyshev index tuples
  Eigen::MatrixXd A;                    // samples x basis
  Eigen::VectorXd y;
};

FitProblem build_problem(const std::vector<Sample>& samples, const BoxDomain& box,
                         int degree) {
  int dim = box.dim();
  FitProblem p;
  p.basis = basis_exponents(dim, degree);
  const auto rows = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(p.basis.size());
  p.A.resize(rows, cols);
  p.y.resize(rows);

  // per-sample Chebyshev values per axis via the three-term recurrence
  std::vector<std::vector<std::vector<double>>> tv(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    tv[s].resize(dim);
    for (int i = 0; i < dim; ++i) {
      const auto& [a, b] = box.axes[i];
      double xi = to_double(Rat((2 * samples[s].first[i] - a - b) / (b - a)));
      auto& col = tv[s][i];
      col.resize(degree + 1);
      col[0] = 1;
      if (degree >= 1) col[1] = xi;
      for (int k = 2; k <= degree; ++k) col[k] = 2 * xi * col[k - 1] - col[k - 2];
    }
    p.y(static_cast<Eigen::Index>(s)) = samples[s].second.convert_to<double>();
  }
  for (std::size_t s = 0; s < samples.size(); ++s)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = 1;
      for (int i = 0; i < dim; ++i) v *= tv[s][i][p.basis[j][i]];
      p.A(static_cast<Eigen::Index>(s), j) = v;
    }
  return p;
}

MultiPoly assemble_poly(const FitProblem& p, const BoxDomain& box,
                        const Eigen::VectorXd& coef, int degree) {
  int dim = box.dim();
  auto T = chebyshev_coeff_table(degree);
  // expand each axis normalizer's Chebyshev polynomials once
  std::vector<std::vector<MultiPoly>> axisT(dim);
  for (int i = 0; i < dim; ++i) {
    MultiPoly xi = axis_normalizer(box, i);
    axisT[i].resize(degree + 1);
    for (int k = 0; k <= degree; ++k) {
      MultiPoly t(box.dim());
      MultiPoly xp = MultiPoly::constant(box.dim(), 1);
      for (std::size_t m = 0; m < T[k].size(); ++m) {
        if (T[k][m] != 0) t += xp.scaled(T[k][m]);
        if (m + 1 < T[k].size()) xp = xp * xi;
      }
      axisT[i][k] = std::move(t);
    }
  }
  MultiPoly out(dim);
  for (std::size_t j = 0; j < p.basis.size(); ++j) {
    double c = coef(static_cast<Eigen::Index>(j));
    if (c == 0) continue;
    MultiPoly term = axisT[0][p.basis[j][0]];
    for (int i = 1; i < dim; ++i) term = term * axisT[i][p.basis[j][i]];
    out += term.scaled(exact_rat(c));
  }
  return out;
}

std::vector<int> degree_ladder(int max_degree) {
  // Low degrees are near-free and keep the reported error monotone in the
  // cap; from 4 upward the cap doubles per step.
  std::vector<int> out;
  for (int d = 0; d <= std::min(max_degree, 3); ++d) out.push_back(d);
  if (max_degree >= 4) {
    for (int d = 4; d < max_degree; d *= 2) out.push_back(d);
    out.push_back(max_degree);
  }
  return out;
}

}  // namespace

FitResult approx_sw(const std::vector<Sample>& samples, const BoxDomain& domain,
                    int max_degree, const Real& target_sup_error) {
  if (max_degree < 0) throw std::invalid_argument("approx_sw: max_degree must be >= 0");
  for (const auto& s : samples)
    if (!domain.contains(s.first))
      throw PreconditionError("approx_sw: sample point outside the domain");
  if (samples.empty()) throw PreconditionError("approx_sw: no samples");

  double target = target_sup_error.convert_to<double>();
  bool have_best = false;
  FitResult best;
  for (int d : degree_ladder(max_degree)) {
    if (samples.size() < static_cast<std::size_t>(basis_exponents(domain.dim(), d).size()))
      break;  // underdetermined; stop escalating
    FitProblem p = build_problem(samples, domain, d);
    Eigen::VectorXd coef = p.A.colPivHouseholderQr().solve(p.y);
    Eigen::VectorXd resid = p.A * coef - p.y;
    double sup = resid.cwiseAbs().maxCoeff();
    if (!have_best || sup < best.achieved_sup) {
      best = FitResult{assemble_poly(p, domain, coef, d), sup, d};
      have_best = true;
    }
    if (best.achieved_sup <= target) return best;
  }
  if (!have_best) throw PreconditionError("approx_sw: too few samples for requested degree");
  std::ostringstream msg;
  msg << "approx_sw: degree exhausted at cap " << max_degree << " (achieved sup error "
      << best.achieved_sup << ", target " << target
      << "); raise the degree cap or loosen the target";
  throw DegreeExhausted(msg.str(), best);
}

FitResult approx_sw_fn(const RealFn& fn, const BoxDomain& domain, int max_degree,
                       const Real& target_sup_error) {
  auto pts = uniform_grid(domain, fit_points_per_axis(domain.dim(), max_degree));
  std::vector<Sample> samples;
  samples.reserve(pts.size());
  for (auto& p : pts) {
    RealPoint rp = to_real(p);
    samples.emplace_back(std::move(p), fn(rp));
  }
  return approx_sw(samples, domain, max_degree, target_sup_error);
}

namespace {

PositiveFit positive_impl(const RealFn& fn, const BoxDomain& domain, const Real& tol,
                          int max_degree, bool strict) {
  auto pts = uniform_grid(domain, fit_points_per_axis(domain.dim(), max_degree));
  std::vector<Sample> root_samples;
  root_samples.reserve(pts.size());
  std::vector<Real> values(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    RealPoint rp = to_real(pts[i]);
    Real v = fn(rp);
    if (strict && v <= 0)
      throw PreconditionError("approx_positive: function not strictly positive on the grid");
    if (v < 0) {
      if (v < -tol) throw PreconditionError("approx_positive: function negative on the grid");
      v = 0;
    }
    values[i] = v;
    root_samples.emplace_back(pts[i], sqrt(v));
  }

  FitResult root_fit;
  try {
    root_fit = approx_sw(root_samples, domain, max_degree, tol / 4);
  } catch (const DegreeExhausted& e) {
    root_fit = e.best;  // may still satisfy the squared tolerance below
  }
  MultiPoly fbar = root_fit.poly;
  MultiPoly fbar2 = fbar * fbar;

  double worst = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Real err = abs(fbar2(to_real(pts[i])) - values[i]);
    worst = std::max(worst, err.convert_to<double>());
  }
  Real margin = tol - Real(worst);
  if (margin <= 0) {
    std::ostringstream msg;
    msg << "approx_positive: degree exhausted at cap " << max_degree
        << " (squared-fit sup error " << worst << " exceeds tolerance " << tol << ")";
    throw DegreeExhausted(msg.str(), root_fit);
  }
  Rat eta = dyadic_round(Real(margin / 2), 64);
  if (eta <= 0) eta = Rat(1, Int(1) << 80);
  PositiveFit out;
  out.fbar = std::move(fbar);
  out.eta = eta;
  out.poly = fbar2 + MultiPoly::constant(domain.dim(), eta);
  out.achieved_sup = worst + to_double(eta);
  return out;
}

}  // namespace

PositiveFit approx_positive(const RealFn& fn, const BoxDomain& domain, const Real& tol,
                            int max_degree) {
  return positive_impl(fn, domain, tol, max_degree, /*strict=*/true);
}

PositiveFit approx_positive_relaxed(const RealFn& fn, const BoxDomain& domain,
                                    const Real& tol, int max_degree) {
  return positive_impl(fn, domain, tol, max_degree, /*strict=*/false);
}

}  // namespace qr
