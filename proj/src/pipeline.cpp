#include "qr/pipeline.hpp"

#include "qr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

namespace qr {

namespace {

double rd(const Rat& q) { return to_double(q); }

RealFn poly_fn(const MultiPoly& p) {
  return {p.nvars(), [p](std::span<const Real> x) {
            RealPoint v(x.begin(), x.end());
            return p(v);
          }};
}

BoxDomain hull_box(const std::vector<RatPoint>& M) {
  if (M.empty()) throw PipelineError("input", "empty point cloud M");
  int n = static_cast<int>(M[0].size());
  std::vector<std::pair<Rat, Rat>> axes(n);
  for (int i = 0; i < n; ++i) axes[i] = {M[0][i], M[0][i]};
  for (const auto& p : M)
    for (int i = 0; i < n; ++i) {
      axes[i].first = std::min(axes[i].first, p[i]);
      axes[i].second = std::max(axes[i].second, p[i]);
    }
  for (auto& [a, b] : axes)
    if (!(a < b)) {
      a -= 1;
      b += 1;
    }
  return BoxDomain(std::move(axes));
}

Real sup_over(const std::vector<RealPoint>& pts, const std::function<Real(const RealPoint&)>& fn) {
  std::vector<Real> vals(pts.size(), Real(0));
  parallel_for(pts.size(), [&](std::size_t i) { vals[i] = abs(fn(pts[i])); });
  Real m(0);
  for (const auto& v : vals) m = std::max(m, v);
  return m;
}

std::vector<RealPoint> to_real_points(const std::vector<RatPoint>& M) {
  std::vector<RealPoint> out(M.size());
  for (std::size_t i = 0; i < M.size(); ++i) out[i] = to_real(M[i]);
  return out;
}

}  // namespace

InputMap make_input_map(int n, int m, std::vector<RatPoint> M, std::vector<RealFn> u, int k,
                        Rat eps) {
  if (m < 1 || n < 1) throw PipelineError("input", "need n >= 1 and m >= 1");
  if (static_cast<int>(u.size()) != m + 1)
    throw PipelineError("input", "need m+1 map components");
  if (k < 1) throw PipelineError("input", "need k >= 1");
  if (!(eps > 0 && eps < 1)) throw PipelineError("input", "eps must lie in (0,1)");
  InputMap in;
  in.n = n;
  in.m = m;
  in.M = std::move(M);
  in.k = k;
  in.eps = std::move(eps);

  // unit-norm residual on M; renormalize the components if needed
  auto pts = to_real_points(in.M);
  Real worst(0);
  for (const auto& x : pts) {
    Real s(0);
    for (const auto& ui : u) s += ui(x) * ui(x);
    worst = std::max(worst, abs(s - 1));
  }
  if (worst > Real("1e-9")) {
    std::vector<RealFn> nu;
    for (const auto& ui : u) {
      std::vector<RealFn> all = u;
      nu.push_back({n, [ui, all](std::span<const Real> x) {
                      Real s(0);
                      for (const auto& c : all) {
                        Real v = c.f(x);
                        s += v * v;
                      }
                      return ui.f(x) / sqrt(s);
                    }});
    }
    in.u = std::move(nu);
  } else {
    in.u = std::move(u);
  }
  return in;
}

// ---------------------------------------------------------------------------
// nashify

NashifiedMap nashify(const InputMap& input, const PipelineOptions& opts) {
  NashifiedMap out;
  Rat eps_pre = input.eps / 4;
  auto pts = to_real_points(input.M);

  // G radius: strictly past the hull of M; the fits below are taken over the
  // whole G box so their zero sets inside G have honest slopes
  Rat r2max(0);
  for (const auto& p : input.M) {
    Rat s(0);
    for (const auto& c : p) s += c * c;
    r2max = std::max(r2max, s);
  }
  Real rM = sqrt(to_real(r2max));
  // 1.75 * r_M rounded up to the next eighth, at least 1
  Rat R(Int((rM * Real(14) + Real("0.999")).convert_to<long>()), 8);
  if (R < 1) R = 1;
  std::vector<std::pair<Rat, Rat>> gaxes;
  for (int i = 0; i < input.n; ++i) gaxes.emplace_back(-R, R);
  BoxDomain gbox(gaxes);

  // polynomial fits of the components over the G box
  std::vector<MultiPoly> fits;
  for (int i = 0; i <= input.m; ++i) {
    FitResult fr;
    try {
      fr = approx_sw_fn(input.u[i], gbox, opts.nash_degree_cap, to_real(eps_pre) / 3);
    } catch (const DegreeExhausted& e) {
      throw PipelineError("nashify", std::string("component fit failed: ") + e.what());
    }
    fits.push_back(fr.poly);
  }

  long dmax = 0;
  Rat cmax(1);
  for (const auto& f : fits) {
    dmax = std::max(dmax, std::max<long>(f.degree(), 0));
    cmax = std::max(cmax, f.height());
  }
  auto rat_pow = [](Rat b, long e) {
    Rat acc(1);
    for (long i = 0; i < e; ++i) acc *= b;
    return acc;
  };
  // Bump exponent and size: epsilon' must dominate (1 + |fit(x)|)/|x|^{2 mhat}
  // for |x| >= R (sharp grid bound near R, height bound far out) while the
  // bump stays within budget on M.
  int mhat = static_cast<int>(dmax / 2 + 1);
  Rat eps_bump;
  Rat far(3);
  far *= R;  // beyond 3R the height bound takes over
  for (;; ++mhat) {
    Real sharp(0);
    for (int s = 0; s <= 64; ++s) {
      Real t = to_real(R) * (1 + Real(2 * s) / 64);  // [R, 3R]
      Real fmax(0);
      // radial max over a few directions (n <= 2)
      std::vector<RealPoint> dirs;
      if (input.n == 1) {
        dirs = {{Real(1)}, {Real(-1)}};
      } else {
        for (int d = 0; d < 8; ++d) {
          Real ang = pi_real() * d / 4;
          dirs.push_back({cos(ang), sin(ang)});
        }
      }
      for (const auto& dir : dirs) {
        RealPoint x(input.n);
        for (int d = 0; d < input.n; ++d) x[d] = dir[d] * t;
        for (const auto& fpoly : fits) fmax = std::max(fmax, abs(fpoly(x)));
      }
      sharp = std::max(sharp, (1 + fmax) / pow(t, 2 * mhat));
    }
    Real tail = to_real(2 * (1 + cmax * rat_pow(far, dmax)) / rat_pow(far, 2L * mhat));
    Real needed = 2 * std::max(sharp, tail);
    eps_bump = dyadic_round(needed, 48);
    if (eps_bump <= 0) eps_bump = Rat(1, Int(1) << 120);
    if (eps_bump * rat_pow(r2max, mhat) <= eps_pre / 3) break;
    if (mhat > 4000) throw PipelineError("nashify", "bump exponent search diverged");
  }
  MultiPoly sumsq(input.n);
  for (int i = 0; i < input.n; ++i) {
    ExpVec e(input.n, 0);
    e[i] = 2;
    sumsq.set_coeff(e, Rat(1));
  }
  MultiPoly bump = sumsq.pow(static_cast<unsigned>(mhat)).scaled(eps_bump);
  out.mhat = mhat;
  out.eps_bump = eps_bump;
  out.G = BallDomain(RatPoint(input.n, Rat(0)), R);

  // generic constants; retried until the zero sets look like manifolds and
  // the common zero candidates avoid M
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> mag(rd(eps_pre) / 20, rd(eps_pre) / 10);
  std::uniform_int_distribution<int> coin(0, 1);
  std::string last_failure = "no attempt";
  for (int attempt = 0; attempt < 20; ++attempt) {
    std::vector<MultiPoly> cand = fits;
    std::vector<Rat> consts;
    for (auto& f : cand) {
      Rat c = dyadic_round(Real(mag(rng)), 48) * (coin(rng) ? 1 : -1);
      f += bump + MultiPoly::constant(input.n, c);
      consts.push_back(c);
    }
    // zero-set analysis
    std::vector<std::vector<Rat>> roots(cand.size());
    std::vector<RatPoint> sigma;
    bool ok = true;
    if (input.n == 1) {
      for (std::size_t i = 0; i < cand.size() && ok; ++i) {
        UniPoly up = UniPoly::from_multipoly(cand[i]);
        std::vector<IsolatedRoot> iso;
        try {
          iso = isolate_roots(up, -R, R, Rat(1, Int(1) << 60));
        } catch (const std::exception& e) {
          ok = false;
          last_failure = std::string("root isolation: ") + e.what();
          break;
        }
        UniPoly dup = up.derivative();
        for (const auto& r : iso) {
          roots[i].push_back(r.approx);
          if (abs(to_real(dup(r.approx))) < Real("1e-6")) {
            ok = false;
            last_failure = "gradient lower bound failed at a zero (manifold surrogate)";
            break;
          }
        }
      }
      if (ok) {
        // common zeros of all components
        for (const auto& z : roots[0]) {
          bool common = true;
          for (std::size_t i = 1; i < cand.size(); ++i) {
            Real v = cand[i](RealPoint{to_real(z)});
            if (abs(v) > Real("1e-24")) {
              common = false;
              break;
            }
          }
          if (common) sigma.push_back({z});
        }
      }
    } else {
      // grid scan of sum uhat_i^2 for common-zero candidates, Newton refined
      GridRegion scan = label_grid(
          {input.n,
           [&cand](std::span<const Real> x) {
             RealPoint p(x.begin(), x.end());
             Real s(0);
             for (const auto& f : cand) {
               Real v = f(p);
               s += v * v;
             }
             return s;
           }},
          out.G, Rat(1, 50));
      RealFn ssq{input.n, [&cand](std::span<const Real> x) {
                   RealPoint p(x.begin(), x.end());
                   Real s(0);
                   for (const auto& f : cand) {
                     Real v = f(p);
                     s += v * v;
                   }
                   return s;
                 }};
      std::vector<MultiPoly> grads;
      for (const auto& f : cand)
        for (int d = 0; d < input.n; ++d) grads.push_back(f.derivative(d));
      for (long c = 0; c < scan.cell_count(); ++c) {
        if (scan.labels[c] == CellLabel::Outside) continue;
        if (scan.values[c] > Real("1e-4")) continue;
        // Gauss-Newton descent on sum of squares
        RealPoint x = to_real(scan.cell_center(c));
        for (int it = 0; it < 50; ++it) {
          // gradient of sum f_i^2 = 2 sum f_i grad f_i
          RealPoint g(input.n, Real(0));
          Real h2(0);
          for (std::size_t i = 0; i < cand.size(); ++i) {
            Real fi = cand[i](x);
            for (int d = 0; d < input.n; ++d) {
              Real gd = grads[i * input.n + d](x);
              g[d] += 2 * fi * gd;
              h2 += 2 * gd * gd;
            }
          }
          if (h2 == 0) break;
          for (int d = 0; d < input.n; ++d) x[d] -= g[d] / h2;
        }
        if (ssq(x) < Real("1e-30")) {
          RatPoint zp(input.n);
          for (int d = 0; d < input.n; ++d) zp[d] = dyadic_round(x[d], 96);
          bool dup = false;
          for (const auto& s : sigma) {
            Real d2(0);
            for (int d = 0; d < input.n; ++d) d2 += to_real(s[d] - zp[d]) * to_real(s[d] - zp[d]);
            if (d2 < Real("1e-12")) dup = true;
          }
          if (!dup) sigma.push_back(zp);
        }
      }
    }
    if (!ok) continue;
    // sigma must avoid M
    bool clear = true;
    for (const auto& s : sigma)
      for (const auto& p : input.M) {
        Rat d2(0);
        for (int d = 0; d < input.n; ++d) d2 += (s[d] - p[d]) * (s[d] - p[d]);
        if (to_real(d2) < Real("1e-8")) clear = false;
      }
    if (!clear) {
      last_failure = "common-zero candidate too close to M";
      continue;
    }
    out.uhat = std::move(cand);
    out.constants = std::move(consts);
    out.sigma = std::move(sigma);
    out.uhat_roots = std::move(roots);
    break;
  }
  if (out.uhat.empty())
    throw PipelineError("nashify", "perturbation retries exhausted: " + last_failure);

  // retraction onto the sphere
  std::vector<MultiPoly> uh = out.uhat;
  for (std::size_t i = 0; i < uh.size(); ++i) {
    MultiPoly mine = uh[i];
    std::vector<MultiPoly> all = uh;
    out.utilde.push_back({input.n, [mine, all](std::span<const Real> x) {
                            RealPoint p(x.begin(), x.end());
                            Real s(0);
                            for (const auto& f : all) {
                              Real v = f(p);
                              s += v * v;
                            }
                            return mine(p) / sqrt(s);
                          }});
  }
  out.beta = urysohn(out.sigma, input.M);

  Real worst(0);
  for (std::size_t j = 0; j < pts.size(); ++j)
    for (int i = 0; i <= input.m; ++i)
      worst = std::max(worst, abs(out.utilde[i](pts[j]) - input.u[i](pts[j])));
  out.preamble_error = worst.convert_to<double>();
  if (out.preamble_error > rd(eps_pre)) {
    std::ostringstream msg;
    msg << "preamble error " << out.preamble_error << " exceeds its budget " << rd(eps_pre);
    throw PipelineError("nashify", msg.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// v-chain

VChain build_vchain(const std::vector<RealFn>& utilde) {
  VChain out;
  int n = utilde[0].nvars;
  RealFn u0 = utilde[0];
  out.v.push_back({n, [u0](std::span<const Real> x) { return abs(u0.f(x)); }});
  for (std::size_t i = 1; i < utilde.size(); ++i) {
    RealFn prev = out.v.back();
    RealFn ui = utilde[i];
    out.v.push_back({n, [prev, ui](std::span<const Real> x) {
                       Real a = prev.f(x), b = ui.f(x);
                       return sqrt(a * a + b * b);
                     }});
  }
  return out;
}

// ---------------------------------------------------------------------------
// sign assignment

int SignAssignment::sign_at(const Rat& x) const {
  if (interval_signs.empty()) return 1;
  std::size_t idx = 0;
  while (idx < zeros.size() && x > zeros[idx]) ++idx;
  if (idx < zeros.size() && x == zeros[idx]) return 0;
  return interval_signs[idx];
}

int SignAssignment::sign_at_real(const Real& x) const {
  if (interval_signs.empty()) return 1;
  std::size_t idx = 0;
  while (idx < zeros.size() && x > to_real(zeros[idx])) ++idx;
  if (idx < zeros.size() && x == to_real(zeros[idx])) return 0;
  return interval_signs[idx];
}

nlohmann::json QuasiRegulousFn::to_json() const {
  nlohmann::json j;
  j["trivial_sign"] = trivial_sign;
  j["smoothness"] = smoothness.to_json();
  nlohmann::json zs = nlohmann::json::array();
  for (const auto& z : signs.zeros) zs.push_back(rat_to_string(z));
  j["sign_zeros"] = std::move(zs);
  j["interval_signs"] = signs.interval_signs;
  return j;
}

namespace {

// Refine the sign-change brackets of a univariate polynomial over the grid.
std::vector<Rat> refine_poly_zeros_1d(const MultiPoly& pq, const GridRegion& grid) {
  std::vector<Rat> zeros;
  long total = grid.cell_count();
  Real prev;
  long prev_idx = -1;
  for (long c = 0; c < total; ++c) {
    if (grid.labels[c] == CellLabel::Outside) continue;
    RealPoint x = to_real(grid.cell_center(c));
    Real v = pq(x);
    if (prev_idx >= 0 && ((prev < 0 && v > 0) || (prev > 0 && v < 0))) {
      Real lo = to_real(grid.cell_center(prev_idx)[0]);
      Real hi = x[0];
      Real flo = prev;
      for (int it = 0; it < 120; ++it) {
        Real mid = (lo + hi) / 2;
        Real fm = pq(RealPoint{mid});
        if (fm == 0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0) == (flo > 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      zeros.push_back(dyadic_round((lo + hi) / 2, 128));
    }
    prev = v;
    prev_idx = c;
  }
  return zeros;
}

// Component signs: matched B picks up the reference sign on the matched A
// core; unmatched B gets +1.
std::vector<int> component_signs(const LevelOutput& lo, const RealFn& reference) {
  const ComponentMap& cm = lo.components;
  std::vector<int> sign_of_B(cm.B.count(), 1);
  for (const auto& [a, b] : cm.matching) {
    int s = 0;
    std::size_t taken = 0;
    const auto& cells = cm.A.cells[a];
    std::size_t stride = std::max<std::size_t>(1, cells.size() / 32);
    for (std::size_t i = 0; i < cells.size(); i += stride) {
      long cell = cells[i];
      if (!lo.tube.in_tube.empty() && lo.tube.in_tube[cell]) continue;  // core only
      Real v = reference(to_real(lo.fg_grid.cell_center(cell)));
      int sv = v > 0 ? 1 : (v < 0 ? -1 : 0);
      if (sv == 0) continue;
      if (s == 0) s = sv;
      if (s != sv)
        throw PipelineError("recover_sign",
                            "reference sign ambiguous on a matched component core");
      ++taken;
    }
    if (taken == 0)
      throw PipelineError("recover_sign", "no usable core sample for a matched component");
    sign_of_B[b] = s;
  }
  return sign_of_B;
}

SignAssignment recover_sign_1d(const LevelOutput& lo, const MultiPoly& zero_poly,
                               const RealFn& reference) {
  SignAssignment sa;
  sa.zeros = refine_poly_zeros_1d(zero_poly, lo.pq_grid);
  std::vector<int> sign_of_B = component_signs(lo, reference);
  const GridRegion& g = lo.pq_grid;
  double h = rd(g.h);
  double a0 = rd(g.box.axes[0].first);
  auto comp_at = [&](double x) -> int {
    long j = std::lround((x - a0) / h - 0.5);
    if (j < 0 || j >= g.cell_count()) return -1;
    return lo.components.B.comp_of_cell[j];
  };
  std::vector<double> cuts;
  for (const auto& z : sa.zeros) cuts.push_back(rd(z));
  double lo_x = a0, hi_x = rd(g.box.axes[0].second);
  for (std::size_t t = 0; t <= cuts.size(); ++t) {
    double left = (t == 0) ? lo_x : cuts[t - 1];
    double right = (t == cuts.size()) ? hi_x : cuts[t];
    int comp = -1;
    for (double q : {0.5, 0.35, 0.65, 0.2, 0.8}) {
      comp = comp_at(left + q * (right - left));
      if (comp >= 0) break;
    }
    if (comp < 0)
      throw PipelineError("recover_sign", "could not locate a component for an interval");
    sa.interval_signs.push_back(sign_of_B[comp]);
  }
  return sa;
}

RealFn signed_fn(const RealFn& core_abs, const SignAssignment& sa) {
  return {core_abs.nvars, [core_abs, sa](std::span<const Real> x) {
            int s = sa.sign_at_real(x[0]);
            if (s == 0) return Real(0);
            return Real(s) * core_abs.f(x);
          }};
}

Rat frac(long num, long den) { return Rat(num, den); }

}  // namespace

// ---------------------------------------------------------------------------
// shortcut

std::optional<SphereApproximant> nonsurjective_shortcut(const InputMap& input,
                                                        const NashifiedMap& nash,
                                                        const PipelineOptions& opts) {
  auto pts = to_real_points(input.M);
  int best_i = -1;
  Real best_margin(0);
  for (int i = 0; i <= input.m; ++i) {
    Real margin(-1);
    for (const auto& x : pts) {
      Real v = abs(input.u[i](x));
      if (margin < 0 || v < margin) margin = v;
    }
    if (margin > best_margin) {
      best_margin = margin;
      best_i = i;
    }
  }
  if (best_i < 0 || best_margin <= Real("1e-6")) return std::nullopt;

  int pole_axis = (best_i == 0) ? 1 : 0;
  std::vector<int> others;
  for (int t = 0; t <= input.m; ++t)
    if (t != pole_axis) others.push_back(t);

  BoxDomain hull = hull_box(input.M);
  Rat target = input.eps / Rat(8 * (input.m + 1));
  for (int attempt = 0; attempt < 4; ++attempt) {
    // stereographic pull-back of the Nash map through the pole e_{pole_axis}
    std::vector<MultiPoly> q;
    bool fit_ok = true;
    for (int t = 0; t < input.m; ++t) {
      std::vector<Sample> samples;
      for (std::size_t j = 0; j < input.M.size(); ++j) {
        Real denom = 1 - nash.utilde[pole_axis](pts[j]);
        samples.emplace_back(input.M[j], nash.utilde[others[t]](pts[j]) / denom);
      }
      try {
        q.push_back(approx_sw(samples, hull, opts.nash_degree_cap, to_real(target)).poly);
      } catch (const DegreeExhausted&) {
        fit_ok = false;
        break;
      }
    }
    if (!fit_ok) {
      target /= 4;
      continue;
    }
    // rational push-forward: D = 1 + |q|^2, numerators 2 q_t and |q|^2 - 1
    MultiPoly qsq(input.n);
    for (const auto& qt : q) qsq += qt * qt;
    MultiPoly D = qsq + MultiPoly::constant(input.n, Rat(1));
    std::vector<MultiPoly> N(input.m + 1, MultiPoly(input.n));
    for (int t = 0; t < input.m; ++t) N[others[t]] = q[t].scaled(Rat(2));
    N[pole_axis] = qsq - MultiPoly::constant(input.n, Rat(1));

    Real sup(0);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      Real d = D(pts[j]);
      for (int i = 0; i <= input.m; ++i)
        sup = std::max(sup, abs(N[i](pts[j]) / d - input.u[i](pts[j])));
    }
    if (sup > to_real(input.eps)) {
      target /= 4;
      continue;
    }

    SphereApproximant out;
    out.n = input.n;
    out.m = input.m;
    out.k = input.k;
    out.shortcut = true;
    auto De = RatExpr::make_poly(D);
    out.vlast = De;
    for (int i = 0; i <= input.m; ++i) {
      QuasiRegulousFn f;
      f.core = RatExpr::make_poly(N[i]);
      f.trivial_sign = true;
      f.fn = poly_fn(N[i]);
      f.smoothness.order = input.k;
      f.smoothness.pass = true;  // regular rational map, smooth everywhere
      out.ubar.push_back(std::move(f));
      MultiPoly Ni = N[i];
      MultiPoly Dc = D;
      out.w.push_back({input.n, [Ni, Dc](std::span<const Real> x) {
                         RealPoint p(x.begin(), x.end());
                         return Ni(p) / Dc(p);
                       }});
    }
    out.report["path"] = "stereographic shortcut";
    out.report["pole_axis"] = pole_axis;
    out.report["avoided_component"] = best_i;
    out.report["sup_error"] = sup.convert_to<double>();
    return out;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// stage helpers

namespace {

struct StageFns {
  RealFn fhat_fn, ghat_fn;  // polynomial factors as evaluables
  CkWitness w_f2, w_g2;
};

RealFn factored_eval(const FactoredPositive& ft, const MultiPoly& P, long long l) {
  return {P.nvars(), [ft, P, l](std::span<const Real> x) {
            RealPoint p(x.begin(), x.end());
            Real pv = P(p);
            Real p2l = (pv == 0) ? Real(0) : pow(pv, static_cast<int>(2 * l));
            return ft.value(p) * p2l;
          }};
}

// root witness (ftilde * P^{2l})^{1/(2l)} -- smooth because ftilde > 0
RealFn factored_root(const FactoredPositive& ft, const MultiPoly& P, long long l,
                     long long root_exp) {
  // (ftilde P^{2l})^{1/root_exp} with root_exp | 2l
  long long pw = 2 * l / root_exp;
  return {P.nvars(), [ft, P, root_exp, pw](std::span<const Real> x) {
            RealPoint p(x.begin(), x.end());
            Real base = ft.value(p);  // > 0
            Real pv = abs(P(p));
            Real r = exp(log(base) / Real(static_cast<long>(root_exp)));
            if (pv == 0) return Real(0) * r;
            return r * pow(pv, static_cast<int>(pw));
          }};
}

CkWitness scale_witness(const CkWitness& w, const Rat& factor) {
  if (factor <= 0) throw std::invalid_argument("scale_witness: positive factors only");
  Real fr = to_real(factor);
  Real root_scale = exp(log(fr) / Real(static_cast<long>(w.l)));
  RealFn v = w.v, root = w.root;
  return CkWitness{{w.v.nvars, [v, fr](std::span<const Real> x) { return fr * v.f(x); }},
                   {w.root.nvars,
                    [root, root_scale](std::span<const Real> x) {
                      return root_scale * root.f(x);
                    }},
                   w.k,
                   w.l,
                   w.domain};
}

CkWitness lower_exponent(const CkWitness& w, long long new_l) {
  if (new_l <= 0 || w.l % new_l != 0)
    throw std::invalid_argument("lower_exponent: new exponent must divide the old one");
  long long pw = w.l / new_l;
  RealFn root = w.root;
  return CkWitness{w.v,
                   {w.root.nvars,
                    [root, pw](std::span<const Real> x) {
                      return pow(root.f(x), static_cast<int>(pw));
                    }},
                   w.k,
                   new_l,
                   w.domain};
}

}  // namespace

StageOutput step_one(const NashifiedMap& nash, const VChain& vchain, const InputMap& input,
                     const PipelineOptions& opts, long long l1, const Rat& eps_step) {
  int K = input.k + 1;
  RealFn v2 = vchain.v[1];
  RealFn u1 = nash.utilde[0];
  RealFn u2 = nash.utilde[1];
  RealFn beta = nash.beta.as_fn(input.n);

  RealFn f{input.n, [v2, u1, beta](std::span<const Real> x) {
             Real d = v2.f(x) - u1.f(x);
             if (d < 0) d = 0;
             return sqrt(d) * beta.f(x);
           }};
  RealFn g{input.n, [v2, u1, beta](std::span<const Real> x) {
             Real d = v2.f(x) + u1.f(x);
             if (d < 0) d = 0;
             return sqrt(d) * beta.f(x);
           }};

  // zero hints: f vanishes where u2 = 0 and u1 > 0 (plus Sigma), g where
  // u2 = 0 and u1 < 0
  std::vector<Rat> f_hints, g_hints;
  if (input.n == 1 && !nash.uhat_roots.empty()) {
    for (const auto& z : nash.uhat_roots[1]) {
      Rat s = nash.uhat[0](RatPoint{z});
      if (s > 0)
        f_hints.push_back(z);
      else if (s < 0)
        g_hints.push_back(z);
      else {
        f_hints.push_back(z);
        g_hints.push_back(z);
      }
    }
    for (const auto& s : nash.sigma) {
      f_hints.push_back(s[0]);
      g_hints.push_back(s[0]);
    }
    std::sort(f_hints.begin(), f_hints.end());
    std::sort(g_hints.begin(), g_hints.end());
  }

  LevelOutput level =
      run_level(f, g, nash.G, eps_step, l1, opts.level,
                (input.n == 1) ? &f_hints : nullptr, (input.n == 1) ? &g_hints : nullptr);

  // expressions
  auto Pe = RatExpr::make_poly(level.f_side.P);
  auto Qe = RatExpr::make_poly(level.g_side.P);
  auto fhat = RatExpr::mul(level.f_side.ftilde.as_expr(Pe), RatExpr::pow(Pe, 2 * l1));
  auto ghat = RatExpr::mul(level.g_side.ftilde.as_expr(Qe), RatExpr::pow(Qe, 2 * l1));
  auto fhat2 = RatExpr::mul(fhat, fhat);
  auto ghat2 = RatExpr::mul(ghat, ghat);
  auto half = RatExpr::make_const(input.n, frac(1, 2));
  auto vbar2 = RatExpr::mul(RatExpr::add(fhat2, ghat2), half);
  auto ubar1 = RatExpr::mul(RatExpr::sub(ghat2, fhat2), half);
  auto ubar2_abs = RatExpr::mul(fhat, ghat);

  // witnesses
  BoxDomain box = nash.G.enclosing_box();
  RealFn fhat_fn = factored_eval(level.f_side.ftilde, level.f_side.P, l1);
  RealFn ghat_fn = factored_eval(level.g_side.ftilde, level.g_side.P, l1);
  if (2 * l1 % (2LL * K) != 0)
    throw PipelineError("step_one", "exponent 2l not divisible by 2(k+1)");
  CkWitness w_f2{{input.n,
                  [fhat_fn](std::span<const Real> x) {
                    Real v = fhat_fn.f(x);
                    return v * v;
                  }},
                 factored_root(level.f_side.ftilde, level.f_side.P, l1, l1),
                 K,
                 2 * l1,
                 box};
  CkWitness w_g2{{input.n,
                  [ghat_fn](std::span<const Real> x) {
                    Real v = ghat_fn.f(x);
                    return v * v;
                  }},
                 factored_root(level.g_side.ftilde, level.g_side.P, l1, l1),
                 K,
                 2 * l1,
                 box};
  CkWitness vbar2_w = descent_sum({w_f2, w_g2});
  // scale: vbar2 = (fhat^2 + ghat^2)/2
  vbar2_w = scale_witness(vbar2_w, frac(1, 2));

  RealFn ubar2_abs_fn{input.n, [fhat_fn, ghat_fn](std::span<const Real> x) {
                        return fhat_fn.f(x) * ghat_fn.f(x);
                      }};
  const FactoredPositive &ftld = level.f_side.ftilde, &gtld = level.g_side.ftilde;
  const MultiPoly &Pp = level.f_side.P, &Qp = level.g_side.P;
  RealFn ubar2_root{input.n, [ftld, gtld, Pp, Qp, l1](std::span<const Real> x) {
                      RealPoint p(x.begin(), x.end());
                      Real base = ftld.value(p) * gtld.value(p);
                      Real pq = Pp(p) * Qp(p);
                      return exp(log(base) / Real(static_cast<long>(l1))) * pq * pq;
                    }};
  CkWitness ubar2_w{ubar2_abs_fn, ubar2_root, K, l1, box};

  // sign recovery
  MultiPoly PQ = level.f_side.P * level.g_side.P;
  SignAssignment sa = recover_sign_1d(level, PQ, u2);
  std::vector<RealPoint> zero_samples;
  for (const auto& z : sa.zeros) zero_samples.push_back({to_real(z)});
  SignField field{[sa](const RealPoint& x) { return sa.sign_at_real(x[0]); }, zero_samples};

  StageOutput out;
  out.step = 1;
  out.l_used = l1;
  out.level_report = level.to_json();
  out.ubar_abs = ubar2_abs;
  out.vbar_next = vbar2;
  out.vbar_witness = vbar2_w;

  QuasiRegulousFn ub;
  ub.core = ubar2_abs;
  ub.trivial_sign = false;
  ub.signs = sa;
  ub.zero_samples = zero_samples;
  if (opts.certify) {
    SignedFunction sf = symmetrize(ubar2_w, field, opts.fd_h);
    ub.smoothness = sf.certificate;
    ub.fn = sf.fn;
  } else {
    ub.fn = signed_fn(ubar2_abs_fn, sa);
  }
  out.ubar = std::move(ub);
  out.ubar_first = ubar1;

  // stage approximation errors on M
  auto pts = to_real_points(input.M);
  RealFn u1n = nash.utilde[0];
  Real e1 = sup_over(pts, [&](const RealPoint& x) { return ubar1->eval_real(x) - u1n(x); });
  Real e2 = sup_over(pts, [&](const RealPoint& x) { return out.ubar.fn(x) - u2(x); });
  Real ev = sup_over(pts, [&](const RealPoint& x) { return vbar2->eval_real(x) - v2(x); });
  out.sup_err_ubar = std::max(e1, e2).convert_to<double>();
  out.sup_err_vbar = ev.convert_to<double>();
  return out;
}

StageOutput step_inductive(int step, const StageOutput& prev, const NashifiedMap& nash,
                           const VChain& vchain, const InputMap& input,
                           const PipelineOptions& opts, long long l_step,
                           const Rat& eps_step) {
  int K = input.k + 1;
  int j = step - 1;  // handles v_{j+1}^2 + u_{j+2}^2 = v_{j+2}^2
  RealFn v_next = vchain.v[j + 1];  // v_{j+2}
  RealFn v_prev = vchain.v[j];      // v_{j+1}
  RealFn u_next = nash.utilde[j + 1];
  RealFn beta = nash.beta.as_fn(input.n);

  if (prev.vbar_witness.l != l_step)
    throw PipelineError("step_inductive",
                        "schedule mismatch: previous class exponent differs from this "
                        "step's l");

  RealFn f{input.n, [v_next, v_prev, beta](std::span<const Real> x) {
             Real d = v_next.f(x) - v_prev.f(x);
             if (d < 0) d = 0;
             return sqrt(d) * beta.f(x);
           }};
  RealFn g = constant_fn(input.n, Real(1));

  std::vector<Rat> f_hints, g_hints;  // g has no zeros
  if (input.n == 1 && !nash.uhat_roots.empty()) {
    f_hints = nash.uhat_roots[j + 1];
    for (const auto& s : nash.sigma) f_hints.push_back(s[0]);
    std::sort(f_hints.begin(), f_hints.end());
  }

  LevelOutput level =
      run_level(f, g, nash.G, eps_step, l_step, opts.level,
                (input.n == 1) ? &f_hints : nullptr, (input.n == 1) ? &g_hints : nullptr);

  // Abar: positive fit of sqrt(v_{j+2}-v_{j+1}) + sqrt(v_{j+2}+v_{j+1}) on M
  Rat m_eps = opts.level.tight_eps > 0 ? opts.level.tight_eps : eps_step;
  RealFn Atarget{input.n, [v_next, v_prev](std::span<const Real> x) {
                   Real d = v_next.f(x) - v_prev.f(x);
                   if (d < 0) d = 0;
                   return sqrt(d) + sqrt(v_next.f(x) + v_prev.f(x));
                 }};
  PositiveFit Afit = approx_positive_relaxed(Atarget, hull_box(input.M),
                                             to_real(m_eps) / 4, opts.nash_degree_cap);

  auto Pe = RatExpr::make_poly(level.f_side.P);
  auto gamma = RatExpr::mul(level.f_side.ftilde.as_expr(Pe), RatExpr::pow(Pe, 2 * l_step));
  auto Ae = RatExpr::make_poly(Afit.poly);
  auto gA = RatExpr::mul(gamma, Ae);
  auto half = RatExpr::make_const(input.n, frac(1, 2));
  auto alpha = RatExpr::mul(RatExpr::add(gA, prev.vbar_next), half);
  auto quarter_sq =
      RatExpr::div(RatExpr::pow(prev.vbar_next, 2),
                   RatExpr::mul(RatExpr::make_const(input.n, Rat(4)), alpha));
  auto ubar_abs = RatExpr::sub(alpha, quarter_sq);
  auto vbar_next = RatExpr::add(alpha, quarter_sq);

  // witnesses
  BoxDomain box = nash.G.enclosing_box();
  RealFn gamma_fn = factored_eval(level.f_side.ftilde, level.f_side.P, l_step);
  MultiPoly Abar = Afit.poly;
  const FactoredPositive& ftld = level.f_side.ftilde;
  const MultiPoly& Pp = level.f_side.P;
  RealFn gA_fn{input.n, [gamma_fn, Abar](std::span<const Real> x) {
                 RealPoint p(x.begin(), x.end());
                 return gamma_fn.f(x) * Abar(p);
               }};
  RealFn gA_root{input.n, [ftld, Abar, Pp, l_step](std::span<const Real> x) {
                   RealPoint p(x.begin(), x.end());
                   Real base = ftld.value(p) * Abar(p);  // > 0
                   Real pv = Pp(p);
                   return exp(log(base) / Real(static_cast<long>(l_step))) * pv * pv;
                 }};
  CkWitness w_gA{gA_fn, gA_root, K, l_step, box};
  if (l_step % (2LL * K) != 0)
    throw PipelineError("step_inductive", "step exponent not divisible by 2(k+1)");
  long long mid = l_step / (2LL * K);
  CkWitness w_quot = descent_prod_over_sum(w_gA, prev.vbar_witness);  // exponent mid
  CkWitness ubar_w = descent_sum(
      {scale_witness(lower_exponent(w_gA, mid), frac(1, 2)), scale_witness(w_quot, frac(1, 2))});
  CkWitness vbar_w = descent_sum({scale_witness(lower_exponent(w_gA, mid), frac(1, 2)),
                                  scale_witness(lower_exponent(prev.vbar_witness, mid), frac(1, 2)),
                                  scale_witness(w_quot, frac(1, 2))});

  // sign recovery against u_{j+2}; the zero polynomial is gamma's P
  MultiPoly PQ = level.f_side.P * level.g_side.P;
  SignAssignment sa = recover_sign_1d(level, PQ, u_next);
  std::vector<RealPoint> zero_samples;
  for (const auto& z : sa.zeros) zero_samples.push_back({to_real(z)});
  SignField field{[sa](const RealPoint& x) { return sa.sign_at_real(x[0]); }, zero_samples};

  StageOutput out;
  out.step = step;
  out.l_used = l_step;
  out.level_report = level.to_json();
  out.ubar_abs = ubar_abs;
  out.vbar_next = vbar_next;
  out.vbar_witness = vbar_w;

  QuasiRegulousFn ub;
  ub.core = ubar_abs;
  ub.trivial_sign = false;
  ub.signs = sa;
  ub.zero_samples = zero_samples;
  RealFn vprev_fn = prev.vbar_witness.v;
  RealFn ubar_abs_fn = ubar_w.v;
  if (opts.certify) {
    SignedFunction sf = symmetrize(ubar_w, field, opts.fd_h);
    ub.smoothness = sf.certificate;
    ub.fn = sf.fn;
  } else {
    ub.fn = signed_fn(ubar_abs_fn, sa);
  }
  out.ubar = std::move(ub);

  auto pts = to_real_points(input.M);
  Real e2 = sup_over(pts, [&](const RealPoint& x) { return out.ubar.fn(x) - u_next(x); });
  Real ev = sup_over(pts, [&](const RealPoint& x) { return vbar_next->eval_real(x) - v_next(x); });
  out.sup_err_ubar = e2.convert_to<double>();
  out.sup_err_vbar = ev.convert_to<double>();
  return out;
}

// ---------------------------------------------------------------------------
// finalize / approximate / verify

SphereApproximant finalize(std::vector<StageOutput> stages, const NashifiedMap& nash,
                           const InputMap& input, const PipelineOptions& opts) {
  (void)opts;
  if (stages.empty()) throw PipelineError("finalize", "no stages");
  SphereApproximant out;
  out.n = input.n;
  out.m = input.m;
  out.k = input.k;
  out.shortcut = false;

  // first component is regular
  QuasiRegulousFn u1;
  u1.core = stages[0].ubar_first;
  u1.trivial_sign = true;
  auto core1 = stages[0].ubar_first;
  u1.fn = core1->as_realfn();
  u1.smoothness.order = input.k;
  u1.smoothness.pass = true;
  out.ubar.push_back(std::move(u1));
  for (auto& st : stages) {
    out.vbar_chain.push_back(st.vbar_next);
    out.ubar.push_back(st.ubar);
  }
  out.vlast = stages.back().vbar_next;

  // v-bar_{m+1} must be positive on M (exact at the sample points)
  for (const auto& p : input.M) {
    auto v = out.vlast->eval_rat(p);
    if (!v || *v <= 0)
      throw PipelineError("finalize", "v-bar_{m+1} fails to be positive on M; "
                                      "approximation too loose, rerun with smaller eps");
  }
  // dense positivity sweep over the hull
  {
    BoxDomain hull = hull_box(input.M);
    auto grid = uniform_grid(hull, 2048);
    auto vl = out.vlast;
    for (const auto& p : grid) {
      if (vl->eval_real(to_real(p)) <= 0)
        throw PipelineError("finalize", "v-bar_{m+1} vanishes inside the hull of M");
    }
  }

  auto vlast = out.vlast;
  for (int i = 0; i <= input.m; ++i) {
    RealFn ui = out.ubar[i].fn;
    out.w.push_back({input.n, [ui, vlast](std::span<const Real> x) {
                       RealPoint p(x.begin(), x.end());
                       return ui.f(x) / vlast->eval_real(p);
                     }});
  }

  auto pts = to_real_points(input.M);
  Real sup(0);
  for (std::size_t j = 0; j < pts.size(); ++j)
    for (int i = 0; i <= input.m; ++i)
      sup = std::max(sup, abs(out.w[i](pts[j]) - input.u[i](pts[j])));
  out.report["path"] = "full chain";
  out.report["sup_error"] = sup.convert_to<double>();
  out.report["preamble_error"] = nash.preamble_error;
  nlohmann::json stage_reports = nlohmann::json::array();
  for (const auto& st : stages) {
    nlohmann::json sr;
    sr["step"] = st.step;
    sr["l"] = st.l_used;
    sr["level"] = st.level_report;
    sr["sup_err_ubar"] = st.sup_err_ubar;
    sr["sup_err_vbar"] = st.sup_err_vbar;
    sr["smoothness"] = st.ubar.smoothness.to_json();
    stage_reports.push_back(std::move(sr));
  }
  out.report["stages"] = std::move(stage_reports);
  if (sup > to_real(input.eps)) {
    std::ostringstream msg;
    msg << "sup_M |w - u| = " << sup.convert_to<double>() << " exceeds eps = " << rd(input.eps);
    throw PipelineError("finalize", msg.str());
  }
  return out;
}

SphereApproximant approximate(const InputMap& input, const PipelineOptions& opts) {
  NashifiedMap nash = nashify(input, opts);
  if (auto sc = nonsurjective_shortcut(input, nash, opts)) return std::move(*sc);

  VChain vchain = build_vchain(nash.utilde);
  Rat eps_step = (3 * input.eps / 4) / input.m;

  // Two-scale level runs: the global contract over G may be looser than the
  // per-step budget, which only has to hold where the approximation target
  // lives (the hull of M, padded by a few cells).  Steep zero-set slopes far
  // from M would otherwise force unattainable fit degrees.
  PipelineOptions run_opts = opts;
  Rat eps_level = eps_step;
  if (eps_step < Rat(3, 10)) {
    eps_level = Rat(3, 10);
    BoxDomain hull = hull_box(input.M);
    Rat pad = run_opts.level.grid_h * 4;
    for (auto& [a, b] : hull.axes) {
      a -= pad;
      b += pad;
    }
    run_opts.level.tight_box = hull;
    run_opts.level.tight_eps = eps_step;
  }

  std::vector<long long> ls;
  for (int s = 1; s <= input.m; ++s) {
    long long l = (s - 1 < static_cast<int>(opts.l_override.size()))
                      ? opts.l_override[s - 1]
                      : schedule_l(input.m, input.k, s);
    ls.push_back(l);
  }
  std::vector<StageOutput> stages;
  stages.push_back(step_one(nash, vchain, input, run_opts, ls[0], eps_level));
  for (int s = 2; s <= input.m; ++s)
    stages.push_back(
        step_inductive(s, stages.back(), nash, vchain, input, run_opts, ls[s - 1], eps_level));
  return finalize(std::move(stages), nash, input, opts);
}

nlohmann::json verify(const SphereApproximant& approx, const InputMap& input, double fd_h) {
  nlohmann::json rep;
  auto pts = to_real_points(input.M);

  Real sup(0);
  for (std::size_t j = 0; j < pts.size(); ++j)
    for (int i = 0; i <= input.m; ++i)
      sup = std::max(sup, abs(approx.w[i](pts[j]) - input.u[i](pts[j])));
  rep["sup_error_on_M"] = sup.convert_to<double>();

  Real norm_resid(0);
  for (const auto& x : pts) {
    Real s(0);
    for (int i = 0; i <= input.m; ++i) {
      Real v = approx.w[i](x);
      s += v * v;
    }
    norm_resid = std::max(norm_resid, abs(s - 1));
  }
  rep["normalization_residual"] = norm_resid.convert_to<double>();

  // exact identity residuals at random rational points (Schwartz-Zippel
  // style): the squared chain must vanish identically
  std::mt19937_64 rng(0xABCDEF12345ull);
  std::uniform_int_distribution<long> num(-49, 49);
  int exact_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RatPoint x(input.n);
    for (int d = 0; d < input.n; ++d) {
      long a = num(rng);
      if (a == 0) a = 1;
      x[d] = Rat(a, 7);  // magnitudes in [1/7, 7]
    }
    std::optional<Rat> total;
    if (approx.shortcut) {
      Rat s(0);
      bool ok = true;
      for (const auto& ub : approx.ubar) {
        auto v = ub.core->eval_rat(x);
        if (!v) {
          ok = false;
          break;
        }
        s += *v * *v;
      }
      auto d = approx.vlast->eval_rat(x);
      if (ok && d) total = s - *d * *d;
    } else {
      // ubar_1^2 + ubar_2^2 - vbar_2^2 and each subsequent stage identity
      Rat worst(0);
      bool ok = true;
      auto sq = [&](const RatExprPtr& e) -> std::optional<Rat> {
        auto v = e->eval_rat(x);
        if (!v) return std::nullopt;
        return Rat(*v * *v);
      };
      auto a = sq(approx.ubar[0].core);
      auto b = sq(approx.ubar[1].core);
      auto c = sq(approx.vbar_chain[0]);
      if (a && b && c)
        worst = std::max(worst, Rat(abs(*a + *b - *c)));
      else
        ok = false;
      for (std::size_t t = 1; t < approx.vbar_chain.size() && ok; ++t) {
        auto vp = sq(approx.vbar_chain[t - 1]);
        auto un = sq(approx.ubar[t + 1].core);
        auto vn = sq(approx.vbar_chain[t]);
        if (vp && un && vn)
          worst = std::max(worst, Rat(abs(*vp + *un - *vn)));
        else
          ok = false;
      }
      if (ok) total = worst;
    }
    if (!total || *total != 0) ++exact_fail;
  }
  rep["exact_identity_failures"] = exact_fail;
  rep["exact_identity_trials"] = 100;

  // quasi-regulousness: |value| equals |core| at samples
  Real qr_resid(0);
  for (const auto& x : pts)
    for (int i = 0; i <= input.m; ++i) {
      Real core = approx.ubar[i].core->eval_real(x);
      Real val = approx.ubar[i].fn(x);
      qr_resid = std::max(qr_resid, abs(abs(val) - abs(core)));
    }
  rep["quasi_regulous_residual"] = qr_resid.convert_to<double>();

  // FD smoothness across the zero sets
  nlohmann::json certs = nlohmann::json::array();
  BoxDomain hull = hull_box(input.M);
  for (int i = 0; i <= input.m; ++i) {
    const auto& ub = approx.ubar[i];
    if (ub.trivial_sign || ub.zero_samples.empty()) {
      certs.push_back({{"component", i}, {"pass", true}, {"note", "regular"}});
      continue;
    }
    FdCertificate c = certify_ck(ub.fn, hull, input.k, fd_h, ub.zero_samples);
    nlohmann::json cj = c.to_json();
    cj["component"] = i;
    certs.push_back(std::move(cj));
  }
  rep["fd_certificates"] = std::move(certs);
  rep["passes"] = (exact_fail == 0) && sup <= to_real(input.eps);
  return rep;
}

nlohmann::json SphereApproximant::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["m"] = m;
  j["k"] = k;
  j["shortcut"] = shortcut;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& ub : ubar) {
    nlohmann::json cj = ub.to_json();
    cj["core"] = ub.core->to_json();
    comps.push_back(std::move(cj));
  }
  j["ubar"] = std::move(comps);
  j["vlast"] = vlast->to_json();
  nlohmann::json chain = nlohmann::json::array();
  for (const auto& v : vbar_chain) chain.push_back(v->to_json());
  j["vbar_chain"] = std::move(chain);
  j["report"] = report;
  return j;
}

}  // namespace qr
