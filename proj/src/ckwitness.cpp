#include "qr/ckwitness.hpp"

#include "qr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qr {

nlohmann::json FdCertificate::to_json() const {
  return nlohmann::json{{"order", order},         {"h", h},
                        {"jump_tol", jump_tol},   {"max_jump", max_jump},
                        {"max_zero_value", max_zero_value}, {"pass", pass}};
}

bool CkWitness::roundtrip_ok(int samples, double rel_tol) const {
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  int n = domain.dim();
  for (int s = 0; s < samples; ++s) {
    RealPoint x(n);
    for (int i = 0; i < n; ++i) {
      const auto& [a, b] = domain.axes[i];
      double t = std::uniform_real_distribution<double>(0, 1)(rng);
      x[i] = to_real(a) + Real(t) * to_real(b - a);
    }
    Real vv = v(x);
    Real rr = pow(root(x), static_cast<int>(l));
    Real scale = std::max(abs(vv), Real(1));
    if (abs(vv - rr) > scale * Real(rel_tol)) return false;
  }
  return true;
}

namespace {

void check_descent_inputs(const std::vector<const CkWitness*>& ws) {
  if (ws.empty()) throw std::invalid_argument("descent: no inputs");
  const CkWitness& w0 = *ws[0];
  for (const auto* w : ws) {
    if (w->k != w0.k || w->l != w0.l)
      throw std::invalid_argument("descent: witnesses must share k and exponent 2kl");
    if (w->v.nvars != w0.v.nvars)
      throw std::invalid_argument("descent: witnesses must share the ambient dimension");
  }
  if (w0.l % (2 * static_cast<long long>(w0.k)) != 0)
    throw std::invalid_argument("descent: input exponent must be divisible by 2k");
}

Real root_of(const Real& value, long long l_out) {
  if (value <= 0) return Real(0);
  if (l_out == 1) return value;
  return exp(log(value) / Real(static_cast<long>(l_out)));
}

}  // namespace

CkWitness descent_sum(const std::vector<CkWitness>& ws) {
  std::vector<const CkWitness*> ptrs;
  for (const auto& w : ws) ptrs.push_back(&w);
  check_descent_inputs(ptrs);
  const CkWitness& w0 = ws[0];
  long long l_out = w0.l / (2 * w0.k);
  std::vector<RealFn> vs;
  for (const auto& w : ws) vs.push_back(w.v);
  RealFn value{w0.v.nvars, [vs](std::span<const Real> x) {
                 Real s = 0;
                 for (const auto& f : vs) s += f.f(x);
                 return s;
               }};
  RealFn root{w0.v.nvars, [vs, l_out](std::span<const Real> x) {
                Real s = 0;
                for (const auto& f : vs) s += f.f(x);
                return root_of(s, l_out);
              }};
  return CkWitness{std::move(value), std::move(root), w0.k, l_out, w0.domain};
}

CkWitness descent_prod_over_sum(const CkWitness& w1, const CkWitness& w2) {
  check_descent_inputs({&w1, &w2});
  long long l_out = w1.l / (2 * w1.k);
  RealFn v1 = w1.v, v2 = w2.v;
  RealFn value{w1.v.nvars, [v1, v2](std::span<const Real> x) {
                 Real a = v1.f(x), b = v2.f(x);
                 Real s = a + b;
                 if (s == 0) return Real(0);  // 0/0 convention at common zeros
                 return a * b / s;
               }};
  RealFn root{w1.v.nvars, [v1, v2, l_out](std::span<const Real> x) {
                Real a = v1.f(x), b = v2.f(x);
                Real s = a + b;
                if (s == 0) return Real(0);
                return root_of(a * b / s, l_out);
              }};
  return CkWitness{std::move(value), std::move(root), w1.k, l_out, w1.domain};
}

CkWitness descent_sq_over_sum(const CkWitness& w1, const CkWitness& w2) {
  check_descent_inputs({&w1, &w2});
  long long l_out = w1.l / (2 * w1.k);
  RealFn v1 = w1.v, v2 = w2.v;
  RealFn value{w1.v.nvars, [v1, v2](std::span<const Real> x) {
                 Real a = v1.f(x), b = v2.f(x);
                 Real s = a + b;
                 if (s == 0) return Real(0);
                 return a * a / s;
               }};
  RealFn root{w1.v.nvars, [v1, v2, l_out](std::span<const Real> x) {
                Real a = v1.f(x), b = v2.f(x);
                Real s = a + b;
                if (s == 0) return Real(0);
                return root_of(a * a / s, l_out);
              }};
  return CkWitness{std::move(value), std::move(root), w1.k, l_out, w1.domain};
}

// ---------------------------------------------------------------------------
// FD certification

namespace {

struct FdGrid {
  int dim = 1;
  double h = 1e-3;
  std::vector<int> dims;           // interior node counts
  std::vector<long> strides;       // padded strides
  std::vector<int> padded;         // dims + 2*pad
  int pad = 1;
  std::vector<Real> values;        // fn on the padded grid
  std::vector<Real> axis0;         // padded axis coordinates, per axis
  std::vector<std::vector<Real>> axes;

  long padded_index(const std::vector<int>& idx) const {  // interior idx
    long o = 0;
    for (int i = 0; i < dim; ++i) o += strides[i] * (idx[i] + pad);
    return o;
  }
};

FdGrid build_fd_grid(const RealFn& fn, const BoxDomain& box, int pad, double h) {
  FdGrid g;
  g.dim = box.dim();
  g.pad = pad;
  // keep the sweep affordable in higher dimension
  double step = h;
  for (;;) {
    long total = 1;
    for (int i = 0; i < g.dim; ++i) {
      double len = to_double(Rat(box.axes[i].second - box.axes[i].first));
      long n = static_cast<long>(std::floor(len / step + 0.5)) + 1;
      total *= (n + 2 * pad);
    }
    if (total <= 400000 || g.dim == 1) break;
    step *= 2;
  }
  g.h = step;
  g.dims.resize(g.dim);
  g.padded.resize(g.dim);
  g.axes.resize(g.dim);
  for (int i = 0; i < g.dim; ++i) {
    double a = to_double(Rat(box.axes[i].first));
    double len = to_double(Rat(box.axes[i].second - box.axes[i].first));
    g.dims[i] = static_cast<int>(std::floor(len / step + 0.5)) + 1;
    g.padded[i] = g.dims[i] + 2 * pad;
    g.axes[i].resize(g.padded[i]);
    for (int j = 0; j < g.padded[i]; ++j) g.axes[i][j] = Real(a) + Real(step) * (j - pad);
  }
  g.strides.assign(g.dim, 1);
  for (int i = g.dim - 2; i >= 0; --i) g.strides[i] = g.strides[i + 1] * g.padded[i + 1];
  long total = g.strides[0] * g.padded[0];
  g.values.resize(total);
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t flat) {
    RealPoint x(g.dim);
    long rem = static_cast<long>(flat);
    for (int i = 0; i < g.dim; ++i) {
      long q = rem / g.strides[i];
      rem %= g.strides[i];
      x[i] = g.axes[i][q];
    }
    g.values[flat] = fn(std::span<const Real>(x));
  });
  return g;
}

// One central-difference application along `axis` (result valid one pad cell
// narrower on that axis; callers track validity via total order <= pad).
std::vector<Real> central_diff(const FdGrid& g, const std::vector<Real>& in, int axis) {
  std::vector<Real> out(in.size(), Real(0));
  long stride = g.strides[axis];
  long total = static_cast<long>(in.size());
  Real inv2h = Real(1) / (2 * Real(g.h));
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t f) {
    long flat = static_cast<long>(f);
    long pos = (flat / stride) % g.padded[axis];
    if (pos == 0 || pos == g.padded[axis] - 1) return;
    out[flat] = (in[flat + stride] - in[flat - stride]) * inv2h;
  });
  return out;
}

void multi_indices_of_order(int dim, int order, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(dim, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == dim - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, order);
}

}  // namespace

FdCertificate certify_ck(const RealFn& fn, const BoxDomain& domain, int k, double h,
                         const std::vector<RealPoint>& zero_samples, double jump_tol) {
  FdCertificate cert;
  cert.order = k;
  FdGrid g = build_fd_grid(fn, domain, k, h);
  cert.h = g.h;

  double max_jump = 0, max_zero = 0, tol_used = 0;
  bool pass = true;
  for (int order = 1; order <= k; ++order) {
    std::vector<std::vector<int>> idxs;
    multi_indices_of_order(g.dim, order, idxs);
    for (const auto& mi : idxs) {
      std::vector<Real> d = g.values;
      for (int axis = 0; axis < g.dim; ++axis)
        for (int rep = 0; rep < mi[axis]; ++rep) d = central_diff(g, d, axis);
      // derivative magnitude scale over the interior
      Real scale(1);
      std::vector<int> idx(g.dim, 0);
      auto for_each_interior = [&](auto&& body) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
          body(idx);
          int i = g.dim - 1;
          while (i >= 0 && ++idx[i] == g.dims[i]) idx[i--] = 0;
          if (i < 0) break;
        }
      };
      for_each_interior([&](const std::vector<int>& id) {
        scale = std::max(scale, abs(d[g.padded_index(id)]));
      });
      double tol = jump_tol > 0 ? jump_tol : 10.0 * g.h * scale.convert_to<double>();
      tol_used = std::max(tol_used, tol);
      for_each_interior([&](const std::vector<int>& id) {
        long base = g.padded_index(id);
        for (int axis = 0; axis < g.dim; ++axis) {
          if (id[axis] + 1 >= g.dims[axis]) continue;
          double jump = abs(d[base + g.strides[axis]] - d[base]).convert_to<double>();
          max_jump = std::max(max_jump, jump);
          if (jump > tol) pass = false;
        }
      });
      for (const auto& z : zero_samples) {
        // nearest interior node
        std::vector<int> id(g.dim);
        bool inside = true;
        for (int i = 0; i < g.dim; ++i) {
          double a = to_double(Rat(domain.axes[i].first));
          long j = std::lround((z[i].convert_to<double>() - a) / g.h);
          if (j < 0 || j >= g.dims[i]) inside = false;
          id[i] = static_cast<int>(std::clamp<long>(j, 0, g.dims[i] - 1));
        }
        if (!inside) continue;
        double val = abs(d[g.padded_index(id)]).convert_to<double>();
        max_zero = std::max(max_zero, val);
        if (val > tol) pass = false;
      }
    }
  }
  cert.jump_tol = tol_used;
  cert.max_jump = max_jump;
  cert.max_zero_value = max_zero;
  cert.pass = pass;
  return cert;
}

SignedFunction symmetrize(const CkWitness& w, const SignField& signs, double h) {
  if (w.l < w.k + 1) {
    std::ostringstream msg;
    msg << "symmetrize: requires root exponent l >= k+1 (got l=" << w.l << ", k=" << w.k << ")";
    throw SymmetrizeError(msg.str());
  }
  // Sign continuity scan: adjacent sample points with opposite signs must sit
  // next to the zero set (v small relative to its local variation).
  {
    FdGrid g = build_fd_grid(w.v, w.domain, 1, h);
    Real grad_scale(1);
    std::vector<Real> d1 = g.values;
    for (int axis = 0; axis < g.dim; ++axis) {
      std::vector<Real> d = central_diff(g, g.values, axis);
      for (const auto& v : d) grad_scale = std::max(grad_scale, abs(v));
    }
    double flip_thresh = 2.0 * g.h * grad_scale.convert_to<double>();
    std::vector<int> idx(g.dim, 0);
    while (true) {
      long base = g.padded_index(idx);
      RealPoint xa(g.dim);
      for (int i = 0; i < g.dim; ++i) xa[i] = g.axes[i][idx[i] + g.pad];
      int sa = signs.sign_at(xa);
      for (int axis = 0; axis < g.dim; ++axis) {
        if (idx[axis] + 1 >= g.dims[axis]) continue;
        RealPoint xb = xa;
        xb[axis] += Real(g.h);
        int sb = signs.sign_at(xb);
        if (sa != 0 && sb != 0 && sa != sb) {
          double va = abs(g.values[base]).convert_to<double>();
          double vb = abs(g.values[base + g.strides[axis]]).convert_to<double>();
          if (std::min(va, vb) > flip_thresh) {
            std::ostringstream msg;
            msg << "symmetrize: sign discontinuity away from the zero set between x=("
                << xa[0].convert_to<double>() << ") and next node along axis " << axis
                << " (|v|=" << va << ", " << vb << ")";
            throw SymmetrizeError(msg.str());
          }
        }
      }
      int i = g.dim - 1;
      while (i >= 0 && ++idx[i] == g.dims[i]) idx[i--] = 0;
      if (i < 0) break;
    }
  }

  RealFn v = w.v;
  auto sign_at = signs.sign_at;
  RealFn g_fn{w.v.nvars, [v, sign_at](std::span<const Real> x) {
                RealPoint p(x.begin(), x.end());
                int s = sign_at(p);
                if (s == 0) return Real(0);
                return Real(s) * v.f(x);
              }};
  SignedFunction out;
  out.certificate = certify_ck(g_fn, w.domain, w.k, h, signs.zero_samples);
  out.fn = std::move(g_fn);
  return out;
}

}  // namespace qr
