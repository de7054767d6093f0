#include "qr/unipoly.hpp"

#include <stdexcept>

namespace qr {

UniPoly::UniPoly(std::vector<Rat> coeffs) : coeffs_(std::move(coeffs)) {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
  rcoeffs_.resize(coeffs_.size());
  for (std::size_t i = 0; i < coeffs_.size(); ++i) rcoeffs_[i] = to_real(coeffs_[i]);
}

UniPoly UniPoly::from_multipoly(const MultiPoly& p) {
  if (p.nvars() != 1) throw std::invalid_argument("from_multipoly: univariate expected");
  std::vector<Rat> c(static_cast<std::size_t>(std::max<long>(p.degree() + 1, 0)), Rat(0));
  for (const auto& [e, v] : p.terms()) c[e[0]] = v;
  return UniPoly(std::move(c));
}

Rat UniPoly::operator()(const Rat& x) const {
  Rat acc(0);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Real UniPoly::operator()(const Real& x) const {
  Real acc(0);
  for (auto it = rcoeffs_.rbegin(); it != rcoeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

UniPoly UniPoly::derivative() const {
  if (coeffs_.size() <= 1) return UniPoly();
  std::vector<Rat> d(coeffs_.size() - 1);
  for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = coeffs_[i] * Rat(static_cast<long>(i));
  return UniPoly(std::move(d));
}

nlohmann::json UniPoly::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : coeffs_) arr.push_back(rat_to_string(c));
  return arr;
}

UniPoly UniPoly::from_json(const nlohmann::json& j) {
  std::vector<Rat> c;
  for (const auto& s : j) c.push_back(rat_from_string(s.get<std::string>()));
  return UniPoly(std::move(c));
}

// ---------------------------------------------------------------------------

ChebPoly::ChebPoly(Rat lo, Rat hi, std::vector<Rat> cheb_coeffs)
    : lo_(std::move(lo)), hi_(std::move(hi)), coeffs_(std::move(cheb_coeffs)) {
  if (!(lo_ < hi_)) throw std::invalid_argument("ChebPoly: need lo < hi");
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
  rcoeffs_.resize(coeffs_.size());
  for (std::size_t i = 0; i < coeffs_.size(); ++i) rcoeffs_[i] = to_real(coeffs_[i]);
  rlo_ = to_real(lo_);
  rhi_ = to_real(hi_);
}

ChebPoly ChebPoly::from_unipoly(const UniPoly& p, const Rat& lo, const Rat& hi) {
  // Horner in Chebyshev-coefficient space: multiply-by-t is banded there.
  // t = half*xi + mid on [lo, hi].
  Rat mid = (lo + hi) / 2, half = (hi - lo) / 2;
  std::vector<Rat> acc;  // Chebyshev coefficients of the running value
  auto mul_t_add = [&](const Rat& constant) {
    std::vector<Rat> out(acc.size() + 1, Rat(0));
    for (std::size_t k = 0; k < acc.size(); ++k) {
      // xi * T_k = (T_{k+1} + T_{|k-1|}) / 2
      out[k + 1] += half * acc[k] / 2;
      if (k == 0)
        out[1] += half * acc[0] / 2;
      else
        out[k - 1] += half * acc[k] / 2;
      out[k] += mid * acc[k];
    }
    if (out.empty()) out.assign(1, Rat(0));
    out[0] += constant;
    while (!out.empty() && out.back() == 0) out.pop_back();
    acc = std::move(out);
  };
  const auto& c = p.coeffs();
  if (c.empty()) return ChebPoly(lo, hi, {});
  acc = {c.back()};
  for (auto it = c.rbegin() + 1; it != c.rend(); ++it) mul_t_add(*it);
  return ChebPoly(lo, hi, std::move(acc));
}

Rat ChebPoly::operator()(const Rat& t) const {
  if (coeffs_.empty()) return Rat(0);
  Rat xi = (2 * t - lo_ - hi_) / (hi_ - lo_);
  Rat b1(0), b2(0);
  for (std::size_t k = coeffs_.size(); k-- > 1;) {
    Rat b0 = coeffs_[k] + 2 * xi * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs_[0] + xi * b1 - b2;
}

Real ChebPoly::operator()(const Real& t) const {
  if (rcoeffs_.empty()) return Real(0);
  Real xi = (2 * t - rlo_ - rhi_) / (rhi_ - rlo_);
  Real b1(0), b2(0);
  for (std::size_t k = rcoeffs_.size(); k-- > 1;) {
    Real b0 = rcoeffs_[k] + 2 * xi * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return rcoeffs_[0] + xi * b1 - b2;
}

nlohmann::json ChebPoly::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : coeffs_) arr.push_back(rat_to_string(c));
  return nlohmann::json{
      {"basis", "chebyshev"}, {"lo", rat_to_string(lo_)}, {"hi", rat_to_string(hi_)},
      {"coeffs", std::move(arr)}};
}

ChebPoly ChebPoly::from_json(const nlohmann::json& j) {
  std::vector<Rat> c;
  for (const auto& s : j.at("coeffs")) c.push_back(rat_from_string(s.get<std::string>()));
  return ChebPoly(rat_from_string(j.at("lo").get<std::string>()),
                  rat_from_string(j.at("hi").get<std::string>()), std::move(c));
}

}  // namespace qr
