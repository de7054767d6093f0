// The end-to-end construction: polynomial preamble with bump and generic
// constants, the v-chain of Pythagorean identities, per-step level runs with
// sign recovery, and the final normalized sphere map with its verification
// report.

#pragma once

#include "qr/ckwitness.hpp"
#include "qr/level.hpp"
#include "qr/ratexpr.hpp"
#include "qr/schedule.hpp"
#include "qr/urysohn.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qr {

struct PipelineError : std::runtime_error {
  std::string stage;
  PipelineError(const std::string& stage_, const std::string& msg)
      : std::runtime_error("[" + stage_ + "] " + msg), stage(stage_) {}
};

struct InputMap {
  int n = 1, m = 1;
  std::vector<RatPoint> M;
  std::vector<RealFn> u;  // m+1 components, unit-norm on M after ingestion
  int k = 1;
  Rat eps = Rat(1, 10);
};

// Renormalizes u on ingestion when the unit-sphere residual exceeds 1e-9.
InputMap make_input_map(int n, int m, std::vector<RatPoint> M, std::vector<RealFn> u, int k,
                        Rat eps);

struct PipelineOptions {
  std::uint64_t seed = 1;
  int nash_degree_cap = 64;
  LevelOptions level;
  std::vector<long long> l_override;  // per-step root exponents, empty = schedule
  double fd_h = 1e-3;
  bool certify = true;  // run FD certificates on stage outputs
};

struct NashifiedMap {
  std::vector<MultiPoly> uhat;
  std::vector<RatPoint> sigma;
  BallDomain G;
  int mhat = 1;
  Rat eps_bump;
  std::vector<Rat> constants;
  std::vector<RealFn> utilde;  // uhat_i / sqrt(sum uhat_j^2)
  UrysohnFactor beta;
  double preamble_error = 0;  // sup_M |utilde - u|
  std::vector<std::vector<Rat>> uhat_roots;  // per component, roots inside G (n = 1)
};

NashifiedMap nashify(const InputMap& input, const PipelineOptions& opts);

struct VChain {
  std::vector<RealFn> v;  // v[0] = v_1 = |u_1|, ..., v[m] = v_{m+1}
};
VChain build_vchain(const std::vector<RealFn>& utilde);

// Per-component sign assignment on the line: sorted zero points and the sign
// on each open interval between them; the two outer intervals continue with
// the boundary-component sign.
struct SignAssignment {
  std::vector<Rat> zeros;
  std::vector<int> interval_signs;  // zeros.size() + 1 entries
  int sign_at(const Rat& x) const;
  int sign_at_real(const Real& x) const;
};

struct QuasiRegulousFn {
  RatExprPtr core;       // |value| == |core| wherever the core is defined
  bool trivial_sign = true;  // regular output: value = core itself
  SignAssignment signs;
  std::vector<RealPoint> zero_samples;
  FdCertificate smoothness;
  RealFn fn;

  nlohmann::json to_json() const;
};

struct StageOutput {
  int step = 1;
  long long l_used = 1;
  RatExprPtr ubar_abs;   // |u-bar_{step+1}|
  QuasiRegulousFn ubar;  // signed recovery of the same
  RatExprPtr ubar_first; // u-bar_1, produced by step 1 only
  RatExprPtr vbar_next;  // v-bar_{step+1}
  CkWitness vbar_witness;
  nlohmann::json level_report;
  double sup_err_ubar = 0;  // vs the Nash reference on M
  double sup_err_vbar = 0;
};

struct SphereApproximant {
  int n = 1, m = 1, k = 1;
  bool shortcut = false;
  std::vector<QuasiRegulousFn> ubar;  // m+1 components
  RatExprPtr vlast;                   // v-bar_{m+1}
  std::vector<RatExprPtr> vbar_chain; // v-bar_2 .. v-bar_{m+1}
  std::vector<RealFn> w;              // ubar_i / vlast
  nlohmann::json report;

  nlohmann::json to_json() const;
};

// Stereographic shortcut for maps missing a coordinate zero on M; returns
// nullopt when no component of u stays bounded away from zero on M.
std::optional<SphereApproximant> nonsurjective_shortcut(const InputMap& input,
                                                        const NashifiedMap& nash,
                                                        const PipelineOptions& opts);

StageOutput step_one(const NashifiedMap& nash, const VChain& vchain, const InputMap& input,
                     const PipelineOptions& opts, long long l1, const Rat& eps_step);

StageOutput step_inductive(int step, const StageOutput& prev, const NashifiedMap& nash,
                           const VChain& vchain, const InputMap& input,
                           const PipelineOptions& opts, long long l_step,
                           const Rat& eps_step);

SphereApproximant finalize(std::vector<StageOutput> stages, const NashifiedMap& nash,
                           const InputMap& input, const PipelineOptions& opts);

// Full pipeline: nashify, shortcut if eligible, otherwise the m-step chain.
SphereApproximant approximate(const InputMap& input, const PipelineOptions& opts);

// Aggregated verification report: sup error on M, normalization residuals,
// FD smoothness across zero sets, quasi-regulousness samples, exact identity
// residuals at random rational points.
nlohmann::json verify(const SphereApproximant& approx, const InputMap& input, double fd_h);

}  // namespace qr
