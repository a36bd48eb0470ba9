#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrf/dictionary.hpp"
#include "mrf/forward_model.hpp"
#include "mrf/matching.hpp"
#include "mrf/tv.hpp"
#include "mrf/types.hpp"

// Reconstruction engines: the classical zero-filled baseline, the AIR-style
// iterate, IGP-MRF (gradient step, then manifold projection, then spatial
// prox, sequentially), GFB-MRF (the two proximal branches in parallel with
// correction variables), and the rescaling/backtracking step-size rules.

namespace mrf {

enum class Method { Classical, Air, Igp, Gfb };
enum class StepStrategy { Fsz, Bt };
enum class MatchMode { Every, FirstAndLast, Never };  // Never: diagnostic reduction mode

struct SolverConfig {
  Method method = Method::Gfb;
  bool autocal = false;  // IGP low-rank via autocalibration
  MatchMode match_mode = MatchMode::Every;
  StepStrategy step = StepStrategy::Bt;
  double lambda = 0.0;
  int kmax = 10;
  int k = 10;
  int r = 50;
  TVConfig tv;  // weight is set per iteration to alpha*lambda
  bool paper_literal_condb = false;
  std::optional<double> fixed_alpha;  // diagnostic: skip the rescaling rule
  int max_halvings = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (lambda < 0.0) throw InvalidArgument("solver: lambda must be nonnegative");
    if (kmax < 1) throw InvalidArgument("solver: kmax must be >= 1");
  }
};

/// Method-name grammar of Table 1: classical | air-mrf | gfb-mrf |
/// igp-mrf-XY with X = autocalibration, Y = matching-at-every-iteration,
/// optionally suffixed -fsz or -bt to override the table's step strategy.
inline SolverConfig parse_method(const std::string& name) {
  SolverConfig cfg;
  std::string base = name;
  std::optional<StepStrategy> forced;
  auto ends_with = [&](const char* suf) {
    const std::string s(suf);
    return base.size() > s.size() && base.compare(base.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with("-bt")) {
    forced = StepStrategy::Bt;
    base = base.substr(0, base.size() - 3);
  } else if (ends_with("-fsz")) {
    forced = StepStrategy::Fsz;
    base = base.substr(0, base.size() - 4);
  }

  if (base == "classical") {
    cfg.method = Method::Classical;
    cfg.step = StepStrategy::Fsz;  // non-iterative; no step rule applies
  } else if (base == "air-mrf") {
    cfg.method = Method::Air;
    cfg.match_mode = MatchMode::Every;
    cfg.step = StepStrategy::Fsz;
  } else if (base == "gfb-mrf") {
    cfg.method = Method::Gfb;
    cfg.step = StepStrategy::Bt;
  } else if (base.size() == 10 && base.compare(0, 8, "igp-mrf-") == 0) {
    cfg.method = Method::Igp;
    const char x = base[8], y = base[9];
    if ((x != '0' && x != '1') || (y != '0' && y != '1'))
      throw InvalidArgument("unknown method name: " + name);
    cfg.autocal = (x == '1');
    cfg.match_mode = (y == '1') ? MatchMode::Every : MatchMode::FirstAndLast;
    // Table 1 pairings: 01 and 11 run FSZ, 00 and 10 run BT.
    cfg.step = (y == '1') ? StepStrategy::Fsz : StepStrategy::Bt;
  } else {
    throw InvalidArgument("unknown method name: " + name);
  }
  if (forced) cfg.step = *forced;
  return cfg;
}

inline std::string method_name(const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::Classical:
      return "classical";
    case Method::Air:
      return "air-mrf";
    case Method::Gfb:
      return "gfb-mrf";
    case Method::Igp: {
      std::string s = "igp-mrf-";
      s += cfg.autocal ? '1' : '0';
      s += (cfg.match_mode == MatchMode::Every) ? '1' : '0';
      if (cfg.step == StepStrategy::Bt) s += "-bt";
      return s;
    }
  }
  return "?";
}

struct IterationStat {
  int iter = 0;
  double alpha = 0.0;
  double fidelity = 0.0;
  int backtracks = 0;
  double wall_ms = 0.0;
};

struct SolverState {
  CompressedImage x;        // last iterate
  CompressedImage z_bloch;  // GFB only
  CompressedImage z_spat;   // GFB only
  double alpha = 0.0;
  int iteration = 0;
  std::vector<double> fidelity_history;      // ||Y - G(X^k)||^2, k = 1..kmax
  std::vector<double> condb_metric_history;  // BT runs only
  std::vector<IterationStat> stats;
  CompressedImage best_x;
  int best_iter = 0;  // 1-based index into fidelity_history
};

// --- step-size rules -------------------------------------------------------

inline double rescale_alpha(const KSpaceData& y, const CompressedImage& x_tilde,
                            const ForwardContext& ctx) {
  const KSpaceData gx = ctx.forward(x_tilde);
  const double den = gx.flat().squaredNorm();
  if (den == 0.0) throw NumericalError("rescale_alpha: G(x_tilde) is zero");
  const double num = y.flat().dot(gx.flat()).real();
  return num / den;
}

namespace detail {

inline bool condition_a_holds(double alpha, double delta_sq, double ghg_delta_sq) {
  if (delta_sq == 0.0) return true;  // no movement
  if (ghg_delta_sq == 0.0) return true;
  return alpha <= 0.99 * delta_sq / ghg_delta_sq;
}

inline bool condition_b_holds(double metric_new, double metric_old, bool paper_literal) {
  return paper_literal ? (metric_new >= metric_old) : (metric_new <= metric_old);
}

}  // namespace detail

struct BacktrackDecision {
  bool accept = false;
  bool cond_a = false;
  bool cond_b = false;
  double metric_new = 0.0;
  double metric_old = 0.0;
};

inline BacktrackDecision backtrack_check(const CompressedImage& x_new,
                                         const CompressedImage& x_old, double alpha,
                                         const KSpaceData& y, const ForwardContext& ctx,
                                         bool paper_literal_condb = false) {
  BacktrackDecision d;
  const CMat delta = x_new.data - x_old.data;
  const double delta_sq = delta.squaredNorm();
  if (delta_sq == 0.0) {
    d.cond_a = true;
  } else {
    CompressedImage di{delta, x_new.basis_id};
    const double ghg_sq = ctx.adjoint(ctx.forward(di)).data.squaredNorm();
    d.cond_a = detail::condition_a_holds(alpha, delta_sq, ghg_sq);
  }
  const CMat ghy = ctx.adjoint(y).data;
  d.metric_new = (ghy - ctx.adjoint(ctx.forward(x_new)).data).squaredNorm();
  d.metric_old = (ghy - ctx.adjoint(ctx.forward(x_old)).data).squaredNorm();
  d.cond_b = detail::condition_b_holds(d.metric_new, d.metric_old, paper_literal_condb);
  d.accept = d.cond_a && d.cond_b;
  return d;
}

// --- shared iteration engine ------------------------------------------------

namespace detail {

inline KSpaceData negate(const KSpaceData& y) {
  KSpaceData r = y;
  auto f = r.flat();
  f = -f;
  return r;
}

/// Runs Algorithm 1 (IGP) or Algorithm 2 (GFB) at a fixed basis. The first
/// iteration picks alpha by the rescaling rule (cone homogeneity makes the
/// pre-rescale placeholder irrelevant); BT applies conditions a/b from the
/// second iteration on, halving alpha on rejection.
inline SolverState run_engine(const KSpaceData& y, const ForwardContext& ctx,
                              const CompressedDictionary& cdict, const SolverConfig& cfg,
                              const Geometry& geom, bool gfb) {
  cfg.validate();
  const int keff = ctx.channels();
  SolverState st;
  st.x = CompressedImage::zeros(geom.N, keff, ctx.basis_id());
  st.z_bloch = st.x;
  st.z_spat = st.x;
  st.best_x = st.x;

  const double fid0 = y.flat().squaredNorm();
  const CompressedImage ghy = ctx.adjoint(y);

  // For the reduced-matching variants the first iteration is matched (it
  // seeds the iterates on the manifold) and the last matching is the map
  // readout performed after the loop; matching inside a BT-checked final
  // iteration could never satisfy the descent condition.
  auto match_now = [&](int iter) {
    switch (cfg.match_mode) {
      case MatchMode::Every:
        return true;
      case MatchMode::FirstAndLast:
        return iter == 1;
      case MatchMode::Never:
        return false;
    }
    return true;
  };

  // Step size for iteration 1.
  if (cfg.fixed_alpha) {
    st.alpha = *cfg.fixed_alpha;
  } else if (fid0 == 0.0) {
    st.alpha = 0.0;  // all iterates stay zero
  } else {
    CompressedImage xt = (cfg.match_mode == MatchMode::Never) ? ghy
                                                              : CompressedImage{
                                                                    match(ghy.data, cdict).resynth,
                                                                    ctx.basis_id()};
    st.alpha = rescale_alpha(y, xt, ctx);
  }

  TVConfig tv = cfg.tv;
  KSpaceData residual = negate(y);  // G(0) - Y
  double metric_prev = 0.0;
  double best_fid = 0.0;

  for (int iter = 1; iter <= cfg.kmax; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const CompressedImage grad = ctx.adjoint(residual);
    int backtracks = 0;

    CompressedImage x_new, zb_new, zs_new;
    KSpaceData fwd_new;
    double fid_new = 0.0;
    double metric_new = 0.0;

    for (;;) {
      const CMat gimg = st.x.data - st.alpha * grad.data;
      if (gfb) {
        CMat ob = st.x.data - st.z_bloch.data;
        CMat os = st.x.data - st.z_spat.data;
        CMat zb = (cfg.match_mode == MatchMode::Never)
                      ? (gimg + ob)
                      : match(gimg + ob, cdict).resynth;
        zb -= ob;
        tv.weight = st.alpha * cfg.lambda;
        CMat zs = (tv.weight > 0.0) ? tv_prox(gimg + os, tv, geom) : (gimg + os);
        zs -= os;
        x_new = CompressedImage{(zb + zs) / 2.0, ctx.basis_id()};
        zb_new = CompressedImage{std::move(zb), ctx.basis_id()};
        zs_new = CompressedImage{std::move(zs), ctx.basis_id()};
      } else {
        CMat z = match_now(iter) ? match(gimg, cdict).resynth : gimg;
        tv.weight = st.alpha * cfg.lambda;
        x_new = CompressedImage{(tv.weight > 0.0) ? tv_prox(z, tv, geom) : std::move(z),
                                ctx.basis_id()};
      }

      fwd_new = ctx.forward(x_new);
      fid_new = (fwd_new.flat() - y.flat()).squaredNorm();

      if (cfg.step == StepStrategy::Fsz || iter == 1) {
        if (cfg.step == StepStrategy::Bt)
          metric_new = (ghy.data - ctx.adjoint(fwd_new).data).squaredNorm();
        break;
      }

      // Backtracking conditions a and b.
      const CMat delta = x_new.data - st.x.data;
      const double delta_sq = delta.squaredNorm();
      bool cond_a = true;
      if (delta_sq > 0.0) {
        CompressedImage di{delta, ctx.basis_id()};
        const double ghg_sq = ctx.adjoint(ctx.forward(di)).data.squaredNorm();
        cond_a = condition_a_holds(st.alpha, delta_sq, ghg_sq);
      }
      metric_new = (ghy.data - ctx.adjoint(fwd_new).data).squaredNorm();
      const bool cond_b = condition_b_holds(metric_new, metric_prev, cfg.paper_literal_condb);
      if (cond_a && cond_b) break;

      st.alpha /= 2.0;
      if (++backtracks > cfg.max_halvings)
        throw NumericalError("backtracking: step-size failure at iteration " +
                             std::to_string(iter));
    }

    st.x = std::move(x_new);
    if (gfb) {
      st.z_bloch = std::move(zb_new);
      st.z_spat = std::move(zs_new);
    }
    residual = std::move(fwd_new);
    {
      auto f = residual.flat();
      f -= y.flat();
    }
    if (cfg.step == StepStrategy::Bt) {
      metric_prev = metric_new;
      st.condb_metric_history.push_back(metric_new);
    }

    st.fidelity_history.push_back(fid_new);
    if (fid0 > 0.0 && fid_new > 10.0 * fid0)
      throw NumericalError("solver diverged: fidelity exceeded 10x its initial value");
    if (st.best_iter == 0 || fid_new < best_fid) {
      best_fid = fid_new;
      st.best_iter = iter;
      st.best_x = st.x;
    }

    const auto t1 = std::chrono::steady_clock::now();
    st.stats.push_back({iter, st.alpha, fid_new, backtracks,
                        std::chrono::duration<double, std::milli>(t1 - t0).count()});
    st.iteration = iter;
  }
  return st;
}

}  // namespace detail

// --- public solver surface ---------------------------------------------------

/// Bundled inputs shared by every method: the raw dictionary, its SVD basis
/// (at least max(k, r) columns), coil maps and sampling scheme.
struct ReconAssets {
  Geometry geom;
  const Dictionary* dict = nullptr;
  const CompressionBasis* basis = nullptr;
  const CoilMaps* coils = nullptr;
  const SamplingScheme* scheme = nullptr;
  std::string basis_id;
};

namespace detail {

inline void check_assets(const ReconAssets& a, int need_cols) {
  if (!a.dict || !a.basis || !a.coils || !a.scheme)
    throw InvalidArgument("recon: incomplete assets");
  if (a.basis->V.cols() < need_cols)
    throw DimensionError("recon: compression basis has fewer columns than required rank");
}

/// One rescaled AIR-MRF iterate at rank r; the autocalibration data of §2.3.
inline CMat autocal_image(const KSpaceData& y, const ReconAssets& assets, int r) {
  const CMat basis_r = assets.basis->V.leftCols(r);
  ForwardContext ctx_r(assets.geom, *assets.coils, *assets.scheme, basis_r,
                       assets.basis_id + ":r");
  const CompressedDictionary cdict_r = compress_dictionary(*assets.dict, basis_r);
  const CompressedImage ghy = ctx_r.adjoint(y);
  if (y.flat().squaredNorm() == 0.0) return CMat::Zero(assets.geom.N, r);
  CompressedImage xt{match(ghy.data, cdict_r).resynth, ctx_r.basis_id()};
  const double alpha = rescale_alpha(y, xt, ctx_r);
  return alpha * xt.data;
}

struct Prepared {
  std::unique_ptr<ForwardContext> ctx;
  CompressedDictionary cdict;
};

inline Prepared prepare(const KSpaceData& y, const ReconAssets& assets, const SolverConfig& cfg) {
  Prepared p;
  if (cfg.method == Method::Igp && cfg.autocal) {
    check_assets(assets, cfg.r);
    const CMat x_ac = autocal_image(y, assets, cfg.r);
    const AutocalBasis ab = autocal_basis(x_ac, assets.basis->V.leftCols(cfg.r), cfg.k);
    p.ctx = std::make_unique<ForwardContext>(assets.geom, *assets.coils, *assets.scheme,
                                             ab.composed(), assets.basis_id + ":ac");
    p.cdict = compress_dictionary_autocal(*assets.dict, ab, p.ctx->basis_id());
  } else {
    check_assets(assets, cfg.k);
    const CMat basis_k = assets.basis->V.leftCols(cfg.k);
    p.ctx = std::make_unique<ForwardContext>(assets.geom, *assets.coils, *assets.scheme, basis_k,
                                             assets.basis_id);
    p.cdict = compress_dictionary(*assets.dict, basis_k, assets.basis_id);
  }
  return p;
}

}  // namespace detail

/// Zero-filled (adjoint) reconstruction followed by a single matching pass.
inline TissueMaps classical_mrf(const KSpaceData& y, const ForwardContext& ctx,
                                const CompressedDictionary& cdict, const Dictionary& dict) {
  const CompressedImage x = ctx.adjoint(y);
  return lut_lookup(match(x.data, cdict), dict);
}

inline std::pair<TissueMaps, SolverState> igp_mrf(const KSpaceData& y, const ReconAssets& assets,
                                                  SolverConfig cfg) {
  if (cfg.method != Method::Igp && cfg.method != Method::Air)
    throw InvalidArgument("igp_mrf: config method must be an IGP variant");
  if (cfg.method == Method::Air) {
    cfg.lambda = 0.0;
    cfg.match_mode = MatchMode::Every;
    cfg.autocal = false;
  }
  auto p = detail::prepare(y, assets, cfg);
  SolverState st = detail::run_engine(y, *p.ctx, p.cdict, cfg, assets.geom, /*gfb=*/false);
  TissueMaps maps = lut_lookup(match(st.x.data, p.cdict), *assets.dict);
  return {std::move(maps), std::move(st)};
}

inline std::pair<TissueMaps, SolverState> gfb_mrf(const KSpaceData& y, const ReconAssets& assets,
                                                  SolverConfig cfg) {
  if (cfg.method != Method::Gfb) throw InvalidArgument("gfb_mrf: config method must be GFB");
  auto p = detail::prepare(y, assets, cfg);
  SolverState st = detail::run_engine(y, *p.ctx, p.cdict, cfg, assets.geom, /*gfb=*/true);
  // Algorithm 2's trailing matching on the last merged iterate.
  TissueMaps maps = lut_lookup(match(st.x.data, p.cdict), *assets.dict);
  return {std::move(maps), std::move(st)};
}

struct ReconResult {
  TissueMaps maps;
  SolverState state;
  double alpha_init_placeholder = 0.0;  // BLIP N/S heuristic, recorded only
};

/// Dispatch over the configured method; maps come from the iterate with the
/// lowest data fidelity, as the experiments of the source method report.
inline ReconResult run_recon(const KSpaceData& y, const ReconAssets& assets, SolverConfig cfg) {
  if (cfg.method == Method::Air) {
    cfg.lambda = 0.0;
    cfg.match_mode = MatchMode::Every;
    cfg.autocal = false;
  }
  ReconResult out;
  out.alpha_init_placeholder = static_cast<double>(assets.geom.N) / assets.geom.S;
  if (cfg.method == Method::Classical) {
    auto p = detail::prepare(y, assets, cfg);
    out.maps = classical_mrf(y, *p.ctx, p.cdict, *assets.dict);
    return out;
  }
  auto p = detail::prepare(y, assets, cfg);
  out.state = detail::run_engine(y, *p.ctx, p.cdict, cfg, assets.geom,
                                 /*gfb=*/cfg.method == Method::Gfb);
  out.maps = lut_lookup(match(out.state.best_x.data, p.cdict), *assets.dict);
  return out;
}

}  // namespace mrf
