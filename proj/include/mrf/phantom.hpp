#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "mrf/coil_maps.hpp"
#include "mrf/dictionary.hpp"
#include "mrf/epg.hpp"
#include "mrf/forward_model.hpp"
#include "mrf/geometry.hpp"
#include "mrf/kspace.hpp"
#include "mrf/rng.hpp"
#include "mrf/schedule.hpp"
#include "mrf/types.hpp"

namespace mrf {

struct Ellipse {
  double cx = 0.5, cy = 0.5;  // center, FOV fraction
  double rx = 0.3, ry = 0.3;  // semi-axes, FOV fraction
  double angle_rad = 0.0;

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
};

struct TissueClass {
  double t1_ms = 0.0, t2_ms = 0.0, pd = 1.0;
  Ellipse region;
};

/// Layered-ellipse digital phantom; later classes overwrite earlier ones.
struct DigitalPhantom {
  int nx = 0, ny = 0;
  RVec t1, t2, pd;
  std::vector<std::uint8_t> support;
  std::uint64_t seed = 0;

  long num_voxels() const { return static_cast<long>(nx) * ny; }

  std::vector<std::uint8_t> support_mask() const { return support; }
};

/// Brain-like default: WM head, GM rim, CSF ventricles, muscle-like blobs.
inline std::vector<TissueClass> default_tissue_classes() {
  return {
      {1300.0, 110.0, 0.86, {0.50, 0.50, 0.40, 0.34, 0.0}},   // GM shell
      {790.0, 92.0, 0.77, {0.50, 0.50, 0.33, 0.27, 0.0}},     // WM interior
      {4000.0, 2000.0, 1.00, {0.42, 0.46, 0.07, 0.11, 0.3}},  // CSF ventricle
      {4000.0, 2000.0, 1.00, {0.58, 0.46, 0.07, 0.11, -0.3}},
      {900.0, 50.0, 0.90, {0.50, 0.72, 0.10, 0.06, 0.0}},     // muscle-like
      {900.0, 50.0, 0.90, {0.32, 0.30, 0.05, 0.05, 0.0}},
  };
}

inline DigitalPhantom make_phantom(const Geometry& geom,
                                   const std::vector<TissueClass>& classes,
                                   std::uint64_t seed) {
  DigitalPhantom ph;
  ph.nx = geom.nx;
  ph.ny = geom.ny;
  ph.seed = seed;
  ph.t1 = RVec::Zero(geom.N);
  ph.t2 = RVec::Zero(geom.N);
  ph.pd = RVec::Zero(geom.N);
  ph.support.assign(static_cast<std::size_t>(geom.N), 0);

  Rng rng(seed);
  const double jx = rng.uniform(-0.01, 0.01);
  const double jy = rng.uniform(-0.01, 0.01);
  const double pmod_fx = rng.uniform(1.0, 2.0);
  const double pmod_fy = rng.uniform(1.0, 2.0);
  const double pmod_ph = rng.uniform(0.0, 2.0 * kPi);

  for (int ix = 0; ix < geom.nx; ++ix) {
    for (int iy = 0; iy < geom.ny; ++iy) {
      const double x = (ix + 0.5) / geom.nx + jx;
      const double y = (iy + 0.5) / geom.ny + jy;
      const long i = static_cast<long>(ix) * geom.ny + iy;
      for (const auto& tc : classes) {
        if (tc.region.contains(x, y)) {
          ph.t1(i) = tc.t1_ms;
          ph.t2(i) = tc.t2_ms;
          ph.pd(i) = tc.pd;
          ph.support[static_cast<std::size_t>(i)] = 1;
        }
      }
      if (ph.support[static_cast<std::size_t>(i)]) {
        // Smooth proton-density variation, bounded away from zero.
        const double mod =
            1.0 + 0.08 * std::sin(2.0 * kPi * (pmod_fx * x + pmod_fy * y) + pmod_ph);
        ph.pd(i) *= mod;
      }
    }
  }
  return ph;
}

/// Quantize (T1, T2) to the nearest grid atom; used when simulating on-grid.
inline std::pair<double, double> snap_to_grid(const TissueGrid& grid, double t1, double t2) {
  double best = -1.0;
  std::pair<double, double> out{t1, t2};
  for (const auto& [a1, a2] : grid.atoms) {
    const double d = (a1 - t1) * (a1 - t1) + (a2 - t2) * (a2 - t2);
    if (best < 0.0 || d < best) {
      best = d;
      out = {a1, a2};
    }
  }
  return out;
}

/// Ground-truth measurement synthesis: per-voxel EPG fingerprints from the
/// continuous (T1, T2) values (or grid-snapped when requested), scaled by PD
/// and pushed through the full-length forward model (identity basis, k = L).
inline KSpaceData simulate_measurements(const DigitalPhantom& ph, const SequenceSchedule& schedule,
                                        const CoilMaps& coils, const SamplingScheme& scheme,
                                        bool dict_grid_free = true,
                                        const TissueGrid* grid = nullptr) {
  const long N = ph.num_voxels();
  const int L = schedule.L;
  Geometry geom = Geometry::make(ph.nx, ph.ny, L, scheme_samples(scheme), L, L, coils.C);

  // One simulation per distinct tissue.
  std::map<std::pair<double, double>, std::vector<Cplx>> cache;
  CMat x(N, L);
  x.setZero();
  for (long i = 0; i < N; ++i) {
    if (ph.pd(i) == 0.0) continue;
    std::pair<double, double> key{ph.t1(i), ph.t2(i)};
    if (!dict_grid_free) {
      if (!grid) throw InvalidArgument("simulate_measurements: grid snapping requires a grid");
      key = snap_to_grid(*grid, key.first, key.second);
    }
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, epg_fingerprint(schedule, key.first, key.second)).first;
    for (int t = 0; t < L; ++t) x(i, t) = ph.pd(i) * it->second[static_cast<std::size_t>(t)];
  }

  ForwardContext ctx(geom, coils, scheme, CMat::Identity(L, L), "identity");
  return ctx.forward(CompressedImage{std::move(x), "identity"});
}

/// Additive complex Gaussian noise; per-component std is relative_std times
/// the largest sample magnitude, computed before any noise is added.
struct NoiseSpec {
  double relative_std = 0.001;
  std::uint64_t seed = 0;
};

inline KSpaceData add_noise(const KSpaceData& y, const NoiseSpec& spec) {
  if (spec.relative_std < 0.0) throw InvalidArgument("add_noise: negative relative_std");
  KSpaceData out = y;
  if (spec.relative_std == 0.0) return out;
  double maxabs = 0.0;
  const auto f = y.flat();
  for (Eigen::Index i = 0; i < f.size(); ++i) maxabs = std::max(maxabs, std::abs(f(i)));
  const double sigma = spec.relative_std * maxabs;
  Rng rng(spec.seed);
  auto g = out.flat();
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) += rng.normal_complex(sigma);
  return out;
}

}  // namespace mrf
