#pragma once

#include <cmath>
#include <cstdint>

#include "mrf/geometry.hpp"
#include "mrf/rng.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Synthetic receive sensitivities: one smooth complex Gaussian lobe per coil,
/// normalized so the per-voxel sum of squared magnitudes is exactly one.
struct CoilMaps {
  int C = 1;
  int nx = 0, ny = 0;
  CMat maps;  // N x C

  CVec coil(int c) const { return maps.col(c); }
};

inline CoilMaps make_coil_maps(const Geometry& geom, int C, std::uint64_t seed) {
  if (C < 1) throw InvalidArgument("make_coil_maps: C must be >= 1");
  CoilMaps cm;
  cm.C = C;
  cm.nx = geom.nx;
  cm.ny = geom.ny;
  cm.maps.resize(geom.N, C);

  if (C == 1) {
    cm.maps.setOnes();
    return cm;
  }

  Rng rng(seed);
  for (int c = 0; c < C; ++c) {
    // Lobe center on a ring around the FOV with seeded jitter.
    const double angle = 2.0 * kPi * c / C + rng.uniform(-0.2, 0.2);
    const double cx = 0.5 + 0.45 * std::cos(angle);
    const double cy = 0.5 + 0.45 * std::sin(angle);
    const double sigma = rng.uniform(0.45, 0.65);
    const double phase0 = rng.uniform(0.0, 2.0 * kPi);
    const double gx = rng.uniform(-1.5, 1.5);
    const double gy = rng.uniform(-1.5, 1.5);
    for (int ix = 0; ix < geom.nx; ++ix) {
      for (int iy = 0; iy < geom.ny; ++iy) {
        const double x = (ix + 0.5) / geom.nx;
        const double y = (iy + 0.5) / geom.ny;
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
        const double ph = phase0 + gx * x + gy * y;
        cm.maps(static_cast<long>(ix) * geom.ny + iy, c) =
            mag * Cplx(std::cos(ph), std::sin(ph));
      }
    }
  }

  for (long i = 0; i < geom.N; ++i) {
    const double sos = std::sqrt(cm.maps.row(i).squaredNorm());
    cm.maps.row(i) /= sos;
  }
  return cm;
}

}  // namespace mrf
