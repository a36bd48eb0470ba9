#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mrf/container.hpp"
#include "mrf/geometry.hpp"
#include "mrf/rng.hpp"
#include "mrf/types.hpp"

namespace mrf {

// ---------------------------------------------------------------------------
// Cartesian masks
// ---------------------------------------------------------------------------

/// Per-time-point variable-density random mask over the Cartesian k-space
/// grid. Every time point keeps exactly S locations including an always-kept
/// fully sampled center block; masks differ across time points.
struct CartesianScheme {
  int nx = 0, ny = 0, L = 0, S = 0;
  double R = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::int32_t>> keep;  // per t, sorted raw-FFT linear indices
};

namespace detail {

inline int signed_freq(int u, int n) { return (u <= n / 2) ? u : u - n; }

}  // namespace detail

inline CartesianScheme make_cartesian_scheme(const Geometry& geom, double R, std::uint64_t seed) {
  if (R < 1.0) throw InvalidArgument("make_cartesian_scheme: R must be >= 1");
  CartesianScheme sch;
  sch.nx = geom.nx;
  sch.ny = geom.ny;
  sch.L = geom.L;
  sch.R = R;
  sch.seed = seed;
  sch.S = static_cast<int>(std::ceil(static_cast<double>(geom.N) / R));
  sch.keep.resize(geom.L);

  const int cb = (geom.nx + 15) / 16;  // center block side
  std::vector<std::int32_t> center;
  std::vector<std::int32_t> rest;
  std::vector<double> density;
  for (int u = 0; u < geom.nx; ++u) {
    for (int v = 0; v < geom.ny; ++v) {
      const int fu = detail::signed_freq(u, geom.nx);
      const int fv = detail::signed_freq(v, geom.ny);
      const auto idx = static_cast<std::int32_t>(u * geom.ny + v);
      if (fu >= -(cb / 2) && fu < cb - cb / 2 && fv >= -(cb / 2) && fv < cb - cb / 2) {
        center.push_back(idx);
      } else {
        const double ru = static_cast<double>(fu) / geom.nx;
        const double rv = static_cast<double>(fv) / geom.ny;
        const double rho = std::sqrt(ru * ru + rv * rv) / 0.5;
        rest.push_back(idx);
        density.push_back(1.0 / (1.0 + std::pow(rho / 0.35, 3.0)));
      }
    }
  }

  Rng rng(seed);
  const std::size_t want =
      static_cast<std::size_t>(std::max<long>(0, sch.S - static_cast<long>(center.size())));
  for (int t = 0; t < geom.L; ++t) {
    auto& kept = sch.keep[t];
    if (want == 0) {
      kept.assign(center.begin(), center.begin() + sch.S);
    } else {
      // Weighted sampling without replacement via exponential keys.
      std::vector<std::pair<double, std::int32_t>> keys(rest.size());
      for (std::size_t i = 0; i < rest.size(); ++i) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        keys[i] = {-std::log(u) / density[i], rest[i]};
      }
      std::nth_element(keys.begin(), keys.begin() + static_cast<long>(want) - 1, keys.end());
      kept = center;
      for (std::size_t i = 0; i < want; ++i) kept.push_back(keys[i].second);
    }
    std::sort(kept.begin(), kept.end());
  }
  return sch;
}

// ---------------------------------------------------------------------------
// Gridded spirals
// ---------------------------------------------------------------------------

/// Single-shot variable-density spiral per TR, rotated 82.5 degrees from TR to
/// TR with an extra 1.5 degrees at every 48-interleave boundary. The pitch law
/// is linear in radius, interleaves/2 same-shot cell spacing at the center and
/// interleaves at the Nyquist edge. Sampling off the Cartesian grid goes
/// through a Kaiser-Bessel gridder (width 4, oversampling 1.5); sqrt of the
/// radial density compensation is folded into both forward and adjoint so the
/// pair stays exactly adjoint.
struct SpiralScheme {
  int nx = 0, ny = 0, L = 0, S = 0;
  int interleaves = 48;
  double rotation_deg = 82.5;
  std::vector<double> base_kx, base_ky;  // cycles/pixel, un-rotated shot
  std::vector<double> sqrt_dcf;

  // Gridder parameters.
  double os = 1.5;
  int kernel_width = 4;
  double beta = 0.0;
  int ng = 0;

  double rotation_rad(int t) const {
    const double extra = 1.5 * (t / interleaves);
    return deg2rad(rotation_deg * t + extra);
  }
};

inline SpiralScheme make_spiral_scheme(const Geometry& geom, int interleaves = 48,
                                       double rotation_deg = 82.5) {
  if (geom.nx != geom.ny) throw InvalidArgument("make_spiral_scheme: geometry must be square");
  SpiralScheme sch;
  sch.nx = geom.nx;
  sch.ny = geom.ny;
  sch.L = geom.L;
  sch.interleaves = interleaves;
  sch.rotation_deg = rotation_deg;
  sch.ng = static_cast<int>(std::lround(sch.os * geom.nx));
  if (sch.ng % 2) ++sch.ng;
  const double w = sch.kernel_width;
  sch.beta = kPi * std::sqrt(w * w / (sch.os * sch.os) * (sch.os - 0.5) * (sch.os - 0.5) - 0.8);

  const double n = geom.nx;
  const double u_in = interleaves / 2.0;
  const double u_out = interleaves;
  auto pitch = [&](double r) { return u_in + (u_out - u_in) * (r / 0.5); };

  // Integrate the radial ODE on a fine grid, tracking arc length.
  const int fine = 8000;
  const double dr = 0.5 / fine;
  std::vector<double> rs(fine + 1), thetas(fine + 1), arcs(fine + 1);
  double theta = 0.0, arc = 0.0;
  for (int i = 0; i <= fine; ++i) {
    const double r = i * dr;
    rs[i] = r;
    thetas[i] = theta;
    arcs[i] = arc;
    const double dtheta = 2.0 * kPi * n / pitch(r) * dr;
    arc += std::sqrt(dr * dr + (r * dtheta) * (r * dtheta));
    theta += dtheta;
  }

  const double total_arc = arcs[fine];
  sch.S = static_cast<int>(std::ceil(total_arc / (0.5 / n)));
  sch.base_kx.resize(sch.S);
  sch.base_ky.resize(sch.S);
  sch.sqrt_dcf.resize(sch.S);
  const double ds = total_arc / sch.S;

  int j = 0;
  for (int i = 0; i < sch.S; ++i) {
    const double target = (i + 0.5) * ds;
    while (j + 1 < fine && arcs[j + 1] < target) ++j;
    const double f = (target - arcs[j]) / std::max(arcs[j + 1] - arcs[j], 1e-300);
    const double r = rs[j] + f * dr;
    const double th = thetas[j] + f * (thetas[j + 1] - thetas[j]);
    sch.base_kx[i] = r * std::cos(th);
    sch.base_ky[i] = r * std::sin(th);
    sch.sqrt_dcf[i] = std::sqrt(ds * pitch(r) * n);
  }
  return sch;
}

using SamplingScheme = std::variant<CartesianScheme, SpiralScheme>;

inline int scheme_samples(const SamplingScheme& s) {
  return std::visit([](const auto& v) { return v.S; }, s);
}

inline int scheme_length(const SamplingScheme& s) {
  return std::visit([](const auto& v) { return v.L; }, s);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void write_scheme(const std::string& path, const SamplingScheme& scheme) {
  if (std::holds_alternative<CartesianScheme>(scheme)) {
    const auto& c = std::get<CartesianScheme>(scheme);
    IntArray a({c.L, c.S});
    for (int t = 0; t < c.L; ++t)
      for (int s = 0; s < c.S; ++s) a.at(t, s) = c.keep[t][static_cast<std::size_t>(s)];
    nlohmann::json meta{{"kind", "scheme"}, {"variant", "cartesian"}, {"nx", c.nx}, {"ny", c.ny},
                        {"R", c.R},         {"seed", c.seed}};
    write_array(path, a, meta);
  } else {
    const auto& s = std::get<SpiralScheme>(scheme);
    RealArray a({s.S, 3});
    for (int i = 0; i < s.S; ++i) {
      a.at(i, 0) = s.base_kx[i];
      a.at(i, 1) = s.base_ky[i];
      a.at(i, 2) = s.sqrt_dcf[i];
    }
    nlohmann::json meta{{"kind", "scheme"},     {"variant", "spiral"},
                        {"nx", s.nx},           {"ny", s.ny},
                        {"L", s.L},             {"interleaves", s.interleaves},
                        {"rotation_deg", s.rotation_deg}};
    write_array(path, a, meta);
  }
}

inline SamplingScheme read_scheme(const std::string& path) {
  const ArrayFile f = read_array(path);
  const std::string variant = f.meta.value("variant", "");
  if (variant == "cartesian") {
    CartesianScheme c;
    c.nx = f.meta.value("nx", 0);
    c.ny = f.meta.value("ny", 0);
    c.L = static_cast<int>(f.shape[0]);
    c.S = static_cast<int>(f.shape[1]);
    c.R = f.meta.value("R", 1.0);
    c.seed = f.meta.value("seed", 0ull);
    c.keep.resize(c.L);
    for (int t = 0; t < c.L; ++t) {
      c.keep[t].resize(c.S);
      for (int s = 0; s < c.S; ++s)
        c.keep[t][static_cast<std::size_t>(s)] = static_cast<std::int32_t>(f.i64().at(t, s));
    }
    return c;
  }
  if (variant == "spiral") {
    SpiralScheme s;
    s.nx = f.meta.value("nx", 0);
    s.ny = f.meta.value("ny", 0);
    s.L = f.meta.value("L", 1);
    s.S = static_cast<int>(f.shape[0]);
    s.interleaves = f.meta.value("interleaves", 48);
    s.rotation_deg = f.meta.value("rotation_deg", 82.5);
    s.ng = static_cast<int>(std::lround(s.os * s.nx));
    if (s.ng % 2) ++s.ng;
    const double w = s.kernel_width;
    s.beta = kPi * std::sqrt(w * w / (s.os * s.os) * (s.os - 0.5) * (s.os - 0.5) - 0.8);
    s.base_kx.resize(s.S);
    s.base_ky.resize(s.S);
    s.sqrt_dcf.resize(s.S);
    for (int i = 0; i < s.S; ++i) {
      s.base_kx[i] = f.f64().at(i, 0);
      s.base_ky[i] = f.f64().at(i, 1);
      s.sqrt_dcf[i] = f.f64().at(i, 2);
    }
    return s;
  }
  throw FormatError("scheme: unknown variant '" + variant + "': " + path);
}

}  // namespace mrf
