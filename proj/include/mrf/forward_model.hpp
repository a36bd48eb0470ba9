#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "mrf/coil_maps.hpp"
#include "mrf/fft.hpp"
#include "mrf/geometry.hpp"
#include "mrf/kspace.hpp"
#include "mrf/sampling.hpp"
#include "mrf/types.hpp"

// Observation operator G = M.F.S.C^H and its exact adjoint, computed in the
// compressed temporal domain: the k channel images are coil-weighted and
// Fourier-transformed once, and the basis rows mix channels into time points
// only at the sampling stage, so the FFT count stays at k per coil.

namespace mrf {

namespace detail {

inline double kb_i0(double x) {
  // Series for I0; converges quickly for the argument range the kernel uses.
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int m = 1; m < 64; ++m) {
    term *= q / (m * m);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

/// Kaiser-Bessel interpolation kernel tabulated over [0, width/2].
class KbKernelLut {
 public:
  KbKernelLut(double width, double beta) : half_(width / 2.0) {
    const double i0b = kb_i0(beta);
    table_.resize(kSize + 2);
    for (int i = 0; i <= kSize; ++i) {
      const double u = half_ * i / kSize;
      const double arg = 1.0 - (u / half_) * (u / half_);
      table_[i] = kb_i0(beta * std::sqrt(std::max(arg, 0.0))) / i0b;
    }
    table_[kSize + 1] = 0.0;
  }

  double operator()(double u) const {
    const double a = std::abs(u);
    if (a >= half_) return 0.0;
    const double pos = a / half_ * kSize;
    const int i = static_cast<int>(pos);
    const double f = pos - i;
    return table_[i] * (1.0 - f) + table_[i + 1] * f;
  }

 private:
  static constexpr int kSize = 4096;
  double half_;
  std::vector<double> table_;
};

}  // namespace detail

/// Everything needed to apply G and G^H. Immutable after construction and
/// shareable; apply calls are reentrant.
class ForwardContext {
 public:
  ForwardContext(Geometry geom, CoilMaps coils, SamplingScheme scheme, CMat basis,
                 std::string basis_id = {})
      : geom_(geom),
        coils_(std::move(coils)),
        scheme_(std::move(scheme)),
        basis_(std::move(basis)),
        basis_id_(std::move(basis_id)),
        fft_(geom.nx, geom.ny) {
    if (basis_.rows() != geom_.L)
      throw DimensionError("forward: basis row count must equal sequence length");
    if (coils_.maps.rows() != geom_.N) throw DimensionError("forward: coil map size mismatch");
    if (scheme_length(scheme_) != geom_.L) throw DimensionError("forward: scheme length mismatch");
    if (scheme_samples(scheme_) != geom_.S) throw DimensionError("forward: scheme S mismatch");
    if (const auto* sp = std::get_if<SpiralScheme>(&scheme_)) {
      kb_ = std::make_unique<detail::KbKernelLut>(sp->kernel_width, sp->beta);
      fft_os_ = std::make_unique<Fft2D>(sp->ng, sp->ng);
      deapod_ = make_deapod(*sp);
    }
  }

  const Geometry& geom() const { return geom_; }
  const CoilMaps& coils() const { return coils_; }
  const SamplingScheme& scheme() const { return scheme_; }
  const CMat& basis() const { return basis_; }
  const std::string& basis_id() const { return basis_id_; }
  int channels() const { return static_cast<int>(basis_.cols()); }

  KSpaceData forward(const CompressedImage& x) const {
    check_image(x);
    KSpaceData y = KSpaceData::zeros(geom_.C, geom_.L, geom_.S);
    if (std::holds_alternative<CartesianScheme>(scheme_))
      forward_cartesian(x.data, y);
    else
      forward_spiral(x.data, y);
    return y;
  }

  CompressedImage adjoint(const KSpaceData& y) const {
    if (y.C != geom_.C || y.L != geom_.L || y.S != geom_.S)
      throw DimensionError("adjoint: data dimension mismatch");
    CompressedImage x = CompressedImage::zeros(geom_.N, channels(), basis_id_);
    if (std::holds_alternative<CartesianScheme>(scheme_))
      adjoint_cartesian(y, x.data);
    else
      adjoint_spiral(y, x.data);
    return x;
  }

 private:
  void check_image(const CompressedImage& x) const {
    if (x.data.rows() != geom_.N || x.data.cols() != basis_.cols())
      throw DimensionError("forward: image dimension mismatch");
    if (!x.basis_id.empty() && !basis_id_.empty() && x.basis_id != basis_id_)
      throw DimensionError("forward: image was compressed with a different basis");
  }

  // --- Cartesian ---

  void forward_cartesian(const CMat& xc, KSpaceData& y) const {
    const auto& sch = std::get<CartesianScheme>(scheme_);
    const int k = channels();
    CMat ksp(geom_.N, k);
    std::vector<Cplx> buf(static_cast<std::size_t>(geom_.N));
    for (int c = 0; c < geom_.C; ++c) {
      for (int j = 0; j < k; ++j) {
        for (long i = 0; i < geom_.N; ++i) buf[i] = coils_.maps(i, c) * xc(i, j);
        fft_.forward(buf.data());
        for (long i = 0; i < geom_.N; ++i) ksp(i, j) = buf[i];
      }
      for (int t = 0; t < geom_.L; ++t) {
        Cplx* out = y.row(c, t);
        for (int s = 0; s < geom_.S; ++s) {
          const long idx = sch.keep[t][static_cast<std::size_t>(s)];
          Cplx acc(0, 0);
          for (int j = 0; j < k; ++j) acc += std::conj(basis_(t, j)) * ksp(idx, j);
          out[s] = acc;
        }
      }
    }
  }

  void adjoint_cartesian(const KSpaceData& y, CMat& xc) const {
    const auto& sch = std::get<CartesianScheme>(scheme_);
    const int k = channels();
    CMat ksp(geom_.N, k);
    std::vector<Cplx> buf(static_cast<std::size_t>(geom_.N));
    for (int c = 0; c < geom_.C; ++c) {
      ksp.setZero();
      for (int t = 0; t < geom_.L; ++t) {
        const Cplx* in = y.row(c, t);
        for (int s = 0; s < geom_.S; ++s) {
          const long idx = sch.keep[t][static_cast<std::size_t>(s)];
          for (int j = 0; j < k; ++j) ksp(idx, j) += basis_(t, j) * in[s];
        }
      }
      for (int j = 0; j < k; ++j) {
        for (long i = 0; i < geom_.N; ++i) buf[i] = ksp(i, j);
        fft_.inverse(buf.data());
        for (long i = 0; i < geom_.N; ++i) xc(i, j) += std::conj(coils_.maps(i, c)) * buf[i];
      }
    }
  }

  // --- Gridded spiral ---

  std::vector<double> make_deapod(const SpiralScheme& sp) const {
    // Discrete image-domain response of the sampled kernel; integer-frequency
    // samples of the gridder are exact under this calibration.
    const int half_taps = sp.kernel_width / 2;
    std::vector<double> c(static_cast<std::size_t>(sp.ng));
    for (int x = 0; x < sp.ng; ++x) {
      const int xs = (x <= sp.ng / 2) ? x : x - sp.ng;
      double v = (*kb_)(0.0);
      for (int m = 1; m <= half_taps; ++m)
        v += 2.0 * (*kb_)(static_cast<double>(m)) * std::cos(2.0 * kPi * m * xs / sp.ng);
      c[static_cast<std::size_t>(x)] = v;
    }
    return c;
  }

  void forward_spiral(const CMat& xc, KSpaceData& y) const {
    const auto& sp = std::get<SpiralScheme>(scheme_);
    const int k = channels();
    const int ng = sp.ng;
    const long ng2 = static_cast<long>(ng) * ng;
    CMat ksp(ng2, k);
    std::vector<Cplx> buf(static_cast<std::size_t>(ng2));
    std::vector<Cplx> mixed(static_cast<std::size_t>(ng2));

    for (int c = 0; c < geom_.C; ++c) {
      for (int j = 0; j < k; ++j) {
        std::fill(buf.begin(), buf.end(), Cplx(0, 0));
        pack_padded(xc, c, j, buf);
        fft_os_->forward(buf.data());
        for (long i = 0; i < ng2; ++i) ksp(i, j) = buf[i];
      }
      for (int t = 0; t < geom_.L; ++t) {
        for (long i = 0; i < ng2; ++i) {
          Cplx acc(0, 0);
          for (int j = 0; j < k; ++j) acc += std::conj(basis_(t, j)) * ksp(i, j);
          mixed[static_cast<std::size_t>(i)] = acc;
        }
        interp_shot(sp, t, mixed, y.row(c, t));
      }
    }
  }

  void adjoint_spiral(const KSpaceData& y, CMat& xc) const {
    const auto& sp = std::get<SpiralScheme>(scheme_);
    const int k = channels();
    const int ng = sp.ng;
    const long ng2 = static_cast<long>(ng) * ng;
    CMat ksp = CMat::Zero(ng2, k);
    std::vector<Cplx> buf(static_cast<std::size_t>(ng2));
    std::vector<Cplx> spreadg(static_cast<std::size_t>(ng2));

    for (int c = 0; c < geom_.C; ++c) {
      if (c > 0) ksp.setZero();
      for (int t = 0; t < geom_.L; ++t) {
        std::fill(spreadg.begin(), spreadg.end(), Cplx(0, 0));
        spread_shot(sp, t, y.row(c, t), spreadg);
        for (long i = 0; i < ng2; ++i) {
          const Cplx v = spreadg[static_cast<std::size_t>(i)];
          if (v != Cplx(0, 0))
            for (int j = 0; j < k; ++j) ksp(i, j) += basis_(t, j) * v;
        }
      }
      for (int j = 0; j < k; ++j) {
        for (long i = 0; i < ng2; ++i) buf[i] = ksp(i, j);
        fft_os_->inverse(buf.data());
        unpack_padded(buf, c, j, xc);
      }
    }
  }

  void pack_padded(const CMat& xc, int c, int j, std::vector<Cplx>& buf) const {
    const auto& sp = std::get<SpiralScheme>(scheme_);
    const int ng = sp.ng;
    for (int ix = 0; ix < geom_.nx; ++ix) {
      const int gx = ((ix - geom_.nx / 2) % ng + ng) % ng;
      for (int iy = 0; iy < geom_.ny; ++iy) {
        const int gy = ((iy - geom_.ny / 2) % ng + ng) % ng;
        const long i = static_cast<long>(ix) * geom_.ny + iy;
        buf[static_cast<std::size_t>(gx) * ng + gy] =
            coils_.maps(i, c) * xc(i, j) / (deapod_[gx] * deapod_[gy]);
      }
    }
  }

  void unpack_padded(const std::vector<Cplx>& buf, int c, int j, CMat& xc) const {
    const auto& sp = std::get<SpiralScheme>(scheme_);
    const int ng = sp.ng;
    for (int ix = 0; ix < geom_.nx; ++ix) {
      const int gx = ((ix - geom_.nx / 2) % ng + ng) % ng;
      for (int iy = 0; iy < geom_.ny; ++iy) {
        const int gy = ((iy - geom_.ny / 2) % ng + ng) % ng;
        const long i = static_cast<long>(ix) * geom_.ny + iy;
        xc(i, j) += std::conj(coils_.maps(i, c)) *
                    (buf[static_cast<std::size_t>(gx) * ng + gy] / (deapod_[gx] * deapod_[gy]));
      }
    }
  }

  // Rotated coordinates, phase to the raw origin-at-0 DFT convention, and
  // sqrt-density weighting for one shot.
  void sample_geometry(const SpiralScheme& sp, int t, int s, double& pu, double& pv,
                       Cplx& weight) const {
    const double rot = sp.rotation_rad(t);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const double kx = sp.base_kx[s] * cr - sp.base_ky[s] * sr;
    const double ky = sp.base_kx[s] * sr + sp.base_ky[s] * cr;
    pu = kx * sp.ng;
    pv = ky * sp.ng;
    const double ph = -2.0 * kPi * (kx + ky) * (geom_.nx / 2);
    weight = sp.sqrt_dcf[s] * sp.os * Cplx(std::cos(ph), std::sin(ph));
  }

  void interp_shot(const SpiralScheme& sp, int t, const std::vector<Cplx>& grid, Cplx* out) const {
    const int ng = sp.ng;
    const double half = sp.kernel_width / 2.0;
    for (int s = 0; s < geom_.S; ++s) {
      double pu, pv;
      Cplx w;
      sample_geometry(sp, t, s, pu, pv, w);
      const int u0 = static_cast<int>(std::ceil(pu - half));
      const int v0 = static_cast<int>(std::ceil(pv - half));
      Cplx acc(0, 0);
      for (int u = u0; u <= static_cast<int>(std::floor(pu + half)); ++u) {
        const double wu = (*kb_)(u - pu);
        const int uw = ((u % ng) + ng) % ng;
        for (int v = v0; v <= static_cast<int>(std::floor(pv + half)); ++v) {
          const double wv = (*kb_)(v - pv);
          const int vw = ((v % ng) + ng) % ng;
          acc += wu * wv * grid[static_cast<std::size_t>(uw) * ng + vw];
        }
      }
      out[s] = acc * w;
    }
  }

  void spread_shot(const SpiralScheme& sp, int t, const Cplx* in, std::vector<Cplx>& grid) const {
    const int ng = sp.ng;
    const double half = sp.kernel_width / 2.0;
    for (int s = 0; s < geom_.S; ++s) {
      double pu, pv;
      Cplx w;
      sample_geometry(sp, t, s, pu, pv, w);
      const Cplx val = in[s] * std::conj(w);
      const int u0 = static_cast<int>(std::ceil(pu - half));
      const int v0 = static_cast<int>(std::ceil(pv - half));
      for (int u = u0; u <= static_cast<int>(std::floor(pu + half)); ++u) {
        const double wu = (*kb_)(u - pu);
        const int uw = ((u % ng) + ng) % ng;
        for (int v = v0; v <= static_cast<int>(std::floor(pv + half)); ++v) {
          const double wv = (*kb_)(v - pv);
          const int vw = ((v % ng) + ng) % ng;
          grid[static_cast<std::size_t>(uw) * ng + vw] += wu * wv * val;
        }
      }
    }
  }

  Geometry geom_;
  CoilMaps coils_;
  SamplingScheme scheme_;
  CMat basis_;
  std::string basis_id_;
  Fft2D fft_;
  std::unique_ptr<Fft2D> fft_os_;
  std::unique_ptr<detail::KbKernelLut> kb_;
  std::vector<double> deapod_;
};

/// Largest eigenvalue of G^H G by power iteration; a diagnostic for operator
/// normalization (should sit near 1 for center-sampled Cartesian schemes).
inline double estimate_spectral_radius(const ForwardContext& ctx, int iters = 50,
                                       std::uint64_t seed = 0) {
  Rng rng(seed);
  CompressedImage v = CompressedImage::zeros(ctx.geom().N, ctx.channels(), ctx.basis_id());
  for (long i = 0; i < v.data.rows(); ++i)
    for (int j = 0; j < v.data.cols(); ++j) v.data(i, j) = rng.normal_complex(1.0);
  double rho = 0.0;
  for (int it = 0; it < iters; ++it) {
    v.data /= v.data.norm();
    CompressedImage w = ctx.adjoint(ctx.forward(v));
    rho = std::abs((v.data.conjugate().cwiseProduct(w.data)).sum().real());
    v = std::move(w);
  }
  return rho;
}

}  // namespace mrf
