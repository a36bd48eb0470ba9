#pragma once

#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "mrf/errors.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Unitary 2-D FFT of a fixed size, row-major layout, backed by FFTW with
/// FFTW_ESTIMATE plans so repeated runs are bit-identical. Execution copies
/// through plan-owned buffers under a lock; transforms at desk scale are far
/// from the bottleneck.
class Fft2D {
 public:
  Fft2D(int rows, int cols) : rows_(rows), cols_(cols), n_(static_cast<std::size_t>(rows) * cols) {
    buf_ = fftw_alloc_complex(n_);
    if (!buf_) throw NumericalError("fft: allocation failed");
    std::lock_guard<std::mutex> lk(planner_mutex());
    fwd_ = fftw_plan_dft_2d(rows, cols, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(rows, cols, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw NumericalError("fft: planning failed");
  }

  ~Fft2D() {
    std::lock_guard<std::mutex> lk(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(buf_);
  }

  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void forward(Cplx* inout) const { run(fwd_, inout); }
  void inverse(Cplx* inout) const { run(inv_, inout); }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  void run(fftw_plan plan, Cplx* inout) const {
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    std::lock_guard<std::mutex> lk(exec_mutex_);
    std::memcpy(buf_, inout, n_ * sizeof(Cplx));
    fftw_execute(plan);
    auto* out = reinterpret_cast<Cplx*>(buf_);
    for (std::size_t i = 0; i < n_; ++i) inout[i] = out[i] * scale;
  }

  int rows_, cols_;
  std::size_t n_;
  fftw_complex* buf_;
  fftw_plan fwd_{};
  fftw_plan inv_{};
  mutable std::mutex exec_mutex_;
};

}  // namespace mrf
