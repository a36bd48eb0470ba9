#pragma once

#include <Eigen/Dense>

#include "mrf/errors.hpp"
#include "mrf/nd_array.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Measured samples, one readout of S complex values per time point per coil.
struct KSpaceData {
  int C = 0, L = 0, S = 0;
  ComplexArray samples;  // shape {C, L, S}

  static KSpaceData zeros(int C, int L, int S) {
    KSpaceData y;
    y.C = C;
    y.L = L;
    y.S = S;
    y.samples = ComplexArray({C, L, S});
    return y;
  }

  Cplx* row(int c, int t) { return samples.data() + samples.index(c, t, 0); }
  const Cplx* row(int c, int t) const { return samples.data() + samples.index(c, t, 0); }

  Eigen::Map<CVec> flat() {
    return {samples.data(), static_cast<Eigen::Index>(samples.size())};
  }
  Eigen::Map<const CVec> flat() const {
    return {samples.data(), static_cast<Eigen::Index>(samples.size())};
  }

  double squared_norm() const { return flat().squaredNorm(); }

  void check_same_dims(const KSpaceData& other) const {
    if (C != other.C || L != other.L || S != other.S)
      throw DimensionError("kspace: dimension mismatch");
  }
};

/// The optimization variable: N voxels by k compressed temporal channels.
struct CompressedImage {
  CMat data;  // N x k
  std::string basis_id;

  static CompressedImage zeros(long N, int k, std::string id = {}) {
    CompressedImage x;
    x.data = CMat::Zero(N, k);
    x.basis_id = std::move(id);
    return x;
  }
};

}  // namespace mrf
