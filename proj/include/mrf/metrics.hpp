#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mrf/errors.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Mean over masked voxels of |estimate - truth| / truth; the background is
/// excluded by the mask.
inline double relative_error(const RVec& estimate, const RVec& truth,
                             const std::vector<std::uint8_t>& mask) {
  if (estimate.size() != truth.size() ||
      static_cast<std::size_t>(truth.size()) != mask.size())
    throw DimensionError("relative_error: size mismatch");
  double acc = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    if (!(truth(i) > 0.0)) throw InvalidArgument("relative_error: zero truth inside mask");
    acc += std::abs(estimate(i) - truth(i)) / truth(i);
    ++n;
  }
  if (n == 0) throw InvalidArgument("relative_error: empty mask");
  return acc / static_cast<double>(n);
}

struct RoiStats {
  double mean = 0.0;
  double std = 0.0;             // sample std, n-1 denominator
  double normalized_std = 0.0;  // std / mean
};

inline RoiStats roi_stats(const RVec& map, const std::vector<std::uint8_t>& roi) {
  if (static_cast<std::size_t>(map.size()) != roi.size())
    throw DimensionError("roi_stats: size mismatch");
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < map.size(); ++i)
    if (roi[static_cast<std::size_t>(i)]) {
      sum += map(i);
      ++n;
    }
  if (n == 0) throw InvalidArgument("roi_stats: empty ROI");
  RoiStats st;
  st.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (Eigen::Index i = 0; i < map.size(); ++i)
      if (roi[static_cast<std::size_t>(i)]) {
        const double d = map(i) - st.mean;
        ss += d * d;
      }
    st.std = std::sqrt(ss / static_cast<double>(n - 1));
  }
  st.normalized_std = (st.mean != 0.0) ? st.std / st.mean : 0.0;
  return st;
}

}  // namespace mrf
