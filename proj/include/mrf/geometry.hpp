#pragma once

#include <algorithm>
#include <string>

#include "mrf/errors.hpp"

namespace mrf {

/// Problem dimensions shared by every module. N is always nx*ny.
struct Geometry {
  int nx = 0;        // voxels along x
  int ny = 0;        // voxels along y
  long N = 0;        // total voxels
  int L = 0;         // sequence length (TRs)
  int S = 0;         // samples per readout
  int k = 10;        // compression rank
  int r = 50;        // dictionary rank used for autocalibration
  int C = 1;         // coil count

  static Geometry make(int nx, int ny, int L, int S, int k = 10, int r = 50, int C = 1) {
    Geometry g{nx, ny, static_cast<long>(nx) * ny, L, S, k, r, C};
    g.validate();
    return g;
  }

  void validate() const {
    auto positive = [](long v, const char* name) {
      if (v <= 0) throw InvalidArgument(std::string("geometry: ") + name + " must be positive");
    };
    positive(nx, "nx");
    positive(ny, "ny");
    positive(N, "N");
    positive(L, "L");
    positive(S, "S");
    positive(k, "k");
    positive(r, "r");
    positive(C, "C");
    if (N != static_cast<long>(nx) * ny) throw InvalidArgument("geometry: N != nx*ny");
    if (k > r) throw InvalidArgument("geometry: k must not exceed r");
    if (r > L) throw InvalidArgument("geometry: r must not exceed L");
  }
};

}  // namespace mrf
