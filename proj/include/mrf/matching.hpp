#pragma once

#include <algorithm>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mrf/dictionary.hpp"
#include "mrf/errors.hpp"
#include "mrf/kspace.hpp"
#include "mrf/types.hpp"

// Bloch manifold projection: exhaustive fingerprint matching in the compressed
// domain, proton-density estimation, and contrast re-synthesis.

namespace mrf {

/// Compressed dictionary for matching. `dc` holds the per-atom signals in the
/// domain of the images being matched; `norms` holds the atom norms that feed
/// the score and proton-density denominators. With autocalibration in force
/// `dc` is D_c * V_ac while `norms` stays at rank r (Eq. 4's literal form).
struct CompressedDictionary {
  CMatRow dc;   // num_atoms x k_eff
  RVec norms;   // strictly positive
  std::string basis_id;

  Eigen::Index num_atoms() const { return dc.rows(); }
};

inline CompressedDictionary compress_dictionary(const Dictionary& dict, const CMat& basis,
                                                std::string basis_id = {}) {
  if (basis.rows() != dict.D.cols())
    throw DimensionError("compress_dictionary: basis row count != sequence length");
  CompressedDictionary cd;
  cd.dc = dict.D * basis;
  cd.basis_id = std::move(basis_id);
  cd.norms.resize(cd.dc.rows());
  for (Eigen::Index a = 0; a < cd.dc.rows(); ++a) {
    cd.norms(a) = cd.dc.row(a).norm();
    if (!(cd.norms(a) > 0.0))
      throw NumericalError("compress_dictionary: zero-norm compressed atom " + std::to_string(a));
  }
  return cd;
}

/// Second compression stage for the autocalibrated variants: signals move to
/// D_c * V_ac but the norms are kept at rank r.
inline CompressedDictionary compress_dictionary_autocal(const Dictionary& dict,
                                                        const AutocalBasis& basis,
                                                        std::string basis_id = {}) {
  CompressedDictionary rank_r = compress_dictionary(dict, basis.V_d_r);
  CompressedDictionary cd;
  cd.dc = rank_r.dc * basis.V_ac;
  cd.norms = rank_r.norms;
  cd.basis_id = std::move(basis_id);
  return cd;
}

struct MatchResult {
  IVec atom;       // k-hat per voxel
  RVec rho;        // proton density, >= 0
  CMat resynth;    // rho_i * dc(k-hat_i, :)
};

/// Exhaustive search over atoms, Eq. (2) score and Eq. (3) proton density.
/// Ties break toward the smallest atom index; all-zero voxels land on atom 0
/// with rho = 0.
inline MatchResult match(const CMat& x, const CompressedDictionary& dict) {
  const Eigen::Index A = dict.num_atoms();
  if (A == 0) throw InvalidArgument("match: empty dictionary");
  if (x.cols() != dict.dc.cols()) throw DimensionError("match: rank mismatch");

  const Eigen::Index N = x.rows();
  const int k = static_cast<int>(x.cols());
  MatchResult res;
  res.atom.resize(N);
  res.rho.resize(N);
  res.resynth.resize(N, k);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (Eigen::Index i = 0; i < N; ++i) {
    thread_local std::vector<Cplx> xi_buf;
    xi_buf.resize(static_cast<std::size_t>(k));
    Cplx* xi = xi_buf.data();
    for (int j = 0; j < k; ++j) xi[j] = x(i, j);

    Eigen::Index best = 0;
    double best_score = -1.0;
    Cplx best_dot(0, 0);
    for (Eigen::Index a = 0; a < A; ++a) {
      const Cplx* row = dict.dc.data() + a * k;
      Cplx dot(0, 0);
      for (int j = 0; j < k; ++j) dot += std::conj(row[j]) * xi[j];
      const double score = std::abs(dot) / dict.norms(a);
      if (score > best_score) {
        best_score = score;
        best = a;
        best_dot = dot;
      }
    }
    const double denom = dict.norms(best) * dict.norms(best);
    const double rho = std::max(best_dot.real() / denom, 0.0);
    res.atom(i) = static_cast<int>(best);
    res.rho(i) = rho;
    for (int j = 0; j < k; ++j) res.resynth(i, j) = rho * dict.dc(best, j);
  }
  return res;
}

/// Autocalibrated matching, Eq. (4): the dictionary absorbs V_ac once instead
/// of decompressing the data each call.
inline MatchResult match_autocal(const CMat& x, const CompressedDictionary& dict_rank_r,
                                 const AutocalBasis& basis) {
  if (dict_rank_r.dc.cols() != basis.V_ac.rows())
    throw DimensionError("match_autocal: dictionary rank does not match V_ac");
  if (x.cols() != basis.V_ac.cols())
    throw DimensionError("match_autocal: image rank does not match V_ac");
  CompressedDictionary eff;
  eff.dc = dict_rank_r.dc * basis.V_ac;
  eff.norms = dict_rank_r.norms;
  eff.basis_id = dict_rank_r.basis_id;
  return match(x, eff);
}

/// Per-voxel tissue parameters: LUT readout plus the proton density. Voxels
/// with zero proton density report T1 = T2 = 0.
struct TissueMaps {
  RVec t1, t2, pd;
  IVec atom;
};

inline TissueMaps lut_lookup(const MatchResult& res, const Dictionary& dict) {
  const Eigen::Index N = res.atom.size();
  TissueMaps maps;
  maps.t1.resize(N);
  maps.t2.resize(N);
  maps.pd = res.rho;
  maps.atom = res.atom;
  for (Eigen::Index i = 0; i < N; ++i) {
    if (res.rho(i) > 0.0) {
      const auto [t1, t2] = dict.lut(res.atom(i));
      maps.t1(i) = t1;
      maps.t2(i) = t2;
    } else {
      maps.t1(i) = 0.0;
      maps.t2(i) = 0.0;
    }
  }
  return maps;
}

}  // namespace mrf
