#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <Eigen/SVD>
#include <json.hpp>

#include "mrf/epg.hpp"
#include "mrf/errors.hpp"
#include "mrf/matrix_io.hpp"
#include "mrf/schedule.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// (T1, T2) sample points of the Bloch manifold; combinations with T1 < T2 are
/// excluded. Atom order is T1-major ascending, T2 ascending within.
struct TissueGrid {
  std::vector<double> t1_values;
  std::vector<double> t2_values;
  std::vector<std::pair<double, double>> atoms;

  static TissueGrid from_values(std::vector<double> t1s, std::vector<double> t2s) {
    TissueGrid g;
    g.t1_values = std::move(t1s);
    g.t2_values = std::move(t2s);
    std::sort(g.t1_values.begin(), g.t1_values.end());
    std::sort(g.t2_values.begin(), g.t2_values.end());
    for (double t1 : g.t1_values)
      for (double t2 : g.t2_values)
        if (t1 >= t2) g.atoms.emplace_back(t1, t2);
    if (g.atoms.empty()) throw InvalidArgument("tissue grid: no atoms after T1 >= T2 exclusion");
    return g;
  }

  std::size_t size() const { return atoms.size(); }

  std::uint64_t hash() const {
    // FNV-1a over the atom doubles; stable id recorded in container metadata.
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](double v) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
      }
    };
    for (const auto& [t1, t2] : atoms) {
      mix(t1);
      mix(t2);
    }
    return h;
  }
};

inline std::vector<double> stepped_values(
    const std::vector<std::tuple<double, double, double>>& ranges) {
  std::vector<double> out;
  for (const auto& [lo, hi, step] : ranges)
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  return out;
}

/// The 5366-atom T1/T2 grid used for all default experiments.
inline TissueGrid default_tissue_grid() {
  auto t1 = stepped_values({{10, 100, 10}, {120, 1000, 20}, {1040, 2000, 40}, {2050, 4500, 100}});
  auto t2 = stepped_values(
      {{2, 10, 2}, {15, 100, 5}, {110, 300, 10}, {350, 800, 50}, {900, 1600, 100}, {1800, 3000, 200}});
  return TissueGrid::from_values(std::move(t1), std::move(t2));
}

/// Fingerprint dictionary: one raw (unnormalized) EPG response per atom.
struct Dictionary {
  TissueGrid grid;
  CMat D;          // num_atoms x L
  RVec norms;      // per-atom L2 norm of the raw fingerprint
  int L = 0;
  std::uint64_t schedule_seed = 0;

  std::pair<double, double> lut(Eigen::Index atom) const {
    if (atom < 0 || atom >= static_cast<Eigen::Index>(grid.atoms.size()))
      throw InvalidArgument("dictionary: atom index out of range");
    return grid.atoms[static_cast<std::size_t>(atom)];
  }

  Eigen::Index num_atoms() const { return D.rows(); }
};

inline Dictionary build_dictionary(const SequenceSchedule& schedule, const TissueGrid& grid) {
  if (grid.atoms.empty()) throw InvalidArgument("build_dictionary: empty grid");
  Dictionary dict;
  dict.grid = grid;
  dict.L = schedule.L;
  dict.schedule_seed = schedule.seed;
  const Eigen::Index A = static_cast<Eigen::Index>(grid.atoms.size());
  dict.D.resize(A, schedule.L);
  dict.norms.resize(A);

  std::string failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (Eigen::Index a = 0; a < A; ++a) {
    const auto [t1, t2] = grid.atoms[static_cast<std::size_t>(a)];
    try {
      const auto fp = epg_fingerprint(schedule, t1, t2);
      for (int t = 0; t < schedule.L; ++t) dict.D(a, t) = fp[static_cast<std::size_t>(t)];
    } catch (const Error& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      failure = "atom " + std::to_string(a) + " (T1=" + std::to_string(t1) +
                ", T2=" + std::to_string(t2) + "): " + e.what();
    }
  }
  if (!failure.empty()) throw NumericalError("build_dictionary: " + failure);

  for (Eigen::Index a = 0; a < A; ++a) {
    dict.norms(a) = dict.D.row(a).norm();
    if (dict.norms(a) == 0.0)
      throw NumericalError("build_dictionary: all-zero fingerprint at atom " + std::to_string(a));
  }
  return dict;
}

/// Leading right singular vectors of the dictionary, columns phase-fixed so
/// the largest-magnitude entry of each is real-positive.
struct CompressionBasis {
  CMat V;                 // L x k
  RVec singular_values;   // all of them, descending
  int k = 0;
};

namespace detail {

inline void fix_column_phases(CMat& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      const double m = std::abs(V(i, j));
      if (m > best) {
        best = m;
        imax = i;
      }
    }
    if (best > 0.0) V.col(j) *= std::conj(V(imax, j)) / best;
  }
}

}  // namespace detail

inline CompressionBasis svd_compress(const Dictionary& dict, int k) {
  const Eigen::Index A = dict.num_atoms();
  const Eigen::Index L = dict.D.cols();
  if (k < 1 || k > std::min<Eigen::Index>(A, L))
    throw InvalidArgument("svd_compress: rank out of range");

  Eigen::BDCSVD<CMat> svd(dict.D, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svd_compress: SVD did not converge");

  CompressionBasis basis;
  basis.k = k;
  basis.singular_values = svd.singularValues();
  basis.V = svd.matrixV().leftCols(k);
  detail::fix_column_phases(basis.V);
  return basis;
}

/// Data-driven second-stage basis from a compressed autocalibration image.
struct AutocalBasis {
  CMat V_d_r;   // L x r dictionary basis
  CMat V_ac;    // r x k
  RVec singular_values;
  int k = 0;

  CMat composed() const { return V_d_r * V_ac; }
};

inline AutocalBasis autocal_basis(const CMat& x_ac, const CMat& v_d_r, int k) {
  const Eigen::Index r = x_ac.cols();
  if (v_d_r.cols() != r) throw DimensionError("autocal_basis: V_d_r rank does not match X_ac");
  if (k < 1 || k > r) throw InvalidArgument("autocal_basis: k must satisfy 1 <= k <= r");

  Eigen::BDCSVD<CMat> svd(x_ac, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("autocal_basis: SVD did not converge");

  AutocalBasis basis;
  basis.k = k;
  basis.V_d_r = v_d_r;
  basis.singular_values = svd.singularValues();
  basis.V_ac = svd.matrixV().leftCols(k);
  detail::fix_column_phases(basis.V_ac);
  return basis;
}

// Persistence: a dictionary directory holds fingerprints, LUT, and basis.

// basis.mrfa carries exactly the k default-rank columns; basis_r.mrfa keeps
// the wider pre-rank basis the autocalibration variants slice from.
inline void save_dictionary(const std::string& dir, const Dictionary& dict,
                            const CompressionBasis& basis, int k) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  if (basis.V.cols() < k) throw DimensionError("save_dictionary: basis narrower than k");
  nlohmann::json meta{{"kind", "dictionary"},
                      {"L", dict.L},
                      {"k", k},
                      {"seed", dict.schedule_seed},
                      {"grid_hash", dict.grid.hash()},
                      {"atoms", dict.num_atoms()}};
  write_matrix(dir + "/fingerprints.mrfa", dict.D, meta);

  RealArray lut({dict.num_atoms(), 2});
  for (Eigen::Index a = 0; a < dict.num_atoms(); ++a) {
    const auto [t1, t2] = dict.lut(a);
    lut.at(a, 0) = t1;
    lut.at(a, 1) = t2;
  }
  meta["kind"] = "lut";
  write_array(dir + "/lut.mrfa", lut, meta);

  meta["kind"] = "basis";
  write_matrix(dir + "/basis.mrfa", CMat(basis.V.leftCols(k)), meta);
  meta["kind"] = "basis_r";
  write_matrix(dir + "/basis_r.mrfa", basis.V, meta);
  meta["kind"] = "singular_values";
  write_vector(dir + "/singular_values.mrfa", basis.singular_values, meta);
}

struct LoadedDictionary {
  Dictionary dict;
  CompressionBasis basis;
  int k = 0;
};

inline LoadedDictionary load_dictionary(const std::string& dir) {
  LoadedDictionary out;
  const ArrayFile fp = read_array(dir + "/fingerprints.mrfa");
  const ArrayFile lut = read_array(dir + "/lut.mrfa");
  out.dict.D = as_cmatrix(fp);
  out.dict.L = static_cast<int>(out.dict.D.cols());
  out.dict.schedule_seed = fp.meta.value("seed", 0ull);
  out.k = fp.meta.value("k", 10);

  const auto& lv = lut.f64();
  std::vector<double> t1s, t2s;
  for (std::int64_t a = 0; a < lut.shape[0]; ++a) {
    out.dict.grid.atoms.emplace_back(lv.at(a, 0), lv.at(a, 1));
    t1s.push_back(lv.at(a, 0));
    t2s.push_back(lv.at(a, 1));
  }
  out.dict.norms.resize(out.dict.D.rows());
  for (Eigen::Index a = 0; a < out.dict.D.rows(); ++a) out.dict.norms(a) = out.dict.D.row(a).norm();

  const std::string wide = dir + "/basis_r.mrfa";
  out.basis.V = as_cmatrix(
      read_array(std::filesystem::exists(wide) ? wide : dir + "/basis.mrfa"));
  out.basis.k = static_cast<int>(out.basis.V.cols());
  out.basis.singular_values = as_rvector(read_array(dir + "/singular_values.mrfa"));
  return out;
}

}  // namespace mrf
