#pragma once

#include <string>

#include <json.hpp>

#include "mrf/container.hpp"
#include "mrf/types.hpp"

// Eigen matrices persist as 2-D containers; storage order converts to the
// container's row-major layout on the way through.

namespace mrf {

inline void write_matrix(const std::string& path, const CMat& m, const nlohmann::json& meta = {}) {
  ComplexArray a({m.rows(), m.cols()});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.at(i, j) = m(i, j);
  write_array(path, a, meta);
}

inline void write_matrix(const std::string& path, const RMat& m, const nlohmann::json& meta = {}) {
  RealArray a({m.rows(), m.cols()});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.at(i, j) = m(i, j);
  write_array(path, a, meta);
}

inline void write_vector(const std::string& path, const RVec& v, const nlohmann::json& meta = {}) {
  RealArray a({v.size()});
  for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = v(i);
  write_array(path, a, meta);
}

inline void write_vector(const std::string& path, const CVec& v, const nlohmann::json& meta = {}) {
  ComplexArray a({v.size()});
  for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = v(i);
  write_array(path, a, meta);
}

inline CMat as_cmatrix(const ArrayFile& f) {
  if (f.dtype != "c128" || f.shape.size() != 2)
    throw FormatError("matrix_io: expected 2-D c128 container");
  const auto& a = f.c128();
  CMat m(f.shape[0], f.shape[1]);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = a.at(i, j);
  return m;
}

inline RMat as_rmatrix(const ArrayFile& f) {
  if (f.dtype != "f64" || f.shape.size() != 2)
    throw FormatError("matrix_io: expected 2-D f64 container");
  const auto& a = f.f64();
  RMat m(f.shape[0], f.shape[1]);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = a.at(i, j);
  return m;
}

inline RVec as_rvector(const ArrayFile& f) {
  if (f.dtype != "f64") throw FormatError("matrix_io: expected f64 container");
  const auto& a = f.f64();
  RVec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i];
  return v;
}

}  // namespace mrf
