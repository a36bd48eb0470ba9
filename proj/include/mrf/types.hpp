#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace mrf {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using IVec = Eigen::VectorXi;

// Dictionaries are scanned row by row in the matching hot loop.
using CMatRow = Eigen::Matrix<Cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }

}  // namespace mrf
