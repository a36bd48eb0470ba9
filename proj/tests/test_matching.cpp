#include <catch2/catch_amalgamated.hpp>

#include "mrf/dictionary.hpp"
#include "mrf/matching.hpp"
#include "mrf/rng.hpp"
#include "support/oracles.hpp"

using namespace mrf;

namespace {

// Random complex dictionary with unit-free rows; rank-A when A <= L.
Dictionary random_dictionary(int A, int L, std::uint64_t seed) {
  Rng rng(seed);
  Dictionary d;
  d.L = L;
  d.D.resize(A, L);
  for (Eigen::Index i = 0; i < d.D.size(); ++i) d.D.data()[i] = rng.normal_complex(1.0);
  d.norms.resize(A);
  for (int a = 0; a < A; ++a) {
    d.norms(a) = d.D.row(a).norm();
    d.grid.atoms.emplace_back(1000.0 + 10.0 * a, 100.0 + a);
  }
  return d;
}

}  // namespace

TEST_CASE("an exact scaled atom matches itself with the scale as rho") {
  const auto dict = random_dictionary(12, 40, 3);
  const auto basis = svd_compress(dict, 12);
  const auto cd = compress_dictionary(dict, basis.V);

  CMat x(2, 12);
  x.row(0) = 3.5 * cd.dc.row(4);
  x.row(1) = CMat::Zero(1, 12);
  const auto res = match(x, cd);
  REQUIRE(res.atom(0) == 4);
  REQUIRE(res.rho(0) == Catch::Approx(3.5).epsilon(1e-12));
  REQUIRE((res.resynth.row(0) - 3.5 * cd.dc.row(4)).norm() < 1e-10);

  // Zero voxel: atom 0 by tie-break, rho clamped at zero.
  REQUIRE(res.atom(1) == 0);
  REQUIRE(res.rho(1) == 0.0);
  REQUIRE(res.resynth.row(1).norm() == 0.0);
}

TEST_CASE("negated real atom still matches by modulus but rho clamps to zero") {
  // Real-valued dictionary.
  Rng rng(5);
  Dictionary dict;
  dict.L = 30;
  dict.D.resize(6, 30);
  for (Eigen::Index i = 0; i < dict.D.size(); ++i) dict.D.data()[i] = Cplx(rng.normal(), 0.0);
  dict.norms.resize(6);
  for (int a = 0; a < 6; ++a) {
    dict.norms(a) = dict.D.row(a).norm();
    dict.grid.atoms.emplace_back(500.0 + a, 50.0);
  }
  const auto basis = svd_compress(dict, 6);
  const auto cd = compress_dictionary(dict, basis.V);

  CMat x = -1.0 * cd.dc.row(2);
  const auto res = match(x, cd);
  REQUIRE(res.atom(0) == 2);
  REQUIRE(res.rho(0) == 0.0);
}

TEST_CASE("compressed match equals the uncompressed Eq.(2)/(3) brute force") {
  const int A = 8, L = 50, trials = 64;
  const auto dict = random_dictionary(A, L, 11);
  const auto basis = svd_compress(dict, A);  // k = rank(D): isometric for atoms
  const auto cd = compress_dictionary(dict, basis.V);

  Rng rng(77);
  for (int trial = 0; trial < trials; ++trial) {
    CVec sig(L);
    for (int t = 0; t < L; ++t) sig(t) = rng.normal_complex(1.0);
    const auto want = oracles::match_uncompressed(dict.D, sig);

    CMat xc = sig.transpose() * basis.V;  // row-compression x -> x V
    const auto got = match(xc, cd);
    REQUIRE(got.atom(0) == want.atom);
    REQUIRE(got.rho(0) == Catch::Approx(want.rho).margin(1e-12));
  }
}

TEST_CASE("autocal match equals the literal Eq.(4) oracle") {
  const int A = 10, L = 60, r = 7, k = 3;
  const auto dict = random_dictionary(A, L, 13);
  const auto basis_r = svd_compress(dict, r);
  const auto cd_r = compress_dictionary(dict, basis_r.V);

  Rng rng(21);
  CMat x_ac(32, r);
  for (Eigen::Index i = 0; i < x_ac.size(); ++i) x_ac.data()[i] = rng.normal_complex(1.0);
  const auto ab = autocal_basis(x_ac, basis_r.V, k);

  for (int trial = 0; trial < 32; ++trial) {
    CVec xk(k);
    for (int j = 0; j < k; ++j) xk(j) = rng.normal_complex(1.0);
    const auto want = oracles::match_autocal_literal(cd_r.dc, ab.V_ac, xk);
    const auto got = match_autocal(CMat(xk.transpose()), cd_r, ab);
    REQUIRE(got.atom(0) == want.atom);
    REQUIRE(got.rho(0) == Catch::Approx(want.rho).margin(1e-12));
  }
}

TEST_CASE("square unitary V_ac reproduces plain match on rotated data") {
  const int A = 9, L = 40, r = 5;
  const auto dict = random_dictionary(A, L, 17);
  const auto basis_r = svd_compress(dict, r);
  const auto cd_r = compress_dictionary(dict, basis_r.V);

  Rng rng(33);
  CMat x_ac(20, r);
  for (Eigen::Index i = 0; i < x_ac.size(); ++i) x_ac.data()[i] = rng.normal_complex(1.0);
  const auto ab = autocal_basis(x_ac, basis_r.V, r);  // k = r, unitary

  CMat x(6, r);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal_complex(1.0);
  const auto plain = match(x, cd_r);
  const auto rotated = match_autocal(CMat(x * ab.V_ac), cd_r, ab);
  for (int i = 0; i < 6; ++i) {
    REQUIRE(rotated.atom(i) == plain.atom(i));
    REQUIRE(rotated.rho(i) == Catch::Approx(plain.rho(i)).margin(1e-12));
  }

  // A scaled autocal-compressed atom recovers its index and scale.
  CMat probe = 2.25 * (cd_r.dc.row(3) * ab.V_ac);
  const auto res = match_autocal(probe, cd_r, ab);
  REQUIRE(res.atom(0) == 3);
  REQUIRE(res.rho(0) == Catch::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("positive homogeneity of the cone projection") {
  const auto dict = random_dictionary(15, 45, 19);
  const auto basis = svd_compress(dict, 9);
  const auto cd = compress_dictionary(dict, basis.V);

  Rng rng(55);
  CMat x(24, 9);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal_complex(1.0);
  const auto base = match(x, cd);
  for (double alpha : {0.1, 1.0, 7.3}) {
    const auto scaled = match(CMat(alpha * x), cd);
    for (int i = 0; i < 24; ++i) {
      REQUIRE(scaled.atom(i) == base.atom(i));
      REQUIRE(scaled.rho(i) == Catch::Approx(alpha * base.rho(i)).margin(1e-12 * (1 + base.rho(i))));
    }
  }
}

TEST_CASE("matching is idempotent on its own resynthesis") {
  const auto dict = random_dictionary(10, 35, 23);
  const auto basis = svd_compress(dict, 6);
  const auto cd = compress_dictionary(dict, basis.V);

  Rng rng(60);
  CMat x(16, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal_complex(1.0);
  const auto first = match(x, cd);
  const auto second = match(first.resynth, cd);
  for (int i = 0; i < 16; ++i) {
    if (first.rho(i) > 0.0) REQUIRE(second.atom(i) == first.atom(i));
    REQUIRE(second.rho(i) == Catch::Approx(first.rho(i)).margin(1e-12 * (1 + first.rho(i))));
  }
}

TEST_CASE("lut readout honors the zero-density background convention") {
  const auto schedule = make_schedule(40, 9);
  const auto grid = TissueGrid::from_values({800.0}, {80.0});
  const auto dict = build_dictionary(schedule, grid);
  const auto basis = svd_compress(dict, 1);
  const auto cd = compress_dictionary(dict, basis.V);

  CMat x(3, 1);
  x.row(0) = 2.0 * cd.dc.row(0);
  x.row(1) = CMat::Zero(1, 1);
  x.row(2) = 0.5 * cd.dc.row(0);
  const auto maps = lut_lookup(match(x, cd), dict);
  REQUIRE(maps.t1(0) == 800.0);
  REQUIRE(maps.t2(0) == 80.0);
  REQUIRE(maps.pd(0) == Catch::Approx(2.0));
  REQUIRE(maps.t1(1) == 0.0);
  REQUIRE(maps.t2(1) == 0.0);
  REQUIRE(maps.pd(1) == 0.0);
  REQUIRE(maps.t1(2) == 800.0);

  // Constant maps when all voxels share an atom.
  REQUIRE(maps.atom(0) == maps.atom(2));
}

TEST_CASE("empty dictionary is rejected") {
  CompressedDictionary cd;
  cd.dc.resize(0, 4);
  cd.norms.resize(0);
  CMat x = CMat::Zero(2, 4);
  REQUIRE_THROWS_AS(match(x, cd), InvalidArgument);
}
