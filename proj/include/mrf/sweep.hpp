#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrf/dictionary.hpp"
#include "mrf/metrics.hpp"
#include "mrf/phantom.hpp"
#include "mrf/solvers.hpp"

// Desk-scale evaluation harness: methods x sequence lengths x noise levels on
// the digital phantom, sharing simulated data across methods within a cell.

namespace mrf {

struct SweepSpec {
  int nx = 64, ny = 64;
  std::vector<int> lengths{200, 400, 600};
  std::vector<double> noise{0.0, 0.001};
  std::vector<std::string> methods{"classical", "igp-mrf-01-bt", "gfb-mrf"};
  double R = 8.0;
  int coils = 1;
  int k = 10, r = 50, kmax = 10;
  std::uint64_t seed = 1;
  double lambda_noisefree = 1e-4;
  double lambda_noisy = 5e-4;
  std::string sampling = "cartesian";

  static SweepSpec from_json(const nlohmann::json& j) {
    SweepSpec s;
    s.nx = j.value("nx", s.nx);
    s.ny = j.value("ny", s.ny);
    if (j.contains("lengths")) s.lengths = j.at("lengths").get<std::vector<int>>();
    if (j.contains("noise")) s.noise = j.at("noise").get<std::vector<double>>();
    if (j.contains("methods")) s.methods = j.at("methods").get<std::vector<std::string>>();
    s.R = j.value("R", s.R);
    s.coils = j.value("coils", s.coils);
    s.k = j.value("k", s.k);
    s.r = j.value("r", s.r);
    s.kmax = j.value("kmax", s.kmax);
    s.seed = j.value("seed", s.seed);
    s.lambda_noisefree = j.value("lambda_noisefree", s.lambda_noisefree);
    s.lambda_noisy = j.value("lambda_noisy", s.lambda_noisy);
    s.sampling = j.value("sampling", s.sampling);
    return s;
  }

  nlohmann::json to_json() const {
    return {{"nx", nx},         {"ny", ny},
            {"lengths", lengths}, {"noise", noise},
            {"methods", methods}, {"R", R},
            {"coils", coils},     {"k", k},
            {"r", r},             {"kmax", kmax},
            {"seed", seed},       {"lambda_noisefree", lambda_noisefree},
            {"lambda_noisy", lambda_noisy}, {"sampling", sampling}};
  }
};

struct SweepCell {
  std::string method;
  int L = 0;
  double noise = 0.0;
  bool ok = false;
  std::string error;
  double err_t1 = 0.0, err_t2 = 0.0;
  int best_iter = 0;
  double wall_ms = 0.0;
  TissueMaps maps;
  StepStrategy step = StepStrategy::Fsz;
  std::vector<double> condb_metrics;  // BT runs: accepted-iteration metric history
};

struct SweepResults {
  SweepSpec spec;
  std::vector<SweepCell> cells;
  DigitalPhantom phantom;
  std::string mask_source = "phantom_support";
};

inline SweepResults run_sweep(const SweepSpec& spec) {
  SweepResults res;
  res.spec = spec;

  const int max_len = *std::max_element(spec.lengths.begin(), spec.lengths.end());
  const SequenceSchedule schedule = make_schedule(max_len, spec.seed);
  const TissueGrid grid = default_tissue_grid();
  const Dictionary dict_full = build_dictionary(schedule, grid);

  bool any_autocal = false;
  for (const auto& m : spec.methods) {
    try {
      any_autocal = any_autocal || parse_method(m).autocal;
    } catch (const Error&) {
      // Unknown names fail per cell below.
    }
  }
  const int need_rank = any_autocal ? std::max(spec.k, spec.r) : spec.k;

  Geometry base = Geometry::make(spec.nx, spec.ny, max_len, 1, spec.k,
                                 std::max(spec.k, spec.r), spec.coils);
  const DigitalPhantom phantom = make_phantom(base, default_tissue_classes(), spec.seed + 1);
  const CoilMaps coils = make_coil_maps(base, spec.coils, spec.seed + 2);
  res.phantom = phantom;

  for (int L : spec.lengths) {
    const SequenceSchedule sched_l = schedule.truncated(L);
    Dictionary dict_l;
    dict_l.grid = dict_full.grid;
    dict_l.L = L;
    dict_l.schedule_seed = dict_full.schedule_seed;
    dict_l.D = dict_full.D.leftCols(L);
    dict_l.norms.resize(dict_l.D.rows());
    for (Eigen::Index a = 0; a < dict_l.D.rows(); ++a) dict_l.norms(a) = dict_l.D.row(a).norm();

    const CompressionBasis basis = svd_compress(dict_l, need_rank);

    Geometry geom_l = Geometry::make(spec.nx, spec.ny, L, 1, spec.k,
                                     std::max(spec.k, spec.r), spec.coils);
    SamplingScheme scheme;
    if (spec.sampling == "spiral") {
      scheme = make_spiral_scheme(geom_l);
    } else {
      scheme = make_cartesian_scheme(geom_l, spec.R, spec.seed + 3);
    }
    geom_l.S = scheme_samples(scheme);

    const KSpaceData y_clean =
        simulate_measurements(phantom, sched_l, coils, scheme, /*dict_grid_free=*/true);

    for (double noise : spec.noise) {
      const KSpaceData y = add_noise(y_clean, {noise, spec.seed + 4});
      for (const auto& name : spec.methods) {
        SweepCell cell;
        cell.method = name;
        cell.L = L;
        cell.noise = noise;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          SolverConfig cfg = parse_method(name);
          cfg.lambda = (noise > 0.0) ? spec.lambda_noisy : spec.lambda_noisefree;
          cfg.k = spec.k;
          cfg.r = spec.r;
          cfg.kmax = spec.kmax;
          ReconAssets assets{geom_l, &dict_l, &basis, &coils, &scheme, "svd"};
          ReconResult rr = run_recon(y, assets, cfg);
          cell.maps = std::move(rr.maps);
          cell.best_iter = rr.state.best_iter;
          cell.step = cfg.step;
          cell.condb_metrics = rr.state.condb_metric_history;
          cell.err_t1 = relative_error(cell.maps.t1, phantom.t1, phantom.support);
          cell.err_t2 = relative_error(cell.maps.t2, phantom.t2, phantom.support);
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
        }
        const auto t1 = std::chrono::steady_clock::now();
        cell.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        res.cells.push_back(std::move(cell));
      }
    }
  }
  return res;
}

/// CSV rendering; every value except wall_ms is deterministic per seed.
inline std::string sweep_csv(const SweepResults& res) {
  std::string out = "method,L,noise,err_t1,err_t2,best_iter,wall_ms,status\n";
  char buf[512];
  for (const auto& c : res.cells) {
    std::string status = c.ok ? "ok" : "failed:" + c.error;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6g,%.10e,%.10e,%d,%.3f,%s\n", c.method.c_str(), c.L,
                  c.noise, c.err_t1, c.err_t2, c.best_iter, c.wall_ms, status.c_str());
    out += buf;
  }
  return out;
}

}  // namespace mrf
