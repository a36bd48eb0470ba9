// Command-line front end wiring the reconstruction pipeline into reproducible
// stages: build-dict -> simulate -> recon -> eval / render, plus the sweep
// harness. Every command is deterministic given its flags and seeds; each
// output directory carries a manifest that makes it re-derivable.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrf/mrf.hpp"
#include "colormap.hpp"
#include "png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrf;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const std::string& dir, const std::string& command, const json& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = config;
  m["config_hash"] = hex64(fnv1a(config.dump()));
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  m["timestamp_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  std::ofstream f(dir + "/manifest.json");
  f << m.dump(2) << "\n";
}

RealArray map_to_array(const RVec& v, int nx, int ny) {
  RealArray a({nx, ny});
  for (long i = 0; i < static_cast<long>(nx) * ny; ++i) a[static_cast<std::size_t>(i)] = v(i);
  return a;
}

// ---------------------------------------------------------------------------

int cmd_build_dict(int L, std::uint64_t seed, const std::string& schedule_path,
                   const std::string& grid_name, int k, int r, const std::string& out) {
  SequenceSchedule schedule =
      schedule_path.empty() ? make_schedule(L, seed) : read_schedule(schedule_path);
  TissueGrid grid;
  if (grid_name == "default") {
    grid = default_tissue_grid();
  } else {
    const ArrayFile f = read_array(grid_name);
    if (f.dtype != "f64" || f.shape.size() != 2 || f.shape[1] != 2)
      throw FormatError("grid file must be an Ax2 f64 container of (T1, T2) rows");
    std::vector<double> t1s, t2s;
    for (std::int64_t i = 0; i < f.shape[0]; ++i) {
      t1s.push_back(f.f64().at(i, 0));
      t2s.push_back(f.f64().at(i, 1));
    }
    std::sort(t1s.begin(), t1s.end());
    t1s.erase(std::unique(t1s.begin(), t1s.end()), t1s.end());
    std::sort(t2s.begin(), t2s.end());
    t2s.erase(std::unique(t2s.begin(), t2s.end()), t2s.end());
    grid = TissueGrid::from_values(t1s, t2s);
  }

  const Dictionary dict = build_dictionary(schedule, grid);
  const int store = std::max(k, r);
  const CompressionBasis basis = svd_compress(dict, store);
  fs::create_directories(out);
  save_dictionary(out, dict, basis, k);
  write_schedule(out + "/schedule.mrfa", schedule);

  write_manifest(out, "build-dict",
                 {{"L", schedule.L},
                  {"seed", schedule.seed},
                  {"grid", grid_name},
                  {"k", k},
                  {"r", r},
                  {"atoms", dict.num_atoms()}},
                 schedule_path.empty() ? std::vector<std::string>{}
                                       : std::vector<std::string>{schedule_path},
                 {"fingerprints.mrfa", "lut.mrfa", "basis.mrfa", "basis_r.mrfa",
                  "singular_values.mrfa", "schedule.mrfa"});
  std::cout << "dictionary: " << dict.num_atoms() << " atoms, L=" << schedule.L
            << ", basis rank " << store << " -> " << out << "\n";
  return 0;
}

int cmd_simulate(int nx, int ny, int L, std::uint64_t seed, double R, int coils, double noise,
                 const std::string& sampling, const std::string& out) {
  Geometry g0 = Geometry::make(nx, ny, L, 1, 1, 1, coils);
  const SequenceSchedule schedule = make_schedule(L, seed);
  SamplingScheme scheme;
  if (sampling == "spiral")
    scheme = make_spiral_scheme(g0);
  else
    scheme = make_cartesian_scheme(g0, R, seed + 3);
  Geometry geom = Geometry::make(nx, ny, L, scheme_samples(scheme), 1, 1, coils);
  const CoilMaps cm = make_coil_maps(geom, coils, seed + 2);
  const DigitalPhantom phantom = make_phantom(geom, default_tissue_classes(), seed + 1);

  KSpaceData y = simulate_measurements(phantom, schedule, cm, scheme);
  if (noise > 0.0) y = add_noise(y, {noise, seed + 4});

  fs::create_directories(out);
  write_schedule(out + "/schedule.mrfa", schedule);
  write_scheme(out + "/scheme.mrfa", scheme);
  write_matrix(out + "/coils.mrfa", cm.maps,
               {{"kind", "coils"}, {"C", coils}, {"nx", nx}, {"ny", ny}});
  write_array(out + "/kspace.mrfa", y.samples,
              {{"kind", "kspace"}, {"C", y.C}, {"L", y.L}, {"S", y.S}, {"noise", noise}});
  write_array(out + "/truth_t1.mrfa", map_to_array(phantom.t1, nx, ny), {{"kind", "t1"}});
  write_array(out + "/truth_t2.mrfa", map_to_array(phantom.t2, nx, ny), {{"kind", "t2"}});
  write_array(out + "/truth_pd.mrfa", map_to_array(phantom.pd, nx, ny), {{"kind", "pd"}});
  IntArray mask({nx, ny});
  for (long i = 0; i < geom.N; ++i)
    mask[static_cast<std::size_t>(i)] = phantom.support[static_cast<std::size_t>(i)];
  write_array(out + "/mask.mrfa", mask, {{"kind", "mask"}});

  write_manifest(out, "simulate",
                 {{"nx", nx},
                  {"ny", ny},
                  {"L", L},
                  {"seed", seed},
                  {"R", R},
                  {"coils", coils},
                  {"noise", noise},
                  {"sampling", sampling}},
                 {},
                 {"schedule.mrfa", "scheme.mrfa", "coils.mrfa", "kspace.mrfa", "truth_t1.mrfa",
                  "truth_t2.mrfa", "truth_pd.mrfa", "mask.mrfa"});
  std::cout << "simulated " << y.C << "x" << y.L << "x" << y.S << " samples -> " << out << "\n";
  return 0;
}

int cmd_recon(const std::string& data, const std::string& dict_dir, const std::string& method,
              const std::string& step, double lambda, int kmax, int k_flag, int r_flag,
              bool literal_condb, const std::string& out) {
  SolverConfig cfg = parse_method(method);
  if (step == "fsz")
    cfg.step = StepStrategy::Fsz;
  else if (step == "bt")
    cfg.step = StepStrategy::Bt;
  else if (!step.empty())
    throw InvalidArgument("unknown step strategy: " + step);
  cfg.lambda = lambda;
  cfg.kmax = kmax;
  cfg.paper_literal_condb = literal_condb;

  const LoadedDictionary ld = load_dictionary(dict_dir);
  cfg.k = (k_flag > 0) ? k_flag : ld.k;
  cfg.r = r_flag;
  if (cfg.r > ld.basis.V.cols()) cfg.r = static_cast<int>(ld.basis.V.cols());
  if (cfg.k > ld.basis.V.cols()) throw DimensionError("requested rank exceeds the stored basis");

  const ArrayFile kf = read_array(data + "/kspace.mrfa");
  if (kf.dtype != "c128" || kf.shape.size() != 3)
    throw FormatError("kspace.mrfa must be a CxLxS c128 container");
  KSpaceData y;
  y.C = static_cast<int>(kf.shape[0]);
  y.L = static_cast<int>(kf.shape[1]);
  y.S = static_cast<int>(kf.shape[2]);
  y.samples = kf.c128();

  const SamplingScheme scheme = read_scheme(data + "/scheme.mrfa");
  const ArrayFile cf = read_array(data + "/coils.mrfa");
  CoilMaps cm;
  cm.maps = as_cmatrix(cf);
  cm.C = static_cast<int>(cm.maps.cols());
  cm.nx = cf.meta.value("nx", 0);
  cm.ny = cf.meta.value("ny", 0);

  if (y.L != ld.dict.L) throw DimensionError("data length does not match dictionary length");
  Geometry geom = Geometry::make(cm.nx, cm.ny, y.L, y.S, cfg.k, std::max(cfg.k, cfg.r), y.C);

  ReconAssets assets{geom, &ld.dict, &ld.basis, &cm, &scheme, "svd:" + dict_dir};
  const ReconResult rr = run_recon(y, assets, cfg);

  fs::create_directories(out);
  const json meta{{"kind", "map"}, {"method", method}, {"lambda", lambda}, {"kmax", kmax}};
  write_array(out + "/t1.mrfa", map_to_array(rr.maps.t1, cm.nx, cm.ny), meta);
  write_array(out + "/t2.mrfa", map_to_array(rr.maps.t2, cm.nx, cm.ny), meta);
  write_array(out + "/pd.mrfa", map_to_array(rr.maps.pd, cm.nx, cm.ny), meta);
  IntArray atoms({cm.nx, cm.ny});
  for (long i = 0; i < geom.N; ++i) atoms[static_cast<std::size_t>(i)] = rr.maps.atom(i);
  write_array(out + "/atoms.mrfa", atoms, meta);

  {
    std::ofstream diag(out + "/diagnostics.jsonl");
    for (const auto& st : rr.state.stats) {
      json line{{"iter", st.iter},
                {"alpha", st.alpha},
                {"fidelity", st.fidelity},
                {"backtracks", st.backtracks},
                {"wall_ms", st.wall_ms}};
      diag << line.dump() << "\n";
    }
  }

  write_manifest(out, "recon",
                 {{"data", data},
                  {"dict", dict_dir},
                  {"method", method},
                  {"step", step.empty() ? method_name(cfg) : step},
                  {"lambda", lambda},
                  {"kmax", kmax},
                  {"k", cfg.k},
                  {"r", cfg.r}},
                 {data + "/kspace.mrfa", data + "/scheme.mrfa", data + "/coils.mrfa",
                  dict_dir + "/fingerprints.mrfa"},
                 {"t1.mrfa", "t2.mrfa", "pd.mrfa", "atoms.mrfa", "diagnostics.jsonl"});

  std::cout << "recon " << method << ": best_iter=" << rr.state.best_iter << " -> " << out
            << "\n";
  return 0;
}

int cmd_eval(const std::string& maps, const std::string& truth, const std::string& mask_path,
             const std::string& roi_path, const std::string& out_csv) {
  const RMat est_t1 = as_rmatrix(read_array(maps + "/t1.mrfa"));
  const RMat est_t2 = as_rmatrix(read_array(maps + "/t2.mrfa"));
  const RMat tru_t1 = as_rmatrix(read_array(truth + "/truth_t1.mrfa"));
  const RMat tru_t2 = as_rmatrix(read_array(truth + "/truth_t2.mrfa"));
  if (est_t1.rows() != tru_t1.rows() || est_t1.cols() != tru_t1.cols())
    throw DimensionError("eval: map shapes disagree");

  const std::string mask_file = mask_path.empty() ? truth + "/mask.mrfa" : mask_path;
  const ArrayFile mf = read_array(mask_file);
  std::vector<std::uint8_t> mask(mf.i64().size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mf.i64()[i] != 0;

  auto flatten = [](const RMat& m) {
    RVec v(m.size());
    long idx = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) v(idx++) = m(i, j);
    return v;
  };
  const double err_t1 = relative_error(flatten(est_t1), flatten(tru_t1), mask);
  const double err_t2 = relative_error(flatten(est_t2), flatten(tru_t2), mask);

  std::string csv = "metric,value\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "err_t1,%.10e\n", err_t1);
  csv += buf;
  std::snprintf(buf, sizeof(buf), "err_t2,%.10e\n", err_t2);
  csv += buf;

  if (!roi_path.empty()) {
    const ArrayFile rf = read_array(roi_path);
    std::vector<std::uint8_t> roi(rf.i64().size());
    for (std::size_t i = 0; i < roi.size(); ++i) roi[i] = rf.i64()[i] != 0;
    const auto s1 = roi_stats(flatten(est_t1), roi);
    const auto s2 = roi_stats(flatten(est_t2), roi);
    std::snprintf(buf, sizeof(buf), "roi_t1_mean,%.10e\nroi_t1_std,%.10e\nroi_t1_nstd,%.10e\n",
                  s1.mean, s1.std, s1.normalized_std);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "roi_t2_mean,%.10e\nroi_t2_std,%.10e\nroi_t2_nstd,%.10e\n",
                  s2.mean, s2.std, s2.normalized_std);
    csv += buf;
  }

  std::ofstream f(out_csv);
  if (!f) throw IoError("eval: cannot write " + out_csv);
  f << csv;
  std::cout << csv;
  return 0;
}

int cmd_render(const std::string& map_path, const std::string& range, const std::string& out) {
  const auto colon = range.find(':');
  if (colon == std::string::npos) throw InvalidArgument("range must be lo:hi");
  const double lo = std::stod(range.substr(0, colon));
  const double hi = std::stod(range.substr(colon + 1));
  if (!(hi > lo)) throw InvalidArgument("range must satisfy lo < hi");

  const ArrayFile f = read_array(map_path);
  if (f.dtype != "f64" || f.shape.size() != 2)
    throw FormatError("render expects a 2-D f64 map container");
  const int nx = static_cast<int>(f.shape[0]);
  const int ny = static_cast<int>(f.shape[1]);

  std::vector<unsigned char> rgb(static_cast<std::size_t>(nx) * ny * 3);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double v = f.f64().at(i, j);
      double t = (v - lo) / (hi - lo);
      t = std::min(1.0, std::max(0.0, t));
      const auto& c = mrfcli::kViridis[static_cast<std::size_t>(std::lround(t * 255.0))];
      const std::size_t p = (static_cast<std::size_t>(i) * ny + j) * 3;
      rgb[p] = c[0];
      rgb[p + 1] = c[1];
      rgb[p + 2] = c[2];
    }
  }
  mrfcli::write_png_rgb8(out, ny, nx, rgb);
  std::cout << "rendered " << nx << "x" << ny << " map -> " << out << "\n";
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out) {
  SweepSpec spec;
  if (!spec_path.empty()) {
    std::ifstream f(spec_path);
    if (!f) throw IoError("sweep: cannot read spec " + spec_path);
    json j;
    f >> j;
    spec = SweepSpec::from_json(j);
  }
  const SweepResults res = run_sweep(spec);

  fs::create_directories(out);
  {
    std::ofstream f(out + "/results.csv");
    f << sweep_csv(res);
  }
  std::vector<std::string> outputs{"results.csv"};
  long ok_cells = 0;
  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    const auto& c = res.cells[i];
    if (!c.ok) continue;
    ++ok_cells;
    char name[128];
    std::snprintf(name, sizeof(name), "cell_%03zu_%s_L%d_n%g", i, c.method.c_str(), c.L, c.noise);
    const std::string dir = out + "/" + name;
    fs::create_directories(dir);
    const json meta{{"kind", "map"}, {"method", c.method}, {"L", c.L}, {"noise", c.noise}};
    write_array(dir + "/t1.mrfa", map_to_array(c.maps.t1, res.spec.nx, res.spec.ny), meta);
    write_array(dir + "/t2.mrfa", map_to_array(c.maps.t2, res.spec.nx, res.spec.ny), meta);
    write_array(dir + "/pd.mrfa", map_to_array(c.maps.pd, res.spec.nx, res.spec.ny), meta);
    outputs.emplace_back(name);
  }
  json cfg = spec.to_json();
  cfg["mask_source"] = res.mask_source;
  write_manifest(out, "sweep", cfg,
                 spec_path.empty() ? std::vector<std::string>{}
                                   : std::vector<std::string>{spec_path},
                 outputs);
  std::cout << sweep_csv(res);
  if (ok_cells == 0) throw NumericalError("sweep: every cell failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MR fingerprinting reconstruction toolkit"};
  app.require_subcommand(1);

  // build-dict
  auto* bd = app.add_subcommand("build-dict", "simulate the fingerprint dictionary and SVD basis");
  int bd_L = 600;
  std::uint64_t bd_seed = 1;
  std::string bd_schedule, bd_grid = "default", bd_out;
  int bd_k = 10, bd_r = 50;
  bd->add_option("--L", bd_L, "sequence length when generating a schedule");
  bd->add_option("--seed", bd_seed, "schedule seed");
  bd->add_option("--schedule", bd_schedule, "existing schedule container (overrides --L/--seed)");
  bd->add_option("--grid", bd_grid, "'default' or an Ax2 f64 container of (T1,T2)");
  bd->add_option("--k", bd_k, "compression rank recorded as the default");
  bd->add_option("--r", bd_r, "autocalibration pre-rank retained in the stored basis");
  bd->add_option("--out", bd_out, "output directory")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a digital phantom and k-space data");
  int sm_nx = 64, sm_ny = 64, sm_L = 400, sm_coils = 1;
  std::uint64_t sm_seed = 1;
  double sm_R = 8.0, sm_noise = 0.0;
  std::string sm_sampling = "cartesian", sm_out;
  sim->add_option("--nx", sm_nx);
  sim->add_option("--ny", sm_ny);
  sim->add_option("--L", sm_L);
  sim->add_option("--seed", sm_seed);
  sim->add_option("--R", sm_R, "Cartesian undersampling ratio");
  sim->add_option("--coils", sm_coils);
  sim->add_option("--noise", sm_noise, "relative noise std (fraction of max sample)");
  sim->add_option("--sampling", sm_sampling)->check(CLI::IsMember({"cartesian", "spiral"}));
  sim->add_option("--out", sm_out)->required();

  // recon
  auto* rc = app.add_subcommand("recon", "reconstruct tissue maps from simulated data");
  std::string rc_data, rc_dict, rc_method, rc_step, rc_out;
  double rc_lambda = 1e-4;
  int rc_kmax = 10, rc_k = 0, rc_r = 50;
  bool rc_literal = false;
  rc->add_option("--data", rc_data)->required();
  rc->add_option("--dict", rc_dict)->required();
  rc->add_option("--method", rc_method, "classical | air-mrf | igp-mrf-XY[-fsz|-bt] | gfb-mrf")
      ->required();
  rc->add_option("--step", rc_step)->check(CLI::IsMember({"fsz", "bt"}));
  rc->add_option("--lambda", rc_lambda);
  rc->add_option("--kmax", rc_kmax);
  rc->add_option("--k", rc_k, "compression rank (default: dictionary metadata)");
  rc->add_option("--r", rc_r, "autocalibration pre-rank");
  rc->add_flag("--paper-literal-condb", rc_literal,
               "use the printed (increase-form) backtracking condition b");
  rc->add_option("--out", rc_out)->required();

  // eval
  auto* ev = app.add_subcommand("eval", "relative-error table against ground truth");
  std::string ev_maps, ev_truth, ev_mask, ev_roi, ev_out;
  ev->add_option("--maps", ev_maps)->required();
  ev->add_option("--truth", ev_truth)->required();
  ev->add_option("--mask", ev_mask, "mask container (default: truth/mask.mrfa)");
  ev->add_option("--roi", ev_roi, "optional ROI container for mean/std/nstd");
  ev->add_option("--out", ev_out)->required();

  // render
  auto* rd = app.add_subcommand("render", "render a 2-D map container to PNG");
  std::string rd_map, rd_range = "0:2000", rd_out;
  rd->add_option("--map", rd_map)->required();
  rd->add_option("--range", rd_range, "lo:hi display window");
  rd->add_option("--out", rd_out)->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "run the methods x lengths x noise harness");
  std::string sw_spec, sw_out;
  sw->add_option("--spec", sw_spec, "JSON experiment spec (default desk sweep if omitted)");
  sw->add_option("--out", sw_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (bd->parsed())
      return cmd_build_dict(bd_L, bd_seed, bd_schedule, bd_grid, bd_k, bd_r, bd_out);
    if (sim->parsed())
      return cmd_simulate(sm_nx, sm_ny, sm_L, sm_seed, sm_R, sm_coils, sm_noise, sm_sampling,
                          sm_out);
    if (rc->parsed())
      return cmd_recon(rc_data, rc_dict, rc_method, rc_step, rc_lambda, rc_kmax, rc_k, rc_r,
                       rc_literal, rc_out);
    if (ev->parsed()) return cmd_eval(ev_maps, ev_truth, ev_mask, ev_roi, ev_out);
    if (rd->parsed()) return cmd_render(rd_map, rd_range, rd_out);
    if (sw->parsed()) return cmd_sweep(sw_spec, sw_out);
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
