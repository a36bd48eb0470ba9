#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mrf/container.hpp"

// Exercises the installed binary end to end on a small problem. The pipeline
// stays tiny (L=60, 24x24) so the whole file runs in seconds.

namespace fs = std::filesystem;

namespace {

const std::string kCli = MRF_CLI_PATH;

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / "mrf_cli_tests";
    fs::remove_all(root);
    fs::create_directories(root);
  }
  std::string operator/(const std::string& p) const { return (root / p).string(); }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string slurp_text(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const Workspace& ws() {
  static Workspace w;
  static bool prepared = [] {
    // Shared fixture: a small custom grid keeps build-dict fast.
    mrf::RealArray grid({6, 2});
    const double t1s[6] = {300, 700, 1100, 1600, 2400, 4000};
    const double t2s[6] = {40, 80, 120, 300, 900, 2000};
    for (int i = 0; i < 6; ++i) {
      grid.at(i, 0) = t1s[i];
      grid.at(i, 1) = t2s[i];
    }
    Workspace& wref = const_cast<Workspace&>(*&w);
    mrf::write_array(wref / "grid.mrfa", grid);
    REQUIRE(std::system((kCli + " build-dict --L 60 --seed 2 --grid " + (wref / "grid.mrfa") +
                         " --k 6 --r 12 --out " + (wref / "dict") + " >/dev/null 2>&1")
                            .c_str()) == 0);
    REQUIRE(std::system((kCli + " simulate --nx 24 --ny 24 --L 60 --seed 2 --R 4 --noise 0.001" +
                         " --out " + (wref / "data") + " >/dev/null 2>&1")
                            .c_str()) == 0);
    return true;
  }();
  (void)prepared;
  return w;
}

}  // namespace

TEST_CASE("build-dict with the default grid records 5366 atoms") {
  const auto& w = ws();
  REQUIRE(run("build-dict --L 40 --seed 3 --k 4 --r 8 --out " + (w / "dict_default")) == 0);
  const auto f = mrf::read_array(w / "dict_default/fingerprints.mrfa");
  REQUIRE(f.meta.at("atoms").get<long>() == 5366);
  REQUIRE(f.shape[0] == 5366);
  REQUIRE(f.meta.at("kind") == "dictionary");
  REQUIRE(f.meta.at("L") == 40);

  const auto b = mrf::read_array(w / "dict_default/basis.mrfa");
  REQUIRE(b.shape == std::vector<std::int64_t>{40, 4});
}

TEST_CASE("build-dict reruns reproduce identical containers") {
  const auto& w = ws();
  REQUIRE(run("build-dict --L 60 --seed 2 --grid " + (w / "grid.mrfa") + " --k 6 --r 12 --out " +
              (w / "dict_again")) == 0);
  for (const char* name :
       {"fingerprints.mrfa", "lut.mrfa", "basis.mrfa", "basis_r.mrfa", "schedule.mrfa"}) {
    REQUIRE(slurp(w / ("dict/" + std::string(name))) ==
            slurp(w / ("dict_again/" + std::string(name))));
  }
}

TEST_CASE("recon writes maps, diagnostics, and a manifest; exit codes hold") {
  const auto& w = ws();
  REQUIRE(run("recon --data " + (w / "data") + " --dict " + (w / "dict") +
              " --method gfb-mrf --lambda 5e-4 --kmax 4 --out " + (w / "maps_gfb")) == 0);
  REQUIRE(fs::exists(w / "maps_gfb/t1.mrfa"));
  REQUIRE(fs::exists(w / "maps_gfb/t2.mrfa"));
  REQUIRE(fs::exists(w / "maps_gfb/pd.mrfa"));
  REQUIRE(fs::exists(w / "maps_gfb/diagnostics.jsonl"));
  const std::string diag = slurp_text(w / "maps_gfb/diagnostics.jsonl");
  REQUIRE(diag.find("\"fidelity\"") != std::string::npos);
  REQUIRE(diag.find("\"alpha\"") != std::string::npos);
  const std::string manifest = slurp_text(w / "maps_gfb/manifest.json");
  REQUIRE(manifest.find("config_hash") != std::string::npos);

  REQUIRE(run("recon --data " + (w / "data") + " --dict " + (w / "dict") +
              " --method nonsense --out " + (w / "maps_bad")) == 2);
  REQUIRE(run("recon --data /no/such/dir --dict " + (w / "dict") +
              " --method gfb-mrf --out " + (w / "maps_bad2")) == 1);
}

TEST_CASE("igp-mrf-01 with lambda 0 reproduces the AIR baseline file-for-file") {
  const auto& w = ws();
  REQUIRE(run("recon --data " + (w / "data") + " --dict " + (w / "dict") +
              " --method igp-mrf-01 --lambda 0 --kmax 4 --out " + (w / "maps_igp0")) == 0);
  REQUIRE(run("recon --data " + (w / "data") + " --dict " + (w / "dict") +
              " --method air-mrf --kmax 4 --out " + (w / "maps_air")) == 0);
  for (const char* name : {"t1.mrfa", "t2.mrfa", "pd.mrfa", "atoms.mrfa"}) {
    const auto a = mrf::read_array(w / ("maps_igp0/" + std::string(name)));
    const auto b = mrf::read_array(w / ("maps_air/" + std::string(name)));
    if (a.dtype == "f64") {
      REQUIRE(a.f64().values() == b.f64().values());
    } else {
      REQUIRE(a.i64().values() == b.i64().values());
    }
  }
}

TEST_CASE("eval reports the relative errors and honors the shared code path") {
  const auto& w = ws();
  // Identity maps: evaluate the truth against itself.
  fs::create_directories(w / "maps_truth");
  fs::copy_file(w / "data/truth_t1.mrfa", w / "maps_truth/t1.mrfa",
                fs::copy_options::overwrite_existing);
  fs::copy_file(w / "data/truth_t2.mrfa", w / "maps_truth/t2.mrfa",
                fs::copy_options::overwrite_existing);
  REQUIRE(run("eval --maps " + (w / "maps_truth") + " --truth " + (w / "data") + " --out " +
              (w / "eval_zero.csv")) == 0);
  const std::string csv = slurp_text(w / "eval_zero.csv");
  REQUIRE(csv.find("err_t1,0.0000000000e+00") != std::string::npos);
  REQUIRE(csv.find("err_t2,0.0000000000e+00") != std::string::npos);

  // 1.1x maps give exactly 0.1.
  const auto t1 = mrf::read_array(w / "data/truth_t1.mrfa");
  mrf::RealArray scaled1(t1.shape);
  for (std::size_t i = 0; i < scaled1.size(); ++i) scaled1[i] = 1.1 * t1.f64()[i];
  const auto t2 = mrf::read_array(w / "data/truth_t2.mrfa");
  mrf::RealArray scaled2(t2.shape);
  for (std::size_t i = 0; i < scaled2.size(); ++i) scaled2[i] = 1.1 * t2.f64()[i];
  fs::create_directories(w / "maps_scaled");
  mrf::write_array(w / "maps_scaled/t1.mrfa", scaled1);
  mrf::write_array(w / "maps_scaled/t2.mrfa", scaled2);
  REQUIRE(run("eval --maps " + (w / "maps_scaled") + " --truth " + (w / "data") + " --out " +
              (w / "eval_scaled.csv")) == 0);
  const std::string csv2 = slurp_text(w / "eval_scaled.csv");
  REQUIRE(csv2.find("err_t1,1.0000000000e-01") != std::string::npos);
}

TEST_CASE("render produces deterministic PNG bytes and validates its range") {
  const auto& w = ws();
  REQUIRE(run("render --map " + (w / "data/truth_t1.mrfa") + " --range 0:2000 --out " +
              (w / "t1.png")) == 0);
  REQUIRE(run("render --map " + (w / "data/truth_t1.mrfa") + " --range 0:2000 --out " +
              (w / "t1_again.png")) == 0);
  REQUIRE(slurp(w / "t1.png") == slurp(w / "t1_again.png"));
  REQUIRE(slurp(w / "t1.png").size() > 8);

  REQUIRE(run("render --map " + (w / "data/truth_t1.mrfa") + " --range 5:5 --out " +
              (w / "bad.png")) == 2);
  REQUIRE(run("render --map /no/such.mrfa --range 0:1 --out " + (w / "bad.png")) == 1);
}

TEST_CASE("sweep runs a two-method spec, reports failures, and reproduces") {
  const auto& w = ws();
  {
    std::ofstream spec(w / "spec.json");
    spec << R"({"nx":16,"ny":16,"lengths":[60],"noise":[0.001],
                "methods":["classical","gfb-mrf","bogus"],
                "R":4,"k":6,"r":12,"kmax":3,"seed":5})";
  }
  REQUIRE(run("sweep --spec " + (w / "spec.json") + " --out " + (w / "sweep1")) == 0);
  const std::string csv = slurp_text(w / "sweep1/results.csv");
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 cells
  REQUIRE(csv.find("classical,60") != std::string::npos);
  REQUIRE(csv.find("gfb-mrf,60") != std::string::npos);
  REQUIRE(csv.find("failed:") != std::string::npos);

  REQUIRE(run("sweep --spec " + (w / "spec.json") + " --out " + (w / "sweep2")) == 0);
  // CSV identical apart from the wall_ms column.
  auto strip = [](const std::string& text) {
    std::string out;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(start, end - start);
      std::size_t pos = 0;
      for (int c = 0; c < 6 && pos != std::string::npos; ++c) pos = line.find(',', pos + 1);
      if (pos != std::string::npos) {
        const auto next = line.find(',', pos + 1);
        line.erase(pos, (next == std::string::npos ? line.size() : next) - pos);
      }
      out += line + "\n";
      start = end + 1;
    }
    return out;
  };
  REQUIRE(strip(csv) == strip(slurp_text(w / "sweep2/results.csv")));

  // Map containers are byte-identical across reruns.
  for (const auto& entry : fs::directory_iterator(w / "sweep1")) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    REQUIRE(slurp((entry.path() / "t1.mrfa").string()) ==
            slurp((fs::path(w / "sweep2") / name / "t1.mrfa").string()));
  }
}

TEST_CASE("usage errors exit with code 2") {
  REQUIRE(run("") == 2);
  REQUIRE(run("frobnicate --x 1") == 2);
  REQUIRE(run("recon --method gfb-mrf") == 2);  // missing required flags
}
