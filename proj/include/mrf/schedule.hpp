#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrf/container.hpp"
#include "mrf/errors.hpp"
#include "mrf/rng.hpp"

namespace mrf {

/// FISP-MRF acquisition schedule: inversion pulse, TI delay, then L excitations
/// with per-TR flip angle and repetition time. FA lives in [0, 74] degrees and
/// TR in [12.1, 15.0] ms; TE is constant 2 ms and TI 21 ms.
struct SequenceSchedule {
  int L = 0;
  double ti_ms = 21.0;
  double te_ms = 2.0;
  std::vector<double> fa_deg;
  std::vector<double> tr_ms;
  std::uint64_t seed = 0;

  SequenceSchedule truncated(int new_len) const {
    if (new_len < 1 || new_len > L) throw InvalidArgument("schedule: bad truncation length");
    SequenceSchedule s = *this;
    s.L = new_len;
    s.fa_deg.resize(new_len);
    s.tr_ms.resize(new_len);
    return s;
  }
};

inline constexpr double kFaMaxDeg = 74.0;
inline constexpr double kTrMinMs = 12.1;
inline constexpr double kTrMaxMs = 15.0;

/// Seeded flip-angle/TR trains. The flip angles form a chain of sinusoidal
/// lobes with per-lobe random length and peak; TR is a slow two-tone
/// oscillation inside its band. Lobe parameters are drawn sequentially so a
/// shorter schedule is always a prefix of a longer one with the same seed.
inline SequenceSchedule make_schedule(int L, std::uint64_t seed) {
  if (L < 1) throw InvalidArgument("make_schedule: L must be >= 1");

  SequenceSchedule s;
  s.L = L;
  s.seed = seed;
  s.fa_deg.reserve(L);
  s.tr_ms.resize(L);

  Rng tr_rng(seed ^ 0x9e3779b97f4a7c15ull);
  const double q1 = tr_rng.uniform(150.0, 400.0);
  const double q2 = tr_rng.uniform(150.0, 400.0);
  const double p1 = tr_rng.uniform(0.0, 2.0 * kPi);
  const double p2 = tr_rng.uniform(0.0, 2.0 * kPi);
  for (int i = 0; i < L; ++i) {
    const double osc = 0.5 + 0.25 * std::sin(2.0 * kPi * i / q1 + p1) +
                       0.25 * std::sin(2.0 * kPi * i / q2 + p2);
    s.tr_ms[i] = kTrMinMs + (kTrMaxMs - kTrMinMs) * osc;
  }

  Rng fa_rng(seed);
  while (static_cast<int>(s.fa_deg.size()) < L) {
    const auto lobe_len = fa_rng.uniform_int(180, 280);
    const double peak = fa_rng.uniform(20.0, kFaMaxDeg);
    for (std::int64_t t = 0; t < lobe_len && static_cast<int>(s.fa_deg.size()) < L; ++t)
      s.fa_deg.push_back(peak * std::sin(kPi * static_cast<double>(t) / static_cast<double>(lobe_len)));
  }
  return s;
}

inline void write_schedule(const std::string& path, const SequenceSchedule& s) {
  RealArray a({s.L, 2});
  for (int i = 0; i < s.L; ++i) {
    a.at(i, 0) = s.fa_deg[i];
    a.at(i, 1) = s.tr_ms[i];
  }
  nlohmann::json meta{{"kind", "schedule"}, {"L", s.L},        {"seed", s.seed},
                      {"ti_ms", s.ti_ms},  {"te_ms", s.te_ms}};
  write_array(path, a, meta);
}

inline SequenceSchedule read_schedule(const std::string& path) {
  const ArrayFile f = read_array(path);
  if (f.dtype != "f64" || f.shape.size() != 2 || f.shape[1] != 2)
    throw FormatError("schedule: expected Lx2 f64 container: " + path);
  SequenceSchedule s;
  s.L = static_cast<int>(f.shape[0]);
  s.seed = f.meta.value("seed", 0ull);
  s.ti_ms = f.meta.value("ti_ms", 21.0);
  s.te_ms = f.meta.value("te_ms", 2.0);
  s.fa_deg.resize(s.L);
  s.tr_ms.resize(s.L);
  for (int i = 0; i < s.L; ++i) {
    s.fa_deg[i] = f.f64().at(i, 0);
    s.tr_ms[i] = f.f64().at(i, 1);
  }
  return s;
}

}  // namespace mrf
