#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mrf/errors.hpp"
#include "mrf/schedule.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Extended-phase-graph simulation of the FISP-MRF sequence: ideal 180
/// inversion, TI recovery, then per TR an RF pulse (constant phase, rotation
/// about y), relaxation to the echo where F0 is sampled, relaxation over the
/// TR remainder, and one dephasing-state shift from the unbalanced spoiler.
///
/// With the pulse phase fixed at 90 degrees the transition weights are real,
/// so fingerprints come out real-valued (signed through the inversion); they
/// are returned as complex for uniformity downstream.
inline std::vector<Cplx> epg_fingerprint(const SequenceSchedule& seq, double t1_ms, double t2_ms,
                                         double m0 = 1.0, int max_states = 0) {
  if (!(t2_ms > 0.0)) throw InvalidArgument("epg: T2 must be positive");
  if (t1_ms < t2_ms) throw InvalidArgument("epg: non-physical T1 < T2");
  if (m0 < 0.0) throw InvalidArgument("epg: M0 must be nonnegative");

  const int L = seq.L;
  const int K = (max_states > 0) ? max_states : std::min(L + 1, 101);

  // fp[n] = F(+n), fm[n] = conj(F(-n)), z[n] = Z(n); all real here.
  std::vector<double> fp(K, 0.0), fm(K, 0.0), z(K, 0.0);
  std::vector<double> fp2(K), fm2(K), z2(K);

  // Inversion then TI recovery.
  z[0] = -m0;
  const double e1_ti = std::exp(-seq.ti_ms / t1_ms);
  z[0] = m0 + (z[0] - m0) * e1_ti;

  const double e2_te = std::exp(-seq.te_ms / t2_ms);
  const double e1_te = std::exp(-seq.te_ms / t1_ms);

  std::vector<Cplx> signal(L);
  for (int i = 0; i < L; ++i) {
    const double a = deg2rad(seq.fa_deg[i]);
    const double ca = std::cos(a), sa = std::sin(a);
    const double c2 = std::cos(a / 2.0) * std::cos(a / 2.0);
    const double s2 = std::sin(a / 2.0) * std::sin(a / 2.0);

    for (int n = 0; n < K; ++n) {
      fp2[n] = c2 * fp[n] - s2 * fm[n] + sa * z[n];
      fm2[n] = -s2 * fp[n] + c2 * fm[n] + sa * z[n];
      z2[n] = -0.5 * sa * fp[n] - 0.5 * sa * fm[n] + ca * z[n];
    }
    fp.swap(fp2);
    fm.swap(fm2);
    z.swap(z2);

    // Relax to the echo and read F0.
    for (int n = 0; n < K; ++n) {
      fp[n] *= e2_te;
      fm[n] *= e2_te;
      z[n] *= e1_te;
    }
    z[0] += m0 * (1.0 - e1_te);
    signal[i] = Cplx(fp[0], 0.0);

    // Remainder of the TR, then the spoiler shifts every dephasing order by one.
    const double rem = seq.tr_ms[i] - seq.te_ms;
    const double e2_rem = std::exp(-rem / t2_ms);
    const double e1_rem = std::exp(-rem / t1_ms);
    for (int n = 0; n < K; ++n) {
      fp[n] *= e2_rem;
      fm[n] *= e2_rem;
      z[n] *= e1_rem;
    }
    z[0] += m0 * (1.0 - e1_rem);

    for (int n = K - 1; n >= 1; --n) fp[n] = fp[n - 1];
    for (int n = 0; n + 1 < K; ++n) fm[n] = fm[n + 1];
    fm[K - 1] = 0.0;
    fp[0] = fm[0];  // conj collapses: states are real
  }
  return signal;
}

}  // namespace mrf
