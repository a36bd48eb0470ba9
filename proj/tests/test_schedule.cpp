#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>

#include "mrf/schedule.hpp"

using namespace mrf;

TEST_CASE("schedules are deterministic per seed") {
  const auto a = make_schedule(3000, 7);
  const auto b = make_schedule(3000, 7);
  REQUIRE(a.fa_deg == b.fa_deg);
  REQUIRE(a.tr_ms == b.tr_ms);

  const auto c = make_schedule(3000, 8);
  REQUIRE(a.fa_deg != c.fa_deg);
}

TEST_CASE("schedule envelope stays inside the sequence ranges") {
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    const auto s = make_schedule(2400, seed);
    REQUIRE(s.ti_ms == 21.0);
    REQUIRE(s.te_ms == 2.0);
    const auto [fa_min, fa_max] = std::minmax_element(s.fa_deg.begin(), s.fa_deg.end());
    REQUIRE(*fa_min >= 0.0);
    REQUIRE(*fa_max <= 74.0);
    const auto [tr_min, tr_max] = std::minmax_element(s.tr_ms.begin(), s.tr_ms.end());
    REQUIRE(*tr_min >= 12.1);
    REQUIRE(*tr_max <= 15.0);
  }
}

TEST_CASE("a shorter schedule is a prefix of a longer one") {
  const auto full = make_schedule(3000, 7);
  const auto head = make_schedule(600, 7);
  for (int i = 0; i < 600; ++i) {
    REQUIRE(head.fa_deg[i] == full.fa_deg[i]);
    REQUIRE(head.tr_ms[i] == full.tr_ms[i]);
  }
}

TEST_CASE("schedules persist and reload through containers") {
  const auto dir = std::filesystem::temp_directory_path() / "mrf_schedule_tests";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "sched.mrfa").string();

  const auto s = make_schedule(500, 11);
  write_schedule(path, s);
  const auto back = read_schedule(path);
  REQUIRE(back.L == s.L);
  REQUIRE(back.seed == s.seed);
  REQUIRE(back.fa_deg == s.fa_deg);
  REQUIRE(back.tr_ms == s.tr_ms);
  REQUIRE(back.ti_ms == s.ti_ms);
  REQUIRE(back.te_ms == s.te_ms);
}
