#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nniv/criticality.hpp>

using namespace nniv;

namespace {

ScanSettings coarse(double dalpha) {
  ScanSettings s;
  s.resolution = dalpha;
  return s;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("nniv_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("criterion targets parse and carry horizons", "[criticality]") {
  CHECK(CriterionTarget::parse("p1n").kind == TargetKind::EndToEnd);
  CHECK(CriterionTarget::parse("full").kind == TargetKind::FullMatrix);
  CHECK(CriterionTarget::end_to_end().horizon_for(20) == 40.0);
  CHECK(CriterionTarget::full_matrix().horizon_for(20) == 80.0);
  CHECK_THROWS_AS(CriterionTarget::parse("both"), validation_error);
}

TEST_CASE("two-spin criterion is zero for both targets", "[criticality]") {
  CHECK(criterion_value(2, 3.0, CriterionTarget::end_to_end()) == 0.0);
  CHECK(criterion_value(2, 3.0, CriterionTarget::full_matrix()) == 0.0);
}

TEST_CASE("full-matrix criterion dominates end-to-end on a shared horizon", "[criticality]") {
  const double t = 24.0;
  const double e2e = criterion_value(6, 3.0, CriterionTarget::end_to_end(), 0.05, t);
  const double full = criterion_value(6, 3.0, CriterionTarget::full_matrix(), 0.05, t);
  CHECK(full >= e2e - 1e-12);
}

TEST_CASE("twenty-spin end-to-end discrepancy at alpha 3 is far above epsilon", "[criticality]") {
  // frozen reference for the default grid
  const double v = criterion_value(20, 3.0, CriterionTarget::end_to_end());
  CHECK_THAT(v, Catch::Matchers::WithinRel(1.504342882869, 1e-9));
}

TEST_CASE("two-spin scan returns the floor", "[criticality]") {
  const AlphaCResult r = find_alpha_c(2, CriterionTarget::full_matrix());
  CHECK(r.alpha_c == 3.0);
  CHECK(r.alpha_ceiling == 11.0);
  CHECK(r.binding_j == 1);
  CHECK(r.binding_k == 1);
  CHECK(r.binding_value == 0.0);
}

TEST_CASE("alpha_c of the twenty-spin chain matches the frozen references", "[criticality]") {
  DecompositionCache cache;
  const AlphaCResult e2e = find_alpha_c(20, CriterionTarget::end_to_end(), {}, {}, &cache);
  CHECK_THAT(e2e.alpha_c, Catch::Matchers::WithinAbs(10.51, 1e-12));
  CHECK(e2e.alpha_ceiling == 19.0);
  CHECK(e2e.binding_j == 1);
  CHECK(e2e.binding_k == 20);

  const AlphaCResult full = find_alpha_c(20, CriterionTarget::full_matrix(), {}, {}, &cache);
  CHECK_THAT(full.alpha_c, Catch::Matchers::WithinAbs(12.02, 1e-12));
  const bool pair_ok = (full.binding_j == 5 && full.binding_k == 14) ||
                       (full.binding_j == 7 && full.binding_k == 16);
  CHECK(pair_ok);
  CHECK(full.mirror_j == 21 - full.binding_k);
  CHECK(full.mirror_k == 21 - full.binding_j);
  CHECK(full.binding_value >= full.epsilon);
}

TEST_CASE("the scan is floor correct around the threshold", "[criticality]") {
  DecompositionCache cache;
  const CriterionTarget target = CriterionTarget::end_to_end();
  const AlphaCResult r = find_alpha_c(10, target, {}, {}, &cache);
  REQUIRE(r.alpha_c > 3.0);
  CHECK(criterion_value(10, r.alpha_c - r.resolution, target, 0.05, {}, &cache) >= r.epsilon);
  CHECK(criterion_value(10, r.alpha_c, target, 0.05, {}, &cache) < r.epsilon);
  CHECK(criterion_value(10, r.alpha_c + 0.07, target, 0.05, {}, &cache) < r.epsilon);
}

TEST_CASE("halving the alpha resolution moves the threshold by at most one step",
          "[criticality]") {
  DecompositionCache cache;
  const double a1 =
      find_alpha_c(5, CriterionTarget::end_to_end(), coarse(0.02), {}, &cache).alpha_c;
  const double a2 =
      find_alpha_c(5, CriterionTarget::end_to_end(), coarse(0.01), {}, &cache).alpha_c;
  CHECK(std::abs(a1 - a2) <= 0.02 + 1e-12);
}

TEST_CASE("scans are deterministic", "[criticality]") {
  const AlphaCResult a = find_alpha_c(8, CriterionTarget::full_matrix(), coarse(0.05));
  const AlphaCResult b = find_alpha_c(8, CriterionTarget::full_matrix(), coarse(0.05));
  CHECK(a.alpha_c == b.alpha_c);
  CHECK(a.binding_j == b.binding_j);
  CHECK(a.binding_k == b.binding_k);
  CHECK(a.binding_value == b.binding_value);
}

TEST_CASE("an unreachable criterion reports a ceiling failure", "[criticality]") {
  // the cap sits well below the transition, so the scan must give up
  ScanSettings s = coarse(0.5);
  s.hard_cap = 6.0;
  CHECK_THROWS_AS(find_alpha_c(10, CriterionTarget::end_to_end(), s), numerical_error);
}

TEST_CASE("alpha_c grows with the chain length", "[criticality]") {
  DecompositionCache cache;
  const auto entries =
      alpha_c_vs_n({2, 5, 10, 20}, CriterionTarget::end_to_end(), coarse(0.05), &cache);
  REQUIRE(entries.size() == 4);
  for (const auto& e : entries) REQUIRE(e.result.has_value());
  CHECK(entries[0].result->alpha_c == 3.0);
  CHECK(entries[1].result->alpha_c < entries[2].result->alpha_c);
  CHECK(entries[2].result->alpha_c < entries[3].result->alpha_c);
}

TEST_CASE("sweeps keep going when one element fails", "[criticality]") {
  ScanSettings s = coarse(0.5);
  s.hard_cap = 6.0;  // below every transition in this sweep
  const auto entries = alpha_c_vs_n({2, 10, 12}, CriterionTarget::end_to_end(), s);
  REQUIRE(entries.size() == 3);
  REQUIRE(entries[0].result.has_value());  // n = 2 sits at the floor and survives
  CHECK(entries[0].result->alpha_c == 3.0);
  CHECK(!entries[1].result.has_value());
  CHECK(!entries[1].error.empty());
  CHECK(!entries[2].result.has_value());
}

TEST_CASE("horizon sweeps snap and match direct overrides", "[criticality]") {
  DecompositionCache cache;
  const auto entries = alpha_c_vs_t(5, {7.0, 10.0}, CriterionTarget::end_to_end(),
                                    coarse(0.05), &cache);
  REQUIRE(entries.size() == 2);
  REQUIRE(entries[0].result.has_value());
  CHECK(entries[0].result->horizon == Catch::Approx(7.0));
  const AlphaCResult direct =
      find_alpha_c(5, CriterionTarget::end_to_end(), coarse(0.05), 7.0, &cache);
  CHECK(entries[0].result->alpha_c == direct.alpha_c);
}

TEST_CASE("argmax map reports mirrored binding pairs", "[criticality]") {
  DecompositionCache cache;
  const auto records = argmax_transition_map({10, 20}, coarse(0.05), &cache);
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK(r.j_mirror == r.n + 1 - r.k);
    CHECK(r.k_mirror == r.n + 1 - r.j);
    CHECK(r.j <= r.k);
    CHECK(r.delta_j_value > 0.0);
  }
}

TEST_CASE("result cache stores and verifies records", "[criticality]") {
  TempDir tmp;
  const ResultCache rc(tmp.path);
  REQUIRE(rc.active());
  const nlohmann::json key = {{"cmd", "unit"}, {"n", 7}};
  CHECK(!rc.get(key).has_value());
  rc.put(key, nlohmann::json{{"x", 1.5}});
  const auto hit = rc.get(key);
  REQUIRE(hit.has_value());
  CHECK((*hit)["x"].get<double>() == 1.5);

  // a record whose stored key disagrees with the lookup key is ignored, as if
  // the hash had collided
  const nlohmann::json other_key = {{"cmd", "unit"}, {"n", 8}};
  {
    std::ofstream out(rc.path_for(other_key));
    out << nlohmann::json{{"key", key}, {"payload", {{"x", 2.5}}}}.dump() << "\n";
  }
  CHECK(!rc.get(other_key).has_value());

  const ResultCache inactive = ResultCache::resolve("");
  if (!std::getenv("NNI_VALIDITY_CACHE")) CHECK(!inactive.active());
  const ResultCache from_flag = ResultCache::resolve(tmp.path.string());
  CHECK(from_flag.active());
  CHECK(from_flag.get(key).has_value());
}

TEST_CASE("result cache round trips sweep entries", "[criticality]") {
  TempDir tmp;
  const ResultCache rc(tmp.path);
  DecompositionCache cache;
  const auto count_files = [&] {
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(tmp.path)) {
      (void)e;
      ++files;
    }
    return files;
  };

  const auto first =
      alpha_c_vs_n({5}, CriterionTarget::end_to_end(), coarse(0.05), &cache, &rc);
  REQUIRE(first[0].result.has_value());
  CHECK(count_files() == 1);

  const auto second =
      alpha_c_vs_n({5}, CriterionTarget::end_to_end(), coarse(0.05), &cache, &rc);
  REQUIRE(second[0].result.has_value());
  CHECK(first[0].result->alpha_c == second[0].result->alpha_c);
  CHECK(first[0].result->binding_value == second[0].result->binding_value);
  CHECK(count_files() == 1);  // warm hit, no new record

  // a different target is a different key and lands in a second record
  const auto other =
      alpha_c_vs_n({5}, CriterionTarget::full_matrix(), coarse(0.05), &cache, &rc);
  REQUIRE(other[0].result.has_value());
  CHECK(count_files() == 2);
}
