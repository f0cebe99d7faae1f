#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "gof/numerics.hpp"
#include "gof/simulation.hpp"

using namespace gof;

namespace {

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_CASE("cell keys ignore alpha and distinguish the rest") {
  const auto t = study_truth(Family::Laplace);
  const auto k = cell_key(NullFamily::Normal, t, 100);
  CHECK(k == cell_key(NullFamily::Normal, t, 100));
  CHECK(k != cell_key(NullFamily::Logistic, t, 100));
  CHECK(k != cell_key(NullFamily::Normal, t, 200));
  CHECK(k != cell_key(NullFamily::Normal, study_truth(Family::Cauchy), 100));
  CHECK(k != cell_key(NullFamily::Normal, Distribution::laplace(2.0, 5.5), 100));
}

TEST_CASE("study truths") {
  CHECK(study_truth(Family::Cauchy) == Distribution::cauchy(2.0, 5.0));
  CHECK(study_truth(Family::NormalMixture) == Distribution::normal_mixture(2.0, 5.0, 0.9, 15.0));
}

TEST_CASE("replications share one sample across methods") {
  const auto s = replicate(NullFamily::Normal, study_truth(Family::Normal), 64, 42, 3);
  REQUIRE(s.kmt);
  REQUIRE(s.el1);
  REQUIRE(s.el2);
  CHECK(s.el1_df == 3);
  CHECK(s.el2_df == 4);
  const auto again = replicate(NullFamily::Normal, study_truth(Family::Normal), 64, 42, 3);
  CHECK(*again.kmt == *s.kmt);
  CHECK(*again.el2 == *s.el2);
  const auto flags = decide(s, 0.05);
  CHECK(*flags[0] == (*s.kmt > 2.24));
}

TEST_CASE("small samples skip the EL methods") {
  const auto s = replicate(NullFamily::Normal, study_truth(Family::Normal), 20, 1, 0);
  CHECK(s.kmt);
  CHECK_FALSE(s.el1);
  CHECK_FALSE(s.el2);
}

TEST_CASE("aggregate counts failures outside the denominator") {
  std::vector<ReplicationFlags> flags{
      {true, false, std::nullopt}, {false, false, true}, {true, std::nullopt, true}};
  const auto r = aggregate(flags);
  CHECK(r[Method::KMT].rejections == 2);
  CHECK(r[Method::KMT].effective == 3);
  CHECK(r[Method::KMT].rate == doctest::Approx(2.0 / 3.0));
  CHECK(r[Method::EL1].failures == 1);
  CHECK(r[Method::EL1].rate == 0.0);
  CHECK(r[Method::EL2].effective == 2);
  CHECK(r[Method::EL2].rate == 1.0);
  CHECK(r[Method::EL2].std_error == 0.0);
}

TEST_CASE("cell results do not depend on the thread count") {
  SimulationCell cell;
  cell.null_family = NullFamily::Logistic;
  cell.truth = study_truth(Family::StudentT5);
  cell.n = 60;
  cell.replications = 24;
  cell.master_seed = 9;
  const auto a = run_cell(cell, 1), b = run_cell(cell, 3);
  for (auto m : kAllMethods) {
    CHECK(a[m].rejections == b[m].rejections);
    CHECK(a[m].effective == b[m].effective);
  }
  cell.alpha = 0.1;
  CHECK_THROWS_AS(run_cell(cell), DomainError);
}

TEST_CASE("config parsing names the offending key") {
  const std::string good = R"({"nulls": ["normal"], "truths": ["laplace", {"family": "mtn",
      "location": 0, "scale": 1, "weight": 0.8, "second_scale": 3}], "n": [50],
      "alphas": [0.05], "replications": 10, "seed": 5})";
  const auto c = StudyConfig::from_json(good);
  CHECK(c.truths.size() == 2);
  CHECK(c.truths[1].weight() == 0.8);
  CHECK(c.seed == 5);

  auto key_of = [](const std::string& text) {
    try {
      StudyConfig::from_json(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  CHECK(key_of(R"({"nulls": ["normal"], "truths": ["normal"], "n": [50], "alphas": [0.05]})") ==
        "replications");
  CHECK(key_of(R"({"nulls": ["cauchy"], "truths": ["normal"], "n": [50], "alphas": [0.05],
      "replications": 5})") == "nulls");
  CHECK(key_of(R"({"nulls": ["normal"], "truths": ["normal"], "n": [20], "alphas": [0.05],
      "replications": 5})") == "n");
  CHECK(key_of(R"({"nulls": ["normal"], "truths": ["normal"], "n": [50], "alphas": [0.1],
      "replications": 5})") == "alphas");
  CHECK(key_of("[1, 2") != "<none>");
}

TEST_CASE("default grids") {
  const auto p = StudyConfig::paper_defaults();
  CHECK(p.replications == 1000);
  CHECK(p.nulls.size() * p.truths.size() * p.ns.size() * p.alphas.size() == 96);
  CHECK(StudyConfig::desk().replications == 200);
}

TEST_CASE("full grid table layout and determinism") {
  auto config = StudyConfig::paper_defaults(11);
  config.replications = 2;
  const auto a = run_study(config, 1);
  CHECK(a.rows.size() == 96);
  const auto csv = a.to_csv();
  CHECK(count_lines(csv) == 1 + 96 * 3);
  CHECK(csv.rfind("null,truth,n,alpha,method,kind,rate,stderr,rejections,effective,failures,"
                  "replications,seed\n", 0) == 0);
  CHECK(run_study(config, 2).to_csv() == csv);

  // The null's own family comes first and is marked as a level row.
  CHECK(a.rows.front().is_level);
  CHECK(a.rows.front().truth.family() == Family::Normal);
  const auto text = a.to_text();
  CHECK(text.find("H0: F = normal") != std::string::npos);
  CHECK(text.find("H0: F = logistic") != std::string::npos);
}
