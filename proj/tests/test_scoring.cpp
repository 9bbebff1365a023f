#include <doctest.h>

#include <algorithm>

#include "srcsel/error.hpp"
#include "srcsel/scoring.hpp"
#include "srcsel/random.hpp"
#include "support/fixtures.hpp"

using namespace srcsel;
using namespace srcsel::testing;

namespace {

LabelSet labels_of(const std::string& id) {
  LabelSet s;
  for (const auto& [l, n] : table1_counts(id)) s.insert(LabelId(l));
  return s;
}

ClassCounts counts_of(const std::string& id) {
  ClassCounts c;
  for (const auto& [l, n] : table1_counts(id)) c[LabelId(l)] = n;
  return c;
}

std::map<std::string, std::size_t> table1_sample_counts() {
  std::map<std::string, std::size_t> m;
  for (const auto& id : table1_datasets()) m[id] = table1_samples(id);
  return m;
}

// Reference dc-1 row. The jy-381-4 zero and the diagonal are degenerate.
std::vector<RowEntry> dc1_row() {
  return {{"dc-1", 0.0, true},          {"jy-381-2", 13.2222, false}, {"jy-381-4", 0.0, true},
          {"lc-101", 3.1342, false},    {"lc-201", 7.1206, false},    {"nj-101", 2.5852, false},
          {"nj-201", 8.7600, false},    {"xh-1", 6.2698, false},      {"xh-2", 13.6900, false},
          {"xh-3", 6.1870, false},      {"xh-4", 13.4656, false}};
}

DatasetSignature sig(std::vector<Color> c, std::vector<double> w, std::string id) {
  DatasetSignature s;
  s.centroids = std::move(c);
  s.weights = std::move(w);
  s.dataset_id = std::move(id);
  return s;
}

}  // namespace

TEST_CASE("overlap of reference label spaces") {
  CHECK(overlap(labels_of("dc-1"), labels_of("lc-101")) == 6);
  CHECK(overlap(labels_of("dc-1"), labels_of("jy-381-4")) == 1);
  CHECK(overlap({LabelId("a")}, {LabelId("b")}) == 0);
}

TEST_CASE("compose_score arithmetic and degeneracy") {
  ClassCounts src{{LabelId("a"), 1}, {LabelId("b"), 3}, {LabelId("z"), 50}};
  const LabelSet target{LabelId("a"), LabelId("b"), LabelId("q")};
  const auto s = compose_score("t", "s", 100.0, src, target, 1.0);
  CHECK(s.overlap == 2);
  CHECK(s.delta == doctest::Approx(0.25));
  CHECK(s.score == doctest::Approx(100.0 * 0.25 / 3.0));
  CHECK_FALSE(s.degenerate);

  const auto jy = compose_score("dc-1", "jy-381-4", 42.0, counts_of("jy-381-4"), labels_of("dc-1"), 1.0);
  CHECK(jy.delta == 0.0);
  CHECK(jy.score == 0.0);
  CHECK(jy.degenerate);

  const auto none = compose_score("t", "s", 5.0, src, {LabelId("q")}, 1.0);
  CHECK(none.overlap == 0);
  CHECK(none.score == 0.0);
  CHECK(none.degenerate);
  CHECK_THROWS_AS(compose_score("t", "s", 5.0, src, {LabelId("q")}, 0.0), std::domain_error);

  CHECK(restricted_counts(src, {LabelId("a"), LabelId("q")}) == ClassCounts{{LabelId("a"), 1}});
}

TEST_CASE("score is monotone in each factor") {
  ClassCounts low{{LabelId("a"), 1}, {LabelId("b"), 3}};
  ClassCounts high{{LabelId("a"), 1}, {LabelId("b"), 9}};
  const LabelSet two{LabelId("a"), LabelId("b")};
  const auto base = compose_score("t", "s", 10, low, two, 1.0);
  CHECK(compose_score("t", "s", 20, low, two, 1.0).score > base.score);
  CHECK(compose_score("t", "s", 10, high, two, 1.0).score > base.score);

  // [1,1,3,3] has the same delta as [1,3], so only the overlap grows.
  ClassCounts four{{LabelId("a"), 1}, {LabelId("b"), 3}, {LabelId("c"), 1}, {LabelId("d"), 3}};
  const LabelSet all{LabelId("a"), LabelId("b"), LabelId("c"), LabelId("d")};
  const auto wider = compose_score("t", "s", 10, four, all, 1.0);
  CHECK(wider.delta == doctest::Approx(base.delta));
  CHECK(wider.score < base.score);
}

TEST_CASE("select_source on the reference dc-1 row") {
  const auto r = select_source("dc-1", dc1_row(), table1_sample_counts());
  REQUIRE(r.candidates.size() == 3);
  CHECK(r.candidates[0].source_id == "nj-101");
  CHECK(r.candidates[1].source_id == "lc-101");
  CHECK(r.candidates[2].source_id == "xh-3");
  CHECK(r.candidates[2].score == doctest::Approx(6.187));
  CHECK(r.chosen == "lc-101");

  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    auto row = dc1_row();
    rng.shuffle(row);
    const auto p = select_source("dc-1", row, table1_sample_counts());
    CHECK(p.chosen == "lc-101");
    CHECK(p.candidates.size() == 3);
    for (const auto& c : p.candidates) CHECK(c.source_id != "jy-381-4");
  }
}

TEST_CASE("select_source edge rules") {
  const std::map<std::string, std::size_t> n{{"a", 10}, {"b", 50}, {"c", 5}};
  const auto one = select_source("t", {{"a", 0, true}, {"b", 2.0, false}}, n);
  CHECK(one.chosen == "b");
  CHECK(one.candidates.size() == 1);

  const auto tie = select_source("t", {{"c", 1.0, false}, {"a", 1.0, false}}, n);
  CHECK(tie.candidates[0].source_id == "a");

  CHECK_THROWS_AS(select_source("t", {{"a", 0, true}, {"t", 0.0, false}}, n), NoValidSourceError);
}

TEST_CASE("score_matrix has a zero diagonal and follows input order") {
  DatasetManifest ma = count_manifest("a", {{"y_1", 3}, {"y_2", 1}});
  DatasetManifest mb = count_manifest("b", {{"y_1", 2}, {"y_2", 2}, {"y_3", 5}});
  DatasetManifest mc = count_manifest("c", {{"y_1", 8}, {"y_2", 1}});
  const auto sa = sig({{0, 0, 0}, {200, 100, 50}}, {0.5, 0.5}, "a");
  const auto sb = sig({{0, 0, 0}, {250, 150, 100}}, {0.4, 0.6}, "b");
  const auto sc = sig({{10, 10, 10}}, {1.0}, "c");
  const std::vector<ScoredDataset> ds{{&ma, &sa}, {&mb, &sb}, {&mc, &sc}};

  const auto m1 = score_matrix(ds, 1.0, 1);
  const auto m3 = score_matrix(ds, 1.0, 3);
  CHECK(m1.ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(m1.source_ids == m1.ids);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m1.rows[i][i].score == 0.0);
    CHECK(m1.rows[i][i].degenerate);
    for (std::size_t j = 0; j < 3; ++j) CHECK(m1.rows[i][j].score == m3.rows[i][j].score);
  }
  const std::string csv = score_matrix_csv(m1);
  CHECK(csv.rfind("target,a,b,c\n", 0) == 0);
  CHECK(csv.find("a,0.0000,") != std::string::npos);

  const std::vector<ScoredDataset> same{{&ma, &sa}, {&ma, &sa}};
  CHECK_THROWS_AS(score_matrix(same, 1.0), std::invalid_argument);

  DatasetManifest ma2 = ma;
  ma2.dataset_id = "a2";
  auto sa2 = sa;
  sa2.dataset_id = "a2";
  const auto z = score_matrix({{&ma, &sa}, {&ma2, &sa2}}, 1.0);
  for (const auto& row : z.rows)
    for (const auto& e : row) CHECK(e.score == 0.0);
}
