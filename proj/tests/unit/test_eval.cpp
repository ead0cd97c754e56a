#include <doctest.h>

#include <algorithm>

#include "tuplex/eval.hpp"

using namespace tuplex;

namespace {

TupleRecord tuple(std::size_t base) {
  const auto s = [&](EntityType t, std::size_t off) { return EntitySpan{t, base + off, base + off + 1, "x"}; };
  return {s(EntityType::kMaterial, 0), s(EntityType::kProperty, 2), s(EntityType::kPropertyValue, 4), std::nullopt,
          std::nullopt};
}

std::vector<TupleRecord> tuples(std::size_t n, std::size_t offset = 0) {
  std::vector<TupleRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(tuple(10 * (i + offset)));
  return out;
}

}  // namespace

TEST_CASE("F1 from precision and recall") {
  CHECK(f1_score(0.951, 0.975) == doctest::Approx(0.963).epsilon(0.0005));
  CHECK(f1_score(0.893, 0.807) == doctest::Approx(0.848).epsilon(0.001));
  CHECK(f1_score(0, 0) == 0.0);
  CHECK(f1_score(1, 1) == 1.0);
}

TEST_CASE("count conventions") {
  const MetricTriple empty = Counts{0, 5, 0}.metrics();
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
  const MetricTriple none = Counts{}.metrics();
  CHECK(none.f1 == 0.0);
}

TEST_CASE("entity metrics") {
  SpansByType gold;
  gold[0] = {{EntityType::kMaterial, 0, 3, "abc"}, {EntityType::kMaterial, 5, 7, "de"}};
  gold[2] = {{EntityType::kPropertyValue, 9, 12, "123"}};
  SUBCASE("identical") {
    const auto m = entity_prf(gold, gold);
    CHECK(m[0].f1 == 1.0);
    CHECK(m[2].precision == 1.0);
    CHECK(m[1].f1 == 0.0);  // no spans on either side
  }
  SUBCASE("empty prediction") {
    const auto m = entity_prf(SpansByType{}, gold);
    CHECK(m[0].precision == 0.0);
    CHECK(m[0].recall == 0.0);
    CHECK(m[0].f1 == 0.0);
  }
  SUBCASE("offsets must match exactly and gold is consumed once") {
    SpansByType pred;
    pred[0] = {{EntityType::kMaterial, 0, 3, "abc"}, {EntityType::kMaterial, 0, 3, "abc"},
               {EntityType::kMaterial, 5, 6, "d"}};
    const TypeCounts c = entity_counts(pred, gold);
    CHECK(c[0] == Counts{3, 2, 1});
  }
}

TEST_CASE("tuple metrics") {
  SUBCASE("18 of 19") {
    const auto gold = tuples(19);
    auto pred = tuples(18);
    pred.push_back(tuple(5000));
    const MetricTriple m = tuple_prf(pred, gold);
    CHECK(m.precision == doctest::Approx(18.0 / 19));
    CHECK(m.recall == m.precision);
    CHECK(m.f1 == doctest::Approx(0.947).epsilon(0.0005));
  }
  SUBCASE("3 of 4 predicted, 5 gold") {
    const auto gold = tuples(5);
    auto pred = tuples(3);
    pred.push_back(tuple(7000));
    const MetricTriple m = tuple_prf(pred, gold);
    CHECK(m.precision == doctest::Approx(0.75));
    CHECK(m.recall == doctest::Approx(0.6));
    CHECK(m.f1 == doctest::Approx(2.0 / 3));
  }
  SUBCASE("identical") {
    const auto gold = tuples(4);
    CHECK(tuple_prf(gold, gold).f1 == 1.0);
  }
  SUBCASE("duplicates are removed before counting") {
    const auto gold = tuples(2);
    auto pred = tuples(2);
    pred.push_back(pred[0]);
    CHECK(tuple_counts(pred, gold) == Counts{2, 2, 2});
  }
  SUBCASE("absent slots must be absent on both sides") {
    const auto gold = tuples(1);
    auto pred = gold;
    pred[0].condition = EntitySpan{EntityType::kCondition, 90, 91, "c"};
    CHECK(tuple_counts(pred, gold).correct == 0);
  }
  SUBCASE("order invariant") {
    const auto gold = tuples(6);
    auto pred = tuples(4, 3);
    const Counts a = tuple_counts(pred, gold);
    std::reverse(pred.begin(), pred.end());
    auto rgold = gold;
    std::rotate(rgold.begin(), rgold.begin() + 2, rgold.end());
    CHECK(tuple_counts(pred, rgold) == a);
  }
}

TEST_CASE("reports") {
  EvalResult r;
  r.dataset = "1";
  r.config = "full";
  r.tuple = {19, 19, 18};
  r.per_type[0] = {41, 40, 39};

  SUBCASE("single row") {
    const std::vector<EvalResult> one = {r};
    const auto j = report_json(one);
    CHECK(j.at("results").size() == 1);
    CHECK_FALSE(j.contains("grid"));
    const std::string table = report_table(one);
    CHECK(table.find("0.947") != std::string::npos);
  }
  SUBCASE("json round trip") {
    const EvalResult back = result_from_json(result_to_json(r));
    CHECK(back.dataset == "1");
    CHECK(back.config == "full");
    CHECK(back.tuple == r.tuple);
    CHECK(back.per_type == r.per_type);
    const auto j = result_to_json(r);
    CHECK(j.at("tuple").at("f1").get<double>() == doctest::Approx(18.0 / 19));
  }
  SUBCASE("four configs by four datasets") {
    std::vector<EvalResult> all;
    for (const char* config : {"full", "no-intra", "no-inter", "no-allocation"}) {
      for (const char* dataset : {"1", "2", "3", "4"}) {
        EvalResult x = r;
        x.config = config;
        x.dataset = dataset;
        all.push_back(x);
      }
    }
    const auto j = report_json(all);
    const auto& grid = j.at("grid");
    CHECK(grid.at("datasets").size() == 4);
    CHECK(grid.at("configs").size() == 4);
    CHECK(grid.at("cells").size() == 4);
    for (const auto& row : grid.at("cells")) CHECK(row.size() == 4);
    CHECK(report_table(all).find("no-allocation") != std::string::npos);
  }
  SUBCASE("results accumulate") {
    EvalResult sum = r;
    sum += r;
    CHECK(sum.tuple == Counts{38, 38, 36});
  }
}
