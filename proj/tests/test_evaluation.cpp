#include <cmath>

#include "doctest.h"
#include "twostage/error.hpp"
#include "twostage/evaluation.hpp"
#include "twostage/report.hpp"
#include "twostage/simulator.hpp"

using namespace twostage;

namespace {

BenchmarkRow row(const std::string& id, ModelId m, double mean_ae, double median_ae, bool ok = true) {
  BenchmarkRow r;
  r.cascade_id = id;
  r.model = m;
  r.ok = ok;
  r.mean_ae = mean_ae;
  r.median_ae = median_ae;
  r.aic = 10 * mean_ae;
  return r;
}

}  // namespace

TEST_CASE("absolute error metrics") {
  const std::vector<double> actual{10, 20, 30, 40};
  const std::vector<double> pred{11, 18, 33, 50};
  const ErrorSummary e = absolute_errors(std::span<const double>(pred), actual);
  CHECK(e.mean == 4.0);
  CHECK(e.median == 2.5);

  const ErrorSummary perfect = absolute_errors(std::span<const double>(actual), actual);
  CHECK(perfect.mean == 0.0);
  CHECK(perfect.median == 0.0);

  const std::vector<double> shifted{10.5, 20.5, 30.5, 40.5};
  const ErrorSummary c = absolute_errors(std::span<const double>(shifted), actual);
  CHECK(c.mean == 0.5);
  CHECK(c.median == 0.5);

  const std::vector<double> short_pred{1, 2};
  CHECK_THROWS_AS(absolute_errors(std::span<const double>(short_pred), actual), Error);

  ForecastSeries s;
  for (double x : pred) s.bins.push_back({0, x});
  CHECK(absolute_errors(s, actual).mean == 4.0);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("bin counts") {
  Cascade c;
  c.t_max = 13;
  c.events = {{0.0, 5}, {2.0, 1}, {10.5, 1}, {11.5, 1}};
  CHECK(bin_counts(c, 10, 13, 1) == std::vector<double>{2, 3, 3});
  CHECK(bin_counts(c, 10, 13, 3) == std::vector<double>{3});
  Cascade quiet = c;
  quiet.events.resize(2);
  CHECK(bin_counts(quiet, 10, 13, 1) == std::vector<double>{1, 1, 1});
}

TEST_CASE("win flags and tie-break order") {
  std::vector<BenchmarkRow> rows{row("c", ModelId::lr, 1.0, 3.0), row("c", ModelId::rpp, 1.0, 2.0),
                                 row("c", ModelId::proposed, 0.1, 0.1, false), row("c", ModelId::tideh, 2.0, 2.0)};
  assign_wins(rows);
  CHECK(rows[1].win_mean);
  CHECK_FALSE(rows[0].win_mean);
  CHECK_FALSE(rows[2].win_mean);
  CHECK(rows[3].win_median);
  CHECK_FALSE(rows[1].win_median);
  int winners = 0;
  for (const auto& r : rows) winners += r.win_mean;
  CHECK(winners == 1);
}

TEST_CASE("aggregates are recomputable from rows") {
  std::vector<BenchmarkRow> all;
  for (int i = 0; i < 3; ++i) {
    std::vector<BenchmarkRow> one{row("c" + std::to_string(i), ModelId::proposed, 1.0 + i, 1.0),
                                  row("c" + std::to_string(i), ModelId::tideh, 2.0, 0.5, i != 2)};
    assign_wins(one);
    all.insert(all.end(), one.begin(), one.end());
  }
  const auto agg = aggregate(all, {ModelId::proposed, ModelId::tideh});
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].n_ok == 3);
  CHECK(agg[0].mean_mean_ae == 2.0);
  CHECK(agg[0].win_fraction_mean == 1.0);
  CHECK(agg[0].win_fraction_median == doctest::Approx(1.0 / 3));
  CHECK(agg[1].n_ok == 2);
  CHECK(agg[1].n_failed == 1);
  CHECK(agg[1].win_fraction_mean == 0.0);
  CHECK(agg[1].win_fraction_median == doctest::Approx(2.0 / 3));
  CHECK(aggregate(all, {ModelId::proposed, ModelId::tideh}) == agg);
}

TEST_CASE("head to head and summary rendering") {
  EvalReport empty;
  const std::string header = render_summary(empty);
  CHECK(header.find('\n') == header.size() - 1);
  CHECK(render_summary(empty) == header);
  CHECK(aggregate_csv(empty).find('\n') == aggregate_csv(empty).size() - 1);

  EvalReport r;
  r.models = {ModelId::proposed, ModelId::tideh};
  for (int i = 0; i < 4; ++i) {
    std::vector<BenchmarkRow> one{row("c" + std::to_string(i), ModelId::proposed, 1.0, 1.0),
                                  row("c" + std::to_string(i), ModelId::tideh, i < 3 ? 2.0 : 0.5, 1.0, i != 0)};
    assign_wins(one);
    r.rows.insert(r.rows.end(), one.begin(), one.end());
  }
  r.aggregates = aggregate(r.rows, r.models);
  const HeadToHead h = head_to_head(r, ModelId::proposed, ModelId::tideh);
  CHECK(h.cascades == 4);
  CHECK(h.ae_wins == 3);
  CHECK(h.aic_compared == 3);
  CHECK(h.aic_wins == 2);
  CHECK(h.ae_fraction() == 0.75);
  const std::string s = render_summary(r);
  CHECK(s == render_summary(r));
  CHECK(s.find("tideh") != std::string::npos);
}

TEST_CASE("single-cascade benchmark") {
  SimConfig cfg;
  cfg.params = {0.0006, 12, 0.0018, 16, {}, 16};
  cfg.seed_followers = 3000000;
  cfg.mark_model = ConstantMarks{900};
  cfg.t_end = 48;
  const Cascade c = simulate(run_config(cfg, 4));
  REQUIRE(c.count_until(48) >= 300);
  const EvalReport r = run_benchmark(std::vector<Cascade>{c});
  REQUIRE(r.rows.size() == 4);
  CHECK(r.actual.size() == 1);
  CHECK(r.actual[0].counts.size() == 24);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.rows[i].ok);
    CHECK(r.rows[i].predicted.size() == 24);
    CHECK(r.rows[i].mean_ae >= 0);
  }
  CHECK_FALSE(r.rows[3].ok);
  CHECK(r.rows[3].message.find("two cascades") != std::string::npos);
  CHECK(aggregate_csv(r) == aggregate_csv(EvalReport{r.split, r.models, r.rows, {}, aggregate(r.rows, r.models)}));

  Cascade tiny = c;
  tiny.id = "tiny";
  tiny.events.resize(10);
  const EvalReport skip = run_benchmark(std::vector<Cascade>{tiny});
  CHECK(skip.rows.empty());
  REQUIRE(skip.skipped.size() == 1);
  CHECK(skip.skipped[0].cascade_id == "tiny");
}

TEST_CASE("parallel_for covers every index once and rethrows") {
  std::vector<int> hits(50, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 7) throw std::runtime_error("boom");
  }));
}
