#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <numeric>

#include "dflsim/model_pipeline.hpp"
#include "dflsim/models.hpp"
#include "dflsim/synthesis.hpp"
#include "fixtures.hpp"

using namespace dflsim;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

Dataset tiny_from(const std::vector<std::vector<Cell>>& rows) {
  std::vector<SurveyRecord> recs;
  for (std::size_t i = 0; i < rows.size(); ++i) recs.push_back(fixtures::record("r" + std::to_string(i), rows[i]));
  return Dataset(fixtures::tiny_codebook(), std::move(recs));
}

/// Single-stratum dataset of n records over tiny_codebook.
Dataset single_stratum(std::size_t n) {
  std::vector<std::vector<Cell>> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back({0, 0, 0, 30, 0, 0, 0, 0});
  return tiny_from(rows);
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Preprocess, NumericMeanImputation) {
  const auto ds = tiny_from({{0, 0, 0, 2, 0, 0, 0, 0}, {0, 0, 0, 4, 0, 0, 0, 0}, {0, 0, 0, std::nullopt, 0, 0, 0, 0}});
  const auto plan = fit_preprocess(ds.codebook(), ds.records(), all_rows(3));
  const auto* e = plan.encoding_for(ds.codebook().index_of("age"));
  ASSERT_TRUE(e);
  EXPECT_EQ(e->impute_value, 3.0);
  const auto x = apply_preprocess(plan, ds.records());
  EXPECT_EQ(x(2, e->first_column), 3.0);
}

TEST(Preprocess, CategoricalModeAndLexicographicTie) {
  const auto ds = tiny_from({{0, 0, 0, 1, 0, 0, 0, 0}, {0, 0, 1, 1, 0, 0, 0, 0}, {0, 1, 0, 1, 0, 0, 0, 0},
                             {0, 1, std::nullopt, 1, 0, 0, 0, 0}});
  const auto plan = fit_preprocess(ds.codebook(), ds.records(), all_rows(4));
  // area {Rural, Rural, Urban} -> Rural; gender {F, F, M, M} tie -> Female
  EXPECT_EQ(plan.encoding_for(ds.codebook().index_of("area"))->impute_category, 0);
  EXPECT_EQ(plan.encoding_for(ds.codebook().index_of("gender"))->impute_category, 0);

  auto cb_fields = fixtures::tiny_codebook().fields();
  cb_fields[1].categories = {"b", "a"};  // label order differs from index order
  const Codebook cb("swap", cb_fields);
  const Dataset ds2(cb, ds.records());
  const auto plan2 = fit_preprocess(cb, ds2.records(), all_rows(4));
  EXPECT_EQ(plan2.encoding_for(1)->impute_category, 1);  // "a"
}

TEST(Preprocess, UnseenCategoryIsAllZeros) {
  const auto ds = tiny_from({{0, 0, 0, 1, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1, 1, 1}, {2, 0, 0, 1, 0, 0, 0, 0}});
  const auto plan = fit_preprocess(ds.codebook(), ds.records(), {0, 1});
  const auto* e = plan.encoding_for(0);
  EXPECT_EQ(e->width, 2u);
  const auto x = apply_preprocess(plan, ds.records());
  EXPECT_EQ(x(0, e->first_column), 1.0);
  EXPECT_EQ(x(0, e->first_column + 1), 0.0);
  EXPECT_EQ(x(2, e->first_column), 0.0);
  EXPECT_EQ(x(2, e->first_column + 1), 0.0);
}

TEST(Preprocess, NoMissingEntriesAndOrderIndependence) {
  const auto ds = fixtures::random_tiny(200, 9, 0.2);
  auto rows = all_rows(200);
  const auto a = fit_preprocess(ds.codebook(), ds.records(), rows);
  std::reverse(rows.begin(), rows.end());
  const auto b = fit_preprocess(ds.codebook(), ds.records(), rows);
  EXPECT_TRUE(a == b);
  const auto x = apply_preprocess(a, ds.records());
  for (double v : x.values) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(x.cols, a.width());
}

TEST(Preprocess, EntirelyMissingFieldWarns) {
  const auto ds = tiny_from({{0, 0, 0, std::nullopt, 0, 0, 0, 0}, {0, 0, 0, std::nullopt, 0, 0, 0, 0}});
  Warnings w;
  const auto plan = fit_preprocess(ds.codebook(), ds.records(), all_rows(2), "fit", &w);
  EXPECT_EQ(plan.encoding_for(3)->impute_value, 0.0);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("age"), std::string::npos);
}

TEST(Preprocess, PlanJsonRoundTrip) {
  const auto ds = fixtures::random_tiny(50, 2, 0.1);
  const auto plan = fit_preprocess(ds.codebook(), ds.records(), all_rows(50));
  const auto back = PreprocessPlan::from_json(plan.to_json());
  EXPECT_TRUE(back == plan);
  EXPECT_EQ(back.fingerprint(), plan.fingerprint());
}

TEST(Split, SingleStratumOfTen) {
  const auto ds = single_stratum(10);
  SplitSpec spec;
  spec.seed = 3;
  const auto s = stratified_split(ds, spec);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_EQ(s.train.size(), 8u);
}

TEST(Split, TableOneCounts) {
  const auto ds = synthesize_dataset(appendix_a_spec(), 7);
  SplitSpec spec;
  spec.seed = 7;
  const auto s = stratified_split(ds, spec);
  std::vector<std::size_t> per(7, 0), total(7, 0);
  for (auto r : s.test) ++per[static_cast<std::size_t>(ds.country_of(r))];
  for (std::size_t r = 0; r < ds.size(); ++r) ++total[static_cast<std::size_t>(ds.country_of(r))];
  for (std::size_t c = 0; c < 7; ++c)
    EXPECT_LE(std::abs(static_cast<double>(per[c]) - 0.2 * static_cast<double>(total[c])), 1.0);
  EXPECT_TRUE(per[0] == 335 || per[0] == 336);
  // partition
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, all_rows(ds.size()));
  // determinism
  const auto again = stratified_split(ds, spec);
  EXPECT_EQ(again.test, s.test);
  spec.seed = 8;
  EXPECT_NE(stratified_split(ds, spec).test, s.test);
}

TEST(Split, StratumSmallerThanFolds) {
  const auto ds = single_stratum(9);
  SplitSpec spec;
  EXPECT_THROW(stratified_split(ds, spec), ValidationError);
  spec.folds = 3;
  EXPECT_NO_THROW(stratified_split(ds, spec));
}

TEST(Split, SpecValidation) {
  SplitSpec spec;
  spec.test_fraction = 0;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.test_fraction = 1;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.test_fraction = 0.2;
  spec.folds = 1;
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Folds, BalancedPerStratum) {
  const auto ds = fixtures::random_tiny(503, 4);
  SplitSpec spec;
  spec.seed = 1;
  const auto rows = all_rows(ds.size());
  const auto folds = assign_folds(ds, rows, spec);
  std::vector<std::size_t> size(10, 0);
  std::vector<std::vector<std::size_t>> per(3, std::vector<std::size_t>(10, 0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ++size[static_cast<std::size_t>(folds[i])];
    ++per[static_cast<std::size_t>(ds.country_of(i))][static_cast<std::size_t>(folds[i])];
  }
  EXPECT_LE(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()), 1u);
  for (const auto& p : per) EXPECT_LE(*std::max_element(p.begin(), p.end()) - *std::min_element(p.begin(), p.end()), 1u);
  EXPECT_EQ(assign_folds(ds, rows, spec), folds);
}

namespace {

auto linear_fit = [](const FeatureMatrix& x, const std::vector<double>& y) { return fit_linear(x, y); };

}  // namespace

TEST(CrossValidate, NoiselessLinearTarget) {
  const auto ds = fixtures::random_tiny(300, 5, 0.05);
  // country is never missing, so this target is exactly linear in its indicators
  std::vector<double> y(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) y[i] = 2.0 + 3.0 * ds.country_of(i);
  SplitSpec spec;
  spec.seed = 2;
  const auto rows = all_rows(ds.size());
  const auto cv = cross_validate(ds, rows, y, linear_fit, spec);
  ASSERT_EQ(cv.fold_r2.size(), 10u);
  for (const auto& r : cv.fold_r2) {
    ASSERT_TRUE(r);
    EXPECT_NEAR(*r, 1.0, 1e-9);
  }
  EXPECT_NEAR(*cv.std, 0.0, 1e-9);
}

TEST(CrossValidate, IndependentTargetNotPredictive) {
  const auto ds = fixtures::random_tiny(400, 6);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise;
  std::vector<double> y(ds.size());
  for (auto& v : y) v = noise(rng);
  SplitSpec spec;
  spec.seed = 2;
  const auto cv = cross_validate(ds, all_rows(ds.size()), y, linear_fit, spec);
  EXPECT_LE(*cv.mean, 0.0);
}

TEST(CrossValidate, DegenerateFoldExcluded) {
  const auto ds = fixtures::random_tiny(60, 6);
  std::vector<double> y(ds.size(), 5.0);
  SplitSpec spec;
  spec.folds = 3;
  const auto cv = cross_validate(ds, all_rows(ds.size()), y, linear_fit, spec);
  for (const auto& r : cv.fold_r2) EXPECT_FALSE(r);
  EXPECT_FALSE(cv.mean);
  EXPECT_EQ(cv.warnings.size(), 3u);
}

TEST(CrossValidate, LeakageCanary) {
  const auto base = fixtures::random_tiny(300, 12, 0.1);
  const auto rows = all_rows(base.size());
  std::vector<double> y(base.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i % 7);
  SplitSpec spec;
  spec.seed = 4;
  const auto ref = cross_validate(base, rows, y, linear_fit, spec);
  const std::size_t age = base.codebook().index_of("age");
  for (int k = 0; k < spec.folds; ++k) {
    auto recs = base.records();
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (ref.fold_of[i] == k) {
        recs[i].responses[age] = 1e9;
        break;
      }
    const Dataset ds(base.codebook(), recs);
    const auto cv = cross_validate(ds, rows, y, linear_fit, spec);
    ASSERT_EQ(cv.fold_of, ref.fold_of);
    // the plan scoring fold k never saw the planted value
    EXPECT_TRUE(cv.plans[static_cast<std::size_t>(k)] == ref.plans[static_cast<std::size_t>(k)]);
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (ref.fold_of[i] != k && recs[i].responses[age]) {
        sum += *recs[i].responses[age];
        ++n;
      }
    const double oracle = sum / static_cast<double>(n);
    const double fitted = cv.plans[static_cast<std::size_t>(k)].encoding_for(age)->impute_value;
    EXPECT_TRUE(bit_equal(fitted, ref.plans[static_cast<std::size_t>(k)].encoding_for(age)->impute_value));
    EXPECT_NEAR(fitted, oracle, 1e-9);
    // every other fold trains on fold k and does see it
    for (int j = 0; j < spec.folds; ++j)
      if (j != k) {
        EXPECT_GT(cv.plans[static_cast<std::size_t>(j)].encoding_for(age)->impute_value, 1e6);
      }
  }
}
