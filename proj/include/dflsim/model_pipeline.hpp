#pragma once

// Leakage-safe preprocessing and the validation protocol: a stratified
// hold-out split, stratified k-fold assignment, and cross-validation where
// every fold's imputation and encoding parameters are fitted on the other
// folds only.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dflsim/competency_index.hpp"
#include "dflsim/metrics.hpp"
#include "dflsim/survey_data.hpp"

namespace dflsim {

/// Dense row-major design matrix, fully imputed.
struct FeatureMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;
  std::vector<std::string> column_names;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

/// How one codebook field becomes columns. Binary, ordinal and numeric
/// fields map to a single value column (category level for the first two);
/// categorical fields map to a one-hot block over fit-set categories.
struct FieldEncoding {
  std::size_t field = 0;
  std::string name;
  FieldKind kind = FieldKind::Numeric;
  std::size_t first_column = 0, width = 0;
  double impute_value = 0;                   // value columns
  int impute_category = -1;                  // categorical; -1 when the fit set had no observations
  std::vector<int> category_column;          // category index -> offset within block, -1 if unseen

  bool one_hot() const { return kind == FieldKind::Categorical; }
};

/// Fitted imputation and encoding parameters. Immutable after fitting.
class PreprocessPlan {
 public:
  PreprocessPlan() = default;
  PreprocessPlan(std::vector<FieldEncoding> enc, std::vector<std::string> columns, std::string fitted_on)
      : encodings_(std::move(enc)), columns_(std::move(columns)), fitted_on_(std::move(fitted_on)) {}

  const std::vector<FieldEncoding>& encodings() const { return encodings_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t width() const { return columns_.size(); }
  const std::string& fitted_on() const { return fitted_on_; }

  const FieldEncoding* encoding_for(std::size_t field) const {
    for (const auto& e : encodings_)
      if (e.field == field) return &e;
    return nullptr;
  }

  /// Column index -> codebook field index.
  std::vector<std::size_t> column_fields() const {
    std::vector<std::size_t> out(columns_.size());
    for (const auto& e : encodings_)
      for (std::size_t k = 0; k < e.width; ++k) out[e.first_column + k] = e.field;
    return out;
  }

  json to_json() const {
    json j;
    j["fitted_on"] = fitted_on_;
    j["columns"] = columns_;
    j["fields"] = json::array();
    for (const auto& e : encodings_) {
      json f{{"field", e.field}, {"name", e.name}, {"kind", to_string(e.kind)},
             {"first_column", e.first_column}, {"width", e.width}};
      if (e.one_hot()) {
        f["impute_category"] = e.impute_category;
        f["category_column"] = e.category_column;
      } else {
        f["impute_value"] = e.impute_value;
      }
      j["fields"].push_back(std::move(f));
    }
    return j;
  }

  static PreprocessPlan from_json(const json& j) {
    std::vector<FieldEncoding> enc;
    for (const auto& f : j.at("fields")) {
      FieldEncoding e;
      e.field = f.at("field").get<std::size_t>();
      e.name = f.at("name").get<std::string>();
      e.kind = parse_kind(f.at("kind").get<std::string>());
      e.first_column = f.at("first_column").get<std::size_t>();
      e.width = f.at("width").get<std::size_t>();
      if (e.one_hot()) {
        e.impute_category = f.at("impute_category").get<int>();
        e.category_column = f.at("category_column").get<std::vector<int>>();
      } else {
        e.impute_value = f.at("impute_value").get<double>();
      }
      enc.push_back(std::move(e));
    }
    return PreprocessPlan(std::move(enc), j.at("columns").get<std::vector<std::string>>(),
                          j.at("fitted_on").get<std::string>());
  }

  std::string fingerprint() const { return hex64(fnv1a(to_json().dump())); }

  bool operator==(const PreprocessPlan& o) const { return to_json() == o.to_json(); }

 private:
  std::vector<FieldEncoding> encodings_;
  std::vector<std::string> columns_;
  std::string fitted_on_;
};

/// Fits imputation values (mean / mode, mode ties to the lexicographically
/// smaller label) and encoding maps on `rows` of `records` only. Row order
/// does not affect the result.
inline PreprocessPlan fit_preprocess(const Codebook& codebook, const std::vector<SurveyRecord>& records,
                                     std::vector<std::size_t> rows, std::string fitted_on = "fit",
                                     Warnings* warnings = nullptr,
                                     const std::vector<std::string>& exclude = {}) {
  if (rows.empty()) throw ValidationError("cannot fit preprocessing on an empty set");
  std::sort(rows.begin(), rows.end());
  std::vector<FieldEncoding> enc;
  std::vector<std::string> columns;
  for (std::size_t f = 0; f < codebook.size(); ++f) {
    const auto& field = codebook.field(f);
    if (std::find(exclude.begin(), exclude.end(), field.name) != exclude.end()) continue;
    FieldEncoding e;
    e.field = f;
    e.name = field.name;
    e.kind = field.kind;
    e.first_column = columns.size();
    if (!e.one_hot()) {
      double sum = 0;
      std::size_t n = 0;
      for (auto r : rows)
        if (const auto& c = records[r].responses[f]) {
          sum += *c;
          ++n;
        }
      if (n == 0) {
        if (warnings) warnings->push_back("field '" + field.name + "' entirely missing in fit set; imputing 0");
        e.impute_value = 0;
      } else {
        e.impute_value = sum / static_cast<double>(n);
      }
      e.width = 1;
      columns.push_back(field.name);
    } else {
      std::vector<std::size_t> counts(field.categories.size(), 0);
      for (auto r : rows)
        if (const auto& c = records[r].responses[f]) ++counts[static_cast<std::size_t>(*c)];
      e.category_column.assign(field.categories.size(), -1);
      int best = -1;
      for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) continue;
        e.category_column[k] = static_cast<int>(e.width++);
        columns.push_back(field.name + "=" + field.categories[k]);
        if (best < 0 || counts[k] > counts[static_cast<std::size_t>(best)] ||
            (counts[k] == counts[static_cast<std::size_t>(best)] &&
             field.categories[k] < field.categories[static_cast<std::size_t>(best)]))
          best = static_cast<int>(k);
      }
      if (best < 0) {
        if (warnings)
          warnings->push_back("field '" + field.name + "' entirely missing in fit set; imputing first category");
        best = 0;
      }
      e.impute_category = best;
    }
    enc.push_back(std::move(e));
  }
  return PreprocessPlan(std::move(enc), std::move(columns), std::move(fitted_on));
}

/// Applies a plan. Never leaves a missing entry; categories unseen at fit
/// time produce an all-zeros block.
inline FeatureMatrix apply_preprocess(const PreprocessPlan& plan, const std::vector<SurveyRecord>& records,
                                      std::span<const std::size_t> rows) {
  FeatureMatrix m(rows.size(), plan.width());
  m.column_names = plan.columns();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& resp = records[rows[i]].responses;
    for (const auto& e : plan.encodings()) {
      const auto& cell = resp[e.field];
      if (!e.one_hot()) {
        m(i, e.first_column) = cell ? *cell : e.impute_value;
        continue;
      }
      const int k = cell ? static_cast<int>(*cell) : e.impute_category;
      if (k < 0 || static_cast<std::size_t>(k) >= e.category_column.size()) continue;
      const int col = e.category_column[static_cast<std::size_t>(k)];
      if (col >= 0) m(i, e.first_column + static_cast<std::size_t>(col)) = 1.0;
    }
  }
  return m;
}

inline FeatureMatrix apply_preprocess(const PreprocessPlan& plan, const std::vector<SurveyRecord>& records) {
  std::vector<std::size_t> rows(records.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return apply_preprocess(plan, records, rows);
}

struct SplitSpec {
  double test_fraction = 0.20;
  std::string strata_field = "country";
  int folds = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(test_fraction > 0 && test_fraction < 1)) throw ValidationError("test_fraction must be in (0, 1)");
    if (folds < 2) throw ValidationError("folds must be at least 2");
  }

  json to_json() const {
    return {{"test_fraction", test_fraction}, {"strata_field", strata_field}, {"folds", folds}, {"seed", seed}};
  }
};

struct SplitResult {
  std::vector<std::size_t> train, test;  // ascending record indices
};

namespace detail {

/// Record indices per stratum value, in stratum order.
inline std::vector<std::vector<std::size_t>> strata_of(const Dataset& dataset, std::span<const std::size_t> rows,
                                                       const std::string& strata_field) {
  const auto f = dataset.codebook().index_of(strata_field);
  const auto& field = dataset.codebook().field(f);
  if (!field.has_categories()) throw ValidationError("strata field '" + strata_field + "' must be categorical");
  std::vector<std::vector<std::size_t>> strata(field.categories.size());
  for (auto r : rows) {
    const auto& c = dataset.record(r).responses[f];
    if (!c) throw ValidationError("record '" + dataset.record(r).record_id + "' has no stratum");
    strata[static_cast<std::size_t>(*c)].push_back(r);
  }
  return strata;
}

}  // namespace detail

/// Per stratum, exactly round(test_fraction * size) records go to test.
inline SplitResult stratified_split(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto strata = detail::strata_of(dataset, all, spec.strata_field);
  SplitResult out;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& ids = strata[s];
    if (ids.empty()) continue;
    if (ids.size() < static_cast<std::size_t>(spec.folds))
      throw ValidationError("stratum '" + dataset.codebook().field(dataset.codebook().index_of(spec.strata_field)).categories[s] +
                            "' has " + std::to_string(ids.size()) + " records, fewer than " + std::to_string(spec.folds) +
                            " folds");
    std::mt19937_64 rng(derive_seed(spec.seed, s));
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(ids.size())));
    out.test.insert(out.test.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Fold index for each of `rows` (aligned). Within each stratum records are
/// shuffled by seed and dealt round-robin; the dealer position carries over
/// between strata.
inline std::vector<int> assign_folds(const Dataset& dataset, std::span<const std::size_t> rows, const SplitSpec& spec) {
  spec.validate();
  if (rows.size() < static_cast<std::size_t>(spec.folds)) throw ValidationError("fewer records than folds");
  auto strata = detail::strata_of(dataset, rows, spec.strata_field);
  std::map<std::size_t, int> fold_of;
  int dealer = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& ids = strata[s];
    std::mt19937_64 rng(derive_seed(spec.seed ^ 0xF01D5ULL, s));
    std::shuffle(ids.begin(), ids.end(), rng);
    for (auto id : ids) {
      fold_of[id] = dealer;
      dealer = (dealer + 1) % spec.folds;
    }
  }
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(fold_of.at(r));
  return out;
}

/// DFL points for every record: the regression target.
inline std::vector<double> dfl_targets(const Dataset& dataset) {
  std::vector<double> y;
  y.reserve(dataset.size());
  for (const auto& r : dataset.records()) y.push_back(score_record(r, dataset.codebook()).dfl_points);
  return y;
}

struct CrossValidationResult {
  std::vector<std::optional<double>> fold_r2;  // nullopt: degenerate fold
  std::optional<double> mean, std;
  std::vector<int> fold_of;                    // aligned with the train rows
  std::vector<PreprocessPlan> plans;           // plan used on each fold
  Warnings warnings;
};

/// k-fold cross-validation over `train_rows`. `fit` is called as
/// `fit(FeatureMatrix, std::vector<double>)` and must return an object with
/// `predict(const FeatureMatrix&) -> std::vector<double>`.
template <typename Fit>
CrossValidationResult cross_validate(const Dataset& dataset, std::span<const std::size_t> train_rows,
                                     std::span<const double> targets, Fit&& fit, const SplitSpec& spec) {
  CrossValidationResult out;
  out.fold_of = assign_folds(dataset, train_rows, spec);
  for (int k = 0; k < spec.folds; ++k) {
    std::vector<std::size_t> fit_rows, val_rows;
    for (std::size_t i = 0; i < train_rows.size(); ++i)
      (out.fold_of[i] == k ? val_rows : fit_rows).push_back(train_rows[i]);
    auto plan = fit_preprocess(dataset.codebook(), dataset.records(), fit_rows, "fold-" + std::to_string(k),
                               &out.warnings);
    auto x_fit = apply_preprocess(plan, dataset.records(), fit_rows);
    auto x_val = apply_preprocess(plan, dataset.records(), val_rows);
    std::vector<double> y_fit, y_val;
    for (auto r : fit_rows) y_fit.push_back(targets[r]);
    for (auto r : val_rows) y_val.push_back(targets[r]);
    auto model = fit(x_fit, y_fit);
    auto pred = model.predict(x_val);
    auto r2 = r_squared(pred, y_val);
    if (!r2) out.warnings.push_back("fold " + std::to_string(k) + " has zero target variance; R2 undefined");
    out.fold_r2.push_back(r2);
    out.plans.push_back(std::move(plan));
  }
  std::vector<double> defined;
  for (const auto& r : out.fold_r2)
    if (r) defined.push_back(*r);
  if (!defined.empty()) {
    double m = 0;
    for (double v : defined) m += v;
    m /= static_cast<double>(defined.size());
    double ss = 0;
    for (double v : defined) ss += (v - m) * (v - m);
    out.mean = m;
    out.std = defined.size() > 1 ? std::sqrt(ss / static_cast<double>(defined.size() - 1)) : 0.0;
  }
  return out;
}

}  // namespace dflsim
