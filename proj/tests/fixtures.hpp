#pragma once

// Small hand-built codebooks and records shared by the unit tests.

#include <random>
#include <string>
#include <vector>

#include "dflsim/models.hpp"
#include "dflsim/survey_data.hpp"

namespace fixtures {

using namespace dflsim;

/// country {A,B,C}, gender, area, age (numeric), two 13-point digital
/// items, one 13-point financial item, one 3-level 13-point ordinal item.
inline Codebook tiny_codebook() {
  std::vector<CodebookField> f = {
      {"country", Domain::Demographic, FieldKind::Categorical, 0, false, {"A", "B", "C"}},
      {"gender", Domain::Demographic, FieldKind::Categorical, 0, false, {"Female", "Male"}},
      {"area", Domain::Demographic, FieldKind::Categorical, 0, false, {"Rural", "Urban"}},
      {"age", Domain::Demographic, FieldKind::Numeric, 0, false, {}},
      {"d1", Domain::Digital, FieldKind::Binary, 13, true, {"no", "yes"}},
      {"d2", Domain::Digital, FieldKind::Binary, 13, true, {"no", "yes"}},
      {"f1", Domain::Financial, FieldKind::Binary, 13, true, {"no", "yes"}},
      {"x1", Domain::DigitalFinancial, FieldKind::Ordinal, 13, true, {"never", "sometimes", "always"}},
  };
  return Codebook("tiny", std::move(f));
}

inline SurveyRecord record(std::string id, std::vector<Cell> cells) { return {std::move(id), std::move(cells)}; }

/// `n` records over tiny_codebook with seeded random answers and an
/// exactly linear relation between items and the index.
inline Dataset random_tiny(std::size_t n, std::uint64_t seed, double missing = 0.0) {
  const auto cb = tiny_codebook();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c3(0, 2), c2(0, 1), age(18, 70);
  std::bernoulli_distribution miss(missing);
  std::vector<SurveyRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Cell> cells = {c3(rng), c2(rng), c2(rng), age(rng), c2(rng), c2(rng), c2(rng), c3(rng)};
    for (std::size_t k = 1; k < cells.size(); ++k)
      if (miss(rng)) cells[k] = std::nullopt;
    recs.push_back(record("r" + std::to_string(i), cells));
  }
  return Dataset(cb, std::move(recs));
}

/// Linear model fitted on every record of `ds` against `y`, plan attached.
inline TrainedModel fit_with_plan(const Dataset& ds, const std::vector<double>& y) {
  std::vector<std::size_t> rows(ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  auto plan = fit_preprocess(ds.codebook(), ds.records(), rows);
  auto m = fit_linear(apply_preprocess(plan, ds.records()), y);
  m.attach_plan(std::move(plan));
  return m;
}

}  // namespace fixtures
