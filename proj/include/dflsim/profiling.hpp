#pragma once

// Descriptive profiling: per-country statistics, coefficient-of-variation
// discriminance, disparity gap tables and the country-level DFC/DFL
// correlation.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dflsim/competency_index.hpp"
#include "dflsim/survey_data.hpp"

namespace dflsim {

enum class Measure { DFC, DFL };

inline std::string to_string(Measure m) { return m == Measure::DFC ? "DFC" : "DFL"; }

inline double measure_pct(const CompetencyScores& s, Measure m) { return m == Measure::DFC ? s.dfc_pct : s.dfl_pct; }

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0, median = 0, std = 0, min = 0, max = 0;
};

/// Sample (n-1) standard deviation; the median of an even-sized sample is
/// the mean of the two central order statistics.
inline SummaryStats summary_stats(std::vector<double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.min = values.front();
  s.max = values.back();
  return s;
}

struct CountryStats {
  std::string country;
  std::size_t count = 0;
  SummaryStats dfc, dfl;  // percent
};

/// One row per country present, in codebook category order.
inline std::vector<CountryStats> country_stats(const Dataset& dataset, std::span<const CompetencyScores> scores) {
  const auto& countries = dataset.codebook().country().categories;
  std::vector<std::vector<double>> dfc(countries.size()), dfl(countries.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto c = static_cast<std::size_t>(dataset.country_of(i));
    dfc[c].push_back(scores[i].dfc_pct);
    dfl[c].push_back(scores[i].dfl_pct);
  }
  std::vector<CountryStats> out;
  for (std::size_t c = 0; c < countries.size(); ++c) {
    if (dfc[c].empty()) continue;
    out.push_back({countries[c], dfc[c].size(), summary_stats(dfc[c]), summary_stats(dfl[c])});
  }
  return out;
}

/// std / mean. Throws on a non-positive mean.
inline double coefficient_of_variation(double mean, double std) {
  if (!(mean > 0)) throw NumericError("coefficient of variation needs a positive mean");
  return std / mean;
}

struct DiscriminanceRow {
  std::string country;
  std::optional<double> cv_dfc, cv_dfl;
  bool dfc_more_variable = false;
};

inline std::vector<DiscriminanceRow> discriminance_report(std::span<const CountryStats> stats) {
  std::vector<DiscriminanceRow> out;
  for (const auto& cs : stats) {
    DiscriminanceRow row{cs.country, std::nullopt, std::nullopt, false};
    if (cs.dfc.mean > 0) row.cv_dfc = coefficient_of_variation(cs.dfc.mean, cs.dfc.std);
    if (cs.dfl.mean > 0) row.cv_dfl = coefficient_of_variation(cs.dfl.mean, cs.dfl.std);
    row.dfc_more_variable = row.cv_dfc && row.cv_dfl && *row.cv_dfc > *row.cv_dfl;
    out.push_back(row);
  }
  return out;
}

inline std::vector<DiscriminanceRow> discriminance_report(const Dataset& dataset, std::span<const CompetencyScores> scores) {
  auto stats = country_stats(dataset, scores);
  return discriminance_report(stats);
}

struct GroupMean {
  std::string label;
  std::size_t count = 0;
  double mean = 0;
};

struct GapRow {
  std::string category;
  std::string lowest_group;
  double lowest_mean = 0;
  std::string highest_group;
  double highest_mean = 0;
  double gap = 0;
};

/// Extremes over groups. Ties on the mean go to the lexicographically
/// smaller label, for both ends.
inline std::optional<GapRow> gap_from_groups(const std::string& category, std::span<const GroupMean> groups) {
  if (groups.size() < 2) return std::nullopt;
  const GroupMean* lo = &groups[0];
  const GroupMean* hi = &groups[0];
  for (const auto& g : groups) {
    if (g.mean < lo->mean || (g.mean == lo->mean && g.label < lo->label)) lo = &g;
    if (g.mean > hi->mean || (g.mean == hi->mean && g.label < hi->label)) hi = &g;
  }
  return GapRow{category, lo->label, lo->mean, hi->label, hi->mean, hi->mean - lo->mean};
}

/// Per-field group means of a measure, keeping groups with at least
/// `min_cell` respondents. Records missing the field are excluded.
inline std::vector<GroupMean> group_means(const Dataset& dataset, std::span<const CompetencyScores> scores,
                                          std::size_t field, Measure measure, std::size_t min_cell = 30) {
  const auto& f = dataset.codebook().field(field);
  std::vector<double> sum(f.categories.size(), 0.0);
  std::vector<std::size_t> count(f.categories.size(), 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& cell = dataset.record(i).responses[field];
    if (!cell) continue;
    const auto k = static_cast<std::size_t>(*cell);
    sum[k] += measure_pct(scores[i], measure);
    ++count[k];
  }
  std::vector<GroupMean> out;
  for (std::size_t k = 0; k < f.categories.size(); ++k)
    if (count[k] >= min_cell && count[k] > 0) out.push_back({f.categories[k], count[k], sum[k] / static_cast<double>(count[k])});
  return out;
}

/// One row per category field with at least two eligible groups, sorted by
/// gap descending (ties by field name).
inline std::vector<GapRow> gap_table(const Dataset& dataset, std::span<const CompetencyScores> scores,
                                     const std::vector<std::string>& fields, Measure measure,
                                     std::size_t min_cell = 30, Warnings* warnings = nullptr) {
  std::vector<GapRow> rows;
  for (const auto& name : fields) {
    const auto idx = dataset.codebook().index_of(name);
    const auto& f = dataset.codebook().field(idx);
    if (f.kind != FieldKind::Categorical && f.kind != FieldKind::Ordinal && f.kind != FieldKind::Binary)
      throw ValidationError("gap table field '" + name + "' is not categorical");
    auto groups = group_means(dataset, scores, idx, measure, min_cell);
    auto row = gap_from_groups(name, groups);
    if (!row) {
      if (warnings) warnings->push_back("field '" + name + "' skipped: fewer than 2 groups meet the minimum cell size");
      continue;
    }
    rows.push_back(*row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const GapRow& a, const GapRow& b) {
    if (a.gap != b.gap) return a.gap > b.gap;
    return a.category < b.category;
  });
  return rows;
}

/// Pearson correlation over per-country (DFC mean, DFL mean) pairs.
inline double dfc_dfl_correlation(std::span<const double> dfc_means, std::span<const double> dfl_means) {
  if (dfc_means.size() != dfl_means.size()) throw ValidationError("correlation inputs differ in length");
  const std::size_t n = dfc_means.size();
  if (n < 3) throw NumericError("correlation needs at least 3 countries");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += dfc_means[i];
    my += dfl_means[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = dfc_means[i] - mx, dy = dfl_means[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw NumericError("correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double dfc_dfl_correlation(std::span<const CountryStats> stats) {
  std::vector<double> x, y;
  for (const auto& s : stats) {
    x.push_back(s.dfc.mean);
    y.push_back(s.dfl.mean);
  }
  return dfc_dfl_correlation(x, y);
}

/// Default gap-table groupings for the bundled codebook.
inline std::vector<std::string> default_demographic_gap_fields() { return {"language", "area", "age_group", "gender"}; }
inline std::vector<std::string> default_socioeconomic_gap_fields() {
  return {"education", "occupation", "income", "numeracy_comfort"};
}

struct ProfileReport {
  std::vector<CountryStats> countries;
  std::vector<DiscriminanceRow> discriminance;
  std::vector<GapRow> demographic_gaps, socioeconomic_gaps;
  std::optional<double> correlation;
  Warnings warnings;
};

/// Full descriptive profile. Gap fields absent from the codebook are skipped.
inline ProfileReport profile_dataset(const Dataset& dataset, std::size_t min_cell = 30, Measure measure = Measure::DFC) {
  ProfileReport r;
  const auto scores = score_dataset(dataset);
  r.countries = country_stats(dataset, scores);
  r.discriminance = discriminance_report(r.countries);
  auto present = [&](std::vector<std::string> names) {
    std::erase_if(names, [&](const std::string& n) {
      auto i = dataset.codebook().find(n);
      return !i || !dataset.codebook().field(*i).has_categories();
    });
    return names;
  };
  r.demographic_gaps = gap_table(dataset, scores, present(default_demographic_gap_fields()), measure, min_cell, &r.warnings);
  r.socioeconomic_gaps =
      gap_table(dataset, scores, present(default_socioeconomic_gap_fields()), measure, min_cell, &r.warnings);
  if (r.countries.size() >= 3) {
    try {
      r.correlation = dfc_dfl_correlation(r.countries);
    } catch (const NumericError& e) {
      r.warnings.push_back(e.what());
    }
  }
  return r;
}

inline json to_json(const SummaryStats& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

inline json to_json(const ProfileReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json countries = json::array(), disc = json::array();
  for (const auto& c : r.countries)
    countries.push_back({{"country", c.country}, {"count", c.count}, {"dfc_pct", to_json(c.dfc)}, {"dfl_pct", to_json(c.dfl)}});
  for (const auto& d : r.discriminance)
    disc.push_back({{"country", d.country},
                    {"cv_dfc", opt(d.cv_dfc)},
                    {"cv_dfl", opt(d.cv_dfl)},
                    {"dfc_more_variable", d.dfc_more_variable}});
  auto gaps = [](const std::vector<GapRow>& rows) {
    json a = json::array();
    for (const auto& g : rows)
      a.push_back({{"category", g.category},
                   {"lowest_group", g.lowest_group},
                   {"lowest_mean", g.lowest_mean},
                   {"highest_group", g.highest_group},
                   {"highest_mean", g.highest_mean},
                   {"gap", g.gap}});
    return a;
  };
  return {{"countries", countries},
          {"discriminance", disc},
          {"demographic_gaps", gaps(r.demographic_gaps)},
          {"socioeconomic_gaps", gaps(r.socioeconomic_gaps)},
          {"dfc_dfl_correlation", opt(r.correlation)},
          {"warnings", r.warnings}};
}

}  // namespace dflsim
