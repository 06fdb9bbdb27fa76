#pragma once

// Standardized coefficients of the linear model, per-field relative
// predictive weights, and the lever / segmentation-variable partition.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dflsim/models.hpp"

namespace dflsim {

/// raw * std(x) / std(y); zero-variance columns get 0.
inline std::vector<double> standardize(std::span<const double> raw, std::span<const double> feature_stds,
                                       double target_std) {
  if (raw.size() != feature_stds.size()) throw ValidationError("coefficient and std vectors differ in length");
  if (!(target_std > 0)) throw NumericError("standardization needs a positive target std");
  std::vector<double> out(raw.size(), 0.0);
  for (std::size_t j = 0; j < raw.size(); ++j)
    if (feature_stds[j] > 0) out[j] = raw[j] * feature_stds[j] / target_std;
  return out;
}

struct FeatureClasses {
  std::vector<std::string> levers, segmentation;
};

/// Driven by the codebook `modifiable` flag (the codebook already restricts
/// it to scored domains).
inline FeatureClasses classify_features(const Codebook& codebook, Warnings* warnings = nullptr) {
  FeatureClasses out;
  for (const auto& f : codebook.fields())
    (f.modifiable && is_scored_domain(f.domain) ? out.levers : out.segmentation).push_back(f.name);
  if (out.levers.empty() && warnings) warnings->push_back("codebook has no modifiable fields; no policy levers");
  return out;
}

struct LeverRow {
  std::string field;
  Domain domain = Domain::Demographic;
  bool modifiable = false;
  double raw_coefficient = 0;           // signed for single-column fields; sum of |raw| over indicator blocks
  double standardized_coefficient = 0;  // same convention
  double relative_weight = 0;           // percent
};

/// All model fields with weights; `levers()` is the display view.
struct LeverTable {
  std::vector<LeverRow> rows;

  std::vector<LeverRow> levers() const {
    std::vector<LeverRow> out;
    for (const auto& r : rows)
      if (r.modifiable) out.push_back(r);
    return out;
  }

  double total_weight() const {
    double s = 0;
    for (const auto& r : rows) s += r.relative_weight;
    return s;
  }

  const LeverRow* find(std::string_view field) const {
    for (const auto& r : rows)
      if (r.field == field) return &r;
    return nullptr;
  }

  json to_json() const {
    json a = json::array();
    for (const auto& r : rows)
      a.push_back({{"field", r.field},
                   {"domain", to_string(r.domain)},
                   {"modifiable", r.modifiable},
                   {"role", r.modifiable ? "policy lever" : "segmentation variable"},
                   {"raw_coefficient", r.raw_coefficient},
                   {"standardized_coefficient", r.standardized_coefficient},
                   {"relative_weight", r.relative_weight}});
    return a;
  }

  static LeverTable from_json(const json& j) {
    LeverTable t;
    for (const auto& r : j)
      t.rows.push_back({r.at("field").get<std::string>(), parse_domain(r.at("domain").get<std::string>()),
                        r.at("modifiable").get<bool>(), r.at("raw_coefficient").get<double>(),
                        r.at("standardized_coefficient").get<double>(), r.at("relative_weight").get<double>()});
    return t;
  }

  std::string to_csv(bool levers_only = false) const {
    std::string out = "field,domain,role,raw_coefficient,standardized_coefficient,relative_weight_pct\n";
    for (const auto& r : rows) {
      if (levers_only && !r.modifiable) continue;
      out += detail::csv_escape(r.field) + "," + to_string(r.domain) + "," +
             (r.modifiable ? "policy lever" : "segmentation variable") + "," +
             detail::format_number(r.raw_coefficient) + "," + detail::format_number(r.standardized_coefficient) +
             "," + detail::format_number(r.relative_weight) + "\n";
    }
    return out;
  }
};

namespace detail {

inline int lever_group(Domain d) {
  switch (d) {
    case Domain::Digital: return 0;
    case Domain::Financial: return 1;
    case Domain::DigitalFinancial: return 2;
    default: return 3;
  }
}

}  // namespace detail

/// Normalization base for relative weights.
enum class WeightBase { AllFields, ModifiableOnly };

/// One row per field the model uses, grouped Digital / Financial /
/// DigitalFinancial / segmentation and sorted by weight within a group
/// (ties by name).
inline LeverTable lever_table(const TrainedModel& model, const Codebook& codebook,
                              WeightBase base = WeightBase::AllFields) {
  if (!model.is_linear()) throw ValidationError("lever extraction requires the transparent model");
  if (!model.plan()) throw ValidationError("model has no preprocessing plan attached");
  const auto& lin = model.linear();
  const auto stdz = standardize(lin.coefficients, lin.column_stds, lin.target_std);
  LeverTable t;
  for (const auto& e : model.plan()->encodings()) {
    const auto& f = codebook.field(e.field);
    LeverRow row{f.name, f.domain, f.modifiable && is_scored_domain(f.domain), 0, 0, 0};
    if (e.width == 1 && !e.one_hot()) {
      row.raw_coefficient = lin.coefficients[e.first_column];
      row.standardized_coefficient = stdz[e.first_column];
    } else {
      for (std::size_t k = 0; k < e.width; ++k) {
        row.raw_coefficient += std::abs(lin.coefficients[e.first_column + k]);
        row.standardized_coefficient += std::abs(stdz[e.first_column + k]);
      }
    }
    t.rows.push_back(row);
  }
  double total = 0;
  for (const auto& r : t.rows)
    if (base == WeightBase::AllFields || r.modifiable) total += std::abs(r.standardized_coefficient);
  for (auto& r : t.rows) {
    const bool counted = base == WeightBase::AllFields || r.modifiable;
    r.relative_weight = counted && total > 0 ? std::abs(r.standardized_coefficient) / total * 100.0 : 0.0;
  }
  std::sort(t.rows.begin(), t.rows.end(), [](const LeverRow& a, const LeverRow& b) {
    const int ga = detail::lever_group(a.domain) + (a.modifiable ? 0 : 10);
    const int gb = detail::lever_group(b.domain) + (b.modifiable ? 0 : 10);
    if (ga != gb) return ga < gb;
    if (a.relative_weight != b.relative_weight) return a.relative_weight > b.relative_weight;
    return a.field < b.field;
  });
  return t;
}

}  // namespace dflsim
