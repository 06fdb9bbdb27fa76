#pragma once

// Domain competency scores and the composite literacy index. The composite
// is the plain sum of the three domain scores, and every score has a
// percent form relative to its own maximum.

#include <string>
#include <vector>

#include "dflsim/survey_data.hpp"

namespace dflsim {

struct CompetencyScores {
  double dc_points = 0, fc_points = 0, dfc_points = 0, dfl_points = 0;
  double dc_pct = 0, fc_pct = 0, dfc_pct = 0, dfl_pct = 0;
};

inline double points_to_pct(double points, double max_points = kIndexMaxPoints) {
  return max_points > 0 ? points / max_points * 100.0 : 0.0;
}

inline double pct_to_points(double pct, double max_points = kIndexMaxPoints) {
  return pct / 100.0 * max_points;
}

/// Missing scored answers earn nothing.
inline CompetencyScores score_record(const SurveyRecord& record, const Codebook& codebook) {
  CompetencyScores s;
  for (std::size_t f = 0; f < codebook.size(); ++f) {
    const auto& field = codebook.field(f);
    if (field.points == 0 || !record.responses[f]) continue;
    const double earned = field.points_at(static_cast<int>(*record.responses[f]));
    switch (field.domain) {
      case Domain::Digital: s.dc_points += earned; break;
      case Domain::Financial: s.fc_points += earned; break;
      case Domain::DigitalFinancial: s.dfc_points += earned; break;
      default: break;
    }
  }
  s.dfl_points = s.dc_points + s.fc_points + s.dfc_points;
  s.dc_pct = points_to_pct(s.dc_points, codebook.domain_points(Domain::Digital));
  s.fc_pct = points_to_pct(s.fc_points, codebook.domain_points(Domain::Financial));
  s.dfc_pct = points_to_pct(s.dfc_points, codebook.domain_points(Domain::DigitalFinancial));
  s.dfl_pct = points_to_pct(s.dfl_points);
  return s;
}

inline std::vector<CompetencyScores> score_dataset(const Dataset& dataset) {
  std::vector<CompetencyScores> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset.records()) out.push_back(score_record(r, dataset.codebook()));
  return out;
}

/// record_id, country, four point columns, four percent columns.
inline std::string scores_to_csv(const Dataset& dataset, const std::vector<CompetencyScores>& scores) {
  std::string out = "record_id,country,dc_points,fc_points,dfc_points,dfl_points,dc_pct,fc_pct,dfc_pct,dfl_pct\n";
  auto num = [](double v) { return detail::format_number(v); };
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    out += detail::csv_escape(dataset.record(i).record_id) + "," + detail::csv_escape(dataset.country_label(i)) + "," +
           num(s.dc_points) + "," + num(s.fc_points) + "," + num(s.dfc_points) + "," + num(s.dfl_points) + "," +
           num(s.dc_pct) + "," + num(s.fc_pct) + "," + num(s.dfc_pct) + "," + num(s.dfl_pct) + "\n";
  }
  return out;
}

}  // namespace dflsim
