#pragma once

// Plain-text (Markdown) rendering of the JSON documents the CLI writes:
// country statistics, gap tables, model comparison, lever table, scenario
// outcomes and responder profiles. Fixed-precision output only, so two
// renderings of the same documents are byte-identical.

#include <cstdio>
#include <string>
#include <vector>

#include "dflsim/survey_data.hpp"

namespace dflsim::report {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string fixed_or_na(const json& v, int digits = 2) {
  return v.is_number() ? fixed(v.get<double>(), digits) : "n/a";
}

/// Markdown table; every row must have as many cells as the header.
inline std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const auto& c : cells) s += " " + c + " |";
    return s + "\n";
  };
  std::string out = line(header) + "|";
  for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

/// Per-country DFC / DFL statistics with the coefficient of variation.
inline std::string country_stats(const json& profile) {
  std::vector<std::vector<std::string>> rows;
  const auto& disc = profile.at("discriminance");
  for (std::size_t i = 0; i < profile.at("countries").size(); ++i) {
    const auto& c = profile["countries"][i];
    const auto& d = disc.at(i);
    rows.push_back({c.at("country").get<std::string>(), std::to_string(c.at("count").get<std::size_t>()),
                    fixed(c["dfc_pct"]["mean"].get<double>()), fixed(c["dfc_pct"]["median"].get<double>()),
                    fixed(c["dfc_pct"]["std"].get<double>()), fixed(c["dfl_pct"]["mean"].get<double>()),
                    fixed(c["dfl_pct"]["median"].get<double>()), fixed(c["dfl_pct"]["std"].get<double>()),
                    fixed_or_na(d["cv_dfc"]), fixed_or_na(d["cv_dfl"]),
                    d["dfc_more_variable"].get<bool>() ? "yes" : "no"});
  }
  std::string out = "## Country statistics (percent of maximum)\n\n";
  out += table({"Country", "N", "DFC mean", "DFC median", "DFC SD", "DFL mean", "DFL median", "DFL SD", "CV(DFC)",
                "CV(DFL)", "DFC more variable"},
               rows);
  if (profile.contains("dfc_dfl_correlation") && profile["dfc_dfl_correlation"].is_number())
    out += "\nCountry-level DFC/DFL correlation: " + fixed(profile["dfc_dfl_correlation"].get<double>(), 4) + "\n";
  return out;
}

inline std::string gap_table(const std::string& title, const json& gaps) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& g : gaps)
    rows.push_back({g.at("category").get<std::string>(), g.at("lowest_group").get<std::string>(),
                    fixed(g.at("lowest_mean").get<double>()), g.at("highest_group").get<std::string>(),
                    fixed(g.at("highest_mean").get<double>()), fixed(g.at("gap").get<double>())});
  return "## " + title + "\n\n" + table({"Category", "Lowest group", "Mean", "Highest group", "Mean", "Gap"}, rows);
}

/// Test metrics and CV stability per family, with the selection outcome.
inline std::string evaluation(const json& training) {
  const auto chosen = training.at("selection").at("chosen").get<std::string>();
  std::vector<std::vector<std::string>> rows;
  for (const auto& f : training.at("families")) {
    const auto& e = f.at("evaluation");
    rows.push_back({f.at("family").get<std::string>(), fixed_or_na(e["test_r2"], 4), fixed(e["mse"].get<double>(), 4),
                    fixed(e["rmse"].get<double>(), 4), fixed(e["mae"].get<double>(), 4),
                    fixed_or_na(e["cv_r2_mean"], 4), fixed_or_na(e["cv_r2_std"], 4),
                    std::to_string(f.at("transparency_rank").get<int>()),
                    f["family"] == chosen ? "selected" : ""});
  }
  std::string out = "## Model comparison (hold-out test set)\n\n";
  out += table({"Family", "R2", "MSE", "RMSE", "MAE", "CV R2 mean", "CV R2 SD", "Transparency", ""}, rows);
  const auto& s = training["selection"];
  auto names = [](const json& a) {
    std::string s;
    for (const auto& x : a) s += (s.empty() ? "" : ", ") + x.get<std::string>();
    return s.empty() ? std::string("none") : s;
  };
  out += "\nWithin " + fixed(s["epsilon"].get<double>(), 3) + " of best R2: " + names(s["accuracy_survivors"]) +
         ". Stable CV: " + names(s["stability_survivors"]) + ". Chosen: " + chosen + ".\n";
  return out;
}

/// Levers first, ranked within domain; segmentation variables after.
inline std::string lever_table(const json& levers, bool levers_only = false) {
  std::vector<std::vector<std::string>> rows;
  int rank = 0;
  for (const auto& r : levers) {
    if (levers_only && !r.at("modifiable").get<bool>()) continue;
    rows.push_back({std::to_string(++rank), r.at("field").get<std::string>(), r.at("domain").get<std::string>(),
                    r.at("role").get<std::string>(), fixed(r.at("standardized_coefficient").get<double>(), 4),
                    fixed(r.at("relative_weight").get<double>())});
  }
  return "## Predictive weights\n\n" +
         table({"#", "Field", "Domain", "Role", "Standardized coefficient", "Relative weight (%)"}, rows);
}

inline std::string scenarios(const json& simulation) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : simulation.at("results")) {
    std::string levers;
    for (auto it = r["scenario"]["levers"].begin(); it != r["scenario"]["levers"].end(); ++it)
      levers += (levers.empty() ? "" : ", ") + it.key();
    rows.push_back({r["scenario"]["name"].get<std::string>(), levers, fixed(100.0 * r["reach"].get<double>()),
                    fixed(r["population_gain_pct"].get<double>()), fixed(r["reached_gain_pct"].get<double>()),
                    r["scenario"].value("clip", true) ? "yes" : "no"});
  }
  std::string out = "## Scenario outcomes\n\n";
  out += table({"Scenario", "Levers", "Reach (%)", "Population gain (pp)", "Gain among reached (pp)", "Clipped"}, rows);
  for (const auto& r : simulation.at("results")) {
    if (!r.contains("subgroups") || r["subgroups"].empty()) continue;
    std::vector<std::vector<std::string>> sub;
    for (const auto& g : r["subgroups"])
      sub.push_back({g["field"].get<std::string>(), g["group"].get<std::string>(),
                     std::to_string(g["count"].get<std::size_t>()), fixed(100.0 * g["reach"].get<double>()),
                     fixed(g["gain_pct"].get<double>()), g["lagging"].get<bool>() ? "lagging" : ""});
    out += "\n### " + r["scenario"]["name"].get<std::string>() + " by subgroup\n\n" +
           table({"Field", "Group", "N", "Reach (%)", "Gain (pp)", ""}, sub);
  }
  if (simulation.contains("responders")) {
    std::vector<std::vector<std::string>> prof;
    for (const auto& p : simulation["responders"]["profiles"]) {
      std::string modal;
      for (auto it = p["modal"].begin(); it != p["modal"].end(); ++it)
        modal += (modal.empty() ? "" : "; ") + it.key() + ": " + it.value().get<std::string>();
      prof.push_back({p["partition"].get<std::string>(), std::to_string(p["count"].get<std::size_t>()),
                      fixed(100.0 * p["share"].get<double>()), fixed(p["mean_baseline_pct"].get<double>()),
                      fixed(p["mean_gain_pct"].get<double>()), std::to_string(p["ceiling"].get<std::size_t>()),
                      modal});
    }
    out += "\n## Responder profiles\n\n" +
           table({"Group", "N", "Share (%)", "Baseline DFL (%)", "Mean gain (pp)", "High baseline", "Typical profile"},
                 prof);
  }
  return out;
}

}  // namespace dflsim::report
