#pragma once

// Static what-if scenarios: set policy levers to target values, re-predict
// through the fitted preprocessing + model path, and summarize reach, gains,
// subgroup breakdowns and responder partitions.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dflsim/models.hpp"
#include "dflsim/policy_levers.hpp"

namespace dflsim {

struct Scenario {
  std::string name;
  std::map<std::string, std::string> levers;               // field -> target label; "" = top category
  std::map<std::string, std::vector<std::string>> filter;  // segmentation field -> allowed labels
  bool clip = true;

  json to_json() const {
    json j;
    j["name"] = name;
    j["levers"] = levers;
    j["filter"] = json::object();
    for (const auto& [k, v] : filter) j["filter"][k] = v;
    j["clip"] = clip;
    return j;
  }

  static Scenario from_json(const json& j) {
    Scenario s;
    try {
      s.name = j.value("name", std::string("scenario"));
      const auto& lv = j.at("levers");
      if (lv.is_array()) {
        for (const auto& l : lv) s.levers[l.get<std::string>()] = "";
      } else {
        for (auto it = lv.begin(); it != lv.end(); ++it)
          s.levers[it.key()] = it.value().is_null() ? std::string() : it.value().get<std::string>();
      }
      if (j.contains("filter") && !j.at("filter").is_null())
        for (auto it = j.at("filter").begin(); it != j.at("filter").end(); ++it)
          s.filter[it.key()] = it.value().is_array() ? it.value().get<std::vector<std::string>>()
                                                     : std::vector<std::string>{it.value().get<std::string>()};
      s.clip = j.value("clip", true);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed scenario: ") + e.what());
    }
    return s;
  }
};

/// Built-in single-lever scenarios and bundles over the default codebook.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& scenario_presets() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> presets = {
      {"device_access", {"device_ownership"}},
      {"content_creation", {"content_creation"}},
      {"computational_skills", {"computational_skills"}},
      {"financial_optimism", {"financial_optimism"}},
      {"budget_management", {"budget_planning"}},
      {"expense_recording", {"expense_recording"}},
      {"digital_autonomy", {"digital_autonomy"}},
      {"cybersecurity_resilience", {"scam_avoidance"}},
      {"digital_spending_tracking", {"digital_spending_tracking"}},
      {"digital_capability", {"device_ownership", "content_creation", "computational_skills"}},
      {"financial_capability", {"budget_planning", "expense_recording"}},
      {"digital_financial_safety", {"digital_autonomy", "scam_avoidance"}},
      {"comprehensive",
       {"device_ownership", "content_creation", "computational_skills", "financial_optimism", "budget_planning",
        "expense_recording", "digital_autonomy", "scam_avoidance", "digital_spending_tracking"}},
  };
  return presets;
}

inline std::optional<Scenario> scenario_preset(std::string_view name) {
  for (const auto& [n, levers] : scenario_presets())
    if (n == name) {
      Scenario s;
      s.name = n;
      for (const auto& l : levers) s.levers[l] = "";
      return s;
    }
  return std::nullopt;
}

namespace detail {

struct ResolvedLever {
  std::size_t field = 0;
  FieldKind kind = FieldKind::Binary;
  double target = 0;
};

struct ResolvedScenario {
  std::vector<ResolvedLever> levers;
  std::vector<std::pair<std::size_t, std::vector<double>>> filter;
};

inline ResolvedScenario resolve(const Scenario& s, const Codebook& cb) {
  std::vector<std::string> errors;
  ResolvedScenario r;
  if (s.levers.empty()) errors.push_back("scenario '" + s.name + "' assigns no levers");
  for (const auto& [name, target] : s.levers) {
    auto idx = cb.find(name);
    if (!idx) {
      errors.push_back("unknown lever '" + name + "'");
      continue;
    }
    const auto& f = cb.field(*idx);
    if (!(f.modifiable && is_scored_domain(f.domain))) {
      errors.push_back("field '" + name + "' is not a modifiable lever");
      continue;
    }
    ResolvedLever l{*idx, f.kind, 0};
    if (f.has_categories()) {
      if (target.empty()) {
        l.target = static_cast<double>(f.categories.size() - 1);
      } else if (auto k = f.category_index(target)) {
        l.target = *k;
      } else {
        errors.push_back("lever '" + name + "': target '" + target + "' is not in the vocabulary");
        continue;
      }
    } else {
      auto v = target.empty() ? std::nullopt : parse_number(target);
      if (!v) {
        errors.push_back("lever '" + name + "': numeric lever needs a numeric target");
        continue;
      }
      l.target = *v;
    }
    r.levers.push_back(l);
  }
  for (const auto& [name, labels] : s.filter) {
    auto idx = cb.find(name);
    if (!idx) {
      errors.push_back("unknown filter field '" + name + "'");
      continue;
    }
    const auto& f = cb.field(*idx);
    if (f.modifiable) {
      errors.push_back("filter field '" + name + "' is a lever, not a segmentation variable");
      continue;
    }
    std::vector<double> allowed;
    for (const auto& lab : labels) {
      if (f.has_categories()) {
        if (auto k = f.category_index(lab)) allowed.push_back(*k);
        else errors.push_back("filter '" + name + "': label '" + lab + "' is not in the vocabulary");
      } else if (auto v = parse_number(lab)) {
        allowed.push_back(*v);
      } else {
        errors.push_back("filter '" + name + "': '" + lab + "' is not a number");
      }
    }
    r.filter.emplace_back(*idx, std::move(allowed));
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return r;
}

inline bool lacks(const SurveyRecord& rec, const ResolvedLever& l) {
  const auto& c = rec.responses[l.field];
  if (!c) return true;
  if (l.kind == FieldKind::Binary || l.kind == FieldKind::Categorical) return *c != l.target;
  return *c < l.target;
}

inline bool passes(const SurveyRecord& rec, const ResolvedScenario& r) {
  for (const auto& [field, allowed] : r.filter) {
    const auto& c = rec.responses[field];
    if (!c || std::find(allowed.begin(), allowed.end(), *c) == allowed.end()) return false;
  }
  return true;
}

inline double clamp_points(double v) { return std::clamp(v, 0.0, kIndexMaxPoints); }

}  // namespace detail

/// Validates a scenario against a codebook; throws ValidationError.
inline void validate_scenario(const Scenario& s, const Codebook& cb) { (void)detail::resolve(s, cb); }

/// Records passing the filter and lacking at least one lever value.
inline std::vector<bool> reached_records(const Dataset& dataset, const Scenario& scenario) {
  const auto r = detail::resolve(scenario, dataset.codebook());
  std::vector<bool> out(dataset.size(), false);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rec = dataset.record(i);
    if (!detail::passes(rec, r)) continue;
    for (const auto& l : r.levers)
      if (detail::lacks(rec, l)) {
        out[i] = true;
        break;
      }
  }
  return out;
}

/// The counterfactual population: reached records get every lacking lever
/// set to its target; everything else is untouched.
inline Dataset apply_scenario(const Dataset& dataset, const Scenario& scenario) {
  const auto r = detail::resolve(scenario, dataset.codebook());
  auto records = dataset.records();
  for (auto& rec : records) {
    if (!detail::passes(rec, r)) continue;
    for (const auto& l : r.levers)
      if (detail::lacks(rec, l)) rec.responses[l.field] = l.target;
  }
  return Dataset(dataset.codebook(), std::move(records), dataset.provenance());
}

struct SimulationResult {
  Scenario scenario;
  std::vector<std::string> record_ids;
  std::vector<double> baseline, counterfactual, delta;  // points
  std::vector<bool> reached;
  double reach = 0;
  double population_gain_points = 0, reached_gain_points = 0;
  std::string model_fingerprint, dataset_fingerprint;
  std::optional<std::uint64_t> seed;  // synthesis seed of the dataset, when synthetic
  Warnings warnings;

  std::size_t size() const { return delta.size(); }
  double population_gain_pct() const { return points_to_pct(population_gain_points); }
  double reached_gain_pct() const { return points_to_pct(reached_gain_points); }

  json summary_json() const {
    return {{"scenario", scenario.to_json()},
            {"population", delta.size()},
            {"reach", reach},
            {"population_gain_points", population_gain_points},
            {"population_gain_pct", population_gain_pct()},
            {"reached_gain_points", reached_gain_points},
            {"reached_gain_pct", reached_gain_pct()},
            {"provenance",
             {{"model_fingerprint", model_fingerprint}, {"dataset_fingerprint", dataset_fingerprint}, {"seed", seed ? json(*seed) : json(nullptr)}}},
            {"warnings", warnings}};
  }

  json to_json() const {
    json j = summary_json();
    json recs = json::array();
    for (std::size_t i = 0; i < delta.size(); ++i)
      recs.push_back({{"id", record_ids[i]},
                      {"baseline", baseline[i]},
                      {"counterfactual", counterfactual[i]},
                      {"delta_points", delta[i]},
                      {"delta_pct", points_to_pct(delta[i])},
                      {"reached", static_cast<bool>(reached[i])}});
    j["records"] = std::move(recs);
    return j;
  }
};

/// Baseline and counterfactual both go through the model's own
/// preprocessing plan. With clipping, the delta is
/// min(raw, clamp(cf) - clamp(base)) with clamp to [0, max points], so
/// clipping never raises a delta.
inline SimulationResult simulate(const Dataset& dataset, const TrainedModel& model, const Scenario& scenario) {
  SimulationResult out;
  out.scenario = scenario;
  out.reached = reached_records(dataset, scenario);
  const auto cf_data = apply_scenario(dataset, scenario);
  out.baseline = model.predict_records(dataset.records());
  out.counterfactual = model.predict_records(cf_data.records());
  const std::size_t n = dataset.size();
  out.delta.resize(n);
  out.record_ids.reserve(n);
  std::size_t reached = 0;
  double gain_sum = 0, reached_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.record_ids.push_back(dataset.record(i).record_id);
    double d = out.counterfactual[i] - out.baseline[i];
    if (scenario.clip)
      d = std::min(d, detail::clamp_points(out.counterfactual[i]) - detail::clamp_points(out.baseline[i]));
    out.delta[i] = d;
    gain_sum += d;
    if (out.reached[i]) {
      ++reached;
      reached_sum += d;
    }
  }
  if (n > 0) {
    out.reach = static_cast<double>(reached) / static_cast<double>(n);
    out.population_gain_points = gain_sum / static_cast<double>(n);
  }
  out.reached_gain_points = reached ? reached_sum / static_cast<double>(reached) : 0.0;
  if (!scenario.filter.empty()) {
    const auto r = detail::resolve(scenario, dataset.codebook());
    bool any = false;
    for (const auto& rec : dataset.records()) any = any || detail::passes(rec, r);
    if (!any) out.warnings.push_back("scenario filter matches zero records");
  }
  out.model_fingerprint = model.fingerprint();
  out.dataset_fingerprint = dataset.fingerprint();
  out.seed = dataset.provenance().seed;
  return out;
}

inline SimulationResult simulate_bundle(const Dataset& dataset, const TrainedModel& model, const Scenario& bundle) {
  if (bundle.levers.size() < 2) throw ValidationError("a bundle needs at least 2 levers");
  return simulate(dataset, model, bundle);
}

struct SubgroupRow {
  std::string field, group;
  std::size_t count = 0;
  double reach = 0;
  double gain_points = 0;  // mean delta within the group
  bool lagging = false;    // below the population gain

  double gain_pct() const { return points_to_pct(gain_points); }
};

/// Per-group count, reach and mean gain for each segmentation field.
/// Records missing a field form a "(missing)" group so counts always sum to
/// the population. Groups are in codebook category order.
inline std::vector<SubgroupRow> disaggregate(const SimulationResult& result, const Dataset& dataset,
                                             const std::vector<std::string>& fields) {
  if (result.size() != dataset.size()) throw ValidationError("result and dataset sizes differ");
  const auto& cb = dataset.codebook();
  std::vector<SubgroupRow> out;
  for (const auto& name : fields) {
    const auto idx = cb.index_of(name);
    const auto& f = cb.field(idx);
    if (f.modifiable) throw ValidationError("disaggregation field '" + name + "' is not a segmentation variable");
    std::map<std::pair<double, std::string>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& c = dataset.record(i).responses[idx];
      auto key = c ? std::make_pair(*c, dataset.cell_text(i, idx)) : std::make_pair(double(INFINITY), std::string("(missing)"));
      groups[key].push_back(i);
    }
    for (const auto& [key, members] : groups) {
      SubgroupRow row{name, key.second, members.size(), 0, 0, false};
      std::size_t reached = 0;
      double sum = 0;
      for (auto i : members) {
        sum += result.delta[i];
        reached += result.reached[i] ? 1 : 0;
      }
      row.reach = static_cast<double>(reached) / static_cast<double>(members.size());
      row.gain_points = sum / static_cast<double>(members.size());
      row.lagging = row.gain_points < result.population_gain_points;
      out.push_back(row);
    }
  }
  return out;
}

inline json to_json(const std::vector<SubgroupRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"field", r.field},
                 {"group", r.group},
                 {"count", r.count},
                 {"reach", r.reach},
                 {"gain_points", r.gain_points},
                 {"gain_pct", r.gain_pct()},
                 {"lagging", r.lagging}});
  return a;
}

struct ResponderConfig {
  double non_responder_threshold = 0.0;  // points
  double deep_decile = 0.10;
  double high_baseline_quantile = 0.75;
};

struct PartitionProfile {
  std::string partition;
  std::size_t count = 0;
  double share = 0;
  double mean_baseline_pct = 0;
  double mean_gain_pct = 0;  // mean over the scenario set, percent of the index
  std::size_t ceiling = 0;
  std::vector<std::pair<std::string, std::string>> modal;  // field -> modal label

  json to_json() const {
    json m = json::object();
    for (const auto& [f, v] : modal) m[f] = v;
    return {{"partition", partition},           {"count", count},
            {"share", share},                   {"mean_baseline_pct", mean_baseline_pct},
            {"mean_gain_pct", mean_gain_pct},   {"ceiling", ceiling},
            {"modal", m}};
  }
};

struct ScenarioNonResponders {
  std::string scenario;
  std::vector<std::string> ids;
  std::vector<std::string> ceiling_ids;
};

struct ResponderPartition {
  std::vector<ScenarioNonResponders> per_scenario;
  std::vector<std::string> non_responders;  // delta <= threshold in at least one scenario
  std::vector<std::string> broad_responders;
  std::vector<std::string> deep_impact;
  std::vector<PartitionProfile> profiles;
  double ceiling_baseline_points = 0;

  json to_json() const {
    json per = json::array();
    for (const auto& s : per_scenario)
      per.push_back({{"scenario", s.scenario},
                     {"count", s.ids.size()},
                     {"ceiling_count", s.ceiling_ids.size()},
                     {"ids", s.ids},
                     {"ceiling_ids", s.ceiling_ids}});
    json prof = json::array();
    for (const auto& p : profiles) prof.push_back(p.to_json());
    return {{"per_scenario", per},
            {"non_responders", non_responders},
            {"broad_responders", broad_responders},
            {"deep_impact", deep_impact},
            {"ceiling_baseline_points", ceiling_baseline_points},
            {"profiles", prof}};
  }
};

namespace detail {

/// Linear-interpolated sample quantile.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Non-responders per scenario (delta <= threshold, "ceiling" when the
/// baseline prediction is at or above the high-baseline quantile), broad
/// responders (delta > threshold in every scenario) and the deep-impact top
/// share of broad responders by mean delta (ties by record order).
inline ResponderPartition partition_responders(const std::vector<SimulationResult>& results, const Dataset& dataset,
                                               const ResponderConfig& config = {}) {
  if (results.empty()) throw ValidationError("partition needs at least one scenario result");
  const std::size_t n = dataset.size();
  for (const auto& r : results)
    if (r.size() != n) throw ValidationError("all results must cover the same population");
  ResponderPartition out;
  const auto& base = results.front().baseline;
  out.ceiling_baseline_points = detail::quantile(base, config.high_baseline_quantile);
  std::vector<bool> any_non(n, false), all_pos(n, true);
  std::vector<double> mean_delta(n, 0.0);
  for (const auto& r : results) {
    ScenarioNonResponders s{r.scenario.name, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      mean_delta[i] += r.delta[i] / static_cast<double>(results.size());
      if (r.delta[i] <= config.non_responder_threshold) {
        any_non[i] = true;
        all_pos[i] = false;
        s.ids.push_back(r.record_ids[i]);
        if (base[i] >= out.ceiling_baseline_points) s.ceiling_ids.push_back(r.record_ids[i]);
      }
    }
    out.per_scenario.push_back(std::move(s));
  }
  std::vector<std::size_t> non_idx, broad_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (any_non[i]) non_idx.push_back(i);
    if (all_pos[i]) broad_idx.push_back(i);
  }
  auto ranked = broad_idx;
  std::stable_sort(ranked.begin(), ranked.end(), [&](auto a, auto b) { return mean_delta[a] > mean_delta[b]; });
  const auto deep_n = static_cast<std::size_t>(std::ceil(config.deep_decile * static_cast<double>(ranked.size())));
  std::vector<std::size_t> deep_idx(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(deep_n));
  std::sort(deep_idx.begin(), deep_idx.end());

  auto ids = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> v;
    for (auto i : idx) v.push_back(dataset.record(i).record_id);
    return v;
  };
  out.non_responders = ids(non_idx);
  out.broad_responders = ids(broad_idx);
  out.deep_impact = ids(deep_idx);

  const auto segmentation = classify_features(dataset.codebook()).segmentation;
  auto profile = [&](const std::string& name, const std::vector<std::size_t>& idx) {
    PartitionProfile p;
    p.partition = name;
    p.count = idx.size();
    p.share = n ? static_cast<double>(idx.size()) / static_cast<double>(n) : 0.0;
    for (auto i : idx) {
      p.mean_baseline_pct += points_to_pct(base[i]);
      p.mean_gain_pct += points_to_pct(mean_delta[i]);
      if (base[i] >= out.ceiling_baseline_points) ++p.ceiling;
    }
    if (!idx.empty()) {
      p.mean_baseline_pct /= static_cast<double>(idx.size());
      p.mean_gain_pct /= static_cast<double>(idx.size());
    }
    for (const auto& fname : segmentation) {
      const auto f = dataset.codebook().index_of(fname);
      std::map<std::string, std::size_t> counts;
      for (auto i : idx)
        if (dataset.record(i).responses[f]) ++counts[dataset.cell_text(i, f)];
      std::string best;
      std::size_t best_n = 0;
      for (const auto& [label, c] : counts)
        if (c > best_n) {
          best = label;
          best_n = c;
        }
      if (best_n > 0) p.modal.emplace_back(fname, best);
    }
    return p;
  };
  out.profiles = {profile("non_responders", non_idx), profile("broad_responders", broad_idx),
                  profile("deep_impact", deep_idx)};
  return out;
}

}  // namespace dflsim
