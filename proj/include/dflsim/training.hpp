#pragma once

// End-to-end training: stratified hold-out, k-fold CV per family, final fit
// on the training partition, test evaluation, selection, and the lever
// table of the chosen model.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "dflsim/model_pipeline.hpp"
#include "dflsim/models.hpp"
#include "dflsim/policy_levers.hpp"

namespace dflsim {

struct TrainingRequest {
  SplitSpec split;
  std::vector<ModelFamily> families{ModelFamily::Linear, ModelFamily::RandomForest, ModelFamily::GradientBoosting};
  ModelSpec configs;  // per-family configs; ensemble seeds are derived from split.seed
  double epsilon = 0.01;

  json to_json() const {
    json fam = json::array();
    for (auto f : families) {
      ModelSpec s = configs;
      s.family = f;
      fam.push_back({{"family", to_string(f)}, {"config", s.config_json()}});
    }
    return {{"split", split.to_json()}, {"families", fam}, {"epsilon", epsilon}};
  }

  /// Accepts {"split": {...}, "families": [..] or "a,b", "epsilon",
  /// "configs": {"linear"|"forest"|"boosting": {...}}}; absent keys keep defaults.
  static TrainingRequest from_json(const json& j) {
    TrainingRequest r;
    try {
      if (j.contains("split")) {
        const auto& s = j.at("split");
        r.split.test_fraction = s.value("test_fraction", r.split.test_fraction);
        r.split.strata_field = s.value("strata_field", r.split.strata_field);
        r.split.folds = s.value("folds", r.split.folds);
        r.split.seed = s.value("seed", r.split.seed);
      }
      if (j.contains("families")) {
        const auto& f = j.at("families");
        r.families = f.is_string() ? parse_families(f.get<std::string>()) : std::vector<ModelFamily>{};
        if (f.is_array())
          for (const auto& x : f) r.families.push_back(parse_family(x.get<std::string>()));
      }
      r.epsilon = j.value("epsilon", r.epsilon);
      if (j.contains("configs")) {
        const auto& c = j.at("configs");
        if (c.contains("linear")) r.configs.linear.ridge = c["linear"].value("ridge", r.configs.linear.ridge);
        if (c.contains("forest")) {
          const auto& f = c["forest"];
          auto& o = r.configs.forest;
          o.trees = f.value("trees", o.trees);
          o.max_depth = f.value("max_depth", o.max_depth);
          o.min_leaf = f.value("min_leaf", o.min_leaf);
          o.max_features = f.value("max_features", o.max_features);
          o.bootstrap = f.value("bootstrap", o.bootstrap);
        }
        if (c.contains("boosting")) {
          const auto& b = c["boosting"];
          auto& o = r.configs.boosting;
          o.trees = b.value("trees", o.trees);
          o.max_depth = b.value("max_depth", o.max_depth);
          o.min_leaf = b.value("min_leaf", o.min_leaf);
          o.learning_rate = b.value("learning_rate", o.learning_rate);
          o.subsample = b.value("subsample", o.subsample);
        }
      }
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed training request: ") + e.what());
    }
    r.split.validate();
    if (r.families.empty()) throw ValidationError("no model families requested");
    return r;
  }

  /// "linear,forest,boosting"; duplicates are an error.
  static std::vector<ModelFamily> parse_families(std::string_view list) {
    std::vector<ModelFamily> out;
    std::size_t start = 0;
    while (start <= list.size()) {
      auto end = list.find(',', start);
      if (end == std::string_view::npos) end = list.size();
      auto item = list.substr(start, end - start);
      if (!item.empty()) {
        const auto f = parse_family(item);
        if (std::find(out.begin(), out.end(), f) != out.end())
          throw ValidationError("family '" + std::string(item) + "' listed twice");
        out.push_back(f);
      }
      start = end + 1;
    }
    return out;
  }
};

struct FamilyOutcome {
  ModelFamily family = ModelFamily::Linear;
  EvaluationReport report;
  std::vector<std::optional<double>> fold_r2;
  TrainedModel model;
};

struct TrainingResult {
  TrainingRequest request;
  std::vector<FamilyOutcome> outcomes;
  SelectionResult selection;
  std::optional<LeverTable> levers;
  std::string lever_error;
  std::string dataset_fingerprint;
  std::size_t train_count = 0, test_count = 0;
  Warnings warnings;

  const FamilyOutcome& chosen() const {
    for (const auto& o : outcomes)
      if (o.family == selection.chosen) return o;
    throw Error("chosen family missing from outcomes");
  }

  /// Comparison and selection without the (large) tree parameters.
  json report_json() const {
    json fams = json::array();
    for (const auto& o : outcomes) {
      json folds = json::array();
      for (const auto& r : o.fold_r2) folds.push_back(r ? json(*r) : json(nullptr));
      fams.push_back({{"family", to_string(o.family)},
                      {"transparency_rank", transparency_rank(o.family)},
                      {"config", o.model.config()},
                      {"evaluation", dflsim::to_json(o.report)},
                      {"fold_r2", folds},
                      {"model_fingerprint", o.model.fingerprint()}});
    }
    json j{{"request", request.to_json()},
           {"dataset_fingerprint", dataset_fingerprint},
           {"train_count", train_count},
           {"test_count", test_count},
           {"families", fams},
           {"selection", selection.to_json()},
           {"warnings", warnings}};
    if (levers) j["lever_table"] = levers->to_json();
    else j["lever_error"] = lever_error;
    return j;
  }

  /// Artifact of the chosen model: parameters, plan, evaluation, selection.
  json artifact_json() const {
    const auto& c = chosen();
    json j = c.model.to_json();
    j["evaluation"] = dflsim::to_json(c.report);
    j["selection"] = selection.to_json();
    j["dataset_fingerprint"] = dataset_fingerprint;
    j["seed"] = request.split.seed;
    if (levers) j["lever_table"] = levers->to_json();
    return j;
  }
};

inline ModelSpec family_spec(const TrainingRequest& req, ModelFamily f) {
  ModelSpec s = req.configs;
  s.family = f;
  s.forest.seed = derive_seed(req.split.seed, 0xF0);
  s.boosting.seed = derive_seed(req.split.seed, 0xB0);
  return s;
}

inline TrainingResult train_and_select(const Dataset& dataset, const TrainingRequest& request) {
  if (request.families.empty()) throw ValidationError("no model families requested");
  request.split.validate();
  TrainingResult out;
  out.request = request;
  out.dataset_fingerprint = dataset.fingerprint();
  const auto targets = dfl_targets(dataset);
  const auto split = stratified_split(dataset, request.split);
  out.train_count = split.train.size();
  out.test_count = split.test.size();

  auto plan = fit_preprocess(dataset.codebook(), dataset.records(), split.train, "train", &out.warnings);
  const auto x_train = apply_preprocess(plan, dataset.records(), split.train);
  const auto x_test = apply_preprocess(plan, dataset.records(), split.test);
  std::vector<double> y_train, y_test;
  for (auto r : split.train) y_train.push_back(targets[r]);
  for (auto r : split.test) y_test.push_back(targets[r]);

  std::vector<SelectionCandidate> candidates;
  for (auto family : request.families) {
    const auto spec = family_spec(request, family);
    auto cv = cross_validate(
        dataset, split.train, targets, [&](const FeatureMatrix& x, const std::vector<double>& y) {
          return fit_model(spec, x, y);
        },
        request.split);
    for (auto& w : cv.warnings) out.warnings.push_back(to_string(family) + ": " + w);
    FamilyOutcome o;
    o.family = family;
    o.model = fit_model(spec, x_train, y_train);
    o.model.attach_plan(plan);
    o.report = evaluate(o.model, x_test, y_test);
    o.report.cv_r2_mean = cv.mean;
    o.report.cv_r2_std = cv.std;
    o.fold_r2 = cv.fold_r2;
    candidates.push_back({family, o.report, transparency_rank(family)});
    out.outcomes.push_back(std::move(o));
  }
  out.selection = select_model(candidates, request.epsilon);
  for (const auto& w : out.selection.warnings) out.warnings.push_back(w);
  try {
    out.levers = lever_table(out.chosen().model, dataset.codebook());
  } catch (const ValidationError& e) {
    out.lever_error = e.what();
  }
  return out;
}

}  // namespace dflsim
