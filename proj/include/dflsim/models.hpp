#pragma once

// Model families (linear regression, random forest, gradient boosting),
// their evaluation, and the accuracy -> stability -> transparency selection
// rule.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dflsim/metrics.hpp"
#include "dflsim/model_pipeline.hpp"

namespace dflsim {

enum class ModelFamily { Linear, RandomForest, GradientBoosting };

inline std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Linear: return "linear";
    case ModelFamily::RandomForest: return "forest";
    case ModelFamily::GradientBoosting: return "boosting";
  }
  return "?";
}

inline ModelFamily parse_family(std::string_view s) {
  if (s == "linear") return ModelFamily::Linear;
  if (s == "forest") return ModelFamily::RandomForest;
  if (s == "boosting") return ModelFamily::GradientBoosting;
  throw ValidationError("unknown model family '" + std::string(s) + "'");
}

/// 1 is the most transparent.
constexpr int transparency_rank(ModelFamily f) {
  switch (f) {
    case ModelFamily::Linear: return 1;
    case ModelFamily::GradientBoosting: return 2;
    case ModelFamily::RandomForest: return 3;
  }
  return 99;
}

struct LinearConfig {
  double ridge = 1e-8;
};

struct ForestConfig {
  int trees = 100;
  int max_depth = 8;
  int min_leaf = 5;
  int max_features = 0;  // 0: floor(sqrt(columns))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct BoostingConfig {
  int trees = 200;
  int max_depth = 3;
  int min_leaf = 1;
  double learning_rate = 0.1;
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

struct ModelSpec {
  ModelFamily family = ModelFamily::Linear;
  LinearConfig linear;
  ForestConfig forest;
  BoostingConfig boosting;

  json config_json() const {
    switch (family) {
      case ModelFamily::Linear: return {{"ridge", linear.ridge}};
      case ModelFamily::RandomForest:
        return {{"trees", forest.trees},           {"max_depth", forest.max_depth}, {"min_leaf", forest.min_leaf},
                {"max_features", forest.max_features}, {"bootstrap", forest.bootstrap}, {"seed", forest.seed}};
      case ModelFamily::GradientBoosting:
        return {{"trees", boosting.trees},       {"max_depth", boosting.max_depth},
                {"min_leaf", boosting.min_leaf}, {"learning_rate", boosting.learning_rate},
                {"subsample", boosting.subsample}, {"seed", boosting.seed}};
    }
    return {};
  }
};

struct LinearParams {
  double intercept = 0;
  std::vector<double> coefficients;
  // fit-set statistics used for standardized coefficients
  std::vector<double> column_means, column_stds;
  double target_mean = 0, target_std = 0;
};

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0;
  int left = -1, right = -1;
  double value = 0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  int depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      const auto& n = nodes[static_cast<std::size_t>(i)];
      if (n.feature >= 0) {
        stack.push_back({n.left, d + 1});
        stack.push_back({n.right, d + 1});
      }
    }
    return best;
  }
};

/// Forest: base 0, scale 1/trees. Boosting: base = target mean, scale = rate.
struct TreeEnsemble {
  double base = 0;
  double scale = 1;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const {
    double s = 0;
    for (const auto& t : trees) s += t.predict(x);
    return base + scale * s;
  }
};

class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(ModelFamily family, json config, std::variant<LinearParams, TreeEnsemble> params,
               std::vector<std::string> columns)
      : family_(family), config_(std::move(config)), params_(std::move(params)), columns_(std::move(columns)) {}

  ModelFamily family() const { return family_; }
  int transparency_rank() const { return dflsim::transparency_rank(family_); }
  const json& config() const { return config_; }
  const std::vector<std::string>& columns() const { return columns_; }
  bool is_linear() const { return std::holds_alternative<LinearParams>(params_); }
  const LinearParams& linear() const { return std::get<LinearParams>(params_); }
  const TreeEnsemble& ensemble() const { return std::get<TreeEnsemble>(params_); }

  const std::optional<PreprocessPlan>& plan() const { return plan_; }
  void attach_plan(PreprocessPlan plan) { plan_ = std::move(plan); }

  double predict_row(std::span<const double> x) const {
    if (x.size() != columns_.size()) throw ValidationError("feature row width does not match the model");
    if (const auto* lin = std::get_if<LinearParams>(&params_)) {
      double s = lin->intercept;
      for (std::size_t j = 0; j < x.size(); ++j) s += lin->coefficients[j] * x[j];
      return s;
    }
    return std::get<TreeEnsemble>(params_).predict(x);
  }

  std::vector<double> predict(const FeatureMatrix& x) const {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict_row(x.row(i));
    return out;
  }

  /// Predicts raw records through the attached preprocessing plan.
  std::vector<double> predict_records(const std::vector<SurveyRecord>& records) const {
    if (!plan_) throw ValidationError("model has no preprocessing plan attached");
    return predict(apply_preprocess(*plan_, records));
  }

  json to_json() const {
    json j;
    j["family"] = to_string(family_);
    j["transparency_rank"] = transparency_rank();
    j["config"] = config_;
    j["columns"] = columns_;
    if (const auto* lin = std::get_if<LinearParams>(&params_)) {
      j["parameters"] = {{"intercept", lin->intercept},     {"coefficients", lin->coefficients},
                         {"column_means", lin->column_means}, {"column_stds", lin->column_stds},
                         {"target_mean", lin->target_mean},   {"target_std", lin->target_std}};
    } else {
      const auto& e = std::get<TreeEnsemble>(params_);
      json trees = json::array();
      for (const auto& t : e.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        trees.push_back(std::move(nodes));
      }
      j["parameters"] = {{"base", e.base}, {"scale", e.scale}, {"trees", std::move(trees)}};
    }
    if (plan_) {
      j["plan"] = plan_->to_json();
      j["plan_fingerprint"] = plan_->fingerprint();
    }
    return j;
  }

  static TrainedModel from_json(const json& j) {
    try {
      const auto family = parse_family(j.at("family").get<std::string>());
      const auto& p = j.at("parameters");
      std::variant<LinearParams, TreeEnsemble> params;
      if (family == ModelFamily::Linear) {
        LinearParams lin;
        lin.intercept = p.at("intercept").get<double>();
        lin.coefficients = p.at("coefficients").get<std::vector<double>>();
        lin.column_means = p.at("column_means").get<std::vector<double>>();
        lin.column_stds = p.at("column_stds").get<std::vector<double>>();
        lin.target_mean = p.at("target_mean").get<double>();
        lin.target_std = p.at("target_std").get<double>();
        params = std::move(lin);
      } else {
        TreeEnsemble e;
        e.base = p.at("base").get<double>();
        e.scale = p.at("scale").get<double>();
        for (const auto& tj : p.at("trees")) {
          RegressionTree t;
          for (const auto& n : tj)
            t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                               n.at(4).get<double>()});
          e.trees.push_back(std::move(t));
        }
        params = std::move(e);
      }
      TrainedModel m(family, j.at("config"), std::move(params), j.at("columns").get<std::vector<std::string>>());
      if (j.contains("plan")) m.attach_plan(PreprocessPlan::from_json(j.at("plan")));
      return m;
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed model artifact: ") + e.what());
    }
  }

  std::string fingerprint() const { return hex64(fnv1a(to_json().dump())); }

 private:
  ModelFamily family_ = ModelFamily::Linear;
  json config_;
  std::variant<LinearParams, TreeEnsemble> params_;
  std::vector<std::string> columns_;
  std::optional<PreprocessPlan> plan_;
};

namespace detail {

inline void check_inputs(const FeatureMatrix& x, std::span<const double> y) {
  if (x.rows != y.size()) throw ValidationError("feature rows and targets differ in length");
  for (double v : x.values)
    if (!std::isfinite(v)) throw NumericError("non-finite feature value");
  for (double v : y)
    if (!std::isfinite(v)) throw NumericError("non-finite target value");
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix (row-major, n x n).
/// On return `a` holds eigenvalues on the diagonal and `v` the eigenvectors
/// as columns.
inline void jacobi_eigen(std::vector<double>& a, std::vector<double>& v, std::size_t n) {
  v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0, diag = 0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += at(i, i) * at(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (off <= 1e-30 * diag || off == 0) return;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
  }
}

inline double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Ridge-stabilized least squares with an unpenalized intercept. Solved on
/// centered data through the eigen-decomposition of the Gram matrix;
/// directions with numerically zero curvature (collinear columns) are
/// dropped, which yields the minimum-norm solution for rank-deficient input.
inline TrainedModel fit_linear(const FeatureMatrix& x, std::span<const double> y, LinearConfig config = {}) {
  detail::check_inputs(x, y);
  if (x.rows == 0) throw ValidationError("cannot fit on zero rows");
  if (!(config.ridge >= 0)) throw ValidationError("ridge must be non-negative");
  const std::size_t n = x.rows, p = x.cols;
  LinearParams lp;
  lp.column_means.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) lp.column_means[j] += x(i, j);
  for (auto& m : lp.column_means) m /= static_cast<double>(n);
  lp.target_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> gram(p * p, 0.0), rhs(p, 0.0), centered(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) centered[j] = x(i, j) - lp.column_means[j];
    const double yc = y[i] - lp.target_mean;
    for (std::size_t j = 0; j < p; ++j) {
      rhs[j] += centered[j] * yc;
      const double cj = centered[j];
      if (cj == 0) continue;
      for (std::size_t k = j; k < p; ++k) gram[j * p + k] += cj * centered[k];
    }
  }
  lp.column_stds.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < j; ++k) gram[j * p + k] = gram[k * p + j];
    lp.column_stds[j] = n > 1 ? std::sqrt(gram[j * p + j] / static_cast<double>(n - 1)) : 0.0;
  }
  lp.target_std = detail::sample_std(y, lp.target_mean);

  std::vector<double> vecs;
  detail::jacobi_eigen(gram, vecs, p);
  double max_eig = 0;
  for (std::size_t k = 0; k < p; ++k) max_eig = std::max(max_eig, gram[k * p + k]);
  const double cutoff = 1e-11 * max_eig;
  lp.coefficients.assign(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    const double eig = gram[k * p + k];
    if (eig <= cutoff) continue;
    double proj = 0;
    for (std::size_t j = 0; j < p; ++j) proj += vecs[j * p + k] * rhs[j];
    const double w = proj / (eig + config.ridge);
    for (std::size_t j = 0; j < p; ++j) lp.coefficients[j] += w * vecs[j * p + k];
  }
  lp.intercept = lp.target_mean;
  for (std::size_t j = 0; j < p; ++j) {
    if (!std::isfinite(lp.coefficients[j])) throw NumericError("linear solve produced a non-finite coefficient");
    lp.intercept -= lp.coefficients[j] * lp.column_means[j];
  }
  return TrainedModel(ModelFamily::Linear, ModelSpec{ModelFamily::Linear, config, {}, {}}.config_json(),
                      std::move(lp), x.column_names.empty() ? std::vector<std::string>(p) : x.column_names);
}

namespace detail {

/// Per-column split candidates. bin(x) = number of cuts strictly below x,
/// so `x <= cuts[b]` is exactly `bin(x) <= b`.
struct Binner {
  std::vector<std::vector<double>> cuts;
  std::vector<std::uint8_t> bins;  // row-major, rows x cols
  std::size_t cols = 0;

  Binner(const FeatureMatrix& x, std::size_t max_bins = 255) : cuts(x.cols), bins(x.rows * x.cols), cols(x.cols) {
    std::vector<double> col(x.rows);
    for (std::size_t j = 0; j < x.cols; ++j) {
      for (std::size_t i = 0; i < x.rows; ++i) col[i] = x(i, j);
      std::sort(col.begin(), col.end());
      std::vector<double> distinct;
      for (double v : col)
        if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
      std::vector<double> mids;
      for (std::size_t k = 0; k + 1 < distinct.size(); ++k) mids.push_back(0.5 * (distinct[k] + distinct[k + 1]));
      if (mids.size() > max_bins - 1) {
        std::vector<double> chosen;
        const std::size_t keep = max_bins - 1;
        for (std::size_t k = 0; k < keep; ++k) {
          const double q = static_cast<double>(k + 1) / static_cast<double>(keep + 1);
          const double v = col[std::min(col.size() - 1, static_cast<std::size_t>(q * static_cast<double>(col.size())))];
          auto it = std::lower_bound(mids.begin(), mids.end(), v);
          if (it == mids.end()) --it;
          if (chosen.empty() || *it > chosen.back()) chosen.push_back(*it);
        }
        mids = std::move(chosen);
      }
      cuts[j] = std::move(mids);
      for (std::size_t i = 0; i < x.rows; ++i)
        bins[i * cols + j] = static_cast<std::uint8_t>(
            std::lower_bound(cuts[j].begin(), cuts[j].end(), x(i, j)) - cuts[j].begin());
    }
  }

  std::uint8_t bin(std::size_t row, std::size_t col) const { return bins[row * cols + col]; }
};

struct TreeParams {
  int max_depth = 3;
  int min_leaf = 1;
  int max_features = 0;  // 0 = all
};

/// Least-squares regression tree on binned features. `rows` may repeat
/// (bootstrap). Ties between candidate splits go to the earlier feature,
/// then the lower cut.
inline RegressionTree fit_tree(const Binner& binner, std::span<const double> target, std::vector<std::size_t> rows,
                               const TreeParams& params, std::mt19937_64* rng) {
  RegressionTree tree;
  struct Work {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  const std::size_t p = binner.cols;
  std::vector<std::size_t> features(p);
  std::iota(features.begin(), features.end(), 0);
  const std::size_t mtry =
      params.max_features > 0 ? std::min<std::size_t>(p, static_cast<std::size_t>(params.max_features)) : p;

  tree.nodes.push_back({});
  std::vector<Work> stack;
  stack.push_back({0, std::move(rows), 0});
  std::vector<double> hsum;
  std::vector<std::size_t> hcount;
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    double sum = 0;
    for (auto r : w.rows) sum += target[r];
    const double n = static_cast<double>(w.rows.size());
    tree.nodes[static_cast<std::size_t>(w.node)].value = w.rows.empty() ? 0.0 : sum / n;
    if (w.depth >= params.max_depth || w.rows.size() < 2 * static_cast<std::size_t>(std::max(1, params.min_leaf)))
      continue;

    if (mtry < p && rng) {
      // partial Fisher-Yates for a feature subset, then restore sorted order
      for (std::size_t k = 0; k < mtry; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, p - 1);
        std::swap(features[k], features[pick(*rng)]);
      }
      std::sort(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(mtry));
    }
    const double parent = sum * sum / n;
    double best_gain = 1e-12 * std::max(1.0, std::abs(parent));
    int best_feature = -1;
    std::size_t best_cut = 0;
    for (std::size_t fi = 0; fi < mtry; ++fi) {
      const std::size_t f = features[fi];
      const std::size_t nb = binner.cuts[f].size() + 1;
      if (nb < 2) continue;
      hsum.assign(nb, 0.0);
      hcount.assign(nb, 0);
      for (auto r : w.rows) {
        const auto b = binner.bin(r, f);
        hsum[b] += target[r];
        ++hcount[b];
      }
      double ls = 0;
      std::size_t lc = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        ls += hsum[b];
        lc += hcount[b];
        const std::size_t rc = w.rows.size() - lc;
        if (lc < static_cast<std::size_t>(params.min_leaf)) continue;
        if (rc < static_cast<std::size_t>(params.min_leaf)) break;
        if (lc == 0 || rc == 0) continue;
        const double rs = sum - ls;
        const double gain = ls * ls / static_cast<double>(lc) + rs * rs / static_cast<double>(rc) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_cut = b;
        }
      }
    }
    if (best_feature < 0) continue;
    std::vector<std::size_t> left, right;
    for (auto r : w.rows)
      (binner.bin(r, static_cast<std::size_t>(best_feature)) <= best_cut ? left : right).push_back(r);
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    auto& node = tree.nodes[static_cast<std::size_t>(w.node)];
    node.feature = best_feature;
    node.threshold = binner.cuts[static_cast<std::size_t>(best_feature)][best_cut];
    node.left = li;
    node.right = li + 1;
    stack.push_back({li + 1, std::move(right), w.depth + 1});
    stack.push_back({li, std::move(left), w.depth + 1});
  }
  return tree;
}

}  // namespace detail

/// Bagged least-squares trees; prediction is the mean over trees. Tree t
/// uses a seed derived from (seed, t).
inline TrainedModel fit_forest(const FeatureMatrix& x, std::span<const double> y, ForestConfig config = {}) {
  detail::check_inputs(x, y);
  if (x.rows < 2) throw ValidationError("forest needs at least 2 rows");
  if (config.trees < 1) throw ValidationError("forest needs at least 1 tree");
  const detail::Binner binner(x);
  detail::TreeParams tp{config.max_depth, config.min_leaf,
                        config.max_features > 0
                            ? config.max_features
                            : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols)))))};
  TreeEnsemble e;
  e.base = 0;
  e.scale = 1.0 / config.trees;
  for (int t = 0; t < config.trees; ++t) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(x.rows);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, x.rows - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    e.trees.push_back(detail::fit_tree(binner, y, std::move(rows), tp, &rng));
  }
  ModelSpec spec;
  spec.family = ModelFamily::RandomForest;
  spec.forest = config;
  return TrainedModel(ModelFamily::RandomForest, spec.config_json(), std::move(e),
                      x.column_names.empty() ? std::vector<std::string>(x.cols) : x.column_names);
}

/// Stage-wise least-squares boosting from the target mean. With
/// `training_mse` set, records the fit-set MSE after each stage (index 0 is
/// the constant model).
inline TrainedModel fit_boosting(const FeatureMatrix& x, std::span<const double> y, BoostingConfig config = {},
                                 std::vector<double>* training_mse = nullptr) {
  detail::check_inputs(x, y);
  if (x.rows < 2) throw ValidationError("boosting needs at least 2 rows");
  if (config.trees < 1) throw ValidationError("boosting needs at least 1 tree");
  if (!(config.subsample > 0 && config.subsample <= 1)) throw ValidationError("subsample must be in (0, 1]");
  const detail::Binner binner(x);
  const detail::TreeParams tp{config.max_depth, config.min_leaf, 0};
  TreeEnsemble e;
  e.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  e.scale = config.learning_rate;
  std::vector<double> pred(x.rows, e.base), residual(x.rows);
  auto mse = [&] {
    double s = 0;
    for (std::size_t i = 0; i < x.rows; ++i) s += (y[i] - pred[i]) * (y[i] - pred[i]);
    return s / static_cast<double>(x.rows);
  };
  if (training_mse) training_mse->assign(1, mse());
  std::mt19937_64 rng(derive_seed(config.seed, 0));
  for (int t = 0; t < config.trees; ++t) {
    for (std::size_t i = 0; i < x.rows; ++i) residual[i] = y[i] - pred[i];
    std::vector<std::size_t> rows;
    if (config.subsample < 1.0) {
      std::bernoulli_distribution keep(config.subsample);
      for (std::size_t i = 0; i < x.rows; ++i)
        if (keep(rng)) rows.push_back(i);
      if (rows.empty()) rows.push_back(0);
    } else {
      rows.resize(x.rows);
      std::iota(rows.begin(), rows.end(), 0);
    }
    auto tree = detail::fit_tree(binner, residual, std::move(rows), tp, nullptr);
    for (std::size_t i = 0; i < x.rows; ++i) pred[i] += config.learning_rate * tree.predict(x.row(i));
    e.trees.push_back(std::move(tree));
    if (training_mse) training_mse->push_back(mse());
  }
  ModelSpec spec;
  spec.family = ModelFamily::GradientBoosting;
  spec.boosting = config;
  return TrainedModel(ModelFamily::GradientBoosting, spec.config_json(), std::move(e),
                      x.column_names.empty() ? std::vector<std::string>(x.cols) : x.column_names);
}

inline TrainedModel fit_model(const ModelSpec& spec, const FeatureMatrix& x, std::span<const double> y) {
  switch (spec.family) {
    case ModelFamily::Linear: return fit_linear(x, y, spec.linear);
    case ModelFamily::RandomForest: return fit_forest(x, y, spec.forest);
    case ModelFamily::GradientBoosting: return fit_boosting(x, y, spec.boosting);
  }
  throw ValidationError("unknown family");
}

/// Test-set metrics for a fitted model.
inline EvaluationReport evaluate(const TrainedModel& model, const FeatureMatrix& x, std::span<const double> y) {
  if (x.rows == 0) throw ValidationError("evaluation set is empty");
  return error_metrics(model.predict(x), y);
}

struct SelectionCandidate {
  ModelFamily family = ModelFamily::Linear;
  EvaluationReport report;
  int transparency_rank = 0;
};

struct SelectionResult {
  ModelFamily chosen = ModelFamily::Linear;
  double epsilon = 0.01;
  double stability_tolerance = 0.10;
  std::vector<ModelFamily> accuracy_survivors, stability_survivors, transparency_survivors;
  Warnings warnings;

  json to_json() const {
    auto names = [](const std::vector<ModelFamily>& v) {
      json a = json::array();
      for (auto f : v) a.push_back(to_string(f));
      return a;
    };
    return {{"chosen", to_string(chosen)},
            {"epsilon", epsilon},
            {"stability_tolerance", stability_tolerance},
            {"accuracy_survivors", names(accuracy_survivors)},
            {"stability_survivors", names(stability_survivors)},
            {"transparency_survivors", names(transparency_survivors)}};
  }
};

/// Lexicographic selection: test R2 within `epsilon` of the best survive;
/// then CV R2 std within `stability_tolerance` (relative) of the lowest
/// survive; then the lowest transparency rank wins. Survivor lists are in
/// family order so the result does not depend on candidate order.
inline SelectionResult select_model(std::vector<SelectionCandidate> candidates, double epsilon = 0.01,
                                    double stability_tolerance = 0.10) {
  if (candidates.empty()) throw ValidationError("no candidates to select from");
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.family != b.family) return a.family < b.family;
    return a.transparency_rank < b.transparency_rank;
  });
  SelectionResult out;
  out.epsilon = epsilon;
  out.stability_tolerance = stability_tolerance;

  std::vector<const SelectionCandidate*> pool;
  for (const auto& c : candidates)
    if (c.report.test_r2) pool.push_back(&c);
    else out.warnings.push_back(to_string(c.family) + ": test R2 undefined; not eligible on accuracy");
  if (pool.empty())
    for (const auto& c : candidates) pool.push_back(&c);

  if (pool.front()->report.test_r2) {
    double best = -INFINITY;
    for (auto* c : pool) best = std::max(best, *c->report.test_r2);
    std::erase_if(pool, [&](auto* c) { return *c->report.test_r2 < best - epsilon; });
  }
  for (auto* c : pool) out.accuracy_survivors.push_back(c->family);

  auto std_of = [](const SelectionCandidate* c) { return c->report.cv_r2_std.value_or(INFINITY); };
  double lowest = INFINITY;
  for (auto* c : pool) lowest = std::min(lowest, std_of(c));
  if (std::isfinite(lowest))
    std::erase_if(pool, [&](auto* c) { return std_of(c) > lowest * (1.0 + stability_tolerance); });
  for (auto* c : pool) out.stability_survivors.push_back(c->family);

  int best_rank = pool.front()->transparency_rank;
  for (auto* c : pool) best_rank = std::min(best_rank, c->transparency_rank);
  std::erase_if(pool, [&](auto* c) { return c->transparency_rank != best_rank; });
  for (auto* c : pool) out.transparency_survivors.push_back(c->family);
  out.chosen = pool.front()->family;
  return out;
}

inline json to_json(const EvaluationReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"mse", r.mse},       {"rmse", r.rmse}, {"mae", r.mae}, {"test_r2", opt(r.test_r2)},
          {"cv_r2_mean", opt(r.cv_r2_mean)}, {"cv_r2_std", opt(r.cv_r2_std)}};
}

inline EvaluationReport evaluation_from_json(const json& j) {
  auto opt = [&](const char* k) -> std::optional<double> {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    return j.at(k).get<double>();
  };
  EvaluationReport r;
  r.mse = j.at("mse").get<double>();
  r.rmse = j.at("rmse").get<double>();
  r.mae = j.at("mae").get<double>();
  r.test_r2 = opt("test_r2");
  r.cv_r2_mean = opt("cv_r2_mean");
  r.cv_r2_std = opt("cv_r2_std");
  return r;
}

}  // namespace dflsim
