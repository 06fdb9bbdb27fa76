#pragma once

#include <cmath>
#include <optional>
#include <span>

#include "dflsim/common.hpp"

namespace dflsim {

/// Test-set error metrics on the index point scale.
struct EvaluationReport {
  double mse = 0, rmse = 0, mae = 0;
  std::optional<double> test_r2;  // undefined when the targets have zero variance
  std::optional<double> cv_r2_mean, cv_r2_std;
};

/// 1 - SSE/SST with SST taken on `targets`. nullopt when SST is zero.
inline std::optional<double> r_squared(std::span<const double> predictions, std::span<const double> targets) {
  if (targets.empty() || predictions.size() != targets.size()) return std::nullopt;
  double mean = 0;
  for (double t : targets) mean += t;
  mean /= static_cast<double>(targets.size());
  double sse = 0, sst = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    sse += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
    sst += (targets[i] - mean) * (targets[i] - mean);
  }
  if (sst == 0) return std::nullopt;
  return 1.0 - sse / sst;
}

inline EvaluationReport error_metrics(std::span<const double> predictions, std::span<const double> targets) {
  if (targets.empty()) throw ValidationError("evaluation set is empty");
  if (predictions.size() != targets.size()) throw ValidationError("prediction/target length mismatch");
  EvaluationReport r;
  double se = 0, ae = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double e = targets[i] - predictions[i];
    se += e * e;
    ae += std::abs(e);
  }
  r.mse = se / static_cast<double>(targets.size());
  r.rmse = std::sqrt(r.mse);
  r.mae = ae / static_cast<double>(targets.size());
  r.test_r2 = r_squared(predictions, targets);
  return r;
}

}  // namespace dflsim
