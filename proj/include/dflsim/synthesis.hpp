#pragma once

// Calibrated synthetic survey populations.
//
// Each record carries a latent propensity per item block: one for the
// digital-financial items and one shared by the digital and financial
// items. Item responses are Bernoulli with logit mean `mu + offset + sigma*z`.
// The latents load on a standardized socio-economic score (education and
// area) so that profiling gaps are non-trivial, and are correlated with each
// other so that the composite index has the target spread.
//
// `mu` and `sigma` for each block are solved so the exact mixture moments
// (computed by Gauss-Hermite quadrature over the latent, and by enumeration
// over the discrete socio-economic score) equal the target means and
// variances in points, accounting for the injected missingness.

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dflsim/competency_index.hpp"
#include "dflsim/survey_data.hpp"

namespace dflsim {

/// Default bundled codebook. Allocation: Digital 18, Financial 16,
/// DigitalFinancial 18 one-point binary items.
inline Codebook default_codebook() {
  std::vector<CodebookField> f;
  auto cat = [&](std::string name, Domain d, std::vector<std::string> cats) {
    f.push_back({std::move(name), d, FieldKind::Categorical, 0, false, std::move(cats)});
  };
  cat("country", Domain::Demographic,
      {"Fiji", "PNG", "Samoa", "Solomon Islands", "Timor-Leste", "Tonga", "Vanuatu"});
  cat("gender", Domain::Demographic, {"Female", "Male"});
  cat("age_group", Domain::Demographic, {"15-24", "25-34", "35-44", "45-54", "55-64", "65-74"});
  cat("language", Domain::Demographic,
      {"Bislama", "English", "Fijian", "Hindi", "Pijin", "Samoan", "Tetum", "Tok Pisin", "Tongan"});
  cat("area", Domain::Demographic, {"Rural", "Urban"});
  f.push_back({"household_size", Domain::Demographic, FieldKind::Numeric, 0, false, {}});
  cat("education", Domain::SocioEconomic,
      {"No formal education", "Primary", "Upper secondary or high school", "Tertiary", "Postgraduate"});
  cat("occupation", Domain::SocioEconomic,
      {"Employed", "Self-employed", "Homemaker or caregiver", "Student", "A regular overseas worker", "Other"});
  cat("income", Domain::SocioEconomic, {"No income", "Low", "Moderate", "High"});
  cat("numeracy_comfort", Domain::SocioEconomic, {"Low", "Medium", "High"});

  auto items = [&](Domain d, std::initializer_list<const char*> names) {
    for (const char* n : names) f.push_back({n, d, FieldKind::Binary, 1, true, {"no", "yes"}});
  };
  items(Domain::Digital,
        {"device_ownership", "content_creation", "computational_skills", "smartphone_ownership", "internet_access",
         "app_usage_weekly", "email_use", "social_media_use", "online_search", "file_management", "video_calls",
         "online_learning", "digital_maps", "password_management", "software_updates", "cloud_storage",
         "online_forms", "device_troubleshooting"});
  items(Domain::Financial,
        {"expense_recording", "budget_planning", "financial_optimism", "savings_habit", "debt_awareness",
         "interest_understanding", "bill_payment_planning", "emergency_fund", "income_tracking", "goal_setting",
         "price_comparison", "insurance_awareness", "credit_understanding", "receipt_review",
         "household_budgeting", "financial_advice_seeking"});
  items(Domain::DigitalFinancial,
        {"digital_spending_tracking", "digital_autonomy", "scam_avoidance", "mobile_money_use", "online_transfer",
         "digital_wallet", "card_payment", "online_bill_payment", "pin_security", "website_security_check",
         "phishing_awareness", "dfs_confidence", "fraud_response", "remittance_digital", "mobile_banking_app",
         "digital_savings", "online_shopping", "dispute_resolution"});
  return Codebook("pacific-dfl-default", std::move(f));
}

/// Per-country calibration target; moments in percent of the domain maximum.
struct CountryTarget {
  std::string country;
  std::size_t count = 0;
  double dfc_mean = 0, dfc_std = 0;
  double dfl_mean = 0, dfl_std = 0;
};

struct SynthesisSpec {
  std::vector<CountryTarget> countries;
  double missing_rate = 0.02;
  double segment_loading = 0.4;    // loading of the latents on the socio-economic score
  double latent_correlation = 0.5;  // residual correlation of the two latents

  json to_json() const {
    json j;
    j["missing_rate"] = missing_rate;
    j["segment_loading"] = segment_loading;
    j["latent_correlation"] = latent_correlation;
    j["countries"] = json::array();
    for (const auto& c : countries)
      j["countries"].push_back({{"country", c.country},
                                {"count", c.count},
                                {"dfc_mean", c.dfc_mean},
                                {"dfc_std", c.dfc_std},
                                {"dfl_mean", c.dfl_mean},
                                {"dfl_std", c.dfl_std}});
    return j;
  }

  static SynthesisSpec from_json(const json& j) {
    SynthesisSpec s;
    try {
      s.missing_rate = j.value("missing_rate", s.missing_rate);
      s.segment_loading = j.value("segment_loading", s.segment_loading);
      s.latent_correlation = j.value("latent_correlation", s.latent_correlation);
      for (const auto& c : j.at("countries"))
        s.countries.push_back({c.at("country").get<std::string>(), c.at("count").get<std::size_t>(),
                               c.at("dfc_mean").get<double>(), c.at("dfc_std").get<double>(),
                               c.at("dfl_mean").get<double>(), c.at("dfl_std").get<double>()});
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed synthesis spec: ") + e.what());
    }
    return s;
  }
};

/// Participant counts from the baseline survey with per-country DFC/DFL
/// means and standard deviations from its descriptive appendix.
inline SynthesisSpec appendix_a_spec() {
  SynthesisSpec s;
  s.countries = {
      {"Fiji", 1678, 43.7, 16.4, 50.7, 14.8},
      {"PNG", 1587, 32.6, 15.0, 41.1, 14.3},
      {"Samoa", 1216, 38.7, 15.7, 43.3, 12.4},
      {"Solomon Islands", 1540, 36.3, 11.9, 41.9, 12.2},
      {"Timor-Leste", 1631, 37.9, 13.0, 39.6, 12.7},
      {"Tonga", 1227, 46.2, 15.2, 44.3, 12.5},
      {"Vanuatu", 1229, 37.3, 17.6, 44.2, 12.9},
  };
  return s;
}

/// Nodes and weights for expectations under a standard normal.
struct NormalQuadrature {
  std::vector<double> nodes, weights;

  explicit NormalQuadrature(int n = 24) : nodes(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n)) {
    // Newton iteration on orthonormal physicists' Hermite polynomials.
    const double pim4 = 0.7511255444649425;
    std::vector<double> x(nodes.size()), w(nodes.size());
    const int m = (n + 1) / 2;
    double z = 0, pp = 0;
    for (int i = 0; i < m; ++i) {
      if (i == 0) z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -0.16667);
      else if (i == 1) z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
      else if (i == 2) z = 1.86 * z - 0.86 * x[0];
      else if (i == 3) z = 1.91 * z - 0.91 * x[1];
      else z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
      for (int it = 0; it < 100; ++it) {
        double p1 = pim4, p2 = 0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) <= 1e-15) break;
      }
      const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
      x[a] = z;
      x[b] = -z;
      w[a] = w[b] = 2.0 / (pp * pp);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      nodes[i] = std::numbers::sqrt2 * x[i];
      weights[i] = w[i] / std::sqrt(std::numbers::pi);
    }
  }
};

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SegmentAtom {
  int education = 0, area = 0;
  double score = 0, prob = 0;
};

struct CountryProfile {
  std::vector<double> language_probs;  // over codebook language categories
  double urban_share = 0.3;
};

inline const std::array<double, 5>& education_probs() {
  static const std::array<double, 5> p{0.08, 0.25, 0.42, 0.20, 0.05};
  return p;
}

inline CountryProfile country_profile(const std::string& country) {
  // language order: Bislama, English, Fijian, Hindi, Pijin, Samoan, Tetum, Tok Pisin, Tongan
  CountryProfile p;
  p.language_probs.assign(9, 0.0);
  auto set = [&](double urban, std::initializer_list<std::pair<int, double>> langs) {
    p.urban_share = urban;
    for (auto [i, w] : langs) p.language_probs[static_cast<std::size_t>(i)] = w;
  };
  if (country == "Fiji") set(0.55, {{1, 0.45}, {2, 0.35}, {3, 0.20}});
  else if (country == "PNG") set(0.20, {{7, 0.80}, {1, 0.20}});
  else if (country == "Samoa") set(0.30, {{5, 0.85}, {1, 0.15}});
  else if (country == "Solomon Islands") set(0.25, {{4, 0.85}, {1, 0.15}});
  else if (country == "Timor-Leste") set(0.30, {{6, 1.00}});
  else if (country == "Tonga") set(0.35, {{8, 0.85}, {1, 0.15}});
  else if (country == "Vanuatu") set(0.30, {{0, 0.85}, {1, 0.15}});
  else set(0.30, {{1, 1.00}});
  return p;
}

/// Discrete distribution of the standardized socio-economic score.
inline std::vector<SegmentAtom> segment_atoms(double urban_share) {
  static const std::array<double, 5> edu_effect{-1.2, -0.5, 0.0, 0.6, 1.0};
  static const std::array<double, 2> area_effect{-0.3, 0.3};
  std::vector<SegmentAtom> atoms;
  const std::array<double, 2> area_p{1.0 - urban_share, urban_share};
  double mean = 0, sq = 0;
  for (int e = 0; e < 5; ++e)
    for (int a = 0; a < 2; ++a) {
      const double p = education_probs()[static_cast<std::size_t>(e)] * area_p[static_cast<std::size_t>(a)];
      const double raw = edu_effect[static_cast<std::size_t>(e)] + area_effect[static_cast<std::size_t>(a)];
      atoms.push_back({e, a, raw, p});
      mean += p * raw;
      sq += p * raw * raw;
    }
  const double sd = std::sqrt(sq - mean * mean);
  for (auto& at : atoms) at.score = (at.score - mean) / sd;
  return atoms;
}

/// Exact moments of a block's point count under the mixture model.
class BlockMoments {
 public:
  BlockMoments(const std::vector<SegmentAtom>& atoms, const NormalQuadrature& quad, double loading,
               std::vector<double> offsets, double missing_rate)
      : atoms_(atoms),
        quad_(quad),
        a_(loading),
        b_(std::sqrt(1.0 - loading * loading)),
        offsets_(std::move(offsets)),
        keep_(1.0 - missing_rate) {}

  /// Expected observed-yes count given the latent value.
  double expected_count(double mu, double sigma, double z) const {
    double s = 0;
    for (double o : offsets_) s += keep_ * logistic(mu + o + sigma * z);
    return s;
  }

  double mean(double mu, double sigma) const {
    double m = 0;
    for (const auto& at : atoms_)
      for (std::size_t j = 0; j < quad_.nodes.size(); ++j)
        m += at.prob * quad_.weights[j] * expected_count(mu, sigma, a_ * at.score + b_ * quad_.nodes[j]);
    return m;
  }

  double variance(double mu, double sigma) const {
    double m = 0, m2 = 0, within = 0;
    for (const auto& at : atoms_)
      for (std::size_t j = 0; j < quad_.nodes.size(); ++j) {
        const double z = a_ * at.score + b_ * quad_.nodes[j];
        const double w = at.prob * quad_.weights[j];
        double s = 0, v = 0;
        for (double o : offsets_) {
          const double q = keep_ * logistic(mu + o + sigma * z);
          s += q;
          v += q * (1 - q);
        }
        m += w * s;
        m2 += w * s * s;
        within += w * v;
      }
    return within + m2 - m * m;
  }

  /// Solves for the location hitting `target_mean` at a fixed scale.
  /// Safeguarded Newton: the mean is increasing in `mu`.
  double solve_mu(double sigma, double target_mean) const {
    double lo = -40, hi = 40, mu = 0;
    for (int it = 0; it < 100; ++it) {
      double m = 0, slope = 0;
      for (const auto& at : atoms_)
        for (std::size_t j = 0; j < quad_.nodes.size(); ++j) {
          const double z = a_ * at.score + b_ * quad_.nodes[j];
          const double w = at.prob * quad_.weights[j];
          for (double o : offsets_) {
            const double p = logistic(mu + o + sigma * z);
            m += w * keep_ * p;
            slope += w * keep_ * p * (1 - p);
          }
        }
      const double err = m - target_mean;
      if (std::abs(err) < 1e-12) break;
      (err < 0 ? lo : hi) = mu;
      double next = slope > 0 ? mu - err / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo < 1e-13) break;
      mu = next;
    }
    return mu;
  }

  double loading() const { return a_; }
  double residual() const { return b_; }
  const std::vector<SegmentAtom>& atoms() const { return atoms_; }
  const NormalQuadrature& quadrature() const { return quad_; }

 private:
  const std::vector<SegmentAtom>& atoms_;
  const NormalQuadrature& quad_;
  double a_, b_;
  std::vector<double> offsets_;
  double keep_;
};

inline double block_covariance(const BlockMoments& d, double mu_d, double sig_d, const BlockMoments& o, double mu_o,
                               double sig_o, double r) {
  const auto& q = d.quadrature();
  const double a = d.loading(), b = d.residual(), rc = std::sqrt(1 - r * r);
  double md = 0, mo = 0, cross = 0;
  for (const auto& at : d.atoms())
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
      const double sd = d.expected_count(mu_d, sig_d, a * at.score + b * q.nodes[j]);
      for (std::size_t k = 0; k < q.nodes.size(); ++k) {
        const double eo = r * q.nodes[j] + rc * q.nodes[k];
        const double so = o.expected_count(mu_o, sig_o, a * at.score + b * eo);
        const double w = at.prob * q.weights[j] * q.weights[k];
        md += w * sd;
        mo += w * so;
        cross += w * sd * so;
      }
    }
  return cross - md * mo;
}

inline std::vector<double> item_offsets(std::size_t n) {
  std::vector<double> o(n);
  for (std::size_t i = 0; i < n; ++i) o[i] = n > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  // interleave so lever items at the front of a domain get varied difficulty
  std::vector<double> out;
  for (std::size_t i = 0; i < n; i += 2) out.push_back(o[i]);
  for (std::size_t i = 1; i < n; i += 2) out.push_back(o[i]);
  return out;
}

}  // namespace detail

/// Solved latent parameters for one country.
struct CountryCalibration {
  double dfc_mu = 0, dfc_sigma = 0;
  double other_mu = 0, other_sigma = 0;
  Warnings warnings;
};

/// Solves the per-country latent parameters. The codebook must contain only
/// one-point binary scored items (the default codebook does).
inline CountryCalibration calibrate_country(const Codebook& codebook, const CountryTarget& t, const SynthesisSpec& spec) {
  const double dfc_max = codebook.domain_points(Domain::DigitalFinancial);
  const double other_max = codebook.domain_points(Domain::Digital) + codebook.domain_points(Domain::Financial);
  const double dfc_mean = t.dfc_mean / 100.0 * dfc_max, dfc_var = std::pow(t.dfc_std / 100.0 * dfc_max, 2);
  const double dfl_mean = t.dfl_mean / 100.0 * kIndexMaxPoints;
  const double dfl_var = std::pow(t.dfl_std / 100.0 * kIndexMaxPoints, 2);
  const double other_mean = dfl_mean - dfc_mean;
  const double keep = 1.0 - spec.missing_rate;
  if (other_mean <= 0 || other_mean >= other_max * keep || dfc_mean >= dfc_max * keep)
    throw ValidationError("infeasible targets for " + t.country + ": means cannot be reached");

  static const NormalQuadrature quad(24);
  const auto profile = detail::country_profile(t.country);
  const auto atoms = detail::segment_atoms(profile.urban_share);
  detail::BlockMoments dfc(atoms, quad, spec.segment_loading, detail::item_offsets(static_cast<std::size_t>(dfc_max)),
                           spec.missing_rate);
  detail::BlockMoments other(atoms, quad, spec.segment_loading,
                             detail::item_offsets(static_cast<std::size_t>(other_max)), spec.missing_rate);

  CountryCalibration c;
  const double tolerance_pts = 2.5 / 100.0 * dfc_max;
  auto dfc_var_at = [&](double sigma) { return dfc.variance(dfc.solve_mu(sigma, dfc_mean), sigma); };
  if (dfc_var_at(0.0) > dfc_var) {
    if (std::sqrt(dfc_var_at(0.0)) - std::sqrt(dfc_var) > tolerance_pts)
      throw ValidationError("infeasible targets for " + t.country + ": DFC spread below the binomial floor");
    c.warnings.push_back(t.country + ": DFC spread clamped to the binomial floor");
    c.dfc_sigma = 0;
  } else {
    double lo = 0, hi = 12;
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      (dfc_var_at(mid) < dfc_var ? lo : hi) = mid;
    }
    c.dfc_sigma = 0.5 * (lo + hi);
  }
  c.dfc_mu = dfc.solve_mu(c.dfc_sigma, dfc_mean);
  const double dfc_realized_var = dfc.variance(c.dfc_mu, c.dfc_sigma);

  auto dfl_var_at = [&](double sigma) {
    const double mu = other.solve_mu(sigma, other_mean);
    return dfc_realized_var + other.variance(mu, sigma) +
           2.0 * detail::block_covariance(dfc, c.dfc_mu, c.dfc_sigma, other, mu, sigma, spec.latent_correlation);
  };
  if (dfl_var_at(0.0) > dfl_var) {
    if (std::sqrt(dfl_var_at(0.0)) - std::sqrt(dfl_var) > 2.5 / 100.0 * kIndexMaxPoints)
      throw ValidationError("infeasible targets for " + t.country + ": DFL spread below the binomial floor");
    c.warnings.push_back(t.country + ": DFL spread clamped to the binomial floor");
    c.other_sigma = 0;
  } else {
    double lo = 0, hi = 12;
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      (dfl_var_at(mid) < dfl_var ? lo : hi) = mid;
    }
    c.other_sigma = 0.5 * (lo + hi);
  }
  c.other_mu = other.solve_mu(c.other_sigma, other_mean);
  return c;
}

/// Generates a dataset matching the per-country targets. Deterministic for
/// a given (spec, seed) on a given standard library implementation.
inline Dataset synthesize_dataset(const SynthesisSpec& spec, std::uint64_t seed, Warnings* warnings = nullptr) {
  const Codebook codebook = default_codebook();
  if (spec.countries.empty()) throw ValidationError("synthesis spec lists no countries");
  if (!(spec.missing_rate >= 0 && spec.missing_rate < 0.5)) throw ValidationError("missing_rate must be in [0, 0.5)");
  if (!(std::abs(spec.segment_loading) < 1)) throw ValidationError("segment_loading must be in (-1, 1)");
  if (!(std::abs(spec.latent_correlation) < 1)) throw ValidationError("latent_correlation must be in (-1, 1)");
  for (const auto& t : spec.countries) {
    if (t.count == 0) throw ValidationError("zero count for " + t.country);
    if (!codebook.country().category_index(t.country)) throw ValidationError("unknown country '" + t.country + "'");
    for (double m : {t.dfc_mean, t.dfl_mean})
      if (!(m > 0 && m < 100)) throw ValidationError("infeasible targets for " + t.country + ": mean outside (0, 100)");
    for (double s : {t.dfc_std, t.dfl_std})
      if (!(s >= 0 && s < 50)) throw ValidationError("infeasible targets for " + t.country + ": std outside [0, 50)");
  }

  const std::size_t n_fields = codebook.size();
  const std::size_t f_gender = codebook.index_of("gender"), f_age = codebook.index_of("age_group"),
                    f_lang = codebook.index_of("language"), f_area = codebook.index_of("area"),
                    f_hh = codebook.index_of("household_size"), f_edu = codebook.index_of("education"),
                    f_occ = codebook.index_of("occupation"), f_inc = codebook.index_of("income"),
                    f_num = codebook.index_of("numeracy_comfort");
  std::vector<std::size_t> dfc_items, other_items;
  for (std::size_t f = 0; f < n_fields; ++f) {
    const auto& field = codebook.field(f);
    if (field.points == 0) continue;
    (field.domain == Domain::DigitalFinancial ? dfc_items : other_items).push_back(f);
  }
  const auto dfc_offsets = detail::item_offsets(dfc_items.size());
  const auto other_offsets = detail::item_offsets(other_items.size());

  // occupation | education: Employed, Self-employed, Homemaker, Student, Overseas, Other
  static const std::array<std::array<double, 6>, 5> occupation_given_edu{{
      {0.08, 0.22, 0.30, 0.02, 0.03, 0.35},
      {0.14, 0.24, 0.26, 0.08, 0.05, 0.23},
      {0.24, 0.20, 0.20, 0.16, 0.07, 0.13},
      {0.45, 0.14, 0.10, 0.18, 0.06, 0.07},
      {0.62, 0.12, 0.05, 0.10, 0.06, 0.05},
  }};
  static const std::array<std::array<double, 4>, 6> income_given_occ{{
      {0.02, 0.28, 0.45, 0.25},
      {0.08, 0.45, 0.35, 0.12},
      {0.60, 0.30, 0.08, 0.02},
      {0.70, 0.25, 0.04, 0.01},
      {0.02, 0.20, 0.48, 0.30},
      {0.40, 0.45, 0.12, 0.03},
  }};

  std::vector<SurveyRecord> records;
  std::size_t total = 0;
  for (const auto& t : spec.countries) total += t.count;
  records.reserve(total);
  const double a = spec.segment_loading, b = std::sqrt(1 - a * a);
  const double r = spec.latent_correlation, rc = std::sqrt(1 - r * r);

  for (std::size_t ci = 0; ci < spec.countries.size(); ++ci) {
    const auto& t = spec.countries[ci];
    auto cal = calibrate_country(codebook, t, spec);
    if (warnings) warnings->insert(warnings->end(), cal.warnings.begin(), cal.warnings.end());
    const auto profile = detail::country_profile(t.country);
    const auto atoms = detail::segment_atoms(profile.urban_share);
    std::vector<double> atom_probs;
    for (const auto& at : atoms) atom_probs.push_back(at.prob);

    std::mt19937_64 rng(derive_seed(seed, ci));
    std::normal_distribution<double> normal;
    std::bernoulli_distribution missing(spec.missing_rate), female(0.52);
    std::discrete_distribution<int> atom_dist(atom_probs.begin(), atom_probs.end());
    std::discrete_distribution<int> age_dist{0.24, 0.26, 0.20, 0.14, 0.10, 0.06};
    std::discrete_distribution<int> lang_dist(profile.language_probs.begin(), profile.language_probs.end());
    std::discrete_distribution<int> numeracy_dist{0.3, 0.45, 0.25};
    std::poisson_distribution<int> household(4.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double country_idx = *codebook.country().category_index(t.country);

    for (std::size_t i = 0; i < t.count; ++i) {
      SurveyRecord rec;
      char id[32];
      std::snprintf(id, sizeof id, "R%06zu", records.size() + 1);
      rec.record_id = id;
      rec.responses.assign(n_fields, std::nullopt);
      rec.responses[codebook.country_index()] = country_idx;

      const auto& atom = atoms[static_cast<std::size_t>(atom_dist(rng))];
      const int occ = std::discrete_distribution<int>(occupation_given_edu[static_cast<std::size_t>(atom.education)].begin(),
                                                      occupation_given_edu[static_cast<std::size_t>(atom.education)].end())(rng);
      const int inc = std::discrete_distribution<int>(income_given_occ[static_cast<std::size_t>(occ)].begin(),
                                                      income_given_occ[static_cast<std::size_t>(occ)].end())(rng);
      const double segment_values[] = {female(rng) ? 0.0 : 1.0,
                                        static_cast<double>(age_dist(rng)),
                                        static_cast<double>(lang_dist(rng)),
                                        static_cast<double>(atom.area),
                                        static_cast<double>(1 + household(rng)),
                                        static_cast<double>(atom.education),
                                        static_cast<double>(occ),
                                        static_cast<double>(inc),
                                        static_cast<double>(numeracy_dist(rng))};
      const std::size_t segment_fields[] = {f_gender, f_age, f_lang, f_area, f_hh, f_edu, f_occ, f_inc, f_num};
      for (std::size_t k = 0; k < std::size(segment_fields); ++k)
        if (!missing(rng)) rec.responses[segment_fields[k]] = segment_values[k];

      const double e_d = normal(rng);
      const double e_o = r * e_d + rc * normal(rng);
      const double z_d = a * atom.score + b * e_d, z_o = a * atom.score + b * e_o;
      auto draw = [&](const std::vector<std::size_t>& fields, const std::vector<double>& offsets, double mu,
                      double sigma, double z) {
        for (std::size_t k = 0; k < fields.size(); ++k) {
          const double p = detail::logistic(mu + offsets[k] + sigma * z);
          const bool yes = unit(rng) < p;
          if (!missing(rng)) rec.responses[fields[k]] = yes ? 1.0 : 0.0;
        }
      };
      draw(dfc_items, dfc_offsets, cal.dfc_mu, cal.dfc_sigma, z_d);
      draw(other_items, other_offsets, cal.other_mu, cal.other_sigma, z_o);
      records.push_back(std::move(rec));
    }
  }
  return Dataset(codebook, std::move(records), Provenance{ProvenanceKind::Synthetic, seed});
}

}  // namespace dflsim
