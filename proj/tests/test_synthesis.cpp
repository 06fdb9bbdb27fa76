#include <gtest/gtest.h>

#include "dflsim/profiling.hpp"
#include "dflsim/synthesis.hpp"

using namespace dflsim;

namespace {

std::vector<CountryStats> stats_for(const Dataset& ds) {
  const auto scores = score_dataset(ds);
  return country_stats(ds, scores);
}

}  // namespace

TEST(Quadrature, NormalMoments) {
  const NormalQuadrature q(24);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    m0 += q.weights[i];
    m2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    m4 += q.weights[i] * std::pow(q.nodes[i], 4);
  }
  EXPECT_NEAR(m0, 1.0, 1e-12);
  EXPECT_NEAR(m2, 1.0, 1e-12);
  EXPECT_NEAR(m4, 3.0, 1e-10);
}

TEST(Synthesis, TableOneCountsSum) {
  std::size_t total = 0;
  for (const auto& c : appendix_a_spec().countries) total += c.count;
  EXPECT_EQ(total, 10108u);
}

TEST(Synthesis, Deterministic) {
  auto spec = appendix_a_spec();
  spec.countries.resize(2);
  const auto a = synthesize_dataset(spec, 42), b = synthesize_dataset(spec, 42);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  const auto c = synthesize_dataset(spec, 43);
  EXPECT_NE(a.to_csv(), c.to_csv());
  EXPECT_EQ(a.provenance().kind, ProvenanceKind::Synthetic);
  EXPECT_EQ(a.provenance().seed, 42u);
}

TEST(Synthesis, FijiTableOneMean) {
  SynthesisSpec spec;
  spec.countries = {{"Fiji", 1678, 43.7, 16.4, 50.9, 14.8}};
  const auto ds = synthesize_dataset(spec, 7);
  const auto st = stats_for(ds);
  ASSERT_EQ(st.size(), 1u);
  EXPECT_EQ(st[0].count, 1678u);
  EXPECT_GE(st[0].dfl.mean, 49.4);
  EXPECT_LE(st[0].dfl.mean, 52.4);
}

class CalibrationSeeds : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(CalibrationSeeds, AllCountriesWithinTolerance) {
  const auto spec = appendix_a_spec();
  const auto ds = synthesize_dataset(spec, GetParam());
  const auto st = stats_for(ds);
  ASSERT_EQ(st.size(), spec.countries.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    const auto& t = spec.countries[i];
    SCOPED_TRACE(t.country);
    EXPECT_EQ(st[i].count, t.count);
    EXPECT_NEAR(st[i].dfc.mean, t.dfc_mean, 1.5);
    EXPECT_NEAR(st[i].dfl.mean, t.dfl_mean, 1.5);
    EXPECT_NEAR(st[i].dfc.std, t.dfc_std, 2.5);
    EXPECT_NEAR(st[i].dfl.std, t.dfl_std, 2.5);
  }
  // PNG dispersion
  EXPECT_NEAR(st[1].dfc.std / st[1].dfc.mean, 0.46, 0.04);
}

INSTANTIATE_TEST_SUITE_P(Seeds, CalibrationSeeds, ::testing::Values(7u, 11u, 2024u));

TEST(Synthesis, MissingnessRate) {
  auto spec = appendix_a_spec();
  spec.missing_rate = 0.05;
  const auto ds = synthesize_dataset(spec, 5);
  const auto s = summarize(ds);
  double total = 0;
  int n = 0;
  for (const auto& [f, m] : s.missingness) {
    if (f == "country") {
      EXPECT_EQ(m, 0.0);
      continue;
    }
    total += m;
    ++n;
  }
  EXPECT_NEAR(total / n, 0.05, 0.005);
}

TEST(Synthesis, RejectsBadSpecs) {
  SynthesisSpec spec;
  spec.countries = {{"Fiji", 0, 40, 10, 40, 10}};
  EXPECT_THROW(synthesize_dataset(spec, 1), ValidationError);
  spec.countries = {{"Fiji", 100, 40, 10, 120, 10}};
  EXPECT_THROW(synthesize_dataset(spec, 1), ValidationError);
  spec.countries = {{"Atlantis", 100, 40, 10, 40, 10}};
  EXPECT_THROW(synthesize_dataset(spec, 1), ValidationError);
  spec.countries = {};
  EXPECT_THROW(synthesize_dataset(spec, 1), ValidationError);
  // DFC mean above DFL mean leaves nothing for the other two domains
  spec.countries = {{"Fiji", 100, 90, 5, 20, 5}};
  EXPECT_THROW(synthesize_dataset(spec, 1), ValidationError);
}

TEST(Synthesis, SpecJsonRoundTrip) {
  const auto spec = appendix_a_spec();
  EXPECT_EQ(SynthesisSpec::from_json(spec.to_json()).to_json(), spec.to_json());
}
