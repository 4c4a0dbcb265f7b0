#include "doctest.h"
#include "helpers.hpp"

#include <map>

using namespace disco;

TEST_CASE("consistency one copies the source mixture") {
  SyntheticSpec spec;
  spec.n_users = 300;
  spec.n_items_per_domain = 100;
  spec.density = 0.1;
  spec.consistency = 1.0;
  auto d = generate_synthetic(spec);
  CHECK((d.source_mixture - d.target_mixture).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("consistency zero decorrelates mixtures") {
  SyntheticSpec spec;
  spec.n_users = 10000;
  spec.n_items_per_domain = 50;
  spec.density = 0.2;
  spec.consistency = 0.0;
  auto d = generate_synthetic(spec);
  Vec a = d.source_mixture.col(0), b = d.target_mixture.col(0);
  const double ma = a.mean(), mb = b.mean();
  const double cov = ((a.array() - ma) * (b.array() - mb)).mean();
  const double r = cov / std::sqrt((a.array() - ma).square().mean() * (b.array() - mb).square().mean());
  CHECK(std::abs(r) < 0.05);  // ~5 standard errors at n = 1e4
}

TEST_CASE("single intent gives uniform item popularity") {
  SyntheticSpec spec;
  spec.n_users = 4000;
  spec.n_items_per_domain = 40;
  spec.density = 0.25;
  spec.k_true = 1;
  auto d = generate_synthetic(spec);
  std::map<std::string, int> freq;
  for (const auto& r : d.source.records) ++freq[r.item];
  CHECK(freq.size() == 40);
  const double expected = double(d.source.records.size()) / 40.0;
  double chi2 = 0.0;
  for (auto& [v, c] : freq) chi2 += (c - expected) * (c - expected) / expected;
  // without-replacement draws are under-dispersed, so chi2 sits well below
  // the 99.9% quantile of chi2(39) ~ 72
  CHECK(chi2 < 72.0);
}

TEST_CASE("generator determinism and validation") {
  SyntheticSpec spec;
  spec.n_users = 100;
  spec.n_items_per_domain = 100;
  spec.density = 0.1;
  auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  REQUIRE(a.source.records.size() == b.source.records.size());
  for (std::size_t i = 0; i < a.source.records.size(); ++i) CHECK(a.source.records[i] == b.source.records[i]);

  SyntheticSpec sparse = spec;
  sparse.density = 0.01;
  CHECK_THROWS_WITH_AS(generate_synthetic(sparse), doctest::Contains("density"), Error);
  SyntheticSpec bad = spec;
  bad.consistency = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad), Error);
}
