// Exit poll consistency: exact binomial tails against a long-double summation
// oracle, tail identities, dataset plumbing, and both aggregation methods.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <doctest.h>

#include "forensics/polling.hpp"
#include "forensics/rng.hpp"
#include "forensics/stats.hpp"

#include "helpers.hpp"

using forensics::polling::AggregateMethod;
using forensics::polling::CenterPollResult;
using forensics::polling::Tail;
using forensics::polling::aggregate_poll_pvalues;
using forensics::polling::binomial_tail_pvalue;
using forensics::polling::center_poll_pvalue;
using forensics::polling::exitpoll_test;

namespace {

// Direct long-double tail summation; numerically safe for m <= ~2000.
long double tail_oracle(int64_t k, int64_t m, double p, bool ge) {
  long double pmf = std::pow(1.0L - (long double)p, (long double)m);
  std::vector<long double> all(size_t(m) + 1);
  all[0] = pmf;
  for (int64_t i = 1; i <= m; ++i) {
    pmf *= (long double)(m - i + 1) / (long double)i;
    pmf *= (long double)p / (1.0L - (long double)p);
    all[size_t(i)] = pmf;
  }
  long double s = 0.0L;
  if (ge)
    for (int64_t i = k; i <= m; ++i) s += all[size_t(i)];
  else
    for (int64_t i = 0; i <= k; ++i) s += all[size_t(i)];
  return s;
}

CenterPollResult fake_result(double p) {
  CenterPollResult r;
  r.center_id = "CX";
  r.sample_size = 100;
  r.p_value = p;
  return r;
}

}  // namespace

TEST_SUITE("polling") {

TEST_CASE("a 60/100 poll against an announced 0.41 is wildly inconsistent") {
  const double p = binomial_tail_pvalue(60, 100, 0.41, Tail::ge);
  CHECK(p < 0.001);
  // Exactly the announced rate is entirely ordinary.
  CHECK(binomial_tail_pvalue(41, 100, 0.41, Tail::ge) >= 0.5);
}

TEST_CASE("tails agree with direct long-double summation") {
  const int64_t ms[] = {1, 7, 30, 100, 450, 1000};
  const double ps[] = {0.02, 0.41, 0.5, 0.93};
  for (int64_t m : ms)
    for (double p : ps) {
      for (int64_t k : {int64_t(0), m / 4, m / 2, (3 * m) / 4, m}) {
        CAPTURE(m);
        CAPTURE(p);
        CAPTURE(k);
        const double ge = binomial_tail_pvalue(k, m, p, Tail::ge);
        const double le = binomial_tail_pvalue(k, m, p, Tail::le);
        const long double oge = tail_oracle(k, m, p, true);
        const long double ole = tail_oracle(k, m, p, false);
        CHECK(std::abs(ge - double(oge)) <= 1e-12 * std::max(1.0, double(oge)));
        CHECK(std::abs(le - double(ole)) <= 1e-12 * std::max(1.0, double(ole)));
      }
    }
}

TEST_CASE("tail identities") {
  // GE and LE overlap at k, so they sum to 1 + pmf(k) >= 1.
  for (int64_t k : {0, 3, 17, 40}) {
    const double ge = binomial_tail_pvalue(k, 40, 0.3, Tail::ge);
    const double le = binomial_tail_pvalue(k, 40, 0.3, Tail::le);
    CHECK(ge + le >= 1.0 - 1e-12);
    CHECK(binomial_tail_pvalue(k, 40, 0.3, Tail::two_sided) ==
          doctest::Approx(std::min(1.0, 2.0 * std::min(ge, le))).epsilon(1e-12));
  }
  // GE is non-increasing in k.
  double prev = 2.0;
  for (int64_t k = 0; k <= 40; ++k) {
    const double ge = binomial_tail_pvalue(k, 40, 0.3, Tail::ge);
    CHECK(ge <= prev + 1e-15);
    prev = ge;
  }
  // Degenerate success probability.
  CHECK(binomial_tail_pvalue(10, 10, 1.0, Tail::ge) == doctest::Approx(1.0));
  CHECK(binomial_tail_pvalue(10, 10, 1.0, Tail::le) == doctest::Approx(1.0));
  CHECK(binomial_tail_pvalue(0, 10, 0.0, Tail::le) == doctest::Approx(1.0));
}

TEST_CASE("center_poll_pvalue carries identity and flags small samples") {
  auto r = center_poll_pvalue("C7", "HOUSE", 20, 14, 0.41, Tail::ge);
  CHECK(r.center_id == "C7");
  CHECK(r.pollster == "HOUSE");
  CHECK(r.small_sample);  // m below 30
  CHECK(r.p_value == doctest::Approx(double(tail_oracle(14, 20, 0.41, true))).epsilon(1e-12));
  auto big = center_poll_pvalue("C8", "HOUSE", 30, 14, 0.41, Tail::ge);
  CHECK_FALSE(big.small_sample);
}

TEST_CASE("exitpoll_test runs every sample against the announced share") {
  testutil::DatasetBuilder b;
  b.official(0.41);
  b.center("C1").center("C2");
  b.machine("C1", "M1", 500, 205, 295);
  b.machine("C2", "M1", 500, 205, 295);
  b.poll("C1", 100, 60, "A");
  b.poll("C1", 50, 20, "B");
  b.poll("C2", 200, 82, "A");
  auto ds = b.build();

  auto all = exitpoll_test(ds, Tail::ge);
  REQUIRE(all.size() == 3);
  for (const auto& r : all) CHECK(r.official_share == doctest::Approx(0.41));

  auto onlyA = exitpoll_test(ds, Tail::ge, "A");
  REQUIRE(onlyA.size() == 2);
  for (const auto& r : onlyA) CHECK(r.pollster == "A");

  auto floored = exitpoll_test(ds, Tail::ge, "", 100);
  REQUIRE(floored.size() == 2);
  for (const auto& r : floored) CHECK(r.sample_size >= 100);
}

TEST_CASE("count aggregate with all p at one half finds nothing") {
  std::vector<CenterPollResult> rs;
  for (int i = 0; i < 20; ++i) rs.push_back(fake_result(0.5));
  auto agg = aggregate_poll_pvalues(rs, AggregateMethod::count_below, 0.02);
  CHECK(agg.n == 20);
  CHECK(agg.count_below == 0);
  CHECK(agg.fraction_below == 0.0);
  CHECK(agg.binomial_p == doctest::Approx(1.0));  // P(Bin >= 0) = 1
  CHECK_FALSE(agg.caveats.empty());
}

TEST_CASE("count aggregate matches the binomial count law under uniform p") {
  // 200 seeded replicates of 100 iid uniform p-values: the total count below
  // tau pools to Binomial(20000, 0.02).
  forensics::Rng rng(8675309);
  int64_t total = 0;
  int64_t worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<CenterPollResult> rs;
    for (int i = 0; i < 100; ++i) rs.push_back(fake_result(rng.next_double()));
    auto agg = aggregate_poll_pvalues(rs, AggregateMethod::count_below, 0.02);
    total += agg.count_below;
    worst = std::max(worst, agg.count_below);
    CHECK(agg.fraction_below == doctest::Approx(double(agg.count_below) / 100.0));
  }
  // Mean 400, sd ~19.8: allow four sigmas.
  CHECK(total > 400 - 4 * 20);
  CHECK(total < 400 + 4 * 20);
  // A single replicate above the upper 99.99% point would be suspicious.
  CHECK(worst <= 11);
}

TEST_CASE("fisher aggregate of a single center is that center's p") {
  std::vector<CenterPollResult> rs = {fake_result(0.0731)};
  auto agg = aggregate_poll_pvalues(rs, AggregateMethod::fisher);
  CHECK(agg.n == 1);
  CHECK(agg.fisher_df == 2);
  CHECK(agg.fisher_p == doctest::Approx(0.0731).epsilon(1e-10));
}

TEST_CASE("aggregates always state the sampling assumptions") {
  std::vector<CenterPollResult> rs = {fake_result(0.2), fake_result(0.9)};
  for (auto method : {AggregateMethod::count_below, AggregateMethod::fisher}) {
    auto agg = aggregate_poll_pvalues(rs, method, 0.05);
    bool mentions_srs = false;
    for (const auto& c : agg.caveats)
      if (c.find("random sample") != std::string::npos ||
          c.find("nonresponse") != std::string::npos)
        mentions_srs = true;
    CHECK(mentions_srs);
  }
}

}  // TEST_SUITE
