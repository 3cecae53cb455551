// Repeated-synthesis harness: generates many elections from one config,
// optionally injects a tampering scheme, runs the selected detectors, and
// reports the rejection rate of each at a chosen level together with the
// uniformity of the p-value sample. Clean configs check detector size;
// tampered configs check power.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forensics/association.hpp"
#include "forensics/digits.hpp"
#include "forensics/metadata.hpp"
#include "forensics/permutation.hpp"
#include "forensics/polling.hpp"
#include "forensics/rng.hpp"
#include "forensics/stats.hpp"
#include "forensics/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Track {
  std::vector<double> p;        // one p-value per election where testable
  int64_t ks_fail = 0;          // elections whose within-election p-vector fails KS at 0.01
  int64_t ks_checked = 0;
  double elapsed = 0.0;
};

void report(const std::string& name, const Track& t, double alpha, int64_t elections) {
  if (t.p.empty()) {
    std::printf("%-12s never testable\n", name.c_str());
    return;
  }
  int64_t rejections = 0;
  for (double p : t.p)
    if (p < alpha) ++rejections;
  auto ks = forensics::stats::ks_uniform(t.p);
  std::printf("%-12s n=%-4zu mean_p=%.4f rej@%.2f=%-4lld ks_d=%.4f ks_p=%.4f", name.c_str(),
              t.p.size(), forensics::stats::mean(t.p), alpha, (long long)rejections, ks.d,
              ks.p_value);
  if (t.ks_checked > 0)
    std::printf(" percenter_ks_fail=%lld/%lld", (long long)t.ks_fail, (long long)t.ks_checked);
  std::printf("  [%.1fs]\n", t.elapsed);
  (void)elections;
}

bool wants(const std::vector<std::string>& tests, const std::string& name) {
  for (const auto& t : tests)
    if (t == name) return true;
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"detector size and power sweep over synthetic elections"};
  std::string config_path;
  std::string fraud_path;
  int64_t elections = 200;
  int64_t reps = 999;
  double alpha = 0.05;
  uint64_t seed = 0;
  std::vector<std::string> tests = {"permutation", "exitpoll", "residuals"};
  int64_t digit_cap = 0;
  int64_t digit_reps = 200000;
  std::string digit_source = "machine-nu";
  std::string exitpoll_direction = "ge";
  std::string exitpoll_aggregate = "fisher";
  double tau = 0.02;
  app.add_option("--config", config_path, "synthesis config")->required();
  app.add_option("--fraud", fraud_path, "tampering scheme to inject");
  app.add_option("--elections", elections, "elections to synthesize")->check(CLI::PositiveNumber);
  app.add_option("--reps", reps, "Monte-Carlo replicates per test")->check(CLI::PositiveNumber);
  app.add_option("--alpha", alpha, "rejection level");
  app.add_option("--seed", seed, "master seed")->required();
  app.add_option("--tests", tests, "detectors to run")
      ->delimiter(',')
      ->check(CLI::IsMember(
          {"digits", "permutation", "exitpoll", "residuals", "association", "bytes", "classes"}));
  app.add_option("--digit-cap", digit_cap, "bounded second-digit reference cap (0: classic law)");
  app.add_option("--digit-reps", digit_reps, "bounded reference replicates");
  app.add_option("--digit-source", digit_source, "count fed to the digit test")
      ->check(CLI::IsMember({"machine-nu", "machine-yes"}));
  app.add_option("--exitpoll-direction", exitpoll_direction, "tail for per-center poll tests")
      ->check(CLI::IsMember({"ge", "le", "two"}));
  app.add_option("--exitpoll-aggregate", exitpoll_aggregate, "poll aggregation")
      ->check(CLI::IsMember({"fisher", "count"}));
  app.add_option("--tau", tau, "count aggregate small-p threshold");
  CLI11_PARSE(app, argc, argv);

  auto config = forensics::synth::load_synth_config(config_path);
  forensics::synth::FraudScheme scheme;
  if (!fraud_path.empty()) scheme = forensics::synth::load_fraud_scheme(fraud_path);

  forensics::digits::DigitDistribution digit_ref;
  if (wants(tests, "digits")) {
    digit_ref = digit_cap > 0
                    ? forensics::digits::bounded_reference_pmf(
                          digit_cap, forensics::digits::BoundedModel::uniform_0_cap, 0.5,
                          digit_reps, forensics::substream(seed, "digitref"))
                    : forensics::digits::reference_digit_law(2);
  }

  auto direction = exitpoll_direction == "ge"   ? forensics::polling::Tail::ge
                   : exitpoll_direction == "le" ? forensics::polling::Tail::le
                                                : forensics::polling::Tail::two_sided;
  auto aggregate = exitpoll_aggregate == "fisher" ? forensics::polling::AggregateMethod::fisher
                                                  : forensics::polling::AggregateMethod::count_below;

  Track digits_t, perm_t, poll_t, resid_t, assoc_t, bytes_t, classes_t;
  const double thresholds[] = {alpha};

  for (int64_t e = 0; e < elections; ++e) {
    uint64_t seed_e = forensics::substream(seed, "sweep", static_cast<uint64_t>(e));
    auto ds = forensics::synth::generate(config, seed_e);
    if (!fraud_path.empty())
      ds = forensics::synth::inject_fraud(ds, scheme, seed_e).first;

    if (wants(tests, "digits")) {
      auto t0 = Clock::now();
      std::vector<int64_t> values;
      for (const auto& m : ds.machines)
        values.push_back(digit_source == "machine-nu" ? m.nu : m.yes);
      auto hist = forensics::digits::digit_histogram(values, 2);
      digits_t.p.push_back(forensics::digits::digit_test(hist, digit_ref).p_value);
      digits_t.elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (wants(tests, "permutation")) {
      auto t0 = Clock::now();
      auto out = forensics::permutation::permutation_test(
          ds, forensics::permutation::DispersionStat::yes_share_variance, reps, seed_e,
          thresholds);
      perm_t.p.push_back(out.summary.fisher_p);
      std::vector<double> center_p;
      for (const auto& c : out.centers) center_p.push_back(c.p_value);
      if (center_p.size() >= 10) {
        ++perm_t.ks_checked;
        if (forensics::stats::ks_uniform(center_p).p_value < 0.01) ++perm_t.ks_fail;
      }
      perm_t.elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (wants(tests, "exitpoll")) {
      auto t0 = Clock::now();
      auto results = forensics::polling::exitpoll_test(ds, direction);
      if (!results.empty()) {
        auto agg = forensics::polling::aggregate_poll_pvalues(results, aggregate, tau);
        poll_t.p.push_back(aggregate == forensics::polling::AggregateMethod::fisher
                               ? agg.fisher_p
                               : agg.binomial_p);
        std::vector<double> center_p;
        for (const auto& r : results) center_p.push_back(r.p_value);
        if (center_p.size() >= 10) {
          ++poll_t.ks_checked;
          if (forensics::stats::ks_uniform(center_p).p_value < 0.01) ++poll_t.ks_fail;
        }
      }
      poll_t.elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (wants(tests, "residuals")) {
      auto t0 = Clock::now();
      auto res = forensics::association::residual_correlation_test(ds, reps, seed_e);
      if (res.testable) resid_t.p.push_back(res.perm_p);
      resid_t.elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (wants(tests, "association")) {
      auto t0 = Clock::now();
      auto groups = forensics::association::signature_share_correlation(
          ds, forensics::association::GroupingSpec{}, reps, seed_e);
      if (!groups.empty() && groups[0].testable) assoc_t.p.push_back(groups[0].perm_p);
      assoc_t.elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (wants(tests, "bytes")) {
      auto t0 = Clock::now();
      try {
        auto res = forensics::metadata::bytes_vs_votes_test(
            ds, forensics::metadata::Measure::bytes_out, reps, seed_e);
        bytes_t.p.push_back(res.perm_p);
      } catch (const std::exception&) {
      }
      bytes_t.elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (wants(tests, "classes")) {
      auto t0 = Clock::now();
      try {
        auto cmp = forensics::metadata::traffic_class_compare(
            ds, forensics::metadata::Measure::bytes_out, false);
        double best = 2.0;
        for (const auto& p : cmp.pairs)
          if (p.testable && p.p_value < best) best = p.p_value;
        if (best <= 1.0) classes_t.p.push_back(best);
      } catch (const std::exception&) {
      }
      classes_t.elapsed += std::chrono::duration<double>(Clock::now() - t0).count();
    }
  }

  std::printf("config=%s fraud=%s elections=%lld reps=%lld seed=%llu\n\n", config_path.c_str(),
              fraud_path.empty() ? "(none)" : fraud_path.c_str(), (long long)elections,
              (long long)reps, (unsigned long long)seed);
  if (wants(tests, "digits")) report("digits", digits_t, alpha, elections);
  if (wants(tests, "permutation")) report("permutation", perm_t, alpha, elections);
  if (wants(tests, "exitpoll")) report("exitpoll", poll_t, alpha, elections);
  if (wants(tests, "residuals")) report("residuals", resid_t, alpha, elections);
  if (wants(tests, "association")) report("association", assoc_t, alpha, elections);
  if (wants(tests, "bytes")) report("bytes", bytes_t, alpha, elections);
  if (wants(tests, "classes")) report("classes", classes_t, alpha, elections);
  return 0;
}
