// Benchmarks the Monte-Carlo kernels in both execution modes and verifies the
// parallel results match the serial reference bit for bit.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "forensics/digits.hpp"
#include "forensics/parallel.hpp"
#include "forensics/permutation.hpp"
#include "forensics/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool identical(const forensics::digits::DigitDistribution& a,
               const forensics::digits::DigitDistribution& b) {
  return a.counts == b.counts && a.sample_size == b.sample_size && a.dropped == b.dropped;
}

bool identical(const forensics::permutation::Outcome& a,
               const forensics::permutation::Outcome& b) {
  if (a.centers.size() != b.centers.size()) return false;
  for (size_t i = 0; i < a.centers.size(); ++i) {
    if (a.centers[i].center_id != b.centers[i].center_id) return false;
    if (a.centers[i].observed != b.centers[i].observed) return false;
    if (a.centers[i].p_value != b.centers[i].p_value) return false;
  }
  return a.summary.fisher_statistic == b.summary.fisher_statistic &&
         a.summary.fisher_p == b.summary.fisher_p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel kernel benchmark"};
  int64_t digit_reps = 200000;
  int64_t digit_cap = 999;
  int64_t centers = 150;
  int64_t perm_reps = 4000;
  uint64_t seed = 20040815;
  app.add_option("--digit-reps", digit_reps, "bounded reference replicates");
  app.add_option("--digit-cap", digit_cap, "bounded reference cap");
  app.add_option("--centers", centers, "synthetic centers for the permutation benchmark");
  app.add_option("--perm-reps", perm_reps, "permutation replicates per center");
  app.add_option("--seed", seed, "random seed");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads available: %d\n\n", forensics::worker_count(forensics::Exec::parallel));

  {
    auto t0 = Clock::now();
    auto serial = forensics::digits::bounded_reference_pmf(
        digit_cap, forensics::digits::BoundedModel::uniform_0_cap, 0.5, digit_reps, seed,
        forensics::Exec::serial);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto parallel = forensics::digits::bounded_reference_pmf(
        digit_cap, forensics::digits::BoundedModel::uniform_0_cap, 0.5, digit_reps, seed,
        forensics::Exec::parallel);
    double tp = seconds_since(t0);
    std::printf("bounded_reference_pmf  cap=%lld reps=%lld\n", (long long)digit_cap,
                (long long)digit_reps);
    std::printf("  serial   %8.3fs\n", ts);
    std::printf("  parallel %8.3fs  speedup %.2fx  identical: %s\n\n", tp, ts / tp,
                identical(serial, parallel) ? "yes" : "NO");
    if (!identical(serial, parallel)) return 1;
  }

  {
    forensics::synth::SynthConfig config;
    config.label = "bench";
    config.centers = centers;
    config.machines_min = 2;
    config.machines_max = 5;
    config.votes_kind = forensics::synth::SynthConfig::VotesKind::uniform;
    config.votes_min = 100;
    config.votes_max = 700;
    config.propensity = 0.42;
    config.out_rate = 0.02;
    auto ds = forensics::synth::generate(config, seed);

    const double thresholds[] = {0.05, 0.01};
    auto t0 = Clock::now();
    auto serial = forensics::permutation::permutation_test(
        ds, forensics::permutation::DispersionStat::yes_share_variance, perm_reps, seed,
        thresholds, forensics::Exec::serial);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto parallel = forensics::permutation::permutation_test(
        ds, forensics::permutation::DispersionStat::yes_share_variance, perm_reps, seed,
        thresholds, forensics::Exec::parallel);
    double tp = seconds_since(t0);
    std::printf("permutation_test  centers=%lld reps=%lld\n", (long long)centers,
                (long long)perm_reps);
    std::printf("  serial   %8.3fs\n", ts);
    std::printf("  parallel %8.3fs  speedup %.2fx  identical: %s\n", tp, ts / tp,
                identical(serial, parallel) ? "yes" : "NO");
    if (!identical(serial, parallel)) return 1;
  }

  return 0;
}
