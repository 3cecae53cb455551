#pragma once

// Transmission-metadata forensics. Per-center traffic totals are joined with
// vote tallies; traffic classes are compared pairwise by rank-sum, and the
// association between transmitted volume and votes cast is tested against the
// normative that every center transmits only a totals message. Results never
// claim tampering; they quantify association only.

#include <cstdint>
#include <string>
#include <vector>

#include "forensics/dataset.hpp"

namespace forensics::metadata {

struct TrafficSummary {
  std::string center_id;
  int64_t bytes_in = 0;
  int64_t bytes_out = 0;
  int64_t packets_in = 0;
  int64_t packets_out = 0;
  int64_t sessions = 0;
  int64_t connected_seconds = 0;
  int64_t votes = 0;  // joined from machine tallies, never an input column
  TrafficClass traffic_class = TrafficClass::unclassified;  // unclassified when records disagree
};

// One summary per center holding at least one transmission record, ordered by
// center_id. Input row order never affects the result.
std::vector<TrafficSummary> traffic_summaries(const ElectionDataset& ds);

enum class Measure { bytes_out, bytes_in, packets_out, bytes_per_session };

std::string to_string(Measure m);

double measure_value(const TrafficSummary& s, Measure m);

// Replaces every summary's class by byte-total terciles: lowest third LOW,
// middle UNCLASSIFIED, top third HIGH. Output consuming these classes must
// carry the derived_classes flag.
void classify_by_terciles(std::vector<TrafficSummary>& summaries, Measure m);

struct ClassPairResult {
  TrafficClass class_a = TrafficClass::unclassified;
  TrafficClass class_b = TrafficClass::unclassified;
  int64_t n_a = 0, n_b = 0;
  double median_a = 0.0, median_b = 0.0;
  double u_statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;     // exact rank-sum distribution vs normal approximation
  bool testable = false;  // both classes at or above the 5-center floor
  std::string note;
};

struct TrafficClassComparison {
  Measure measure = Measure::bytes_out;
  bool derived_classes = false;
  std::vector<ClassPairResult> pairs;
  std::vector<std::string> caveats;
};

// Pairwise two-sided Mann-Whitney across the traffic classes present. Pairs
// where either class has fewer than 5 centers are reported untestable.
TrafficClassComparison traffic_class_compare(const ElectionDataset& ds, Measure measure,
                                             bool auto_classify_terciles = false);

struct BytesVotesResult {
  Measure measure = Measure::bytes_out;
  int64_t n = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double t_stat = 0.0;
  double analytic_p = 1.0;
  double perm_p = 1.0;
  int64_t reps = 0;
  std::vector<std::string> caveats;
};

// OLS of the traffic measure on votes cast, with a permutation p-value for
// the slope obtained by shuffling the votes vector. Requires >= 10 centers
// joining tallies to transmission records and variance in votes.
BytesVotesResult bytes_vs_votes_test(const ElectionDataset& ds, Measure measure, int64_t reps,
                                     uint64_t seed);

}  // namespace forensics::metadata
