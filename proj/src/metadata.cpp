#include "forensics/metadata.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forensics/rng.hpp"
#include "forensics/stats.hpp"

namespace forensics::metadata {

std::string to_string(Measure m) {
  switch (m) {
    case Measure::bytes_out: return "BYTES_OUT";
    case Measure::bytes_in: return "BYTES_IN";
    case Measure::packets_out: return "PACKETS_OUT";
    case Measure::bytes_per_session: return "BYTES_PER_SESSION";
  }
  throw std::logic_error("unreachable measure");
}

std::vector<TrafficSummary> traffic_summaries(const ElectionDataset& ds) {
  std::vector<TrafficSummary> out;
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    const auto& c = ds.centers[i];
    if (ds.transmissions_by_center[i].empty()) continue;
    TrafficSummary s;
    s.center_id = c.center_id;
    s.votes = ds.center_ballots(i);
    bool first = true;
    bool mixed = false;
    for (size_t ti : ds.transmissions_by_center[i]) {
      const auto& r = ds.transmissions[ti];
      s.bytes_in += r.bytes_in;
      s.bytes_out += r.bytes_out;
      s.packets_in += r.packets_in;
      s.packets_out += r.packets_out;
      s.sessions += 1;
      s.connected_seconds += r.session_end - r.session_start;
      if (first) {
        s.traffic_class = r.traffic_class;
        first = false;
      } else if (r.traffic_class != s.traffic_class) {
        mixed = true;
      }
    }
    if (mixed) s.traffic_class = TrafficClass::unclassified;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(),
            [](const TrafficSummary& a, const TrafficSummary& b) { return a.center_id < b.center_id; });
  return out;
}

double measure_value(const TrafficSummary& s, Measure m) {
  switch (m) {
    case Measure::bytes_out: return double(s.bytes_out);
    case Measure::bytes_in: return double(s.bytes_in);
    case Measure::packets_out: return double(s.packets_out);
    case Measure::bytes_per_session:
      return s.sessions > 0 ? double(s.bytes_in + s.bytes_out) / double(s.sessions) : 0.0;
  }
  throw std::logic_error("unreachable measure");
}

void classify_by_terciles(std::vector<TrafficSummary>& summaries, Measure m) {
  if (summaries.empty()) return;
  std::vector<size_t> order(summaries.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    double va = measure_value(summaries[a], m), vb = measure_value(summaries[b], m);
    if (va != vb) return va < vb;
    return summaries[a].center_id < summaries[b].center_id;
  });
  size_t n = order.size();
  for (size_t i = 0; i < n; ++i) {
    size_t tercile = i * 3 / n;
    summaries[order[i]].traffic_class = tercile == 0   ? TrafficClass::low
                                        : tercile == 1 ? TrafficClass::unclassified
                                                       : TrafficClass::high;
  }
}

namespace {

double median_of(std::vector<double> v) {
  size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
  return 0.5 * (v[n / 2 - 1] + hi);
}

constexpr int64_t kClassFloor = 5;

const std::vector<std::string>& metadata_caveats() {
  static const std::vector<std::string> caveats = {
      "association does not establish tampering",
      "traffic volumes depend on protocol details not modeled here"};
  return caveats;
}

}  // namespace

TrafficClassComparison traffic_class_compare(const ElectionDataset& ds, Measure measure,
                                             bool auto_classify_terciles) {
  ensure_valid(ds);
  auto summaries = traffic_summaries(ds);
  if (auto_classify_terciles) classify_by_terciles(summaries, measure);

  constexpr TrafficClass kClasses[] = {TrafficClass::high, TrafficClass::low,
                                       TrafficClass::cellular, TrafficClass::unclassified};
  std::vector<std::pair<TrafficClass, std::vector<double>>> present;
  for (TrafficClass c : kClasses) {
    std::vector<double> values;
    for (const auto& s : summaries)
      if (s.traffic_class == c) values.push_back(measure_value(s, measure));
    if (!values.empty()) present.emplace_back(c, std::move(values));
  }
  if (present.size() < 2)
    throw std::invalid_argument("traffic class comparison needs at least 2 classes with records");

  TrafficClassComparison out;
  out.measure = measure;
  out.derived_classes = auto_classify_terciles;
  out.caveats = metadata_caveats();
  if (auto_classify_terciles)
    out.caveats.push_back("traffic classes derived from byte terciles, not recorded labels");
  for (size_t i = 0; i < present.size(); ++i) {
    for (size_t j = i + 1; j < present.size(); ++j) {
      ClassPairResult pr;
      pr.class_a = present[i].first;
      pr.class_b = present[j].first;
      pr.n_a = int64_t(present[i].second.size());
      pr.n_b = int64_t(present[j].second.size());
      pr.median_a = median_of(present[i].second);
      pr.median_b = median_of(present[j].second);
      if (pr.n_a < kClassFloor || pr.n_b < kClassFloor) {
        pr.note = "class below 5-center floor";
      } else {
        auto test = stats::mann_whitney(present[i].second, present[j].second);
        pr.u_statistic = test.u;
        pr.p_value = test.p_two_sided;
        pr.exact = test.exact;
        pr.testable = true;
      }
      out.pairs.push_back(std::move(pr));
    }
  }
  return out;
}

BytesVotesResult bytes_vs_votes_test(const ElectionDataset& ds, Measure measure, int64_t reps,
                                     uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("permutation replicates must be positive");
  ensure_valid(ds);
  auto summaries = traffic_summaries(ds);

  std::vector<double> votes, values;
  for (const auto& s : summaries) {
    size_t idx = ds.center_index.at(s.center_id);
    if (ds.machines_by_center[idx].empty()) continue;
    votes.push_back(double(s.votes));
    values.push_back(measure_value(s, measure));
  }
  if (votes.size() < 10)
    throw std::invalid_argument("bytes-votes test needs at least 10 centers with tallies and transmissions");
  bool votes_vary = false;
  for (size_t i = 1; i < votes.size(); ++i)
    if (votes[i] != votes[0]) votes_vary = true;
  if (!votes_vary) throw std::invalid_argument("votes cast are constant across centers");

  BytesVotesResult res;
  res.measure = measure;
  res.n = int64_t(votes.size());
  res.reps = reps;
  res.caveats = metadata_caveats();

  auto fit = stats::ols_simple(votes, values);
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  res.t_stat = fit.t_stat;
  res.analytic_p = fit.p_two_sided;

  // Permutation null: reassign vote totals across centers and compare |slope|.
  Rng rng(substream(substream(seed, "metadata"), "bytes_votes"));
  double target = std::abs(res.slope) - 1e-12 * std::max(1.0, std::abs(res.slope));
  int64_t at_least = 0;
  std::vector<double> shuffled = votes;
  for (int64_t rep = 0; rep < reps; ++rep) {
    rng.shuffle(shuffled);
    auto perm_fit = stats::ols_simple(shuffled, values);
    if (std::abs(perm_fit.slope) >= target) ++at_least;
  }
  res.perm_p = double(1 + at_least) / double(reps + 1);
  return res;
}

}  // namespace forensics::metadata
