#include "forensics/association.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "forensics/rng.hpp"
#include "forensics/stats.hpp"

namespace forensics::association {

std::string to_string(GroupingKind k) {
  switch (k) {
    case GroupingKind::none: return "NONE";
    case GroupingKind::signature_split: return "SIGNATURE_SPLIT";
    case GroupingKind::computerized_manual: return "COMPUTERIZED_VS_MANUAL";
    case GroupingKind::size_quantiles: return "SIZE_QUANTILES";
  }
  throw std::logic_error("unreachable grouping kind");
}

namespace {

struct CenterPoint {
  size_t center_index = 0;
  double yes_share = 0.0;
  double sig_share = 0.0;
};

// Centers need counted ballots for a YES share and registered voters for a
// signature share; others are skipped before grouping.
std::vector<CenterPoint> measurable_centers(const ElectionDataset& ds) {
  std::vector<CenterPoint> out;
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    const auto& c = ds.centers[i];
    int64_t ballots = ds.center_ballots(i);
    if (ballots <= 0 || c.registered <= 0) continue;
    CenterPoint p;
    p.center_index = i;
    p.yes_share = double(ds.center_yes(i)) / double(ballots);
    p.sig_share = double(c.signatures) / double(c.registered);
    out.push_back(p);
  }
  return out;
}

double median_of(std::vector<double> v) {
  size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
  return 0.5 * (v[n / 2 - 1] + hi);
}

struct Group {
  std::string label;
  std::vector<size_t> members;  // indices into the points vector
};

std::vector<Group> assign_groups(const ElectionDataset& ds, std::span<const CenterPoint> points,
                                 const GroupingSpec& spec) {
  std::vector<Group> groups;
  auto push = [&](std::string label) {
    groups.push_back({std::move(label), {}});
    return groups.size() - 1;
  };
  switch (spec.kind) {
    case GroupingKind::none: {
      size_t g = push("ALL");
      for (size_t i = 0; i < points.size(); ++i) groups[g].members.push_back(i);
      break;
    }
    case GroupingKind::signature_split: {
      double t = spec.threshold;
      if (std::isnan(t)) {
        std::vector<double> shares;
        shares.reserve(points.size());
        for (const auto& p : points) shares.push_back(p.sig_share);
        if (shares.empty()) throw std::invalid_argument("signature split needs at least one center");
        t = median_of(std::move(shares));
      }
      size_t lo = push("LOW_SIGNATURE");
      size_t hi = push("HIGH_SIGNATURE");
      for (size_t i = 0; i < points.size(); ++i)
        groups[points[i].sig_share <= t ? lo : hi].members.push_back(i);
      break;
    }
    case GroupingKind::computerized_manual: {
      size_t comp = push("COMPUTERIZED");
      size_t man = push("MANUAL");
      for (size_t i = 0; i < points.size(); ++i)
        groups[ds.centers[points[i].center_index].computerized ? comp : man].members.push_back(i);
      break;
    }
    case GroupingKind::size_quantiles: {
      int q = spec.quantiles;
      if (q < 2) throw std::invalid_argument("size quantile grouping needs at least 2 groups");
      std::vector<size_t> order(points.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        int64_t ra = ds.centers[points[a].center_index].registered;
        int64_t rb = ds.centers[points[b].center_index].registered;
        if (ra != rb) return ra < rb;
        return ds.centers[points[a].center_index].center_id <
               ds.centers[points[b].center_index].center_id;
      });
      for (int g = 0; g < q; ++g) push("SIZE_Q" + std::to_string(g + 1));
      for (size_t i = 0; i < order.size(); ++i) {
        size_t g = i * size_t(q) / std::max<size_t>(order.size(), 1);
        groups[g].members.push_back(order[i]);
      }
      break;
    }
  }
  return groups;
}

bool has_variance(std::span<const double> v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] != v[0]) return true;
  return false;
}

// Two-sided permutation p-value for a correlation: one variable is shuffled
// and |r| compared against the observed |r|, with the add-one rule.
double permutation_corr_p(std::span<const double> x, std::vector<double> y, double r_obs,
                          int64_t reps, Rng& rng) {
  int64_t at_least = 0;
  double target = std::abs(r_obs) - 1e-12;
  for (int64_t rep = 0; rep < reps; ++rep) {
    rng.shuffle(y);
    if (std::abs(stats::pearson_r(x, y)) >= target) ++at_least;
  }
  return double(1 + at_least) / double(reps + 1);
}

CorrelationResult correlate_group(const std::string& label, std::span<const double> x,
                                  std::span<const double> y, int64_t reps, uint64_t stream) {
  CorrelationResult res;
  res.group = label;
  res.n = int64_t(x.size());
  res.reps = reps;
  if (x.size() < 3) {
    res.note = "fewer than 3 centers";
    return res;
  }
  if (!has_variance(x) || !has_variance(y)) {
    res.note = "degenerate variable";
    return res;
  }
  res.testable = true;
  res.r = stats::pearson_r(x, y);
  res.fisher_z_p = stats::fisher_z_p(res.r, int64_t(x.size()));
  Rng rng(stream);
  res.perm_p = permutation_corr_p(x, {y.begin(), y.end()}, res.r, reps, rng);
  return res;
}

}  // namespace

std::vector<CorrelationResult> signature_share_correlation(const ElectionDataset& ds,
                                                           const GroupingSpec& grouping,
                                                           int64_t reps, uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("permutation replicates must be positive");
  ensure_valid(ds);
  auto points = measurable_centers(ds);
  auto groups = assign_groups(ds, points, grouping);
  uint64_t module_seed = substream(seed, "association");
  std::vector<CorrelationResult> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    std::vector<double> yes, sig;
    yes.reserve(g.members.size());
    sig.reserve(g.members.size());
    for (size_t m : g.members) {
      yes.push_back(points[m].yes_share);
      sig.push_back(points[m].sig_share);
    }
    out.push_back(correlate_group(g.label, yes, sig, reps, substream(module_seed, g.label)));
  }
  return out;
}

ResidualCorrelationResult residual_correlation_test(const ElectionDataset& ds, int64_t reps,
                                                    uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("permutation replicates must be positive");
  ensure_valid(ds);
  ResidualCorrelationResult res;
  res.reps = reps;

  std::vector<double> yes, sig, poll;
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    const auto& c = ds.centers[i];
    int64_t ballots = ds.center_ballots(i);
    if (ballots <= 0 || c.registered <= 0) continue;
    if (ds.polls_by_center[i].empty()) continue;
    int64_t m = 0, k = 0;
    for (size_t pi : ds.polls_by_center[i]) {
      m += ds.polls[pi].sample_size;
      k += ds.polls[pi].yes_responses;
    }
    if (m <= 0) continue;
    yes.push_back(double(ds.center_yes(i)) / double(ballots));
    sig.push_back(double(c.signatures) / double(c.registered));
    poll.push_back(double(k) / double(m));
  }
  res.n = int64_t(yes.size());
  if (res.n < 10) {
    res.note = "fewer than 10 centers with tallies, signatures, and a poll";
    return res;
  }
  if (!has_variance(yes)) {
    res.note = "recorded YES share is constant";
    return res;
  }

  auto fit_a = stats::ols_simple(yes, sig);
  auto fit_b = stats::ols_simple(yes, poll);
  res.slope_a = fit_a.slope;
  res.intercept_a = fit_a.intercept;
  res.slope_b = fit_b.slope;
  res.intercept_b = fit_b.intercept;
  res.residuals_a = fit_a.residuals;
  res.residuals_b = fit_b.residuals;

  if (!has_variance(res.residuals_a) || !has_variance(res.residuals_b)) {
    res.note = "a residual vector is constant";
    return res;
  }
  res.testable = true;
  res.r = stats::pearson_r(res.residuals_a, res.residuals_b);
  res.fisher_z_p = stats::fisher_z_p(res.r, res.n);
  Rng rng(substream(substream(seed, "association"), "residual"));
  res.perm_p = permutation_corr_p(res.residuals_a, res.residuals_b, res.r, reps, rng);
  return res;
}

CrossElectionResult cross_election_correlation(std::span<const ElectionDataset> datasets,
                                               const GroupingSpec& grouping, int64_t reps,
                                               uint64_t seed, double flag_threshold) {
  if (datasets.size() < 2)
    throw std::invalid_argument("cross-election comparison needs at least 2 datasets");
  if (reps < 1) throw std::invalid_argument("permutation replicates must be positive");
  for (const auto& ds : datasets) ensure_valid(ds);

  // Centers measurable in every election, keyed by id.
  std::map<std::string, std::vector<CenterPoint>> by_id;  // id -> point per dataset
  {
    auto first = measurable_centers(datasets[0]);
    for (const auto& p : first)
      by_id[datasets[0].centers[p.center_index].center_id] = {p};
  }
  for (size_t d = 1; d < datasets.size(); ++d) {
    auto points = measurable_centers(datasets[d]);
    std::map<std::string, CenterPoint> here;
    for (const auto& p : points) here[datasets[d].centers[p.center_index].center_id] = p;
    for (auto it = by_id.begin(); it != by_id.end();) {
      auto hit = here.find(it->first);
      if (hit == here.end() || it->second.size() != d) {
        it = by_id.erase(it);
      } else {
        it->second.push_back(hit->second);
        ++it;
      }
    }
  }

  CrossElectionResult out;
  out.flag_threshold = flag_threshold;
  out.shared_centers = int64_t(by_id.size());
  if (by_id.size() < 3)
    throw std::invalid_argument("cross-election comparison needs at least 3 shared centers");

  // Group membership comes from the first dataset's measurements so that the
  // same centers form each group in every election.
  std::vector<CenterPoint> anchor;
  std::vector<std::string> ids;
  for (const auto& [id, pts] : by_id) {
    anchor.push_back(pts[0]);
    ids.push_back(id);
  }
  auto groups = assign_groups(datasets[0], anchor, grouping);

  uint64_t module_seed = substream(seed, "association");
  for (size_t d = 0; d < datasets.size(); ++d) {
    CrossElectionEntry entry;
    entry.label = datasets[d].label;
    bool all_high = true;
    bool any_testable = false;
    uint64_t election_seed = substream(module_seed, datasets[d].label);
    for (const auto& g : groups) {
      std::vector<double> yes, sig;
      for (size_t m : g.members) {
        const auto& p = by_id.at(ids[m])[d];
        yes.push_back(p.yes_share);
        sig.push_back(p.sig_share);
      }
      auto res = correlate_group(g.label, yes, sig, reps, substream(election_seed, g.label));
      if (res.testable) {
        any_testable = true;
        if (std::abs(res.r) < flag_threshold) all_high = false;
      }
      entry.groups.push_back(std::move(res));
    }
    entry.high_correlation_in_all_groups = any_testable && all_high;
    out.elections.push_back(std::move(entry));
  }
  return out;
}

}  // namespace forensics::association
