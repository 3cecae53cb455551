#include "forensics/audit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "forensics/rng.hpp"

namespace forensics::audit {

FlipBound min_flip_precincts(int64_t margin_votes, std::span<const int64_t> ballots,
                             double lambda) {
  if (margin_votes <= 0) throw std::invalid_argument("margin must be positive");
  if (!(lambda > 0.0) || lambda > 1.0) throw std::invalid_argument("lambda must be in (0, 1]");
  for (int64_t b : ballots)
    if (b < 0) throw std::invalid_argument("ballot counts must be non-negative");

  std::vector<int64_t> sorted(ballots.begin(), ballots.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double influence = 0.0;
  FlipBound out;
  for (int64_t b : sorted) {
    if (influence >= double(margin_votes)) break;
    influence += 2.0 * lambda * double(b);
    ++out.k;
  }
  if (influence < double(margin_votes)) {
    out.k = 0;
    out.audit_unnecessary = true;
  }
  return out;
}

double detection_probability(int64_t n_precincts, int64_t tainted, int64_t sample_size) {
  if (tainted < 1 || tainted > n_precincts)
    throw std::invalid_argument("tainted count must be in [1, N]");
  if (sample_size < 0 || sample_size > n_precincts)
    throw std::invalid_argument("sample size must be in [0, N]");
  if (sample_size == 0) return 0.0;
  if (sample_size > n_precincts - tainted) return 1.0;
  // C(N-k, n) / C(N, n) = prod_{i=0..n-1} (N-k-i) / (N-i)
  long double miss = 1.0L;
  for (int64_t i = 0; i < sample_size; ++i)
    miss *= (long double)(n_precincts - tainted - i) / (long double)(n_precincts - i);
  return double(1.0L - miss);
}

int64_t plan_sample_size(int64_t n_precincts, int64_t tainted, double confidence) {
  if (!(confidence > 0.0) || confidence >= 1.0)
    throw std::invalid_argument("confidence must be in (0, 1)");
  if (tainted < 1 || tainted > n_precincts)
    throw std::invalid_argument("tainted count must be in [1, N]");
  // Detection is monotone in n; the first n meeting the target is minimal.
  int64_t lo = 0, hi = n_precincts;
  while (lo < hi) {
    int64_t mid = lo + (hi - lo) / 2;
    if (detection_probability(n_precincts, tainted, mid) >= confidence)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

AuditPlan plan_audit(int64_t margin_votes, std::span<const int64_t> ballots, double lambda,
                     double confidence) {
  AuditPlan plan;
  plan.precincts = int64_t(ballots.size());
  plan.margin_votes = margin_votes;
  plan.lambda = lambda;
  plan.confidence = confidence;
  auto flip = min_flip_precincts(margin_votes, ballots, lambda);
  plan.min_flip = flip.k;
  plan.audit_unnecessary = flip.audit_unnecessary;
  if (plan.audit_unnecessary) return plan;
  if (!(confidence > 0.0) || confidence >= 1.0)
    throw std::invalid_argument("confidence must be in (0, 1)");
  plan.sample_size = plan_sample_size(plan.precincts, plan.min_flip, confidence);
  plan.detection = detection_probability(plan.precincts, plan.min_flip, plan.sample_size);
  return plan;
}

std::string to_string(Covariate c) {
  switch (c) {
    case Covariate::size: return "SIZE";
    case Covariate::computerized: return "COMPUTERIZED";
    case Covariate::region: return "REGION";
    case Covariate::yes_share: return "YES_SHARE";
  }
  throw std::logic_error("unreachable covariate");
}

namespace {

struct CovariateData {
  bool categorical = false;
  std::vector<double> numeric;       // per center, when numeric
  std::vector<int> category;         // per center, when categorical
  int n_categories = 0;
  std::vector<bool> defined;         // covariate available for this center
};

CovariateData covariate_data(const ElectionDataset& ds, Covariate c) {
  CovariateData out;
  size_t n = ds.centers.size();
  out.defined.assign(n, true);
  switch (c) {
    case Covariate::size: {
      out.numeric.resize(n);
      for (size_t i = 0; i < n; ++i) out.numeric[i] = double(ds.centers[i].registered);
      break;
    }
    case Covariate::yes_share: {
      out.numeric.resize(n, 0.0);
      for (size_t i = 0; i < n; ++i) {
        int64_t ballots = ds.center_ballots(i);
        if (ballots > 0)
          out.numeric[i] = double(ds.center_yes(i)) / double(ballots);
        else
          out.defined[i] = false;
      }
      break;
    }
    case Covariate::computerized: {
      out.categorical = true;
      out.n_categories = 2;
      out.category.resize(n);
      for (size_t i = 0; i < n; ++i) out.category[i] = ds.centers[i].computerized ? 1 : 0;
      break;
    }
    case Covariate::region: {
      out.categorical = true;
      out.category.resize(n);
      std::map<std::string, int> codes;
      for (size_t i = 0; i < n; ++i) {
        auto [it, inserted] = codes.emplace(ds.centers[i].region, int(codes.size()));
        out.category[i] = it->second;
      }
      out.n_categories = int(codes.size());
      break;
    }
  }
  return out;
}

double mean_of(std::span<const size_t> members, std::span<const double> values) {
  double s = 0.0;
  for (size_t m : members) s += values[m];
  return s / double(members.size());
}

// Chi-square distance of the subset's category counts from the counts a
// proportional draw would give.
double category_distance(std::span<const size_t> members, std::span<const int> category,
                         std::span<const double> expected_share, int n_categories) {
  std::vector<double> counts(size_t(n_categories), 0.0);
  for (size_t m : members) counts[size_t(category[m])] += 1.0;
  double stat = 0.0;
  for (int c = 0; c < n_categories; ++c) {
    double e = expected_share[size_t(c)] * double(members.size());
    if (e > 0.0) {
      double d = counts[size_t(c)] - e;
      stat += d * d / e;
    }
  }
  return stat;
}

}  // namespace

std::vector<RandomnessResult> sample_randomness_check(const ElectionDataset& ds,
                                                      std::span<const std::string> audited_ids,
                                                      std::span<const Covariate> covariates,
                                                      int64_t reps, uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("replicates must be positive");
  ensure_valid(ds);
  if (audited_ids.empty()) throw std::invalid_argument("audited set is empty");

  std::set<std::string> audited;
  for (const auto& id : audited_ids) {
    if (ds.center_index.find(id) == ds.center_index.end())
      throw std::invalid_argument("audited center not in dataset: " + id);
    if (!audited.insert(id).second)
      throw std::invalid_argument("audited center listed twice: " + id);
  }
  if (audited.size() == ds.centers.size())
    throw std::invalid_argument("audited set equals all centers; no complement to compare");

  uint64_t module_seed = substream(seed, "audit");
  std::vector<RandomnessResult> out;
  for (Covariate c : covariates) {
    RandomnessResult res;
    res.covariate = c;
    res.reps = reps;
    auto data = covariate_data(ds, c);
    res.categorical = data.categorical;

    // Pool = centers where the covariate is defined; the audited subset is
    // compared only against same-size draws from that pool.
    std::vector<size_t> pool;
    std::vector<size_t> audited_members;
    for (size_t i = 0; i < ds.centers.size(); ++i) {
      if (!data.defined[i]) continue;
      pool.push_back(i);
      if (audited.count(ds.centers[i].center_id)) audited_members.push_back(i);
    }
    res.n_audited = int64_t(audited_members.size());
    res.n_population = int64_t(pool.size());
    if (audited_members.empty() || audited_members.size() == pool.size()) {
      res.note = "covariate not defined on a proper non-empty audited subset";
      out.push_back(std::move(res));
      continue;
    }

    std::vector<double> expected_share;
    double pop_mean = 0.0;
    if (data.categorical) {
      expected_share.assign(size_t(data.n_categories), 0.0);
      for (size_t i : pool) expected_share[size_t(data.category[i])] += 1.0;
      for (auto& s : expected_share) s /= double(pool.size());
      res.observed = category_distance(audited_members, data.category, expected_share,
                                       data.n_categories);
    } else {
      for (size_t i : pool) pop_mean += data.numeric[i];
      pop_mean /= double(pool.size());
      res.observed = std::abs(mean_of(audited_members, data.numeric) - pop_mean);
    }

    Rng rng(substream(module_seed, to_string(c)));
    std::vector<size_t> scratch = pool;
    size_t k = audited_members.size();
    int64_t at_least = 0;
    for (int64_t rep = 0; rep < reps; ++rep) {
      // Partial Fisher-Yates; any starting permutation yields a uniform subset.
      for (size_t i = 0; i < k; ++i) {
        size_t j = i + size_t(rng.bounded(uint64_t(scratch.size() - i)));
        std::swap(scratch[i], scratch[j]);
      }
      std::span<const size_t> subset(scratch.data(), k);
      double stat = data.categorical
                        ? category_distance(subset, data.category, expected_share,
                                            data.n_categories)
                        : std::abs(mean_of(subset, data.numeric) - pop_mean);
      if (stat >= res.observed - 1e-12) ++at_least;
    }
    res.p_value = double(1 + at_least) / double(reps + 1);
    res.testable = true;
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace forensics::audit
