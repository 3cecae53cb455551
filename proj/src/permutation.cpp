#include "forensics/permutation.hpp"

#include <cmath>
#include <stdexcept>

#include "forensics/stats.hpp"

namespace forensics::permutation {

namespace {

constexpr uint8_t kYes = 0;
constexpr uint8_t kNo = 1;
constexpr uint8_t kOut = 2;

void check_config(const CenterConfig& c) {
  if (c.sizes.size() < 2)
    throw std::invalid_argument("permutation: center needs at least two machines");
  int64_t total = 0;
  for (int64_t s : c.sizes) {
    if (s < 1) throw std::invalid_argument("permutation: machine sizes must be >= 1");
    total += s;
  }
  if (c.yes < 0 || c.no < 0 || c.out < 0 || c.yes + c.no + c.out != total)
    throw std::invalid_argument("permutation: totals must be nonnegative and sum to the ballots");
}

std::vector<uint8_t> make_cards(const CenterConfig& c) {
  std::vector<uint8_t> cards;
  cards.reserve(static_cast<size_t>(c.yes + c.no + c.out));
  cards.insert(cards.end(), static_cast<size_t>(c.yes), kYes);
  cards.insert(cards.end(), static_cast<size_t>(c.no), kNo);
  cards.insert(cards.end(), static_cast<size_t>(c.out), kOut);
  return cards;
}

// Statistic evaluated directly from per-machine yes/out counts. `shares`
// scratch avoids allocation in the replicate loop.
double stat_from_counts(std::span<const int64_t> sizes, std::span<const int64_t> yes,
                        std::span<const int64_t> out, int64_t total_ballots,
                        int64_t total_yes, int64_t total_out, DispersionStat stat) {
  const double t = static_cast<double>(total_ballots);
  switch (stat) {
    case DispersionStat::yes_share_variance: {
      const double center_share = static_cast<double>(total_yes) / t;
      double acc = 0.0;
      for (size_t i = 0; i < sizes.size(); ++i) {
        const double d =
            static_cast<double>(yes[i]) / static_cast<double>(sizes[i]) - center_share;
        acc += static_cast<double>(sizes[i]) / t * d * d;
      }
      return acc;
    }
    case DispersionStat::max_abs_share_deviation: {
      const double center_share = static_cast<double>(total_yes) / t;
      double best = 0.0;
      for (size_t i = 0; i < sizes.size(); ++i) {
        const double d = std::fabs(
            static_cast<double>(yes[i]) / static_cast<double>(sizes[i]) - center_share);
        if (d > best) best = d;
      }
      return best;
    }
    case DispersionStat::out_share_variance: {
      const double center_share = static_cast<double>(total_out) / t;
      double acc = 0.0;
      for (size_t i = 0; i < sizes.size(); ++i) {
        const double d =
            static_cast<double>(out[i]) / static_cast<double>(sizes[i]) - center_share;
        acc += static_cast<double>(sizes[i]) / t * d * d;
      }
      return acc;
    }
  }
  throw std::invalid_argument("permutation: unknown statistic");
}

}  // namespace

std::string to_string(DispersionStat s) {
  switch (s) {
    case DispersionStat::yes_share_variance: return "yes_share_variance";
    case DispersionStat::max_abs_share_deviation: return "max_abs_share_deviation";
    case DispersionStat::out_share_variance: return "out_share_variance";
  }
  return "yes_share_variance";
}

std::vector<MachineCounts> sample_allocation(const CenterConfig& config, Rng& rng) {
  check_config(config);
  auto cards = make_cards(config);
  rng.shuffle(cards);
  std::vector<MachineCounts> out(config.sizes.size());
  size_t pos = 0;
  for (size_t i = 0; i < config.sizes.size(); ++i) {
    MachineCounts& m = out[i];
    m.nu = config.sizes[i];
    for (int64_t j = 0; j < config.sizes[i]; ++j, ++pos) {
      if (cards[pos] == kYes) ++m.yes;
      else if (cards[pos] == kNo) ++m.no;
      else ++m.out;
    }
  }
  return out;
}

double dispersion_statistic(std::span<const MachineCounts> machines, DispersionStat stat) {
  if (machines.size() < 2)
    throw std::invalid_argument("dispersion_statistic: need at least two machines");
  std::vector<int64_t> sizes, yes, out;
  int64_t total = 0, total_yes = 0, total_out = 0;
  for (const auto& m : machines) {
    if (m.nu < 1)
      throw std::invalid_argument("dispersion_statistic: machine sizes must be >= 1");
    sizes.push_back(m.nu);
    yes.push_back(m.yes);
    out.push_back(m.out);
    total += m.nu;
    total_yes += m.yes;
    total_out += m.out;
  }
  return stat_from_counts(sizes, yes, out, total, total_yes, total_out, stat);
}

Outcome permutation_test(const ElectionDataset& ds, DispersionStat stat, int64_t reps,
                         uint64_t seed, std::span<const double> thresholds, Exec exec) {
  ensure_valid(ds);
  if (reps < 1) throw std::invalid_argument("permutation_test: reps must be >= 1");

  Outcome outcome;
  outcome.stat = stat;
  outcome.reps = reps;
  outcome.seed = seed;
  outcome.summary.thresholds.assign(thresholds.begin(), thresholds.end());

  // Collect eligible centers: two or more machines that recorded ballots.
  struct Task {
    size_t center_idx;
    CenterConfig config;
  };
  std::vector<Task> tasks;
  for (size_t ci = 0; ci < ds.centers.size(); ++ci) {
    CenterConfig cfg;
    for (size_t mi : ds.machines_by_center[ci]) {
      const auto& m = ds.machines[mi];
      if (m.nu < 1) continue;  // empty machines hold no cards
      cfg.sizes.push_back(m.nu);
      cfg.yes += m.yes;
      cfg.no += m.no;
      cfg.out += m.out;
    }
    if (cfg.sizes.size() < 2) {
      if (!ds.machines_by_center[ci].empty()) ++outcome.summary.centers_excluded;
      continue;
    }
    tasks.push_back({ci, std::move(cfg)});
  }

  outcome.centers.resize(tasks.size());
  const uint64_t module_seed = substream(seed, "permutation");

  par_for(static_cast<int64_t>(tasks.size()), exec, [&](int64_t ti) {
    const Task& task = tasks[ti];
    const auto& cfg = task.config;
    const size_t n_machines = cfg.sizes.size();
    const int64_t total = cfg.yes + cfg.no + cfg.out;

    // Observed statistic from the recorded tallies (same evaluation path as
    // the replicates).
    std::vector<int64_t> obs_yes, obs_out;
    for (size_t mi : ds.machines_by_center[task.center_idx]) {
      const auto& m = ds.machines[mi];
      if (m.nu < 1) continue;
      obs_yes.push_back(m.yes);
      obs_out.push_back(m.out);
    }
    const double observed = stat_from_counts(cfg.sizes, obs_yes, obs_out, total, cfg.yes,
                                             cfg.out, stat);

    Rng rng(substream(module_seed, ds.centers[task.center_idx].center_id));
    auto cards = make_cards(cfg);
    std::vector<int64_t> rep_yes(n_machines), rep_out(n_machines);
    int64_t at_least = 0;
    for (int64_t rep = 0; rep < reps; ++rep) {
      rng.shuffle(cards);
      size_t pos = 0;
      for (size_t i = 0; i < n_machines; ++i) {
        int64_t y = 0, o = 0;
        const int64_t sz = cfg.sizes[i];
        for (int64_t j = 0; j < sz; ++j, ++pos) {
          y += cards[pos] == kYes;
          o += cards[pos] == kOut;
        }
        rep_yes[i] = y;
        rep_out[i] = o;
      }
      const double value =
          stat_from_counts(cfg.sizes, rep_yes, rep_out, total, cfg.yes, cfg.out, stat);
      if (value >= observed) ++at_least;
    }

    CenterResult res;
    res.center_id = ds.centers[task.center_idx].center_id;
    res.machines = static_cast<int64_t>(n_machines);
    res.ballots = total;
    res.observed = observed;
    res.p_value = static_cast<double>(1 + at_least) / static_cast<double>(reps + 1);
    outcome.centers[ti] = std::move(res);
  });

  outcome.summary.centers_tested = static_cast<int64_t>(outcome.centers.size());
  outcome.summary.counts_below.assign(outcome.summary.thresholds.size(), 0);
  std::vector<double> ps;
  ps.reserve(outcome.centers.size());
  for (const auto& c : outcome.centers) {
    ps.push_back(c.p_value);
    for (size_t t = 0; t < outcome.summary.thresholds.size(); ++t) {
      if (c.p_value < outcome.summary.thresholds[t]) ++outcome.summary.counts_below[t];
    }
  }
  if (!ps.empty()) {
    const auto fisher = stats::fisher_combine(ps);
    outcome.summary.fisher_statistic = fisher.statistic;
    outcome.summary.fisher_df = fisher.df;
    outcome.summary.fisher_p = fisher.p_value;
  }
  return outcome;
}

}  // namespace forensics::permutation
