#include "forensics/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "forensics/digits.hpp"
#include "forensics/permutation.hpp"
#include "forensics/rng.hpp"

namespace forensics::report {

namespace {

using nlohmann::ordered_json;

polling::Tail tail_from(const std::string& s) {
  if (s == "GE") return polling::Tail::ge;
  if (s == "LE") return polling::Tail::le;
  if (s == "TWO_SIDED") return polling::Tail::two_sided;
  throw std::invalid_argument("unknown tail direction: " + s);
}

polling::AggregateMethod aggregate_from(const std::string& s) {
  if (s == "COUNT_BELOW") return polling::AggregateMethod::count_below;
  if (s == "FISHER") return polling::AggregateMethod::fisher;
  throw std::invalid_argument("unknown aggregate method: " + s);
}

association::GroupingKind grouping_from(const std::string& s) {
  if (s == "NONE") return association::GroupingKind::none;
  if (s == "SIGNATURE_SPLIT") return association::GroupingKind::signature_split;
  if (s == "COMPUTERIZED_VS_MANUAL") return association::GroupingKind::computerized_manual;
  if (s == "SIZE_QUANTILES") return association::GroupingKind::size_quantiles;
  throw std::invalid_argument("unknown grouping: " + s);
}

metadata::Measure measure_from(const std::string& s) {
  if (s == "BYTES_OUT") return metadata::Measure::bytes_out;
  if (s == "BYTES_IN") return metadata::Measure::bytes_in;
  if (s == "PACKETS_OUT") return metadata::Measure::packets_out;
  if (s == "BYTES_PER_SESSION") return metadata::Measure::bytes_per_session;
  throw std::invalid_argument("unknown traffic measure: " + s);
}

const std::set<std::string>& known_tests() {
  static const std::set<std::string> names = {"DIGITS",      "PERMUTATION", "EXITPOLL",
                                              "ASSOCIATION", "RESIDUALS",   "METADATA"};
  return names;
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    auto d = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double, std::milli>(d).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Runs one detector, converting thrown preconditions into structured skips.
template <typename Fn>
void run_guarded(std::vector<TestResult>& out, const std::string& name, const std::string& module,
                 Fn&& fn) {
  Timer timer;
  size_t before = out.size();
  try {
    fn();
  } catch (const std::exception& e) {
    out.resize(before);
    TestResult skip;
    skip.name = name;
    skip.module = module;
    skip.skipped = true;
    skip.skip_reason = e.what();
    out.push_back(std::move(skip));
  }
  for (size_t i = before; i < out.size(); ++i) out[i].elapsed_ms = timer.ms();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

BatteryConfig battery_config_from_doc(const kv::Document& doc) {
  BatteryConfig c;
  c.tests = doc.get_list("tests");
  if (c.tests.empty()) throw std::invalid_argument("battery config selects no tests");
  std::set<std::string> seen;
  for (const auto& t : c.tests) {
    if (!known_tests().count(t)) throw std::invalid_argument("unknown battery test: " + t);
    if (!seen.insert(t).second) throw std::invalid_argument("battery test listed twice: " + t);
  }
  c.reps = doc.get_int("reps", c.reps);
  if (c.reps < 1) throw std::invalid_argument("reps must be positive");
  if (doc.has("thresholds")) {
    c.thresholds.clear();
    for (const auto& t : doc.get_list("thresholds")) c.thresholds.push_back(std::stod(t));
    for (double t : c.thresholds)
      if (!(t > 0.0) || t >= 1.0) throw std::invalid_argument("thresholds must be in (0, 1)");
  }
  c.exitpoll_direction = tail_from(doc.get_string("exitpoll_direction", "TWO_SIDED"));
  c.exitpoll_aggregate = aggregate_from(doc.get_string("exitpoll_aggregate", "FISHER"));
  c.exitpoll_tau = doc.get_double("exitpoll_tau", c.exitpoll_tau);
  c.min_poll_sample = doc.get_int("min_poll_sample", c.min_poll_sample);
  c.grouping.kind = grouping_from(doc.get_string("grouping", "NONE"));
  if (doc.has("grouping_threshold")) c.grouping.threshold = doc.get_double("grouping_threshold");
  c.grouping.quantiles = int(doc.get_int("grouping_quantiles", c.grouping.quantiles));
  c.measure = measure_from(doc.get_string("measure", "BYTES_OUT"));
  c.metadata_auto_classify = doc.get_bool("metadata_auto_classify", false);
  return c;
}

BatteryConfig load_battery_config(const std::string& path) {
  return battery_config_from_doc(kv::load(path));
}

Format format_from_string(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "text") return Format::text_summary;
  if (s == "plotcsv") return Format::plot_data_csv;
  throw std::invalid_argument("unknown report format: " + s);
}

namespace {

void run_digits(const ElectionDataset& ds, std::vector<TestResult>& out) {
  std::vector<int64_t> yes;
  for (const auto& m : ds.machines) yes.push_back(m.yes);
  for (int position : {1, 2}) {
    std::string name = position == 1 ? "digits_first_yes" : "digits_second_yes";
    run_guarded(out, name, "digits", [&] {
      auto observed = digits::digit_histogram(yes, position);
      auto result = digits::digit_test(observed, digits::reference_digit_law(position));
      TestResult tr;
      tr.name = name;
      tr.module = "digits";
      tr.statistic_name = "chi_square";
      tr.statistic = result.chi_square;
      tr.p_value = result.p_value;
      tr.log_bayes_factor = result.log_bayes_factor;
      tr.caveats = {"reference law assumes unbounded multi-digit counts"};
      tr.details = ordered_json{{"df", result.df},
                                {"sample_size", result.sample_size},
                                {"dropped", observed.dropped},
                                {"low_information", result.low_information},
                                {"bayes_factor_method", "BIC"}};
      out.push_back(std::move(tr));
    });
  }
}

void run_permutation(const ElectionDataset& ds, const BatteryConfig& config, uint64_t seed,
                     BatteryReport& report, std::vector<TestResult>& out) {
  run_guarded(out, "permutation_yes_share_variance", "permutation", [&] {
    auto outcome = permutation::permutation_test(ds, permutation::DispersionStat::yes_share_variance,
                                                 config.reps, seed, config.thresholds);
    TestResult tr;
    tr.name = "permutation_yes_share_variance";
    tr.module = "permutation";
    tr.statistic_name = "fisher_combination";
    tr.statistic = outcome.summary.fisher_statistic;
    tr.p_value = outcome.summary.fisher_p;
    tr.reps = outcome.reps;
    tr.seed = outcome.seed;
    tr.caveats = {outcome.summary.assumption};
    ordered_json below = ordered_json::array();
    for (size_t i = 0; i < outcome.summary.thresholds.size(); ++i)
      below.push_back(ordered_json{{"threshold", outcome.summary.thresholds[i]},
                                   {"centers", outcome.summary.counts_below[i]}});
    tr.details = ordered_json{{"centers_tested", outcome.summary.centers_tested},
                              {"centers_excluded", outcome.summary.centers_excluded},
                              {"fisher_df", outcome.summary.fisher_df},
                              {"centers_below", below}};
    out.push_back(std::move(tr));
    for (const auto& c : outcome.centers) {
      auto it = ds.center_index.find(c.center_id);
      if (it != ds.center_index.end() && it->second < report.plot_rows.size())
        report.plot_rows[it->second].permutation_p = c.p_value;
    }
  });
}

void run_exitpoll(const ElectionDataset& ds, const BatteryConfig& config, BatteryReport& report,
                  std::vector<TestResult>& out) {
  run_guarded(out, "exitpoll_aggregate", "polling", [&] {
    auto results = polling::exitpoll_test(ds, config.exitpoll_direction, "", config.min_poll_sample);
    if (results.empty()) throw std::invalid_argument("no poll samples at or above the size floor");
    auto agg = polling::aggregate_poll_pvalues(results, config.exitpoll_aggregate,
                                               config.exitpoll_tau);
    TestResult tr;
    tr.name = "exitpoll_aggregate";
    tr.module = "polling";
    if (agg.method == polling::AggregateMethod::fisher) {
      tr.statistic_name = "fisher_combination";
      tr.statistic = agg.fisher_statistic;
      tr.p_value = agg.fisher_p;
    } else {
      tr.statistic_name = "fraction_below_tau";
      tr.statistic = agg.fraction_below;
      tr.p_value = agg.binomial_p;
    }
    tr.caveats = agg.caveats;
    tr.details = ordered_json{{"samples", agg.n},
                              {"direction", polling::to_string(config.exitpoll_direction)},
                              {"tau", agg.tau},
                              {"count_below", agg.count_below},
                              {"fisher_df", agg.fisher_df}};
    out.push_back(std::move(tr));

    // Plot rows carry one pooled poll p-value per center.
    for (size_t i = 0; i < ds.centers.size() && i < report.plot_rows.size(); ++i) {
      int64_t m = 0, k = 0;
      for (size_t pi : ds.polls_by_center[i]) {
        m += ds.polls[pi].sample_size;
        k += ds.polls[pi].yes_responses;
      }
      if (m < 1) continue;
      report.plot_rows[i].exitpoll_p = polling::binomial_tail_pvalue(
          k, m, ds.official_yes_share, config.exitpoll_direction);
    }
  });
}

void run_association(const ElectionDataset& ds, const BatteryConfig& config, uint64_t seed,
                     std::vector<TestResult>& out) {
  run_guarded(out, "association_signature", "association", [&] {
    auto groups = association::signature_share_correlation(ds, config.grouping, config.reps, seed);
    for (const auto& g : groups) {
      TestResult tr;
      tr.name = "association_signature:" + g.group;
      tr.module = "association";
      if (!g.testable) {
        tr.skipped = true;
        tr.skip_reason = g.note;
        out.push_back(std::move(tr));
        continue;
      }
      tr.statistic_name = "pearson_r";
      tr.statistic = g.r;
      tr.p_value = g.perm_p;
      tr.reps = g.reps;
      tr.seed = seed;
      tr.details = ordered_json{{"n", g.n}, {"fisher_z_p", g.fisher_z_p}};
      out.push_back(std::move(tr));
    }
  });
}

void run_residuals(const ElectionDataset& ds, const BatteryConfig& config, uint64_t seed,
                   std::vector<TestResult>& out) {
  run_guarded(out, "residual_correlation", "association", [&] {
    auto res = association::residual_correlation_test(ds, config.reps, seed);
    TestResult tr;
    tr.name = "residual_correlation";
    tr.module = "association";
    if (!res.testable) {
      tr.skipped = true;
      tr.skip_reason = res.note;
      out.push_back(std::move(tr));
      return;
    }
    tr.statistic_name = "pearson_r";
    tr.statistic = res.r;
    tr.p_value = res.perm_p;
    tr.reps = res.reps;
    tr.seed = seed;
    tr.details = ordered_json{{"n", res.n},
                              {"fisher_z_p", res.fisher_z_p},
                              {"slope_signature_on_recorded", res.slope_a},
                              {"slope_poll_on_recorded", res.slope_b}};
    out.push_back(std::move(tr));
  });
}

void run_metadata(const ElectionDataset& ds, const BatteryConfig& config, uint64_t seed,
                  std::vector<TestResult>& out) {
  run_guarded(out, "metadata_class_compare", "metadata", [&] {
    auto cmp = metadata::traffic_class_compare(ds, config.measure, config.metadata_auto_classify);
    double min_p = 2.0;
    int64_t testable = 0;
    ordered_json pairs = ordered_json::array();
    for (const auto& p : cmp.pairs) {
      ordered_json row{{"class_a", to_string(p.class_a)}, {"class_b", to_string(p.class_b)},
                       {"n_a", p.n_a},                    {"n_b", p.n_b},
                       {"median_a", p.median_a},          {"median_b", p.median_b}};
      if (p.testable) {
        ++testable;
        min_p = std::min(min_p, p.p_value);
        row["u"] = p.u_statistic;
        row["p_value"] = p.p_value;
        row["exact"] = p.exact;
      } else {
        row["untestable"] = p.note;
      }
      pairs.push_back(std::move(row));
    }
    if (testable == 0) throw std::invalid_argument("all class pairs below the size floor");
    TestResult tr;
    tr.name = "metadata_class_compare";
    tr.module = "metadata";
    tr.statistic_name = "min_pairwise_p";
    tr.statistic = min_p;
    tr.p_value = min_p;
    tr.caveats = cmp.caveats;
    tr.details = ordered_json{{"measure", to_string(cmp.measure)},
                              {"derived_classes", cmp.derived_classes},
                              {"pairs", pairs}};
    out.push_back(std::move(tr));
  });

  run_guarded(out, "metadata_bytes_votes", "metadata", [&] {
    auto res = metadata::bytes_vs_votes_test(ds, config.measure, config.reps, seed);
    TestResult tr;
    tr.name = "metadata_bytes_votes";
    tr.module = "metadata";
    tr.statistic_name = "ols_slope";
    tr.statistic = res.slope;
    tr.p_value = res.perm_p;
    tr.reps = res.reps;
    tr.seed = seed;
    tr.caveats = res.caveats;
    tr.details = ordered_json{{"measure", to_string(res.measure)},
                              {"n", res.n},
                              {"intercept", res.intercept},
                              {"t_stat", res.t_stat},
                              {"analytic_p", res.analytic_p}};
    out.push_back(std::move(tr));
  });
}

}  // namespace

BatteryReport run_battery(const ElectionDataset& ds, const BatteryConfig& config,
                          uint64_t master_seed) {
  if (config.tests.empty()) throw std::invalid_argument("battery config selects no tests");
  for (const auto& t : config.tests)
    if (!known_tests().count(t)) throw std::invalid_argument("unknown battery test: " + t);
  ensure_valid(ds);

  BatteryReport report;
  report.dataset_label = ds.label;
  report.fingerprint = fingerprint(ds);
  report.master_seed = master_seed;
  report.thresholds = config.thresholds;

  for (size_t i = 0; i < ds.centers.size(); ++i) {
    const auto& c = ds.centers[i];
    PlotRow row;
    row.center_id = c.center_id;
    int64_t ballots = ds.center_ballots(i);
    if (ballots > 0) row.yes_share = double(ds.center_yes(i)) / double(ballots);
    if (c.registered > 0) row.signature_share = double(c.signatures) / double(c.registered);
    int64_t m = 0, k = 0;
    for (size_t pi : ds.polls_by_center[i]) {
      m += ds.polls[pi].sample_size;
      k += ds.polls[pi].yes_responses;
    }
    if (m > 0) row.poll_share = double(k) / double(m);
    report.plot_rows.push_back(std::move(row));
  }

  for (const auto& test : config.tests) {
    uint64_t seed = substream(master_seed, test);
    if (test == "DIGITS") run_digits(ds, report.tests);
    else if (test == "PERMUTATION") run_permutation(ds, config, seed, report, report.tests);
    else if (test == "EXITPOLL") run_exitpoll(ds, config, report, report.tests);
    else if (test == "ASSOCIATION") run_association(ds, config, seed, report.tests);
    else if (test == "RESIDUALS") run_residuals(ds, config, seed, report.tests);
    else if (test == "METADATA") run_metadata(ds, config, seed, report.tests);
  }
  return report;
}

namespace {

ordered_json report_json(const BatteryReport& report) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["dataset"] = ordered_json{{"label", report.dataset_label},
                              {"fingerprint", report.fingerprint}};
  j["master_seed"] = report.master_seed;
  j["seed_derivation"] = "per-test seed = mix64(master_seed XOR fnv1a64(test_name))";
  ordered_json tests = ordered_json::array();
  for (const auto& t : report.tests) {
    ordered_json e;
    e["name"] = t.name;
    e["module"] = t.module;
    e["skipped"] = t.skipped;
    if (t.skipped) {
      e["skip_reason"] = t.skip_reason;
    } else {
      e["statistic_name"] = t.statistic_name;
      e["statistic"] = t.statistic;
      if (t.p_value) e["p_value"] = *t.p_value;
      if (t.log_bayes_factor) e["log_bayes_factor"] = *t.log_bayes_factor;
      if (t.reps) e["reps"] = *t.reps;
      if (t.seed) e["seed"] = *t.seed;
      e["caveats"] = t.caveats;
      if (!t.details.is_null()) e["details"] = t.details;
    }
    tests.push_back(std::move(e));
  }
  j["tests"] = std::move(tests);
  ordered_json summary = ordered_json::array();
  for (double threshold : report.thresholds) {
    ordered_json names = ordered_json::array();
    for (const auto& t : report.tests)
      if (!t.skipped && t.p_value && *t.p_value < threshold) names.push_back(t.name);
    summary.push_back(ordered_json{{"threshold", threshold},
                                   {"tests_below", names.size()},
                                   {"names", std::move(names)}});
  }
  j["summary"] = std::move(summary);
  return j;
}

std::string report_text(const BatteryReport& report) {
  std::ostringstream os;
  os << "battery report\n";
  os << "dataset: " << report.dataset_label << "\n";
  os << "fingerprint: " << report.fingerprint << "\n";
  os << "master seed: " << report.master_seed << "\n";
  if (report.tests.empty()) {
    os << "no tests run\n";
    return os.str();
  }
  os << "\ntests:\n";
  for (const auto& t : report.tests) {
    os << "  " << t.name;
    if (t.skipped) {
      os << "  skipped: " << t.skip_reason;
    } else {
      os << "  " << t.statistic_name << "=" << format_double(t.statistic);
      if (t.p_value) os << "  p=" << format_double(*t.p_value);
      if (t.log_bayes_factor) os << "  logBF=" << format_double(*t.log_bayes_factor);
    }
    os << "  [" << format_double(t.elapsed_ms) << " ms]\n";
    for (const auto& c : t.caveats) os << "      caveat: " << c << "\n";
  }
  os << "\nsummary:\n";
  for (double threshold : report.thresholds) {
    int64_t below = 0, eligible = 0;
    for (const auto& t : report.tests) {
      if (t.skipped || !t.p_value) continue;
      ++eligible;
      if (*t.p_value < threshold) ++below;
    }
    os << "  p < " << format_double(threshold) << ": " << below << " of " << eligible
       << " tests\n";
  }
  return os.str();
}

std::string report_plot_csv(const BatteryReport& report) {
  std::ostringstream os;
  os << "center_id,yes_share,signature_share,poll_share,permutation_p,exitpoll_p\n";
  auto cell = [&](const std::optional<double>& v) {
    if (v) os << format_double(*v);
  };
  for (const auto& row : report.plot_rows) {
    os << row.center_id << ",";
    cell(row.yes_share);
    os << ",";
    cell(row.signature_share);
    os << ",";
    cell(row.poll_share);
    os << ",";
    cell(row.permutation_p);
    os << ",";
    cell(row.exitpoll_p);
    os << "\n";
  }
  return os.str();
}

}  // namespace

std::string render_report(const BatteryReport& report, Format format) {
  switch (format) {
    case Format::json: return report_json(report).dump(2) + "\n";
    case Format::text_summary: return report_text(report);
    case Format::plot_data_csv: return report_plot_csv(report);
  }
  throw std::invalid_argument("unknown report format");
}

}  // namespace forensics::report
