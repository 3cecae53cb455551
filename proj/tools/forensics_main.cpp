#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forensics/association.hpp"
#include "forensics/audit.hpp"
#include "forensics/csv.hpp"
#include "forensics/dataset.hpp"
#include "forensics/digits.hpp"
#include "forensics/kv.hpp"
#include "forensics/metadata.hpp"
#include "forensics/permutation.hpp"
#include "forensics/polling.hpp"
#include "forensics/report.hpp"
#include "forensics/synth.hpp"

namespace {

using forensics::ElectionDataset;
using nlohmann::ordered_json;

// Usage mistakes exit 1; anything the data causes exits 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

forensics::association::GroupingSpec parse_grouping(const std::string& s) {
  forensics::association::GroupingSpec g;
  if (s == "none") {
    g.kind = forensics::association::GroupingKind::none;
  } else if (s == "comp-manual") {
    g.kind = forensics::association::GroupingKind::computerized_manual;
  } else if (s.rfind("sig-split", 0) == 0) {
    g.kind = forensics::association::GroupingKind::signature_split;
    if (s.size() > 9) {
      if (s[9] != ':') throw UsageError("bad grouping syntax: " + s);
      g.threshold = std::stod(s.substr(10));
    }
  } else if (s.rfind("size-q", 0) == 0) {
    g.kind = forensics::association::GroupingKind::size_quantiles;
    if (s.size() <= 7 || s[6] != ':') throw UsageError("size-q grouping needs :k, got " + s);
    g.quantiles = std::stoi(s.substr(7));
  } else {
    throw UsageError("unknown grouping: " + s);
  }
  return g;
}

forensics::metadata::Measure parse_measure(const std::string& s) {
  using forensics::metadata::Measure;
  if (s == "bytes-out") return Measure::bytes_out;
  if (s == "bytes-in") return Measure::bytes_in;
  if (s == "packets-out") return Measure::packets_out;
  if (s == "bytes-per-session") return Measure::bytes_per_session;
  throw UsageError("unknown measure: " + s);
}

forensics::polling::Tail parse_direction(const std::string& s) {
  using forensics::polling::Tail;
  if (s == "ge") return Tail::ge;
  if (s == "le") return Tail::le;
  if (s == "two") return Tail::two_sided;
  throw UsageError("unknown direction: " + s);
}

forensics::permutation::DispersionStat parse_stat(const std::string& s) {
  using forensics::permutation::DispersionStat;
  if (s == "yes-var") return DispersionStat::yes_share_variance;
  if (s == "max-dev") return DispersionStat::max_abs_share_deviation;
  if (s == "out-var") return DispersionStat::out_share_variance;
  throw UsageError("unknown statistic: " + s);
}

std::vector<double> parse_thresholds(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    double t = std::stod(part);
    if (!(t > 0.0) || t >= 1.0) throw UsageError("thresholds must be in (0, 1)");
    out.push_back(t);
  }
  if (out.empty()) throw UsageError("no thresholds given");
  return out;
}

std::vector<std::string> read_id_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    size_t start = line.find_first_not_of(' ');
    if (start == std::string::npos) continue;
    line = line.substr(start);
    if (line.empty() || line[0] == '#') continue;
    ids.push_back(line);
  }
  return ids;
}

std::string dataset_dir_of(const std::string& input) {
  if (input.size() > 5 && input.substr(input.size() - 5) == ".toml") {
    size_t slash = input.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : input.substr(0, slash);
  }
  return input;
}

ordered_json correlation_json(const forensics::association::CorrelationResult& g) {
  ordered_json j;
  j["group"] = g.group;
  j["n"] = g.n;
  if (g.testable) {
    j["r"] = g.r;
    j["fisher_z_p"] = g.fisher_z_p;
    j["perm_p"] = g.perm_p;
    j["reps"] = g.reps;
  } else {
    j["untestable"] = g.note;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"post-election forensics toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  // ingest
  {
    auto dir = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto* cmd = app.add_subcommand("ingest", "load, validate, and canonically re-emit a dataset");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        forensics::ensure_valid(ds);
        forensics::emit_dataset(ds, *out);
        emit(ordered_json{{"label", ds.label},
                          {"fingerprint", forensics::fingerprint(ds)},
                          {"official_yes_share", ds.official_yes_share},
                          {"official_share_source", ds.official_share_source},
                          {"centers", ds.centers.size()},
                          {"machines", ds.machines.size()},
                          {"polls", ds.polls.size()},
                          {"transmissions", ds.transmissions.size()}});
        return 0;
      };
    });
  }

  // validate
  {
    auto dir = std::make_shared<std::string>();
    auto* cmd = app.add_subcommand("validate", "report structural violations in a dataset");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto report = forensics::validate(ds);
        ordered_json j;
        j["label"] = ds.label;
        j["violations"] = ordered_json::array();
        for (const auto& v : report.violations)
          j["violations"].push_back(
              ordered_json{{"entity", v.entity}, {"id", v.id}, {"message", v.message}});
        j["ok"] = report.ok();
        emit(j);
        return report.ok() ? 0 : 2;
      };
    });
  }

  auto* test = app.add_subcommand("test", "run one detector");
  test->require_subcommand(1);

  // test digits
  {
    auto dir = std::make_shared<std::string>();
    auto position = std::make_shared<int>(1);
    auto source = std::make_shared<std::string>("machine-yes");
    auto cap = std::make_shared<int64_t>(0);
    auto model = std::make_shared<std::string>("uniform");
    auto binom_p = std::make_shared<double>(0.5);
    auto reps = std::make_shared<int64_t>(10000);
    auto seed = std::make_shared<uint64_t>(0);
    auto* cmd = test->add_subcommand("digits", "significant-digit law test");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--position", *position, "digit position")->check(CLI::IsMember({1, 2}));
    cmd->add_option("--source", *source, "which machine count to test")
        ->check(CLI::IsMember({"machine-yes", "machine-no", "machine-nu"}));
    cmd->add_option("--bounded-cap", *cap, "test against a bounded-count reference with this cap");
    cmd->add_option("--model", *model, "bounded reference model")
        ->check(CLI::IsMember({"uniform", "binomial"}));
    cmd->add_option("--binom-p", *binom_p, "binomial model success probability");
    cmd->add_option("--reps", *reps, "bounded reference Monte Carlo replicates");
    cmd->add_option("--seed", *seed, "random seed");
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        std::vector<int64_t> values;
        for (const auto& m : ds.machines)
          values.push_back(*source == "machine-yes" ? m.yes
                           : *source == "machine-no" ? m.no
                                                     : m.nu);
        auto observed = forensics::digits::digit_histogram(values, *position);
        forensics::digits::DigitDistribution expected;
        ordered_json bounded;
        if (*cap > 0) {
          if (*position != 2)
            throw UsageError("bounded reference distributions are defined for --position 2");
          auto m = *model == "uniform" ? forensics::digits::BoundedModel::uniform_0_cap
                                       : forensics::digits::BoundedModel::binomial;
          expected = forensics::digits::bounded_reference_pmf(*cap, m, *binom_p, *reps, *seed);
          bounded = ordered_json{
              {"cap", *cap}, {"model", to_string(m)}, {"reps", *reps}, {"seed", *seed}};
          if (m == forensics::digits::BoundedModel::binomial) bounded["binom_p"] = *binom_p;
        } else {
          expected = forensics::digits::reference_digit_law(*position);
        }
        auto result = forensics::digits::digit_test(observed, expected);
        ordered_json j;
        j["test"] = "digits";
        j["position"] = *position;
        j["source"] = *source;
        if (!bounded.is_null()) j["bounded_reference"] = bounded;
        j["chi_square"] = result.chi_square;
        j["df"] = result.df;
        j["p_value"] = result.p_value;
        j["log_bayes_factor"] = result.log_bayes_factor;
        j["bayes_factor_method"] = "BIC";
        j["sample_size"] = result.sample_size;
        j["dropped"] = observed.dropped;
        j["low_information"] = result.low_information;
        emit(j);
        return 0;
      };
    });
  }

  // test permutation
  {
    auto dir = std::make_shared<std::string>();
    auto stat = std::make_shared<std::string>("yes-var");
    auto reps = std::make_shared<int64_t>(999);
    auto seed = std::make_shared<uint64_t>();
    auto thresholds = std::make_shared<std::string>("0.05,0.01");
    auto* cmd = test->add_subcommand("permutation", "within-center dispersion permutation test");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--stat", *stat, "dispersion statistic")
        ->check(CLI::IsMember({"yes-var", "max-dev", "out-var"}));
    cmd->add_option("--reps", *reps, "replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", *seed, "random seed")->required();
    cmd->add_option("--alpha-thresholds", *thresholds, "comma-separated summary thresholds");
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto outcome = forensics::permutation::permutation_test(
            ds, parse_stat(*stat), *reps, *seed, parse_thresholds(*thresholds));
        ordered_json j;
        j["test"] = "permutation";
        j["stat"] = to_string(outcome.stat);
        j["reps"] = outcome.reps;
        j["seed"] = outcome.seed;
        j["centers"] = ordered_json::array();
        for (const auto& c : outcome.centers)
          j["centers"].push_back(ordered_json{{"center_id", c.center_id},
                                              {"machines", c.machines},
                                              {"ballots", c.ballots},
                                              {"observed", c.observed},
                                              {"p_value", c.p_value}});
        ordered_json below = ordered_json::array();
        for (size_t i = 0; i < outcome.summary.thresholds.size(); ++i)
          below.push_back(ordered_json{{"threshold", outcome.summary.thresholds[i]},
                                       {"centers", outcome.summary.counts_below[i]}});
        j["summary"] = ordered_json{{"centers_tested", outcome.summary.centers_tested},
                                    {"centers_excluded", outcome.summary.centers_excluded},
                                    {"counts_below", below},
                                    {"fisher_statistic", outcome.summary.fisher_statistic},
                                    {"fisher_df", outcome.summary.fisher_df},
                                    {"fisher_p", outcome.summary.fisher_p},
                                    {"assumption", outcome.summary.assumption}};
        emit(j);
        return 0;
      };
    });
  }

  // test exitpoll
  {
    auto dir = std::make_shared<std::string>();
    auto direction = std::make_shared<std::string>("two");
    auto tau = std::make_shared<double>(0.02);
    auto pollster = std::make_shared<std::string>();
    auto min_sample = std::make_shared<int64_t>(0);
    auto* cmd = test->add_subcommand("exitpoll", "exact binomial poll consistency test");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--direction", *direction, "tail direction")
        ->check(CLI::IsMember({"ge", "le", "two"}));
    cmd->add_option("--tau", *tau, "small p-value threshold for the count aggregate");
    cmd->add_option("--pollster", *pollster, "restrict to one pollster");
    cmd->add_option("--min-sample", *min_sample, "drop samples below this size");
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto results =
            forensics::polling::exitpoll_test(ds, parse_direction(*direction), *pollster,
                                              *min_sample);
        ordered_json j;
        j["test"] = "exitpoll";
        j["direction"] = to_string(parse_direction(*direction));
        j["official_yes_share"] = ds.official_yes_share;
        j["official_share_source"] = ds.official_share_source;
        j["centers"] = ordered_json::array();
        for (const auto& r : results)
          j["centers"].push_back(ordered_json{{"center_id", r.center_id},
                                              {"pollster", r.pollster},
                                              {"sample_size", r.sample_size},
                                              {"yes_responses", r.yes_responses},
                                              {"p_value", r.p_value},
                                              {"small_sample", r.small_sample}});
        if (!results.empty()) {
          auto count = forensics::polling::aggregate_poll_pvalues(
              results, forensics::polling::AggregateMethod::count_below, *tau);
          auto fisher = forensics::polling::aggregate_poll_pvalues(
              results, forensics::polling::AggregateMethod::fisher, *tau);
          j["aggregate"] = ordered_json{
              {"samples", count.n},
              {"tau", count.tau},
              {"count_below", count.count_below},
              {"fraction_below", count.fraction_below},
              {"binomial_p", count.binomial_p},
              {"fisher_statistic", fisher.fisher_statistic},
              {"fisher_df", fisher.fisher_df},
              {"fisher_p", fisher.fisher_p},
              {"caveats", count.caveats}};
        }
        emit(j);
        return 0;
      };
    });
  }

  // test association
  {
    auto dir = std::make_shared<std::string>();
    auto grouping = std::make_shared<std::string>("none");
    auto reps = std::make_shared<int64_t>(999);
    auto seed = std::make_shared<uint64_t>();
    auto* cmd = test->add_subcommand("association", "signature share vs YES share correlation");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--grouping", *grouping,
                    "none | sig-split[:t] | comp-manual | size-q:k");
    cmd->add_option("--reps", *reps, "permutation replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", *seed, "random seed")->required();
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto groups = forensics::association::signature_share_correlation(
            ds, parse_grouping(*grouping), *reps, *seed);
        ordered_json j;
        j["test"] = "association";
        j["grouping"] = to_string(parse_grouping(*grouping).kind);
        j["seed"] = *seed;
        j["groups"] = ordered_json::array();
        for (const auto& g : groups) j["groups"].push_back(correlation_json(g));
        emit(j);
        return 0;
      };
    });
  }

  // test residuals
  {
    auto dir = std::make_shared<std::string>();
    auto reps = std::make_shared<int64_t>(999);
    auto seed = std::make_shared<uint64_t>();
    auto* cmd = test->add_subcommand("residuals", "correlation of intent-measurement residuals");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--reps", *reps, "permutation replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", *seed, "random seed")->required();
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto res = forensics::association::residual_correlation_test(ds, *reps, *seed);
        ordered_json j;
        j["test"] = "residuals";
        j["n"] = res.n;
        j["seed"] = *seed;
        if (res.testable) {
          j["slope_signature_on_recorded"] = res.slope_a;
          j["slope_poll_on_recorded"] = res.slope_b;
          j["r"] = res.r;
          j["fisher_z_p"] = res.fisher_z_p;
          j["perm_p"] = res.perm_p;
          j["reps"] = res.reps;
        } else {
          j["untestable"] = res.note;
        }
        emit(j);
        return 0;
      };
    });
  }

  // test cross-election
  {
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto grouping = std::make_shared<std::string>("none");
    auto reps = std::make_shared<int64_t>(999);
    auto seed = std::make_shared<uint64_t>();
    auto flag_threshold = std::make_shared<double>(0.8);
    auto* cmd = test->add_subcommand("cross-election",
                                     "signature correlation across elections on shared centers");
    cmd->add_option("--inputs", *inputs, "dataset directories or dataset.toml paths")
        ->required()
        ->delimiter(',');
    cmd->add_option("--grouping", *grouping, "none | sig-split[:t] | comp-manual | size-q:k");
    cmd->add_option("--reps", *reps, "permutation replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", *seed, "random seed")->required();
    cmd->add_option("--flag-threshold", *flag_threshold, "|r| flag level across groups");
    cmd->callback([=, &action] {
      action = [=] {
        std::vector<ElectionDataset> datasets;
        for (const auto& input : *inputs)
          datasets.push_back(forensics::load_dataset_dir(dataset_dir_of(input)));
        auto res = forensics::association::cross_election_correlation(
            datasets, parse_grouping(*grouping), *reps, *seed, *flag_threshold);
        ordered_json j;
        j["test"] = "cross-election";
        j["shared_centers"] = res.shared_centers;
        j["flag_threshold"] = res.flag_threshold;
        j["seed"] = *seed;
        j["elections"] = ordered_json::array();
        for (const auto& e : res.elections) {
          ordered_json ej;
          ej["label"] = e.label;
          ej["high_correlation_in_all_groups"] = e.high_correlation_in_all_groups;
          ej["groups"] = ordered_json::array();
          for (const auto& g : e.groups) ej["groups"].push_back(correlation_json(g));
          j["elections"].push_back(std::move(ej));
        }
        emit(j);
        return 0;
      };
    });
  }

  // test metadata
  {
    auto dir = std::make_shared<std::string>();
    auto measure = std::make_shared<std::string>("bytes-out");
    auto reps = std::make_shared<int64_t>(999);
    auto seed = std::make_shared<uint64_t>();
    auto auto_classify = std::make_shared<std::string>();
    auto* cmd = test->add_subcommand("metadata", "transmission traffic association tests");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--measure", *measure, "traffic measure")
        ->check(CLI::IsMember({"bytes-out", "bytes-in", "packets-out", "bytes-per-session"}));
    cmd->add_option("--reps", *reps, "permutation replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", *seed, "random seed")->required();
    cmd->add_option("--auto-classify", *auto_classify,
                    "derive traffic classes from the measure (value: terciles)")
        ->check(CLI::IsMember({"terciles"}));
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto m = parse_measure(*measure);
        bool auto_terciles = *auto_classify == "terciles";
        ordered_json j;
        j["test"] = "metadata";
        j["measure"] = to_string(m);
        try {
          auto cmp = forensics::metadata::traffic_class_compare(ds, m, auto_terciles);
          ordered_json pairs = ordered_json::array();
          for (const auto& p : cmp.pairs) {
            ordered_json pj;
            pj["class_a"] = to_string(p.class_a);
            pj["class_b"] = to_string(p.class_b);
            pj["n_a"] = p.n_a;
            pj["n_b"] = p.n_b;
            pj["median_a"] = p.median_a;
            pj["median_b"] = p.median_b;
            if (p.testable) {
              pj["u"] = p.u_statistic;
              pj["p_value"] = p.p_value;
              pj["exact"] = p.exact;
            } else {
              pj["untestable"] = p.note;
            }
            pairs.push_back(std::move(pj));
          }
          j["class_compare"] = ordered_json{{"derived_classes", cmp.derived_classes},
                                            {"pairs", std::move(pairs)},
                                            {"caveats", cmp.caveats}};
        } catch (const std::exception& e) {
          j["class_compare"] = ordered_json{{"skipped", e.what()}};
        }
        try {
          auto res = forensics::metadata::bytes_vs_votes_test(ds, m, *reps, *seed);
          j["bytes_votes"] = ordered_json{{"n", res.n},
                                          {"slope", res.slope},
                                          {"intercept", res.intercept},
                                          {"t_stat", res.t_stat},
                                          {"analytic_p", res.analytic_p},
                                          {"perm_p", res.perm_p},
                                          {"reps", res.reps},
                                          {"seed", *seed},
                                          {"caveats", res.caveats}};
        } catch (const std::exception& e) {
          j["bytes_votes"] = ordered_json{{"skipped", e.what()}};
        }
        emit(j);
        return 0;
      };
    });
  }

  auto* audit = app.add_subcommand("audit", "audit planning and sample checks");
  audit->require_subcommand(1);

  // audit plan
  {
    auto margin = std::make_shared<int64_t>();
    auto ballots_file = std::make_shared<std::string>();
    auto lambda = std::make_shared<double>(1.0);
    auto confidence = std::make_shared<double>(0.9);
    auto* cmd = audit->add_subcommand("plan", "minimal sample size for an outcome audit");
    cmd->add_option("--margin", *margin, "margin of victory in votes")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--ballots-file", *ballots_file, "CSV with header precinct_id,ballots")
        ->required();
    cmd->add_option("--lambda", *lambda, "per-precinct shift factor in (0, 1]");
    cmd->add_option("--confidence", *confidence, "detection confidence target");
    cmd->callback([=, &action] {
      action = [=] {
        auto table = forensics::csv::read_table(*ballots_file);
        if (table.header != std::vector<std::string>{"precinct_id", "ballots"})
          throw std::runtime_error(*ballots_file + ": expected header precinct_id,ballots");
        std::vector<int64_t> ballots;
        for (size_t r = 0; r < table.rows.size(); ++r)
          ballots.push_back(forensics::csv::to_int64(
              table.rows[r][1],
              *ballots_file + ":" + std::to_string(table.line_numbers[r])));
        auto plan = forensics::audit::plan_audit(*margin, ballots, *lambda, *confidence);
        ordered_json j;
        j["precincts"] = plan.precincts;
        j["margin_votes"] = plan.margin_votes;
        j["lambda"] = plan.lambda;
        j["confidence"] = plan.confidence;
        j["audit_unnecessary"] = plan.audit_unnecessary;
        if (!plan.audit_unnecessary) {
          j["min_flip"] = plan.min_flip;
          j["sample_size"] = plan.sample_size;
          j["detection"] = plan.detection;
        }
        emit(j);
        return 0;
      };
    });
  }

  // audit randomness
  {
    auto dir = std::make_shared<std::string>();
    auto audited_file = std::make_shared<std::string>();
    auto covariates = std::make_shared<std::vector<std::string>>(
        std::vector<std::string>{"size", "computerized", "region", "yes-share"});
    auto reps = std::make_shared<int64_t>(999);
    auto seed = std::make_shared<uint64_t>();
    auto* cmd = audit->add_subcommand("randomness",
                                      "was the audited subset drawn at random from all centers");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--audited", *audited_file, "file with one audited center_id per line")
        ->required();
    cmd->add_option("--covariates", *covariates, "covariates to test")
        ->delimiter(',')
        ->check(CLI::IsMember({"size", "computerized", "region", "yes-share"}));
    cmd->add_option("--reps", *reps, "random subsets to draw")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", *seed, "random seed")->required();
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto ids = read_id_lines(*audited_file);
        std::vector<forensics::audit::Covariate> covs;
        for (const auto& c : *covariates) {
          using forensics::audit::Covariate;
          covs.push_back(c == "size"           ? Covariate::size
                         : c == "computerized" ? Covariate::computerized
                         : c == "region"       ? Covariate::region
                                               : Covariate::yes_share);
        }
        auto results = forensics::audit::sample_randomness_check(ds, ids, covs, *reps, *seed);
        ordered_json j = ordered_json::array();
        for (const auto& r : results) {
          ordered_json rj;
          rj["covariate"] = to_string(r.covariate);
          rj["categorical"] = r.categorical;
          rj["n_audited"] = r.n_audited;
          rj["n_population"] = r.n_population;
          if (r.testable) {
            rj["observed"] = r.observed;
            rj["p_value"] = r.p_value;
            rj["reps"] = r.reps;
          } else {
            rj["untestable"] = r.note;
          }
          j.push_back(std::move(rj));
        }
        emit(j);
        return 0;
      };
    });
  }

  // simulate
  {
    auto config_path = std::make_shared<std::string>();
    auto fraud_path = std::make_shared<std::string>();
    auto seed = std::make_shared<int64_t>(-1);
    auto out = std::make_shared<std::string>();
    auto* cmd = app.add_subcommand("simulate", "generate a synthetic election dataset");
    cmd->add_option("--config", *config_path, "synthesis config file")->required();
    cmd->add_option("--fraud", *fraud_path, "fraud scheme file");
    cmd->add_option("--seed", *seed, "random seed (overrides the config seed)");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->callback([=, &action] {
      action = [=] {
        auto config = forensics::synth::load_synth_config(*config_path);
        uint64_t s = *seed >= 0 ? uint64_t(*seed) : config.seed;
        auto ds = forensics::synth::generate(config, s);
        forensics::synth::FraudManifest manifest{"NONE", "ALL", {}, {}};
        if (!fraud_path->empty()) {
          auto scheme = forensics::synth::load_fraud_scheme(*fraud_path);
          auto [tampered, m] = forensics::synth::inject_fraud(ds, scheme, s);
          ds = std::move(tampered);
          manifest = std::move(m);
        }
        forensics::emit_dataset(ds, *out);
        std::ofstream mf(*out + "/manifest.json");
        if (!mf) throw std::runtime_error("cannot write " + *out + "/manifest.json");
        mf << forensics::synth::manifest_json(manifest);
        emit(ordered_json{{"label", ds.label},
                          {"fingerprint", forensics::fingerprint(ds)},
                          {"seed", s},
                          {"centers", ds.centers.size()},
                          {"machines", ds.machines.size()},
                          {"scheme", manifest.scheme},
                          {"affected_centers", manifest.affected_centers.size()}});
        return 0;
      };
    });
  }

  // battery
  {
    auto dir = std::make_shared<std::string>();
    auto config_path = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>();
    auto format = std::make_shared<std::string>("json");
    auto* cmd = app.add_subcommand("battery", "run a configured battery of detectors");
    cmd->add_option("--dir", *dir, "dataset directory")->required();
    cmd->add_option("--config", *config_path, "battery config file")->required();
    cmd->add_option("--seed", *seed, "master seed")->required();
    cmd->add_option("--format", *format, "output format")
        ->check(CLI::IsMember({"json", "text", "plotcsv"}));
    cmd->callback([=, &action] {
      action = [=] {
        auto ds = forensics::load_dataset_dir(*dir);
        auto config = forensics::report::load_battery_config(*config_path);
        auto rep = forensics::report::run_battery(ds, config, *seed);
        std::cout << forensics::report::render_report(
            rep, forensics::report::format_from_string(*format));
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (!action) return 1;
  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
