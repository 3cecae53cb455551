#pragma once

// Battery orchestration and reporting. A master seed fans out to per-test
// seeds by a keyed hash of the test name, so adding a test never perturbs the
// others. Reports carry statistics, p-values, and caveats; they never carry a
// verdict. JSON output is byte-deterministic given (dataset, config, seed);
// wall-clock timings appear only in the text rendering.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forensics/association.hpp"
#include "forensics/dataset.hpp"
#include "forensics/kv.hpp"
#include "forensics/metadata.hpp"
#include "forensics/polling.hpp"

namespace forensics::report {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

struct BatteryConfig {
  // Canonical test names, executed in the order given:
  // DIGITS, PERMUTATION, EXITPOLL, ASSOCIATION, RESIDUALS, METADATA
  std::vector<std::string> tests;
  int64_t reps = 999;
  std::vector<double> thresholds = {0.05, 0.01};
  polling::Tail exitpoll_direction = polling::Tail::two_sided;
  polling::AggregateMethod exitpoll_aggregate = polling::AggregateMethod::fisher;
  double exitpoll_tau = 0.05;
  int64_t min_poll_sample = 1;
  association::GroupingSpec grouping;
  metadata::Measure measure = metadata::Measure::bytes_out;
  bool metadata_auto_classify = false;
};

BatteryConfig battery_config_from_doc(const kv::Document& doc);
BatteryConfig load_battery_config(const std::string& path);

struct TestResult {
  std::string name;
  std::string module;
  std::string statistic_name;
  double statistic = 0.0;
  std::optional<double> p_value;
  std::optional<double> log_bayes_factor;
  std::optional<int64_t> reps;
  std::optional<uint64_t> seed;
  std::vector<std::string> caveats;
  bool skipped = false;
  std::string skip_reason;
  nlohmann::ordered_json details;  // per-test structure, serialized verbatim
  double elapsed_ms = 0.0;         // text rendering only, never in JSON
};

struct PlotRow {
  std::string center_id;
  std::optional<double> yes_share;
  std::optional<double> signature_share;
  std::optional<double> poll_share;
  std::optional<double> permutation_p;
  std::optional<double> exitpoll_p;
};

struct BatteryReport {
  std::string dataset_label;
  std::string fingerprint;
  uint64_t master_seed = 0;
  std::vector<TestResult> tests;
  std::vector<double> thresholds;
  std::vector<PlotRow> plot_rows;
};

// Runs the selected tests with seed = substream(master_seed, test name).
// Untestable situations become structured skips; only dataset validation
// failures and config errors abort.
BatteryReport run_battery(const ElectionDataset& ds, const BatteryConfig& config,
                          uint64_t master_seed);

enum class Format { json, text_summary, plot_data_csv };

Format format_from_string(const std::string& s);

std::string render_report(const BatteryReport& report, Format format);

}  // namespace forensics::report
