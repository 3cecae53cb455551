#pragma once

// Core election dataset: voting centers, per-machine tallies, exit poll
// samples, and transmission metadata, joined by center id. Loading is strict:
// malformed rows, duplicate keys, and unresolved foreign keys are errors that
// name the file and line. validate() re-checks every invariant on an
// in-memory dataset and returns a report instead of throwing.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace forensics {

struct VotingCenter {
  std::string center_id;
  std::string region;
  bool computerized = false;
  int64_t registered = 0;   // eligible voters
  int64_t signatures = 0;   // recall petition signers, <= registered
};

struct MachineTally {
  std::string center_id;
  std::string machine_id;
  int64_t nu = 0;    // ballots cast on this machine
  int64_t yes = 0;
  int64_t no = 0;
  // Derived, set at load and re-validated rather than recomputed downstream.
  int64_t out = 0;   // nu - yes - no
};

struct ExitPollSample {
  std::string center_id;
  std::string pollster;
  int64_t sample_size = 0;
  int64_t yes_responses = 0;
};

enum class TrafficClass { high, low, cellular, unclassified };

std::string to_string(TrafficClass c);
std::optional<TrafficClass> traffic_class_from_string(const std::string& s);

struct TransmissionRecord {
  std::string center_id;
  int64_t session_start = 0;  // epoch seconds, UTC
  int64_t session_end = 0;
  int64_t bytes_in = 0;
  int64_t bytes_out = 0;
  int64_t packets_in = 0;
  int64_t packets_out = 0;
  TrafficClass traffic_class = TrafficClass::unclassified;
};

struct ElectionDataset {
  std::string label;
  double official_yes_share = 0.0;       // the single authoritative announced share
  std::string official_share_source;     // "provided" or "pooled"
  std::vector<VotingCenter> centers;
  std::vector<MachineTally> machines;
  std::vector<ExitPollSample> polls;
  std::vector<TransmissionRecord> transmissions;

  // Lookup structures, rebuilt by reindex().
  std::map<std::string, size_t> center_index;
  std::vector<std::vector<size_t>> machines_by_center;
  std::vector<std::vector<size_t>> polls_by_center;
  std::vector<std::vector<size_t>> transmissions_by_center;

  void reindex();

  // Total ballots and YES ballots across a center's machines.
  int64_t center_ballots(size_t center_idx) const;
  int64_t center_yes(size_t center_idx) const;
  // Sum(yes) / Sum(nu) over all machines.
  double pooled_yes_share() const;
};

struct Violation {
  std::string entity;   // "center", "machine", "poll", "transmission", "dataset"
  std::string id;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

struct LoadPaths {
  std::string centers;
  std::string machines;
  std::string exitpoll;        // optional, empty means no table
  std::string transmissions;   // optional, empty means no table
};

// Strict load. Throws std::runtime_error with file:line context.
ElectionDataset load_dataset(const LoadPaths& paths);

// Loads a directory holding centers.csv, machines.csv, and optionally
// exitpoll.csv, transmissions.csv, dataset.toml (label, official_yes_share).
ElectionDataset load_dataset_dir(const std::string& dir);

ValidationReport validate(const ElectionDataset& ds);

// Uniform guard used by every analysis entry point.
void ensure_valid(const ElectionDataset& ds);

// Writes the four CSV tables plus dataset.toml into dir.
void emit_dataset(const ElectionDataset& ds, const std::string& dir);

// Canonical CSV serializations (used by emit and by the fingerprint).
std::string centers_csv(const ElectionDataset& ds);
std::string machines_csv(const ElectionDataset& ds);
std::string exitpoll_csv(const ElectionDataset& ds);
std::string transmissions_csv(const ElectionDataset& ds);

// Content fingerprint over the canonical serialization, as fixed-width hex.
std::string fingerprint(const ElectionDataset& ds);

// Per-center YES share (Sum yes / Sum nu) for centers with ballots; used by
// several detectors. Returns center indices alongside shares.
struct CenterShare {
  size_t center_idx;
  double yes_share;
};
std::vector<CenterShare> center_yes_shares(const ElectionDataset& ds);

}  // namespace forensics
