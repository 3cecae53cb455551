#pragma once

// Seeded synthetic elections with controlled tampering. A latent per-center
// YES propensity drives three measurements: recorded tallies, petition
// signatures, and exit polls. Tampering rewrites recorded tallies (or
// transmission volumes) only, never the intent measurements, and every
// modification lands in a ground-truth manifest.

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "forensics/dataset.hpp"
#include "forensics/kv.hpp"

namespace forensics::synth {

struct SynthConfig {
  std::string label = "synthetic";
  int64_t centers = 0;
  int64_t machines_min = 1;
  int64_t machines_max = 1;

  enum class VotesKind { fixed, uniform, binomial };
  VotesKind votes_kind = VotesKind::uniform;
  int64_t votes_min = 0;
  int64_t votes_max = 0;   // fixed value, uniform upper bound, or binomial trials
  double votes_p = 0.5;    // binomial success probability

  enum class PropensityKind { fixed, beta };
  PropensityKind propensity_kind = PropensityKind::fixed;
  double propensity = 0.5;
  double propensity_alpha = 2.0;
  double propensity_beta = 2.0;

  double out_rate = 0.0;   // probability a cast ballot is neither YES nor NO
  double turnout = 0.7;    // ballots cast as a fraction of registered voters

  // signature share = clamp(base + slope * propensity + N(0, noise), 0, 1)
  double signature_base = 0.05;
  double signature_slope = 0.8;
  double signature_noise = 0.02;

  double poll_fraction = 0.0;  // exit poll sample as a fraction of ballots cast
  std::string pollster = "SYNTH";

  double computerized_fraction = 1.0;
  int64_t region_count = 4;

  // bytes_out per session = base + U(0, noise) + bytes_per_vote * machine votes
  double bytes_base = 4096.0;
  double bytes_noise = 512.0;
  double bytes_per_vote = 0.0;

  // Per-center traffic class probabilities; the remainder is UNCLASSIFIED.
  double class_high = 0.0;
  double class_low = 0.0;
  double class_cellular = 0.0;

  // When set, overrides the pooled recorded share as the announced share.
  double official_share_override = std::numeric_limits<double>::quiet_NaN();

  uint64_t seed = 0;
};

SynthConfig synth_config_from_doc(const kv::Document& doc);
SynthConfig load_synth_config(const std::string& path);
void validate_config(const SynthConfig& config);

// Clean dataset, deterministic given the seed. Polls sample the realized
// votes without replacement; the announced share is the pooled recorded share
// unless the config overrides it.
ElectionDataset generate(const SynthConfig& config, uint64_t seed);

enum class FraudKind { none, proportional_shave, cap_yes, machine_reprogram, metadata_leak };
enum class FraudScope { computerized_only, all_centers };

std::string to_string(FraudKind k);
std::string to_string(FraudScope s);

struct FraudScheme {
  FraudKind kind = FraudKind::none;
  FraudScope scope = FraudScope::all_centers;
  double delta = 0.0;              // shave fraction of YES votes per machine
  int64_t cap = 0;                 // per-machine YES ceiling
  double affected_fraction = 1.0;  // fraction of in-scope centers reprogrammed
  double bytes_per_vote = 0.0;     // metadata leak rate
};

FraudScheme fraud_scheme_from_doc(const kv::Document& doc);
FraudScheme load_fraud_scheme(const std::string& path);
void validate_scheme(const FraudScheme& scheme);

struct TamperRecord {
  std::string center_id;
  std::string machine_id;  // empty for transmission-level modifications
  std::string action;      // "SHAVE", "CAP", "LEAK"
  int64_t before = 0;      // YES votes or bytes_out before modification
  int64_t after = 0;
};

struct FraudManifest {
  std::string scheme;
  std::string scope;
  std::vector<std::string> affected_centers;  // sorted, unique
  std::vector<TamperRecord> records;
};

// Applies the scheme to a copy of the dataset. Recorded tallies (or
// transmission bytes) change; signatures and polls never do. The announced
// share is recomputed from the tampered tallies.
std::pair<ElectionDataset, FraudManifest> inject_fraud(const ElectionDataset& ds,
                                                       const FraudScheme& scheme, uint64_t seed);

std::string manifest_json(const FraudManifest& manifest);

}  // namespace forensics::synth
