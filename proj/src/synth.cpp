#include "forensics/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "forensics/rng.hpp"

namespace forensics::synth {

namespace {

// 2004-08-15T18:00:00Z, the referendum evening; transmissions are spaced from
// here so timestamps are stable and valid ISO-8601.
constexpr int64_t kSessionEpoch = 1092592800;

SynthConfig::VotesKind votes_kind_from(const std::string& s) {
  if (s == "FIXED") return SynthConfig::VotesKind::fixed;
  if (s == "UNIFORM") return SynthConfig::VotesKind::uniform;
  if (s == "BINOMIAL") return SynthConfig::VotesKind::binomial;
  throw std::invalid_argument("unknown votes distribution: " + s);
}

SynthConfig::PropensityKind propensity_kind_from(const std::string& s) {
  if (s == "FIXED") return SynthConfig::PropensityKind::fixed;
  if (s == "BETA") return SynthConfig::PropensityKind::beta;
  throw std::invalid_argument("unknown propensity distribution: " + s);
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

SynthConfig synth_config_from_doc(const kv::Document& doc) {
  SynthConfig c;
  c.label = doc.get_string("label", c.label);
  c.centers = doc.get_int("centers");
  c.machines_min = doc.get_int("machines_min", c.machines_min);
  c.machines_max = doc.get_int("machines_max", c.machines_min);
  c.votes_kind = votes_kind_from(doc.get_string("votes_kind", "UNIFORM"));
  c.votes_min = doc.get_int("votes_min", c.votes_min);
  c.votes_max = doc.get_int("votes_max");
  c.votes_p = doc.get_double("votes_p", c.votes_p);
  c.propensity_kind = propensity_kind_from(doc.get_string("propensity_kind", "FIXED"));
  c.propensity = doc.get_double("propensity", c.propensity);
  c.propensity_alpha = doc.get_double("propensity_alpha", c.propensity_alpha);
  c.propensity_beta = doc.get_double("propensity_beta", c.propensity_beta);
  c.out_rate = doc.get_double("out_rate", c.out_rate);
  c.turnout = doc.get_double("turnout", c.turnout);
  c.signature_base = doc.get_double("signature_base", c.signature_base);
  c.signature_slope = doc.get_double("signature_slope", c.signature_slope);
  c.signature_noise = doc.get_double("signature_noise", c.signature_noise);
  c.poll_fraction = doc.get_double("poll_fraction", c.poll_fraction);
  c.pollster = doc.get_string("pollster", c.pollster);
  c.computerized_fraction = doc.get_double("computerized_fraction", c.computerized_fraction);
  c.region_count = doc.get_int("region_count", c.region_count);
  c.bytes_base = doc.get_double("bytes_base", c.bytes_base);
  c.bytes_noise = doc.get_double("bytes_noise", c.bytes_noise);
  c.bytes_per_vote = doc.get_double("bytes_per_vote", c.bytes_per_vote);
  c.class_high = doc.get_double("class_high", c.class_high);
  c.class_low = doc.get_double("class_low", c.class_low);
  c.class_cellular = doc.get_double("class_cellular", c.class_cellular);
  c.official_share_override = doc.get_double("official_share_override", c.official_share_override);
  c.seed = uint64_t(doc.get_int("seed", 0));
  validate_config(c);
  return c;
}

SynthConfig load_synth_config(const std::string& path) {
  return synth_config_from_doc(kv::load(path));
}

void validate_config(const SynthConfig& c) {
  require(c.centers >= 1, "centers must be at least 1");
  require(c.machines_min >= 1, "machines_min must be at least 1");
  require(c.machines_max >= c.machines_min, "machines_max must be at least machines_min");
  require(c.votes_min >= 0, "votes_min must be non-negative");
  require(c.votes_max >= c.votes_min, "votes_max must be at least votes_min");
  require(c.votes_p >= 0.0 && c.votes_p <= 1.0, "votes_p must be in [0, 1]");
  require(c.propensity >= 0.0 && c.propensity <= 1.0, "propensity must be in [0, 1]");
  require(c.propensity_alpha > 0.0 && c.propensity_beta > 0.0,
          "propensity beta parameters must be positive");
  require(c.out_rate >= 0.0 && c.out_rate < 1.0, "out_rate must be in [0, 1)");
  require(c.turnout > 0.0 && c.turnout <= 1.0, "turnout must be in (0, 1]");
  require(c.signature_noise >= 0.0, "signature_noise must be non-negative");
  require(c.poll_fraction >= 0.0 && c.poll_fraction <= 1.0, "poll_fraction must be in [0, 1]");
  require(c.computerized_fraction >= 0.0 && c.computerized_fraction <= 1.0,
          "computerized_fraction must be in [0, 1]");
  require(c.region_count >= 1, "region_count must be at least 1");
  require(c.bytes_base >= 0.0 && c.bytes_noise >= 0.0 && c.bytes_per_vote >= 0.0,
          "byte model parameters must be non-negative");
  require(c.class_high >= 0.0 && c.class_low >= 0.0 && c.class_cellular >= 0.0 &&
              c.class_high + c.class_low + c.class_cellular <= 1.0 + 1e-12,
          "traffic class probabilities must be non-negative and sum to at most 1");
  if (!std::isnan(c.official_share_override))
    require(c.official_share_override >= 0.0 && c.official_share_override <= 1.0,
            "official_share_override must be in [0, 1]");
}

ElectionDataset generate(const SynthConfig& config, uint64_t seed) {
  validate_config(config);
  ElectionDataset ds;
  ds.label = config.label;

  int digits = 1;
  for (int64_t v = config.centers; v >= 10; v /= 10) ++digits;
  if (digits < 4) digits = 4;

  for (int64_t ci = 0; ci < config.centers; ++ci) {
    Rng rng(substream(seed, "synth", uint64_t(ci)));

    std::string num = std::to_string(ci + 1);
    std::string center_id = "C" + std::string(size_t(digits) - num.size(), '0') + num;

    double theta = config.propensity_kind == SynthConfig::PropensityKind::fixed
                       ? config.propensity
                       : rng.beta(config.propensity_alpha, config.propensity_beta);

    VotingCenter center;
    center.center_id = center_id;
    center.region = "R" + std::to_string(ci % config.region_count + 1);
    center.computerized = rng.next_double() < config.computerized_fraction;

    int64_t machines = rng.uniform_int(config.machines_min, config.machines_max);
    int64_t center_ballots = 0;
    for (int64_t mi = 0; mi < machines; ++mi) {
      MachineTally tally;
      tally.center_id = center_id;
      tally.machine_id = center_id + "-M" + std::to_string(mi + 1);
      switch (config.votes_kind) {
        case SynthConfig::VotesKind::fixed: tally.nu = config.votes_max; break;
        case SynthConfig::VotesKind::uniform:
          tally.nu = rng.uniform_int(config.votes_min, config.votes_max);
          break;
        case SynthConfig::VotesKind::binomial:
          tally.nu = rng.binomial(config.votes_max, config.votes_p);
          break;
      }
      int64_t out = rng.binomial(tally.nu, config.out_rate);
      tally.yes = rng.binomial(tally.nu - out, theta);
      tally.no = tally.nu - out - tally.yes;
      tally.out = out;
      center_ballots += tally.nu;
      ds.machines.push_back(std::move(tally));
    }

    center.registered = std::max<int64_t>(
        center_ballots, std::llround(std::ceil(double(center_ballots) / config.turnout)));
    if (center.registered < 1) center.registered = 1;
    double sig_share = config.signature_base + config.signature_slope * theta;
    if (config.signature_noise > 0.0) sig_share += config.signature_noise * rng.normal();
    sig_share = std::clamp(sig_share, 0.0, 1.0);
    center.signatures = std::llround(sig_share * double(center.registered));
    ds.centers.push_back(std::move(center));

    if (config.poll_fraction > 0.0 && center_ballots > 0) {
      int64_t yes_total = 0;
      for (auto it = ds.machines.end() - machines; it != ds.machines.end(); ++it)
        yes_total += it->yes;
      int64_t m = std::llround(config.poll_fraction * double(center_ballots));
      m = std::min(m, center_ballots);
      if (m >= 1) {
        ExitPollSample poll;
        poll.center_id = center_id;
        poll.pollster = config.pollster;
        poll.sample_size = m;
        poll.yes_responses = rng.hypergeometric(center_ballots, yes_total, m);
        ds.polls.push_back(std::move(poll));
      }
    }

    TrafficClass cls = TrafficClass::unclassified;
    {
      double u = rng.next_double();
      if (u < config.class_high)
        cls = TrafficClass::high;
      else if (u < config.class_high + config.class_low)
        cls = TrafficClass::low;
      else if (u < config.class_high + config.class_low + config.class_cellular)
        cls = TrafficClass::cellular;
    }
    for (int64_t mi = 0; mi < machines; ++mi) {
      const MachineTally& tally = ds.machines[ds.machines.size() - size_t(machines - mi)];
      TransmissionRecord rec;
      rec.center_id = center_id;
      rec.session_start = kSessionEpoch + ci * 600 + mi * 30;
      rec.session_end = rec.session_start + 60 + rng.uniform_int(0, 240);
      double bytes = config.bytes_base + config.bytes_per_vote * double(tally.nu);
      if (config.bytes_noise > 0.0) bytes += double(rng.uniform_int(0, int64_t(config.bytes_noise)));
      rec.bytes_out = std::max<int64_t>(0, std::llround(bytes));
      rec.bytes_in = std::max<int64_t>(0, std::llround(bytes / 4.0));
      rec.packets_out = rec.bytes_out / 512 + 1;
      rec.packets_in = rec.bytes_in / 512 + 1;
      rec.traffic_class = cls;
      ds.transmissions.push_back(std::move(rec));
    }
  }

  ds.reindex();
  if (std::isnan(config.official_share_override)) {
    ds.official_yes_share = ds.pooled_yes_share();
    ds.official_share_source = "pooled";
  } else {
    ds.official_yes_share = config.official_share_override;
    ds.official_share_source = "provided";
  }
  ensure_valid(ds);
  return ds;
}

std::string to_string(FraudKind k) {
  switch (k) {
    case FraudKind::none: return "NONE";
    case FraudKind::proportional_shave: return "PROPORTIONAL_SHAVE";
    case FraudKind::cap_yes: return "CAP_YES";
    case FraudKind::machine_reprogram: return "MACHINE_REPROGRAM";
    case FraudKind::metadata_leak: return "METADATA_LEAK";
  }
  throw std::logic_error("unreachable fraud kind");
}

std::string to_string(FraudScope s) {
  return s == FraudScope::computerized_only ? "COMPUTERIZED_ONLY" : "ALL";
}

FraudScheme fraud_scheme_from_doc(const kv::Document& doc) {
  FraudScheme s;
  std::string kind = doc.get_string("kind");
  if (kind == "NONE") s.kind = FraudKind::none;
  else if (kind == "PROPORTIONAL_SHAVE") s.kind = FraudKind::proportional_shave;
  else if (kind == "CAP_YES") s.kind = FraudKind::cap_yes;
  else if (kind == "MACHINE_REPROGRAM") s.kind = FraudKind::machine_reprogram;
  else if (kind == "METADATA_LEAK") s.kind = FraudKind::metadata_leak;
  else throw std::invalid_argument("unknown fraud kind: " + kind);

  std::string scope = doc.get_string(
      "scope", s.kind == FraudKind::machine_reprogram ? "COMPUTERIZED_ONLY" : "ALL");
  if (scope == "COMPUTERIZED_ONLY") s.scope = FraudScope::computerized_only;
  else if (scope == "ALL") s.scope = FraudScope::all_centers;
  else throw std::invalid_argument("unknown fraud scope: " + scope);

  s.delta = doc.get_double("delta", s.delta);
  s.cap = doc.get_int("cap", s.cap);
  s.affected_fraction = doc.get_double("affected_fraction", s.affected_fraction);
  s.bytes_per_vote = doc.get_double("bytes_per_vote", s.bytes_per_vote);
  validate_scheme(s);
  return s;
}

FraudScheme load_fraud_scheme(const std::string& path) {
  return fraud_scheme_from_doc(kv::load(path));
}

void validate_scheme(const FraudScheme& s) {
  require(s.delta >= 0.0 && s.delta <= 1.0, "delta must be in [0, 1]");
  require(s.affected_fraction >= 0.0 && s.affected_fraction <= 1.0,
          "affected_fraction must be in [0, 1]");
  require(s.cap >= 0, "cap must be non-negative");
  require(s.bytes_per_vote >= 0.0, "bytes_per_vote must be non-negative");
}

namespace {

bool in_scope(const VotingCenter& c, FraudScope scope) {
  return scope == FraudScope::all_centers || c.computerized;
}

void shave_machine(MachineTally& m, double delta, FraudManifest& manifest) {
  int64_t flip = int64_t(std::floor(delta * double(m.yes)));
  if (flip <= 0) return;
  manifest.records.push_back({m.center_id, m.machine_id, "SHAVE", m.yes, m.yes - flip});
  m.yes -= flip;
  m.no += flip;
}

}  // namespace

std::pair<ElectionDataset, FraudManifest> inject_fraud(const ElectionDataset& ds,
                                                       const FraudScheme& scheme, uint64_t seed) {
  validate_scheme(scheme);
  ensure_valid(ds);
  ElectionDataset tampered = ds;
  FraudManifest manifest;
  manifest.scheme = to_string(scheme.kind);
  manifest.scope = to_string(scheme.scope);

  std::vector<std::string> scope_ids;
  for (const auto& c : tampered.centers)
    if (in_scope(c, scheme.scope)) scope_ids.push_back(c.center_id);
  std::sort(scope_ids.begin(), scope_ids.end());
  if (scheme.kind != FraudKind::none && scope_ids.empty())
    throw std::invalid_argument("fraud scope matches no centers");

  std::set<std::string> affected;
  switch (scheme.kind) {
    case FraudKind::none:
      break;
    case FraudKind::proportional_shave: {
      for (auto& m : tampered.machines) {
        if (!in_scope(tampered.centers[tampered.center_index.at(m.center_id)], scheme.scope))
          continue;
        size_t before = manifest.records.size();
        shave_machine(m, scheme.delta, manifest);
        if (manifest.records.size() > before) affected.insert(m.center_id);
      }
      break;
    }
    case FraudKind::cap_yes: {
      for (auto& m : tampered.machines) {
        if (!in_scope(tampered.centers[tampered.center_index.at(m.center_id)], scheme.scope))
          continue;
        if (m.yes <= scheme.cap) continue;
        manifest.records.push_back({m.center_id, m.machine_id, "CAP", m.yes, scheme.cap});
        m.no += m.yes - scheme.cap;
        m.yes = scheme.cap;
        affected.insert(m.center_id);
      }
      break;
    }
    case FraudKind::machine_reprogram: {
      int64_t count = std::llround(scheme.affected_fraction * double(scope_ids.size()));
      Rng rng(substream(seed, "fraud"));
      std::vector<std::string> chosen = scope_ids;
      for (int64_t i = 0; i < count; ++i) {
        size_t j = size_t(i) + size_t(rng.bounded(uint64_t(chosen.size() - size_t(i))));
        std::swap(chosen[size_t(i)], chosen[j]);
      }
      std::set<std::string> selected(chosen.begin(), chosen.begin() + count);
      for (auto& m : tampered.machines) {
        if (!selected.count(m.center_id)) continue;
        size_t before = manifest.records.size();
        shave_machine(m, scheme.delta, manifest);
        if (manifest.records.size() > before) affected.insert(m.center_id);
      }
      break;
    }
    case FraudKind::metadata_leak: {
      for (const auto& id : scope_ids) {
        size_t ci = tampered.center_index.at(id);
        const auto& recs = tampered.transmissions_by_center[ci];
        if (recs.empty()) continue;
        // Leak into the center's earliest session.
        size_t target = recs.front();
        for (size_t ti : recs)
          if (tampered.transmissions[ti].session_start <
              tampered.transmissions[target].session_start)
            target = ti;
        auto& rec = tampered.transmissions[target];
        int64_t extra = std::llround(scheme.bytes_per_vote * double(tampered.center_ballots(ci)));
        if (extra <= 0) continue;
        manifest.records.push_back({id, "", "LEAK", rec.bytes_out, rec.bytes_out + extra});
        rec.bytes_out += extra;
        affected.insert(id);
      }
      break;
    }
  }

  manifest.affected_centers.assign(affected.begin(), affected.end());
  bool tallies_changed = scheme.kind == FraudKind::proportional_shave ||
                         scheme.kind == FraudKind::cap_yes ||
                         scheme.kind == FraudKind::machine_reprogram;
  if (tallies_changed && !manifest.records.empty()) {
    // What officials announce is the recorded count, so the announced share
    // follows the tampered tallies.
    tampered.official_yes_share = tampered.pooled_yes_share();
    tampered.official_share_source = "pooled";
  }
  ensure_valid(tampered);
  return {std::move(tampered), std::move(manifest)};
}

std::string manifest_json(const FraudManifest& manifest) {
  std::ostringstream os;
  os << "{\n  \"scheme\": \"" << manifest.scheme << "\",\n  \"scope\": \"" << manifest.scope
     << "\",\n  \"affected_centers\": [";
  for (size_t i = 0; i < manifest.affected_centers.size(); ++i) {
    if (i) os << ", ";
    os << '"' << manifest.affected_centers[i] << '"';
  }
  os << "],\n  \"records\": [";
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    os << (i ? ",\n    " : "\n    ");
    os << "{\"center_id\": \"" << r.center_id << "\", \"machine_id\": \"" << r.machine_id
       << "\", \"action\": \"" << r.action << "\", \"before\": " << r.before
       << ", \"after\": " << r.after << "}";
  }
  os << (manifest.records.empty() ? "]" : "\n  ]") << "\n}\n";
  return os.str();
}

}  // namespace forensics::synth
