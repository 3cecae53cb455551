// Synthetic elections: generator determinism and distributional fidelity, and
// the tampering schemes' exact arithmetic plus their ground-truth manifests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "forensics/dataset.hpp"
#include "forensics/synth.hpp"

#include "helpers.hpp"

using forensics::ElectionDataset;
using forensics::TrafficClass;
using forensics::synth::FraudKind;
using forensics::synth::FraudScheme;
using forensics::synth::FraudScope;
using forensics::synth::SynthConfig;
using forensics::synth::generate;
using forensics::synth::inject_fraud;
using forensics::synth::manifest_json;

namespace {

SynthConfig base_config() {
  SynthConfig c;
  c.label = "unit";
  c.centers = 100;
  c.machines_min = 2;
  c.machines_max = 2;
  c.votes_kind = SynthConfig::VotesKind::uniform;
  c.votes_min = 200;
  c.votes_max = 400;
  c.propensity_kind = SynthConfig::PropensityKind::fixed;
  c.propensity = 0.41;
  c.out_rate = 0.0;
  c.poll_fraction = 0.2;
  return c;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("fixed propensity lands the pooled share on target") {
  auto ds = generate(base_config(), 20260817);
  int64_t yes = 0, ballots = 0;
  for (const auto& m : ds.machines) {
    yes += m.yes;
    ballots += m.nu;
  }
  REQUIRE(ballots > 0);
  const double share = double(yes) / double(ballots);
  const double sigma = std::sqrt(0.41 * 0.59 / double(ballots));
  CHECK(std::abs(share - 0.41) < 3.0 * sigma);
  CHECK(ds.official_yes_share == doctest::Approx(share));
  CHECK(ds.official_share_source == "pooled");
}

TEST_CASE("the same seed reproduces the dataset bit for bit") {
  auto a = generate(base_config(), 7);
  auto b = generate(base_config(), 7);
  CHECK(forensics::fingerprint(a) == forensics::fingerprint(b));
  CHECK(forensics::machines_csv(a) == forensics::machines_csv(b));
  auto c = generate(base_config(), 8);
  CHECK(forensics::fingerprint(a) != forensics::fingerprint(c));
}

TEST_CASE("per-center streams do not depend on the center count") {
  auto small = base_config();
  small.centers = 5;
  auto large = base_config();
  large.centers = 7;
  auto a = generate(small, 99);
  auto b = generate(large, 99);
  for (size_t i = 0; i < 10; ++i) {  // 5 centers x 2 machines
    CHECK(a.machines[i].machine_id == b.machines[i].machine_id);
    CHECK(a.machines[i].nu == b.machines[i].nu);
    CHECK(a.machines[i].yes == b.machines[i].yes);
  }
}

TEST_CASE("structure follows the configuration") {
  auto cfg = base_config();
  cfg.centers = 40;
  cfg.machines_min = 1;
  cfg.machines_max = 3;
  cfg.region_count = 4;
  cfg.class_high = 1.0;
  cfg.turnout = 0.5;
  auto ds = generate(cfg, 3);
  REQUIRE(ds.centers.size() == 40);
  std::set<std::string> regions;
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    const auto& c = ds.centers[i];
    regions.insert(c.region);
    const auto machines = int64_t(ds.machines_by_center[i].size());
    CHECK(machines >= 1);
    CHECK(machines <= 3);
    CHECK(c.registered >= ds.center_ballots(i));
    // turnout 0.5 doubles the ballot count, up to rounding.
    CHECK(c.registered >= 2 * ds.center_ballots(i) - 1);
    CHECK(c.signatures <= c.registered);
  }
  CHECK(regions == std::set<std::string>{"R1", "R2", "R3", "R4"});
  for (const auto& t : ds.transmissions) CHECK(t.traffic_class == TrafficClass::high);
}

TEST_CASE("polling the whole center reads the tally exactly") {
  auto cfg = base_config();
  cfg.centers = 10;
  cfg.poll_fraction = 1.0;
  auto ds = generate(cfg, 11);
  REQUIRE(ds.polls.size() == 10);
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    REQUIRE(ds.polls_by_center[i].size() == 1);
    const auto& poll = ds.polls[ds.polls_by_center[i][0]];
    CHECK(poll.sample_size == ds.center_ballots(i));
    CHECK(poll.yes_responses == ds.center_yes(i));
  }
}

TEST_CASE("zero centers is a configuration error") {
  auto cfg = base_config();
  cfg.centers = 0;
  CHECK_THROWS_WITH_AS(generate(cfg, 1), "centers must be at least 1", std::invalid_argument);
}

TEST_CASE("a NONE scheme changes nothing and says so") {
  auto ds = generate(base_config(), 5);
  FraudScheme none;
  auto [tampered, manifest] = inject_fraud(ds, none, 5);
  CHECK(forensics::fingerprint(tampered) == forensics::fingerprint(ds));
  CHECK(manifest.scheme == "NONE");
  CHECK(manifest.records.empty());
  CHECK(manifest.affected_centers.empty());
}

TEST_CASE("proportional shave flips exactly floor(delta * yes) per machine") {
  auto ds = generate(base_config(), 21);
  FraudScheme scheme;
  scheme.kind = FraudKind::proportional_shave;
  scheme.delta = 0.2;
  auto [tampered, manifest] = inject_fraud(ds, scheme, 21);

  std::map<std::string, forensics::synth::TamperRecord> by_machine;
  for (const auto& r : manifest.records) by_machine[r.machine_id] = r;

  std::set<std::string> expected_affected;
  for (size_t i = 0; i < ds.machines.size(); ++i) {
    const auto& orig = ds.machines[i];
    const auto& tamp = tampered.machines[i];
    const int64_t flip = int64_t(std::floor(0.2 * double(orig.yes)));
    CHECK(tamp.nu == orig.nu);
    CHECK(tamp.out == orig.out);
    if (flip > 0) {
      CHECK(tamp.yes == orig.yes - flip);
      CHECK(tamp.no == orig.no + flip);
      REQUIRE(by_machine.count(orig.machine_id) == 1);
      CHECK(by_machine[orig.machine_id].action == "SHAVE");
      CHECK(by_machine[orig.machine_id].before == orig.yes);
      CHECK(by_machine[orig.machine_id].after == tamp.yes);
      expected_affected.insert(orig.center_id);
    } else {
      CHECK(tamp.yes == orig.yes);
    }
  }
  CHECK(std::set<std::string>(manifest.affected_centers.begin(),
                              manifest.affected_centers.end()) == expected_affected);
  CHECK(std::is_sorted(manifest.affected_centers.begin(), manifest.affected_centers.end()));

  // Intent measurements never move; the announced share follows the tallies.
  for (size_t i = 0; i < ds.centers.size(); ++i)
    CHECK(tampered.centers[i].signatures == ds.centers[i].signatures);
  for (size_t i = 0; i < ds.polls.size(); ++i)
    CHECK(tampered.polls[i].yes_responses == ds.polls[i].yes_responses);
  CHECK(tampered.official_yes_share == doctest::Approx(tampered.pooled_yes_share()));
  CHECK(tampered.official_yes_share < ds.official_yes_share);
}

TEST_CASE("cap_yes rewrites only machines above the ceiling") {
  auto ds = generate(base_config(), 33);
  FraudScheme scheme;
  scheme.kind = FraudKind::cap_yes;
  scheme.cap = 150;
  auto [tampered, manifest] = inject_fraud(ds, scheme, 33);
  size_t over = 0;
  for (size_t i = 0; i < ds.machines.size(); ++i) {
    const auto& orig = ds.machines[i];
    const auto& tamp = tampered.machines[i];
    if (orig.yes > 150) {
      ++over;
      CHECK(tamp.yes == 150);
      CHECK(tamp.no == orig.no + (orig.yes - 150));
    } else {
      CHECK(tamp.yes == orig.yes);
      CHECK(tamp.no == orig.no);
    }
    CHECK(tamp.nu == orig.nu);
  }
  REQUIRE(over > 0);  // the fixture must actually exercise the cap
  CHECK(manifest.records.size() == over);
  for (const auto& r : manifest.records) {
    CHECK(r.action == "CAP");
    CHECK(r.after == 150);
    CHECK(r.before > 150);
  }
}

TEST_CASE("machine_reprogram touches the chosen fraction of in-scope centers") {
  auto cfg = base_config();
  cfg.computerized_fraction = 0.6;
  auto ds = generate(cfg, 44);
  FraudScheme scheme;
  scheme.kind = FraudKind::machine_reprogram;
  scheme.scope = FraudScope::computerized_only;
  scheme.delta = 0.3;
  scheme.affected_fraction = 0.5;
  auto [tampered, manifest] = inject_fraud(ds, scheme, 44);

  int64_t in_scope = 0;
  for (const auto& c : ds.centers)
    if (c.computerized) ++in_scope;
  const auto expected = size_t(std::llround(0.5 * double(in_scope)));
  CHECK(manifest.affected_centers.size() == expected);

  std::set<std::string> affected(manifest.affected_centers.begin(),
                                 manifest.affected_centers.end());
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    if (affected.count(ds.centers[i].center_id)) CHECK(ds.centers[i].computerized);
  }
  for (size_t i = 0; i < ds.machines.size(); ++i) {
    const auto& orig = ds.machines[i];
    const auto& tamp = tampered.machines[i];
    if (!affected.count(orig.center_id)) {
      CHECK(tamp.yes == orig.yes);
    } else {
      const int64_t flip = int64_t(std::floor(0.3 * double(orig.yes)));
      CHECK(tamp.yes == orig.yes - flip);
    }
  }

  // Same seed, same selection.
  auto [again, manifest2] = inject_fraud(ds, scheme, 44);
  CHECK(manifest2.affected_centers == manifest.affected_centers);
}

TEST_CASE("metadata_leak inflates traffic and leaves every tally alone") {
  auto cfg = base_config();
  cfg.bytes_per_vote = 0.0;
  auto ds = generate(cfg, 55);
  FraudScheme scheme;
  scheme.kind = FraudKind::metadata_leak;
  scheme.bytes_per_vote = 6.0;
  auto [tampered, manifest] = inject_fraud(ds, scheme, 55);

  for (size_t i = 0; i < ds.machines.size(); ++i) {
    CHECK(tampered.machines[i].yes == ds.machines[i].yes);
    CHECK(tampered.machines[i].no == ds.machines[i].no);
  }
  CHECK(tampered.official_yes_share == ds.official_yes_share);

  // Per center: exactly one record, on the earliest session, adding
  // round(6 * ballots) bytes.
  std::map<std::string, int64_t> added;
  for (const auto& r : manifest.records) {
    CHECK(r.action == "LEAK");
    CHECK(r.machine_id.empty());
    added[r.center_id] = r.after - r.before;
  }
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    const auto& id = ds.centers[i].center_id;
    REQUIRE(added.count(id) == 1);
    CHECK(added[id] == std::llround(6.0 * double(ds.center_ballots(i))));
    int64_t before_total = 0, after_total = 0;
    for (size_t ti : ds.transmissions_by_center[i]) before_total += ds.transmissions[ti].bytes_out;
    for (size_t ti : tampered.transmissions_by_center[i])
      after_total += tampered.transmissions[ti].bytes_out;
    CHECK(after_total - before_total == added[id]);
  }
}

TEST_CASE("the pooled share declines monotonically in the shave fraction") {
  auto ds = generate(base_config(), 66);
  double prev = ds.official_yes_share;
  for (double delta : {0.1, 0.2, 0.4}) {
    FraudScheme scheme;
    scheme.kind = FraudKind::proportional_shave;
    scheme.delta = delta;
    auto [tampered, manifest] = inject_fraud(ds, scheme, 66);
    CHECK(tampered.official_yes_share < prev);
    prev = tampered.official_yes_share;
  }
}

TEST_CASE("a computerized-only scheme with no computerized centers is an error") {
  auto cfg = base_config();
  cfg.computerized_fraction = 0.0;
  auto ds = generate(cfg, 77);
  FraudScheme scheme;
  scheme.kind = FraudKind::machine_reprogram;
  scheme.scope = FraudScope::computerized_only;
  scheme.delta = 0.2;
  CHECK_THROWS_WITH_AS(inject_fraud(ds, scheme, 77), "fraud scope matches no centers",
                       std::invalid_argument);
}

TEST_CASE("scheme files parse with kind-dependent default scope") {
  testutil::TempDir tmp("synthkv");
  auto p1 = tmp.file("reprog.kv", "kind = MACHINE_REPROGRAM\ndelta = 0.1\n");
  auto s1 = forensics::synth::load_fraud_scheme(p1);
  CHECK(s1.kind == FraudKind::machine_reprogram);
  CHECK(s1.scope == FraudScope::computerized_only);

  auto p2 = tmp.file("shave.kv", "kind = PROPORTIONAL_SHAVE\ndelta = 0.2\n");
  auto s2 = forensics::synth::load_fraud_scheme(p2);
  CHECK(s2.scope == FraudScope::all_centers);

  auto p3 = tmp.file("bad.kv", "kind = SOMETHING\n");
  CHECK_THROWS_AS(forensics::synth::load_fraud_scheme(p3), std::invalid_argument);

  auto p4 = tmp.file("range.kv", "kind = PROPORTIONAL_SHAVE\ndelta = 1.5\n");
  CHECK_THROWS_AS(forensics::synth::load_fraud_scheme(p4), std::invalid_argument);
}

TEST_CASE("manifests serialize to parseable JSON") {
  auto ds = generate(base_config(), 88);
  FraudScheme scheme;
  scheme.kind = FraudKind::proportional_shave;
  scheme.delta = 0.25;
  auto [tampered, manifest] = inject_fraud(ds, scheme, 88);
  auto parsed = nlohmann::json::parse(manifest_json(manifest));
  CHECK(parsed["scheme"] == "PROPORTIONAL_SHAVE");
  CHECK(parsed["scope"] == "ALL");
  CHECK(parsed["affected_centers"].size() == manifest.affected_centers.size());
  CHECK(parsed["records"].size() == manifest.records.size());
  CHECK(parsed["records"][0]["action"] == "SHAVE");

  FraudScheme none;
  auto [same, empty] = inject_fraud(ds, none, 88);
  auto parsed_empty = nlohmann::json::parse(manifest_json(empty));
  CHECK(parsed_empty["records"].empty());
}

}  // TEST_SUITE
