#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "forensics/csv.hpp"
#include "forensics/dataset.hpp"
#include "forensics/kv.hpp"

#include "helpers.hpp"

using namespace forensics;
using testutil::DatasetBuilder;
using testutil::TempDir;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ElectionDataset small_dataset() {
  return DatasetBuilder()
      .label("unit")
      .center("C1", "NORTH", true, 1000, 300)
      .center("C2", "SOUTH", false, 800, 100)
      .machine("C1", "M1", 400, 150, 240)
      .machine("C1", "M2", 350, 160, 180)
      .machine("C2", "M1", 500, 210, 280)
      .poll("C1", 120, 50)
      .poll("C2", 90, 40, "P2")
      .transmission("C1", 9000, TrafficClass::high)
      .transmission("C2", 4000, TrafficClass::low)
      .build();
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("csv parse: header, rows, line numbers") {
    auto t = csv::parse_table("a,b,c\n1,2,3\n\n4,5,6\n", "mem.csv");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1] == std::vector<std::string>{"4", "5", "6"});
    CHECK(t.line_numbers[0] == 2);
    CHECK(t.line_numbers[1] == 4);  // blank line skipped, numbering preserved
  }

  TEST_CASE("csv parse rejects ragged rows with location") {
    try {
      csv::parse_table("a,b\n1,2\n3\n", "ragged.csv");
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("ragged.csv") != std::string::npos);
      CHECK(msg.find("3") != std::string::npos);
    }
  }

  TEST_CASE("csv field parsers carry context") {
    CHECK(csv::to_int64("42", "x") == 42);
    CHECK_THROWS_AS((void)csv::to_int64("4x2", "ctx"), std::runtime_error);
    CHECK(csv::to_double("0.5", "x") == doctest::Approx(0.5));
    try {
      (void)csv::to_int64("nope", "file.csv:7 nu");
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("file.csv:7") != std::string::npos);
    }
  }

  TEST_CASE("iso8601 round trip and rejection") {
    const int64_t epoch = csv::parse_iso8601_utc("2004-08-15T06:00:00Z", "t");
    CHECK(csv::format_iso8601_utc(epoch) == "2004-08-15T06:00:00Z");
    CHECK(csv::parse_iso8601_utc("1970-01-01T00:00:00Z", "t") == 0);
    CHECK(csv::parse_iso8601_utc("1970-01-02T00:00:01Z", "t") == 86401);
    CHECK_THROWS_AS((void)csv::parse_iso8601_utc("2004-08-15 06:00:00", "t"), std::runtime_error);
    CHECK_THROWS_AS((void)csv::parse_iso8601_utc("2004-13-15T06:00:00Z", "t"), std::runtime_error);
  }

  TEST_CASE("kv parsing: comments, quotes, lists, fallbacks") {
    auto doc = kv::parse("# comment\nname = \"quoted value\"\ncount = 7\nratio=0.25\n"
                         "flag = true\nitems = A,B,C\n",
                         "mem.kv");
    CHECK(doc.get_string("name") == "quoted value");
    CHECK(doc.get_int("count") == 7);
    CHECK(doc.get_double("ratio") == doctest::Approx(0.25));
    CHECK(doc.get_bool("flag", false));
    CHECK(doc.get_list("items") == std::vector<std::string>{"A", "B", "C"});
    CHECK(doc.get_int("missing", 9) == 9);
    CHECK_THROWS(doc.get_int("missing"));
  }

  TEST_CASE("dataset loads from emitted files and round-trips") {
    auto ds = small_dataset();
    TempDir dir("roundtrip");
    emit_dataset(ds, dir.str());
    auto back = load_dataset_dir(dir.str());
    CHECK(back.label == ds.label);
    CHECK(back.centers.size() == 2);
    CHECK(back.machines.size() == 3);
    CHECK(back.polls.size() == 2);
    CHECK(back.transmissions.size() == 2);
    CHECK(back.official_yes_share == doctest::Approx(ds.official_yes_share).epsilon(1e-15));
    CHECK(back.machines[0].out == 10);  // derived at load: 400 - 150 - 240
    CHECK(fingerprint(back) == fingerprint(ds));
  }

  TEST_CASE("loader errors name file and line") {
    TempDir dir("loaderr");
    dir.file("centers.csv",
             "center_id,region,computerized,registered,signatures\nC1,R,1,100,300\n");
    dir.file("machines.csv", "center_id,machine_id,nu,yes,no\n");
    try {
      (void)load_dataset_dir(dir.str());
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("centers.csv:2") != std::string::npos);   // signatures 300 > registered 100
      CHECK(msg.find("signatures") != std::string::npos);
    }
  }

  TEST_CASE("loader rejects unresolved and duplicate keys") {
    TempDir dir("loadfk");
    dir.file("centers.csv",
             "center_id,region,computerized,registered,signatures\nC1,R,1,100,30\n");
    dir.file("machines.csv", "center_id,machine_id,nu,yes,no\nC9,M1,10,5,5\n");
    CHECK_THROWS_WITH_AS((void)load_dataset_dir(dir.str()),
                         doctest::Contains("unresolved center_id C9"), std::runtime_error);

    TempDir dir2("loaddup");
    dir2.file("centers.csv",
              "center_id,region,computerized,registered,signatures\nC1,R,1,100,30\nC1,R,0,50,10\n");
    dir2.file("machines.csv", "center_id,machine_id,nu,yes,no\n");
    CHECK_THROWS_WITH_AS((void)load_dataset_dir(dir2.str()),
                         doctest::Contains("duplicate center_id C1"), std::runtime_error);
  }

  TEST_CASE("loader rejects machines whose yes+no exceed ballots") {
    TempDir dir("loadsum");
    dir.file("centers.csv",
             "center_id,region,computerized,registered,signatures\nC1,R,1,100,30\n");
    dir.file("machines.csv", "center_id,machine_id,nu,yes,no\nC1,M1,10,8,5\n");
    CHECK_THROWS_WITH_AS((void)load_dataset_dir(dir.str()), doctest::Contains("exceed nu"),
                         std::runtime_error);
  }

  TEST_CASE("exitpoll and transmissions tables are optional") {
    TempDir dir("optional");
    dir.file("centers.csv",
             "center_id,region,computerized,registered,signatures\nC1,R,1,100,30\n");
    dir.file("machines.csv", "center_id,machine_id,nu,yes,no\nC1,M1,10,4,6\n");
    auto ds = load_dataset_dir(dir.str());
    CHECK(ds.polls.empty());
    CHECK(ds.transmissions.empty());
    CHECK(ds.official_share_source == "pooled");
    CHECK(ds.official_yes_share == doctest::Approx(0.4));
  }

  TEST_CASE("dataset descriptor overrides label and official share") {
    TempDir dir("descriptor");
    dir.file("centers.csv",
             "center_id,region,computerized,registered,signatures\nC1,R,1,100,30\n");
    dir.file("machines.csv", "center_id,machine_id,nu,yes,no\nC1,M1,10,4,6\n");
    dir.file("dataset.toml", "label = \"named\"\nofficial_yes_share = 0.41\n");
    auto ds = load_dataset_dir(dir.str());
    CHECK(ds.label == "named");
    CHECK(ds.official_yes_share == doctest::Approx(0.41));
    CHECK(ds.official_share_source == "provided");
  }

  TEST_CASE("validate reports every violation instead of throwing") {
    auto ds = small_dataset();
    ds.machines[0].out = 99;                  // inconsistent derived count
    ds.centers[1].signatures = 900;           // exceeds registered 800
    ds.polls[0].yes_responses = 500;          // exceeds sample size
    auto report = validate(ds);
    CHECK_FALSE(report.ok());
    CHECK(report.violations.size() == 3);
    bool saw_out = false, saw_sig = false, saw_poll = false;
    for (const auto& v : report.violations) {
      if (v.message.find("out count") != std::string::npos) saw_out = true;
      if (v.message.find("signatures exceed") != std::string::npos) saw_sig = true;
      if (v.message.find("yes_responses exceed") != std::string::npos) saw_poll = true;
    }
    CHECK(saw_out);
    CHECK(saw_sig);
    CHECK(saw_poll);
    CHECK_THROWS_AS(ensure_valid(ds), std::invalid_argument);
    CHECK(validate(small_dataset()).ok());
  }

  TEST_CASE("fingerprint is stable and sensitive") {
    auto ds = small_dataset();
    const auto fp = fingerprint(ds);
    CHECK(fp.size() == 16);
    CHECK(fingerprint(small_dataset()) == fp);
    auto tweaked = small_dataset();
    tweaked.machines[0].yes += 1;
    tweaked.machines[0].out -= 1;
    CHECK(fingerprint(tweaked) != fp);
  }

  TEST_CASE("center aggregates and shares") {
    auto ds = small_dataset();
    CHECK(ds.center_ballots(0) == 750);
    CHECK(ds.center_yes(0) == 310);
    CHECK(ds.pooled_yes_share() == doctest::Approx(520.0 / 1250.0));
    auto shares = center_yes_shares(ds);
    REQUIRE(shares.size() == 2);
    CHECK(shares[0].center_idx == 0);
    CHECK(shares[0].yes_share == doctest::Approx(310.0 / 750.0));
    CHECK(shares[1].yes_share == doctest::Approx(210.0 / 500.0));
  }

  TEST_CASE("emitted CSV serializations are canonical") {
    auto ds = small_dataset();
    const auto machines = machines_csv(ds);
    CHECK(machines.find("center_id,machine_id,nu,yes,no\n") == 0);
    CHECK(machines.find("C1,M1,400,150,240\n") != std::string::npos);
    const auto trans = transmissions_csv(ds);
    CHECK(trans.find("traffic_class") != std::string::npos);
    CHECK(trans.find("HIGH") != std::string::npos);
    TempDir dir("emit");
    emit_dataset(ds, dir.str());
    CHECK(read_file((std::filesystem::path(dir.str()) / "machines.csv").string()) == machines);
  }

  TEST_CASE("traffic class names round-trip") {
    for (auto c : {TrafficClass::high, TrafficClass::low, TrafficClass::cellular,
                   TrafficClass::unclassified}) {
      auto back = traffic_class_from_string(to_string(c));
      REQUIRE(back.has_value());
      CHECK(*back == c);
    }
    CHECK_FALSE(traffic_class_from_string("BOGUS").has_value());
  }
}
