#include "forensics/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "forensics/csv.hpp"
#include "forensics/kv.hpp"
#include "forensics/rng.hpp"

namespace forensics {

namespace {

void require_header(const csv::Table& t, const std::vector<std::string>& expected) {
  if (t.header != expected) {
    std::string want;
    for (size_t i = 0; i < expected.size(); ++i) {
      if (i) want += ',';
      want += expected[i];
    }
    throw std::runtime_error(t.path + ": bad header (expected '" + want + "')");
  }
}

std::string where_of(const csv::Table& t, size_t row) {
  return t.path + ":" + std::to_string(t.line_numbers[row]);
}

int64_t nonneg(int64_t v, const std::string& what, const std::string& where) {
  if (v < 0) throw std::runtime_error(where + ": negative " + what + " (" +
                                      std::to_string(v) + ")");
  return v;
}

}  // namespace

std::string to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::high: return "HIGH";
    case TrafficClass::low: return "LOW";
    case TrafficClass::cellular: return "CELLULAR";
    case TrafficClass::unclassified: return "UNCLASSIFIED";
  }
  return "UNCLASSIFIED";
}

std::optional<TrafficClass> traffic_class_from_string(const std::string& s) {
  if (s == "HIGH") return TrafficClass::high;
  if (s == "LOW") return TrafficClass::low;
  if (s == "CELLULAR") return TrafficClass::cellular;
  if (s == "UNCLASSIFIED") return TrafficClass::unclassified;
  return std::nullopt;
}

void ElectionDataset::reindex() {
  center_index.clear();
  for (size_t i = 0; i < centers.size(); ++i) center_index[centers[i].center_id] = i;
  machines_by_center.assign(centers.size(), {});
  for (size_t i = 0; i < machines.size(); ++i) {
    auto it = center_index.find(machines[i].center_id);
    if (it != center_index.end()) machines_by_center[it->second].push_back(i);
  }
  polls_by_center.assign(centers.size(), {});
  for (size_t i = 0; i < polls.size(); ++i) {
    auto it = center_index.find(polls[i].center_id);
    if (it != center_index.end()) polls_by_center[it->second].push_back(i);
  }
  transmissions_by_center.assign(centers.size(), {});
  for (size_t i = 0; i < transmissions.size(); ++i) {
    auto it = center_index.find(transmissions[i].center_id);
    if (it != center_index.end()) transmissions_by_center[it->second].push_back(i);
  }
}

int64_t ElectionDataset::center_ballots(size_t center_idx) const {
  int64_t total = 0;
  for (size_t mi : machines_by_center[center_idx]) total += machines[mi].nu;
  return total;
}

int64_t ElectionDataset::center_yes(size_t center_idx) const {
  int64_t total = 0;
  for (size_t mi : machines_by_center[center_idx]) total += machines[mi].yes;
  return total;
}

double ElectionDataset::pooled_yes_share() const {
  int64_t nu = 0, yes = 0;
  for (const auto& m : machines) {
    nu += m.nu;
    yes += m.yes;
  }
  if (nu == 0) return 0.0;
  return static_cast<double>(yes) / static_cast<double>(nu);
}

ElectionDataset load_dataset(const LoadPaths& paths) {
  ElectionDataset ds;

  const auto centers_t = csv::read_table(paths.centers);
  require_header(centers_t, {"center_id", "region", "computerized", "registered", "signatures"});
  for (size_t r = 0; r < centers_t.rows.size(); ++r) {
    const auto& row = centers_t.rows[r];
    const std::string where = where_of(centers_t, r);
    VotingCenter c;
    c.center_id = row[0];
    if (c.center_id.empty()) throw std::runtime_error(where + ": empty center_id");
    c.region = row[1];
    const int64_t comp = csv::to_int64(row[2], where + " computerized");
    if (comp != 0 && comp != 1)
      throw std::runtime_error(where + ": computerized must be 0 or 1, got " + row[2]);
    c.computerized = comp == 1;
    c.registered = nonneg(csv::to_int64(row[3], where + " registered"), "registered", where);
    c.signatures = nonneg(csv::to_int64(row[4], where + " signatures"), "signatures", where);
    if (c.signatures > c.registered)
      throw std::runtime_error(where + ": signatures (" + std::to_string(c.signatures) +
                               ") exceed registered (" + std::to_string(c.registered) + ")");
    if (ds.center_index.count(c.center_id))
      throw std::runtime_error(where + ": duplicate center_id " + c.center_id);
    ds.center_index[c.center_id] = ds.centers.size();
    ds.centers.push_back(std::move(c));
  }

  const auto machines_t = csv::read_table(paths.machines);
  require_header(machines_t, {"center_id", "machine_id", "nu", "yes", "no"});
  std::map<std::pair<std::string, std::string>, bool> machine_seen;
  for (size_t r = 0; r < machines_t.rows.size(); ++r) {
    const auto& row = machines_t.rows[r];
    const std::string where = where_of(machines_t, r);
    MachineTally m;
    m.center_id = row[0];
    m.machine_id = row[1];
    if (!ds.center_index.count(m.center_id))
      throw std::runtime_error(where + ": unresolved center_id " + m.center_id);
    if (machine_seen.count({m.center_id, m.machine_id}))
      throw std::runtime_error(where + ": duplicate machine " + m.center_id + "/" +
                               m.machine_id);
    machine_seen[{m.center_id, m.machine_id}] = true;
    m.nu = nonneg(csv::to_int64(row[2], where + " nu"), "nu", where);
    m.yes = nonneg(csv::to_int64(row[3], where + " yes"), "yes", where);
    m.no = nonneg(csv::to_int64(row[4], where + " no"), "no", where);
    if (m.yes + m.no > m.nu)
      throw std::runtime_error(where + ": yes+no (" + std::to_string(m.yes + m.no) +
                               ") exceed nu (" + std::to_string(m.nu) + ")");
    m.out = m.nu - m.yes - m.no;
    ds.machines.push_back(std::move(m));
  }

  if (!paths.exitpoll.empty()) {
    const auto polls_t = csv::read_table(paths.exitpoll);
    require_header(polls_t, {"center_id", "pollster", "sample_size", "yes_responses"});
    for (size_t r = 0; r < polls_t.rows.size(); ++r) {
      const auto& row = polls_t.rows[r];
      const std::string where = where_of(polls_t, r);
      ExitPollSample p;
      p.center_id = row[0];
      p.pollster = row[1];
      if (!ds.center_index.count(p.center_id))
        throw std::runtime_error(where + ": unresolved center_id " + p.center_id);
      p.sample_size = nonneg(csv::to_int64(row[2], where + " sample_size"), "sample_size", where);
      p.yes_responses =
          nonneg(csv::to_int64(row[3], where + " yes_responses"), "yes_responses", where);
      if (p.yes_responses > p.sample_size)
        throw std::runtime_error(where + ": yes_responses (" + std::to_string(p.yes_responses) +
                                 ") exceed sample_size (" + std::to_string(p.sample_size) + ")");
      ds.polls.push_back(std::move(p));
    }
  }

  if (!paths.transmissions.empty()) {
    const auto trans_t = csv::read_table(paths.transmissions);
    require_header(trans_t, {"center_id", "session_start", "session_end", "bytes_in",
                             "bytes_out", "packets_in", "packets_out", "traffic_class"});
    for (size_t r = 0; r < trans_t.rows.size(); ++r) {
      const auto& row = trans_t.rows[r];
      const std::string where = where_of(trans_t, r);
      TransmissionRecord t;
      t.center_id = row[0];
      if (!ds.center_index.count(t.center_id))
        throw std::runtime_error(where + ": unresolved center_id " + t.center_id);
      t.session_start = csv::parse_iso8601_utc(row[1], where + " session_start");
      t.session_end = csv::parse_iso8601_utc(row[2], where + " session_end");
      if (t.session_end < t.session_start)
        throw std::runtime_error(where + ": session_end before session_start");
      t.bytes_in = nonneg(csv::to_int64(row[3], where + " bytes_in"), "bytes_in", where);
      t.bytes_out = nonneg(csv::to_int64(row[4], where + " bytes_out"), "bytes_out", where);
      t.packets_in = nonneg(csv::to_int64(row[5], where + " packets_in"), "packets_in", where);
      t.packets_out =
          nonneg(csv::to_int64(row[6], where + " packets_out"), "packets_out", where);
      const auto cls = traffic_class_from_string(row[7]);
      if (!cls)
        throw std::runtime_error(where + ": unknown traffic_class '" + row[7] + "'");
      t.traffic_class = *cls;
      ds.transmissions.push_back(std::move(t));
    }
  }

  ds.reindex();
  ds.official_yes_share = ds.pooled_yes_share();
  ds.official_share_source = "pooled";
  return ds;
}

ElectionDataset load_dataset_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  LoadPaths paths;
  paths.centers = (fs::path(dir) / "centers.csv").string();
  paths.machines = (fs::path(dir) / "machines.csv").string();
  const auto exitpoll = fs::path(dir) / "exitpoll.csv";
  if (fs::exists(exitpoll)) paths.exitpoll = exitpoll.string();
  const auto transmissions = fs::path(dir) / "transmissions.csv";
  if (fs::exists(transmissions)) paths.transmissions = transmissions.string();

  ElectionDataset ds = load_dataset(paths);
  const auto descriptor = fs::path(dir) / "dataset.toml";
  if (fs::exists(descriptor)) {
    const auto doc = kv::load(descriptor.string());
    ds.label = doc.get_string("label", ds.label);
    if (doc.has("official_yes_share")) {
      ds.official_yes_share = doc.get_double("official_yes_share");
      ds.official_share_source = "provided";
    }
  }
  return ds;
}

ValidationReport validate(const ElectionDataset& ds) {
  ValidationReport report;
  auto add = [&](const std::string& entity, const std::string& id, const std::string& msg) {
    report.violations.push_back({entity, id, msg});
  };

  std::map<std::string, int> center_ids;
  for (const auto& c : ds.centers) {
    if (c.center_id.empty()) add("center", "", "empty center_id");
    if (++center_ids[c.center_id] == 2) add("center", c.center_id, "duplicate center_id");
    if (c.registered < 0) add("center", c.center_id, "negative registered");
    if (c.signatures < 0) add("center", c.center_id, "negative signatures");
    if (c.signatures > c.registered) add("center", c.center_id, "signatures exceed registered");
  }

  std::map<std::pair<std::string, std::string>, int> machine_ids;
  for (const auto& m : ds.machines) {
    const std::string id = m.center_id + "/" + m.machine_id;
    if (!center_ids.count(m.center_id)) add("machine", id, "unresolved center_id");
    if (++machine_ids[{m.center_id, m.machine_id}] == 2) add("machine", id, "duplicate machine id");
    if (m.nu < 0 || m.yes < 0 || m.no < 0) add("machine", id, "negative count");
    if (m.yes + m.no > m.nu) add("machine", id, "yes+no exceed nu");
    if (m.out != m.nu - m.yes - m.no) add("machine", id, "stored out count inconsistent");
  }

  for (const auto& p : ds.polls) {
    const std::string id = p.center_id + "/" + p.pollster;
    if (!center_ids.count(p.center_id)) add("poll", id, "unresolved center_id");
    if (p.sample_size < 0 || p.yes_responses < 0) add("poll", id, "negative count");
    if (p.yes_responses > p.sample_size) add("poll", id, "yes_responses exceed sample_size");
  }

  for (size_t i = 0; i < ds.transmissions.size(); ++i) {
    const auto& t = ds.transmissions[i];
    const std::string id = t.center_id + "#" + std::to_string(i);
    if (!center_ids.count(t.center_id)) add("transmission", id, "unresolved center_id");
    if (t.session_end < t.session_start) add("transmission", id, "session_end before session_start");
    if (t.bytes_in < 0 || t.bytes_out < 0 || t.packets_in < 0 || t.packets_out < 0)
      add("transmission", id, "negative counter");
  }

  if (!(ds.official_yes_share >= 0.0 && ds.official_yes_share <= 1.0))
    add("dataset", ds.label, "official_yes_share outside [0,1]");

  return report;
}

void ensure_valid(const ElectionDataset& ds) {
  const auto report = validate(ds);
  if (report.ok()) return;
  const auto& first = report.violations.front();
  throw std::invalid_argument("dataset failed validation: " + first.entity + " " + first.id +
                              ": " + first.message + " (" +
                              std::to_string(report.violations.size()) + " violation(s))");
}

namespace {

std::string share_repr(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace

std::string centers_csv(const ElectionDataset& ds) {
  std::string out = "center_id,region,computerized,registered,signatures\n";
  for (const auto& c : ds.centers) {
    out += c.center_id + "," + c.region + "," + (c.computerized ? "1" : "0") + "," +
           std::to_string(c.registered) + "," + std::to_string(c.signatures) + "\n";
  }
  return out;
}

std::string machines_csv(const ElectionDataset& ds) {
  std::string out = "center_id,machine_id,nu,yes,no\n";
  for (const auto& m : ds.machines) {
    out += m.center_id + "," + m.machine_id + "," + std::to_string(m.nu) + "," +
           std::to_string(m.yes) + "," + std::to_string(m.no) + "\n";
  }
  return out;
}

std::string exitpoll_csv(const ElectionDataset& ds) {
  std::string out = "center_id,pollster,sample_size,yes_responses\n";
  for (const auto& p : ds.polls) {
    out += p.center_id + "," + p.pollster + "," + std::to_string(p.sample_size) + "," +
           std::to_string(p.yes_responses) + "\n";
  }
  return out;
}

std::string transmissions_csv(const ElectionDataset& ds) {
  std::string out =
      "center_id,session_start,session_end,bytes_in,bytes_out,packets_in,packets_out,"
      "traffic_class\n";
  for (const auto& t : ds.transmissions) {
    out += t.center_id + "," + csv::format_iso8601_utc(t.session_start) + "," +
           csv::format_iso8601_utc(t.session_end) + "," + std::to_string(t.bytes_in) + "," +
           std::to_string(t.bytes_out) + "," + std::to_string(t.packets_in) + "," +
           std::to_string(t.packets_out) + "," + to_string(t.traffic_class) + "\n";
  }
  return out;
}

void emit_dataset(const ElectionDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    out << content;
  };
  write("centers.csv", centers_csv(ds));
  write("machines.csv", machines_csv(ds));
  write("exitpoll.csv", exitpoll_csv(ds));
  write("transmissions.csv", transmissions_csv(ds));
  std::string descriptor = "label = \"" + ds.label + "\"\n";
  descriptor += "official_yes_share = " + share_repr(ds.official_yes_share) + "\n";
  write("dataset.toml", descriptor);
}

std::string fingerprint(const ElectionDataset& ds) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  };
  feed(ds.label);
  feed("|");
  feed(share_repr(ds.official_yes_share));
  feed("|");
  feed(centers_csv(ds));
  feed(machines_csv(ds));
  feed(exitpoll_csv(ds));
  feed(transmissions_csv(ds));
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::vector<CenterShare> center_yes_shares(const ElectionDataset& ds) {
  std::vector<CenterShare> out;
  for (size_t i = 0; i < ds.centers.size(); ++i) {
    const int64_t ballots = ds.center_ballots(i);
    if (ballots > 0) {
      out.push_back({i, static_cast<double>(ds.center_yes(i)) / static_cast<double>(ballots)});
    }
  }
  return out;
}

}  // namespace forensics
