#pragma once

// Shared test scaffolding: an in-memory dataset builder that mirrors the
// loader's derived fields (out counts, pooled official share), and a scratch
// directory that cleans up after itself.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "forensics/dataset.hpp"

namespace testutil {

struct DatasetBuilder {
  forensics::ElectionDataset ds;
  bool official_set = false;

  DatasetBuilder() {
    ds.label = "test";
    ds.official_share_source = "pooled";
  }

  DatasetBuilder& label(std::string v) {
    ds.label = std::move(v);
    return *this;
  }

  DatasetBuilder& official(double share) {
    ds.official_yes_share = share;
    ds.official_share_source = "provided";
    official_set = true;
    return *this;
  }

  DatasetBuilder& center(std::string id, std::string region = "R1", bool computerized = true,
                         int64_t registered = 1000, int64_t signatures = 200) {
    ds.centers.push_back(
        {std::move(id), std::move(region), computerized, registered, signatures});
    return *this;
  }

  DatasetBuilder& machine(std::string center_id, std::string machine_id, int64_t nu, int64_t yes,
                          int64_t no) {
    forensics::MachineTally m;
    m.center_id = std::move(center_id);
    m.machine_id = std::move(machine_id);
    m.nu = nu;
    m.yes = yes;
    m.no = no;
    m.out = nu - yes - no;
    ds.machines.push_back(std::move(m));
    return *this;
  }

  DatasetBuilder& poll(std::string center_id, int64_t sample_size, int64_t yes_responses,
                      std::string pollster = "P1") {
    ds.polls.push_back({std::move(center_id), std::move(pollster), sample_size, yes_responses});
    return *this;
  }

  DatasetBuilder& transmission(std::string center_id, int64_t bytes_out,
                               forensics::TrafficClass cls = forensics::TrafficClass::unclassified,
                               int64_t session_start = 1100000000, int64_t duration = 60,
                               int64_t bytes_in = 128, int64_t packets_in = 10,
                               int64_t packets_out = 20) {
    forensics::TransmissionRecord t;
    t.center_id = std::move(center_id);
    t.session_start = session_start;
    t.session_end = session_start + duration;
    t.bytes_in = bytes_in;
    t.bytes_out = bytes_out;
    t.packets_in = packets_in;
    t.packets_out = packets_out;
    t.traffic_class = cls;
    ds.transmissions.push_back(std::move(t));
    return *this;
  }

  forensics::ElectionDataset build() {
    forensics::ElectionDataset out = ds;
    out.reindex();
    if (!official_set) out.official_yes_share = out.pooled_yes_share();
    return out;
  }
};

inline std::atomic<int>& tempdir_counter() {
  static std::atomic<int> counter{0};
  return counter;
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("forensics_test_" + tag + "_" + std::to_string(tempdir_counter()++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path.string(); }

  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    out.close();
    return p.string();
  }
};

}  // namespace testutil
