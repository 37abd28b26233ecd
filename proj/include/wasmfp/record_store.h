#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "wasmfp/classifier.h"
#include "wasmfp/fingerprint.h"

namespace wasmfp {

struct FingerprintRecord {
  std::string id;
  std::string received_at;  // UTC, ISO-8601 with milliseconds
  std::string session;
  std::vector<std::string> test_names;
  FingerprintVector vector;
  std::string user_agent;
  std::optional<Json> client_hint;
  std::optional<ChromiumVerdict> verdict;
};

// {"id","received_at","session","test_names","timings_ms","user_agent",
//  "client_hint","verdict"}; the last two are null when absent.
Json to_json(const FingerprintRecord& record);
FingerprintRecord record_from_json(const Json& j);

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Append-only fingerprint store backed by a JSON-lines file (one record per
/// line). Writers are serialised; readers run concurrently. An empty path
/// keeps records in memory only.
class RecordStore {
 public:
  struct Options {
    std::string path;
    bool fsync = false;
  };

  /// Replays an existing file. Throws DataError on a malformed line.
  explicit RecordStore(Options options);

  /// Assigns a fresh id and the receive time, persists, and returns the
  /// stored copy. Throws StoreError when the file write fails.
  FingerprintRecord append(FingerprintRecord record);

  std::optional<FingerprintRecord> get(const std::string& id) const;
  std::vector<FingerprintRecord> list() const;  // insertion order
  std::size_t size() const;

 private:
  std::string next_id_locked();

  Options options_;
  mutable std::shared_mutex mutex_;
  std::vector<FingerprintRecord> records_;
  std::map<std::string, std::size_t> by_id_;
  std::uint64_t id_state_;
};

std::string utc_timestamp_now();

}  // namespace wasmfp
