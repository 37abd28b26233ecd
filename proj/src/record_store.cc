#include "wasmfp/record_store.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>

#include "wasmfp/errors.h"

namespace wasmfp {

Json to_json(const FingerprintRecord& record) {
  Json timings = Json::array();
  for (double v : record.vector.values())
    timings.push_back(v);
  return {{"id", record.id},
          {"received_at", record.received_at},
          {"session", record.session},
          {"test_names", record.test_names},
          {"timings_ms", std::move(timings)},
          {"user_agent", record.user_agent},
          {"client_hint", record.client_hint ? *record.client_hint : Json()},
          {"verdict", record.verdict ? to_json(*record.verdict) : Json()}};
}

FingerprintRecord record_from_json(const Json& j) {
  try {
    FingerprintRecord r;
    r.id = j.at("id").get<std::string>();
    r.received_at = j.at("received_at").get<std::string>();
    r.session = j.value("session", "");
    r.test_names = j.at("test_names").get<std::vector<std::string>>();
    r.vector = FingerprintVector(j.at("timings_ms").get<std::vector<double>>());
    r.user_agent = j.value("user_agent", "");
    if (j.contains("client_hint") && !j.at("client_hint").is_null())
      r.client_hint = j.at("client_hint");
    if (j.contains("verdict") && !j.at("verdict").is_null())
      r.verdict = verdict_from_json(j.at("verdict"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

RecordStore::RecordStore(Options options) : options_(std::move(options)), id_state_(std::random_device{}()) {
  id_state_ = (id_state_ << 32) ^ std::random_device{}();
  if (options_.path.empty())
    return;
  std::ifstream in(options_.path);
  if (!in)
    return;  // created on first append
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    FingerprintRecord r;
    try {
      r = record_from_json(Json::parse(line));
    } catch (const std::exception& e) {
      throw DataError(options_.path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (by_id_.count(r.id))
      throw DataError(options_.path + ":" + std::to_string(line_no) + ": duplicate record id " + r.id);
    by_id_.emplace(r.id, records_.size());
    records_.push_back(std::move(r));
  }
}

std::string RecordStore::next_id_locked() {
  // splitmix64 over a randomly seeded counter
  for (;;) {
    std::uint64_t z = (id_state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(z));
    std::string id = std::string("fp-") + buf;
    if (!by_id_.count(id))
      return id;
  }
}

FingerprintRecord RecordStore::append(FingerprintRecord record) {
  std::unique_lock lock(mutex_);
  record.id = next_id_locked();
  record.received_at = utc_timestamp_now();

  if (!options_.path.empty()) {
    const std::string line = to_json(record).dump() + "\n";
    const int fd = ::open(options_.path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0)
      throw StoreError("cannot open " + options_.path + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < line.size()) {
      const auto n = ::write(fd, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR)
          continue;
        const int err = errno;
        ::close(fd);
        throw StoreError("write to " + options_.path + " failed: " + std::strerror(err));
      }
      written += static_cast<std::size_t>(n);
    }
    if (options_.fsync && ::fsync(fd) != 0) {
      const int err = errno;
      ::close(fd);
      throw StoreError("fsync of " + options_.path + " failed: " + std::strerror(err));
    }
    ::close(fd);
  }

  by_id_.emplace(record.id, records_.size());
  records_.push_back(record);
  return record;
}

std::optional<FingerprintRecord> RecordStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = by_id_.find(id);
  if (it == by_id_.end())
    return std::nullopt;
  return records_[it->second];
}

std::vector<FingerprintRecord> RecordStore::list() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::size_t RecordStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

}  // namespace wasmfp
