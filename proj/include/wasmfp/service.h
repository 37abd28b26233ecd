#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "wasmfp/catalog.h"
#include "wasmfp/classifier.h"
#include "wasmfp/record_store.h"
#include "wasmfp/similarity.h"
#include "wasmfp/wasm_gen.h"

namespace wasmfp {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Request handling for the collection endpoints, independent of the HTTP
/// transport. Holds the record store and an immutable matching model.
///
///   GET  /                                probe page
///   GET  /harness.js                      probe harness (from the assets dir)
///   GET  /manifest.json                   test list, exports, iteration counts
///   GET  /wasm/{1..20}                    generated test modules
///   POST /api/fingerprint                 submit a timing vector
///   GET  /api/fingerprints                all stored records
///   GET  /api/fingerprints/{id}           one record
///   GET  /api/fingerprints/{id}/match     nearest database entry (?model=)
class CollectionService {
 public:
  struct Config {
    ClassifierConfig thresholds;
    RecordStore::Options store;
    std::shared_ptr<const SimilarityModel> model;  // may be null
    std::string assets_dir;                        // must hold harness.js
    std::uint32_t iterations = kDefaultIterations;
  };

  explicit CollectionService(Config config);

  HttpResponse probe_page() const;
  HttpResponse harness() const;
  HttpResponse manifest() const;
  HttpResponse wasm(std::string_view test_id) const;
  HttpResponse ingest(std::string_view body);
  HttpResponse list() const;
  HttpResponse get(const std::string& id) const;
  HttpResponse match(const std::string& id, std::string_view model_name) const;

  const RecordStore& store() const { return store_; }
  const Config& config() const { return config_; }

 private:
  std::optional<std::string> read_harness() const;

  Config config_;
  RecordStore store_;
  std::vector<WasmModuleBlob> modules_;
  std::string manifest_;
};

/// cpp-httplib front end for a CollectionService. Responses carry
/// cross-origin isolation headers so browsers expose their finest timer.
class HttpServer {
 public:
  explicit HttpServer(CollectionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving yet. Port 0 picks a free port. Returns the bound
  /// port; throws std::runtime_error when binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void serve();
  /// Blocks until serve() is accepting connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wasmfp
