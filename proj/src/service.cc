#include "wasmfp/service.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "wasmfp/errors.h"
#include "wasmfp/manifest.h"

namespace wasmfp {

namespace {

HttpResponse json_response(int status, const Json& body) {
  return {status, "application/json", body.dump()};
}

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

std::string random_token() {
  thread_local std::mt19937_64 rng(std::random_device{}());
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

constexpr const char* kProbePage = R"(<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>wasmfp probe</title>
<script>
window.WASMFP = {
  session: "@SESSION@",
  manifest: "/manifest.json",
  submit: "/api/fingerprint"
};
</script>
<script src="/harness.js" defer></script>
</head>
<body>
<p id="status">Running timing tests&hellip;</p>
</body>
</html>
)";

}  // namespace

CollectionService::CollectionService(Config config)
    : config_(std::move(config)), store_(config_.store), manifest_(wasm_manifest(config_.iterations).dump()) {
  modules_.reserve(kTestCount);
  for (int id = 1; id <= static_cast<int>(kTestCount); ++id)
    modules_.push_back(emit_module(id));
}

std::optional<std::string> CollectionService::read_harness() const {
  if (config_.assets_dir.empty())
    return std::nullopt;
  std::ifstream in(std::filesystem::path(config_.assets_dir) / "harness.js", std::ios::binary);
  if (!in)
    return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

HttpResponse CollectionService::probe_page() const {
  if (!read_harness())
    return {500, "text/plain", "probe harness missing: no harness.js under assets dir '" + config_.assets_dir + "'"};
  std::string page = kProbePage;
  page.replace(page.find("@SESSION@"), 9, random_token());
  return {200, "text/html; charset=utf-8", std::move(page)};
}

HttpResponse CollectionService::harness() const {
  auto script = read_harness();
  if (!script)
    return {500, "text/plain", "probe harness missing: no harness.js under assets dir '" + config_.assets_dir + "'"};
  return {200, "application/javascript", std::move(*script)};
}

HttpResponse CollectionService::manifest() const {
  return {200, "application/json", manifest_};
}

HttpResponse CollectionService::wasm(std::string_view test_id) const {
  int id = 0;
  auto [ptr, ec] = std::from_chars(test_id.data(), test_id.data() + test_id.size(), id);
  if (ec != std::errc() || ptr != test_id.data() + test_id.size() || id < 1 || id > static_cast<int>(kTestCount))
    return error_response(404, "no wasm module for test '" + std::string(test_id) + "'");
  const auto& bytes = modules_[static_cast<std::size_t>(id - 1)].bytes;
  return {200, "application/wasm", std::string(bytes.begin(), bytes.end())};
}

HttpResponse CollectionService::ingest(std::string_view body) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object())
    return error_response(400, "submission must be a JSON object");

  for (const char* key : {"session", "user_agent"}) {
    if (doc.contains(key) && !doc.at(key).is_string())
      return error_response(400, std::string("\"") + key + "\" must be a string");
  }
  if (!doc.contains("timings_ms") || !doc.at("timings_ms").is_array())
    return error_response(400, "\"timings_ms\" array is required");
  if (!doc.contains("test_names") || !doc.at("test_names").is_array())
    return error_response(400, "\"test_names\" array is required");

  const auto& timings = doc.at("timings_ms");
  const auto& names = doc.at("test_names");
  if (timings.size() != kTestCount || names.size() != kTestCount)
    return error_response(422, "expected " + std::to_string(kTestCount) + " timings and test names, got " +
                                   std::to_string(timings.size()) + " and " + std::to_string(names.size()));

  std::vector<double> values;
  values.reserve(kTestCount);
  for (const auto& t : timings) {
    if (!t.is_number())
      return error_response(422, "timings must be numbers");
    const double v = t.get<double>();
    if (!std::isfinite(v) || v < 0.0)
      return error_response(422, "timings must be finite and non-negative");
    values.push_back(v);
  }
  std::vector<std::string> test_list;
  for (std::size_t i = 0; i < kTestCount; ++i) {
    if (!names[i].is_string() || names[i].get<std::string>() != test_names()[i])
      return error_response(422, "test_names must list the catalog tests in order; position " + std::to_string(i) +
                                     " should be '" + test_names()[i] + "'");
    test_list.push_back(names[i].get<std::string>());
  }

  FingerprintRecord record;
  record.session = doc.value("session", "");
  record.user_agent = doc.value("user_agent", "");
  record.test_names = std::move(test_list);
  record.vector = FingerprintVector(std::move(values));
  if (doc.contains("client_hint") && !doc.at("client_hint").is_null())
    record.client_hint = doc.at("client_hint");
  try {
    record.verdict = classify(record.vector, config_.thresholds);
  } catch (const DataError&) {
    // zero getter timing: stored without a verdict
  }

  try {
    auto stored = store_.append(std::move(record));
    return json_response(201, {{"id", stored.id}, {"record", to_json(stored)}});
  } catch (const StoreError& e) {
    return error_response(503, e.what());
  }
}

HttpResponse CollectionService::list() const {
  Json records = Json::array();
  for (const auto& r : store_.list())
    records.push_back(to_json(r));
  return json_response(200, {{"count", records.size()}, {"records", std::move(records)}});
}

HttpResponse CollectionService::get(const std::string& id) const {
  auto record = store_.get(id);
  if (!record)
    return error_response(404, "unknown record " + id);
  return json_response(200, to_json(*record));
}

HttpResponse CollectionService::match(const std::string& id, std::string_view model_name) const {
  if (model_name.empty())
    model_name = "euclidean";
  if (model_name != "euclidean" && model_name != "mahalanobis" && model_name != "pca")
    return error_response(400, "model must be euclidean, mahalanobis or pca");
  auto record = store_.get(id);
  if (!record)
    return error_response(404, "unknown record " + id);
  if (!config_.model)
    return error_response(409, "no fingerprint database loaded");
  const auto& model = *config_.model;
  if (model_name == "mahalanobis" && !model.has_covariance())
    return error_response(409, "model has no covariance");
  if (model_name == "pca" && !model.has_pca())
    return error_response(409, "model has no fitted PCA basis");

  try {
    Match m;
    if (model_name == "euclidean")
      m = nearest_euclidean(record->vector, model.database());
    else if (model_name == "mahalanobis")
      m = nearest_mahalanobis(record->vector, model);
    else
      m = nearest_pca(record->vector, model);
    return json_response(200, {{"record_id", id},
                               {"model", model_name},
                               {"index", m.index},
                               {"distance", m.distance},
                               {"label", to_json(model.database().labels()[static_cast<std::size_t>(m.index)])}});
  } catch (const DataError& e) {
    return error_response(422, e.what());
  }
}

struct HttpServer::Impl {
  CollectionService& service;
  httplib::Server server;
  explicit Impl(CollectionService& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(CollectionService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  auto& svc = impl_->service;
  svr.set_default_headers({{"Cross-Origin-Opener-Policy", "same-origin"},
                           {"Cross-Origin-Embedder-Policy", "require-corp"},
                           {"Cross-Origin-Resource-Policy", "same-origin"}});

  svr.Get("/", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.probe_page()); });
  svr.Get("/harness.js", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.harness()); });
  svr.Get("/manifest.json", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.manifest()); });
  svr.Get(R"(/wasm/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.wasm(req.matches[1].str()));
  });
  svr.Post("/api/fingerprint", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.ingest(req.body));
  });
  svr.Get("/api/fingerprints", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.list()); });
  svr.Get(R"(/api/fingerprints/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.get(req.matches[1].str()));
  });
  svr.Get(R"(/api/fingerprints/([^/]+)/match)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.match(req.matches[1].str(), req.get_param_value("model")));
  });
}

HttpServer::~HttpServer() {
  stop();
}

int HttpServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    const int bound = svr.bind_to_any_port(host);
    if (bound <= 0)
      throw std::runtime_error("cannot bind to " + host);
    return bound;
  }
  if (!svr.bind_to_port(host, port))
    throw std::runtime_error("cannot bind to " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::serve() {
  impl_->server.listen_after_bind();
}

void HttpServer::wait_until_ready() const {
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running())
    impl_->server.stop();
}

}  // namespace wasmfp
