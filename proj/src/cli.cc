#include "wasmfp/cli.h"

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "wasmfp/catalog.h"
#include "wasmfp/classifier.h"
#include "wasmfp/errors.h"
#include "wasmfp/manifest.h"
#include "wasmfp/service.h"
#include "wasmfp/similarity.h"
#include "wasmfp/simulator.h"
#include "wasmfp/wasm_gen.h"

namespace wasmfp {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool pretty = false;
};

Json read_json(const std::string& path, std::istream& in) {
  try {
    if (path == "-")
      return Json::parse(in);
    std::ifstream file(path);
    if (!file)
      throw DataError("cannot open " + path);
    return Json::parse(file);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("cannot parse " + (path == "-" ? std::string("standard input") : path) + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file)
    throw DataError("cannot write " + path);
  file << text;
  if (!file)
    throw DataError("write to " + path + " failed");
}

void emit(const Io& io, const Json& j) {
  io.out << (io.pretty ? j.dump(2) : j.dump()) << "\n";
}

// A fingerprint given as a bare array (catalog order) or as an object with
// "timings_ms" or "values" and optionally "test_names".
struct ParsedFingerprint {
  FingerprintVector vector;
  std::unordered_map<std::string, std::size_t> positions;
};

ParsedFingerprint parse_fingerprint(const Json& j) {
  try {
    ParsedFingerprint fp;
    const Json* values = nullptr;
    if (j.is_array()) {
      values = &j;
    } else if (j.is_object() && j.contains("timings_ms")) {
      values = &j.at("timings_ms");
    } else if (j.is_object() && j.contains("values")) {
      values = &j.at("values");
    } else {
      throw DataError("fingerprint JSON needs \"timings_ms\" or \"values\"");
    }
    fp.vector = FingerprintVector(values->get<std::vector<double>>());
    if (j.is_object() && j.contains("test_names")) {
      auto names = j.at("test_names").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < names.size(); ++i)
        fp.positions.emplace(names[i], i);
    } else {
      fp.positions = test_index_map();
    }
    return fp;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fingerprint JSON: ") + e.what());
  }
}

// Either a fingerprint database (classes taken from the browser label) or
// {"samples":[{"ss1":..,"ss2":..,"label":"chromium"|"other"}]}.
std::vector<LabeledRatios> parse_labeled(const Json& j) {
  if (j.is_object() && j.contains("columns"))
    return labeled_ratios(database_from_json(j));
  try {
    std::vector<LabeledRatios> out;
    for (const auto& s : j.at("samples")) {
      const auto label = s.at("label").get<std::string>();
      if (label != "chromium" && label != "other")
        throw DataError("sample label must be \"chromium\" or \"other\", got \"" + label + "\"");
      out.push_back({SetterRatios(s.at("ss1").get<double>(), s.at("ss2").get<double>()),
                     label == "chromium" ? EngineClass::chromium : EngineClass::other});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("labeled dataset must be a fingerprint database or {\"samples\":[...]}: ") +
                    e.what());
  }
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos)
    throw UsageError("--listen expects host:port, got '" + listen + "'");
  try {
    std::size_t used = 0;
    const int port = std::stoi(listen.substr(colon + 1), &used);
    if (used != listen.size() - colon - 1 || port < 0 || port > 65535)
      throw std::invalid_argument("port");
    return {listen.substr(0, colon), port};
  } catch (const std::logic_error&) {
    throw UsageError("--listen has an invalid port: '" + listen + "'");
  }
}

std::vector<ClassProfile> select_profiles(const std::string& list) {
  auto all = builtin_profiles();
  if (list == "builtin")
    return all;
  std::vector<ClassProfile> chosen;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    auto it = std::find_if(all.begin(), all.end(), [&](const ClassProfile& p) { return p.name == name; });
    if (it == all.end())
      throw UsageError("unknown profile '" + name + "'");
    chosen.push_back(*it);
  }
  if (chosen.empty())
    throw UsageError("no profiles selected");
  return chosen;
}

std::optional<PcaBasis> resolve_pca(const FingerprintDatabase& db, const std::string& pca_path, long k,
                                    std::istream& in) {
  if (!pca_path.empty())
    return pca_from_json(read_json(pca_path, in));
  if (k > 0)
    return fit_pca(db, k);
  return std::nullopt;
}

// Blocks SIGINT/SIGTERM for the calling thread (and threads it spawns) and
// stops the server once either arrives.
void stop_on_signal(HttpServer& server) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread([set, &server]() mutable {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  }).detach();
}

void print_confusion(const Io& io, const Evaluation& e) {
  io.out << "              predicted chromium  predicted other\n"
         << "chromium      " << std::setw(18) << e.tp << "  " << std::setw(15) << e.fn << "\n"
         << "other         " << std::setw(18) << e.fp << "  " << std::setw(15) << e.tn << "\n"
         << std::fixed << std::setprecision(4) << "accuracy " << e.accuracy() << "  fpr "
         << e.false_positive_rate() << "  fnr " << e.false_negative_rate() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"WebAssembly timing fingerprint toolkit", "wasmfp"};
  app.require_subcommand(1);
  app.fallthrough();
  Io io{in, out, err};
  app.add_flag("--pretty", io.pretty, "Human-readable output instead of compact JSON")->envname("WASMFP_PRETTY");

  double ss1 = ClassifierConfig::kDefaultSs1Threshold;
  double ss2 = ClassifierConfig::kDefaultSs2Threshold;
  auto add_thresholds = [&](CLI::App* sub) {
    sub->add_option("--ss1", ss1, "Threshold for scripted-setter-1 / scripted-getter-0")
        ->envname("WASMFP_SS1")
        ->capture_default_str();
    sub->add_option("--ss2", ss2, "Threshold for scripted-setter-2 / scripted-getter-0")
        ->envname("WASMFP_SS2")
        ->capture_default_str();
  };

  // serve
  auto* serve = app.add_subcommand("serve", "Run the collection HTTP service");
  std::string listen = "127.0.0.1:8080", store_path = "fingerprints.jsonl", db_path, pca_path, assets_dir;
  bool fsync = false;
  long pca_k = 0;
  std::uint32_t iterations = kDefaultIterations;
  serve->add_option("--listen", listen, "host:port")->envname("WASMFP_LISTEN")->capture_default_str();
  serve->add_option("--store", store_path, "JSON-lines record file")->envname("WASMFP_STORE")->capture_default_str();
  serve->add_flag("--fsync", fsync, "fsync after every record")->envname("WASMFP_FSYNC");
  serve->add_option("--db", db_path, "Fingerprint database JSON for matching")->envname("WASMFP_DB");
  serve->add_option("--pca", pca_path, "PCA basis JSON (from pca-fit)")->envname("WASMFP_PCA");
  serve->add_option("--pca-k", pca_k, "Fit a k-component PCA basis at startup")->envname("WASMFP_PCA_K");
  serve->add_option("--assets", assets_dir, "Directory holding harness.js")->envname("WASMFP_ASSETS");
  serve->add_option("--iterations", iterations, "Iterations per test in the manifest")
      ->envname("WASMFP_ITERATIONS")
      ->check(CLI::PositiveNumber);
  add_thresholds(serve);

  // gen-wasm
  auto* gen = app.add_subcommand("gen-wasm", "Write the 20 test modules and manifest.json");
  std::string out_dir;
  gen->add_option("--out", out_dir, "Output directory")->required()->envname("WASMFP_OUT");
  gen->add_option("--iterations", iterations, "Iterations per test in the manifest")
      ->envname("WASMFP_ITERATIONS")
      ->check(CLI::PositiveNumber);

  // classify
  auto* cls = app.add_subcommand("classify", "Chromium verdict for one fingerprint");
  std::string input;
  std::vector<double> ratios;
  cls->add_option("--input", input, "Fingerprint JSON ('-' for stdin)")->envname("WASMFP_INPUT");
  cls->add_option("--ratios", ratios, "Precomputed SS1/SG0,SS2/SG0")->delimiter(',')->expected(2);
  add_thresholds(cls);

  // fit-thresholds
  auto* fit = app.add_subcommand("fit-thresholds", "Fit classifier thresholds from labeled data");
  std::string dataset;
  std::string mode = "min";
  fit->add_option("--dataset", dataset, "Labeled dataset JSON ('-' for stdin)")
      ->required()
      ->envname("WASMFP_DATASET");
  fit->add_option("--mode", mode, "min: chromium-class minimum; grid: best accuracy")
      ->check(CLI::IsMember({"min", "grid"}))
      ->capture_default_str();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Confusion matrix of the classifier on labeled data");
  eval->add_option("--dataset", dataset, "Labeled dataset JSON ('-' for stdin)")
      ->required()
      ->envname("WASMFP_DATASET");
  add_thresholds(eval);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample a synthetic fingerprint database");
  std::string profile_list = "builtin", sim_out = "-";
  std::vector<std::size_t> per_class{10};
  std::uint64_t seed = 1;
  sim->add_option("--profiles", profile_list, "'builtin' or comma-separated profile names")
      ->envname("WASMFP_PROFILES")
      ->capture_default_str();
  sim->add_option("--per-class", per_class,
                  "One count for every profile, one per profile, or chromium,firefox totals")
      ->delimiter(',')
      ->envname("WASMFP_PER_CLASS");
  sim->add_option("--seed", seed, "RNG seed")->envname("WASMFP_SEED")->capture_default_str();
  sim->add_option("--out", sim_out, "Output file ('-' for stdout)")->envname("WASMFP_OUT")->capture_default_str();

  // match
  auto* mat = app.add_subcommand("match", "Nearest database entry for a fingerprint");
  std::string query, model_name = "euclidean";
  double ridge = -1.0;
  mat->add_option("--db", db_path, "Fingerprint database JSON")->required()->envname("WASMFP_DB");
  mat->add_option("--query", query, "Fingerprint JSON ('-' for stdin)")->required();
  mat->add_option("--model", model_name, "euclidean | inner-product | mahalanobis | pca")
      ->check(CLI::IsMember({"euclidean", "inner-product", "mahalanobis", "pca"}))
      ->capture_default_str();
  mat->add_option("--pca", pca_path, "PCA basis JSON")->envname("WASMFP_PCA");
  mat->add_option("--k", pca_k, "Fit a k-component PCA basis on the fly");
  mat->add_option("--ridge", ridge, "Covariance ridge (default 1e-6 * trace / N)");

  // pca-fit
  auto* pca = app.add_subcommand("pca-fit", "Fit a PCA basis to a fingerprint database");
  std::string pca_out = "-";
  pca->add_option("--db", db_path, "Fingerprint database JSON")->required()->envname("WASMFP_DB");
  pca->add_option("--k", pca_k, "Retained components")->required();
  pca->add_option("--out", pca_out, "Output file ('-' for stdout)")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve) {
      const auto [host, port] = parse_listen(listen);
      CollectionService::Config config;
      config.thresholds = ClassifierConfig(ss1, ss2);
      config.store = {store_path, fsync};
      config.assets_dir = assets_dir;
      config.iterations = iterations;
      if (!db_path.empty()) {
        auto db = load_database(db_path);
        auto basis = resolve_pca(db, pca_path, pca_k, in);
        config.model = std::make_shared<const SimilarityModel>(
            SimilarityModel::with_estimated_covariance(std::move(db), std::move(basis)));
      } else if (!pca_path.empty() || pca_k > 0) {
        throw UsageError("--pca and --pca-k need --db");
      }
      CollectionService service(std::move(config));
      HttpServer server(service);
      const int bound = server.bind(host, port);
      stop_on_signal(server);
      emit(io, {{"listening", host + ":" + std::to_string(bound)}, {"records", service.store().size()}});
      out.flush();
      server.serve();
      return kExitOk;
    }

    if (*gen) {
      std::filesystem::create_directories(out_dir);
      Json files = Json::array();
      for (int id = 1; id <= static_cast<int>(kTestCount); ++id) {
        const auto blob = emit_module(id);
        const auto name = wasm_file_name(id);
        write_text((std::filesystem::path(out_dir) / name).string(),
                   std::string(blob.bytes.begin(), blob.bytes.end()));
        files.push_back(name);
      }
      write_text((std::filesystem::path(out_dir) / "manifest.json").string(), wasm_manifest(iterations).dump(2) + "\n");
      emit(io, {{"out", out_dir}, {"files", std::move(files)}, {"manifest", "manifest.json"}});
      return kExitOk;
    }

    if (*cls) {
      const ClassifierConfig config(ss1, ss2);
      SetterRatios r;
      if (!ratios.empty()) {
        if (!input.empty())
          throw UsageError("give either --input or --ratios, not both");
        r = SetterRatios(ratios.at(0), ratios.at(1));
      } else if (!input.empty()) {
        const auto fp = parse_fingerprint(read_json(input, in));
        r = compute_ratios(fp.vector, fp.positions);
      } else {
        throw UsageError("classify needs --input or --ratios");
      }
      const auto verdict = is_chromium(r, config);
      if (io.pretty) {
        out << std::fixed << std::setprecision(4) << "SS1/SG0 " << verdict.ratios.ss1_over_sg0 << " (threshold "
            << config.ss1_threshold << ")\nSS2/SG0 " << verdict.ratios.ss2_over_sg0 << " (threshold "
            << config.ss2_threshold << ")\n"
            << (verdict.is_chromium ? "chromium-based\n" : "not chromium-based\n");
      } else {
        emit(io, to_json(verdict));
      }
      return kExitOk;
    }

    if (*fit) {
      const auto samples = parse_labeled(read_json(dataset, in));
      const auto report = fit_thresholds(samples, mode == "grid" ? FitMode::grid_accuracy : FitMode::chromium_minimum);
      if (io.pretty) {
        out << std::fixed << std::setprecision(4) << "ss1_threshold " << report.config.ss1_threshold
            << "\nss2_threshold " << report.config.ss2_threshold << "\nchromium " << report.chromium_count
            << "  other " << report.other_count << "\n";
        print_confusion(io, report.evaluation);
      } else {
        emit(io, to_json(report));
      }
      return kExitOk;
    }

    if (*eval) {
      const auto samples = parse_labeled(read_json(dataset, in));
      if (samples.empty())
        throw DataError("dataset is empty");
      const auto result = evaluate(samples, ClassifierConfig(ss1, ss2));
      if (io.pretty)
        print_confusion(io, result);
      else
        emit(io, to_json(result));
      return kExitOk;
    }

    if (*sim) {
      const auto profiles = select_profiles(profile_list);
      std::vector<std::size_t> counts;
      if (per_class.size() == profiles.size())
        counts = per_class;
      else if (per_class.size() == 1)
        counts.assign(profiles.size(), per_class[0]);
      else if (per_class.size() == 2)
        counts = split_engine_counts(profiles, per_class[0], per_class[1]);
      else
        throw UsageError("--per-class needs 1, 2 or " + std::to_string(profiles.size()) + " counts");
      const auto db = sample_dataset(profiles, counts, seed);
      const auto text = to_json(db).dump() + "\n";
      if (sim_out == "-")
        out << text;
      else {
        write_text(sim_out, text);
        emit(io, {{"out", sim_out}, {"columns", db.size()}, {"seed", seed}});
      }
      return kExitOk;
    }

    if (*mat) {
      auto db = load_database(db_path);
      const auto fp = parse_fingerprint(read_json(query, in));
      Match m;
      if (model_name == "euclidean") {
        m = nearest_euclidean(fp.vector, db);
      } else if (model_name == "inner-product") {
        m = nearest_inner_product(fp.vector, db);
      } else if (model_name == "mahalanobis") {
        const double r = ridge >= 0.0 ? ridge : default_ridge(db);
        auto cov = estimate_covariance(db, r);
        m = nearest_mahalanobis(fp.vector, SimilarityModel(db, std::move(cov)));
      } else {
        auto basis = resolve_pca(db, pca_path, pca_k, in);
        if (!basis)
          throw UsageError("--model pca needs --pca or --k");
        m = nearest_pca(fp.vector, SimilarityModel(db, std::nullopt, std::move(basis)));
      }
      Json result = {{"model", model_name},
                     {"index", m.index},
                     {model_name == "inner-product" ? "score" : "distance", m.distance},
                     {"label", to_json(db.labels()[static_cast<std::size_t>(m.index)])}};
      emit(io, result);
      return kExitOk;
    }

    if (*pca) {
      const auto db = load_database(db_path);
      const auto basis = fit_pca(db, pca_k);
      const auto j = to_json(basis);
      if (pca_out == "-")
        emit(io, j);
      else {
        write_text(pca_out, j.dump(2) + "\n");
        emit(io, {{"out", pca_out}, {"k", basis.k()}});
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "wasmfp: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "wasmfp: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace wasmfp
