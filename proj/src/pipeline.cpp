#include "taw/pipeline.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "taw/error.hpp"

namespace taw {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string hash_hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

void ExperimentConfig::validate() const {
  if (!(epsilon_days > 0.0) || !std::isfinite(epsilon_days)) throw ConfigError("epsilon days must be > 0");
  if (std::llround(epsilon_days * kSecondsPerDay) <= 0) throw ConfigError("epsilon is shorter than one second");
  eval_config().validate();
}

EvalConfig ExperimentConfig::eval_config() const {
  EvalConfig e;
  e.method = method;
  e.graph.epsilon_seconds = std::llround(epsilon_days * kSecondsPerDay);
  e.graph.self_conn_weight = self_conn_weight;
  e.graph.undirected = undirected;
  e.walk = walk;
  e.walk.seed = seed;
  e.walk.threads = 1;
  e.sgns = sgns;
  e.sgns.seed = seed;
  e.classifier = classifier;
  e.hide_fraction = hide_fraction;
  e.seeds = seeds;
  e.base_seed = seed;
  e.top_L = top_L;
  e.auc_comparisons = auc_comparisons;
  e.threads = threads;
  return e;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"input", input.string()},
          {"epsilon_days", epsilon_days},
          {"self_conn_weight", self_conn_weight},
          {"undirected", undirected},
          {"method", to_string(method)},
          {"alpha", walk.alpha},
          {"amount_strategy", to_string(walk.amount_strategy)},
          {"walks", walk.walks_per_node},
          {"length", walk.walk_length},
          {"p", walk.p},
          {"q", walk.q},
          {"dim", sgns.dim},
          {"window", sgns.window},
          {"negatives", sgns.negatives},
          {"epochs", sgns.epochs},
          {"lr_start", sgns.lr_start},
          {"lr_end", sgns.lr_end},
          {"noise_exponent", sgns.noise_exponent},
          {"lambda", sgns.historical_lambda},
          {"train_threads", sgns.threads},
          {"l2", classifier.l2},
          {"hide", hide_fraction},
          {"seeds", seeds},
          {"seed", seed},
          {"L", top_L},
          {"auc_comparisons", auc_comparisons}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.input = j.at("input").get<std::string>();
    c.epsilon_days = j.at("epsilon_days").get<double>();
    c.self_conn_weight = j.at("self_conn_weight").get<double>();
    c.undirected = j.at("undirected").get<bool>();
    c.method = parse_method(j.at("method").get<std::string>());
    c.walk.alpha = j.at("alpha").get<double>();
    c.walk.amount_strategy = parse_amount_strategy(j.at("amount_strategy").get<std::string>());
    c.walk.walks_per_node = j.at("walks").get<std::uint32_t>();
    c.walk.walk_length = j.at("length").get<std::uint32_t>();
    c.walk.p = j.at("p").get<double>();
    c.walk.q = j.at("q").get<double>();
    c.sgns.dim = j.at("dim").get<std::uint32_t>();
    c.sgns.window = j.at("window").get<std::uint32_t>();
    c.sgns.negatives = j.at("negatives").get<std::uint32_t>();
    c.sgns.epochs = j.at("epochs").get<std::uint32_t>();
    c.sgns.lr_start = j.at("lr_start").get<double>();
    c.sgns.lr_end = j.at("lr_end").get<double>();
    c.sgns.noise_exponent = j.at("noise_exponent").get<double>();
    c.sgns.historical_lambda = j.at("lambda").get<double>();
    c.sgns.threads = j.at("train_threads").get<unsigned>();
    c.classifier.l2 = j.at("l2").get<double>();
    c.hide_fraction = j.at("hide").get<double>();
    c.seeds = j.at("seeds").get<std::uint32_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.top_L = j.at("L").get<std::size_t>();
    c.auc_comparisons = j.at("auc_comparisons").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed embedded config: ") + e.what());
  }
  c.walk.seed = c.seed;
  c.sgns.seed = c.seed;
  return c;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(to_json().dump()); }

PipelineOutputs run_pipeline(const ExperimentConfig& cfg) {
  in_stage("config", [&] { cfg.validate(); });
  const auto txs = in_stage("ingest", [&] { return parse_transactions(cfg.input); });
  return run_pipeline(cfg, txs);
}

PipelineOutputs run_pipeline(const ExperimentConfig& cfg, std::span<const Transaction> txs) {
  in_stage("config", [&] { cfg.validate(); });
  const std::string hash = hash_hex(cfg.hash());
  const nlohmann::json config = cfg.to_json();

  PipelineOutputs out;
  SeedArtifacts first;
  out.report = evaluate(txs, cfg.eval_config(), &first);
  out.report.config = config;

  in_stage("write", [&] {
    std::filesystem::create_directories(cfg.out_dir);
    const std::vector<std::string> stamp{"config_hash=" + hash + " seed=" + std::to_string(cfg.seed),
                                         "config " + config.dump()};
    if (first.graph) {
      auto j = to_json(*first.graph);
      j["meta"] = {{"config_hash", hash}, {"seed", cfg.seed}, {"config", config}};
      out.artifacts.push_back(cfg.out_dir / "graph.json");
      write_file(out.artifacts.back(), dump(j));
    }
    if (first.corpus) {
      std::ostringstream s;
      write_corpus(s, *first.corpus, stamp);
      out.artifacts.push_back(cfg.out_dir / "walks.txt");
      write_file(out.artifacts.back(), s.str());
    }
    if (first.embeddings) {
      std::ostringstream s;
      write_embeddings(s, *first.embeddings, stamp);
      out.artifacts.push_back(cfg.out_dir / "embeddings.txt");
      write_file(out.artifacts.back(), s.str());
    }
    auto report = out.report.to_json();
    report["config_hash"] = hash;
    report["seed"] = cfg.seed;
    out.artifacts.push_back(cfg.out_dir / "report.json");
    write_file(out.artifacts.back(), dump(report));
  });
  return out;
}

ExperimentConfig config_from_artifact(const std::filesystem::path& artifact) {
  std::ifstream in(artifact, std::ios::binary);
  if (!in) throw DataError("cannot open " + artifact.string());
  if (artifact.extension() == ".json") {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(artifact.string() + ": " + e.what());
    }
    if (j.contains("meta")) return ExperimentConfig::from_json(j.at("meta").at("config"));
    if (j.contains("config")) return ExperimentConfig::from_json(j.at("config"));
    throw DataError(artifact.string() + ": no embedded config");
  }
  std::string line;
  while (std::getline(in, line) && line.starts_with("#")) {
    constexpr std::string_view tag = "# config ";
    if (line.starts_with(tag)) {
      try {
        return ExperimentConfig::from_json(nlohmann::json::parse(line.substr(tag.size())));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(artifact.string() + ": " + e.what());
      }
    }
  }
  throw DataError(artifact.string() + ": no embedded config");
}

namespace {

std::uint64_t combined_split_hash(const EvalReport& report) {
  std::string all;
  for (const auto& r : report.per_seed) all += hash_hex(r.split_fingerprint);
  return fnv1a(all);
}

SweepRow make_row(std::string label, const ExperimentConfig& c, EvalReport report) {
  SweepRow row;
  row.label = std::move(label);
  row.alpha = c.walk.alpha;
  row.strategy = c.walk.amount_strategy;
  row.mean = report.mean;
  row.std = report.std;
  row.split_hash = combined_split_hash(report);
  row.report = std::move(report);
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_alpha(const ExperimentConfig& cfg, std::span<const Transaction> txs,
                                  std::span<const double> alphas) {
  if (alphas.empty()) throw ConfigError("alpha sweep needs at least one value");
  for (const double a : alphas) {
    if (!(a >= kMinAlpha && a <= kMaxAlpha)) {
      throw ConfigError("alpha = " + std::to_string(a) + " violates the constraint alpha in [0.1, 0.9]");
    }
  }
  std::vector<SweepRow> rows;
  for (const double a : alphas) {
    ExperimentConfig c = cfg;
    c.walk.alpha = a;
    c.validate();
    std::ostringstream label;
    label << a;
    rows.push_back(make_row(label.str(), c, evaluate(txs, c.eval_config())));
  }
  return rows;
}

std::vector<SweepRow> sweep_strategy(const ExperimentConfig& cfg, std::span<const Transaction> txs) {
  std::vector<SweepRow> rows;
  for (const auto s : {AmountStrategy::aus, AmountStrategy::abs, AmountStrategy::als}) {
    ExperimentConfig c = cfg;
    c.walk.amount_strategy = s;
    c.validate();
    std::string label(to_string(s));
    for (auto& ch : label) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    rows.push_back(make_row(label, c, evaluate(txs, c.eval_config())));
  }
  return rows;
}

nlohmann::json sweep_to_json(std::string_view kind, const ExperimentConfig& cfg, std::span<const SweepRow> rows) {
  auto metrics = [](const Metrics& m) {
    return nlohmann::json{{"auc", m.auc}, {"ap", m.ap}, {"precision_at_L", m.precision_at_L}};
  };
  nlohmann::json out_rows = nlohmann::json::array();
  for (const auto& r : rows) {
    out_rows.push_back({{"label", r.label},
                        {"alpha", r.alpha},
                        {"amount_strategy", to_string(r.strategy)},
                        {"mean", metrics(r.mean)},
                        {"std", metrics(r.std)},
                        {"split_hash", hash_hex(r.split_hash)},
                        {"per_seed", r.report.to_json().at("per_seed")}});
  }
  return {{"sweep", kind}, {"config", cfg.to_json()}, {"config_hash", hash_hex(cfg.hash())}, {"rows", std::move(out_rows)}};
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  auto num = [](double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
  };
  std::ostringstream s;
  s << "label,alpha,strategy,mean_auc,std_auc,mean_ap,std_ap,mean_precision_at_L,std_precision_at_L\n";
  for (const auto& r : rows) {
    s << r.label << ',' << num(r.alpha) << ',' << to_string(r.strategy) << ',' << num(r.mean.auc) << ','
      << num(r.std.auc) << ',' << num(r.mean.ap) << ',' << num(r.std.ap) << ',' << num(r.mean.precision_at_L) << ','
      << num(r.std.precision_at_L) << '\n';
  }
  return s.str();
}

}  // namespace taw
