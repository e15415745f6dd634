// Command line front end: ingest, subgraph, synth, stats, build-tasmg, walk,
// embed, evaluate, sweep-alpha, sweep-strategy.
//
// Exit codes: 0 success, 1 usage or invalid configuration, 2 data error,
// 3 internal error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "taw/embed.hpp"
#include "taw/error.hpp"
#include "taw/ingest.hpp"
#include "taw/linkpred.hpp"
#include "taw/pipeline.hpp"
#include "taw/tasmg.hpp"
#include "taw/walker.hpp"

namespace {

using taw::ConfigError;
using taw::DataError;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

// Expands `--config FILE` into `--key=value` tokens placed before the
// remaining arguments of the subcommand, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
      consumed = 1;
    } else {
      continue;
    }
    std::istringstream lines(slurp(path));
    std::vector<std::string> injected;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      std::string key = trim(line.substr(0, eq));
      for (auto& c : key) if (c == '_') c = '-';
      injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    // Place config values right after the subcommand name (first positional).
    const std::size_t at = std::min<std::size_t>(1, args.size());
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
    break;
  }
  return args;
}

struct CommonOptions {
  taw::ExperimentConfig cfg;
  std::string method = "taw";
  std::string strategy = "aus";
};

void add_graph_options(CLI::App* sub, taw::ExperimentConfig& cfg) {
  sub->add_option("--epsilon-days", cfg.epsilon_days, "Snapshot time span in days")->capture_default_str();
  sub->add_option("--self-conn-weight", cfg.self_conn_weight, "Weight of self-connection edges")->capture_default_str();
  sub->add_flag("--undirected", cfg.undirected, "Add a reversed copy of every transaction edge");
}

void add_walk_options(CLI::App* sub, taw::WalkConfig& walk, std::string& strategy) {
  sub->add_option("--alpha", walk.alpha, "Temporal bias in [0.1, 0.9]")->capture_default_str();
  sub->add_option("--amount-strategy", strategy, "aus | abs | als")->capture_default_str();
  sub->add_option("--walks", walk.walks_per_node, "Walks per account")->capture_default_str();
  sub->add_option("--length", walk.walk_length, "Edge traversals per walk")->capture_default_str();
  sub->add_option("--p", walk.p, "node2vec return parameter")->capture_default_str();
  sub->add_option("--q", walk.q, "node2vec in-out parameter")->capture_default_str();
}

void add_sgns_options(CLI::App* sub, taw::SgnsConfig& sgns) {
  sub->add_option("--dim", sgns.dim, "Embedding dimension")->capture_default_str();
  sub->add_option("--window", sgns.window, "Context window")->capture_default_str();
  sub->add_option("--negatives", sgns.negatives, "Negative samples per pair")->capture_default_str();
  sub->add_option("--epochs", sgns.epochs)->capture_default_str();
  sub->add_option("--lr-start", sgns.lr_start)->capture_default_str();
  sub->add_option("--lr-end", sgns.lr_end)->capture_default_str();
  sub->add_option("--noise-exponent", sgns.noise_exponent)->capture_default_str();
  sub->add_option("--lambda", sgns.historical_lambda, "Weight of the per-snapshot consistency term")->capture_default_str();
  sub->add_option("--train-threads", sgns.threads, "Training threads (1 is deterministic)")->capture_default_str();
}

void add_experiment_options(CLI::App* sub, CommonOptions& o, bool with_method) {
  auto& cfg = o.cfg;
  sub->add_option("--input", cfg.input, "Transaction CSV")->required();
  if (with_method) {
    sub->add_option("--method", o.method, "taw | deepwalk | node2vec | cn | aa | ra | jaccard | random")->capture_default_str();
  }
  add_graph_options(sub, cfg);
  add_walk_options(sub, cfg.walk, o.strategy);
  add_sgns_options(sub, cfg.sgns);
  sub->add_option("--l2", cfg.classifier.l2, "Classifier L2 strength")->capture_default_str();
  sub->add_option("--hide", cfg.hide_fraction, "Fraction of linked pairs hidden")->capture_default_str();
  sub->add_option("--seeds", cfg.seeds, "Number of seeds")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Base seed")->capture_default_str();
  sub->add_option("--L", cfg.top_L, "Precision cutoff")->capture_default_str();
  sub->add_option("--auc-comparisons", cfg.auc_comparisons, "Sampled AUC comparisons (0 = exhaustive)")->capture_default_str();
  sub->add_option("--threads", cfg.threads, "Seeds evaluated concurrently")->capture_default_str();
}

void resolve(CommonOptions& o) {
  o.cfg.method = taw::parse_method(o.method);
  o.cfg.walk.amount_strategy = taw::parse_amount_strategy(o.strategy);
  o.cfg.validate();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number in list: '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-amount walks over snapshot multigraphs of transaction records", "taw"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "Flat key=value file with option values (flags override it)");

  // ingest
  std::string in_path, out_path;
  auto* ingest = app.add_subcommand("ingest", "Validate a transaction CSV and optionally re-serialize it");
  ingest->add_option("--input", in_path)->required();
  ingest->add_option("--output", out_path, "Normalized CSV");

  // subgraph
  std::string center;
  int k_in = 1, k_out = 3;
  auto* subgraph = app.add_subcommand("subgraph", "Extract the K-order subgraph around a center account");
  subgraph->add_option("--input", in_path)->required();
  subgraph->add_option("--center", center)->required();
  subgraph->add_option("--k-in", k_in)->capture_default_str();
  subgraph->add_option("--k-out", k_out)->capture_default_str();
  subgraph->add_option("--output", out_path);

  // synth
  taw::SynthParams synth_params;
  double window_days = 30.0;
  auto* synth = app.add_subcommand("synth", "Generate a community-structured temporal transaction network");
  synth->add_option("--accounts", synth_params.n_accounts)->capture_default_str();
  synth->add_option("--communities", synth_params.n_communities)->capture_default_str();
  synth->add_option("--snapshots", synth_params.n_snapshots)->capture_default_str();
  synth->add_option("--txs-per-snapshot", synth_params.txs_per_snapshot)->capture_default_str();
  synth->add_option("--intra-prob", synth_params.intra_prob)->capture_default_str();
  synth->add_option("--seed", synth_params.seed)->capture_default_str();
  synth->add_option("--window-days", window_days)->capture_default_str();
  synth->add_option("--output", out_path);

  // stats
  auto* stats = app.add_subcommand("stats", "Topological statistics of the undirected simple projection");
  stats->add_option("--input", in_path)->required();
  stats->add_option("--output", out_path);

  // build-tasmg
  taw::ExperimentConfig graph_cfg;
  auto* build = app.add_subcommand("build-tasmg", "Build the snapshot multigraph and dump it as JSON");
  build->add_option("--input", in_path)->required();
  add_graph_options(build, graph_cfg);
  build->add_option("--output", out_path);

  // walk
  std::string graph_path, walk_mode = "taw", walk_strategy = "aus", snapshot_out;
  taw::WalkConfig walk_cfg;
  auto* walk = app.add_subcommand("walk", "Generate a walk corpus from a graph dump");
  walk->add_option("--graph", graph_path)->required();
  walk->add_option("--mode", walk_mode, "taw | static_uniform | static_node2vec")->capture_default_str();
  add_walk_options(walk, walk_cfg, walk_strategy);
  walk->add_option("--seed", walk_cfg.seed)->capture_default_str();
  walk->add_option("--threads", walk_cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  walk->add_option("--output", out_path);
  walk->add_option("--snapshot-output", snapshot_out, "Sidecar with the snapshot of every token");

  // embed
  std::string corpus_path, snapshots_path;
  taw::SgnsConfig sgns_cfg;
  auto* embed = app.add_subcommand("embed", "Train Skip-Gram embeddings from a walk corpus");
  embed->add_option("--corpus", corpus_path)->required();
  embed->add_option("--snapshots", snapshots_path, "Snapshot sidecar (needed when --lambda > 0)");
  add_sgns_options(embed, sgns_cfg);
  embed->add_option("--seed", sgns_cfg.seed)->capture_default_str();
  embed->add_option("--output", out_path);

  // evaluate
  CommonOptions eval_opts;
  std::string from_artifact, out_dir;
  auto* evaluate = app.add_subcommand("evaluate", "Link-prediction evaluation over several seeds");
  add_experiment_options(evaluate, eval_opts, true);
  evaluate->add_option("--from", from_artifact, "Re-run the config embedded in a pipeline artifact");
  evaluate->add_option("--out-dir", out_dir, "Write graph, walks, embeddings and report artifacts here");
  evaluate->add_option("--output", out_path, "Report JSON (default stdout)");
  // --input is optional when replaying an artifact.
  evaluate->get_option("--input")->required(false);

  // sweeps
  CommonOptions sweep_opts;
  std::string alphas_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", csv_path;
  auto* sweep_a = app.add_subcommand("sweep-alpha", "Evaluate TAW across temporal bias values");
  add_experiment_options(sweep_a, sweep_opts, false);
  sweep_a->add_option("--alphas", alphas_text, "Comma separated values in [0.1, 0.9]")->capture_default_str();
  sweep_a->add_option("--output", out_path, "Table JSON (default stdout)");
  sweep_a->add_option("--csv", csv_path, "Plot-ready CSV series");

  auto* sweep_s = app.add_subcommand("sweep-strategy", "Evaluate TAW under AUS, ABS and ALS");
  add_experiment_options(sweep_s, sweep_opts, false);
  sweep_s->add_option("--output", out_path, "Table JSON (default stdout)");
  sweep_s->add_option("--csv", csv_path, "Plot-ready CSV series");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const taw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dynamic_cast<const DataError*>(&e) ? 2 : 1;
  }

  try {
    if (*ingest) {
      const auto txs = taw::parse_transactions(in_path);
      std::size_t loops = 0;
      for (const auto& tx : txs) loops += tx.is_self_loop();
      if (!out_path.empty()) taw::write_transactions(out_path, txs);
      std::cout << nlohmann::json{{"transactions", txs.size()}, {"self_loops", loops}}.dump() << '\n';
    } else if (*subgraph) {
      const auto txs = taw::parse_transactions(in_path);
      const auto sub = taw::k_order_subgraph(txs, center, k_in, k_out);
      std::ostringstream s;
      taw::write_transactions(s, sub);
      emit(out_path, s.str());
    } else if (*synth) {
      if (!(window_days > 0.0)) throw ConfigError("window days must be > 0");
      synth_params.window_seconds = std::llround(window_days * taw::kSecondsPerDay);
      std::ostringstream s;
      taw::write_transactions(s, taw::synth_temporal_graph(synth_params));
      emit(out_path, s.str());
    } else if (*stats) {
      const auto txs = taw::parse_transactions(in_path);
      emit(out_path, taw::to_json(taw::graph_stats(txs)).dump(2) + "\n");
    } else if (*build) {
      graph_cfg.validate();
      const auto txs = taw::parse_transactions(in_path);
      const auto opts = graph_cfg.eval_config().graph;
      const auto g = taw::build_tasmg(txs, opts);
      if (g.dropped_self_loops() > 0) {
        std::cerr << "warning: dropped " << g.dropped_self_loops() << " self-loop transaction(s)\n";
      }
      emit(out_path, taw::to_json(g).dump() + "\n");
    } else if (*walk) {
      walk_cfg.mode = taw::parse_walk_mode(walk_mode);
      walk_cfg.amount_strategy = taw::parse_amount_strategy(walk_strategy);
      walk_cfg.validate();
      nlohmann::json dumpj;
      try {
        dumpj = nlohmann::json::parse(slurp(graph_path));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(graph_path + ": " + e.what());
      }
      const auto g = taw::tasmg_from_json(dumpj);
      const auto corpus = taw::generate_walks(g, walk_cfg);
      std::ostringstream s;
      const std::vector<std::string> stamp{"walk-config " + walk_cfg.to_json().dump()};
      taw::write_corpus(s, corpus, stamp);
      emit(out_path, s.str());
      if (!snapshot_out.empty()) {
        std::ostringstream sn;
        taw::write_corpus_snapshots(sn, corpus);
        emit(snapshot_out, sn.str());
      }
    } else if (*embed) {
      sgns_cfg.validate();
      std::istringstream cin_corpus(slurp(corpus_path));
      auto corpus = taw::read_corpus(cin_corpus);
      if (!snapshots_path.empty()) {
        std::istringstream sn(slurp(snapshots_path));
        taw::read_corpus_snapshots(sn, corpus);
      }
      const auto emb = taw::train(corpus, sgns_cfg);
      std::ostringstream s;
      const std::vector<std::string> stamp{"sgns-config " + sgns_cfg.to_json().dump()};
      taw::write_embeddings(s, emb, stamp);
      emit(out_path, s.str());
    } else if (*evaluate) {
      taw::ExperimentConfig cfg;
      if (!from_artifact.empty()) {
        cfg = taw::config_from_artifact(from_artifact);
        cfg.threads = eval_opts.cfg.threads;
      } else {
        if (eval_opts.cfg.input.empty()) throw ConfigError("--input is required");
        resolve(eval_opts);
        cfg = eval_opts.cfg;
      }
      cfg.out_dir = out_dir;
      if (!out_dir.empty()) {
        const auto outputs = taw::run_pipeline(cfg);
        for (const auto& p : outputs.artifacts) std::cerr << "wrote " << p.string() << '\n';
        if (!out_path.empty()) emit(out_path, slurp((std::filesystem::path(out_dir) / "report.json").string()));
      } else {
        cfg.validate();
        const auto txs = taw::in_stage("ingest", [&] { return taw::parse_transactions(cfg.input); });
        auto report = taw::evaluate(txs, cfg.eval_config());
        report.config = cfg.to_json();
        auto j = report.to_json();
        j["config_hash"] = taw::hash_hex(cfg.hash());
        j["seed"] = cfg.seed;
        emit(out_path, j.dump(2) + "\n");
      }
    } else if (*sweep_a || *sweep_s) {
      sweep_opts.method = "taw";
      resolve(sweep_opts);
      const auto txs = taw::in_stage("ingest", [&] { return taw::parse_transactions(sweep_opts.cfg.input); });
      std::vector<taw::SweepRow> rows;
      if (*sweep_a) {
        const auto alphas = parse_list(alphas_text);
        rows = taw::sweep_alpha(sweep_opts.cfg, txs, alphas);
      } else {
        rows = taw::sweep_strategy(sweep_opts.cfg, txs);
      }
      emit(out_path, taw::sweep_to_json(*sweep_a ? "alpha" : "strategy", sweep_opts.cfg, rows).dump(2) + "\n");
      if (!csv_path.empty()) emit(csv_path, taw::sweep_to_csv(rows));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
