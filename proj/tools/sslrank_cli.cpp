#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sslrank/sslrank.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDegenerate = 3;

/// JSON config files: top-level scalars feed the main app, top-level objects
/// are subcommand sections. Command-line flags win over config values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json root;
    try {
      in >> root;
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw CLI::ConfigError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : root.items()) {
      if (value.is_object()) {
        for (const auto& [name, v] : value.items())
          items.push_back(make_item({key}, name, v));
      } else {
        items.push_back(make_item({}, key, value));
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem make_item(std::vector<std::string> parents,
                                   const std::string& name, const json& v) {
    CLI::ConfigItem item;
    item.parents = std::move(parents);
    item.name = name;
    if (v.is_array()) {
      for (const auto& e : v) item.inputs.push_back(scalar(e));
    } else {
      item.inputs.push_back(scalar(v));
    }
    return item;
  }
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  }
};

struct CommonOptions {
  std::string data_path, schema_path, out_dir;
  std::string method = "symbolic";
  std::string ensemble = "rf";
  std::size_t n_trees = 100;
  bool no_bootstrap = false;
  double supervision = 1.0;
  std::size_t min_leaf = 2;
  double theta = 0.5;
  std::size_t relief_k = 15;
  std::size_t relief_m = 0;
  double relief_w0 = 0.5, relief_w1 = 1.0;
  std::size_t graph_k = 10;
  double emphasis = 2.0;
  double bandwidth = 0.0;
  std::uint64_t seed = 0;
  bool strict = false;
};

void add_method_options(CLI::App* cmd, CommonOptions& o, bool require_method) {
  auto* m = cmd->add_option("--method", o.method,
                            "ranking method: symbolic|genie3|rf|relief|laplace");
  if (require_method) m->required();
  cmd->add_option("--ensemble", o.ensemble, "ensemble method: bagging|rf|et");
  cmd->add_option("--trees", o.n_trees, "number of trees");
  cmd->add_flag("--no-bootstrap", o.no_bootstrap,
                "disable bootstrapping (extra trees only)");
  cmd->add_option("--w", o.supervision, "supervision level w in [0,1]");
  cmd->add_option("--min-leaf", o.min_leaf, "minimum examples per leaf");
  cmd->add_option("--theta", o.theta, "MLC/HMLC prototype threshold");
  cmd->add_option("--relief-k", o.relief_k, "Relief neighbor count");
  cmd->add_option("--relief-m", o.relief_m, "Relief iterations (0 = dataset size)");
  cmd->add_option("--w0", o.relief_w0, "Relief influence interval lower end");
  cmd->add_option("--w1", o.relief_w1, "Relief influence interval upper end");
  cmd->add_option("--graph-k", o.graph_k, "Laplace graph neighbor count");
  cmd->add_option("--emphasis", o.emphasis, "Laplace labeled-edge emphasis (> 1)");
  cmd->add_option("--bandwidth", o.bandwidth,
                  "Laplace kernel bandwidth (0 = median pairwise distance)");
  cmd->add_flag("--strict", o.strict, "escalate numeric degeneracy warnings");
}

sslrank::PctParams pct_params(const CommonOptions& o) {
  sslrank::PctParams p;
  p.supervision = o.supervision;
  p.min_leaf_size = o.min_leaf;
  p.prototype_threshold = o.theta;
  return p;
}

sslrank::EnsembleParams ensemble_params(const CommonOptions& o) {
  sslrank::EnsembleParams e;
  e.method = sslrank::parse_ensemble_method(o.ensemble);
  e.n_trees = o.n_trees;
  e.bootstrap = !o.no_bootstrap;
  return e;
}

sslrank::ReliefParams relief_params(const CommonOptions& o) {
  sslrank::ReliefParams r;
  r.k = o.relief_k;
  r.m = o.relief_m;
  r.w0 = o.relief_w0;
  r.w1 = o.relief_w1;
  return r;
}

sslrank::LaplaceParams laplace_params(const CommonOptions& o) {
  sslrank::LaplaceParams l;
  l.neighbors = o.graph_k;
  l.labeled_emphasis = o.emphasis;
  l.bandwidth = o.bandwidth;
  return l;
}

int run_rank(const CommonOptions& o, bool has_l, std::size_t l) {
  auto d = sslrank::load_dataset(o.data_path, o.schema_path);
  if (has_l) d = sslrank::mask_labels(d, l, sslrank::mix_seed(o.seed, 11));

  const auto method = sslrank::parse_rank_method(o.method);
  sslrank::FeatureRanking ranking;
  switch (method) {
    case sslrank::RankMethod::Symbolic:
    case sslrank::RankMethod::Genie3:
    case sslrank::RankMethod::Rf: {
      auto ep = ensemble_params(o);
      ep.seed = sslrank::mix_seed(o.seed, 1);
      const auto e = sslrank::grow_ensemble(d, ep, pct_params(o));
      if (method == sslrank::RankMethod::Symbolic)
        ranking = sslrank::symbolic_score(e, d.feature_count());
      else if (method == sslrank::RankMethod::Genie3)
        ranking = sslrank::genie3_score(e, d.feature_count());
      else
        ranking = sslrank::rf_score(e, d, sslrank::mix_seed(o.seed, 2));
      break;
    }
    case sslrank::RankMethod::Relief: {
      auto rp = relief_params(o);
      rp.seed = sslrank::mix_seed(o.seed, 3);
      ranking = sslrank::ssl_relief(d, rp);
      break;
    }
    case sslrank::RankMethod::Laplace:
      ranking = sslrank::laplace_score(d, laplace_params(o));
      break;
  }

  const fs::path dir = fs::path(o.out_dir) / o.method /
                       (has_l ? std::to_string(l) : std::string("all"));
  fs::create_directories(dir);
  sslrank::write_ranking_csv(ranking, d, (dir / "ranking.csv").string());

  json meta;
  meta["method"] = o.method;
  meta["task"] = sslrank::task_name(d.targets.task);
  meta["seed"] = o.seed;
  meta["n_examples"] = d.size();
  meta["n_labeled"] = d.labeled_count();
  if (has_l) meta["L"] = l;
  meta["degenerate"] = ranking.degenerate;
  if (method == sslrank::RankMethod::Symbolic ||
      method == sslrank::RankMethod::Genie3 || method == sslrank::RankMethod::Rf) {
    meta["ensemble"] = o.ensemble;
    meta["trees"] = o.n_trees;
    meta["w"] = o.supervision;
    meta["bootstrap"] = !o.no_bootstrap;
  } else if (method == sslrank::RankMethod::Relief) {
    meta["relief_k"] = o.relief_k;
    meta["relief_m"] = o.relief_m;
    meta["w0"] = o.relief_w0;
    meta["w1"] = o.relief_w1;
  } else {
    meta["graph_k"] = o.graph_k;
    meta["emphasis"] = o.emphasis;
  }
  sslrank::write_ranking_metadata(meta, (dir / "ranking.meta.json").string());

  if (ranking.degenerate) {
    std::cerr << "warning: degenerate denominators, ranking is all zeros\n";
    if (o.strict) return kExitDegenerate;
  }
  return kExitOk;
}

int run_xval(const CommonOptions& o, std::vector<std::size_t> l_grid,
             std::vector<std::size_t> knn_ks, std::size_t x, bool grid_search,
             std::size_t jobs) {
  const auto d = sslrank::load_dataset(o.data_path, o.schema_path);

  sslrank::XvalConfig cfg;
  cfg.x = x;
  cfg.l_grid = std::move(l_grid);
  cfg.knn_ks = std::move(knn_ks);
  cfg.method = sslrank::parse_rank_method(o.method);
  cfg.ensemble = ensemble_params(o);
  cfg.pct = pct_params(o);
  cfg.relief = relief_params(o);
  cfg.laplace = laplace_params(o);
  cfg.grid_search = grid_search;
  cfg.seed = o.seed;
  cfg.jobs = jobs;

  const auto result = sslrank::run_xval(d, cfg);
  sslrank::write_xval_outputs(result, d, cfg, o.out_dir);

  bool degenerate = false;
  for (const auto& cell : result.cells)
    degenerate |= cell.ssl_ranking.degenerate || cell.sl_ranking.degenerate;
  for (const auto& c : result.curves) degenerate |= !c.valid;
  if (degenerate) {
    std::cerr << "warning: some cells hit numeric degeneracy\n";
    if (o.strict) return kExitDegenerate;
  }
  return kExitOk;
}

int run_ch(const CommonOptions& o, const std::string& out_file) {
  const auto d = sslrank::load_dataset(o.data_path, o.schema_path);
  const double ch = sslrank::ch_score(d, o.seed);
  std::cout << sslrank::csv::format_double(ch) << "\n";
  if (!out_file.empty()) {
    json out;
    out["ch"] = ch;
    out["task"] = sslrank::task_name(d.targets.task);
    out["seed"] = o.seed;
    std::ofstream f(out_file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_file);
    f << out.dump(2) << '\n';
  }
  return kExitOk;
}

int run_evaluate(const std::string& schema, const std::string& train_path,
                 const std::string& test_path, const std::string& ranking_path,
                 std::size_t k) {
  const auto train = sslrank::load_dataset(train_path, schema);
  const auto test = sslrank::load_dataset(test_path, schema);
  const auto ranking = sslrank::read_ranking_csv(ranking_path);
  if (ranking.scores.size() != train.feature_count())
    throw std::invalid_argument("ranking does not match the dataset's features");
  const auto m = sslrank::evaluate_ranking(train, test, k, ranking.scores);

  const char* metric = "f1_macro";
  if (train.targets.task == sslrank::Task::Str ||
      train.targets.task == sslrank::Task::Mtr)
    metric = "rrmse";
  else if (train.targets.task != sslrank::Task::Classification)
    metric = "auprc_micro";

  json out;
  out["metric"] = metric;
  out["k"] = k;
  out["value"] = m.value;
  out["valid"] = m.valid;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised feature ranking over predictive clustering trees"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file; command-line flags win");
  app.config_formatter(std::make_shared<JsonConfig>());

  // --config belongs to the main app; hoist it in front of the subcommand so
  // both `prog --config c.json rank` and `prog rank --config c.json` work.
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  {
    std::vector<std::string> config_args;
    for (std::size_t i = 0; i < args.size();) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        config_args.push_back(args[i]);
        config_args.push_back(args[i + 1]);
        args.erase(args.begin() + i, args.begin() + i + 2);
      } else if (args[i].rfind("--config=", 0) == 0) {
        config_args.push_back(args[i]);
        args.erase(args.begin() + i);
      } else {
        ++i;
      }
    }
    args.insert(args.begin(), config_args.begin(), config_args.end());
  }

  CommonOptions rank_opts, xval_opts, ch_opts;

  auto* rank = app.add_subcommand("rank", "compute one feature ranking");
  rank->configurable();
  std::size_t rank_l = 0;
  rank->add_option("--data", rank_opts.data_path, "data CSV")->required();
  rank->add_option("--schema", rank_opts.schema_path, "schema JSON")->required();
  rank->add_option("--out", rank_opts.out_dir, "output directory")->required();
  rank->add_option("--seed", rank_opts.seed, "master seed")->required();
  auto* l_opt = rank->add_option("--L", rank_l, "mask down to L labeled examples");
  add_method_options(rank, rank_opts, true);

  auto* xval = app.add_subcommand("xval", "label-masked cross-validation");
  xval->configurable();
  std::vector<std::size_t> l_grid{50, 100, 200, 350, 500};
  std::vector<std::size_t> knn_ks{20, 40};
  std::size_t x = 10, jobs = 1;
  bool grid_search = false;
  xval->add_option("--data", xval_opts.data_path, "data CSV")->required();
  xval->add_option("--schema", xval_opts.schema_path, "schema JSON")->required();
  xval->add_option("--out", xval_opts.out_dir, "output directory")->required();
  xval->add_option("--seed", xval_opts.seed, "master seed")->required();
  xval->add_option("--x", x, "fold count");
  xval->add_option("--L-grid", l_grid, "labeled-example grid")->expected(-1);
  xval->add_option("--knn", knn_ks, "kNN evaluation k values")->expected(-1);
  xval->add_flag("--grid", grid_search,
                 "select w (or Relief w0,w1,k) by internal 4-fold CV");
  xval->add_option("--jobs", jobs, "parallel (fold, L) jobs");
  add_method_options(xval, xval_opts, true);

  auto* ch = app.add_subcommand("ch", "clustering-hypothesis estimate");
  ch->configurable();
  std::string ch_out;
  ch->add_option("--data", ch_opts.data_path, "data CSV")->required();
  ch->add_option("--schema", ch_opts.schema_path, "schema JSON")->required();
  ch->add_option("--seed", ch_opts.seed, "master seed");
  ch->add_option("--out", ch_out, "also write a JSON result file");

  auto* evaluate = app.add_subcommand("evaluate", "score a ranking file via kNN");
  evaluate->configurable();
  std::string ev_schema, ev_train, ev_test, ev_ranking;
  std::size_t ev_k = 20;
  evaluate->add_option("--schema", ev_schema, "schema JSON")->required();
  evaluate->add_option("--train", ev_train, "training data CSV")->required();
  evaluate->add_option("--test", ev_test, "test data CSV")->required();
  evaluate->add_option("--ranking", ev_ranking, "ranking CSV")->required();
  evaluate->add_option("--k", ev_k, "number of neighbors");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (rank->parsed()) return run_rank(rank_opts, l_opt->count() > 0, rank_l);
    if (xval->parsed())
      return run_xval(xval_opts, l_grid, knn_ks, x, grid_search, jobs);
    if (ch->parsed()) return run_ch(ch_opts, ch_out);
    if (evaluate->parsed())
      return run_evaluate(ev_schema, ev_train, ev_test, ev_ranking, ev_k);
  } catch (const sslrank::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
