#include "clipita/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clipita/cattree.hpp"
#include "clipita/common.hpp"
#include "clipita/dataio.hpp"
#include "clipita/runner.hpp"
#include "clipita/synth.hpp"

namespace clipita::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kProducts = "products.jsonl";
constexpr const char* kCategories = "categories.jsonl";
constexpr const char* kImages = "image_embeddings.jsonl";
constexpr const char* kTexts = "text_embeddings.jsonl";

// Write-then-rename so a failed run never leaves a truncated artifact.
void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw Error("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error("output directory " + dir.string() + " does not exist");
  }
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ArgumentError("expected a boolean, got \"" + s + "\"");
}

std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

// ---------------------------------------------------------------------------
// Data loading shared by train/eval/analyze

struct DataOptions {
  std::string dir;
  std::size_t text_dim = 96;
  std::uint64_t text_seed = 0;
};

void add_data_options(CLI::App* sub, DataOptions& d) {
  sub->add_option("--data", d.dir,
                  "Directory with products.jsonl, categories.jsonl, image_embeddings.jsonl "
                  "and optionally text_embeddings.jsonl")
      ->required();
  sub->add_option("--text-dim", d.text_dim,
                  "Synthetic text encoder dimension, used when text_embeddings.jsonl is absent")
      ->capture_default_str();
  sub->add_option("--text-seed", d.text_seed, "Synthetic text encoder seed")
      ->capture_default_str();
}

Dataset load_dataset(const DataOptions& d) {
  const fs::path dir(d.dir);
  Dataset data;
  data.tree = build_tree(load_categories(dir / kCategories));
  data.catalog = load_products(dir / kProducts);
  validate_catalog(data.catalog, data.tree);
  data.images = load_embeddings(dir / kImages);
  if (fs::exists(dir / kTexts)) {
    data.text = TextEncoder::from_matrix(load_embeddings(dir / kTexts));
  } else {
    data.text = TextEncoder::synthetic(d.text_dim, d.text_seed);
  }
  return data;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenOptions {
  std::string out;
  SynthParams params;
  std::string attr_informative = "true";
  std::string title_informative = "true";
  std::uint64_t text_seed = 0;
};

void add_gen(CLI::App& app, GenOptions& o) {
  auto* sub = app.add_subcommand("gen-data", "Generate a synthetic catalog with planted structure");
  sub->add_option("--out", o.out, "Existing output directory")->required();
  sub->add_option("--n-products", o.params.n_products, "Number of products")
      ->capture_default_str();
  sub->add_option("--n-trees", o.params.n_trees, "Number of root categories")
      ->capture_default_str();
  sub->add_option("--max-depth", o.params.max_depth, "Maximum chain depth, in [2, 9]")
      ->capture_default_str();
  sub->add_option("--image-dim", o.params.image_dim, "Image embedding dimension")
      ->capture_default_str();
  sub->add_option("--text-dim", o.params.text_dim, "Text embedding dimension")
      ->capture_default_str();
  sub->add_option("--noise-sigma", o.params.noise_sigma, "Image noise around leaf centroids")
      ->capture_default_str();
  sub->add_option("--products-per-leaf", o.params.products_per_leaf,
                  "Mean products per leaf category")
      ->capture_default_str();
  sub->add_option("--attr-informative", o.attr_informative,
                  "Draw attributes from leaf-specific pools (true/false)")
      ->capture_default_str();
  sub->add_option("--title-informative", o.title_informative,
                  "Put the leaf category name in titles (true/false)")
      ->capture_default_str();
  sub->add_option("--seed", o.params.seed, "Generator seed")->capture_default_str();
  sub->add_option("--text-seed", o.text_seed, "Synthetic text encoder seed")
      ->capture_default_str();
}

void cmd_gen_data(GenOptions o, std::ostream& out) {
  const fs::path dir(o.out);
  require_dir(dir);
  o.params.attr_informative = parse_bool(o.attr_informative);
  o.params.title_informative = parse_bool(o.title_informative);
  const SynthDataset ds = synth_catalog(o.params);
  const EmbeddingMatrix texts =
      synth_text_embeddings(ds.catalog, ds.categories, o.params.text_dim, o.text_seed);

  std::ostringstream products, categories, images, text;
  write_products(products, ds.catalog);
  write_categories(categories, ds.categories);
  write_embeddings(images, ds.images);
  write_embeddings(text, texts);
  write_file(dir / kProducts, products.str());
  write_file(dir / kCategories, categories.str());
  write_file(dir / kImages, images.str());
  write_file(dir / kTexts, text.str());
  out << "wrote " << ds.catalog.size() << " products, " << ds.categories.size()
      << " categories (" << ds.tree.roots().size() << " roots, " << ds.centroids.size()
      << " leaves) to " << dir.string() << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  DataOptions data;
  std::string preset = "clip-ita";
  std::string setting = "most-specific";
  TrainConfig config;
  std::size_t batch_size = 0;
  std::size_t hidden1 = 0;
  std::size_t hidden2 = 0;
  std::string resample = "true";
  std::string out;
  std::string log;
};

void add_train(CLI::App& app, TrainOptions& o) {
  auto* sub = app.add_subcommand("train", "Train the category and product projection heads");
  add_data_options(sub, o.data);
  sub->add_option("--preset", o.preset, "clip-i, clip-ia or clip-ita")->capture_default_str();
  sub->add_option("--setting", o.setting,
                  "Query granularity: all-categories, most-general or most-specific")
      ->capture_default_str();
  sub->add_option("--epochs", o.config.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--batch-size", o.batch_size,
                  "Batch size; 0 = 8 for most-general, 128 otherwise")
      ->capture_default_str();
  sub->add_option("--tau", o.config.tau, "Softmax temperature")->capture_default_str();
  sub->add_option("--lambda", o.config.lambda, "Weight of the product-to-category term")
      ->capture_default_str();
  sub->add_option("--d-out", o.config.d_out, "Shared embedding dimension")
      ->capture_default_str();
  sub->add_option("--hidden1", o.hidden1, "First hidden width; 0 = 2 * d-out")
      ->capture_default_str();
  sub->add_option("--hidden2", o.hidden2, "Second hidden width; 0 = 2 * d-out")
      ->capture_default_str();
  sub->add_option("--lr", o.config.optimizer.lr, "AdamW learning rate")->capture_default_str();
  sub->add_option("--beta1", o.config.optimizer.beta1, "AdamW beta1")->capture_default_str();
  sub->add_option("--beta2", o.config.optimizer.beta2, "AdamW beta2")->capture_default_str();
  sub->add_option("--eps", o.config.optimizer.eps, "AdamW epsilon")->capture_default_str();
  sub->add_option("--weight-decay", o.config.optimizer.weight_decay, "AdamW weight decay")
      ->capture_default_str();
  sub->add_option("--seed", o.config.seed, "Training seed")->capture_default_str();
  sub->add_option("--split-salt", o.config.split_salt, "Salt of the 80/10/10 product split")
      ->capture_default_str();
  sub->add_option("--resample-each-epoch", o.resample,
                  "Re-draw all-categories queries each epoch (true/false)")
      ->capture_default_str();
  sub->add_option("--out", o.out, "Checkpoint path")->required();
  sub->add_option("--log", o.log, "Training log path (default: <out>.log)");
}

void cmd_train(TrainOptions o, std::ostream& out) {
  const Experiment experiment = parse_experiment(o.preset);
  const ModalityConfig modality = modality_for(experiment);
  TrainConfig cfg = o.config;
  cfg.eval_setting = parse_eval_setting(o.setting);
  if (o.batch_size) cfg.batch_size = o.batch_size;
  if (o.hidden1) cfg.hidden1 = o.hidden1;
  if (o.hidden2) cfg.hidden2 = o.hidden2;
  cfg.resample_each_epoch = parse_bool(o.resample);
  cfg.validate();

  const Dataset data = load_dataset(o.data);
  const SplitAssignment split = split_products(data.catalog, cfg.split_salt);
  std::ostringstream log;
  log << "preset " << o.preset << " setting " << to_string(cfg.eval_setting) << " batch "
      << cfg.effective_batch_size() << " train " << split.train.size() << "\n";
  out << log.str();
  const TrainedModel model =
      train(cfg, modality, data, split, [&](int epoch, double loss, std::size_t batches) {
        std::ostringstream line;
        line << "epoch " << epoch << " mean_loss " << std::setprecision(10) << loss
             << " batches " << batches << "\n";
        out << line.str();
        log << line.str();
      });
  write_file(o.out, checkpoint_to_json(model).dump() + "\n");
  write_file(o.log.empty() ? o.out + ".log" : o.log, log.str());
  out << "checkpoint written to " << o.out << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  DataOptions data;
  std::string preset;
  std::string checkpoint;
  std::string setting;
  std::uint64_t seed = 0;
  std::string split_salt;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  std::string out_dir;
};

void add_eval(CLI::App& app, EvalOptions& o) {
  auto* sub = app.add_subcommand("eval", "Evaluate a trained model or a baseline on the test split");
  add_data_options(sub, o.data);
  sub->add_option("--preset", o.preset, "bm25, zeroshot, clip-i, clip-ia or clip-ita")
      ->required();
  sub->add_option("--checkpoint", o.checkpoint, "Checkpoint (required for clip-* presets)");
  sub->add_option("--setting", o.setting,
                  "all-categories, most-general, most-specific or every "
                  "(default: the checkpoint's setting, else most-specific)");
  sub->add_option("--seed", o.seed, "Query sampling seed")->capture_default_str();
  sub->add_option("--split-salt", o.split_salt,
                  "Split salt (default: the checkpoint's, else s0)");
  sub->add_option("--bm25-k1", o.bm25_k1, "BM25 k1")->capture_default_str();
  sub->add_option("--bm25-b", o.bm25_b, "BM25 b")->capture_default_str();
  sub->add_option("--out-dir", o.out_dir,
                  "Existing directory for report.json, report.txt, results.json")
      ->required();
}


std::string render_table(const std::vector<std::pair<std::string, const MetricsReport*>>& rows) {
  const std::vector<std::string> cols{"P@1", "P@5", "P@10", "MAP@5", "MAP@10", "R-precision"};
  std::size_t label_w = 5;
  for (const auto& [label, _] : rows) label_w = std::max(label_w, label.size());
  std::ostringstream ss;
  ss << std::left << std::setw(static_cast<int>(label_w)) << "Model";
  for (const auto& c : cols) ss << "  " << std::right << std::setw(11) << c;
  ss << "  " << std::right << std::setw(9) << "queries" << "\n";
  for (const auto& [label, m] : rows) {
    ss << std::left << std::setw(static_cast<int>(label_w)) << label;
    std::vector<std::string> vals;
    if (m->empty()) {
      vals.assign(cols.size(), "n/a");
    } else {
      vals = {fmt_pct(m->p_at.at(1)),  fmt_pct(m->p_at.at(5)),   fmt_pct(m->p_at.at(10)),
              fmt_pct(m->map_at.at(5)), fmt_pct(m->map_at.at(10)), fmt_pct(m->r_precision)};
    }
    for (const auto& v : vals) ss << "  " << std::right << std::setw(11) << v;
    ss << "  " << std::right << std::setw(9) << m->n_queries << "\n";
  }
  return ss.str();
}

void cmd_eval(const EvalOptions& o, std::ostream& out) {
  const fs::path dir(o.out_dir);
  require_dir(dir);
  const Experiment experiment = parse_experiment(o.preset);
  std::optional<TrainedModel> model;
  if (is_trained(experiment)) {
    if (o.checkpoint.empty()) {
      throw ArgumentError("preset " + o.preset + " requires --checkpoint");
    }
    model = checkpoint_from_json(nlohmann::json::parse(read_file(o.checkpoint)));
    if (!(model->modality == modality_for(experiment))) {
      throw ArgumentError("checkpoint " + o.checkpoint + " was not trained with preset " +
                          o.preset);
    }
  }
  ExperimentOptions opts;
  opts.eval_seed = o.seed;
  opts.bm25_k1 = o.bm25_k1;
  opts.bm25_b = o.bm25_b;
  std::string setting = o.setting;
  if (setting.empty()) {
    setting = model ? std::string(to_string(model->config.eval_setting)) : "most-specific";
  }
  if (setting == "every") {
    opts.settings.assign(std::begin(kAllSettings), std::end(kAllSettings));
  } else {
    opts.settings = {parse_eval_setting(setting)};
  }
  std::string salt = o.split_salt;
  if (salt.empty()) salt = model ? model->config.split_salt : "s0";

  const Dataset data = load_dataset(o.data);
  const SplitAssignment split = split_products(data.catalog, salt);
  const ExperimentReport report =
      run_experiment(experiment, data, split, model ? &*model : nullptr, opts);

  std::ostringstream table;
  for (const auto& s : report.settings) {
    table << "# " << to_string(s.setting) << "\n";
    table << render_table({{o.preset, &s.metrics}}) << "\n";
  }
  write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_file(dir / "results.json", results_to_json(report).dump() + "\n");
  write_file(dir / "report.txt", table.str());
  out << table.str();
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  DataOptions data;
  std::string results;
  std::string out_dir;
};

void add_analyze(CLI::App& app, AnalyzeOptions& o) {
  auto* sub = app.add_subcommand("analyze",
                                 "Error analysis: same/different tree counts, depth-distance "
                                 "histogram, seen vs unseen categories");
  add_data_options(sub, o.data);
  sub->add_option("--results", o.results, "results.json written by eval")->required();
  sub->add_option("--out-dir", o.out_dir, "Existing output directory")->required();
}

void cmd_analyze(const AnalyzeOptions& o, std::ostream& out) {
  const fs::path dir(o.out_dir);
  require_dir(dir);
  if (!fs::exists(o.results)) {
    throw Error("results file " + o.results + " does not exist");
  }
  const auto results_json = nlohmann::json::parse(read_file(o.results));
  const auto results = results_from_json(results_json);
  const std::string experiment = results_json.at("experiment").get<std::string>();
  const Dataset data = load_dataset(o.data);

  nlohmann::ordered_json analysis;
  analysis["experiment"] = experiment;
  nlohmann::ordered_json settings = nlohmann::ordered_json::object();
  std::ostringstream seen_table;
  for (const auto& [setting, queries] : results) {
    const std::string name(to_string(setting));
    nlohmann::ordered_json sj;
    DistanceAnalysis dist;
    if (!queries.empty()) dist = error_analysis(queries, data.tree, data.catalog, setting);
    sj["distance"] = to_json(dist);

    std::ostringstream csv;
    csv << "d,count\n";
    for (const auto& [d, count] : dist.histogram) csv << d << "," << count << "\n";
    write_file(dir / ("histogram_" + name + ".csv"), csv.str());

    bool has_seen_flags = !queries.empty();
    std::set<std::string> seen;
    for (const auto& q : queries) {
      if (!q.seen) {
        has_seen_flags = false;
      } else if (*q.seen) {
        seen.insert(q.category);
      }
    }
    seen_table << "# " << name << "\n";
    if (has_seen_flags) {
      const SeenUnseen su = seen_unseen_split(queries, seen);
      sj["seen"] = to_json(su.seen);
      sj["unseen"] = to_json(su.unseen);
      seen_table << render_table({{experiment + " (unseen cat.)", &su.unseen},
                                  {experiment + " (seen cat.)", &su.seen}});
    } else {
      sj["seen"] = nullptr;
      sj["unseen"] = nullptr;
      seen_table << "n/a (no training-time category information)\n";
    }
    seen_table << "\n";
    settings[name] = sj;
    out << name << ": same_tree " << dist.same_tree_count << " different_tree "
        << dist.different_tree_count << "\n";
  }
  analysis["settings"] = settings;
  write_file(dir / "analysis.json", analysis.dump(2) + "\n");
  write_file(dir / "seen_unseen.txt", seen_table.str());
  out << seen_table.str();
}

// ---------------------------------------------------------------------------

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Inserts config-file values ahead of the command-line flags they do not
// conflict with.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
  const auto path = find_config_path(args);
  if (!path || args.size() < 2) return args;
  CLI::App* sub = app.get_subcommand(args[1]);
  std::set<std::string> known;
  for (const CLI::Option* opt : sub->get_options()) {
    for (const auto& n : opt->get_lnames()) known.insert(n);
  }
  known.erase("config");
  known.erase("help");
  const auto entries = parse_config_text(read_file(*path), *path);
  std::vector<std::string> merged{args[0], args[1]};
  for (const auto& [key, value] : entries) {
    if (!known.count(key)) {
      throw ParseError(*path + ": unknown key \"" + key + "\" for " + args[1]);
    }
    if (!given_on_command_line(args, key)) {
      merged.push_back("--" + key);
      merged.push_back(value);
    }
  }
  merged.insert(merged.end(), args.begin() + 2, args.end());
  return merged;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ":" + std::to_string(n) + ": expected key = value");
    }
    std::string key = normalize_key(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(n) + ": empty key");
    if (!seen.insert(key).second) {
      throw ParseError(source + ":" + std::to_string(n) + ": duplicate key " + key);
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Category-to-image retrieval with multimodal product representations"};
  app.require_subcommand(1);
  GenOptions gen;
  TrainOptions tr;
  EvalOptions ev;
  AnalyzeOptions an;
  add_gen(app, gen);
  add_train(app, tr);
  add_eval(app, ev);
  add_analyze(app, an);
  std::string config_path;
  for (CLI::App* sub : app.get_subcommands({})) {
    sub->add_option("--config", config_path,
                    "File of `key = value` lines (# comments); flags override it");
  }

  try {
    std::vector<std::string> merged = args;
    if (args.size() >= 2) {
      // Unknown subcommands fall through to the parser, which reports them.
      for (const CLI::App* sub : app.get_subcommands({})) {
        if (sub->get_name() == args[1]) merged = merge_config(args, app);
      }
    }
    std::vector<const char*> argv;
    for (const auto& a : merged) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err);
    }
    if (app.got_subcommand("gen-data")) {
      cmd_gen_data(gen, out);
    } else if (app.got_subcommand("train")) {
      cmd_train(tr, out);
    } else if (app.got_subcommand("eval")) {
      cmd_eval(ev, out);
    } else if (app.got_subcommand("analyze")) {
      cmd_analyze(an, out);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace clipita::cli
