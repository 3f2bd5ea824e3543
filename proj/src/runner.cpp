#include "clipita/runner.hpp"

#include <algorithm>
#include <cmath>

#include "clipita/bm25.hpp"
#include "clipita/contrastive.hpp"
#include "clipita/synth.hpp"

namespace clipita {
namespace {

constexpr std::size_t kGeneralBatch = 8;
constexpr std::size_t kDefaultBatch = 128;

void append(std::vector<double>& out, std::span<const double> v) {
  out.insert(out.end(), v.begin(), v.end());
}

DenseMatrix stack_rows(const std::vector<const std::vector<double>*>& rows, std::size_t dim) {
  DenseMatrix m(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r]->begin(), rows[r]->end(), m.row(r).begin());
  }
  return m;
}

std::vector<double> apply_head(const ProjectionHead& head, const std::vector<double>& x) {
  const DenseMatrix z = head_apply(head, DenseMatrix(1, x.size(), x));
  return {z.data().begin(), z.data().end()};
}

// True if `ancestor` lies on the root-to-`node` chain (inclusive).
bool on_path(const CategoryTree& tree, std::string_view node, std::string_view ancestor) {
  const CategoryNode& a = tree.node(ancestor);
  const CategoryNode* n = &tree.node(node);
  while (n->depth > a.depth) n = &tree.node(*n->parent_id);
  return n->category_id == a.category_id;
}

std::vector<const ProductRecord*> split_products_of(const ProductCatalog& catalog,
                                                   const std::set<std::string>& ids) {
  std::vector<const ProductRecord*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(&catalog.at(id));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void validate(const ModalityConfig& m) {
  if (!m.use_image && !m.use_title && !m.use_attributes) {
    throw ArgumentError("at least one product modality must be enabled");
  }
}

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Bm25:
      return "bm25";
    case Experiment::ZeroShot:
      return "zeroshot";
    case Experiment::ClipI:
      return "clip-i";
    case Experiment::ClipIA:
      return "clip-ia";
    case Experiment::ClipITA:
      return "clip-ita";
  }
  return "?";
}

Experiment parse_experiment(std::string_view text) {
  for (auto e : {Experiment::Bm25, Experiment::ZeroShot, Experiment::ClipI, Experiment::ClipIA,
                 Experiment::ClipITA}) {
    if (to_string(e) == text) return e;
  }
  throw ArgumentError("unknown preset \"" + std::string(text) +
                      "\" (expected bm25, zeroshot, clip-i, clip-ia or clip-ita)");
}

bool is_trained(Experiment e) { return e != Experiment::Bm25 && e != Experiment::ZeroShot; }

ModalityConfig modality_for(Experiment e) {
  switch (e) {
    case Experiment::ClipI:
      return ModalityConfig::clip_i();
    case Experiment::ClipIA:
      return ModalityConfig::clip_ia();
    case Experiment::ClipITA:
      return ModalityConfig::clip_ita();
    default:
      throw ArgumentError("preset " + std::string(to_string(e)) + " has no projection heads");
  }
}

std::size_t TrainConfig::effective_batch_size() const {
  if (batch_size) return *batch_size;
  return eval_setting == EvalSetting::MostGeneral ? kGeneralBatch : kDefaultBatch;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (effective_batch_size() < 1) throw ArgumentError("batch size must be >= 1");
  if (!(tau > 0.0)) throw ArgumentError("tau must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("lambda must lie in [0, 1]");
  if (d_out < 1 || effective_hidden1() < 1 || effective_hidden2() < 1) {
    throw ArgumentError("head dimensions must be >= 1");
  }
  if (!(optimizer.lr > 0.0) || optimizer.beta1 < 0.0 || optimizer.beta1 >= 1.0 ||
      optimizer.beta2 < 0.0 || optimizer.beta2 >= 1.0 || !(optimizer.eps > 0.0) ||
      optimizer.weight_decay < 0.0) {
    throw ArgumentError("optimizer hyperparameters out of range");
  }
}

TextEncoder TextEncoder::from_matrix(EmbeddingMatrix matrix) {
  TextEncoder t;
  t.dim_ = matrix.dim();
  t.matrix_ = std::move(matrix);
  return t;
}

TextEncoder TextEncoder::synthetic(std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw ArgumentError("synthetic text encoder requires dim >= 2");
  TextEncoder t;
  t.dim_ = dim;
  t.seed_ = seed;
  return t;
}

std::vector<double> TextEncoder::embed(std::string_view text) const {
  if (matrix_) {
    const auto row = matrix_->row(text);
    return {row.begin(), row.end()};
  }
  return synth_text_embed(text, dim_, seed_);
}

// ---------------------------------------------------------------------------
// Encoding pipelines

std::vector<double> category_features(std::string_view name, const TextEncoder& text) {
  return text.embed(name);
}

std::vector<double> encode_category(std::string_view name, const TextEncoder& text,
                                    const ProjectionHead& category_head) {
  return apply_head(category_head, category_features(name, text));
}

std::size_t product_feature_dim(const ModalityConfig& modality, std::size_t image_dim,
                                std::size_t text_dim) {
  return (modality.use_image ? image_dim : 0) + (modality.use_title ? text_dim : 0) +
         (modality.use_attributes ? text_dim : 0);
}

std::vector<double> product_features(const ProductRecord& product, const ModalityConfig& modality,
                                     const EmbeddingMatrix& images, const TextEncoder& text) {
  validate(modality);
  std::vector<double> h;
  if (modality.use_image) {
    append(h, images.row(product.image_id));
  }
  if (modality.use_title) {
    append(h, text.embed(product.title));
  }
  if (modality.use_attributes) {
    if (product.attributes.empty()) {
      throw ValidationError("product " + product.product_id + " has no attributes");
    }
    std::vector<double> mean(text.dim(), 0.0);
    for (const auto& a : product.attributes) {
      const auto e = text.embed(a);
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e[i];
    }
    const double n = static_cast<double>(product.attributes.size());
    for (double& x : mean) x /= n;
    append(h, mean);
  }
  return h;
}

std::vector<double> encode_product(const ProductRecord& product, const ModalityConfig& modality,
                                   const EmbeddingMatrix& images, const TextEncoder& text,
                                   const ProjectionHead& product_head) {
  return apply_head(product_head, product_features(product, modality, images, text));
}

// ---------------------------------------------------------------------------
// Training

TrainedModel train(const TrainConfig& config, const ModalityConfig& modality,
                   const Dataset& data, const SplitAssignment& split,
                   const EpochCallback& on_epoch) {
  config.validate();
  validate(modality);
  if (split.train.empty()) {
    throw ArgumentError("train split is empty");
  }
  const auto products = split_products_of(data.catalog, split.train);
  const std::size_t text_dim = data.text.dim();
  const std::size_t prod_dim = product_feature_dim(modality, data.images.dim(), text_dim);

  std::vector<std::vector<double>> prod_features;
  prod_features.reserve(products.size());
  for (const auto* p : products) {
    prod_features.push_back(product_features(*p, modality, data.images, data.text));
    if (prod_features.back().size() != prod_dim) {
      throw ArgumentError("product " + p->product_id + " feature size mismatch");
    }
  }
  std::map<std::string, std::vector<double>, std::less<>> cat_features;
  auto category_row = [&](const std::string& id) -> const std::vector<double>& {
    auto it = cat_features.find(id);
    if (it == cat_features.end()) {
      auto h = category_features(data.tree.node(id).name, data.text);
      if (h.size() != text_dim) throw ArgumentError("category embedding size mismatch");
      it = cat_features.emplace(id, std::move(h)).first;
    }
    return it->second;
  };

  const Rng base(config.seed);
  Rng cat_init = base.fork(1);
  Rng prod_init = base.fork(2);
  TrainedModel model;
  model.config = config;
  model.modality = modality;
  model.category_head = init_head(text_dim, config.effective_hidden1(),
                                  config.effective_hidden2(), config.d_out, cat_init);
  model.product_head = init_head(prod_dim, config.effective_hidden1(),
                                 config.effective_hidden2(), config.d_out, prod_init);
  model.category_optimizer = AdamWState(
      config.optimizer, std::as_const(model.category_head).parameters());
  model.product_optimizer =
      AdamWState(config.optimizer, std::as_const(model.product_head).parameters());

  const std::size_t beta = config.effective_batch_size();
  std::vector<std::string> queries(products.size());
  auto sample_all = [&](Rng rng) {
    for (std::size_t i = 0; i < products.size(); ++i) {
      queries[i] =
          sample_query_category(data.tree, products[i]->leaf_category_id, config.eval_setting, rng);
    }
  };
  if (!config.resample_each_epoch) sample_all(base.fork(5000));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto e = static_cast<std::uint64_t>(epoch);
    if (config.resample_each_epoch) sample_all(base.fork(5000 + e));
    std::vector<std::size_t> order(products.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = base.fork(1000 + e);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += beta) {
      const std::size_t size = std::min(beta, order.size() - start);
      if (size < 2) continue;  // a single pair has zero loss and gradient
      std::vector<const std::vector<double>*> c_rows, p_rows;
      for (std::size_t b = 0; b < size; ++b) {
        const std::size_t i = order[start + b];
        c_rows.push_back(&category_row(queries[i]));
        p_rows.push_back(&prod_features[i]);
        model.seen_categories.insert(queries[i]);
      }
      const auto c_fwd = head_forward(model.category_head, stack_rows(c_rows, text_dim));
      const auto p_fwd = head_forward(model.product_head, stack_rows(p_rows, prod_dim));
      const auto loss = info_nce_grad(c_fwd.z, p_fwd.z, config.tau, config.lambda);
      const auto c_back = head_backward(model.category_head, c_fwd.cache, loss.d_categories);
      const auto p_back = head_backward(model.product_head, p_fwd.cache, loss.d_products);
      adamw_step(model.category_head.parameters(), c_back.grads.parameters(),
                 model.category_optimizer);
      adamw_step(model.product_head.parameters(), p_back.grads.parameters(),
                 model.product_optimizer);
      loss_sum += loss.loss.total;
      ++batches;
    }
    const double mean = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    model.epoch_losses.push_back(mean);
    model.epochs_completed = epoch + 1;
    if (on_epoch) on_epoch(epoch + 1, mean, batches);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Checkpoints

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.effective_batch_size();
  j["tau"] = c.tau;
  j["lambda"] = c.lambda;
  j["d_out"] = c.d_out;
  j["hidden1"] = c.effective_hidden1();
  j["hidden2"] = c.effective_hidden2();
  j["lr"] = c.optimizer.lr;
  j["beta1"] = c.optimizer.beta1;
  j["beta2"] = c.optimizer.beta2;
  j["eps"] = c.optimizer.eps;
  j["weight_decay"] = c.optimizer.weight_decay;
  j["setting"] = to_string(c.eval_setting);
  j["seed"] = c.seed;
  j["resample_each_epoch"] = c.resample_each_epoch;
  j["split_salt"] = c.split_salt;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.tau = j.at("tau").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.d_out = j.at("d_out").get<std::size_t>();
  c.hidden1 = j.at("hidden1").get<std::size_t>();
  c.hidden2 = j.at("hidden2").get<std::size_t>();
  c.optimizer = AdamWConfig{j.at("lr").get<double>(), j.at("beta1").get<double>(),
                            j.at("beta2").get<double>(), j.at("eps").get<double>(),
                            j.at("weight_decay").get<double>()};
  c.eval_setting = parse_eval_setting(j.at("setting").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.resample_each_epoch = j.at("resample_each_epoch").get<bool>();
  c.split_salt = j.at("split_salt").get<std::string>();
  return c;
}

namespace {

nlohmann::ordered_json modality_to_json(const ModalityConfig& m) {
  nlohmann::ordered_json j;
  j["image"] = m.use_image;
  j["title"] = m.use_title;
  j["attributes"] = m.use_attributes;
  return j;
}

ModalityConfig modality_from_json(const nlohmann::json& j) {
  return {j.at("image").get<bool>(), j.at("title").get<bool>(), j.at("attributes").get<bool>()};
}

}  // namespace

nlohmann::ordered_json checkpoint_to_json(const TrainedModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "clipita-checkpoint/1";
  j["config"] = to_json(model.config);
  j["modality"] = modality_to_json(model.modality);
  j["category_head"] = head_to_json(model.category_head);
  j["product_head"] = head_to_json(model.product_head);
  j["optimizer_state"] = {{"category", adamw_to_json(model.category_optimizer)},
                          {"product", adamw_to_json(model.product_optimizer)}};
  j["rng_seed"] = model.config.seed;
  j["epoch"] = model.epochs_completed;
  j["epoch_losses"] = model.epoch_losses;
  j["seen_categories"] = model.seen_categories;
  return j;
}

TrainedModel checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "clipita-checkpoint/1") {
      throw ParseError("unsupported checkpoint format");
    }
    TrainedModel m;
    m.config = train_config_from_json(j.at("config"));
    m.modality = modality_from_json(j.at("modality"));
    m.category_head = head_from_json(j.at("category_head"));
    m.product_head = head_from_json(j.at("product_head"));
    m.category_optimizer = adamw_from_json(j.at("optimizer_state").at("category"));
    m.product_optimizer = adamw_from_json(j.at("optimizer_state").at("product"));
    m.epochs_completed = j.at("epoch").get<int>();
    m.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    m.seen_categories = j.at("seen_categories").get<std::set<std::string>>();
    if (m.category_head.d_out() != m.product_head.d_out()) {
      throw ValidationError("checkpoint heads disagree on output dimension");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Error analysis

std::string predicted_category(const CategoryTree& tree, const ProductRecord& product,
                               std::string_view target, EvalSetting setting) {
  switch (setting) {
    case EvalSetting::MostGeneral:
      return tree.root_of(product.leaf_category_id);
    case EvalSetting::MostSpecific:
      return product.leaf_category_id;
    case EvalSetting::AllCategories: {
      auto path = subtree_path(tree, product.leaf_category_id);
      for (auto it = path.rbegin(); it != path.rend(); ++it) {
        if (!on_path(tree, target, *it)) return *it;
      }
      return product.leaf_category_id;
    }
  }
  throw ArgumentError("invalid evaluation setting");
}

DistanceAnalysis error_analysis(const std::vector<QueryResult>& results, const CategoryTree& tree,
                                const ProductCatalog& catalog, EvalSetting setting) {
  if (results.empty()) {
    throw ArgumentError("error_analysis: no query results");
  }
  DistanceAnalysis out;
  for (const auto& r : results) {
    if (r.ranked.empty()) {
      throw ArgumentError("error_analysis: query " + r.category + " retrieved nothing");
    }
    const ProductRecord& top = catalog.at(r.ranked.front().id);
    if (on_path(tree, top.leaf_category_id, r.category)) continue;
    const std::string predicted = predicted_category(tree, top, r.category, setting);
    const TreeDistance td = tree_distance(tree, r.category, predicted);
    if (td.same_tree) {
      ++out.same_tree_count;
      ++out.histogram[*td.d];
    } else {
      ++out.different_tree_count;
    }
  }
  return out;
}

SeenUnseen seen_unseen_split(const std::vector<QueryResult>& results,
                             const std::set<std::string>& seen_categories) {
  std::vector<MetricsReport> seen, unseen;
  for (const auto& r : results) {
    (seen_categories.count(r.category) ? seen : unseen).push_back(r.metrics);
  }
  return {macro_average(seen), macro_average(unseen)};
}

// ---------------------------------------------------------------------------
// Experiments

const SettingReport& ExperimentReport::at(EvalSetting s) const {
  for (const auto& r : settings) {
    if (r.setting == s) return r;
  }
  throw ArgumentError("report has no results for setting " + std::string(to_string(s)));
}

ExperimentReport run_experiment(Experiment experiment, const Dataset& data,
                                const SplitAssignment& split, const TrainedModel* model,
                                const ExperimentOptions& options) {
  if (is_trained(experiment)) {
    if (model == nullptr) {
      throw ArgumentError("preset " + std::string(to_string(experiment)) +
                          " requires a trained model");
    }
    if (!(model->modality == modality_for(experiment))) {
      throw ArgumentError("trained model modality does not match preset " +
                          std::string(to_string(experiment)));
    }
  }
  if (split.test.empty()) {
    throw ArgumentError("test split is empty");
  }
  if (options.settings.empty()) {
    throw ArgumentError("no evaluation settings requested");
  }
  const auto products = split_products_of(data.catalog, split.test);

  ExperimentReport report;
  report.experiment = experiment;
  report.eval_seed = options.eval_seed;
  if (model) {
    report.train_config = model->config;
    report.modality = model->modality;
    report.split_salt = model->config.split_salt;
  }

  // Candidate pool: one entry per test product.
  std::vector<std::string> ids;
  ids.reserve(products.size());
  for (const auto* p : products) ids.push_back(p->product_id);
  std::optional<RetrievalIndex> index;
  std::optional<Bm25Index> bm25;
  if (experiment == Experiment::Bm25) {
    std::vector<std::pair<std::string, std::string>> docs;
    for (const auto* p : products) docs.emplace_back(p->product_id, p->title);
    bm25 = build_bm25(docs, options.bm25_k1, options.bm25_b);
  } else {
    const std::size_t dim = experiment == Experiment::ZeroShot ? data.text.dim()
                                                               : model->product_head.d_out();
    DenseMatrix vectors(products.size(), dim);
    for (std::size_t i = 0; i < products.size(); ++i) {
      const auto v = experiment == Experiment::ZeroShot
                         ? data.text.embed(products[i]->title)
                         : encode_product(*products[i], model->modality, data.images, data.text,
                                          model->product_head);
      std::copy(v.begin(), v.end(), vectors.row(i).begin());
    }
    index = build_index(ids, vectors);
  }

  const MetricKs ks;
  for (const EvalSetting setting : options.settings) {
    Rng rng = Rng(options.eval_seed).fork(static_cast<std::uint64_t>(setting) + 1);
    std::set<std::string> query_ids;
    for (const auto* p : products) {
      query_ids.insert(sample_query_category(data.tree, p->leaf_category_id, setting, rng));
    }
    std::map<std::string, RelevantSet, std::less<>> relevant;
    for (const auto& c : query_ids) relevant[c];
    for (const auto* p : products) {
      for (const auto& c : subtree_path(data.tree, p->leaf_category_id)) {
        auto it = relevant.find(c);
        if (it != relevant.end()) it->second.insert(p->product_id);
      }
    }

    SettingReport sr;
    sr.setting = setting;
    std::vector<MetricsReport> per_query;
    for (const auto& c : query_ids) {
      const auto& rel = relevant.at(c);
      const std::size_t depth = std::max(ks.max_k(), rel.size());
      const std::string& name = data.tree.node(c).name;
      QueryResult q;
      q.category = c;
      q.n_relevant = rel.size();
      if (experiment == Experiment::Bm25) {
        q.ranked = bm25_top_k(*bm25, name, depth);
      } else if (experiment == Experiment::ZeroShot) {
        q.ranked = top_k(*index, category_features(name, data.text), depth);
      } else {
        q.ranked = top_k(*index, encode_category(name, data.text, model->category_head), depth);
        q.seen = model->seen_categories.count(c) > 0;
      }
      q.metrics = score_ranking(q.ranked, rel, ks);
      per_query.push_back(q.metrics);
      sr.queries.push_back(std::move(q));
    }
    sr.metrics = macro_average(per_query, ks);
    if (model) {
      sr.seen_unseen = seen_unseen_split(sr.queries, model->seen_categories);
      sr.distance = error_analysis(sr.queries, data.tree, data.catalog, setting);
    }
    report.settings.push_back(std::move(sr));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report serialization

nlohmann::ordered_json to_json(const DistanceAnalysis& d) {
  nlohmann::ordered_json j;
  j["same_tree"] = d.same_tree_count;
  j["different_tree"] = d.different_tree_count;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [k, v] : d.histogram) hist[std::to_string(k)] = v;
  j["histogram"] = hist;
  return j;
}

DistanceAnalysis distance_from_json(const nlohmann::json& j) {
  DistanceAnalysis d;
  d.same_tree_count = j.at("same_tree").get<std::size_t>();
  d.different_tree_count = j.at("different_tree").get<std::size_t>();
  for (auto it = j.at("histogram").begin(); it != j.at("histogram").end(); ++it) {
    d.histogram[std::stoi(it.key())] = it->get<std::size_t>();
  }
  return d;
}

nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(report.experiment);
  j["eval_seed"] = report.eval_seed;
  if (report.train_config) j["train_config"] = to_json(*report.train_config);
  if (report.modality) j["modality"] = modality_to_json(*report.modality);
  nlohmann::ordered_json settings = nlohmann::ordered_json::object();
  for (const auto& s : report.settings) {
    nlohmann::ordered_json sj;
    sj["metrics"] = to_json(s.metrics);
    if (s.seen_unseen) {
      sj["seen"] = to_json(s.seen_unseen->seen);
      sj["unseen"] = to_json(s.seen_unseen->unseen);
    }
    if (s.distance) sj["distance"] = to_json(*s.distance);
    settings[std::string(to_string(s.setting))] = sj;
  }
  j["settings"] = settings;
  return j;
}

nlohmann::ordered_json results_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(report.experiment);
  j["eval_seed"] = report.eval_seed;
  nlohmann::ordered_json settings = nlohmann::ordered_json::object();
  for (const auto& s : report.settings) {
    nlohmann::ordered_json queries = nlohmann::ordered_json::array();
    for (const auto& q : s.queries) {
      nlohmann::ordered_json qj;
      qj["category"] = q.category;
      if (q.seen) {
        qj["seen"] = *q.seen;
      } else {
        qj["seen"] = nullptr;
      }
      qj["n_relevant"] = q.n_relevant;
      nlohmann::ordered_json ranked = nlohmann::ordered_json::array();
      for (const auto& item : q.ranked) ranked.push_back({item.id, item.score});
      qj["ranked"] = ranked;
      qj["metrics"] = to_json(q.metrics);
      queries.push_back(qj);
    }
    settings[std::string(to_string(s.setting))] = {{"queries", queries}};
  }
  j["settings"] = settings;
  return j;
}

std::map<EvalSetting, std::vector<QueryResult>> results_from_json(const nlohmann::json& j) {
  std::map<EvalSetting, std::vector<QueryResult>> out;
  try {
    for (auto it = j.at("settings").begin(); it != j.at("settings").end(); ++it) {
      auto& list = out[parse_eval_setting(it.key())];
      for (const auto& qj : it->at("queries")) {
        QueryResult q;
        q.category = qj.at("category").get<std::string>();
        if (!qj.at("seen").is_null()) q.seen = qj.at("seen").get<bool>();
        q.n_relevant = qj.at("n_relevant").get<std::size_t>();
        for (const auto& item : qj.at("ranked")) {
          q.ranked.push_back({item.at(0).get<std::string>(), item.at(1).get<double>()});
        }
        q.metrics = metrics_from_json(qj.at("metrics"));
        list.push_back(std::move(q));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed results file: ") + e.what());
  }
  return out;
}

}  // namespace clipita
