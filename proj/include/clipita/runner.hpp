#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clipita/cattree.hpp"
#include "clipita/dataio.hpp"
#include "clipita/nncore.hpp"
#include "clipita/retrieval.hpp"

namespace clipita {

/// Which product modalities feed the product head, concatenated in the
/// fixed order image, title, attributes.
struct ModalityConfig {
  bool use_image = true;
  bool use_title = false;
  bool use_attributes = false;

  bool operator==(const ModalityConfig&) const = default;

  static ModalityConfig clip_i() { return {true, false, false}; }
  static ModalityConfig clip_ia() { return {true, false, true}; }
  static ModalityConfig clip_ita() { return {true, true, true}; }
};

void validate(const ModalityConfig& m);

enum class Experiment { Bm25, ZeroShot, ClipI, ClipIA, ClipITA };

std::string_view to_string(Experiment e);
/// "bm25", "zeroshot", "clip-i", "clip-ia", "clip-ita".
Experiment parse_experiment(std::string_view text);
bool is_trained(Experiment e);
/// Throws ArgumentError for the baselines.
ModalityConfig modality_for(Experiment e);

struct TrainConfig {
  int epochs = 30;
  /// Unset means 8 for MostGeneral and 128 otherwise.
  std::optional<std::size_t> batch_size;
  double tau = 1.0;
  double lambda = 0.5;
  std::size_t d_out = 64;
  /// Unset means 2 * d_out.
  std::optional<std::size_t> hidden1;
  std::optional<std::size_t> hidden2;
  AdamWConfig optimizer;
  EvalSetting eval_setting = EvalSetting::MostSpecific;
  std::uint64_t seed = 0;
  /// Re-draw AllCategories query categories every epoch.
  bool resample_each_epoch = true;
  std::string split_salt = "s0";

  std::size_t effective_batch_size() const;
  std::size_t effective_hidden1() const { return hidden1.value_or(2 * d_out); }
  std::size_t effective_hidden2() const { return hidden2.value_or(2 * d_out); }
  void validate() const;
};

/// Text-side frozen encoder: exact lookup in a precomputed embedding file,
/// or the deterministic synthetic encoder.
class TextEncoder {
 public:
  static TextEncoder from_matrix(EmbeddingMatrix matrix);
  static TextEncoder synthetic(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const noexcept { return dim_; }
  /// Throws ValidationError if a file-backed encoder lacks the text.
  std::vector<double> embed(std::string_view text) const;

 private:
  std::optional<EmbeddingMatrix> matrix_;
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
};

struct Dataset {
  ProductCatalog catalog;
  CategoryTree tree;
  EmbeddingMatrix images;  // keyed by image_id
  TextEncoder text;
};

/// h_c: the category name through the text encoder.
std::vector<double> category_features(std::string_view name, const TextEncoder& text);
/// c = g_c(h_c).
std::vector<double> encode_category(std::string_view name, const TextEncoder& text,
                                    const ProjectionHead& category_head);

/// h_p = concat of enabled parts; the attribute part is the mean of the
/// per-attribute embeddings.
std::vector<double> product_features(const ProductRecord& product, const ModalityConfig& modality,
                                     const EmbeddingMatrix& images, const TextEncoder& text);
std::size_t product_feature_dim(const ModalityConfig& modality, std::size_t image_dim,
                                std::size_t text_dim);
/// p = g_p(h_p).
std::vector<double> encode_product(const ProductRecord& product, const ModalityConfig& modality,
                                   const EmbeddingMatrix& images, const TextEncoder& text,
                                   const ProjectionHead& product_head);

struct TrainedModel {
  ProjectionHead category_head;
  ProjectionHead product_head;
  AdamWState category_optimizer;
  AdamWState product_optimizer;
  ModalityConfig modality;
  std::set<std::string> seen_categories;
  TrainConfig config;
  int epochs_completed = 0;
  /// Mean batch loss per epoch.
  std::vector<double> epoch_losses;
};

using EpochCallback = std::function<void(int epoch, double mean_loss, std::size_t batches)>;

/// Contrastive training of both heads on the train split.
TrainedModel train(const TrainConfig& config, const ModalityConfig& modality,
                   const Dataset& data, const SplitAssignment& split,
                   const EpochCallback& on_epoch = {});

nlohmann::ordered_json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const nlohmann::json& j);

struct DistanceAnalysis {
  std::size_t same_tree_count = 0;
  std::size_t different_tree_count = 0;
  /// Signed depth difference -> count, same-tree errors only.
  std::map<int, std::size_t> histogram;

  bool operator==(const DistanceAnalysis&) const = default;
};

struct QueryResult {
  std::string category;
  /// Unset for baselines (nothing was trained).
  std::optional<bool> seen;
  std::size_t n_relevant = 0;
  RankedList ranked;
  MetricsReport metrics;  // single-query report
};

/// The category predicted by a retrieved product at the query's granularity.
std::string predicted_category(const CategoryTree& tree, const ProductRecord& product,
                               std::string_view target, EvalSetting setting);

/// Same-tree/different-tree counts and d-histogram over wrong top-1
/// predictions. Throws ArgumentError for empty results or an empty ranking.
DistanceAnalysis error_analysis(const std::vector<QueryResult>& results,
                                const CategoryTree& tree, const ProductCatalog& catalog,
                                EvalSetting setting);

struct SeenUnseen {
  MetricsReport seen;
  MetricsReport unseen;  // empty() when no query was unseen
};

SeenUnseen seen_unseen_split(const std::vector<QueryResult>& results,
                             const std::set<std::string>& seen_categories);

struct SettingReport {
  EvalSetting setting = EvalSetting::MostSpecific;
  MetricsReport metrics;
  std::optional<SeenUnseen> seen_unseen;
  std::optional<DistanceAnalysis> distance;
  std::vector<QueryResult> queries;
};

struct ExperimentReport {
  Experiment experiment = Experiment::ClipITA;
  std::uint64_t eval_seed = 0;
  std::string split_salt;
  std::optional<TrainConfig> train_config;
  std::optional<ModalityConfig> modality;
  std::vector<SettingReport> settings;

  const SettingReport& at(EvalSetting s) const;
};

struct ExperimentOptions {
  std::vector<EvalSetting> settings{EvalSetting::MostSpecific};
  std::uint64_t eval_seed = 0;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
};

/// Retrieval over the test split: one indexed vector per test product, one
/// query per distinct sampled test category. Trained presets require model.
ExperimentReport run_experiment(Experiment experiment, const Dataset& data,
                                const SplitAssignment& split, const TrainedModel* model,
                                const ExperimentOptions& options);

nlohmann::ordered_json to_json(const DistanceAnalysis& d);
DistanceAnalysis distance_from_json(const nlohmann::json& j);
/// Summary report: metrics, seen/unseen and distance per setting.
nlohmann::ordered_json report_to_json(const ExperimentReport& report);
/// Per-query rankings, the input of the analysis step.
nlohmann::ordered_json results_to_json(const ExperimentReport& report);
/// Parses results_to_json output back into query results per setting.
std::map<EvalSetting, std::vector<QueryResult>> results_from_json(const nlohmann::json& j);

}  // namespace clipita
