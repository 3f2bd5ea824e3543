// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "clipita/cli.hpp"
#include "clipita/contrastive.hpp"
#include "clipita/runner.hpp"
#include "clipita/synth.hpp"
#include "oracles.hpp"

using namespace clipita;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  DenseMatrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

// ---------------------------------------------------------------------------
// 1

double head_gradient_error(std::uint64_t seed) {
  Rng rng(seed);
  auto head = init_head(4, 5, 5, 2, rng);
  for (auto p : head.parameters()) {
    for (double& v : p) v += 0.3 * rng.normal();
  }
  DenseMatrix x = random_matrix(3, 4, rng);
  const DenseMatrix w = random_matrix(3, 2, rng);
  const auto back = head_backward(head, head_forward(head, x).cache, w);
  auto loss = [&] {
    const auto z = head_apply(head, x);
    double s = 0.0;
    for (std::size_t i = 0; i < z.data().size(); ++i) s += z.data()[i] * w.data()[i];
    return s;
  };
  double worst = 0.0;
  auto params = head.parameters();
  const auto grads = back.grads.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      worst = std::max(worst, oracle::relative_error(
                                  grads[p][i], oracle::central_difference(params[p][i], 1e-5, loss), 1e-6));
    }
  }
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    worst = std::max(worst, oracle::relative_error(
                                back.dx.data()[i], oracle::central_difference(x.data()[i], 1e-5, loss), 1e-6));
  }
  return worst;
}

double loss_gradient_error(std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix c = random_matrix(3, 5, rng);
  DenseMatrix p = random_matrix(3, 5, rng);
  const double tau = 0.5 + rng.uniform();
  const double lambda = rng.uniform();
  const auto g = info_nce_grad(c, p, tau, lambda);
  auto f = [&] { return info_nce(sim_matrix(c, p, tau), lambda).total; };
  double worst = 0.0;
  for (std::size_t i = 0; i < c.data().size(); ++i) {
    worst = std::max(worst, oracle::relative_error(
                                g.d_categories.data()[i], oracle::central_difference(c.data()[i], 1e-6, f), 1e-7));
  }
  for (std::size_t i = 0; i < p.data().size(); ++i) {
    worst = std::max(worst, oracle::relative_error(
                                g.d_products.data()[i], oracle::central_difference(p.data()[i], 1e-6, f), 1e-7));
  }
  return worst;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  double head = 0.0, loss = 0.0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    head = std::max(head, head_gradient_error(1000 + s));
    loss = std::max(loss, loss_gradient_error(2000 + s));
  }
  const double secs = seconds_since(t0);
  const bool ok = head <= 1e-4 && loss <= 1e-5 && secs < 10.0;
  report(1, "gradient correctness", ok,
         fmt("head max rel err %.2e (<= 1e-4), ", head) + fmt("loss max rel err %.2e (<= 1e-5), ", loss) +
             "20 instances each, " + fmt("%.2fs (< 10s)", secs));
}

// ---------------------------------------------------------------------------
// 2

void criterion_loss_identities() {
  const DenseMatrix one(1, 3, std::vector<double>{0.2, -1.0, 3.0});
  const double single = info_nce(sim_matrix(one, one, 1.0), 0.5).total;

  const DenseMatrix eye(2, 2, std::vector<double>{1, 0, 0, 1});
  const double pair = info_nce(sim_matrix(eye, eye, 1.0), 0.5).total;

  Rng rng(128);
  double sum = 0.0;
  for (int b = 0; b < 50; ++b) {
    sum += info_nce(sim_matrix(random_matrix(128, 64, rng), random_matrix(128, 64, rng), 1.0), 0.5).total;
  }
  const double mean = sum / 50.0;
  const bool ok = single == 0.0 && std::abs(pair - 0.31326) <= 1e-5 &&
                  std::abs(pair - std::log1p(std::exp(-1.0))) <= 1e-9 &&
                  std::abs(mean - std::log(128.0)) <= 0.1;
  report(2, "loss identities", ok,
         fmt("beta=1 loss %.1f (== 0), ", single) + fmt("orthonormal pair %.9f (-log(e/(e+1)) within 1e-9, 0.31326 to 5 digits), ", pair) +
             fmt("random beta=128 mean %.4f ", mean) + fmt("(ln 128 = %.4f +- 0.1)", std::log(128.0)));
}

// ---------------------------------------------------------------------------
// 3

void criterion_optimizer() {
  AdamWState s;
  s.config = {0.001, 0.9, 0.999, 1e-8, 0.0};
  std::vector<double> theta{0.0};
  const std::vector<double> g{1.0};
  adamw_step({std::span<double>(theta)}, {std::span<const double>(g)}, s);
  const double first = theta[0];

  AdamWState d;
  d.config = {0.001, 0.9, 0.999, 1e-8, 0.01};
  std::vector<double> decay{1.0};
  const std::vector<double> zero{0.0};
  adamw_step({std::span<double>(decay)}, {std::span<const double>(zero)}, d);
  const double decayed = decay[0];

  const bool ok = std::abs(first + 0.001) <= 1e-9 && std::abs(decayed - (1.0 - 0.001 * 0.01)) <= 1e-9;
  report(3, "optimizer trace", ok,
         fmt("theta after one step %.12f (-0.001 +- 1e-9), ", first) +
             fmt("pure decay %.12f (0.99999 +- 1e-9)", decayed));
}

// ---------------------------------------------------------------------------
// 4

void criterion_metrics() {
  Rng rng(404);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(30);
    RankedList list;
    RelevantSet rel;
    std::vector<int> flags;
    for (std::size_t i = 0; i < n; ++i) {
      list.push_back({"x" + std::to_string(i), -static_cast<double>(i)});
      const bool r = rng.uniform() < 0.35;
      flags.push_back(r ? 1 : 0);
      if (r) rel.insert(list.back().id);
    }
    const std::size_t missing = rng.below(5);
    for (std::size_t i = 0; i < missing; ++i) rel.insert("absent" + std::to_string(i));
    const auto o = oracle::all_metrics(flags, rel.size());
    const auto m = score_ranking(list, rel);
    const bool same = m.p_at.at(1) == o.p1 && m.p_at.at(5) == o.p5 && m.p_at.at(10) == o.p10 &&
                      m.map_at.at(5) == o.ap5 && m.map_at.at(10) == o.ap10 &&
                      m.r_precision == o.rprec;
    mismatches += same ? 0 : 1;
  }
  report(4, "metric oracles", mismatches == 0,
         std::to_string(mismatches) + " of 200 random ranked lists differ from the brute-force evaluator (exact)");
}

// ---------------------------------------------------------------------------
// 5 and 6

Dataset dataset_from(const SynthDataset& ds, std::size_t text_dim) {
  return Dataset{ds.catalog, ds.tree, ds.images,
                 TextEncoder::from_matrix(synth_text_embeddings(ds.catalog, ds.categories, text_dim, 0))};
}

struct Scores {
  double all = 0.0;
  double seen = 0.0;
  std::size_t n_seen = 0;
  std::size_t queries = 0;
};

Scores trained_p1(Experiment e, const Dataset& data, const SplitAssignment& split) {
  TrainConfig cfg;  // 30 epochs, tau 1, lambda 0.5, batch 128
  cfg.eval_setting = EvalSetting::MostSpecific;
  const auto model = train(cfg, modality_for(e), data, split);
  const auto rep = run_experiment(e, data, split, &model, ExperimentOptions{});
  const auto& s = rep.at(EvalSetting::MostSpecific);
  Scores out;
  out.all = s.metrics.p_at.at(1);
  out.queries = s.metrics.n_queries;
  out.n_seen = s.seen_unseen->seen.n_queries;
  out.seen = s.seen_unseen->seen.empty() ? 0.0 : s.seen_unseen->seen.p_at.at(1);
  return out;
}

void criterion_directional() {
  const auto t0 = Clock::now();
  SynthParams p;
  p.n_products = 2000;
  p.noise_sigma = 0.05;
  p.attr_informative = true;
  p.title_informative = true;
  p.seed = 7;
  const auto data = dataset_from(synth_catalog(p), p.text_dim);
  const auto split = split_products(data.catalog, "s0");
  const auto i = trained_p1(Experiment::ClipI, data, split);
  const auto ia = trained_p1(Experiment::ClipIA, data, split);
  const auto ita = trained_p1(Experiment::ClipITA, data, split);
  const double secs = seconds_since(t0);
  const bool ok = ita.all >= ia.all && ia.all >= i.all && ita.n_seen > 0 && ita.seen >= 0.9 &&
                  secs < 300.0;
  report(5, "directional modality ordering", ok,
         fmt("P@1 clip-ita %.4f >= ", ita.all) + fmt("clip-ia %.4f >= ", ia.all) +
             fmt("clip-i %.4f; ", i.all) + fmt("clip-ita seen P@1 %.4f (>= 0.9) over ", ita.seen) +
             std::to_string(ita.n_seen) + " of " + std::to_string(ita.queries) + " queries; " +
             fmt("%.1fs (< 300s)", secs));
}

void criterion_baseline() {
  SynthParams p;
  p.n_products = 2000;
  p.noise_sigma = 0.05;
  p.title_informative = false;
  p.seed = 7;
  const auto data = dataset_from(synth_catalog(p), p.text_dim);
  const auto split = split_products(data.catalog, "s0");
  const auto bm25 = run_experiment(Experiment::Bm25, data, split, nullptr, ExperimentOptions{});
  const double bm = bm25.at(EvalSetting::MostSpecific).metrics.p_at.at(1);
  const auto clip = trained_p1(Experiment::ClipI, data, split);
  const bool ok = bm <= 0.05 && clip.all > bm;
  report(6, "lexical baseline on noise titles", ok,
         fmt("bm25 P@1 %.4f (<= 0.05), ", bm) + fmt("clip-i P@1 %.4f (> bm25)", clip.all));
}

// ---------------------------------------------------------------------------
// 7

void criterion_error_analysis() {
  auto rec = [](std::string id, std::optional<std::string> parent) {
    return CategoryRecord{id, "n" + id, std::move(parent)};
  };
  auto prod = [](std::string id, std::string leaf) {
    return ProductRecord{id, "t", "i" + id, {"a"}, std::move(leaf)};
  };
  auto q = [](std::string cat, std::string top) {
    QueryResult r;
    r.category = std::move(cat);
    r.ranked = {{std::move(top), 1.0}};
    return r;
  };
  // R(1) > A(2) > A1(3) > {A11(4), A12(4)};  R > B(2) > B1(3);  R > C(2);  S(1) > S1(2)
  const auto tree = build_tree({rec("R", std::nullopt), rec("A", "R"), rec("A1", "A"),
                                rec("A11", "A1"), rec("A12", "A1"), rec("B", "R"), rec("B1", "B"),
                                rec("C", "R"), rec("S", std::nullopt), rec("S1", "S")});
  const ProductCatalog catalog({prod("p1", "A11"), prod("p2", "A12"), prod("p3", "B1"),
                                prod("p4", "S1"), prod("p5", "A11"), prod("p6", "C")});
  const auto d = error_analysis({q("A11", "p6"), q("B1", "p1"), q("S1", "p3"), q("A12", "p2"),
                                 q("C", "p6")},
                                tree, catalog, EvalSetting::MostSpecific);
  const bool forest_ok = d.same_tree_count == 2 && d.different_tree_count == 1 &&
                         d.histogram == std::map<int, std::size_t>{{-2, 1}, {1, 1}};

  SynthParams p;
  p.n_products = 400;
  p.n_trees = 5;
  const auto data = dataset_from(synth_catalog(p), p.text_dim);
  const auto split = split_products(data.catalog, "s0");
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.d_out = 16;
  cfg.eval_setting = EvalSetting::MostGeneral;
  const auto model = train(cfg, ModalityConfig::clip_ita(), data, split);
  std::set<std::string> roots;
  for (const auto& id : split.train) roots.insert(data.tree.root_of(data.catalog.at(id).leaf_category_id));
  const auto rep = run_experiment(Experiment::ClipITA, data, split, &model,
                                  ExperimentOptions{{EvalSetting::MostGeneral}});
  const auto& su = *rep.at(EvalSetting::MostGeneral).seen_unseen;
  const bool general_ok = model.seen_categories == roots && roots.size() == data.tree.roots().size() &&
                          su.unseen.empty();
  report(7, "error analysis", forest_ok && general_ok,
         "forest same/different " + std::to_string(d.same_tree_count) + "/" +
             std::to_string(d.different_tree_count) + " (2/1), histogram {-2:" +
             std::to_string(d.histogram.count(-2) ? d.histogram.at(-2) : 0) + ", 1:" +
             std::to_string(d.histogram.count(1) ? d.histogram.at(1) : 0) +
             "} ({-2:1, 1:1}); most-general seen " + std::to_string(model.seen_categories.size()) +
             " = train roots " + std::to_string(roots.size()) + ", unseen queries " +
             std::to_string(su.unseen.n_queries) + " (0)");
}

// ---------------------------------------------------------------------------
// 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool pipeline(const fs::path& root) {
  fs::remove_all(root);
  for (const char* d : {"data", "eval", "analysis"}) fs::create_directories(root / d);
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "clipita");
    return cli::run(args, sink, sink) == 0;
  };
  const std::string data = (root / "data").string();
  return run({"gen-data", "--out", data, "--n-products", "600", "--seed", "11"}) &&
         run({"train", "--data", data, "--preset", "clip-ita", "--seed", "5", "--out",
              (root / "model.json").string()}) &&
         run({"eval", "--data", data, "--preset", "clip-ita", "--checkpoint",
              (root / "model.json").string(), "--setting", "every", "--out-dir",
              (root / "eval").string()}) &&
         run({"analyze", "--data", data, "--results", (root / "eval" / "results.json").string(),
              "--out-dir", (root / "analysis").string()});
}

void criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "clipita-acceptance";
  const bool ran = pipeline(base / "a") && pipeline(base / "b");
  std::vector<std::string> files{"model.json", "eval/report.json", "eval/results.json",
                                 "analysis/analysis.json"};
  std::size_t identical = 0;
  for (const auto& f : files) {
    const auto a = slurp(base / "a" / f);
    if (!a.empty() && a == slurp(base / "b" / f)) ++identical;
  }
  fs::remove_all(base);
  report(8, "pipeline determinism", ran && identical == files.size(),
         std::string(ran ? "both runs completed" : "a run failed") + ", " + std::to_string(identical) +
             " of " + std::to_string(files.size()) + " JSON artifacts byte-identical");
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{
      criterion_gradients, criterion_loss_identities, criterion_optimizer, criterion_metrics,
      criterion_directional, criterion_baseline, criterion_error_analysis, criterion_determinism};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("[FAIL] criterion threw: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
