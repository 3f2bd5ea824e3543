#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clipita/cli.hpp"
#include "clipita/common.hpp"
#include "clipita/dataio.hpp"

namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation cli(std::vector<std::string> args) {
  args.insert(args.begin(), "clipita");
  std::ostringstream out, err;
  const int code = clipita::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("clipita-test-" + tag + "-" + std::to_string(clipita::fnv1a64(tag)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const {
    fs::create_directories(path / name);
    return (path / name).string();
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void gen(const std::string& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"gen-data", "--out", dir, "--n-products", "300", "--seed", "7",
                                "--image-dim", "16", "--text-dim", "24"};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = cli(args);
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("gen-data") {
  TempDir t("gen");
  const auto a = t.sub("a"), b = t.sub("b");
  gen(a);
  gen(b);
  for (const char* f : {"products.jsonl", "categories.jsonl", "image_embeddings.jsonl",
                        "text_embeddings.jsonl"}) {
    CAPTURE(f);
    CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
    CHECK_FALSE(slurp(fs::path(a) / f).empty());
  }
  CHECK(clipita::load_products(fs::path(a) / "products.jsonl").size() == 300);
  CHECK(clipita::load_embeddings(fs::path(a) / "image_embeddings.jsonl", 16).dim() == 16);

  const auto missing = cli({"gen-data", "--out", t.file("does-not-exist")});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("error:") != std::string::npos);

  CHECK(cli({"gen-data", "--out", a, "--max-depth", "12"}).code != 0);
  CHECK(cli({"gen-data", "--out", a, "--attr-informative", "maybe"}).code != 0);
}

TEST_CASE("train, eval and analyze") {
  TempDir t("pipeline");
  const auto data = t.sub("data");
  gen(data);
  const std::string ckpt = t.file("ckpt.json");

  SUBCASE("defaults documented in help") {
    const auto h = cli({"train", "--help"});
    CHECK(h.code == 0);
    for (const char* s : {"--epochs", "30", "--tau", "--lambda", "0.5", "--batch-size"}) {
      CHECK(h.out.find(s) != std::string::npos);
    }
  }
  SUBCASE("clip-i checkpoint uses image features only") {
    const auto r = cli({"train", "--data", data, "--preset", "clip-i", "--epochs", "2", "--d-out",
                        "8", "--out", ckpt});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("epoch 2 mean_loss") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(ckpt));
    CHECK(j.at("format") == "clipita-checkpoint/1");
    CHECK(j.at("product_head").at("fc1").at("weight").at(0).size() == 16);
    CHECK(j.at("category_head").at("fc1").at("weight").at(0).size() == 24);
    CHECK(fs::exists(ckpt + ".log"));
    for (const char* key : {"config", "category_head", "product_head", "optimizer_state",
                            "rng_seed", "epoch"}) {
      CHECK(j.contains(key));
    }
    CHECK(j.at("config").at("tau") == 1.0);
  }
  SUBCASE("same seed gives an identical checkpoint") {
    const std::vector<std::string> base{"train", "--data", data, "--epochs", "2", "--d-out", "8",
                                        "--seed", "3"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", t.file("a.json")});
    b.insert(b.end(), {"--out", t.file("b.json")});
    REQUIRE(cli(a).code == 0);
    REQUIRE(cli(b).code == 0);
    CHECK(slurp(t.file("a.json")) == slurp(t.file("b.json")));
  }
  SUBCASE("bm25 eval needs no checkpoint; schema and leaf queries") {
    const auto out = t.sub("bm25");
    const auto r = cli({"eval", "--data", data, "--preset", "bm25", "--setting", "most-specific",
                        "--out-dir", out});
    REQUIRE(r.code == 0);
    const auto rep = nlohmann::json::parse(slurp(fs::path(out) / "report.json"));
    const auto& m = rep.at("settings").at("most-specific").at("metrics");
    for (const char* k : {"p@1", "p@5", "p@10", "map@5", "map@10", "r-precision"}) {
      CHECK(m.contains(k));
      CHECK(m.at(k).is_number());
    }
    const auto res = nlohmann::json::parse(slurp(fs::path(out) / "results.json"));
    const auto cats = clipita::load_categories(fs::path(data) / "categories.jsonl");
    std::set<std::string> parents;
    for (const auto& c : cats) {
      if (c.parent_id) parents.insert(*c.parent_id);
    }
    for (const auto& q : res.at("settings").at("most-specific").at("queries")) {
      CHECK(parents.count(q.at("category").get<std::string>()) == 0);
    }
    const auto txt = slurp(fs::path(out) / "report.txt");
    for (const char* col : {"P@1", "P@5", "P@10", "MAP@5", "MAP@10", "R-precision"}) {
      CHECK(txt.find(col) != std::string::npos);
    }
  }
  SUBCASE("eval errors") {
    const auto out = t.sub("err");
    CHECK(cli({"eval", "--data", data, "--preset", "clip-ita", "--out-dir", out}).code != 0);
    CHECK(cli({"eval", "--data", data, "--preset", "clip-ita", "--checkpoint", t.file("nope.json"),
               "--out-dir", out})
              .code != 0);
    REQUIRE(cli({"train", "--data", data, "--preset", "clip-i", "--epochs", "1", "--d-out", "8",
                 "--out", ckpt})
                .code == 0);
    const auto mismatch = cli({"eval", "--data", data, "--preset", "clip-ita", "--checkpoint",
                               ckpt, "--out-dir", out});
    CHECK(mismatch.code != 0);
    CHECK(mismatch.err.find("preset") != std::string::npos);
    CHECK(cli({"eval", "--data", data, "--preset", "unknown-model", "--out-dir", out}).code != 0);
    CHECK_FALSE(fs::exists(fs::path(out) / "report.json"));
  }
  SUBCASE("analyze outputs") {
    REQUIRE(cli({"train", "--data", data, "--preset", "clip-ita", "--epochs", "2", "--d-out", "8",
                 "--out", ckpt})
                .code == 0);
    const auto ev = t.sub("ev");
    REQUIRE(cli({"eval", "--data", data, "--preset", "clip-ita", "--checkpoint", ckpt, "--setting",
                 "every", "--out-dir", ev})
                .code == 0);
    const auto an = t.sub("an");
    const auto r = cli({"analyze", "--data", data, "--results",
                        (fs::path(ev) / "results.json").string(), "--out-dir", an});
    REQUIRE(r.code == 0);
    for (const char* s : {"all-categories", "most-general", "most-specific"}) {
      const auto csv = slurp(fs::path(an) / ("histogram_" + std::string(s) + ".csv"));
      CHECK(csv.rfind("d,count\n", 0) == 0);
    }
    const auto a = nlohmann::json::parse(slurp(fs::path(an) / "analysis.json"));
    CHECK(a.at("settings").at("most-general").contains("unseen"));
    const auto table = slurp(fs::path(an) / "seen_unseen.txt");
    CHECK(table.find("clip-ita (unseen cat.)") != std::string::npos);
    CHECK(table.find("clip-ita (seen cat.)") != std::string::npos);

    // Distances agree with the report written by eval.
    const auto rep = nlohmann::json::parse(slurp(fs::path(ev) / "report.json"));
    for (const char* s : {"all-categories", "most-general", "most-specific"}) {
      CHECK(a["settings"][s]["distance"] == rep["settings"][s]["distance"]);
    }
  }
  SUBCASE("analyze with every top-1 correct") {
    const auto ev = t.sub("ev0");
    REQUIRE(cli({"eval", "--data", data, "--preset", "bm25", "--out-dir", ev}).code == 0);
    auto res = nlohmann::json::parse(slurp(fs::path(ev) / "results.json"));
    const auto catalog = clipita::load_products(fs::path(data) / "products.jsonl");
    for (auto& q : res["settings"]["most-specific"]["queries"]) {
      const auto cat = q["category"].get<std::string>();
      for (const auto& p : catalog.products()) {
        if (p.leaf_category_id == cat) {
          q["ranked"] = nlohmann::json::array({nlohmann::json::array({p.product_id, 1.0})});
          break;
        }
      }
    }
    {
      std::ofstream o(fs::path(ev) / "perfect.json");
      o << res.dump();
    }
    const auto an = t.sub("an0");
    const auto r = cli({"analyze", "--data", data, "--results",
                        (fs::path(ev) / "perfect.json").string(), "--out-dir", an});
    REQUIRE(r.code == 0);
    const auto a = nlohmann::json::parse(slurp(fs::path(an) / "analysis.json"));
    const auto& d = a["settings"]["most-specific"]["distance"];
    CHECK(d["same_tree"] == 0);
    CHECK(d["different_tree"] == 0);
    CHECK(d["histogram"].empty());
    CHECK(slurp(fs::path(an) / "histogram_most-specific.csv") == "d,count\n");
    CHECK(slurp(fs::path(an) / "seen_unseen.txt").find("n/a") != std::string::npos);
  }
  SUBCASE("missing results file") {
    CHECK(cli({"analyze", "--data", data, "--results", t.file("none.json"), "--out-dir",
               t.sub("x")})
              .code != 0);
  }
}

TEST_CASE("config files") {
  TempDir t("config");
  const auto data = t.sub("data");
  gen(data);

  SUBCASE("parse_config_text") {
    const auto kv = clipita::cli::parse_config_text("# c\nn_products = 5  # trailing\n\nseed=2\n", "f");
    REQUIRE(kv.size() == 2);
    CHECK(kv[0] == std::pair<std::string, std::string>{"n-products", "5"});
    CHECK(kv[1] == std::pair<std::string, std::string>{"seed", "2"});
    CHECK_THROWS_AS(clipita::cli::parse_config_text("novalue\n", "f"), clipita::ParseError);
    CHECK_THROWS_AS(clipita::cli::parse_config_text("a = 1\na = 2\n", "f"), clipita::ParseError);
  }
  SUBCASE("unknown keys rejected") {
    {
      std::ofstream o(t.file("bad.cfg"));
      o << "epochs = 1\nlearning_rate = 0.1\n";
    }
    const auto r = cli({"train", "--config", t.file("bad.cfg"), "--data", data, "--out",
                        t.file("c.json")});
    CHECK(r.code != 0);
    CHECK(r.err.find("learning-rate") != std::string::npos);
  }
  SUBCASE("command line overrides file values") {
    {
      std::ofstream o(t.file("ok.cfg"));
      o << "epochs = 1\nd_out = 8\nseed = 5\n";
    }
    REQUIRE(cli({"train", "--config", t.file("ok.cfg"), "--data", data, "--out", t.file("c1.json")}).code == 0);
    REQUIRE(cli({"train", "--config", t.file("ok.cfg"), "--epochs", "2", "--data", data, "--out",
                 t.file("c2.json")})
                .code == 0);
    const auto c1 = nlohmann::json::parse(slurp(t.file("c1.json")));
    const auto c2 = nlohmann::json::parse(slurp(t.file("c2.json")));
    CHECK(c1["epoch"] == 1);
    CHECK(c2["epoch"] == 2);
    CHECK(c1["config"]["d_out"] == 8);
    CHECK(c1["config"]["seed"] == 5);
  }
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code != 0);
  CHECK(cli({"frobnicate"}).code != 0);
  CHECK(cli({"train"}).code != 0);
}
