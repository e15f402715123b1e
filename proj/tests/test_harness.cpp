#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvrl/harness/experiment.hpp"
#include "mvrl/harness/io.hpp"

using namespace mvrl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mvrl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parses known keys and rejects unknown ones") {
  ExperimentConfig c = parse_config(R"({
    "experiment": "train-mf",
    "env": {"name": "cartpole", "max_steps": 150},
    "views": [{"kind": "identity"}, {"kind": "dummy_noise", "extra_dims": 3}],
    "ppo": {"minibatch": 256},
    "seed": 7,
    "out": "runs/x"
  })");
  CHECK(c.experiment == "train-mf");
  CHECK(c.env.max_steps == 150);
  CHECK(c.views.size() == 2);
  CHECK(c.views[1].extra_dims == 3);
  CHECK(c.ppo.minibatch == 256);
  CHECK(c.ppo.epochs == 15);  // default per the cart-pole hyperparameter table
  CHECK(c.ppo.gamma == 0.99);
  CHECK(c.seed == 7);

  CHECK_THROWS_WITH_AS(parse_config(R"({"unknown_top": 1})"), doctest::Contains("unknown key"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config(R"({"ppo": {"lr": 0.1}})"), doctest::Contains("ppo.lr"),
                       std::runtime_error);
  CHECK_THROWS_AS(parse_config(R"({"views": [{"kind": "sideways"}]})"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"env": {"name": "cartpole"}, "views": [{"kind": "mirror"}]})"),
      doctest::Contains("grid transform"), std::runtime_error);
  CHECK_THROWS_AS(parse_config("not json"), std::runtime_error);
}

TEST_CASE("config survives a serialize-parse round trip") {
  ExperimentConfig c;
  c.experiment = "mvpt";
  c.env.name = "gridpong";
  c.views = {{"identity"}, {"invert"}};
  c.model.latent_dim = 32;
  c.seed = 123;
  ExperimentConfig back = parse_config(config_to_json(c));
  CHECK(back.experiment == "mvpt");
  CHECK(back.env.name == "gridpong");
  CHECK(back.views[1].kind == "invert");
  CHECK(back.model.latent_dim == 32);
  CHECK(back.seed == 123);
}

TEST_CASE("csv round trip") {
  fs::path dir = temp_dir("csv");
  std::string path = (dir / "t.csv").string();
  {
    CsvWriter w(path, {"a", "b"});
    w.row({"1", "x"});
    w.row({CsvWriter::num(2.5), "y"});
  }
  CsvTable t = read_csv(path);
  REQUIRE(t.columns.size() == 2);
  CHECK(t.column("b") == 1);
  CHECK(t.column("zz") == -1);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == "2.5");
}

TEST_CASE("svg plot is self-contained") {
  fs::path dir = temp_dir("svg");
  std::string path = (dir / "p.svg").string();
  write_svg_plot(path, "title", "x", "y", {{"s1", {{0, 1}, {1, 2}, {2, 1.5}}}});
  std::string content = slurp(path);
  CHECK(content.find("<svg") != std::string::npos);
  CHECK(content.find("polyline") != std::string::npos);
  CHECK(content.find("s1") != std::string::npos);
}

TEST_CASE("compare_runs aggregates hand-written fixtures") {
  fs::path root = temp_dir("compare");
  auto make_run = [&](const std::string& name, const std::string& method, int seed,
                      const std::vector<std::pair<long, double>>& rows) {
    fs::path dir = root / name;
    fs::create_directories(dir);
    std::ofstream cfg(dir / "config.resolved");
    cfg << "{\"experiment\": \"" << method << "\", \"seed\": " << seed << "}\n";
    CsvWriter w((dir / "metrics.csv").string(),
                {"interactions", "eval_return_mean", "eval_return_std", "view_id", "seed"});
    for (auto [x, y] : rows)
      w.row({CsvWriter::num(x), CsvWriter::num(y), "0", "0", std::to_string(seed)});
  };
  make_run("a0", "train-mf", 0, {{1000, 50.0}, {2000, 196.0}, {3000, 199.0}});
  make_run("a1", "train-mf", 1, {{1000, 120.0}, {2000, 140.0}, {3000, 195.0}});
  make_run("b0", "train-mf-independent", 0, {{1000, 10.0}, {2000, 20.0}});

  CompareSummary s = compare_runs({(root / "a0").string(), (root / "a1").string(),
                                   (root / "b0").string()});
  // train-mf crossings at 2000 and 3000: mean 2500, std 500
  CHECK(s.csv.find("train-mf,2,2,2500,500") != std::string::npos);
  CHECK(s.csv.find("train-mf-independent,1,0,not reached (budget)") != std::string::npos);
  CHECK(s.text_table.find("not reached (budget)") != std::string::npos);
}

TEST_CASE("zero-budget run leaves header-only csvs and an initial checkpoint") {
  fs::path dir = temp_dir("budget0");
  ExperimentConfig c;
  c.experiment = "train-mf";
  c.env.name = "cartpole";
  c.views = {{"identity"}, {"dummy_noise"}};
  c.train.budget = 0;
  c.seed = 3;
  c.out = (dir / "run").string();
  run_experiment(c);
  std::string metrics = slurp(c.out + "/metrics.csv");
  CHECK(metrics == "interactions,eval_return_mean,eval_return_std,view_id,seed\n");
  CHECK(fs::exists(c.out + "/policy.ckpt"));
  CHECK(fs::exists(c.out + "/config.resolved"));
  auto loaded = load_checkpoint(c.out + "/policy.ckpt");
  CHECK(loaded.size() > 0);
}

TEST_CASE("experiments are byte-identical across reruns") {
  fs::path dir = temp_dir("determinism");
  ExperimentConfig c;
  c.experiment = "train-model";
  c.env.name = "gridpong";
  c.env.grid_size = 8;
  c.env.max_steps = 60;
  c.views = {{"identity"}, {"invert"}};
  c.model.latent_dim = 8;
  c.model.memory_units = 8;
  c.model.enc_hidden = {16};
  c.model.dec_hidden = {16};
  c.model.prior_hidden = {16};
  c.model.iterations = 35;
  c.model.batch_size = 4;
  c.model.seq_len = 6;
  c.model.random_episodes = 4;
  c.model.val_episodes = 2;
  c.model.log_every = 5;
  c.model.validate_every = 10;
  c.model.val_batches = 1;
  c.seed = 11;

  c.out = (dir / "r1").string();
  run_experiment(c);
  c.out = (dir / "r2").string();
  run_experiment(c);
  CHECK(slurp((dir / "r1" / "losses.csv").string()) == slurp((dir / "r2" / "losses.csv").string()));
  CHECK(slurp((dir / "r1" / "metrics.csv").string()) == slurp((dir / "r2" / "metrics.csv").string()));
  CHECK(slurp((dir / "r1" / "model.ckpt").string()) == slurp((dir / "r2" / "model.ckpt").string()));
  // loss rows exist and L_t / L_pt validation rows are present
  std::string losses = slurp((dir / "r1" / "losses.csv").string());
  CHECK(losses.find("L_r") != std::string::npos);
  CHECK(losses.find("L_p") != std::string::npos);
  CHECK(losses.find("L_H") != std::string::npos);
  CHECK(losses.find("L_t") != std::string::npos);
  CHECK(losses.find("L_pt") != std::string::npos);
}

TEST_CASE("analysis recovers a planted key set through the checkpoint path") {
  fs::path dir = temp_dir("analyze");
  ExperimentConfig c;
  c.experiment = "analyze";
  c.env.name = "gridpong";
  c.env.grid_size = 8;
  c.env.max_steps = 40;
  c.views = {{"identity"}, {"invert"}};
  c.model.latent_dim = 10;
  c.model.memory_units = 6;
  c.model.enc_hidden = {};
  c.model.dec_hidden = {};
  c.model.prior_hidden = {};
  c.model.batch_size = 6;
  c.model.seq_len = 5;
  c.model.val_batches = 2;
  c.model.val_episodes = 4;
  c.seed = 5;
  c.out = (dir / "run").string();
  fs::create_directories(c.out);

  // Plant a model whose dims 0 and 1 carry all structure in both views.
  Rng init_rng(99);
  MvModel planted(model_config(c), init_rng);
  for (Tensor* t : planted.parameters()) t->value.setZero();
  for (int v = 1; v <= 2; ++v) {
    Vec b = Vec::Zero(20);
    b.segment(10, 10).setConstant(-1.0);
    b(10) = -8.0;
    b(11) = -8.0;
    planted.encoder_net(v).layers[0].b.value = b;
    Mat w = Mat::Zero(64, 10);
    for (int r = 0; r < 64; ++r) {
      w(r, 0) = 0.21 + 0.01 * (r % 3);
      w(r, 1) = -0.13 - 0.01 * (r % 2);
    }
    planted.decoder_net(v).layers[0].W.value = w;
  }
  std::vector<Tensor*> params = planted.parameters();
  save_checkpoint(c.out + "/model.ckpt", {params.begin(), params.end()});

  analyze_model(c.out + "/model.ckpt", c, c.out + "/analysis");
  CsvTable key = read_csv(c.out + "/analysis/key_set.csv");
  REQUIRE(key.rows.size() == 2);
  CHECK(key.rows[0][0] == "0");
  CHECK(key.rows[1][0] == "1");
  CHECK(fs::exists(c.out + "/analysis/logvar.csv"));
  CHECK(fs::exists(c.out + "/analysis/mu_distance.csv"));
  CHECK(fs::exists(c.out + "/analysis/decoder_saliency.csv"));
  CHECK(fs::exists(c.out + "/analysis/logvar.svg"));

  // Deterministic given checkpoint and seed.
  analyze_model(c.out + "/model.ckpt", c, c.out + "/analysis2");
  CHECK(slurp(c.out + "/analysis/logvar.csv") == slurp(c.out + "/analysis2/logvar.csv"));
}

TEST_CASE("single-view analysis leaves the distance table header-only") {
  fs::path dir = temp_dir("analyze1v");
  ExperimentConfig c;
  c.experiment = "analyze";
  c.env.name = "cartpole";
  c.views = {{"identity"}};
  c.model.latent_dim = 6;
  c.model.memory_units = 4;
  c.model.enc_hidden = {8};
  c.model.dec_hidden = {8};
  c.model.prior_hidden = {8};
  c.model.batch_size = 4;
  c.model.seq_len = 5;
  c.model.val_batches = 1;
  c.model.val_episodes = 4;
  c.seed = 9;
  c.out = (dir / "run").string();
  fs::create_directories(c.out);
  Rng init(5);
  MvModel m(model_config(c), init);
  std::vector<Tensor*> params = m.parameters();
  save_checkpoint(c.out + "/model.ckpt", {params.begin(), params.end()});
  analyze_model(c.out + "/model.ckpt", c, c.out + "/analysis");
  CsvTable dist = read_csv(c.out + "/analysis/mu_distance.csv");
  CHECK(dist.rows.empty());
  CsvTable lv = read_csv(c.out + "/analysis/logvar.csv");
  CHECK(lv.rows.size() == 6);
}
