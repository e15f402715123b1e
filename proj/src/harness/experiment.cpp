#include "mvrl/harness/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mvrl/harness/io.hpp"

namespace mvrl {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kEvalSeedBase = 777000;

const std::vector<std::string> kMetricsColumns = {"interactions", "eval_return_mean",
                                                  "eval_return_std", "view_id", "seed"};
const std::vector<std::string> kLossColumns = {"iteration", "loss_name", "view_id", "value"};

struct MetricsLog {
  CsvWriter writer;
  std::uint64_t seed;
  std::map<int, std::vector<std::pair<double, double>>> curves;  // view -> (x, mean)

  MetricsLog(const std::string& path, std::uint64_t seed_)
      : writer(path, kMetricsColumns), seed(seed_) {}

  void add(long interactions, double mean, double sd, int view_id) {
    writer.row({CsvWriter::num(interactions), CsvWriter::num(mean), CsvWriter::num(sd),
                CsvWriter::num(static_cast<long>(view_id)), std::to_string(seed)});
    writer.flush();
    curves[view_id].push_back({static_cast<double>(interactions), mean});
  }

  void plot(const std::string& path, const std::string& title) const {
    std::vector<PlotSeries> series;
    for (const auto& [view, pts] : curves)
      series.push_back({view == 0 ? std::string("aggregate") : "view " + std::to_string(view), pts});
    write_svg_plot(path, title, "environment interactions", "eval return", series);
  }
};

struct LossLog {
  CsvWriter writer;
  std::map<std::string, std::vector<std::pair<double, double>>> curves;  // aggregate rows only

  explicit LossLog(const std::string& path) : writer(path, kLossColumns) {}

  void add(const std::vector<LossRow>& rows) {
    for (const auto& r : rows) {
      writer.row({CsvWriter::num(r.iteration), r.name, CsvWriter::num(static_cast<long>(r.view_id)),
                  CsvWriter::num(r.value)});
      if (r.view_id == 0) curves[r.name].push_back({static_cast<double>(r.iteration), r.value});
    }
    writer.flush();
  }

  void plot(const std::string& path, const std::string& title) const {
    std::vector<PlotSeries> series;
    for (const auto& [name, pts] : curves) series.push_back({name, pts});
    write_svg_plot(path, title, "training iteration", "loss", series);
  }
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
}

AgentEnv fused_adapter(MultiViewEnv& env) {
  AgentEnv a;
  a.obs_dim = env.fused_dim();
  a.n_actions = env.n_actions();
  a.reset = [&env]() { return fuse_observations(env.reset().bundle); };
  a.step = [&env](int action) {
    MvStep s = env.step(action);
    return std::make_tuple(fuse_observations(s.bundle), s.reward, s.done);
  };
  return a;
}

AgentEnv pinned_adapter(MultiViewEnv& env, int view_id) {
  env.pin_view(view_id);
  AgentEnv a;
  a.obs_dim = env.view_dim(view_id);
  a.n_actions = env.n_actions();
  a.reset = [&env]() { return env.reset().observation; };
  a.step = [&env](int action) {
    MvStep s = env.step(action);
    return std::make_tuple(s.observation, s.reward, s.done);
  };
  return a;
}

// Evaluation environments are fresh instances sharing the training env's
// normalizer snapshot.
std::unique_ptr<MultiViewEnv> make_eval_env(const ExperimentConfig& config,
                                            const MultiViewEnv& train_env, std::uint64_t seed,
                                            bool emit_bundle) {
  ExperimentConfig c = config;
  auto env = make_mv_env(c, Rng(kEvalSeedBase + seed), false, emit_bundle);
  env->set_normalizer(train_env.normalizer());
  env->set_training(false);
  return env;
}

void save_ppo_checkpoint(const std::string& path, PpoLearner& learner) {
  std::vector<Tensor*> params;
  learner.collect_params(params);
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  save_checkpoint(path, cparams);
}

void save_model_checkpoint(const std::string& path, MvModel& model) {
  std::vector<Tensor*> params = model.parameters();
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  save_checkpoint(path, cparams);
}

// ---------------------------------------------------------------------------

void run_train_mf(const ExperimentConfig& config, const std::string& dir) {
  Rng root(config.seed);
  auto env = make_mv_env(config, root.derive("train-env"), false, true);
  PpoLearner learner(env->fused_dim(), env->n_actions(), ppo_config(config), root.derive("ppo"));

  MetricsLog metrics(dir + "/metrics.csv", config.seed);
  LossLog losses(dir + "/losses.csv");
  PpoRunHooks hooks;
  hooks.on_eval = [&](long interactions, const EvalResult& ev) {
    metrics.add(interactions, ev.mean_return, ev.std_return, 0);
  };
  hooks.on_update = [&](long update, const PpoUpdateStats& s) {
    losses.add({{update, "policy_loss", 0, s.policy_loss},
                {update, "value_loss", 0, s.value_loss},
                {update, "approx_kl", 0, s.approx_kl}});
  };

  auto eval_factory = [&](std::uint64_t seed) {
    auto eval_env = make_eval_env(config, *env, seed, true);
    auto holder = std::make_shared<std::unique_ptr<MultiViewEnv>>(std::move(eval_env));
    AgentEnv a;
    a.obs_dim = (*holder)->fused_dim();
    a.n_actions = (*holder)->n_actions();
    a.reset = [holder]() { return fuse_observations((*holder)->reset().bundle); };
    a.step = [holder](int action) {
      MvStep s = (*holder)->step(action);
      return std::make_tuple(fuse_observations(s.bundle), s.reward, s.done);
    };
    return a;
  };

  if (config.train.budget > 0)
    learner.run(fused_adapter(*env), eval_factory, config.train.budget, config.train.eval_every,
                config.train.eval_episodes, config.env.max_steps, config.train.success_threshold,
                config.train.stop_at_success, hooks);
  save_ppo_checkpoint(dir + "/policy.ckpt", learner);
  metrics.plot(dir + "/metrics.svg", "MV-MF on " + config.env.name);
  losses.plot(dir + "/losses.svg", "PPO losses");
}

void run_train_mf_independent(const ExperimentConfig& config, const std::string& dir) {
  Rng root(config.seed);
  const int n_views = static_cast<int>(config.views.size());
  std::vector<std::unique_ptr<MultiViewEnv>> envs;
  std::vector<std::unique_ptr<PpoLearner>> learners;
  std::vector<AgentEnv> adapters;
  for (int v = 1; v <= n_views; ++v) {
    envs.push_back(make_mv_env(config, root.derive("train-env-" + std::to_string(v)), false, false));
    adapters.push_back(pinned_adapter(*envs.back(), v));
    learners.push_back(std::make_unique<PpoLearner>(envs.back()->view_dim(v), envs.back()->n_actions(),
                                                    ppo_config(config),
                                                    root.derive("ppo-" + std::to_string(v))));
  }

  MetricsLog metrics(dir + "/metrics.csv", config.seed);
  LossLog losses(dir + "/losses.csv");

  long total = 0;
  long next_eval = config.train.eval_every;
  bool success = false;
  // Sample counts aggregate across views: each view's env steps are counted.
  while (total < config.train.budget && !success) {
    for (int v = 0; v < n_views; ++v) total += learners[static_cast<std::size_t>(v)]->collect_and_update(
        adapters[static_cast<std::size_t>(v)]);
    while (total >= next_eval) {
      double mean_sum = 0.0, sd_sum = 0.0;
      for (int v = 1; v <= n_views; ++v) {
        auto eval_factory = [&, v](std::uint64_t seed) {
          auto eval_env = make_eval_env(config, *envs[static_cast<std::size_t>(v - 1)], seed, false);
          auto holder = std::make_shared<std::unique_ptr<MultiViewEnv>>(std::move(eval_env));
          (*holder)->pin_view(v);
          AgentEnv a;
          a.obs_dim = (*holder)->view_dim(v);
          a.n_actions = (*holder)->n_actions();
          a.reset = [holder]() { return (*holder)->reset().observation; };
          a.step = [holder](int action) {
            MvStep s = (*holder)->step(action);
            return std::make_tuple(s.observation, s.reward, s.done);
          };
          return a;
        };
        EvalResult ev = evaluate_policy(learners[static_cast<std::size_t>(v - 1)]->policy(),
                                        eval_factory, config.train.eval_episodes,
                                        config.env.max_steps);
        metrics.add(total, ev.mean_return, ev.std_return, v);
        mean_sum += ev.mean_return;
        sd_sum += ev.std_return;
      }
      metrics.add(total, mean_sum / n_views, sd_sum / n_views, 0);
      next_eval += config.train.eval_every;
      if (mean_sum / n_views >= config.train.success_threshold && config.train.stop_at_success)
        success = true;
    }
  }
  for (int v = 1; v <= n_views; ++v)
    save_ppo_checkpoint(dir + "/policy_view" + std::to_string(v) + ".ckpt",
                        *learners[static_cast<std::size_t>(v - 1)]);
  metrics.plot(dir + "/metrics.svg", "independent PPO on " + config.env.name);
  losses.plot(dir + "/losses.svg", "PPO losses");
}

void run_train_model(const ExperimentConfig& config, const std::string& dir) {
  Rng root(config.seed);
  auto env = make_mv_env(config, root.derive("train-env"), false, false);
  Rng init = root.derive("model-init");
  MvModel model(model_config(config), init);

  MetricsLog metrics(dir + "/metrics.csv", config.seed);
  LossLog losses(dir + "/losses.csv");

  if (config.model.iterations > 0) {
    ExperienceDataset train_data, val_data;
    Rng collect_rng = root.derive("collect-actions");
    collect_random(*env, config.model.random_episodes, train_data, collect_rng);
    auto val_env = make_mv_env(config, root.derive("val-env"), false, false);
    val_env->set_normalizer(env->normalizer());
    val_env->set_training(false);
    Rng val_rng = root.derive("collect-val-actions");
    collect_random(*val_env, config.model.val_episodes, val_data, val_rng);

    int grid = env->base().grid_observations() ? env->base().grid_size() : 0;
    CorrespondingBatchSource train_src({&train_data}, view_specs(config), &env->normalizer(), grid);
    CorrespondingBatchSource val_src({&val_data}, view_specs(config), &env->normalizer(), grid);

    Adam opt(AdamConfig{.stepsize = config.model.stepsize});
    Rng train_rng = root.derive("model-train");
    TrainModelResult tr =
        train_model(model, opt, train_src, val_src, train_model_config(config), train_rng);
    losses.add(tr.curves);
  }
  save_model_checkpoint(dir + "/model.ckpt", model);
  losses.plot(dir + "/losses.svg", "model losses on " + config.env.name);
}

void run_mb_mpc(const ExperimentConfig& config, const std::string& dir) {
  Rng root(config.seed);
  auto env = make_mv_env(config, root.derive("train-env"), true, false);
  Rng init = root.derive("model-init");
  MvModel model(model_config(config), init);
  Adam opt(AdamConfig{.stepsize = config.model.stepsize});

  auto reward_env = make_base_env(config.env, false);
  MbConfig mb;
  mb.random_rollouts = config.mb.random_rollouts;
  mb.max_iter = config.mb.max_iter;
  mb.interaction_budget = config.mb.interaction_budget;
  mb.episodes_per_iter = config.mb.episodes_per_iter;
  mb.model_steps_initial = config.mb.model_steps_initial;
  mb.model_steps_per_iter = config.mb.model_steps_per_iter;
  mb.model_steps_per_iter_late = config.mb.model_steps_per_iter_late;
  mb.late_after_iter = config.mb.late_after_iter;
  mb.eval_every_iters = config.mb.eval_every_iters;
  mb.eval_episodes = config.train.eval_episodes;
  mb.eval_max_steps = config.env.max_steps;
  mb.success_threshold = config.train.success_threshold;
  mb.stop_at_success = config.train.stop_at_success;
  mb.plan = plan_config(config, *reward_env);
  mb.train = train_model_config(config);

  MetricsLog metrics(dir + "/metrics.csv", config.seed);
  LossLog losses(dir + "/losses.csv");
  MbHooks hooks;
  hooks.on_eval = [&](long interactions, const std::vector<PerViewEval>& evals) {
    double mean_sum = 0.0, sd_sum = 0.0;
    for (const auto& e : evals) {
      metrics.add(interactions, e.result.mean_return, e.result.std_return, e.view_id);
      mean_sum += e.result.mean_return;
      sd_sum += e.result.std_return;
    }
    metrics.add(interactions, mean_sum / evals.size(), sd_sum / evals.size(), 0);
  };
  hooks.on_losses = [&](const std::vector<LossRow>& rows) { losses.add(rows); };

  if (mb.interaction_budget > 0) {
    auto eval_factory = [&](std::uint64_t seed) { return make_eval_env(config, *env, seed, false); };
    run_mb_loop(*env, eval_factory, model, opt, mb, root.derive("mb"), hooks);
  }
  save_model_checkpoint(dir + "/model.ckpt", model);
  metrics.plot(dir + "/metrics.svg", "MV-MB (MPC) on " + config.env.name);
  losses.plot(dir + "/losses.svg", "model losses");
}

void run_mvpt(const ExperimentConfig& config, const std::string& dir) {
  Rng root(config.seed);
  auto collect_env = make_mv_env(config, root.derive("collect-env"), true, false);
  auto policy_env = make_mv_env(config, root.derive("train-env"), false, false);
  Rng init = root.derive("model-init");
  MvModel model(model_config(config), init);
  PpoLearner learner(model.latent_dim(), collect_env->n_actions(), ppo_config(config),
                     root.derive("ppo"));

  MvptConfig mc;
  mc.random_rollouts = config.mvpt.random_rollouts;
  mc.model_train_steps = config.mvpt.model_train_steps;
  mc.train = train_model_config(config);
  mc.ppo = ppo_config(config);
  mc.policy_budget = config.mvpt.policy_budget;
  mc.eval_every = config.mvpt.eval_every;
  mc.eval_episodes = config.train.eval_episodes;
  mc.eval_max_steps = config.env.max_steps;
  mc.success_threshold = config.train.success_threshold;
  mc.stop_at_success = config.train.stop_at_success;
  mc.source_view = config.mvpt.source_view;

  MetricsLog metrics(dir + "/metrics.csv", config.seed);
  LossLog losses(dir + "/losses.csv");
  MvptHooks hooks;
  hooks.on_eval = [&](long interactions, int view_id, const EvalResult& ev) {
    metrics.add(interactions, ev.mean_return, ev.std_return, view_id);
  };
  hooks.on_losses = [&](const std::vector<LossRow>& rows) { losses.add(rows); };

  if (config.mvpt.policy_budget > 0) {
    auto eval_factory = [&](std::uint64_t seed) {
      return make_eval_env(config, *collect_env, seed, false);
    };
    MvptResult r = mvpt_train(*collect_env, *policy_env, eval_factory, model, learner, mc,
                              root.derive("mvpt"), hooks);
    std::ostringstream note;
    note << "model_interactions=" << r.model_interactions << "\n"
         << "policy_interactions=" << r.policy_interactions << "\n";
    for (const auto& e : r.final_eval)
      note << "final_return_view" << e.view_id << "=" << e.result.mean_return << "\n";
    write_text(dir + "/mvpt_summary.txt", note.str());
  }
  save_model_checkpoint(dir + "/model.ckpt", model);
  save_ppo_checkpoint(dir + "/policy.ckpt", learner);
  metrics.plot(dir + "/metrics.svg", "MV-PT on " + config.env.name);
  losses.plot(dir + "/losses.svg", "model losses");
}

}  // namespace

void run_experiment(const ExperimentConfig& config) {
  fs::create_directories(config.out);
  write_text(config.out + "/config.resolved", config_to_json(config));
  auto started = std::chrono::steady_clock::now();

  if (config.experiment == "train-mf")
    run_train_mf(config, config.out);
  else if (config.experiment == "train-mf-independent")
    run_train_mf_independent(config, config.out);
  else if (config.experiment == "train-model")
    run_train_model(config, config.out);
  else if (config.experiment == "mb-mpc")
    run_mb_mpc(config, config.out);
  else if (config.experiment == "mvpt")
    run_mvpt(config, config.out);
  else if (config.experiment == "analyze")
    analyze_model(config.out + "/model.ckpt", config, config.out);
  else
    throw std::runtime_error("unknown experiment kind '" + config.experiment + "'");

  // Wall-clock lives outside the CSVs so reruns stay byte-identical.
  auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  std::ostringstream info;
  info << "experiment=" << config.experiment << "\n"
       << "seed=" << config.seed << "\n"
       << "wallclock_ms=" << elapsed.count() << "\n";
  write_text(config.out + "/runinfo.txt", info.str());
}

CompareSummary compare_runs(const std::vector<std::string>& run_dirs, double threshold) {
  struct RunEntry {
    std::string dir;
    std::string method;
    std::uint64_t seed;
    long crossed = -1;
  };
  std::vector<RunEntry> entries;
  for (const std::string& dir : run_dirs) {
    RunEntry e;
    e.dir = dir;
    std::ifstream cfg(dir + "/config.resolved");
    if (!cfg) throw std::runtime_error("compare: missing config.resolved in " + dir);
    std::stringstream ss;
    ss << cfg.rdbuf();
    nlohmann::json j = nlohmann::json::parse(ss.str());
    e.method = j.value("experiment", "?");
    e.seed = j.value("seed", 0ull);

    CsvTable t = read_csv(dir + "/metrics.csv");
    int ci = t.column("interactions"), cm = t.column("eval_return_mean"), cv = t.column("view_id");
    if (ci < 0 || cm < 0 || cv < 0)
      throw std::runtime_error("compare: unexpected metrics.csv schema in " + dir);
    std::vector<std::pair<long, double>> agg;
    for (const auto& row : t.rows)
      if (std::stol(row[static_cast<std::size_t>(cv)]) == 0)
        agg.push_back({std::stol(row[static_cast<std::size_t>(ci)]),
                       std::stod(row[static_cast<std::size_t>(cm)])});
    std::sort(agg.begin(), agg.end());
    for (const auto& [x, y] : agg)
      if (y >= threshold) {
        e.crossed = x;
        break;
      }
    entries.push_back(std::move(e));
  }

  std::map<std::string, std::vector<const RunEntry*>> by_method;
  for (const auto& e : entries) by_method[e.method].push_back(&e);

  std::ostringstream csv, table;
  csv << "method,runs,reached,mean_interactions_to_success,std_interactions_to_success\n";
  table << "method                  seed  interactions_to_success\n";
  table << "----------------------  ----  -----------------------\n";
  for (const auto& [method, runs] : by_method) {
    std::vector<double> xs;
    for (const RunEntry* r : runs) {
      std::ostringstream line;
      line << method;
      table << method << std::string(method.size() < 22 ? 22 - method.size() : 1, ' ') << "  ";
      std::string seed_s = std::to_string(r->seed);
      table << seed_s << std::string(seed_s.size() < 4 ? 4 - seed_s.size() : 1, ' ') << "  ";
      if (r->crossed >= 0) {
        table << r->crossed << "\n";
        xs.push_back(static_cast<double>(r->crossed));
      } else {
        table << "not reached (budget)\n";
      }
    }
    if (xs.empty()) {
      csv << method << "," << runs.size() << ",0,not reached (budget),\n";
      table << method << "  aggregate: not reached (budget)\n";
    } else {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= xs.size();
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      double sd = std::sqrt(var / xs.size());
      csv << method << "," << runs.size() << "," << xs.size() << "," << CsvWriter::num(mean) << ","
          << CsvWriter::num(sd) << "\n";
      table << method << "  aggregate: " << CsvWriter::num(mean) << " +- " << CsvWriter::num(sd)
            << " over " << xs.size() << "/" << runs.size() << " runs\n";
    }
  }
  return {csv.str(), table.str()};
}

void analyze_model(const std::string& checkpoint_path, const ExperimentConfig& config,
                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  Rng root(config.seed);
  Rng init = root.derive("model-init");
  MvModel model(model_config(config), init);
  assign_checkpoint(load_checkpoint(checkpoint_path), model.parameters());

  // Deterministic evaluation batches from fresh replays.
  auto env = make_mv_env(config, root.derive("analyze-env"), false, false);
  ExperienceDataset data;
  Rng collect_rng = root.derive("analyze-actions");
  collect_random(*env, std::max(8, config.model.val_episodes), data, collect_rng);
  int grid = env->base().grid_observations() ? env->base().grid_size() : 0;
  CorrespondingBatchSource source({&data}, view_specs(config), &env->normalizer(), grid);
  Rng batch_rng = root.derive("analyze-batches");
  std::vector<SequenceBatch> batches;
  for (int i = 0; i < std::max(1, config.model.val_batches); ++i)
    batches.push_back(source(config.model.batch_size, config.model.seq_len, batch_rng));

  KeyElementReport report = key_element_analysis(model, batches);

  const int k = model.latent_dim();
  {
    CsvWriter w(out_dir + "/logvar.csv", {"view_id", "dim", "mean_logvar"});
    for (int v = 0; v < model.n_views(); ++v)
      for (int d = 0; d < k; ++d)
        w.row({CsvWriter::num(static_cast<long>(v + 1)), CsvWriter::num(static_cast<long>(d)),
               CsvWriter::num(report.mean_logvar(v, d))});
  }
  {
    CsvWriter w(out_dir + "/mu_distance.csv", {"view_id", "dim", "distance_to_view1"});
    for (int v = 2; v <= model.n_views(); ++v)
      for (int d = 0; d < k; ++d)
        w.row({CsvWriter::num(static_cast<long>(v)), CsvWriter::num(static_cast<long>(d)),
               CsvWriter::num(report.mu_distance(v - 2, d))});
  }
  {
    CsvWriter w(out_dir + "/key_set.csv", {"dim"});
    for (int d : report.key_set) w.row({CsvWriter::num(static_cast<long>(d))});
  }
  {
    CsvWriter w(out_dir + "/decoder_saliency.csv",
                {"view_id", "dim", "weight_mass", "grad_saliency"});
    for (int v = 0; v < model.n_views(); ++v)
      for (int d = 0; d < k; ++d)
        w.row({CsvWriter::num(static_cast<long>(v + 1)), CsvWriter::num(static_cast<long>(d)),
               CsvWriter::num(report.decoder_weight_mass(v, d)),
               CsvWriter::num(report.decoder_grad_saliency(v, d))});
  }

  auto per_dim_series = [&](const Mat& m, const std::string& prefix) {
    std::vector<PlotSeries> series;
    for (int v = 0; v < m.rows(); ++v) {
      PlotSeries s;
      s.name = prefix + std::to_string(v + 1);
      for (int d = 0; d < m.cols(); ++d) s.points.push_back({static_cast<double>(d), m(v, d)});
      series.push_back(std::move(s));
    }
    return series;
  };
  write_svg_plot(out_dir + "/logvar.svg", "posterior log-variance per latent dim", "latent dim",
                 "mean log sigma^2", per_dim_series(report.mean_logvar, "view "));
  if (model.n_views() > 1)
    write_svg_plot(out_dir + "/mu_distance.svg", "cross-view |mu_bar_i - mu_bar_1| per latent dim",
                   "latent dim", "distance", per_dim_series(report.mu_distance, "view "));
  write_svg_plot(out_dir + "/decoder_saliency.svg", "decoder weight mass per latent dim",
                 "latent dim", "sum |W1| column", per_dim_series(report.decoder_weight_mass, "view "));

  // Training loss curves, when this checkpoint's run directory carries them.
  fs::path ckpt_dir = fs::path(checkpoint_path).parent_path();
  fs::path losses_path = ckpt_dir / "losses.csv";
  if (fs::exists(losses_path)) {
    CsvTable t = read_csv(losses_path.string());
    int ci = t.column("iteration"), cn = t.column("loss_name"), cv = t.column("view_id"),
        cval = t.column("value");
    if (ci >= 0 && cn >= 0 && cv >= 0 && cval >= 0) {
      std::map<std::string, PlotSeries> by_name;
      for (const auto& row : t.rows) {
        if (std::stol(row[static_cast<std::size_t>(cv)]) != 0) continue;
        auto& s = by_name[row[static_cast<std::size_t>(cn)]];
        s.name = row[static_cast<std::size_t>(cn)];
        s.points.push_back({std::stod(row[static_cast<std::size_t>(ci)]),
                            std::stod(row[static_cast<std::size_t>(cval)])});
      }
      std::vector<PlotSeries> series;
      for (auto& [name, s] : by_name) series.push_back(std::move(s));
      write_svg_plot(out_dir + "/loss_convergence.svg", "model loss convergence",
                     "training iteration", "loss", series);
    }
  }
}

}  // namespace mvrl
