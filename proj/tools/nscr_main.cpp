// Command-line operator surface: generate synthetic bundles, train NSCR and
// the baseline models, evaluate checkpoints, sweep hyperparameters, and emit
// ranked recommendations for a social user.

#include <CLI11.hpp>

#include "nscr/alternating.hpp"
#include "nscr/baselines.hpp"
#include "nscr/io.hpp"
#include "nscr/synth.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace nscr;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_manifest(const fs::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::binary);
  out << "key\tvalue\n";
  for (const auto& [key, value] : entries) out << key << '\t' << value << '\n';
}

struct TrainFlags {
  std::string model = "nscr";
  std::string data_dir;
  std::string out = "model.ckpt";
  HyperParams hp;
  int outer_iterations = 50;
  int inner_epochs = 1;
  int patience = 5;
  std::uint64_t split_seed = 13;
  double sr_beta = 0.5;
  int min_friends = 0;
  bool no_propagation = false;
};

DataBundle load_training_bundle(const TrainFlags& flags) {
  DataBundle bundle = load_bundle(flags.data_dir);
  if (flags.min_friends > 0)
    bundle = apply_min_degree_filter(bundle, flags.min_friends);
  return bundle;
}

Scorer checkpoint_scorer(const Checkpoint& ckpt, const DataBundle& bundle) {
  if (ckpt.kind == "nscr") {
    const ModelParameters& params = *ckpt.nscr_params;
    const AttributeCatalog& catalog = ckpt.catalog;
    return [&params, &catalog](int user, int item) {
      return forward(params, user, item, catalog, Mode::Eval, 0.0, nullptr)
          .prediction;
    };
  }
  if (ckpt.kind == "mf" || ckpt.kind == "sr") {
    const MfParameters& params = *ckpt.mf_params;
    return [&params](int user, int item) {
      return params.user_vecs.row(user).dot(params.item_vecs.row(item));
    };
  }
  if (ckpt.kind == "sfm") {
    const FmParameters& params = *ckpt.fm_params;
    return [&params, &bundle, use_attrs = ckpt.use_attributes](int user, int item) {
      return sfm_predict(params,
                         sfm_features(params, bundle, user, item, use_attrs, true));
    };
  }
  if (ckpt.kind == "itempop") {
    const auto& counts = ckpt.item_counts;
    return [&counts](int, int item) { return counts[item]; };
  }
  throw DataError("unknown checkpoint kind '" + ckpt.kind + "'");
}

struct BaselineFit {
  std::vector<IterationRecord> history;
  int best_iteration = 0;
};

/// Shared epoch/early-stop loop for the baseline trainers.
template <typename Params, typename EpochFn, typename ScorerFn>
BaselineFit fit_baseline(Params& params, const InteractionTable& table,
                         const SplitSpec& split, const TrainFlags& flags,
                         EpochFn epoch, ScorerFn make_scorer) {
  Rng rng(flags.hp.seed);
  BaselineFit result;
  Params best = params;
  double best_auc = -1.0;
  int since_best = 0;
  for (int iter = 1; iter <= flags.outer_iterations; ++iter) {
    double loss = 0.0;
    for (int e = 0; e < flags.inner_epochs; ++e) loss += epoch(params, rng);
    IterationRecord rec;
    rec.iteration = iter;
    rec.loss = flags.inner_epochs > 0 ? loss / flags.inner_epochs : 0.0;
    rec.val_auc = evaluate_model(make_scorer(params), table, split, 5,
                                 EvalPartition::Validation)
                      .mean_auc;
    result.history.push_back(rec);
    if (rec.val_auc > best_auc) {
      best_auc = rec.val_auc;
      best = params;
      result.best_iteration = iter;
      since_best = 0;
    } else if (++since_best >= flags.patience) {
      break;
    }
  }
  params = best;
  return result;
}

void write_history(const fs::path& path, const std::vector<IterationRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  out << "iteration\tloss\tsmoothness\tfitting\tval_auc\n";
  for (const auto& rec : history)
    out << rec.iteration << '\t' << fmt(rec.loss) << '\t' << fmt(rec.smoothness)
        << '\t' << fmt(rec.fitting) << '\t' << fmt(rec.val_auc) << '\n';
}

int run_train(const TrainFlags& flags) {
  DataBundle bundle = load_training_bundle(flags);
  const bool strip_attrs = flags.model.ends_with("-a");
  if (strip_attrs) bundle.catalog = bundle.catalog.without_attributes();
  const std::string base_model =
      strip_attrs ? flags.model.substr(0, flags.model.size() - 2) : flags.model;

  SplitSpec split = build_split(bundle.interactions,
                                bundle.graph.bridge_info_users(), flags.split_seed);

  Checkpoint ckpt;
  ckpt.kind = base_model;
  ckpt.hp = flags.hp;
  ckpt.split_seed = flags.split_seed;
  ckpt.use_attributes = !strip_attrs;
  ckpt.catalog = bundle.catalog;
  ckpt.bridge_map = bundle.graph.bridge_map();
  ckpt.user_ids = bundle.user_ids;
  ckpt.item_ids = bundle.item_ids;
  ckpt.social_ids = bundle.social_ids;
  ckpt.attr_ids = bundle.attr_ids;

  std::vector<IterationRecord> history;
  int best_iteration = 0;

  if (base_model == "nscr") {
    TrainConfig config;
    config.hp = flags.hp;
    config.outer_iterations = flags.outer_iterations;
    config.inner_epochs_per_iteration = flags.inner_epochs;
    config.early_stop_patience = flags.patience;
    config.social_propagation = !flags.no_propagation;
    FitResult fitted = fit(bundle, split, config);
    ckpt.nscr_params = std::move(fitted.params);
    ckpt.social_embeddings = std::move(fitted.social_embeddings);
    history = std::move(fitted.history);
    best_iteration = fitted.best_iteration;
  } else if (base_model == "mf") {
    MfParameters params = MfParameters::init(bundle.interactions.num_users(),
                                             bundle.interactions.num_items(), flags.hp);
    auto fitres = fit_baseline(
        params, bundle.interactions, split, flags,
        [&](MfParameters& p, Rng& rng) {
          return mf_train_epoch(p, bundle.interactions, split, flags.hp, rng);
        },
        [](const MfParameters& p) -> Scorer {
          return [&p](int u, int i) {
            return p.user_vecs.row(u).dot(p.item_vecs.row(i));
          };
        });
    ckpt.mf_params = std::move(params);
    history = std::move(fitres.history);
    best_iteration = fitres.best_iteration;
  } else if (base_model == "sr") {
    MfParameters params = MfParameters::init(bundle.interactions.num_users(),
                                             bundle.interactions.num_items(), flags.hp);
    SrOptions options{flags.sr_beta, !strip_attrs};
    ckpt.sr_beta = flags.sr_beta;
    auto fitres = fit_baseline(
        params, bundle.interactions, split, flags,
        [&](MfParameters& p, Rng& rng) {
          return sr_train_epoch(p, bundle, split, flags.hp, options, rng);
        },
        [](const MfParameters& p) -> Scorer {
          return [&p](int u, int i) {
            return p.user_vecs.row(u).dot(p.item_vecs.row(i));
          };
        });
    ckpt.mf_params = std::move(params);
    history = std::move(fitres.history);
    best_iteration = fitres.best_iteration;
  } else if (base_model == "sfm") {
    FmParameters params = FmParameters::init(bundle, flags.hp);
    auto fitres = fit_baseline(
        params, bundle.interactions, split, flags,
        [&](FmParameters& p, Rng& rng) {
          return sfm_train_epoch(p, bundle, split, flags.hp, !strip_attrs, rng);
        },
        [&](const FmParameters& p) -> Scorer {
          return [&p, &bundle, strip_attrs](int u, int i) {
            return sfm_predict(p, sfm_features(p, bundle, u, i, !strip_attrs, true));
          };
        });
    ckpt.fm_params = std::move(params);
    history = std::move(fitres.history);
    best_iteration = fitres.best_iteration;
  } else if (base_model == "itempop") {
    ckpt.item_counts = itempop_counts(bundle.interactions, split);
  } else {
    std::cerr << "unknown model '" << flags.model << "'\n";
    return kExitUsage;
  }

  save_checkpoint(ckpt, flags.out);
  write_history(flags.out + ".history.tsv", history);
  write_manifest(flags.out + ".manifest.tsv",
                 {{"command", "train"},
                  {"model", flags.model},
                  {"data", flags.data_dir},
                  {"k", std::to_string(flags.hp.embedding_size)},
                  {"layers", std::to_string(flags.hp.num_hidden_layers)},
                  {"dropout", fmt(flags.hp.dropout_ratio)},
                  {"lr", fmt(flags.hp.learning_rate)},
                  {"batch", std::to_string(flags.hp.batch_size)},
                  {"mu", fmt(flags.hp.tradeoff_mu)},
                  {"init_std", fmt(flags.hp.init_std)},
                  {"seed", std::to_string(flags.hp.seed)},
                  {"split_seed", std::to_string(flags.split_seed)},
                  {"outer_iterations", std::to_string(flags.outer_iterations)},
                  {"inner_epochs", std::to_string(flags.inner_epochs)},
                  {"patience", std::to_string(flags.patience)},
                  {"sr_beta", fmt(flags.sr_beta)},
                  {"min_friends", std::to_string(flags.min_friends)},
                  {"no_propagation", flags.no_propagation ? "1" : "0"},
                  {"best_iteration", std::to_string(best_iteration)}});
  std::cout << "wrote " << flags.out << " (best iteration " << best_iteration
            << ")\n";
  return 0;
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const DataBundle& bundle,
                               int recall_k) {
  SplitSpec split = build_split(bundle.interactions,
                                bundle.graph.bridge_info_users(), ckpt.split_seed);
  Scorer scorer = checkpoint_scorer(ckpt, bundle);
  return evaluate_model(scorer, bundle.interactions, split, recall_k);
}

void write_report(const EvalReport& report, const fs::path& base,
                  const std::vector<std::string>& user_ids) {
  {
    std::ofstream out(base.string() + ".report.tsv", std::ios::binary);
    out << "user_id\tauc\trecall_at_" << report.recall_k << '\n';
    for (const auto& m : report.per_user)
      out << user_ids[m.user] << '\t' << fmt(m.auc) << '\t' << fmt(m.recall_at_k)
          << '\n';
    out << "__mean__\t" << fmt(report.mean_auc) << '\t' << fmt(report.mean_recall)
        << '\n';
  }
  std::ofstream out(base.string() + ".report.txt", std::ios::binary);
  out << "users evaluated: " << report.per_user.size() << '\n'
      << "users skipped (empty test): " << report.skipped_users << '\n'
      << "negative set policy: " << report.negative_set_policy << '\n'
      << "mean AUC: " << fmt(report.mean_auc) << '\n'
      << "mean R@" << report.recall_k << ": " << fmt(report.mean_recall) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-domain social recommendation toolkit"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);

  // generate ------------------------------------------------------------
  SyntheticSpec spec;
  std::string gen_out = "data";
  std::string preset = "default";
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset bundle");
  gen->add_option("--preset", preset, "Parameter preset (default|tiny)")
      ->envname("NSCR_PRESET");
  gen->add_option("--info-users", spec.num_info_users)->envname("NSCR_INFO_USERS");
  gen->add_option("--items", spec.num_items)->envname("NSCR_ITEMS");
  gen->add_option("--social-users", spec.num_social_users)->envname("NSCR_SOCIAL_USERS");
  gen->add_option("--bridge-users", spec.num_bridge_users)->envname("NSCR_BRIDGE_USERS");
  gen->add_option("--attribute-groups", spec.num_attribute_groups)
      ->envname("NSCR_ATTRIBUTE_GROUPS");
  gen->add_option("--interactions-mean", spec.interactions_per_user_mean)
      ->envname("NSCR_INTERACTIONS_MEAN");
  gen->add_option("--friends-mean", spec.friends_per_user_mean)
      ->envname("NSCR_FRIENDS_MEAN");
  gen->add_option("--noise", spec.preference_noise)->envname("NSCR_NOISE");
  gen->add_option("--homophily", spec.homophily)->envname("NSCR_HOMOPHILY");
  gen->add_option("--seed", spec.seed)->envname("NSCR_SEED");
  gen->add_option("--out", gen_out, "Output directory")->envname("NSCR_OUT");

  // train ---------------------------------------------------------------
  TrainFlags train;
  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("model", train.model,
                 "nscr|nscr-a|mf|sfm|sfm-a|sr|sr-a|itempop")
      ->required();
  tr->add_option("--data", train.data_dir, "Dataset directory")
      ->required()
      ->envname("NSCR_DATA");
  tr->add_option("--out", train.out, "Checkpoint path")->envname("NSCR_OUT");
  tr->add_option("--k", train.hp.embedding_size)->envname("NSCR_K");
  tr->add_option("--layers", train.hp.num_hidden_layers)->envname("NSCR_LAYERS");
  tr->add_option("--dropout", train.hp.dropout_ratio)->envname("NSCR_DROPOUT");
  tr->add_option("--lr", train.hp.learning_rate)->envname("NSCR_LR");
  tr->add_option("--batch", train.hp.batch_size)->envname("NSCR_BATCH");
  tr->add_option("--mu", train.hp.tradeoff_mu)->envname("NSCR_MU");
  tr->add_option("--init-std", train.hp.init_std)->envname("NSCR_INIT_STD");
  tr->add_option("--seed", train.hp.seed)->envname("NSCR_SEED");
  tr->add_option("--iterations", train.outer_iterations)->envname("NSCR_ITERATIONS");
  tr->add_option("--inner-epochs", train.inner_epochs)->envname("NSCR_INNER_EPOCHS");
  tr->add_option("--patience", train.patience)->envname("NSCR_PATIENCE");
  tr->add_option("--split-seed", train.split_seed)->envname("NSCR_SPLIT_SEED");
  tr->add_option("--sr-beta", train.sr_beta)->envname("NSCR_SR_BETA");
  tr->add_option("--min-friends", train.min_friends,
                 "Drop social users with fewer friends at ingestion")
      ->envname("NSCR_MIN_FRIENDS");
  tr->add_flag("--no-propagation", train.no_propagation,
               "Disable social propagation (ablation)");

  // evaluate ------------------------------------------------------------
  std::string eval_ckpt, eval_data, eval_out = "eval", compare_ckpt;
  int recall_k = 5;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  ev->add_option("checkpoint", eval_ckpt)->required();
  ev->add_option("--data", eval_data, "Dataset directory")
      ->required()
      ->envname("NSCR_DATA");
  ev->add_option("--k-recall", recall_k)->envname("NSCR_K_RECALL");
  ev->add_option("--out", eval_out, "Report path prefix")->envname("NSCR_OUT");
  ev->add_option("--compare", compare_ckpt,
                 "Second checkpoint for a paired t-test on per-user AUC");

  // sweep ---------------------------------------------------------------
  std::string sweep_axis, sweep_data, sweep_out = "sweep.tsv", grid_arg;
  int sweep_seeds = 3;
  TrainFlags sweep_base;
  auto* sw = app.add_subcommand("sweep", "Sweep one hyperparameter axis");
  sw->add_option("axis", sweep_axis, "embedding|dropout|mu|layers")->required();
  sw->add_option("--data", sweep_data)->required()->envname("NSCR_DATA");
  sw->add_option("--grid", grid_arg, "Comma-separated grid values")->required();
  sw->add_option("--seeds", sweep_seeds, "Number of seeds per grid point")
      ->envname("NSCR_SEEDS");
  sw->add_option("--out", sweep_out)->envname("NSCR_OUT");
  sw->add_option("--k", sweep_base.hp.embedding_size);
  sw->add_option("--layers", sweep_base.hp.num_hidden_layers);
  sw->add_option("--dropout", sweep_base.hp.dropout_ratio);
  sw->add_option("--lr", sweep_base.hp.learning_rate);
  sw->add_option("--batch", sweep_base.hp.batch_size);
  sw->add_option("--mu", sweep_base.hp.tradeoff_mu);
  sw->add_option("--seed", sweep_base.hp.seed);
  sw->add_option("--iterations", sweep_base.outer_iterations);
  sw->add_option("--patience", sweep_base.patience);
  sw->add_option("--split-seed", sweep_base.split_seed);
  sw->add_option("--k-recall", recall_k);

  // recommend -----------------------------------------------------------
  std::string rec_ckpt, rec_user;
  int top_n = 10;
  auto* rc = app.add_subcommand("recommend", "Rank items for a social user");
  rc->add_option("checkpoint", rec_ckpt)->required();
  rc->add_option("user", rec_user, "Social user id")->required();
  rc->add_option("--top", top_n)->envname("NSCR_TOP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      if (preset == "tiny") {
        spec.num_info_users = 60;
        spec.num_items = 40;
        spec.num_social_users = 80;
        spec.num_bridge_users = 12;
        spec.num_attribute_groups = 4;
      } else if (preset != "default") {
        std::cerr << "unknown preset '" << preset << "'\n";
        return kExitUsage;
      }
      DataBundle bundle = generate(spec);
      save_bundle(bundle, gen_out);
      write_manifest(fs::path(gen_out) / "manifest.tsv",
                     {{"command", "generate"},
                      {"preset", preset},
                      {"info_users", std::to_string(spec.num_info_users)},
                      {"items", std::to_string(spec.num_items)},
                      {"social_users", std::to_string(spec.num_social_users)},
                      {"bridge_users", std::to_string(spec.num_bridge_users)},
                      {"attribute_groups", std::to_string(spec.num_attribute_groups)},
                      {"interactions_mean", fmt(spec.interactions_per_user_mean)},
                      {"friends_mean", fmt(spec.friends_per_user_mean)},
                      {"noise", fmt(spec.preference_noise)},
                      {"homophily", fmt(spec.homophily)},
                      {"seed", std::to_string(spec.seed)}});
      std::cout << "wrote bundle to " << gen_out << '\n';
      return 0;
    }

    if (tr->parsed()) return run_train(train);

    if (ev->parsed()) {
      DataBundle bundle = load_bundle(eval_data);
      Checkpoint ckpt = load_checkpoint(eval_ckpt);
      EvalReport report = evaluate_checkpoint(ckpt, bundle, recall_k);
      write_report(report, eval_out, bundle.user_ids);
      std::cout << "mean AUC " << fmt(report.mean_auc) << ", mean R@" << recall_k
                << " " << fmt(report.mean_recall) << '\n';
      if (!compare_ckpt.empty()) {
        Checkpoint other = load_checkpoint(compare_ckpt);
        EvalReport other_report = evaluate_checkpoint(other, bundle, recall_k);
        if (report.per_user.size() != other_report.per_user.size())
          throw DataError("checkpoints evaluated over different user sets");
        std::vector<double> a, b;
        for (const auto& m : report.per_user) a.push_back(m.auc);
        for (const auto& m : other_report.per_user) b.push_back(m.auc);
        auto [t, p] = paired_ttest(a, b);
        std::cout << "paired t-test on AUC: t=" << fmt(t) << " p=" << fmt(p) << '\n';
        std::ofstream out(eval_out + ".ttest.tsv", std::ios::binary);
        out << "t\tp\n" << fmt(t) << '\t' << fmt(p) << '\n';
      }
      return 0;
    }

    if (sw->parsed()) {
      std::vector<double> grid;
      std::stringstream ss(grid_arg);
      std::string token;
      while (std::getline(ss, token, ','))
        if (!token.empty()) grid.push_back(std::stod(token));
      if (grid.empty()) {
        std::cerr << "empty sweep grid\n";
        return kExitUsage;
      }
      DataBundle bundle = load_bundle(sweep_data);
      SplitSpec split = build_split(bundle.interactions,
                                    bundle.graph.bridge_info_users(),
                                    sweep_base.split_seed);
      std::ofstream out(sweep_out, std::ios::binary);
      out << "axis\tvalue\tseed\tauc\trecall_at_" << recall_k << '\n';
      for (double value : grid) {
        for (int s = 0; s < sweep_seeds; ++s) {
          TrainConfig config;
          config.hp = sweep_base.hp;
          config.hp.seed = sweep_base.hp.seed + static_cast<std::uint64_t>(s);
          config.outer_iterations = sweep_base.outer_iterations;
          config.early_stop_patience = sweep_base.patience;
          if (sweep_axis == "embedding")
            config.hp.embedding_size = static_cast<int>(value);
          else if (sweep_axis == "dropout")
            config.hp.dropout_ratio = value;
          else if (sweep_axis == "mu")
            config.hp.tradeoff_mu = value;
          else if (sweep_axis == "layers")
            config.hp.num_hidden_layers = static_cast<int>(value);
          else {
            std::cerr << "unknown sweep axis '" << sweep_axis << "'\n";
            return kExitUsage;
          }
          FitResult fitted = fit(bundle, split, config);
          EvalReport report =
              evaluate_model(make_info_scorer(fitted.params, bundle.catalog),
                             bundle.interactions, split, recall_k);
          out << sweep_axis << '\t' << fmt(value) << '\t' << config.hp.seed << '\t'
              << fmt(report.mean_auc) << '\t' << fmt(report.mean_recall) << '\n';
        }
      }
      std::cout << "wrote " << sweep_out << '\n';
      return 0;
    }

    if (rc->parsed()) {
      Checkpoint ckpt = load_checkpoint(rec_ckpt);
      if (ckpt.kind != "nscr")
        throw DataError("recommend requires an nscr checkpoint");
      int social = -1;
      for (std::size_t s = 0; s < ckpt.social_ids.size(); ++s)
        if (ckpt.social_ids[s] == rec_user) social = static_cast<int>(s);
      if (social < 0)
        throw DataError("unknown social user '" + rec_user + "' (known ids: " +
                        ckpt.social_ids.front() + " .. " + ckpt.social_ids.back() +
                        ")");
      const int num_items = static_cast<int>(ckpt.item_ids.size());
      std::vector<std::pair<double, int>> scored;
      for (int item = 0; item < num_items; ++item)
        scored.emplace_back(predict_social(*ckpt.nscr_params,
                                           ckpt.social_embeddings, social, item,
                                           ckpt.catalog),
                            item);
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      const int limit = std::min<int>(top_n, num_items);
      for (int r = 0; r < limit; ++r)
        std::cout << r + 1 << '\t' << ckpt.item_ids[scored[r].second] << '\t'
                  << fmt(scored[r].first) << '\n';
      return 0;
    }
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
