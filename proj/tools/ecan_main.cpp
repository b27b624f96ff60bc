#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <utility>

#include "CLI11.hpp"

#include "ecan/banks.hpp"
#include "ecan/data.hpp"
#include "ecan/errors.hpp"
#include "ecan/eval.hpp"
#include "ecan/model.hpp"
#include "ecan/run_config.hpp"
#include "ecan/trainer.hpp"

namespace fs = std::filesystem;
using namespace ecan;

namespace {

// The config file must be merged before CLI11 assigns flag values, so that
// explicitly passed flags win. Scan argv for it up front.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "-h" || a == "--help") return {};
  }
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void ensure_out_dir(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) throw UsageError("--out-dir is required");
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir);
}

void run_gen_data(RunConfig& cfg) {
  ensure_out_dir(cfg);
  const ShiftSpec spec = shift_spec_from(cfg);
  const auto [source, target] = generate_pair(spec);
  save_corpus(source, out_path(cfg, "source.csv"));
  save_corpus(target, out_path(cfg, "target.csv"));
  write_resolved_config(cfg, out_path(cfg, "resolved_config.json"));
  std::cout << "wrote " << out_path(cfg, "source.csv") << " and "
            << out_path(cfg, "target.csv") << " (N=" << source.size() << "+"
            << target.size() << ", C=" << spec.class_count
            << ", dim=" << spec.dim << ")\n";
}

void run_pretrain(RunConfig& cfg) {
  ensure_out_dir(cfg);
  if (cfg.source.empty()) throw UsageError("pretrain: --source (or config 'source') is required");
  const Corpus source = load_corpus(cfg.source);

  if (cfg.explicit_input_dim && cfg.model.input_dim != source.dim()) {
    throw ConfigError("pretrain: configured input_dim does not match the corpus");
  }
  if (cfg.explicit_class_count && cfg.model.class_count != source.class_count) {
    throw ConfigError("pretrain: configured class_count does not match the corpus");
  }
  cfg.model.input_dim = source.dim();
  cfg.model.class_count = source.class_count;
  cfg.model.validate();
  cfg.hp.validate();

  const EcanModel model = pretrain(source, cfg.model, cfg.hp);
  const std::string model_path =
      cfg.model_out.empty() ? out_path(cfg, "model.json") : cfg.model_out;
  model.save(model_path);
  write_resolved_config(cfg, out_path(cfg, "resolved_config.json"));

  const EvalReport train_report = evaluate(model, source);
  std::cout << "wrote " << model_path << " (source uar=" << train_report.uar
            << ")\n";
}

void run_adapt(RunConfig& cfg) {
  ensure_out_dir(cfg);
  if (cfg.model_in.empty()) throw UsageError("adapt: --model (or config 'model_in') is required");
  if (cfg.target.empty()) throw UsageError("adapt: --target (or config 'target') is required");
  EcanModel model = EcanModel::load(cfg.model_in);
  const Corpus target = load_corpus(cfg.target);

  cfg.model = model.spec();
  cfg.hp.validate();

  auto [adapted, log] = adapt(std::move(model), target, cfg.hp, cfg.ablation);
  const std::string model_path = cfg.model_out.empty()
                                     ? out_path(cfg, "adapted_model.json")
                                     : cfg.model_out;
  const std::string log_path =
      cfg.log_out.empty() ? out_path(cfg, "run_log.jsonl") : cfg.log_out;
  adapted.save(model_path);
  write_run_log(log, log_path);
  write_resolved_config(cfg, out_path(cfg, "resolved_config.json"));

  std::cout << "wrote " << model_path << " and " << log_path;
  if (!log.epochs.empty()) {
    const EpochRecord& last = log.epochs.back();
    std::cout << " (final total=" << last.loss.total;
    if (!std::isnan(last.uar)) std::cout << ", target uar=" << last.uar;
    std::cout << ")";
  }
  std::cout << "\n";
}

void run_eval(RunConfig& cfg) {
  ensure_out_dir(cfg);
  if (cfg.model_in.empty()) throw UsageError("eval: --model (or config 'model_in') is required");
  if (cfg.target.empty()) throw UsageError("eval: --corpus (or config 'target') is required");
  const EcanModel model = EcanModel::load(cfg.model_in);
  const Corpus corpus = load_corpus(cfg.target);
  cfg.model = model.spec();

  const EvalReport report = evaluate(model, corpus);
  write_report_json(report, out_path(cfg, "report.json"));
  write_resolved_config(cfg, out_path(cfg, "resolved_config.json"));
  std::cout << "wrote " << out_path(cfg, "report.json") << " (uar=" << report.uar
            << ", accuracy=" << report.accuracy << ")\n";
}

void run_project(RunConfig& cfg) {
  ensure_out_dir(cfg);
  if (cfg.model_in.empty()) throw UsageError("project: --model (or config 'model_in') is required");
  if (cfg.target.empty()) throw UsageError("project: --corpus (or config 'target') is required");
  const EcanModel model = EcanModel::load(cfg.model_in);
  const Corpus corpus = load_corpus(cfg.target);
  cfg.model = model.spec();

  const Projection projection = project_2d(model, corpus);
  const double quality = corpus.fully_labeled()
                             ? cluster_quality(model, corpus)
                             : std::numeric_limits<double>::quiet_NaN();
  write_projection_csv(projection, out_path(cfg, "projection.csv"));
  write_projection_summary(projection, quality,
                           out_path(cfg, "projection_summary.json"));
  write_resolved_config(cfg, out_path(cfg, "resolved_config.json"));
  std::cout << "wrote " << out_path(cfg, "projection.csv")
            << " (variance captured=" << projection.variance_captured << ")\n";
}

void add_common(CLI::App* sub, RunConfig& cfg, std::string& config_path) {
  sub->add_option("--config", config_path, "flat-key JSON config; flags override it");
  sub->add_option("--seed", cfg.hp.seed, "run seed");
  sub->add_option("--out-dir", cfg.out_dir, "directory for all outputs");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    const std::string config_arg = find_config_arg(argc, argv);
    if (!config_arg.empty()) apply_config_file(cfg, config_arg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"source-free adaptation pipeline over feature corpora"};
  app.require_subcommand(1);
  std::string config_path;  // consumed during the preload above

  CLI::App* gen = app.add_subcommand(
      "gen-data", "generate a shifted source/target corpus pair");
  add_common(gen, cfg, config_path);
  gen->add_option("--classes", cfg.model.class_count, "number of classes");
  gen->add_option("--dim", cfg.model.input_dim, "feature dimensionality");
  gen->add_option("--samples-per-class", cfg.samples_per_class,
                  "samples per class per corpus");
  gen->add_option("--rotation", cfg.rotation_angle,
                  "target rotation in the first two dims, radians");
  gen->add_option("--translation", cfg.translation,
                  "target translation, replicated across dims");
  gen->add_option("--scale", cfg.scale, "target scaling factor");
  gen->add_option("--noise", cfg.noise_sigma, "extra target noise sigma");
  gen->add_option("--imbalance", cfg.class_imbalance,
                  "per-class sample multipliers")
      ->delimiter(',');
  gen->callback([&] { run_gen_data(cfg); });

  CLI::App* pre = app.add_subcommand("pretrain", "train a source model");
  add_common(pre, cfg, config_path);
  pre->add_option("--source", cfg.source, "labeled source corpus CSV");
  pre->add_option("--hidden", cfg.model.hidden, "hidden layer widths")
      ->delimiter(',');
  pre->add_option("--feature-dim", cfg.model.feature_dim,
                  "extractor output width");
  pre->add_option("--pretrain-epochs", cfg.hp.pretrain_epochs, "epochs");
  pre->add_option("--lr", cfg.hp.lr_pretrain, "learning rate");
  pre->add_option("--batch-size", cfg.hp.batch_size, "batch size");
  pre->add_option("--momentum", cfg.hp.momentum, "momentum");
  pre->add_option("--label-smoothing", cfg.hp.label_smoothing,
                  "smoothing epsilon");
  pre->callback([&] { run_pretrain(cfg); });

  // Deliberately no --source here: adaptation sees only the model and the
  // unlabeled target.
  CLI::App* ad = app.add_subcommand(
      "adapt", "adapt a pretrained model to an unlabeled target corpus");
  add_common(ad, cfg, config_path);
  ad->add_option("--model", cfg.model_in, "pretrained model file");
  ad->add_option("--target", cfg.target, "target corpus CSV");
  ad->add_option("--epochs", cfg.hp.epochs, "adaptation epochs");
  ad->add_option("--lr", cfg.hp.lr_adapt, "learning rate");
  ad->add_option("--batch-size", cfg.hp.batch_size, "batch size");
  ad->add_option("--momentum", cfg.hp.momentum, "momentum");
  ad->add_option("--tau", cfg.hp.tau, "contrastive temperature");
  ad->add_option("--k", cfg.hp.k, "nearest neighbors per anchor");
  ad->add_option("--lambda", cfg.hp.lambda, "neighborhood loss weight");
  ad->add_option("--beta", cfg.hp.beta, "pseudo-label loss weight");
  ad->add_flag("--disable-ncl", cfg.ablation.disable_ncl,
               "drop the neighborhood term");
  ad->add_flag("--disable-scl", cfg.ablation.disable_scl,
               "drop the pseudo-label term");
  ad->add_flag("--disable-div", cfg.ablation.disable_div,
               "drop the balance term");
  ad->callback([&] { run_adapt(cfg); });

  CLI::App* ev = app.add_subcommand("eval", "score a model on a labeled corpus");
  add_common(ev, cfg, config_path);
  ev->add_option("--model", cfg.model_in, "model file");
  ev->add_option("--corpus", cfg.target, "labeled corpus CSV");
  ev->callback([&] { run_eval(cfg); });

  CLI::App* pj = app.add_subcommand(
      "project", "export a 2-D view of a model's feature space");
  add_common(pj, cfg, config_path);
  pj->add_option("--model", cfg.model_in, "model file");
  pj->add_option("--corpus", cfg.target, "corpus CSV");
  pj->callback([&] { run_project(cfg); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
