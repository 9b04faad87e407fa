#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mde/mde.hpp"

namespace fs = std::filesystem;

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void add_split(mde::Vocabulary& vocab, mde::TripleSet& out,
               const std::string& path, mde::Split role) {
  auto loaded = mde::load_triples(path, role, std::move(vocab));
  if (loaded.duplicates > 0) {
    std::cerr << "note: dropped " << loaded.duplicates << " duplicate triples from "
              << path << '\n';
  }
  vocab = std::move(loaded.vocab);
  out = std::move(loaded.set);
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> options;
  bool resume = false;
  std::size_t log_every = 10;
};

void setup_train(CLI::App& app, TrainArgs& a) {
  app.add_option("--config", a.config, "key=value config file; flags override it")
      ->check(CLI::ExistingFile);
  const mde::TrainConfig defaults;
  for (const auto& f : mde::config_fields()) {
    auto* opt = app.add_option(flag_name(f.name), a.overrides[f.name], f.help)
                    ->default_str(f.get(defaults))
                    ->type_name("")
                    ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    if (f.get(defaults) == "false") opt->expected(0, 1);
    a.options[f.name] = opt;
  }
  app.add_flag("--resume", a.resume,
               "continue from <output-dir>/model.ckpt for another `epochs` epochs");
  app.add_option("--log-every", a.log_every, "print progress every N epochs (0: off)")
      ->capture_default_str();
}

int run_train(TrainArgs& a) {
  mde::TrainConfig cfg;
  if (!a.config.empty()) cfg = mde::load_config_file(a.config);
  for (const auto& f : mde::config_fields()) {
    CLI::Option* opt = a.options[f.name];
    if (opt->count() == 0) continue;
    const std::string& v = a.overrides[f.name];
    mde::set_config_value(cfg, f.name, v.empty() && opt->get_expected_min() == 0 ? "true" : v);
  }
  if (cfg.train_path.empty()) throw mde::ConfigError("no training file given (--train)");
  if (cfg.output_dir.empty()) throw mde::ConfigError("no output directory given (--output-dir)");
  mde::validate(cfg);

  mde::Vocabulary vocab;
  mde::TripleSet train, scratch;
  add_split(vocab, train, cfg.train_path, mde::Split::kTrain);
  if (!cfg.valid_path.empty()) add_split(vocab, scratch, cfg.valid_path, mde::Split::kValid);
  if (!cfg.test_path.empty()) add_split(vocab, scratch, cfg.test_path, mde::Split::kTest);

  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  std::optional<mde::Checkpoint> resume;
  mde::TrainHooks hooks;
  if (a.resume) {
    resume = mde::load_checkpoint((out / mde::kCheckpointFile).string());
    hooks.resume = &*resume;
  }
  {
    std::ofstream m(out / mde::kManifestFile);
    if (!m) throw mde::DataError("cannot write manifest in " + cfg.output_dir);
    mde::write_run_manifest(m, cfg);
  }
  std::cerr << "training on " << train.size() << " triples, "
            << vocab.num_entities() << " entities, " << vocab.num_relations()
            << " relations\n";
  hooks.on_epoch = [&](const mde::EpochRecord& r) {
    if (a.log_every && r.epoch % a.log_every == 0) {
      std::cerr << "epoch " << r.epoch << "  loss+ " << r.loss_pos << "  loss- "
                << r.loss_neg << "  delta " << r.delta << "  delta' "
                << r.delta_prime << '\n';
    }
  };
  auto res = mde::train<float>(cfg, vocab, train, hooks);
  const auto& last = res.history.records.back();
  std::cout << "epochs: " << last.epoch << '\n'
            << "loss_pos: " << last.loss_pos << '\n'
            << "loss_neg: " << last.loss_neg << '\n'
            << "checkpoint: " << (out / mde::kCheckpointFile).string() << '\n';
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, test, train, valid, output, csv;
  std::string setting = "raw,filtered";
  std::string side = "head,tail,both";
  unsigned threads = 1;
};

void setup_evaluate(CLI::App& app, EvalArgs& a) {
  app.add_option("--checkpoint", a.checkpoint, "model checkpoint")->required();
  app.add_option("--test", a.test, "test triples (TSV)")->required();
  app.add_option("--train", a.train, "training triples, added to the filter");
  app.add_option("--valid", a.valid, "validation triples, added to the filter");
  app.add_option("--setting", a.setting, "comma list of raw, filtered")->capture_default_str();
  app.add_option("--side", a.side, "comma list of head, tail, both")->capture_default_str();
  app.add_option("--output", a.output, "also write the text report here");
  app.add_option("--csv", a.csv, "also write CSV rows here");
  app.add_option("--threads", a.threads, "ranking worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

int run_evaluate(const EvalArgs& a) {
  mde::EvalOptions opts;
  opts.threads = a.threads;
  opts.settings.clear();
  for (const auto& s : split_list(a.setting)) opts.settings.push_back(mde::parse_setting(s));
  std::set<mde::Side> sides;
  for (const auto& s : split_list(a.side)) {
    if (s == "head") sides.insert(mde::Side::kHead);
    else if (s == "tail") sides.insert(mde::Side::kTail);
    else if (s == "both") sides.insert(mde::Side::kBoth);
    else throw mde::ConfigError("unknown side '" + s + "'");
  }
  if (opts.settings.empty() || sides.empty()) {
    throw mde::ConfigError("--setting and --side need at least one value");
  }

  const mde::Checkpoint ck = mde::load_checkpoint(a.checkpoint);
  auto strict = [&](const std::string& path, mde::Split role) {
    return mde::load_triples(path, role, ck.vocab, mde::VocabPolicy::kStrict).set;
  };
  const mde::TripleSet test = strict(a.test, mde::Split::kTest);
  mde::FilterIndex filter;
  filter.add(test);
  if (!a.train.empty()) filter.add(strict(a.train, mde::Split::kTrain));
  if (!a.valid.empty()) filter.add(strict(a.valid, mde::Split::kValid));
  const bool wants_filtered =
      std::find(opts.settings.begin(), opts.settings.end(),
                mde::Setting::kFiltered) != opts.settings.end();
  if (wants_filtered && a.train.empty()) {
    std::cerr << "warning: filtered ranking without --train only removes test triples\n";
  }

  const auto ev = mde::evaluate(test, ck.embeddings, ck.config, &filter, opts);
  std::vector<mde::RankingReport> shown;
  for (const auto& r : ev.reports) {
    if (sides.contains(r.side)) shown.push_back(r);
  }
  mde::write_report_text(std::cout, shown);
  if (!a.output.empty()) {
    std::ofstream o(a.output);
    if (!o) throw mde::DataError("cannot write '" + a.output + "'");
    mde::write_report_text(o, shown);
  }
  if (!a.csv.empty()) {
    std::ofstream o(a.csv);
    if (!o) throw mde::DataError("cannot write '" + a.csv + "'");
    mde::write_report_csv(o, shown);
  }
  return 0;
}

// ---- generate-synthetic ---------------------------------------------------------

struct GenArgs {
  mde::PatternSpec spec;
  std::string pattern = "symmetry";
  std::string out;
};

void setup_generate(CLI::App& app, GenArgs& a) {
  app.add_option("--pattern", a.pattern, "symmetry, antisymmetry, inversion or composition")
      ->capture_default_str();
  app.add_option("--entities", a.spec.n_entities, "number of entities")->capture_default_str();
  app.add_option("--relations", a.spec.n_relations, "number of relations")->capture_default_str();
  app.add_option("--density", a.spec.density, "fraction of possible groundings")
      ->capture_default_str();
  app.add_option("--holdout", a.spec.holdout_fraction, "fraction of groundings held out")
      ->capture_default_str();
  app.add_option("--seed", a.spec.seed, "random seed")->capture_default_str();
  app.add_option("--out", a.out, "output directory")->required();
}

int run_generate(GenArgs& a) {
  a.spec.pattern = mde::parse_pattern(a.pattern);
  const auto d = mde::generate_pattern_kg(a.spec);
  mde::write_pattern_dataset(a.out, a.spec, d);
  std::cout << "groundings: " << d.groundings << '\n'
            << "train: " << d.train.size() << '\n'
            << "holdout: " << d.holdout.size() << '\n';
  if (!d.negatives.empty()) std::cout << "negatives: " << d.negatives.size() << '\n';
  return 0;
}

// ---- fit-ground-truth -----------------------------------------------------------

struct FitArgs {
  std::size_t entities = 5, relations = 2, dim = 0, random_facts = 0;
  std::string facts;
  mde::FitOptions opts;
};

void setup_fit(CLI::App& app, FitArgs& a) {
  app.add_option("--entities", a.entities, "number of entities")->capture_default_str();
  app.add_option("--relations", a.relations, "number of relations")->capture_default_str();
  auto* facts = app.add_option("--facts", a.facts, "TSV of true triples (names)");
  auto* random = app.add_option("--random-facts", a.random_facts,
                                "draw this many random facts instead");
  facts->excludes(random);
  app.add_option("--dim", a.dim, "embedding size (default: #facts + 1)");
  app.add_option("--epochs", a.opts.max_epochs, "epoch budget")->capture_default_str();
  app.add_option("--seed", a.opts.seed, "seed for facts and initialisation")
      ->capture_default_str();
  app.add_option("--p", a.opts.p, "norm order")->capture_default_str()->check(CLI::IsMember({1, 2}));
  app.add_option("--max-candidates", a.opts.max_candidates,
                 "refuse instances with more candidate triples")
      ->capture_default_str();
}

int run_fit(const FitArgs& a) {
  std::vector<mde::Triple> facts;
  std::size_t n_e = a.entities, n_r = a.relations;
  if (!a.facts.empty()) {
    auto loaded = mde::load_triples(a.facts, mde::Split::kTrain);
    facts = loaded.set.triples;
    n_e = std::max(n_e, loaded.vocab.num_entities());
    n_r = std::max(n_r, loaded.vocab.num_relations());
  } else if (a.random_facts > 0) {
    if (n_e == 0 || n_r == 0) throw mde::ConfigError("need at least one entity and relation");
    const double total = double(n_e) * double(n_e) * double(n_r);
    if (double(a.random_facts) > total) throw mde::ConfigError("more facts than candidate triples");
    std::mt19937_64 rng(a.opts.seed);
    std::uniform_int_distribution<std::uint32_t> e(0, n_e - 1), r(0, n_r - 1);
    std::set<mde::Triple> chosen;
    while (chosen.size() < a.random_facts) chosen.insert({e(rng), r(rng), e(rng)});
    facts.assign(chosen.begin(), chosen.end());
  }
  const std::size_t dim = a.dim ? a.dim : facts.size() + 1;
  const auto rep = mde::fit_ground_truth(n_e, n_r, facts, dim, a.opts);
  std::cout << "entities: " << n_e << '\n'
            << "relations: " << n_r << '\n'
            << "dim: " << dim << '\n'
            << "facts: " << rep.n_facts << '\n'
            << "non_facts: " << rep.n_negatives << '\n'
            << "epochs: " << rep.epochs << '\n'
            << "max_fact_score: " << rep.max_fact_score << '\n'
            << "min_non_fact_score: " << rep.min_negative_score << '\n'
            << "obstructed: " << (rep.obstructed ? "true" : "false") << '\n'
            << "separated: " << (rep.separated ? "true" : "false") << '\n';
  if (rep.separated) std::cout << "threshold: " << rep.threshold << '\n';
  return 0;
}

// ---- inspect --------------------------------------------------------------------

int run_inspect(const std::string& path) {
  const auto ck = mde::load_checkpoint(path);
  const auto& e = ck.embeddings;
  std::cout << "format_version: " << mde::kCheckpointVersion << '\n'
            << "dim: " << e.dim() << '\n'
            << "entities: " << e.num_entities() << '\n'
            << "relations: " << e.num_relations() << '\n'
            << "families: " << e.num_families() << '\n'
            << "weights: ";
  for (std::size_t i = 0; i < ck.config.weights.size(); ++i) {
    std::cout << (i ? "," : "") << ck.config.weights[i];
  }
  std::cout << '\n'
            << "psi: " << ck.config.psi << '\n'
            << "p: " << ck.config.p << '\n';
  if (ck.state) {
    const auto& s = ck.state->loss;
    std::cout << "epoch: " << ck.state->epoch << '\n'
              << "gamma1: " << s.gamma1 << '\n'
              << "gamma2: " << s.gamma2 << '\n'
              << "delta: " << s.delta << '\n'
              << "delta_prime: " << s.delta_prime << '\n'
              << "optimizer_slots: " << ck.state->optimizer.slots.size() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-distance knowledge graph embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mde::kVersion));

  TrainArgs train_args;
  EvalArgs eval_args;
  GenArgs gen_args;
  FitArgs fit_args;
  std::string inspect_path;

  auto* train = app.add_subcommand("train", "train a model");
  setup_train(*train, train_args);
  auto* evaluate = app.add_subcommand("evaluate", "rank test triples against a checkpoint");
  setup_evaluate(*evaluate, eval_args);
  auto* generate = app.add_subcommand("generate-synthetic", "write a relation-pattern dataset");
  setup_generate(*generate, gen_args);
  auto* fit = app.add_subcommand("fit-ground-truth",
                                 "check that a small ground truth can be separated");
  setup_fit(*fit, fit_args);
  auto* inspect = app.add_subcommand("inspect", "print a checkpoint header");
  inspect->add_option("checkpoint", inspect_path, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(mde::ExitCode::kUsage);
  }

  try {
    if (*train) return run_train(train_args);
    if (*evaluate) return run_evaluate(eval_args);
    if (*generate) return run_generate(gen_args);
    if (*fit) return run_fit(fit_args);
    if (*inspect) return run_inspect(inspect_path);
  } catch (const mde::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(mde::ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(mde::ExitCode::kUsage);
  }
  return 0;
}
