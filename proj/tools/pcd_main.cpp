// pcd: corpus generation, batch runs and report rendering.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pcd/corpus.hpp"
#include "pcd/error.hpp"
#include "pcd/pipeline.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw pcd::IoError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault localization data augmentation workbench"};
  app.require_subcommand(1);

  // corpus gen
  auto* corpus = app.add_subcommand("corpus", "Corpus utilities");
  corpus->require_subcommand(1);
  auto* gen = corpus->add_subcommand("gen", "Generate faulty versions from templates");
  std::string spec_dir = "corpus", gen_out;
  std::uint64_t gen_seed = 2024;
  int mutations = 0;
  gen->add_option("--spec", spec_dir, "Directory with templates/ and plan.txt")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Root seed")->capture_default_str();
  gen->add_option("--mutations", mutations, "Mutants per template (overrides plan.txt)");

  // run
  auto* run = app.add_subcommand("run", "Run scenarios over a corpus and write reports");
  pcd::RunConfig cfg;
  std::string config_file, scenarios, methods, eval_space, tie_policy;
  run->add_option("--config", config_file, "key = value configuration file");
  run->add_option("--corpus", cfg.corpus, "Corpus directory");
  run->add_option("--out", cfg.out_dir, "Output directory");
  run->add_option("--steps", cfg.steps, "Number of diffusion steps");
  run->add_option("--lr", cfg.lr, "Learning rate");
  run->add_option("--beta1", cfg.beta_1, "Initial beta");
  run->add_option("--betaT", cfg.beta_T, "Final beta");
  run->add_option("--alpha", cfg.alpha, "Fusion ratio");
  run->add_option("--gamma", cfg.gamma, "Guidance scale");
  run->add_option("--sample-steps", cfg.sample_steps, "DPM-Solver steps");
  run->add_option("--order", cfg.solver_order, "DPM-Solver order (1 or 2)");
  run->add_option("--epochs", cfg.epochs, "Maximum training epochs");
  run->add_option("--patience", cfg.patience, "Early-stop patience in epochs");
  run->add_option("--scenarios", scenarios, "Comma list of origin,pcd,undersample,resample");
  run->add_option("--methods", methods, "Comma list of dstar,ochiai,barinel,gp02,mlpfl");
  run->add_option("--eval-space", eval_space, "full, context or both");
  run->add_option("--tie-policy", tie_policy, "ordinal or best-case");
  run->add_flag("--reject-empty", cfg.reject_empty, "Redraw generated rows that decode to all zeros");
  run->add_option("--jobs", cfg.jobs, "Versions processed in parallel");
  run->add_option("--seed", cfg.seed, "Root seed");

  // report
  auto* report = app.add_subcommand("report", "Render the report of a finished run");
  std::string report_dir, format = "table";
  report->add_option("--run", report_dir, "Run output directory")->required();
  report->add_option("--format", format, "table, json or csv")->check(CLI::IsMember({"table", "json", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto spec = pcd::load_corpus_spec(spec_dir);
      if (mutations > 0) spec.mutations_per_template = mutations;
      const auto n = pcd::corpus_gen(spec, gen_seed, gen_out);
      std::cout << "wrote " << n << " versions to " << gen_out << "\n";
      return 0;
    }

    if (run->parsed()) {
      // Flags given on the command line win over the config file.
      if (!config_file.empty()) {
        pcd::RunConfig from_file;
        pcd::apply_config_file(from_file, config_file);
        for (auto* opt : run->get_options()) {
          if (opt->count() > 0 || opt->get_name() == "--help") continue;
          const auto name = opt->get_name();
          if (name == "--corpus") cfg.corpus = from_file.corpus;
          else if (name == "--out") cfg.out_dir = from_file.out_dir;
          else if (name == "--steps") cfg.steps = from_file.steps;
          else if (name == "--lr") cfg.lr = from_file.lr;
          else if (name == "--beta1") cfg.beta_1 = from_file.beta_1;
          else if (name == "--betaT") cfg.beta_T = from_file.beta_T;
          else if (name == "--alpha") cfg.alpha = from_file.alpha;
          else if (name == "--gamma") cfg.gamma = from_file.gamma;
          else if (name == "--sample-steps") cfg.sample_steps = from_file.sample_steps;
          else if (name == "--order") cfg.solver_order = from_file.solver_order;
          else if (name == "--epochs") cfg.epochs = from_file.epochs;
          else if (name == "--patience") cfg.patience = from_file.patience;
          else if (name == "--reject-empty") cfg.reject_empty = from_file.reject_empty;
          else if (name == "--jobs") cfg.jobs = from_file.jobs;
          else if (name == "--seed") cfg.seed = from_file.seed;
        }
        if (scenarios.empty()) cfg.scenarios = from_file.scenarios;
        if (methods.empty()) cfg.methods = from_file.methods;
        if (eval_space.empty()) cfg.eval_space = from_file.eval_space;
        cfg.op = from_file.op;
        cfg.p_uncond = from_file.p_uncond;
        cfg.batch_size = from_file.batch_size;
        cfg.denoiser = from_file.denoiser;
      }
      if (!scenarios.empty()) {
        cfg.scenarios.clear();
        for (const auto& s : split_csv(scenarios)) cfg.scenarios.push_back(pcd::scenario_from_string(s));
      }
      if (!methods.empty()) cfg.methods = split_csv(methods);
      if (!eval_space.empty()) cfg.eval_space = pcd::eval_space_from_string(eval_space);
      if (!tie_policy.empty()) {
        if (tie_policy == "best-case")
          cfg.tie_policy = pcd::TiePolicy::BestCase;
        else if (tie_policy == "ordinal")
          cfg.tie_policy = pcd::TiePolicy::Ordinal;
        else
          throw pcd::ConfigError("tie policy must be ordinal or best-case");
      }
      if (cfg.corpus.empty()) throw pcd::ConfigError("no corpus given (--corpus or corpus = ...)");

      const auto result = pcd::run_pipeline(cfg);
      std::cout << pcd::report_table(result.report);
      for (const auto& e : result.report.errors) std::cerr << "error: " << e << "\n";
      return result.any_error() ? 1 : 0;
    }

    if (report->parsed()) {
      const std::string dir = report_dir;
      if (format == "json") {
        std::cout << slurp(dir + "/report.json");
      } else {
        const auto rep = pcd::report_from_json(slurp(dir + "/report.json"));
        std::cout << (format == "csv" ? pcd::rimp_csv(rep) : pcd::report_table(rep));
      }
      return 0;
    }
  } catch (const pcd::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
