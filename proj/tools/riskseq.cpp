// SPDX-License-Identifier: Apache-2.0
// riskseq: generate, train, evaluate, compare and attention commands.
// Exit codes: 0 success, 1 configuration/validation, 2 I/O, 3 numerical abort.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <riskseq/commands.hpp>

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> top_k;
  std::optional<std::string> checkpoint;
};

void add_common(CLI::App *cmd, Flags &f) {
  cmd->add_option("--config", f.config, "engine config file (INI)")->required();
  cmd->add_option("--seed", f.seed, "run seed (generator seed for generate)");
  cmd->add_option("--out", f.out, "output directory (corpus file for generate)");
}

riskseq::EngineConfig resolve(const Flags &f, bool generating) {
  auto c = riskseq::load_engine_config(f.config);
  if (f.seed) {
    if (generating)
      c.dataset.generator_seed = *f.seed;
    else
      c.training.seed = *f.seed;
  }
  if (f.out && !generating)
    c.evaluation.output_dir = *f.out;
  if (f.workers)
    c.evaluation.workers = *f.workers;
  if (f.top_k)
    c.evaluation.top_k = *f.top_k;
  if (f.checkpoint)
    c.evaluation.checkpoint = *f.checkpoint;
  return c;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"riskseq: time-decayed, emotion-fused recurrent risk classifier"};
  app.require_subcommand(1);
  Flags f;

  auto *gen = app.add_subcommand("generate", "write a synthetic corpus as JSONL");
  add_common(gen, f);
  auto *trn = app.add_subcommand("train", "train one model, write checkpoint and history");
  add_common(trn, f);
  auto *evl = app.add_subcommand("evaluate", "score a checkpoint, write metrics JSON and CSV");
  add_common(evl, f);
  evl->add_option("--checkpoint", f.checkpoint, "checkpoint file");
  auto *cmp = app.add_subcommand("compare", "multi-seed runs and Wilcoxon table");
  add_common(cmp, f);
  cmp->add_option("--workers", f.workers, "parallel seed runs")->check(CLI::PositiveNumber);
  auto *att = app.add_subcommand("attention", "ranked attention weights per user (JSONL)");
  add_common(att, f);
  att->add_option("--checkpoint", f.checkpoint, "checkpoint file");
  att->add_option("--top-k", f.top_k, "posts kept per user (0 keeps all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      auto c = resolve(f, true);
      riskseq::cmd_generate(c, f.out.value_or(""), std::cout);
    } else if (trn->parsed()) {
      riskseq::cmd_train(resolve(f, false), std::cout);
    } else if (evl->parsed()) {
      riskseq::cmd_evaluate(resolve(f, false), std::cout);
    } else if (cmp->parsed()) {
      riskseq::cmd_compare(resolve(f, false), std::cout);
    } else if (att->parsed()) {
      riskseq::cmd_attention(resolve(f, false), std::cout);
    }
  } catch (const riskseq::Error &e) {
    std::cerr << "riskseq: " << e.what() << "\n";
    return riskseq::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "riskseq: I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "riskseq: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
