// SPDX-License-Identifier: Apache-2.0
/**
 * @file   commands.hpp
 * @brief  The generate / train / evaluate / compare / attention commands,
 *         callable in-process. The riskseq tool only parses flags and maps
 *         errors to exit codes.
 */
#pragma once

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "checkpoint.hpp"
#include "config.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "synthetic.hpp"

namespace riskseq {

namespace files {
inline constexpr const char *kHistory = "history.json";
inline constexpr const char *kMetricsJson = "metrics.json";
inline constexpr const char *kMetricsCsv = "metrics.csv";
inline constexpr const char *kRunsCsv = "runs.csv";
inline constexpr const char *kComparison = "comparison.csv";
inline constexpr const char *kSummary = "summary.json";
inline constexpr const char *kAttention = "attention.jsonl";
} // namespace files

inline constexpr const char *kMetricsCsvHeader = "model,seed,accuracy,precision,recall,f1,auroc,auprc";

namespace detail {

inline std::string out_file(const EngineConfig &c, const char *name) {
  return (std::filesystem::path(c.evaluation.output_dir) / name).string();
}

inline void make_output_dir(const EngineConfig &c) {
  std::error_code ec;
  std::filesystem::create_directories(c.evaluation.output_dir, ec);
  if (ec)
    fail(ErrorKind::Io, "cannot create output directory '" + c.evaluation.output_dir +
                            "': " + ec.message());
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline const Corpus &pick_split(const CorpusSplit &parts, const Corpus &all,
                                const std::string &name) {
  if (name == "train")
    return parts.train;
  if (name == "val")
    return parts.val;
  if (name == "test")
    return parts.test;
  return all;
}

} // namespace detail

/// The configured corpus: read from dataset.path, or generated in memory.
inline Corpus load_or_generate(const EngineConfig &c) {
  if (!c.dataset.path.empty())
    return load_corpus(c.dataset.path);
  return generate_synthetic(c.dataset.generator, c.dataset.generator_seed);
}

/// Downsampled (if configured) corpus and its split for one seed.
struct PreparedData {
  Corpus corpus;
  CorpusSplit split;
};

inline PreparedData prepare(const EngineConfig &c, const Corpus &raw, std::uint64_t seed) {
  PreparedData p{c.dataset.downsample ? downsample(raw, seed) : raw, {}};
  p.split = split(p.corpus, c.dataset.fractions, seed);
  return p;
}

inline nlohmann::ordered_json to_json(const MetricsReport &r, std::string_view model,
                                      std::string_view split_name) {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["seed"] = r.seed;
  j["split"] = split_name;
  j["users"] = r.total();
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["auroc"] = r.auroc;
  j["auprc"] = r.auprc;
  j["confusion"] = {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
  auto undefined = nlohmann::ordered_json::array();
  if (r.precision_undefined)
    undefined.push_back("precision");
  if (r.recall_undefined)
    undefined.push_back("recall");
  if (r.f1_undefined)
    undefined.push_back("f1");
  j["undefined"] = undefined;
  return j;
}

inline std::string metrics_csv_row(const MetricsReport &r, std::string_view model) {
  std::string row = std::string(model) + "," + std::to_string(r.seed);
  for (auto name : kMetricNames)
    row += "," + detail::fmt(metric_value(r, name));
  return row;
}

/// Significance column: the smallest level met, or "ns".
inline std::string sig_label(const ComparisonResult &r) {
  if (!r.significant_at)
    return "ns";
  return *r.significant_at == 0.001 ? "0.001" : "0.005";
}

inline std::string comparison_csv(const std::vector<ComparisonRow> &rows) {
  std::string out = "comparison,z,p,sig\n";
  for (const auto &row : rows)
    out += row.comparison + "," + detail::fmt(row.result.z_value) + "," +
           detail::fmt(row.result.p_value) + "," + sig_label(row.result) + "\n";
  return out;
}

inline nlohmann::ordered_json to_json(const UserAttention &u) {
  nlohmann::ordered_json j;
  j["user_id"] = u.user_id;
  j["label"] = u.label;
  j["posts"] = u.posts;
  auto entries = nlohmann::ordered_json::array();
  for (const auto &e : u.entries)
    entries.push_back({{"post_index", e.post_index}, {"weight", e.weight}, {"excerpt", e.excerpt}});
  j["top"] = entries;
  return j;
}

// Commands

inline CorpusSummary cmd_generate(const EngineConfig &c, const std::string &out_path,
                                  std::ostream &log) {
  c.validate();
  if (out_path.empty())
    fail(ErrorKind::Config, "generate needs an output path (--out)");
  const Corpus corpus = generate_synthetic(c.dataset.generator, c.dataset.generator_seed);
  save_corpus(corpus, out_path);
  const auto summary = summarize(corpus);
  log << format_summary(summary) << "\n";
  return summary;
}

struct TrainOutcome {
  TrainHistory history;
  std::string checkpoint;
};

inline TrainOutcome cmd_train(const EngineConfig &c, std::ostream &log) {
  c.validate();
  const Corpus raw = load_or_generate(c);
  const auto data = prepare(c, raw, c.training.seed);
  const Encoders enc = make_encoders(c.encoder);
  ModelConfig model = c.model;
  model.init_seed = c.training.seed;
  TrainConfig tc = c.training;
  tc.checkpoint_path = c.checkpoint_path();
  detail::make_output_dir(c);
  if (auto parent = std::filesystem::path(tc.checkpoint_path).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  auto result = train(model, tc, encode_corpus(model, data.split.train, enc),
                      encode_corpus(model, data.split.val, enc), &log);
  write_file_atomic(detail::out_file(c, files::kHistory), to_json(result.history).dump(2) + "\n");
  log << "best epoch " << result.history.best_epoch + 1 << ", checkpoint " << tc.checkpoint_path
      << "\n";
  return {std::move(result.history), tc.checkpoint_path};
}

inline MetricsReport cmd_evaluate(const EngineConfig &c, std::ostream &log) {
  c.validate();
  ModelConfig model = c.model;
  model.init_seed = c.training.seed;
  const auto [stored, params] = load_checkpoint(c.checkpoint_path(), model);
  const Corpus raw = load_or_generate(c);
  const auto data = prepare(c, raw, c.training.seed);
  const Corpus &part = detail::pick_split(data.split, data.corpus, c.evaluation.split);
  const Encoders enc = make_encoders(c.encoder);
  const auto preds = predict(stored, params, encode_corpus(stored, part, enc),
                             c.training.batch_size, pad_options(c.training));
  auto report = evaluate_scores(preds.scores, preds.labels, preds.truth);
  report.seed = c.training.seed;
  const auto name = to_string(stored.architecture);
  detail::make_output_dir(c);
  write_file_atomic(detail::out_file(c, files::kMetricsJson),
                    to_json(report, name, c.evaluation.split).dump(2) + "\n");
  write_file_atomic(detail::out_file(c, files::kMetricsCsv),
                    std::string(kMetricsCsvHeader) + "\n" + metrics_csv_row(report, name) + "\n");
  char line[160];
  std::snprintf(line, sizeof line, "%s on %s (%zu users): f1 %.4f auroc %.4f auprc %.4f\n",
                std::string(name).c_str(), c.evaluation.split.c_str(), report.total(), report.f1,
                report.auroc, report.auprc);
  log << line;
  return report;
}

struct CompareOutcome {
  std::vector<SeedAggregate> aggregates;
  std::vector<ComparisonRow> rows;
};

inline CompareOutcome cmd_compare(const EngineConfig &c, std::ostream &log) {
  c.validate();
  const auto &archs = c.evaluation.architectures;
  if (archs.size() < 2)
    fail(ErrorKind::Config, "compare needs at least 2 architectures in evaluation.architectures");
  if (c.evaluation.seeds.size() < kMinWilcoxonPairs)
    fail(ErrorKind::Config, "compare needs at least " + std::to_string(kMinWilcoxonPairs) +
                                " seeds, got " + std::to_string(c.evaluation.seeds.size()));
  const Corpus raw = load_or_generate(c);
  EncodedCorpus data(raw, make_encoders(c.encoder));
  RunSettings settings{c.dataset.downsample, c.dataset.fractions};
  CompareOutcome out;
  for (auto arch : archs) {
    ModelConfig model = ModelConfig::for_architecture(arch, c.model.d_text, c.model.hidden);
    model.dropout_rate = c.model.dropout_rate;
    model.pooling = c.model.pooling;
    out.aggregates.push_back(
        multi_seed_run(data, model, c.training, settings, c.evaluation.seeds, c.evaluation.workers));
    const auto &a = out.aggregates.back();
    char line[160];
    std::snprintf(line, sizeof line, "%-12s f1 %.4f +- %.4f  auroc %.4f  (%zu seeds)\n",
                  std::string(to_string(arch)).c_str(), a.mean.at("f1"), a.std.at("f1"),
                  a.mean.at("auroc"), a.runs.size());
    log << line << std::flush;
  }
  out.rows = compare_consecutive(out.aggregates);

  std::string runs = std::string(kMetricsCsvHeader) + "\n";
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto &a : out.aggregates) {
    for (const auto &r : a.runs)
      runs += metrics_csv_row(r, to_string(a.architecture)) + "\n";
    nlohmann::ordered_json j;
    j["model"] = to_string(a.architecture);
    j["seeds"] = a.runs.size();
    for (auto name : kMetricNames)
      j[std::string(name)] = {{"mean", a.mean.at(std::string(name))},
                              {"std", a.std.at(std::string(name))}};
    summary.push_back(j);
  }
  const std::string table = comparison_csv(out.rows);
  detail::make_output_dir(c);
  write_file_atomic(detail::out_file(c, files::kRunsCsv), runs);
  write_file_atomic(detail::out_file(c, files::kSummary), summary.dump(2) + "\n");
  write_file_atomic(detail::out_file(c, files::kComparison), table);
  log << table;
  return out;
}

inline std::vector<UserAttention> cmd_attention(const EngineConfig &c, std::ostream &log) {
  c.validate();
  if (!c.model.use_attention)
    fail(ErrorKind::Config, "attention needs an attention architecture, got " +
                                std::string(to_string(c.model.architecture)));
  ModelConfig model = c.model;
  model.init_seed = c.training.seed;
  const auto [stored, params] = load_checkpoint(c.checkpoint_path(), model);
  const Corpus raw = load_or_generate(c);
  const auto data = prepare(c, raw, c.training.seed);
  const Corpus &part = detail::pick_split(data.split, data.corpus, c.evaluation.split);
  auto report = attention_report(params, stored, part, make_encoders(c.encoder),
                                 c.evaluation.top_k, c.training.batch_size);
  std::string lines;
  for (const auto &u : report)
    lines += to_json(u).dump() + "\n";
  detail::make_output_dir(c);
  write_file_atomic(detail::out_file(c, files::kAttention), lines);
  log << "attention for " << report.size() << " users written to "
      << detail::out_file(c, files::kAttention) << "\n";
  return report;
}

} // namespace riskseq
