// Copyright 2026 The RootProbe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ROOTPROBE_CLI_HPP_
#define ROOTPROBE_CLI_HPP_

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rootprobe/dataset.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/pipeline.hpp"
#include "rootprobe/reducer.hpp"
#include "rootprobe/remote.hpp"
#include "rootprobe/report.hpp"
#include "rootprobe/surrogate.hpp"

namespace rootprobe::cli {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr const char* kModelUrlEnv = "ROOTPROBE_MODEL_URL";

enum class Command { kExplain, kReduce, kBatch, kReport, kCheckModel };

inline std::string command_name(Command c) {
  switch (c) {
    case Command::kExplain: return "explain";
    case Command::kReduce: return "reduce";
    case Command::kBatch: return "batch";
    case Command::kReport: return "report";
    case Command::kCheckModel: return "check-model";
  }
  return "?";
}

// Bad arguments; reported before any work starts.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  Command command = Command::kBatch;
  std::string model = "builtin";
  std::string dataset_path;
  std::optional<std::size_t> limit;
  SurrogateConfig surrogate;
  std::string out_dir = "out";
  std::string format = "json";
  int workers = 1;
  int max_inflight = 1;  // remote answerers only
  std::optional<std::string> example_id;
  bool recompute_coefficients = false;
  std::optional<std::string> pos_tags;
  std::size_t n_bins = 10;

  void validate() const {
    if (workers < 1) throw UsageError("--workers must be >= 1");
    if (max_inflight < 1) throw UsageError("--max-inflight must be >= 1");
    if (limit && *limit < 1) throw UsageError("--limit must be >= 1");
    if (n_bins < 1) throw UsageError("--bins must be >= 1");
    if (!(surrogate.kernel_width > 0)) throw UsageError("--kernel-width must be > 0");
    if (!(surrogate.ridge_alpha >= 0)) throw UsageError("--alpha must be >= 0");
    try {
      parse_format(format);
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
    const bool needs_data = command == Command::kExplain || command == Command::kReduce ||
                            command == Command::kBatch;
    if (needs_data && dataset_path.empty())
      throw UsageError(command_name(command) + " requires --data");
  }
};

// "builtin", "oracle:<keyword>:<target>[:<span end>]", "scripted:<path>",
// "http:<url>".
inline std::unique_ptr<Answerer> make_answerer(const std::string& spec, int max_inflight = 1) {
  if (spec == "builtin") return std::make_unique<BaselineAnswerer>();
  if (spec.starts_with("oracle:")) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
      const auto next = spec.find(':', pos);
      parts.push_back(spec.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (parts.size() < 3 || parts.size() > 4 || parts[1].empty())
      throw UsageError("model spec '" + spec + "': expected oracle:<keyword>:<target>");
    try {
      std::size_t used = 0;
      const auto target = std::stoul(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
      std::optional<std::size_t> end;
      if (parts.size() == 4) end = std::stoul(parts[3]);
      return std::make_unique<KeywordOracle>(parts[1], target, end);
    } catch (const std::logic_error&) {
      throw UsageError("model spec '" + spec + "': target must be a token index");
    }
  }
  if (spec.starts_with("scripted:")) {
    try {
      return std::make_unique<ScriptedAnswerer>(ScriptedAnswerer::from_file(spec.substr(9)));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (spec.starts_with("http://") || spec.starts_with("https://"))
    return std::make_unique<RemoteAnswerer>(spec, max_inflight);
  if (spec.starts_with("http:")) {
    std::string url = spec.substr(5);
    if (url.find("://") == std::string::npos) url = "http://" + url;
    return std::make_unique<RemoteAnswerer>(url, max_inflight);
  }
  throw UsageError("unknown model spec '" + spec +
                   "' (builtin, oracle:<keyword>:<target>, scripted:<path>, http:<url>)");
}

namespace cli_internal {

namespace fs = std::filesystem;

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string trace_file_name(std::size_t ordinal, std::string_view id) {
  std::string safe;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    safe += ok ? c : '_';
  }
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%05zu_", ordinal);
  return prefix + safe + ".json";
}

inline void write_json(const fs::path& path, const ojson& j) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

inline ojson read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline std::string pos_source(const RunConfig& cfg) {
  return cfg.pos_tags ? "tags:" + *cfg.pos_tags
                      : "heuristic: single non-wh, non-stopword word without -ing/-ed counts as noun";
}

// Deterministic part of the run description; excludes worker count and
// wall-clock times so reports do not depend on them.
inline ojson config_echo(const RunConfig& cfg, const Answerer& answerer) {
  return ojson{{"tool", "rootprobe"},
               {"version", kVersion},
               {"command", command_name(cfg.command)},
               {"model", cfg.model},
               {"model_kind", kind_name(answerer.kind())},
               {"dataset", cfg.dataset_path},
               {"limit", cfg.limit ? ojson(*cfg.limit) : ojson(nullptr)},
               {"surrogate", to_json(cfg.surrogate)},
               {"recompute_coefficients", cfg.recompute_coefficients},
               {"pos_source", pos_source(cfg)},
               {"n_bins", cfg.n_bins}};
}

struct Context {
  const RunConfig& cfg;
  std::ostream& out;
  std::ostream& err;
  Diagnostics diag;
  std::optional<PosLexicon> lexicon;

  CategoryOptions categories() const {
    return CategoryOptions{lexicon ? &*lexicon : nullptr};
  }
};

inline QaExample select_example(Context& ctx) {
  auto examples = load_squad(ctx.cfg.dataset_path, &ctx.diag);
  if (examples.empty()) throw Error("dataset " + ctx.cfg.dataset_path + " has no examples");
  if (!ctx.cfg.example_id) return examples.front();
  for (auto& ex : examples)
    if (ex.id == *ctx.cfg.example_id) return ex;
  throw Error("example id '" + *ctx.cfg.example_id + "' not in " + ctx.cfg.dataset_path);
}

inline AnalysisOptions analysis_options(const RunConfig& cfg) {
  return AnalysisOptions{cfg.surrogate, cfg.recompute_coefficients};
}

inline int do_explain(Context& ctx, const Answerer& answerer) {
  const auto example = select_example(ctx);
  SurrogateConfig config = ctx.cfg.surrogate;
  config.seed = example_seed(config.seed, example.id);
  const TokenizedText question = tokenize(example.question);
  if (question.word_count() == 0) throw Error("example " + example.id + ": empty question");
  PredictionCache cache;
  const auto& full =
      cache.get(answerer, question, example.context, Mask::all_ones(question.word_count()));
  const std::size_t target = resolve_target(example, full);
  const auto explanation = explain(question, example.context, answerer, target, config, &cache);

  const fs::path out_dir(ctx.cfg.out_dir);
  ojson j{{"example_id", example.id},
          {"question", example.question},
          {"target_class", target},
          {"target_token", full.context_tokens[target]},
          {"full_question_answer", full.answer_text},
          {"explanation", to_json(explanation)}};
  write_json(out_dir / "explanation.json", j);
  if (parse_format(ctx.cfg.format) == ReportFormat::kSvg)
    report_internal::write_file(out_dir / "coefficients.svg",
                                render_coefficients_svg(explanation.words, explanation.coefficients));
  for (std::size_t i = 0; i < explanation.words.size(); ++i)
    ctx.out << explanation.words[i] << '\t' << explanation.coefficients[i] << '\n';
  ctx.out << "wrote " << (out_dir / "explanation.json").string() << '\n';
  return 0;
}

inline int do_reduce(Context& ctx, const Answerer& answerer) {
  const auto example = select_example(ctx);
  const auto trace = analyze_example(example, answerer, analysis_options(ctx.cfg));
  const auto root = find_root(trace);
  const fs::path path = fs::path(ctx.cfg.out_dir) / "traces" / trace_file_name(0, example.id);
  write_json(path, to_json(trace));
  ctx.out << "root question: " << join(root.words) << " (" << root.word_count << " of "
          << trace.steps.size() << " words, " << root.percent_removed * 100.0 << "% removed)\n";
  ctx.out << "wrote " << path.string() << '\n';
  return 0;
}

inline void write_report(Context& ctx, const AnalysisReport& report) {
  const fs::path out_dir(ctx.cfg.out_dir);
  auto written = emit(report, ReportFormat::kJson, out_dir);
  const auto format = parse_format(ctx.cfg.format);
  if (format != ReportFormat::kJson) {
    auto more = emit(report, format, out_dir);
    written.insert(written.end(), more.begin(), more.end());
  }
  for (const auto& p : written) ctx.out << "wrote " << p.string() << '\n';
}

inline int do_batch(Context& ctx, const Answerer& answerer) {
  const auto started = utc_now();
  auto examples = load_squad(ctx.cfg.dataset_path, &ctx.diag);
  const std::size_t loaded = examples.size();
  if (ctx.cfg.limit && examples.size() > *ctx.cfg.limit) examples.resize(*ctx.cfg.limit);
  FilterStats stats;
  const auto kept = filter_correct(examples, answerer, ctx.cfg.workers, &ctx.diag, &stats);
  ctx.out << "filter: kept " << stats.kept << ", dropped " << stats.dropped << '\n';

  const auto result =
      analyze_batch(kept, answerer, analysis_options(ctx.cfg), ctx.cfg.workers, &ctx.diag);

  const fs::path out_dir(ctx.cfg.out_dir);
  std::error_code ec;
  fs::remove_all(out_dir / "traces", ec);
  std::vector<ExampleRecord> records;
  for (std::size_t i = 0; i < result.traces.size(); ++i) {
    if (!result.traces[i]) continue;
    auto j = to_json(*result.traces[i]);
    write_json(out_dir / "traces" / trace_file_name(i, kept[i].id), j);
    records.push_back(record_from_trace_json(j, ctx.categories()));
  }

  ojson meta = config_echo(ctx.cfg, answerer);
  meta["examples_loaded"] = loaded;
  meta["examples_inspected"] = examples.size();
  meta["examples_kept"] = stats.kept;
  meta["examples_dropped"] = stats.dropped;
  meta["examples_traced"] = records.size();
  meta["failures"] = result.failures;
  write_json(out_dir / "config.json", meta);

  ojson run_meta{{"config", meta},
                 {"workers", ctx.cfg.workers},
                 {"max_inflight", answerer.max_inflight() == kUnboundedInflight
                                      ? ojson("unbounded")
                                      : ojson(answerer.max_inflight())},
                 {"started_at", started},
                 {"finished_at", utc_now()},
                 {"diagnostics", ctx.diag.messages()}};
  write_json(out_dir / "run_metadata.json", run_meta);

  write_report(ctx, build_report(std::move(records), ctx.cfg.n_bins, meta));
  for (const auto& f : result.failures) ctx.err << "warning: " << f << '\n';
  return 0;
}

inline int do_report(Context& ctx) {
  const fs::path out_dir(ctx.cfg.out_dir);
  const fs::path traces = out_dir / "traces";
  if (!fs::is_directory(traces)) throw IoError("no traces under " + traces.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(traces))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<ExampleRecord> records;
  for (const auto& f : files) records.push_back(record_from_trace_json(read_json(f), ctx.categories()));
  ojson meta = fs::exists(out_dir / "config.json") ? read_json(out_dir / "config.json")
                                                   : ojson{{"tool", "rootprobe"}, {"version", kVersion}};
  meta["pos_source"] = pos_source(ctx.cfg);
  meta["n_bins"] = ctx.cfg.n_bins;
  write_report(ctx, build_report(std::move(records), ctx.cfg.n_bins, meta));
  return 0;
}

inline int do_check_model(Context& ctx, const Answerer& answerer) {
  std::string question = "What is the capital of France?";
  std::string context = "Paris is the capital and largest city of France.";
  if (!ctx.cfg.dataset_path.empty()) {
    const auto ex = select_example(ctx);
    question = ex.question;
    context = ex.context;
  }
  if (const auto* remote = dynamic_cast<const RemoteAnswerer*>(&answerer)) {
    remote->health();
    ctx.out << "health: ok\n";
  }
  const auto p = answerer.predict(question, context);
  if (auto failed = check_prediction(p)) throw ProtocolError("validation failed: " + *failed);
  ctx.out << "predict: ok (" << kind_name(answerer.kind()) << ", " << p.context_tokens.size()
          << " context tokens, answer '" << p.answer_text << "')\n";
  return 0;
}

}  // namespace cli_internal

// Exit status: 0 success, 1 usage error, 2 runtime failure.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  using namespace cli_internal;
  std::unique_ptr<Answerer> answerer;
  Context ctx{cfg, out, err, {}, std::nullopt};
  try {
    cfg.validate();
    if (cfg.command != Command::kReport) answerer = make_answerer(cfg.model, cfg.max_inflight);
    if (cfg.pos_tags) ctx.lexicon = PosLexicon::from_file(*cfg.pos_tags);
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  }
  try {
    switch (cfg.command) {
      case Command::kExplain: return do_explain(ctx, *answerer);
      case Command::kReduce: return do_reduce(ctx, *answerer);
      case Command::kBatch: return do_batch(ctx, *answerer);
      case Command::kReport: return do_report(ctx);
      case Command::kCheckModel: return do_check_model(ctx, *answerer);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

// Parses argv into a RunConfig and runs it.
inline int main_entry(int argc, char** argv, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  CLI::App app{"rootprobe: local-surrogate explanations and root-question reduction for "
               "extractive QA models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunConfig cfg;
  std::optional<std::string> model;
  std::optional<std::size_t> limit;
  std::optional<std::string> example_id, pos_tags;

  app.add_option("--model", model,
                 "builtin | oracle:<keyword>:<target> | scripted:<path> | http:<url>");
  app.add_option("--data", cfg.dataset_path, "SQuAD v1.1 JSON file");
  app.add_option("--limit", limit, "inspect at most N examples (file order)");
  app.add_option("--id", example_id, "example id for explain/reduce (default: first)");
  app.add_option("--samples", cfg.surrogate.n_samples, "perturbations per question")
      ->capture_default_str();
  app.add_option("--kernel-width", cfg.surrogate.kernel_width, "proximity kernel width")
      ->capture_default_str();
  app.add_option("--alpha", cfg.surrogate.ridge_alpha, "ridge penalty")->capture_default_str();
  app.add_option("--seed", cfg.surrogate.seed, "run seed")->capture_default_str();
  app.add_option("--workers", cfg.workers, "parallel examples")->capture_default_str();
  app.add_option("--max-inflight", cfg.max_inflight, "concurrent requests to an http model")
      ->capture_default_str();
  app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--format", cfg.format, "json | csv | svg")->capture_default_str();
  app.add_option("--bins", cfg.n_bins, "histogram bins")->capture_default_str();
  app.add_flag("--recompute-coefficients", cfg.recompute_coefficients,
               "re-fit the surrogate before every removal");
  app.add_option("--pos-tags", pos_tags, "JSON word -> POS tag map for root categories");

  const std::vector<std::pair<Command, std::string>> commands = {
      {Command::kExplain, "surrogate coefficients for one example"},
      {Command::kReduce, "reduction trace and root question for one example"},
      {Command::kBatch, "filter, explain and reduce a dataset, then report"},
      {Command::kReport, "re-aggregate stored traces"},
      {Command::kCheckModel, "health check and one validated prediction"}};
  for (const auto& [cmd, help] : commands) {
    auto* sub = app.add_subcommand(command_name(cmd), help);
    sub->fallthrough();
    sub->callback([&cfg, cmd = cmd] { cfg.command = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  if (model) {
    cfg.model = *model;
  } else if (const char* url = std::getenv(kModelUrlEnv); url != nullptr && *url != '\0') {
    cfg.model = std::string("http:") + url;
  }
  cfg.limit = limit;
  cfg.example_id = example_id;
  cfg.pos_tags = pos_tags;
  return run(cfg, out, err);
}

}  // namespace rootprobe::cli

#endif  // ROOTPROBE_CLI_HPP_
