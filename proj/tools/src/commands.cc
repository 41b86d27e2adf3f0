#include "qkiter_cli/commands.h"

#include <chrono>
#include <fstream>
#include <sstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "qkiter/checkpoint.h"
#include "qkiter/dataset_io.h"
#include "qkiter/encoder.h"
#include "qkiter/featurizer.h"
#include "qkiter/metrics.h"
#include "qkiter/synth.h"

namespace qkiter::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kTrainLogFile = "train_log.jsonl";
constexpr const char* kTimingFile = "timing.jsonl";
constexpr const char* kEvalLogFile = "evals.jsonl";
constexpr const char* kTrainStateFile = "train_state.qkts";
constexpr const char* kPhaseTableFile = "phase_table.json";
constexpr const char* kPhaseTableCsv = "phase_table.csv";
constexpr const char* kMetricsFile = "metrics.json";

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
    out << text;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

void append_lines(const fs::path& path, const std::vector<json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot append to " + path.string());
  for (const json& line : lines) out << line.dump() << '\n';
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

json step_json(const StepRecord& r) {
  return {{"step", r.step},         {"phase", r.phase},       {"lr", r.lr},
          {"loss", r.loss},         {"loss_pos", r.loss_pos}, {"loss_neg", r.loss_neg},
          {"short_mine", r.short_mine}};
}

json eval_json(const EvalRecord& r) {
  json j = metrics_json(r.metrics);
  j["step"] = r.step;
  j["phase"] = r.phase;
  return j;
}

json phase_json(const PhaseResult& p) {
  json j = metrics_json(p.metrics);
  j["phase"] = p.name;
  j["kind"] = p.kind == Phase::kQuery ? "Q" : "K";
  j["steps_run"] = p.steps_run;
  j["early_stopped"] = p.early_stopped;
  j["final_loss"] = p.final_loss;
  return j;
}

std::string phase_csv(const json& baseline, const json& phases) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "phase,mu_ap,macro_ap,steps_run,early_stopped\n";
  csv << "baseline," << baseline.at("mu_ap").get<double>() << ','
      << baseline.at("macro_ap").get<double>() << ",0,false\n";
  for (const json& p : phases) {
    csv << p.at("phase").get<std::string>() << ',' << p.at("mu_ap").get<double>() << ','
        << p.at("macro_ap").get<double>() << ',' << p.at("steps_run").get<std::size_t>() << ','
        << (p.at("early_stopped").get<bool>() ? "true" : "false") << '\n';
  }
  return csv.str();
}

// Buffers one phase worth of records so that the logs on disk always end at
// a phase boundary, the same point a resumed run restarts from.
struct LogBuffer {
  std::vector<json> steps;
  std::vector<json> timing;
  std::vector<json> evals;

  TrainObserver observer() {
    TrainObserver obs;
    obs.on_step = [this](const StepRecord& r) {
      steps.push_back(step_json(r));
      timing.push_back({{"step", r.step}, {"wall_time", r.wall_time}});
    };
    obs.on_eval = [this](const EvalRecord& r) { evals.push_back(eval_json(r)); };
    return obs;
  }

  void flush(const fs::path& dir) {
    append_lines(dir / kTrainLogFile, steps);
    append_lines(dir / kTimingFile, timing);
    append_lines(dir / kEvalLogFile, evals);
    steps.clear();
    timing.clear();
    evals.clear();
  }
};

void reset_logs(const fs::path& dir) {
  for (const char* name : {kTrainLogFile, kTimingFile, kEvalLogFile}) {
    write_text(dir / name, "");
  }
}

Dataset load_dataset(const fs::path& path, std::size_t d_in) {
  Dataset ds = read_dataset(path);
  require(ds.rows.rows() > 0, ErrorKind::kDegenerateInput, path.string() + " has no rows");
  require(ds.rows.cols() == d_in, ErrorKind::kInputShape,
          path.string() + " has dimension " + std::to_string(ds.rows.cols()) +
              ", the config expects " + std::to_string(d_in));
  return ds;
}

std::vector<std::uint64_t> row_ids(std::uint64_t base, std::size_t n) {
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = base + i;
  return ids;
}

void write_encoders(const fs::path& dir, const std::string& prefix, const TrainState& state) {
  write_checkpoint(dir / (prefix + "query.qkcp"), state.query, state.featurizer);
  write_checkpoint(dir / (prefix + "key.qkcp"), state.key, state.featurizer);
}

json train_qk(const TrainArgs& args, Experiment ex) {
  const fs::path& out = args.out;
  const fs::path state_path = out / kTrainStateFile;
  const fs::path table_path = out / kPhaseTableFile;

  json table = {{"baseline", nullptr}, {"phases", json::array()}};
  if (args.resume && fs::exists(state_path)) {
    TrainState restored = read_train_state(state_path);
    require(restored.featurizer == ex.state.featurizer, ErrorKind::kContract,
            "train state was produced from different data or config");
    ex.state = std::move(restored);
    table = read_json(table_path);
    require(table.at("phases").size() == ex.state.phase_index, ErrorKind::kFormat,
            "phase table does not match the train state");
  } else {
    reset_logs(out);
  }

  PhaseSchedule schedule = ex.config.schedule;
  if (args.max_phases) {
    require(*args.max_phases >= 1, ErrorKind::kConfig, "--max-phases must be >= 1");
    if (*args.max_phases < schedule.phases.size()) schedule.phases.resize(*args.max_phases);
  }
  if (ex.state.phase_index > schedule.phases.size()) {
    fail(ErrorKind::kContract, "train state is past the requested phases");
  }

  fs::create_directories(out / "checkpoints");
  LogBuffer logs;
  TrainObserver observer = logs.observer();
  observer.on_phase_end = [&](const PhaseResult& result, const TrainState& state) {
    logs.flush(out);
    const std::string prefix =
        "checkpoints/phase_" + std::to_string(state.phase_index - 1) + "_" + result.name + "_";
    write_encoders(out, prefix, state);
    table["phases"].push_back(phase_json(result));
    write_json(table_path, table);
    write_text(out / kPhaseTableCsv, phase_csv(table["baseline"], table["phases"]));
    write_train_state(state_path, state);
  };

  const EvalMetrics baseline = evaluate_baseline(ex.state.featurizer, ex.eval, ex.options.workers);
  table["baseline"] = metrics_json(baseline);
  write_json(table_path, table);
  write_text(out / kPhaseTableCsv, phase_csv(table["baseline"], table["phases"]));

  QkRunResult run =
      run_qk_iteration(schedule, std::move(ex.state), ex.data, ex.eval, ex.options, observer);
  write_encoders(out, "", run.state);

  json summary = {{"mode", "qk"},
                  {"baseline", table["baseline"]},
                  {"phases", table["phases"]},
                  {"steps", run.state.step},
                  // one store per completed phase, counted across resumes
                  {"bulk_evaluations", table["phases"].size()}};
  summary["final"] = table["phases"].empty() ? table["baseline"] : table["phases"].back();
  write_json(out / kMetricsFile, summary);
  return summary;
}

json train_simclr(const TrainArgs& args, Experiment ex) {
  require(!args.resume, ErrorKind::kConfig, "--resume applies to --mode qk only");
  const fs::path& out = args.out;
  reset_logs(out);
  LogBuffer logs;
  TrainOptions options = ex.options;
  if (ex.config.training.simclr_lr0 > 0.0) options.lr.lr0 = ex.config.training.simclr_lr0;
  if (ex.config.optimizer.decay_steps == 0) options.lr.decay_steps = ex.config.simclr_steps();

  SimclrResult run = run_simclr(std::move(ex.state), ex.data, ex.eval, options,
                                ex.config.simclr_steps(), ex.config.training.simclr_eval_every,
                                ex.config.schedule.seed, logs.observer());
  logs.flush(out);
  write_encoders(out, "", run.state);
  json summary = {{"mode", "simclr"},
                  {"baseline", metrics_json(run.baseline)},
                  {"final", metrics_json(run.final_metrics)},
                  {"steps", run.state.step}};
  write_json(out / kMetricsFile, summary);
  return summary;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kValidation:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
    case ErrorKind::kInputShape:
    case ErrorKind::kDegenerateInput:
    case ErrorKind::kMapping:
    case ErrorKind::kContract:
    case ErrorKind::kIndex:
    case ErrorKind::kRank:
      return 3;
    case ErrorKind::kNumeric:
    case ErrorKind::kRange:
      return 4;
    default:
      return 1;
  }
}

json metrics_json(const EvalMetrics& m) {
  return {{"mu_ap", m.mu_ap},
          {"macro_ap", m.macro_ap},
          {"n_pairs", m.n_pairs},
          {"n_positives", m.n_positives}};
}

ExperimentConfig resolve_config(const RunArgs& args) {
  ExperimentConfig config = load_config(args.config);
  if (args.seed_override) set_seed(config, *args.seed_override);
  if (args.data_dir) config.data_dir = fs::absolute(*args.data_dir);
  require(args.workers >= 1, ErrorKind::kConfig, "--workers must be >= 1");
  return config;
}

EvalSet load_eval_set(const fs::path& data_dir) {
  const Dataset keys = read_dataset(data_dir / kEvalKeysFile);
  const Dataset queries = read_dataset(data_dir / kEvalQueriesFile);
  EvalSet set;
  set.query_ids = row_ids(queries.id_base, queries.rows.rows());
  set.key_ids = row_ids(keys.id_base, keys.rows.rows());
  set.queries = queries.rows;
  set.keys = keys.rows;
  set.ground_truth = read_ground_truth_csv(data_dir / kEvalGroundTruthFile);
  set.validate();
  return set;
}

Experiment load_experiment(const ExperimentConfig& config, std::size_t workers,
                           const fs::path& store_dir) {
  const std::size_t d_in = config.data.synth.d_in;
  Dataset keys = load_dataset(config.data_dir / kTrainKeysFile, d_in);
  Dataset queries = load_dataset(config.data_dir / kTrainQueriesFile, d_in);
  require(keys.rows.rows() == queries.rows.rows(), ErrorKind::kInputShape,
          "training keys and queries differ in row count");
  require(keys.rows.rows() >= config.training.batch_size, ErrorKind::kInputShape,
          "training set is smaller than the batch size");

  Experiment ex;
  ex.config = config;
  ex.eval = load_eval_set(config.data_dir);
  require(ex.eval.queries.cols() == d_in, ErrorKind::kInputShape,
          "evaluation data does not match the config dimension");

  FeaturizerSpec spec;
  spec.seed = featurizer_seed(config);
  spec.in_dim = d_in;
  spec.raw_dim = config.model.featurizer_dim;
  spec.out_dim = config.model.out_dim;
  spec.projection_scale = config.model.projection_scale;
  BaselineFeaturizer featurizer = BaselineFeaturizer::fit(spec, keys.rows);

  const EncoderDims dims = config.encoder_dims();
  EncoderParams query = init_encoder(Role::kQuery, dims, NormStats::fit(queries.rows),
                                     encoder_seed(config, Role::kQuery));
  EncoderParams key = init_encoder(Role::kKey, dims, NormStats::fit(keys.rows),
                                   encoder_seed(config, Role::kKey));
  ex.data = TrainingData::build(std::move(keys.rows), std::move(queries.rows), featurizer, workers);
  ex.state = init_train_state(std::move(query), std::move(key), std::move(featurizer),
                              config.optimizer.adam);

  ex.options.loss = config.loss;
  ex.options.lr.lr0 = config.optimizer.lr0;
  ex.options.lr.decay_steps =
      config.optimizer.decay_steps == 0 ? config.total_steps() : config.optimizer.decay_steps;
  ex.options.lr.alpha = config.optimizer.alpha;
  ex.options.adam = config.optimizer.adam;
  ex.options.batch_size = config.training.batch_size;
  ex.options.chunk_size = config.training.chunk_size;
  ex.options.db_refresh_every = config.training.db_refresh_every;
  ex.options.workers = workers;
  ex.options.store_dir = store_dir;
  ex.options.validate();
  return ex;
}

void cmd_gen_data(const RunArgs& args) {
  const ExperimentConfig config = resolve_config(args);
  const SynthConfig& synth = config.data.synth;
  fs::create_directories(args.out);

  const Matrix keys = generate_keys(synth);
  const Matrix queries = augment_rows(keys, synth, args.workers);
  write_dataset(args.out / kTrainKeysFile, keys, 0);
  write_dataset(args.out / kTrainQueriesFile, queries, 0);

  const EvalSplit split =
      build_eval_split(synth, config.data.n_eval_queries, config.data.n_distractors);
  write_dataset(args.out / kEvalKeysFile, split.keys, split.key_id_base);
  write_dataset(args.out / kEvalQueriesFile, split.queries, split.query_id_base);
  write_ground_truth_csv(args.out / kEvalGroundTruthFile, split.ground_truth);

  const json manifest = {
      {"config", config_to_json(config)},
      {"seeds",
       {{"master", config.seed},
        {"eval", split.eval_config.seed},
        {"featurizer", featurizer_seed(config)},
        {"query_encoder", encoder_seed(config, Role::kQuery)},
        {"key_encoder", encoder_seed(config, Role::kKey)},
        {"schedule", config.schedule.seed}}},
      {"files",
       {{"train_keys", {{"file", kTrainKeysFile}, {"rows", keys.rows()}, {"id_base", 0}}},
        {"train_queries", {{"file", kTrainQueriesFile}, {"rows", queries.rows()}, {"id_base", 0}}},
        {"eval_keys",
         {{"file", kEvalKeysFile}, {"rows", split.keys.rows()}, {"id_base", split.key_id_base}}},
        {"eval_queries",
         {{"file", kEvalQueriesFile},
          {"rows", split.queries.rows()},
          {"id_base", split.query_id_base},
          {"matched", split.n_matched_queries}}},
        {"ground_truth",
         {{"file", kEvalGroundTruthFile}, {"pairs", split.ground_truth.size()}}}}}};
  write_json(args.out / kManifestFile, manifest);
}

json cmd_train(const TrainArgs& args) {
  require(args.mode == "qk" || args.mode == "simclr", ErrorKind::kConfig,
          "--mode must be qk or simclr, got '" + args.mode + "'");
  const ExperimentConfig config = resolve_config(args);
  fs::create_directories(args.out);
  Experiment ex = load_experiment(config, args.workers, args.out / "stores");
  write_json(args.out / kManifestFile,
             {{"mode", args.mode}, {"config", config_to_json(config)}});
  return args.mode == "qk" ? train_qk(args, std::move(ex)) : train_simclr(args, std::move(ex));
}

void cmd_embed(const EmbedArgs& args) {
  const Checkpoint ckpt = read_checkpoint(args.checkpoint, args.role);
  const Dataset ds = read_dataset(args.dataset);
  require(ds.rows.rows() > 0, ErrorKind::kDegenerateInput,
          args.dataset.string() + " has no rows to embed");
  require(ds.rows.cols() == ckpt.encoder.input_dim(), ErrorKind::kInputShape,
          args.dataset.string() + " has dimension " + std::to_string(ds.rows.cols()) +
              ", the checkpoint expects " + std::to_string(ckpt.encoder.input_dim()));
  const Matrix base = baseline_featurize_rows(ckpt.featurizer, ds.rows, args.workers);
  const Matrix desc = encoder_forward_rows(ckpt.encoder, ds.rows, base, args.workers);
  write_descriptors(args.out, desc, ds.id_base, args.role);
}

json cmd_evaluate(const EvaluateArgs& args) {
  const DescriptorFile q = read_descriptors(args.queries);
  const DescriptorFile k = read_descriptors(args.keys);
  require(q.role == Role::kQuery, ErrorKind::kContract,
          args.queries.string() + " holds key descriptors, expected query descriptors");
  require(k.role == Role::kKey, ErrorKind::kContract,
          args.keys.string() + " holds query descriptors, expected key descriptors");
  EvalSet set;
  set.queries = q.descriptors;
  set.keys = k.descriptors;
  set.query_ids = row_ids(q.id_base, q.descriptors.rows());
  set.key_ids = row_ids(k.id_base, k.descriptors.rows());
  set.ground_truth = read_ground_truth_csv(args.ground_truth);
  set.validate();
  const json metrics = metrics_json(evaluate_descriptors(set.queries, set.keys, set));
  if (args.out) {
    write_json(*args.out, metrics);
  } else {
    std::cout << metrics.dump(2) << '\n';
  }
  return metrics;
}

json cmd_compare(const RunArgs& args) {
  using Clock = std::chrono::steady_clock;
  TrainArgs qk;
  static_cast<RunArgs&>(qk) = args;
  qk.out = args.out / "qk";
  qk.mode = "qk";
  TrainArgs simclr = qk;
  simclr.out = args.out / "simclr";
  simclr.mode = "simclr";

  auto start = Clock::now();
  const json qk_summary = cmd_train(qk);
  const double qk_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  start = Clock::now();
  const json simclr_summary = cmd_train(simclr);
  const double simclr_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  const json comparison = {
      {"baseline_mu_ap", qk_summary.at("baseline").at("mu_ap")},
      {"qk", {{"mu_ap", qk_summary.at("final").at("mu_ap")},
              {"macro_ap", qk_summary.at("final").at("macro_ap")},
              {"steps", qk_summary.at("steps")},
              {"phases", qk_summary.at("phases")}}},
      {"simclr", {{"mu_ap", simclr_summary.at("final").at("mu_ap")},
                  {"macro_ap", simclr_summary.at("final").at("macro_ap")},
                  {"steps", simclr_summary.at("steps")}}}};
  write_json(args.out / "comparison.json", comparison);

  std::ostringstream csv;
  csv.precision(17);
  csv << "mode,mu_ap,macro_ap,steps\n";
  csv << "baseline," << comparison["baseline_mu_ap"].get<double>() << ",,0\n";
  for (const char* mode : {"qk", "simclr"}) {
    csv << mode << ',' << comparison[mode]["mu_ap"].get<double>() << ','
        << comparison[mode]["macro_ap"].get<double>() << ','
        << comparison[mode]["steps"].get<std::uint64_t>() << '\n';
  }
  write_text(args.out / "comparison.csv", csv.str());
  write_json(args.out / "timing.json", {{"qk_seconds", qk_seconds}, {"simclr_seconds", simclr_seconds}});
  return comparison;
}

}  // namespace qkiter::cli
