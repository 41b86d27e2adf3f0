// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only
// when every criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qkiter/checkpoint.h"
#include "qkiter/error.h"
#include "qkiter/evaluation.h"
#include "qkiter/half.h"
#include "qkiter/loss.h"
#include "qkiter/metrics.h"
#include "qkiter/store.h"
#include "qkiter/trainer.h"
#include "tiny_setup.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qkiter;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(QKITER_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

// ---- 1. loss identity and gradient -------------------------------------

std::vector<PairIndex> sorted_negatives(const ScoreMatrix& sm, std::size_t limit) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < sm.batch_size(); ++r) {
    for (std::size_t c = 0; c < sm.db_size(); ++c) {
      if (c != sm.positive_cols[r]) cells.emplace_back(-sm.values(r, c), r, c);
    }
  }
  std::sort(cells.begin(), cells.end());
  std::vector<PairIndex> out;
  for (std::size_t i = 0; i < std::min(limit, cells.size()); ++i) {
    out.push_back({std::get<1>(cells[i]), std::get<2>(cells[i])});
  }
  return out;
}

std::vector<PairIndex> sorted_negatives_per_row(const ScoreMatrix& sm, std::size_t m) {
  std::vector<PairIndex> out;
  for (std::size_t r = 0; r < sm.batch_size(); ++r) {
    std::vector<std::pair<double, std::size_t>> cells;
    for (std::size_t c = 0; c < sm.db_size(); ++c) {
      if (c != sm.positive_cols[r]) cells.emplace_back(-sm.values(r, c), c);
    }
    std::sort(cells.begin(), cells.end());
    for (std::size_t i = 0; i < std::min(m, cells.size()); ++i) out.push_back({r, cells[i].second});
  }
  return out;
}

double reference_loss(const ScoreMatrix& sm, const LossConfig& cfg) {
  auto clamp = [&](double p) { return std::min(std::max(p, cfg.clamp), 1.0 - cfg.clamp); };
  const double b = static_cast<double>(sm.batch_size());
  double pos = 0.0;
  for (std::size_t r = 0; r < sm.batch_size(); ++r) {
    pos -= std::log(clamp(sm.values(r, sm.positive_cols[r])));
  }
  double neg = 0.0;
  for (const PairIndex& p : sorted_negatives(sm, sm.batch_size() * cfg.hard_negatives)) {
    neg -= std::log(1.0 - clamp(sm.values(p.row, p.col)));
  }
  return cfg.w_pos * pos / b + cfg.w_neg * neg / (b * static_cast<double>(cfg.hard_negatives));
}

Outcome criterion_loss() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> bd(1, 4), nd(2, 50), md(1, 10), dd(1, 6);
  std::uniform_real_distribution<double> tau(0.2, 2.0), w(0.5, 4.0);
  double worst_identity = 0.0;
  double worst_rel = 0.0;
  std::size_t compared = 0;
  std::size_t kinks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = bd(rng);
    const std::size_t n = std::max(nd(rng), b);
    const std::size_t d = dd(rng);
    const Matrix batch = random_matrix(rng, b, d, 0.5);
    const Matrix db = random_matrix(rng, n, d, 0.5);
    std::vector<std::size_t> cols(n);
    for (std::size_t i = 0; i < n; ++i) cols[i] = i;
    std::shuffle(cols.begin(), cols.end(), rng);
    const std::vector<std::size_t> positives(cols.begin(), cols.begin() + static_cast<long>(b));
    LossConfig cfg;
    cfg.tau = tau(rng);
    cfg.hard_negatives = md(rng);
    cfg.w_pos = w(rng);
    cfg.w_neg = w(rng);

    const ScoreMatrix sm = score_matrix(batch, db, cfg.tau, positives);
    const LossBreakdown lb = contrastive_bce(sm, cfg);
    worst_identity = std::max({worst_identity,
                               std::abs(lb.loss - (cfg.w_pos * lb.loss_pos + cfg.w_neg * lb.loss_neg)),
                               std::abs(lb.loss - reference_loss(sm, cfg))});
    const LossGradients g = loss_backward(sm, cfg, lb, batch, db);

    // Central differences are only meaningful where the loss is smooth: the
    // stencil must keep the mined set and the clamp-active cells unchanged.
    // The step shrinks until it does; coordinates that never qualify sit on
    // a kink and are counted, not compared.
    auto signature = [&](const ScoreMatrix& s2) {
      const LossBreakdown b2 = contrastive_bce(s2, cfg);
      auto state = [&](double v) { return v < cfg.clamp ? -1 : (v > 1.0 - cfg.clamp ? 1 : 0); };
      std::vector<std::size_t> sig;
      for (const PairIndex& p : b2.mined) {
        sig.push_back(p.row);
        sig.push_back(p.col);
        sig.push_back(static_cast<std::size_t>(state(s2.values(p.row, p.col)) + 1));
      }
      for (std::size_t r = 0; r < s2.batch_size(); ++r) {
        sig.push_back(static_cast<std::size_t>(state(s2.values(r, s2.positive_cols[r])) + 1));
      }
      return std::make_pair(sig, b2.loss);
    };
    const auto base_sig = signature(sm).first;
    auto compare = [&](double analytic, const std::function<void(Matrix&, Matrix&, double)>& nudge) {
      for (double h : {1e-6, 1e-7, 1e-8}) {
        Matrix bp = batch, bm = batch, dp = db, dm = db;
        nudge(bp, dp, h);
        nudge(bm, dm, -h);
        const auto [sig_p, loss_p] = signature(score_matrix(bp, dp, cfg.tau, positives));
        const auto [sig_m, loss_m] = signature(score_matrix(bm, dm, cfg.tau, positives));
        if (sig_p != base_sig || sig_m != base_sig) continue;
        const double fd = (loss_p - loss_m) / (2 * h);
        const double err = std::abs(analytic - fd);
        const double scale = std::max(std::abs(analytic), std::abs(fd));
        if (err > 1e-7) worst_rel = std::max(worst_rel, err / scale);
        ++compared;
        return;
      }
      ++kinks;
    };
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t i = 0; i < d; ++i) {
        compare(g.batch(r, i), [&](Matrix& bm, Matrix&, double h) { bm(r, i) += h; });
      }
    }
    for (std::size_t c = 0; c < n; ++c) {
      const auto it = g.db.find(c);
      for (std::size_t i = 0; i < d; ++i) {
        compare(it == g.db.end() ? 0.0 : it->second[i],
                [&](Matrix&, Matrix& dm, double h) { dm(c, i) += h; });
      }
    }
  }
  std::ostringstream s;
  s << "200 instances, identity error " << worst_identity << " (<= 1e-12), gradient rel error "
    << worst_rel << " (<= 1e-4) over " << compared << " coordinates, " << kinks
    << " on a clamp/mining kink";
  return {worst_identity <= 1e-12 && worst_rel <= 1e-4, s.str()};
}

// ---- 2. mining oracle ---------------------------------------------------

Outcome criterion_mining() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> bd(1, 6), nd(1, 200), md(1, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  int tie_instances = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int levels = trial % 3 == 0 ? 0 : (trial % 3 == 1 ? 4 : 1);
    const std::size_t b = bd(rng), n = nd(rng), m = md(rng);
    ScoreMatrix sm;
    sm.values = Matrix(b, n);
    for (double& v : sm.values.values()) {
      v = u(rng);
      if (levels > 0) v = std::floor(v * levels) / levels;
    }
    std::uniform_int_distribution<std::size_t> col(0, n - 1);
    for (std::size_t r = 0; r < b; ++r) sm.positive_cols.push_back(col(rng));
    if (levels > 0) ++tie_instances;
    if (mine_hard_negatives(sm, m, MiningMode::kGlobal).pairs != sorted_negatives(sm, b * m)) {
      ++mismatches;
    }
    if (mine_hard_negatives(sm, m, MiningMode::kPerRow).pairs != sorted_negatives_per_row(sm, m)) {
      ++mismatches;
    }
  }
  return {mismatches == 0, "500 instances (" + std::to_string(tie_instances) +
                               " with ties), mismatches " + std::to_string(mismatches)};
}

// ---- 3. micro AP oracle -------------------------------------------------

double area_under_steps(const std::vector<bool>& ranked, std::size_t n_positives) {
  double area = 0.0;
  double prev = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i]) ++hits;
    const double recall = static_cast<double>(hits) / static_cast<double>(n_positives);
    area += static_cast<double>(hits) / static_cast<double>(i + 1) * (recall - prev);
    prev = recall;
  }
  return area;
}

Outcome criterion_micro_ap() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> nd(1, 20), dd(1, 4);
  std::bernoulli_distribution coin(0.15);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t nq = nd(rng), nk = nd(rng), d = dd(rng);
    Matrix qm = random_matrix(rng, nq, d, 1.0), km = random_matrix(rng, nk, d, 1.0);
    if (rng() % 2) {
      for (double& v : qm.values()) v = std::round(v);
      for (double& v : km.values()) v = std::round(v);
    }
    std::vector<std::uint64_t> qids(nq), kids(nk);
    for (std::size_t i = 0; i < nq; ++i) qids[i] = 100 + i;
    for (std::size_t j = 0; j < nk; ++j) kids[j] = 500 + j;
    GroundTruth gt;
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t j = 0; j < nk; ++j) {
        if (coin(rng)) gt.add(qids[i], kids[j]);
      }
    }
    if (gt.size() == 0) gt.add(qids[0], kids[0]);

    std::vector<std::tuple<double, std::uint64_t, std::uint64_t>> cells;
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t j = 0; j < nk; ++j) {
        double d2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) d2 += (qm(i, t) - km(j, t)) * (qm(i, t) - km(j, t));
        cells.emplace_back(d2, qids[i], kids[j]);
      }
    }
    std::sort(cells.begin(), cells.end());
    std::vector<bool> flags;
    for (const auto& [d2, qid, kid] : cells) flags.push_back(gt.contains(qid, kid));
    const RankedPairList ranking = rank_all_pairs(qm, qids, km, kids, kEvalTau, gt);
    worst = std::max(worst, std::abs(micro_ap(ranking) - area_under_steps(flags, gt.size())));
  }
  RankedPairList hand;
  const bool flags[] = {true, false, true, false};
  for (std::size_t i = 0; i < 4; ++i) hand.entries.push_back({0, i, 1.0 - 0.1 * i, flags[i]});
  hand.n_positives = 2;
  const double hand_ap = micro_ap(hand);
  std::ostringstream s;
  s << "500 instances, max |diff| " << worst << " (<= 1e-12); hand case " << hand_ap;
  return {worst <= 1e-12 && std::abs(hand_ap - 0.8333) <= 5e-5, s.str()};
}

// ---- 4. freeze invariants -----------------------------------------------

Outcome criterion_freeze(const fs::path& work) {
  const fs::path dir = work / "freeze";
  fs::create_directories(dir);
  testing::TinySetup s = testing::make_tiny_setup(dir, 41, 64, 8);
  PhaseSpec q_phase = testing::phase_spec("Q1", Phase::kQuery, 200);
  PhaseSpec k_phase = testing::phase_spec("K1", Phase::kKey, 200);

  const auto key_before = backbone_bytes(s.state.key);
  run_phase(s.state, q_phase, s.data, s.eval, s.options, 1);
  const bool key_kept = backbone_bytes(s.state.key) == key_before;

  const auto query_before = backbone_bytes(s.state.query);
  run_phase(s.state, k_phase, s.data, s.eval, s.options, 1);
  const bool query_kept = backbone_bytes(s.state.query) == query_before;

  bool stale_rejected = false;
  s.state.query.backbone.front().weight(0, 0) += 1e-6;  // query is the frozen side now
  try {
    phase_step(s.state, s.data, testing::first_rows(8), s.options, 1e-3);
  } catch (const Error& e) {
    stale_rejected = e.kind() == ErrorKind::kContract;
  }
  std::ostringstream out;
  out << "K backbone unchanged over 200 Q steps: " << key_kept
      << "; Q backbone unchanged over 200 K steps: " << query_kept
      << "; stale store rejected: " << stale_rejected;
  return {key_kept && query_kept && stale_rejected, out.str()};
}

// ---- 5. residual floor --------------------------------------------------

Outcome criterion_residual(const fs::path& work) {
  bool all_equal = true;
  std::ostringstream out;
  for (std::uint64_t seed : {51u, 52u, 53u}) {
    testing::TinySetup s = testing::make_tiny_setup(work, seed, 64, 8);
    const EvalMetrics model = evaluate_model(s.state.query, s.state.key, s.state.featurizer, s.eval);
    const EvalMetrics base = evaluate_baseline(s.state.featurizer, s.eval);
    all_equal = all_equal && model.mu_ap == base.mu_ap;
    out << (seed == 51 ? "" : "; ") << model.mu_ap << " vs " << base.mu_ap;
  }
  return {all_equal, "zero-head model vs baseline muAP: " + out.str()};
}

// ---- 6 & 7. benchmark ordering ------------------------------------------

struct BenchmarkRun {
  bool ok = false;
  std::string error;
  json comparison;
  json timing;
};

BenchmarkRun run_benchmark(const fs::path& work) {
  BenchmarkRun run;
  const fs::path dir = work / "benchmark";
  fs::remove_all(dir);
  fs::create_directories(dir);
  json config = json::parse(slurp(QKITER_BENCHMARK_CONFIG));
  config["paths"]["data_dir"] = (dir / "data").string();
  std::ofstream(dir / "config.json") << config.dump(2);

  const std::string common = "--config " + quoted(dir / "config.json");
  if (run_cli("gen-data " + common + " --out " + quoted(dir / "data"), dir / "gen.log") != 0) {
    run.error = "gen-data failed, see " + (dir / "gen.log").string();
    return run;
  }
  if (run_cli("compare " + common + " --out " + quoted(dir / "out"), dir / "compare.log") != 0) {
    run.error = "compare failed, see " + (dir / "compare.log").string();
    return run;
  }
  run.comparison = json::parse(slurp(dir / "out" / "comparison.json"));
  run.timing = json::parse(slurp(dir / "out" / "timing.json"));
  run.ok = true;
  return run;
}

Outcome criterion_phase_ordering(const BenchmarkRun& run) {
  if (!run.ok) return {false, run.error};
  const double baseline = run.comparison["baseline_mu_ap"].get<double>();
  double prev = baseline;
  bool monotone = true;
  std::ostringstream s;
  s << "baseline " << baseline;
  for (const json& phase : run.comparison["qk"]["phases"]) {
    const double mu = phase["mu_ap"].get<double>();
    monotone = monotone && mu - prev >= -0.005;
    prev = mu;
    s << ", " << phase["phase"].get<std::string>() << " " << mu;
  }
  const double final_mu = run.comparison["qk"]["mu_ap"].get<double>();
  const double gain = final_mu - baseline;
  const double seconds = run.timing["qk_seconds"].get<double>();
  s << "; gain " << gain << " (>= 0.05); qk runtime " << seconds << " s (<= 300)";
  return {monotone && gain >= 0.05 && seconds <= 300.0, s.str()};
}

Outcome criterion_qk_vs_simclr(const BenchmarkRun& run) {
  if (!run.ok) return {false, run.error};
  const double qk = run.comparison["qk"]["mu_ap"].get<double>();
  const double sc = run.comparison["simclr"]["mu_ap"].get<double>();
  const auto qk_steps = run.comparison["qk"]["steps"].get<std::uint64_t>();
  const auto sc_steps = run.comparison["simclr"]["steps"].get<std::uint64_t>();
  std::ostringstream s;
  s << "qk " << qk << " vs simclr " << sc << " at " << qk_steps << "/" << sc_steps << " steps";
  return {qk >= sc && qk_steps == sc_steps, s.str()};
}

// ---- 8. determinism across worker counts --------------------------------

std::vector<fs::path> relative_files(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root));
  }
  std::sort(files.begin(), files.end());
  return files;
}

Outcome criterion_determinism(const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  json config = json::parse(slurp(QKITER_SMALL_CONFIG));
  config["paths"]["data_dir"] = (dir / "data").string();
  std::ofstream(dir / "config.json") << config.dump(2);
  const std::string common = "--config " + quoted(dir / "config.json");
  if (run_cli("gen-data " + common + " --out " + quoted(dir / "data"), dir / "gen.log") != 0) {
    return {false, "gen-data failed"};
  }
  for (const char* workers : {"1", "3"}) {
    const std::string out = quoted(dir / (std::string("w") + workers));
    if (run_cli("train --mode qk " + common + " --out " + out + " --workers " + workers,
                dir / (std::string("train") + workers + ".log")) != 0) {
      return {false, std::string("train failed with --workers ") + workers};
    }
  }
  const std::vector<fs::path> a = relative_files(dir / "w1");
  const std::vector<fs::path> b = relative_files(dir / "w3");
  if (a != b) return {false, "output file sets differ"};
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const fs::path& rel : a) {
    if (rel == "timing.jsonl") continue;  // wall-clock seconds only
    ++compared;
    if (slurp(dir / "w1" / rel) != slurp(dir / "w3" / rel)) differing.push_back(rel.string());
  }
  std::string detail = std::to_string(compared) +
                       " files (logs, checkpoints, stores, state) compared across --workers 1/3";
  for (const std::string& f : differing) detail += "; differs: " + f;
  return {differing.empty() && compared > 0, detail};
}

// ---- 9. chunk equivalence and half-precision bound ----------------------

Outcome criterion_chunks(const fs::path& work) {
  std::mt19937_64 rng(909);
  std::size_t score_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 1 + trial % 4;
    const Matrix batch = random_matrix(rng, b, 5, 1.0);
    const Matrix db = random_matrix(rng, 10 + trial % 37, 5, 1.0);
    std::vector<std::size_t> pos(b);
    for (std::size_t i = 0; i < b; ++i) pos[i] = i;
    const ScoreMatrix whole = score_matrix(batch, db, 0.5, pos);
    for (std::size_t chunk : {1u, 3u, 7u}) {
      std::vector<MatrixView> chunks;
      for (std::size_t s = 0; s < db.rows(); s += chunk) {
        chunks.push_back(db.view().slice_rows(s, std::min(chunk, db.rows() - s)));
      }
      if (score_matrix(batch, chunks, 0.5, pos, 1 + trial % 3).values != whole.values) {
        ++score_mismatch;
      }
    }
  }

  const fs::path dir = work / "chunks";
  fs::create_directories(dir);
  testing::TinySetup s = testing::make_tiny_setup(dir, 61, 37, 8);
  EncoderParams frozen = s.state.key;
  frozen.trainable_backbone = false;
  const IntermediateStore reference =
      bulk_evaluate(frozen, s.data.keys, s.data.key_digest, 1000, dir / "whole.qkis");
  std::size_t bulk_mismatch = 0;
  for (std::size_t chunk : {1u, 4u, 10u}) {
    const IntermediateStore st = bulk_evaluate(frozen, s.data.keys, s.data.key_digest, chunk,
                                               dir / ("c" + std::to_string(chunk) + ".qkis"), 2);
    for (std::size_t r = 0; r < st.n_rows(); ++r) {
      if (st.read_row(r) != reference.read_row(r)) ++bulk_mismatch;
    }
  }

  std::size_t bound_violations = 0;
  std::size_t values = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix rows = random_matrix(rng, 1 + trial * 3, 6, std::pow(10.0, trial % 5 - 2));
    const IntermediateStore st =
        store_write(rows, 1 + trial % 5, {}, dir / ("rt" + std::to_string(trial) + ".qkis"));
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const Vector back = st.read_row(r);
      for (std::size_t j = 0; j < back.size(); ++j) {
        ++values;
        if (std::abs(back[j] - rows(r, j)) > half_rounding_bound(rows(r, j))) ++bound_violations;
      }
    }
  }
  std::ostringstream out;
  out << "score chunk mismatches " << score_mismatch << "/300, bulk row mismatches "
      << bulk_mismatch << ", roundtrip bound violations " << bound_violations << "/" << values;
  return {score_mismatch == 0 && bulk_mismatch == 0 && bound_violations == 0, out.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qkiter acceptance checks"};
  fs::path work = fs::temp_directory_path() / "qkiter_acceptance";
  bool skip_benchmark = false;
  app.add_option("--work-dir", work, "Scratch directory");
  app.add_flag("--skip-benchmark", skip_benchmark, "Report criteria 6 and 7 as skipped");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): "
              << o.detail << " [" << std::fixed << std::setprecision(1) << secs << " s]"
              << std::defaultfloat << std::setprecision(6) << std::endl;
  };

  report(1, "loss identity and gradient", criterion_loss);
  report(2, "hard-negative mining oracle", criterion_mining);
  report(3, "micro AP oracle", criterion_micro_ap);
  report(4, "freeze invariants", [&] { return criterion_freeze(work); });
  report(5, "residual floor", [&] { return criterion_residual(work); });
  BenchmarkRun bench;
  if (!skip_benchmark) bench = run_benchmark(work);
  else bench.error = "skipped by --skip-benchmark";
  report(6, "phase ordering on the benchmark", [&] { return criterion_phase_ordering(bench); });
  report(7, "qk vs in-batch baseline", [&] { return criterion_qk_vs_simclr(bench); });
  report(8, "determinism across workers", [&] { return criterion_determinism(work); });
  report(9, "chunk equivalence", [&] { return criterion_chunks(work); });

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
