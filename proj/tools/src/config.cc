#include "qkiter_cli/config.h"

#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qkiter/error.h"

namespace qkiter::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kStreamFeaturizer = 101;
constexpr std::uint64_t kStreamEncoder = 102;
constexpr std::uint64_t kStreamSchedule = 103;

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    require(node_.is_object(), ErrorKind::kConfig,
            (path_.empty() ? std::string("config root") : "'" + path_ + "'") +
                " must be an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::kConfig, "bad value for key '" + key_path(key) + "'");
    }
  }

  // Non-negative integers arrive as unsigned; a negative literal is a
  // type error rather than a wrap-around.
  void read_count(const std::string& key, std::size_t& out) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    const json& v = node_.at(key);
    require(v.is_number_unsigned(), ErrorKind::kConfig,
            "key '" + key_path(key) + "' must be a non-negative integer");
    out = v.get<std::size_t>();
  }

  void read_u64(const std::string& key, std::uint64_t& out) {
    std::size_t value = out;
    read_count(key, value);
    out = value;
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  void finish() const {
    for (const auto& item : node_.items()) {
      require(seen_.count(item.key()) == 1, ErrorKind::kConfig,
              "unknown key '" + key_path(item.key()) + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

PhaseSpec parse_phase_name(const std::string& name, const std::string& where) {
  require(!name.empty() && (name[0] == 'Q' || name[0] == 'K'), ErrorKind::kConfig,
          "'" + where + "' must name a phase starting with Q or K, got '" + name + "'");
  PhaseSpec spec;
  spec.name = name;
  spec.kind = name[0] == 'Q' ? Phase::kQuery : Phase::kKey;
  return spec;
}

void parse_schedule(Section& s, ExperimentConfig& cfg) {
  std::size_t steps_per_phase = 600;
  std::size_t eval_every = 0;
  std::size_t plateau_window = 0;
  double plateau_min_rel = 0.0;
  s.read_count("steps_per_phase", steps_per_phase);
  s.read_count("eval_every", eval_every);
  s.read_count("plateau_window", plateau_window);
  s.read("plateau_min_rel_improve", plateau_min_rel);

  json phases = json::array({"Q1", "K1", "Q2"});
  if (s.has("phases")) phases = s.child("phases");
  require(phases.is_array(), ErrorKind::kConfig,
          "'" + s.key_path("phases") + "' must be an array");
  cfg.schedule.phases.clear();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const std::string where = s.key_path("phases") + "[" + std::to_string(i) + "]";
    PhaseSpec spec;
    if (phases[i].is_string()) {
      spec = parse_phase_name(phases[i].get<std::string>(), where);
      spec.max_steps = steps_per_phase;
      spec.eval_every = eval_every;
      spec.plateau_window = plateau_window;
      spec.plateau_min_rel_improve = plateau_min_rel;
    } else {
      Section p(phases[i], where);
      std::string name;
      p.read("name", name);
      spec = parse_phase_name(name, p.key_path("name"));
      spec.max_steps = steps_per_phase;
      spec.eval_every = eval_every;
      spec.plateau_window = plateau_window;
      spec.plateau_min_rel_improve = plateau_min_rel;
      p.read_count("max_steps", spec.max_steps);
      p.read_count("eval_every", spec.eval_every);
      p.read_count("plateau_window", spec.plateau_window);
      p.read("plateau_min_rel_improve", spec.plateau_min_rel_improve);
      p.finish();
    }
    cfg.schedule.phases.push_back(std::move(spec));
  }
  s.finish();
}

MiningMode parse_mining(const std::string& text, const std::string& where) {
  if (text == "global") return MiningMode::kGlobal;
  if (text == "per_row") return MiningMode::kPerRow;
  fail(ErrorKind::kConfig, "'" + where + "' must be \"global\" or \"per_row\"");
}

// Re-raises a module validation error as a config error.
template <typename Fn>
void validated(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, "invalid '" + section + "' section: " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  validated("data", [&] {
    data.synth.validate();
    require(data.n_eval_queries >= 1, ErrorKind::kValidation, "n_eval_queries must be >= 1");
  });
  validated("model", [&] {
    encoder_dims().validate();
    require(model.featurizer_dim >= model.out_dim, ErrorKind::kValidation,
            "featurizer_dim must be >= out_dim");
    require(model.projection_scale > 0.0, ErrorKind::kValidation,
            "projection_scale must be > 0");
  });
  validated("loss", [&] { loss.validate(); });
  validated("optimizer", [&] {
    require(optimizer.lr0 > 0.0, ErrorKind::kValidation, "lr0 must be > 0");
    require(optimizer.alpha >= 0.0 && optimizer.alpha <= 1.0, ErrorKind::kValidation,
            "alpha must be in [0, 1]");
    const auto& a = optimizer.adam;
    require(a.beta1 >= 0.0 && a.beta1 < 1.0 && a.beta2 >= 0.0 && a.beta2 < 1.0 &&
                a.epsilon > 0.0,
            ErrorKind::kValidation, "adam needs beta1, beta2 in [0, 1) and epsilon > 0");
  });
  validated("training", [&] {
    require(training.batch_size >= 1 && training.batch_size <= data.synth.n_keys,
            ErrorKind::kValidation, "batch_size must be in [1, n_keys]");
    require(training.chunk_size >= 1, ErrorKind::kValidation, "chunk_size must be >= 1");
    require(training.db_refresh_every >= 1, ErrorKind::kValidation,
            "db_refresh_every must be >= 1");
    require(training.simclr_lr0 >= 0.0, ErrorKind::kValidation, "simclr_lr0 must be >= 0");
  });
  validated("schedule", [&] { schedule.validate(); });
}

EncoderDims ExperimentConfig::encoder_dims() const {
  EncoderDims dims;
  dims.input_dim = data.synth.d_in;
  dims.backbone_hidden = model.backbone_hidden;
  dims.mid_dim = model.mid_dim;
  dims.head_hidden = model.head_hidden;
  dims.out_dim = model.out_dim;
  return dims;
}

std::size_t ExperimentConfig::simclr_steps() const {
  return training.simclr_steps == 0 ? static_cast<std::size_t>(total_steps())
                                    : training.simclr_steps;
}

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  Section root(doc, "");
  root.read_u64("seed", cfg.seed);

  if (root.has("data")) {
    Section s(root.child("data"), "data");
    auto& synth = cfg.data.synth;
    s.read_count("n_keys", synth.n_keys);
    s.read_count("d_in", synth.d_in);
    s.read_count("n_clusters", synth.n_clusters);
    s.read("cluster_spread", synth.cluster_spread);
    s.read("noise_scale", synth.noise_scale);
    s.read("mask_fraction", synth.mask_fraction);
    s.read("scale_range", synth.scale_range);
    s.read("shift_scale", synth.shift_scale);
    s.read_count("n_eval_queries", cfg.data.n_eval_queries);
    s.read_count("n_distractors", cfg.data.n_distractors);
    s.finish();
  }
  if (root.has("model")) {
    Section s(root.child("model"), "model");
    s.read_count("backbone_hidden", cfg.model.backbone_hidden);
    s.read_count("mid_dim", cfg.model.mid_dim);
    s.read_count("head_hidden", cfg.model.head_hidden);
    s.read_count("out_dim", cfg.model.out_dim);
    s.read_count("featurizer_dim", cfg.model.featurizer_dim);
    s.read("projection_scale", cfg.model.projection_scale);
    s.finish();
  }
  if (root.has("loss")) {
    Section s(root.child("loss"), "loss");
    s.read("tau", cfg.loss.tau);
    s.read_count("hard_negatives", cfg.loss.hard_negatives);
    s.read("w_pos", cfg.loss.w_pos);
    s.read("w_neg", cfg.loss.w_neg);
    s.read("clamp", cfg.loss.clamp);
    std::string mining = "global";
    s.read("mining", mining);
    cfg.loss.mining = parse_mining(mining, s.key_path("mining"));
    s.finish();
  }
  if (root.has("optimizer")) {
    Section s(root.child("optimizer"), "optimizer");
    s.read("lr0", cfg.optimizer.lr0);
    s.read_u64("decay_steps", cfg.optimizer.decay_steps);
    s.read("alpha", cfg.optimizer.alpha);
    s.read("beta1", cfg.optimizer.adam.beta1);
    s.read("beta2", cfg.optimizer.adam.beta2);
    s.read("epsilon", cfg.optimizer.adam.epsilon);
    s.finish();
  }
  if (root.has("training")) {
    Section s(root.child("training"), "training");
    s.read_count("batch_size", cfg.training.batch_size);
    s.read_count("chunk_size", cfg.training.chunk_size);
    s.read_count("db_refresh_every", cfg.training.db_refresh_every);
    s.read_count("simclr_steps", cfg.training.simclr_steps);
    s.read_count("simclr_eval_every", cfg.training.simclr_eval_every);
    s.read("simclr_lr0", cfg.training.simclr_lr0);
    s.finish();
  }
  {
    const json empty = json::object();
    Section s(root.has("schedule") ? root.child("schedule") : empty, "schedule");
    parse_schedule(s, cfg);
  }
  std::string data_dir = "data";
  if (root.has("paths")) {
    Section s(root.child("paths"), "paths");
    s.read("data_dir", data_dir);
    s.finish();
  }
  root.finish();

  const std::filesystem::path dir(data_dir);
  cfg.data_dir = dir.is_absolute() ? dir : base_dir / dir;
  set_seed(cfg, cfg.seed);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kConfig, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kConfig, path.string() + ": malformed JSON: " + e.what());
  }
  return parse_config(doc, std::filesystem::absolute(path).parent_path());
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  const auto& s = c.data.synth;
  json phases = json::array();
  for (const PhaseSpec& p : c.schedule.phases) {
    phases.push_back({{"name", p.name},
                      {"max_steps", p.max_steps},
                      {"eval_every", p.eval_every},
                      {"plateau_window", p.plateau_window},
                      {"plateau_min_rel_improve", p.plateau_min_rel_improve}});
  }
  return {
      {"seed", c.seed},
      {"data",
       {{"n_keys", s.n_keys},
        {"d_in", s.d_in},
        {"n_clusters", s.n_clusters},
        {"cluster_spread", s.cluster_spread},
        {"noise_scale", s.noise_scale},
        {"mask_fraction", s.mask_fraction},
        {"scale_range", s.scale_range},
        {"shift_scale", s.shift_scale},
        {"n_eval_queries", c.data.n_eval_queries},
        {"n_distractors", c.data.n_distractors}}},
      {"model",
       {{"backbone_hidden", c.model.backbone_hidden},
        {"mid_dim", c.model.mid_dim},
        {"head_hidden", c.model.head_hidden},
        {"out_dim", c.model.out_dim},
        {"featurizer_dim", c.model.featurizer_dim},
        {"projection_scale", c.model.projection_scale}}},
      {"loss",
       {{"tau", c.loss.tau},
        {"hard_negatives", c.loss.hard_negatives},
        {"w_pos", c.loss.w_pos},
        {"w_neg", c.loss.w_neg},
        {"clamp", c.loss.clamp},
        {"mining", c.loss.mining == MiningMode::kGlobal ? "global" : "per_row"}}},
      {"optimizer",
       {{"lr0", c.optimizer.lr0},
        {"decay_steps", c.optimizer.decay_steps},
        {"alpha", c.optimizer.alpha},
        {"beta1", c.optimizer.adam.beta1},
        {"beta2", c.optimizer.adam.beta2},
        {"epsilon", c.optimizer.adam.epsilon}}},
      {"training",
       {{"batch_size", c.training.batch_size},
        {"chunk_size", c.training.chunk_size},
        {"db_refresh_every", c.training.db_refresh_every},
        {"simclr_steps", c.training.simclr_steps},
        {"simclr_eval_every", c.training.simclr_eval_every},
        {"simclr_lr0", c.training.simclr_lr0}}},
      {"schedule", {{"phases", phases}}},
  };
}

void set_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.data.synth.seed = seed;
  config.schedule.seed = schedule_seed(config);
}

std::uint64_t featurizer_seed(const ExperimentConfig& config) {
  return derive_seed(config.seed, kStreamFeaturizer, 0);
}

std::uint64_t encoder_seed(const ExperimentConfig& config, Role role) {
  return derive_seed(config.seed, kStreamEncoder, static_cast<std::uint64_t>(role));
}

std::uint64_t schedule_seed(const ExperimentConfig& config) {
  return derive_seed(config.seed, kStreamSchedule, 0);
}

}  // namespace qkiter::cli
