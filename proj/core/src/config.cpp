#include "metabalance/experiment/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "metabalance/errors.hpp"

namespace metabalance::experiment {

using json = nlohmann::json;

namespace {

/// Strict reader over one JSON object: missing keys keep their defaults,
/// unknown keys are errors.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (it->is_number_integer() && it->template get<long long>() < 0)
        throw ConfigError(path(key) + ": must be non-negative");
    }
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  bool has(const char* key) const { return j_.contains(key); }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::string normalize_name(data::Normalize n) { return n == data::Normalize::zscore ? "zscore" : "none"; }

data::Normalize normalize_from(const std::string& s) {
  if (s == "zscore") return data::Normalize::zscore;
  if (s == "none") return data::Normalize::none;
  throw ConfigError("unknown normalization '" + s + "'");
}

// --- to JSON ---------------------------------------------------------------

json sampler_json(const resample::SamplerSpec& s) {
  return {{"kind", resample::to_string(s.kind)},
          {"k_neighbors", s.k_neighbors},
          {"mixup_alpha", s.mixup_alpha},
          {"svm", {{"regularization", s.svm.regularization}, {"iterations", s.svm.iterations}}},
          {"seed", s.seed}};
}

json optimizer_json(const optim::OptimizerSpec& o) {
  return {{"kind", optim::to_string(o.kind)},
          {"lr", o.lr},
          {"momentum", o.momentum},
          {"weight_decay", o.weight_decay},
          {"adam_betas", {o.adam_betas.first, o.adam_betas.second}},
          {"adam_eps", o.adam_eps}};
}

json schedule_json(const optim::ScheduleSpec& s) {
  return {{"kind", optim::to_string(s.kind)},
          {"total_epochs", s.total_epochs},
          {"milestones", s.milestones},
          {"decay_factor", s.decay_factor}};
}

json loss_json(const nn::LossSpec& l) {
  json j = {{"kind", nn::to_string(l.kind)}, {"focal_gamma", l.focal_gamma}, {"class_weights", nullptr}};
  if (l.class_weights) j["class_weights"] = *l.class_weights;
  return j;
}

json model_json(const nn::MlpSpec& m) {
  json j = {{"input_dim", m.input_dim},
            {"hidden", m.hidden_widths},
            {"output_dim", m.output_dim},
            {"dropout", nullptr},
            {"activation", "relu"}};
  if (m.dropout) j["dropout"] = {{"after_layer", m.dropout->after_layer}, {"probability", m.dropout->probability}};
  return j;
}

json imbalance_json(const std::optional<data::ImbalanceMode>& m) {
  if (!m) return nullptr;
  if (m->kind == data::ImbalanceMode::Kind::fixed) return {{"mode", "fixed"}, {"count", m->count}};
  return {{"mode", "range"}, {"low", m->low}, {"high", m->high}};
}

json dataset_json(const DatasetConfig& d) {
  const std::string delimiter(1, d.csv.delimiter);
  return {{"source", to_string(d.source)},
          {"path", d.path},
          {"label_column", d.csv.label_column},
          {"drop_columns", d.csv.drop_columns},
          {"delimiter", delimiter},
          {"normalize", normalize_name(d.normalize)},
          {"split",
           {{"train_fraction", d.split.train_fraction},
            {"stratified", d.split.stratified},
            {"seed", d.split.seed}}},
          {"synthetic",
           {{"classes", d.synthetic.classes},
            {"counts", d.synthetic.counts},
            {"dim", d.synthetic.dim},
            {"separation", d.synthetic.separation},
            {"imbalance", imbalance_json(d.synthetic.imbalance)},
            {"test_per_class", d.synthetic.test_per_class},
            {"seed", d.synthetic.seed}}}};
}

json baseline_json(const train::BaselineConfig& b) {
  return {{"sampler", sampler_json(b.sampler)},
          {"optimizer", optimizer_json(b.optimizer)},
          {"schedule", schedule_json(b.schedule)},
          {"loss", loss_json(b.loss)},
          {"epochs", b.epochs},
          {"batch_size", b.batch_size},
          {"accumulation_steps", b.accumulation_steps},
          {"steps_per_epoch", b.steps_per_epoch}};
}

json meta_json(const train::MetaTrainConfig& m) {
  return {{"inner_sampler", sampler_json(m.inner_sampler)},
          {"outer_sampler", sampler_json(m.outer_sampler)},
          {"gamma", m.gamma},
          {"beta", m.beta},
          {"optimizer", optimizer_json(m.optimizer)},
          {"schedule", schedule_json(m.schedule)},
          {"loss", loss_json(m.loss)},
          {"meta_steps", m.meta_steps},
          {"support_batch", m.support_batch},
          {"query_batch", m.query_batch},
          {"epochs", m.epochs},
          {"outer_steps_per_epoch", m.outer_steps_per_epoch},
          {"first_order", m.first_order},
          {"mean_reduction", m.mean_reduction},
          {"grad_norm_cap", m.grad_norm_cap},
          {"materialize_balanced", m.materialize_balanced}};
}

json config_json(const ExperimentConfig& c) {
  json inner = json::array(), outer = json::array();
  for (auto k : c.grid.inner) inner.push_back(resample::to_string(k));
  for (auto k : c.grid.outer) outer.push_back(resample::to_string(k));
  return {{"name", c.name},
          {"dataset", dataset_json(c.dataset)},
          {"model", model_json(c.model)},
          {"mode", to_string(c.mode)},
          {"baseline", baseline_json(c.baseline)},
          {"metabalance", meta_json(c.metabalance)},
          {"grid", {{"inner", inner}, {"outer", outer}}},
          {"seeds", c.seeds},
          {"threads", c.threads},
          {"output_dir", c.output_dir}};
}

// --- from JSON -------------------------------------------------------------

resample::SamplerSpec read_sampler(const json& j, const std::string& where, resample::SamplerSpec s) {
  if (j.is_string()) {
    s.kind = wrap(where, [&] { return resample::sampler_kind_from_string(j.get<std::string>()); });
    return s;
  }
  Obj o(j, where);
  std::string kind = resample::to_string(s.kind);
  o.get("kind", kind);
  s.kind = wrap(o.path("kind"), [&] { return resample::sampler_kind_from_string(kind); });
  o.get("k_neighbors", s.k_neighbors);
  o.get("mixup_alpha", s.mixup_alpha);
  if (const json* svm = o.child("svm")) {
    Obj so(*svm, o.path("svm"));
    so.get("regularization", s.svm.regularization);
    so.get("iterations", s.svm.iterations);
    so.finish();
  }
  o.get("seed", s.seed);
  o.finish();
  return s;
}

optim::OptimizerSpec read_optimizer(const json& j, const std::string& where, optim::OptimizerSpec s) {
  Obj o(j, where);
  std::string kind = optim::to_string(s.kind);
  o.get("kind", kind);
  s.kind = wrap(o.path("kind"), [&] { return optim::optimizer_kind_from_string(kind); });
  o.get("lr", s.lr);
  o.get("momentum", s.momentum);
  o.get("weight_decay", s.weight_decay);
  std::vector<double> betas{s.adam_betas.first, s.adam_betas.second};
  o.get("adam_betas", betas);
  if (betas.size() != 2) throw ConfigError(o.path("adam_betas") + ": expected two values");
  s.adam_betas = {betas[0], betas[1]};
  o.get("adam_eps", s.adam_eps);
  o.finish();
  return s;
}

optim::ScheduleSpec read_schedule(const json& j, const std::string& where, optim::ScheduleSpec s) {
  Obj o(j, where);
  std::string kind = optim::to_string(s.kind);
  o.get("kind", kind);
  s.kind = wrap(o.path("kind"), [&] { return optim::schedule_kind_from_string(kind); });
  o.get("total_epochs", s.total_epochs);
  o.get("milestones", s.milestones);
  o.get("decay_factor", s.decay_factor);
  o.finish();
  return s;
}

nn::LossSpec read_loss(const json& j, const std::string& where, nn::LossSpec s) {
  Obj o(j, where);
  std::string kind = nn::to_string(s.kind);
  o.get("kind", kind);
  s.kind = wrap(o.path("kind"), [&] { return nn::loss_kind_from_string(kind); });
  o.get("focal_gamma", s.focal_gamma);
  if (o.has("class_weights")) {
    const json* w = o.child("class_weights");
    if (w) {
      std::vector<double> weights;
      try {
        weights = w->get<std::vector<double>>();
      } catch (const json::exception& e) {
        throw ConfigError(o.path("class_weights") + ": " + e.what());
      }
      s.class_weights = weights;
    } else {
      s.class_weights.reset();
    }
  }
  o.finish();
  return s;
}

nn::MlpSpec read_model(const json& j, const std::string& where, nn::MlpSpec m) {
  Obj o(j, where);
  o.get("input_dim", m.input_dim);
  o.get("hidden", m.hidden_widths);
  o.get("output_dim", m.output_dim);
  if (o.has("dropout")) {
    const json* d = o.child("dropout");
    if (d) {
      Obj dobj(*d, o.path("dropout"));
      nn::DropoutSpec spec = m.dropout.value_or(nn::DropoutSpec{});
      dobj.get("after_layer", spec.after_layer);
      dobj.get("probability", spec.probability);
      dobj.finish();
      m.dropout = spec;
    } else {
      m.dropout.reset();
    }
  }
  std::string activation = "relu";
  o.get("activation", activation);
  if (activation != "relu") throw ConfigError(o.path("activation") + ": only 'relu' is supported");
  o.finish();
  return m;
}

std::optional<data::ImbalanceMode> read_imbalance(const json* j, const std::string& where) {
  if (!j) return std::nullopt;
  Obj o(*j, where);
  std::string mode = "fixed";
  o.get("mode", mode);
  data::ImbalanceMode m;
  if (mode == "fixed") {
    m = data::ImbalanceMode::fixed(5);
    o.get("count", m.count);
  } else if (mode == "range") {
    m = data::ImbalanceMode::range(5, 50);
    o.get("low", m.low);
    o.get("high", m.high);
  } else {
    throw ConfigError(o.path("mode") + ": expected 'fixed' or 'range'");
  }
  o.finish();
  return m;
}

DatasetConfig read_dataset(const json& j, const std::string& where, DatasetConfig d) {
  Obj o(j, where);
  std::string source = to_string(d.source);
  o.get("source", source);
  if (source == "csv")
    d.source = DataSource::csv;
  else if (source == "synthetic")
    d.source = DataSource::synthetic;
  else
    throw ConfigError(o.path("source") + ": expected 'csv' or 'synthetic'");
  o.get("path", d.path);
  o.get("label_column", d.csv.label_column);
  o.get("drop_columns", d.csv.drop_columns);
  std::string delimiter(1, d.csv.delimiter);
  o.get("delimiter", delimiter);
  if (delimiter.size() != 1) throw ConfigError(o.path("delimiter") + ": expected one character");
  d.csv.delimiter = delimiter[0];
  std::string normalize = normalize_name(d.normalize);
  o.get("normalize", normalize);
  d.normalize = wrap(o.path("normalize"), [&] { return normalize_from(normalize); });
  if (const json* s = o.child("split")) {
    Obj so(*s, o.path("split"));
    so.get("train_fraction", d.split.train_fraction);
    so.get("stratified", d.split.stratified);
    so.get("seed", d.split.seed);
    so.finish();
  }
  if (const json* s = o.child("synthetic")) {
    Obj so(*s, o.path("synthetic"));
    so.get("classes", d.synthetic.classes);
    so.get("counts", d.synthetic.counts);
    so.get("dim", d.synthetic.dim);
    so.get("separation", d.synthetic.separation);
    if (so.has("imbalance")) d.synthetic.imbalance = read_imbalance(so.child("imbalance"), so.path("imbalance"));
    so.get("test_per_class", d.synthetic.test_per_class);
    so.get("seed", d.synthetic.seed);
    so.finish();
  }
  o.finish();
  return d;
}

train::BaselineConfig read_baseline(const json& j, const std::string& where, train::BaselineConfig b) {
  Obj o(j, where);
  if (const json* s = o.child("sampler")) b.sampler = read_sampler(*s, o.path("sampler"), b.sampler);
  if (const json* s = o.child("optimizer")) b.optimizer = read_optimizer(*s, o.path("optimizer"), b.optimizer);
  if (const json* s = o.child("schedule")) b.schedule = read_schedule(*s, o.path("schedule"), b.schedule);
  if (const json* s = o.child("loss")) b.loss = read_loss(*s, o.path("loss"), b.loss);
  o.get("epochs", b.epochs);
  o.get("batch_size", b.batch_size);
  o.get("accumulation_steps", b.accumulation_steps);
  o.get("steps_per_epoch", b.steps_per_epoch);
  o.finish();
  return b;
}

train::MetaTrainConfig read_meta(const json& j, const std::string& where, train::MetaTrainConfig m) {
  Obj o(j, where);
  if (const json* s = o.child("inner_sampler")) m.inner_sampler = read_sampler(*s, o.path("inner_sampler"), m.inner_sampler);
  if (const json* s = o.child("outer_sampler")) m.outer_sampler = read_sampler(*s, o.path("outer_sampler"), m.outer_sampler);
  o.get("gamma", m.gamma);
  o.get("beta", m.beta);
  if (const json* s = o.child("optimizer")) m.optimizer = read_optimizer(*s, o.path("optimizer"), m.optimizer);
  if (const json* s = o.child("schedule")) m.schedule = read_schedule(*s, o.path("schedule"), m.schedule);
  if (const json* s = o.child("loss")) m.loss = read_loss(*s, o.path("loss"), m.loss);
  o.get("meta_steps", m.meta_steps);
  o.get("support_batch", m.support_batch);
  o.get("query_batch", m.query_batch);
  o.get("epochs", m.epochs);
  o.get("outer_steps_per_epoch", m.outer_steps_per_epoch);
  o.get("first_order", m.first_order);
  o.get("mean_reduction", m.mean_reduction);
  o.get("grad_norm_cap", m.grad_norm_cap);
  o.get("materialize_balanced", m.materialize_balanced);
  o.finish();
  return m;
}

ExperimentConfig read_config(const json& j, ExperimentConfig c) {
  Obj o(j, "config");
  o.get("name", c.name);
  if (const json* s = o.child("dataset")) c.dataset = read_dataset(*s, "dataset", c.dataset);
  if (const json* s = o.child("model")) c.model = read_model(*s, "model", c.model);
  std::string mode = to_string(c.mode);
  o.get("mode", mode);
  if (mode == "baseline")
    c.mode = TrainerMode::baseline;
  else if (mode == "metabalance")
    c.mode = TrainerMode::metabalance;
  else
    throw ConfigError("config.mode: expected 'baseline' or 'metabalance'");
  if (const json* s = o.child("baseline")) c.baseline = read_baseline(*s, "baseline", c.baseline);
  if (const json* s = o.child("metabalance")) c.metabalance = read_meta(*s, "metabalance", c.metabalance);
  if (const json* s = o.child("grid")) {
    Obj g(*s, "grid");
    std::vector<std::string> inner, outer;
    for (auto k : c.grid.inner) inner.push_back(resample::to_string(k));
    for (auto k : c.grid.outer) outer.push_back(resample::to_string(k));
    g.get("inner", inner);
    g.get("outer", outer);
    g.finish();
    c.grid.inner.clear();
    c.grid.outer.clear();
    for (const auto& k : inner) c.grid.inner.push_back(wrap("grid.inner", [&] { return resample::sampler_kind_from_string(k); }));
    for (const auto& k : outer) c.grid.outer.push_back(wrap("grid.outer", [&] { return resample::sampler_kind_from_string(k); }));
  }
  o.get("seeds", c.seeds);
  o.get("threads", c.threads);
  o.get("output_dir", c.output_dir);
  o.child("preset");
  o.finish();
  return c;
}

// --- presets ---------------------------------------------------------------

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

ExperimentConfig tabular_base(const std::string& name, bool fraud) {
  ExperimentConfig c;
  c.name = name;
  c.dataset.source = DataSource::csv;
  if (fraud) {
    c.dataset.path = "creditcard.csv";
    c.dataset.csv.label_column = "Class";
    c.dataset.csv.drop_columns = {"Time"};
    c.model = nn::fraud_mlp_spec();
  } else {
    c.dataset.path = "loan_data.csv";
    c.dataset.csv.label_column = "not.fully.paid";
    c.model = nn::loan_mlp_spec();
  }
  c.dataset.normalize = data::Normalize::zscore;
  c.dataset.split = {0.8, false, 0};

  c.baseline.sampler = resample::make_sampler(resample::SamplerKind::natural);
  c.baseline.optimizer = optim::adam(1e-3);
  c.baseline.loss.kind = nn::LossKind::bce;
  c.baseline.epochs = 100;
  c.baseline.schedule.total_epochs = 100;
  c.baseline.batch_size = 24;

  auto& m = c.metabalance;
  m.inner_sampler = resample::make_sampler(resample::SamplerKind::natural);
  m.outer_sampler = resample::make_sampler(resample::SamplerKind::random_under);
  m.optimizer = fraud ? optim::sgd_nesterov(0.1, 0.9, 5e-2) : optim::sgd_nesterov(0.1, 0.9, 5e-4);
  m.loss.kind = nn::LossKind::bce;
  m.gamma = 0.01;
  m.beta = fraud ? 0.0 : 0.01;
  m.meta_steps = 80;
  m.support_batch = 24;
  m.query_batch = 16;
  m.epochs = fraud ? 40 : 100;
  m.schedule.total_epochs = m.epochs;

  c.seeds = seed_range(10);
  c.output_dir = "runs/" + name;
  return c;
}

ExperimentConfig synthetic_base(const std::string& name, bool moderate) {
  ExperimentConfig c;
  c.name = name;
  c.dataset.source = DataSource::synthetic;
  c.dataset.normalize = data::Normalize::none;
  auto& s = c.dataset.synthetic;
  s.classes = 10;
  s.dim = 32;
  s.separation = 4.0;
  s.counts.assign(10, moderate ? 50 : 5);
  s.counts[0] = 5000;
  if (moderate) s.imbalance = data::ImbalanceMode::range(5, 50);
  s.test_per_class = 200;
  s.seed = 0;
  c.model = nn::MlpSpec{32, {64}, 10, std::nullopt, nn::Activation::relu};

  const auto sgd = optim::sgd_nesterov(0.01, 0.9, 5e-4);
  optim::ScheduleSpec cosine{optim::ScheduleKind::cosine_annealing, 10, {}, 0.1};
  c.baseline.sampler = resample::make_sampler(resample::SamplerKind::natural);
  c.baseline.optimizer = sgd;
  c.baseline.schedule = cosine;
  c.baseline.loss.kind = nn::LossKind::cross_entropy;
  c.baseline.epochs = 10;
  c.baseline.batch_size = 20;
  c.baseline.steps_per_epoch = 100;

  auto& m = c.metabalance;
  m.inner_sampler = resample::make_sampler(resample::SamplerKind::natural);
  m.outer_sampler = resample::make_sampler(resample::SamplerKind::random_over);
  m.optimizer = sgd;
  m.schedule = cosine;
  m.loss.kind = nn::LossKind::cross_entropy;
  m.gamma = 0.01;
  m.beta = 0.0;
  m.meta_steps = 80;
  m.support_batch = 20;
  m.query_batch = 30;
  m.epochs = 10;
  m.outer_steps_per_epoch = 100;
  m.mean_reduction = true;

  c.seeds = seed_range(4);
  c.output_dir = "runs/" + name;
  return c;
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {
      "fraud_naive",          "fraud_under",        "fraud_metabal",         "fraud_msmetabal",
      "loan_naive",           "loan_enn",           "loan_metabal",          "loan_msmetabal",
      "loan_grid",            "synthetic_naive",    "synthetic_over",        "synthetic_metabal",
      "synthetic_moderate_naive", "synthetic_moderate_over", "synthetic_moderate_metabal"};
  return n;
}

}  // namespace

std::string to_string(TrainerMode mode) { return mode == TrainerMode::baseline ? "baseline" : "metabalance"; }
std::string to_string(DataSource source) { return source == DataSource::csv ? "csv" : "synthetic"; }

std::vector<std::string> preset_names() { return names(); }

ExperimentConfig preset(const std::string& name) {
  using resample::SamplerKind;
  const bool fraud = name.rfind("fraud_", 0) == 0;
  const bool loan = name.rfind("loan_", 0) == 0;
  if (fraud || loan) {
    ExperimentConfig c = tabular_base(name, fraud);
    const std::string variant = name.substr(name.find('_') + 1);
    if (variant == "naive") {
    } else if (variant == "under" && fraud) {
      c.baseline.sampler.kind = SamplerKind::random_under;
    } else if (variant == "enn" && loan) {
      c.baseline.sampler.kind = SamplerKind::enn;
    } else if (variant == "metabal") {
      c.mode = TrainerMode::metabalance;
    } else if (variant == "msmetabal") {
      c.mode = TrainerMode::metabalance;
      if (fraud) {
        c.metabalance.inner_sampler.kind = SamplerKind::random_under;
      } else {
        c.metabalance.outer_sampler.kind = SamplerKind::enn;
      }
    } else if (variant == "grid" && loan) {
      c.mode = TrainerMode::metabalance;
      c.grid.inner = {SamplerKind::natural, SamplerKind::random_over, SamplerKind::random_under,
                      SamplerKind::smote,   SamplerKind::svm_smote,   SamplerKind::enn,
                      SamplerKind::cluster_centroids};
      c.grid.outer = c.grid.inner;
    } else {
      throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
  }
  if (name.rfind("synthetic_", 0) == 0) {
    const bool moderate = name.rfind("synthetic_moderate_", 0) == 0;
    const std::string variant = name.substr(moderate ? 19 : 10);
    ExperimentConfig c = synthetic_base(name, moderate);
    if (variant == "naive") {
    } else if (variant == "over") {
      c.baseline.sampler.kind = SamplerKind::random_over;
    } else if (variant == "metabal") {
      c.mode = TrainerMode::metabalance;
    } else {
      throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

void ExperimentConfig::validate() const {
  model.validate();
  if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  if (output_dir.empty()) throw ConfigError("config: output_dir must be set");
  if (dataset.source == DataSource::csv) {
    if (dataset.path.empty()) throw ConfigError("dataset.path must be set for csv sources");
    if (dataset.csv.label_column.empty()) throw ConfigError("dataset.label_column must be set for csv sources");
    if (!(dataset.split.train_fraction > 0.0 && dataset.split.train_fraction < 1.0))
      throw ConfigError("dataset.split.train_fraction must be in (0, 1)");
  } else {
    const auto& s = dataset.synthetic;
    if (s.classes < 2) throw ConfigError("dataset.synthetic.classes must be >= 2");
    if (s.counts.size() != static_cast<std::size_t>(s.classes))
      throw ConfigError("dataset.synthetic.counts needs one entry per class");
    for (auto n : s.counts)
      if (n < 1) throw ConfigError("dataset.synthetic.counts must be >= 1");
    if (s.dim + 1 < static_cast<std::size_t>(s.classes))
      throw ConfigError("dataset.synthetic.dim must be >= classes - 1");
    if (s.test_per_class < 1) throw ConfigError("dataset.synthetic.test_per_class must be >= 1");
    if (model.num_classes() != static_cast<std::size_t>(s.classes))
      throw ConfigError("model head does not match dataset.synthetic.classes");
    if (model.input_dim != s.dim) throw ConfigError("model.input_dim does not match dataset.synthetic.dim");
  }
  if (mode == TrainerMode::baseline) {
    baseline.validate();
    baseline.loss.validate(model.num_classes());
  } else {
    metabalance.validate();
    metabalance.loss.validate(model.num_classes());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  if (auto it = j.find("preset"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("config.preset: expected a string");
    // Merge-patch nulls delete keys, so the merged document is read onto
    // defaults: a removed optional section reads back as absent.
    json merged = config_json(preset(it->get<std::string>()));
    json patch = j;
    patch.erase("preset");
    merged.merge_patch(patch);
    return read_config(merged, ExperimentConfig{});
  }
  return read_config(j, ExperimentConfig{});
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& config) { return config_json(config).dump(2) + "\n"; }

}  // namespace metabalance::experiment
