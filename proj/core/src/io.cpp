#include "flashmax/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace flashmax::io {
namespace {

using nlohmann::json;

json to_array(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json spatial_to_array(const SpatialMatrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < 3; ++j) a.push_back(m(i, j));
  }
  return a;
}

Eigen::VectorXd vector_from(const json& a, Eigen::Index n, const char* key) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != n) {
    throw std::invalid_argument(std::string("checkpoint: bad length for ") + key);
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
  return v;
}

SpatialMatrix spatial_from(const json& a, Eigen::Index n) {
  const Eigen::VectorXd flat = vector_from(a, 3 * n, "spatial_freqs");
  SpatialMatrix m(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = flat[3 * i + j];
  }
  return m;
}

json bundle_to_json(const GradientBundle& g) {
  json branches = json::array();
  for (const auto& b : g.branches) {
    branches.push_back({{"spatial_freqs", spatial_to_array(b.spatial_freqs)},
                        {"out_weights", to_array(b.out_weights)},
                        {"biases", to_array(b.biases)}});
  }
  return branches;
}

GradientBundle bundle_from_json(const json& j, Eigen::Index n) {
  GradientBundle g;
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("optimizer: expected two branches");
  }
  for (int i = 0; i < 2; ++i) {
    const json& b = j[static_cast<std::size_t>(i)];
    g.branches[i].spatial_freqs = spatial_from(b.at("spatial_freqs"), n);
    g.branches[i].out_weights = vector_from(b.at("out_weights"), n, "out_weights");
    g.branches[i].biases = vector_from(b.at("biases"), n, "biases");
  }
  return g;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

json checkpoint_to_json(const ModelParams& params, const AdamState* optimizer) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["width_half"] = params.width_half;
  j["activation"] = std::string(to_string(params.activation));
  json branches = json::array();
  for (const auto& br : params.branches) {
    branches.push_back({{"spatial_freqs", spatial_to_array(br.spatial_freqs)},
                        {"signs", to_array(br.signs)},
                        {"out_weights", to_array(br.out_weights)},
                        {"biases", to_array(br.biases)}});
  }
  j["branches"] = std::move(branches);
  if (optimizer != nullptr) {
    j["optimizer"] = {{"step", optimizer->step},
                      {"first_moment", bundle_to_json(optimizer->first_moment)},
                      {"second_moment", bundle_to_json(optimizer->second_moment)}};
  }
  return j;
}

ModelParams checkpoint_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) {
    throw std::invalid_argument("checkpoint: unsupported schema_version");
  }
  ModelParams p;
  p.width_half = j.at("width_half").get<int>();
  p.activation = parse_activation(j.at("activation").get<std::string>());
  const json& branches = j.at("branches");
  if (!branches.is_array() || branches.size() != 2) {
    throw std::invalid_argument("checkpoint: expected two branches");
  }
  const Eigen::Index n = p.neurons_per_branch();
  for (int i = 0; i < 2; ++i) {
    const json& b = branches[static_cast<std::size_t>(i)];
    auto& br = p.branches[i];
    br.spatial_freqs = spatial_from(b.at("spatial_freqs"), n);
    br.signs = vector_from(b.at("signs"), n, "signs");
    br.out_weights = vector_from(b.at("out_weights"), n, "out_weights");
    br.biases = vector_from(b.at("biases"), n, "biases");
  }
  p.validate();
  return p;
}

std::optional<AdamState> optimizer_from_json(const json& j,
                                             const ModelParams& params) {
  if (!j.contains("optimizer")) return std::nullopt;
  const json& o = j.at("optimizer");
  AdamState s;
  s.step = o.at("step").get<std::int64_t>();
  s.first_moment = bundle_from_json(o.at("first_moment"), params.neurons_per_branch());
  s.second_moment = bundle_from_json(o.at("second_moment"), params.neurons_per_branch());
  return s;
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return json::parse(is);
}

void write_train_log(std::ostream& os, const TrainLog& log) {
  os << "step,epoch,wall_seconds_train,wall_seconds_total,loss,lr,val_rel_error\n";
  for (const auto& r : log) {
    os << r.step << ',' << r.epoch << ',' << fmt_double(r.wall_seconds_train)
       << ',' << fmt_double(r.wall_seconds_total) << ',' << fmt_double(r.loss)
       << ',' << fmt_double(r.lr) << ',';
    if (r.val_rel_error) os << fmt_double(*r.val_rel_error);
    os << '\n';
  }
}

void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  write_train_log(os, log);
}

TrainLog read_train_log(std::istream& is) {
  TrainLog log;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7) throw std::invalid_argument("train log: bad row");
    TrainRecord r;
    r.step = std::stoll(cells[0]);
    r.epoch = std::stoll(cells[1]);
    r.wall_seconds_train = std::stod(cells[2]);
    r.wall_seconds_total = std::stod(cells[3]);
    r.loss = std::stod(cells[4]);
    r.lr = std::stod(cells[5]);
    if (!cells[6].empty()) r.val_rel_error = std::stod(cells[6]);
    log.push_back(r);
  }
  return log;
}

std::string mask_to_string(ComponentMask m) {
  std::string s(6, '0');
  for (int c = 0; c < 6; ++c) {
    if ((m >> c) & 1U) s[static_cast<std::size_t>(c)] = '1';
  }
  return s;
}

ComponentMask mask_from_string(const std::string& s) {
  if (s.size() != 6) throw std::invalid_argument("mask must have 6 characters");
  ComponentMask m = 0;
  for (int c = 0; c < 6; ++c) {
    const char ch = s[static_cast<std::size_t>(c)];
    if (ch == '1') {
      m = static_cast<ComponentMask>(m | (1U << c));
    } else if (ch != '0') {
      throw std::invalid_argument("mask characters must be 0 or 1");
    }
  }
  return m;
}

void write_observations(std::ostream& os, const ObservationSet& obs) {
  os << "t,x,y,z,E1,E2,E3,B1,B2,B3,mask\n";
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    for (int j = 0; j < 4; ++j) os << fmt_double(obs.points(i, j)) << ',';
    for (int j = 0; j < 6; ++j) os << fmt_double(obs.targets(i, j)) << ',';
    os << mask_to_string(obs.masks[static_cast<std::size_t>(i)]) << '\n';
  }
}

ObservationSet read_observations(std::istream& is) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv(line));
    if (rows.back().size() != 11) throw std::invalid_argument("observations: bad row");
  }
  ObservationSet obs;
  const auto n = static_cast<Eigen::Index>(rows.size());
  obs.points.resize(n, 4);
  obs.targets.resize(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cells = rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < 4; ++j) obs.points(i, j) = std::stod(cells[static_cast<std::size_t>(j)]);
    for (int j = 0; j < 6; ++j) obs.targets(i, j) = std::stod(cells[static_cast<std::size_t>(4 + j)]);
    obs.masks.push_back(mask_from_string(cells[10]));
  }
  obs.validate();
  return obs;
}

void write_field_csv(std::ostream& os, const PointMatrix& points,
                     const FieldMatrix& fields) {
  os << "t,x,y,z,E1,E2,E3,B1,B2,B3\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int j = 0; j < 4; ++j) os << fmt_double(points(i, j)) << ',';
    for (int j = 0; j < 6; ++j) {
      os << fmt_double(fields(i, j)) << (j == 5 ? '\n' : ',');
    }
  }
}

json report_to_json(const EvalReport& report, const ReportContext& context) {
  json j;
  j["rel_l2_error"] = report.rel_l2_error;
  j["residual_rmse"] =
      report.residual_rmse ? json(*report.residual_rmse) : json(nullptr);
  j["n_points"] = report.n_points;
  j["setup"] = context.setup;
  j["ground_truth"] = context.ground_truth;
  j["seed"] = context.seed;
  return j;
}

std::vector<TrigTerm> trig_terms_from_json(const json& j) {
  const json& list = j.is_object() && j.contains("terms") ? j.at("terms") : j;
  if (!list.is_array()) throw std::invalid_argument("trig terms: expected an array");
  std::vector<TrigTerm> terms;
  for (const json& t : list) {
    TrigTerm term;
    term.xi = vector_from(t.at("xi"), 3, "xi");
    term.amp_cos = vector_from(t.at("amp_cos"), 6, "amp_cos");
    if (t.contains("amp_sin")) term.amp_sin = vector_from(t.at("amp_sin"), 6, "amp_sin");
    terms.push_back(term);
  }
  return terms;
}

json train_config_to_json(const TrainConfig& c) {
  json j;
  j["width_half"] = c.width_half;
  j["activation"] = std::string(to_string(c.activation));
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["cosine_epochs"] = c.cosine_epochs;
  j["eta_min"] = c.eta_min;
  j["seed"] = c.seed;
  j["target_rel_error"] = c.target_rel_error ? json(*c.target_rel_error) : json(nullptr);
  j["val_every_steps"] = c.val_every_steps;
  j["wall_clock_budget_s"] =
      c.wall_clock_budget_s ? json(*c.wall_clock_budget_s) : json(nullptr);
  j["workers"] = c.workers;
  return j;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  auto opt = [&](const char* key, std::optional<double>& field) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
      field.reset();
    } else {
      field = j.at(key).get<double>();
    }
  };
  if (j.contains("width_half")) c.width_half = j.at("width_half").get<int>();
  if (j.contains("activation")) {
    c.activation = parse_activation(j.at("activation").get<std::string>());
  }
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
  if (j.contains("adam_epsilon")) c.adam_epsilon = j.at("adam_epsilon").get<double>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
  if (j.contains("cosine_epochs")) c.cosine_epochs = j.at("cosine_epochs").get<int>();
  if (j.contains("eta_min")) c.eta_min = j.at("eta_min").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  opt("target_rel_error", c.target_rel_error);
  if (j.contains("val_every_steps")) c.val_every_steps = j.at("val_every_steps").get<int>();
  opt("wall_clock_budget_s", c.wall_clock_budget_s);
  if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  return c;
}

}  // namespace flashmax::io
