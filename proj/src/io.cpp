#include "replab/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace replab {

json matrix_to_json(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(j.size()) != rows * cols)
    throw std::runtime_error("matrix_from_json: size mismatch");
  Matrix m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj)
      m(i, jj) = j[idx++].get<double>();
  return m;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

void check_schema(const json& j, const std::string& kind) {
  if (!j.contains("schema_version") ||
      j["schema_version"].get<int>() != kSchemaVersion)
    throw std::runtime_error("schema_version mismatch (expected " +
                             std::to_string(kSchemaVersion) + ")");
  if (!j.contains("kind") || j["kind"].get<std::string>() != kind)
    throw std::runtime_error("artifact kind mismatch (expected " + kind + ")");
}

json env_to_json(const TaskEnvironment& env) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "task_environment";
  j["family"] = family_name(env.family);
  j["d"] = env.d;
  j["k"] = env.k;
  j["T"] = env.T;
  j["delta0"] = env.delta0;
  j["noise_sigma"] = env.noise_sigma;
  j["seed"] = env.seed;
  j["eps"] = env.eps;
  j["target_w_radius"] = env.target_w_radius;
  j["w_norm_lo"] = env.w_norm_lo;
  j["w_norm_hi"] = env.w_norm_hi;
  j["diversity_c"] = env.diversity_c;
  j["sigma_row_major"] = matrix_to_json(env.Sigma);
  j["bstar_row_major"] = matrix_to_json(env.Bstar);
  json tasks = json::array();
  for (const TaskParams& p : env.tasks) {
    json t;
    t["delta_row_major"] = matrix_to_json(p.Delta);
    t["w"] = vector_to_json(p.w);
    tasks.push_back(std::move(t));
  }
  j["tasks"] = std::move(tasks);
  return j;
}

TaskEnvironment env_from_json(const json& j) {
  check_schema(j, "task_environment");
  TaskEnvironment env;
  env.family = family_from_name(j["family"].get<std::string>());
  env.d = j["d"].get<int>();
  env.k = j["k"].get<int>();
  env.T = j["T"].get<int>();
  env.delta0 = j["delta0"].get<double>();
  env.noise_sigma = j["noise_sigma"].get<double>();
  env.seed = j["seed"].get<std::uint64_t>();
  env.eps = j["eps"].get<double>();
  env.target_w_radius = j["target_w_radius"].get<double>();
  env.w_norm_lo = j["w_norm_lo"].get<double>();
  env.w_norm_hi = j["w_norm_hi"].get<double>();
  env.diversity_c = j["diversity_c"].get<double>();
  env.Sigma = matrix_from_json(j["sigma_row_major"], env.d, env.d);
  env.Bstar = matrix_from_json(j["bstar_row_major"], env.d, env.k);
  for (const json& t : j["tasks"]) {
    TaskParams p;
    p.Delta = matrix_from_json(t["delta_row_major"], env.d, env.k);
    p.w = vector_from_json(t["w"]);
    env.tasks.push_back(std::move(p));
  }
  if (static_cast<int>(env.tasks.size()) != env.T)
    throw std::runtime_error("env_from_json: task count mismatch");
  return env;
}

json source_solution_to_json(const SourceSolution& sol) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "source_solution";
  j["objective"] =
      sol.objective_tag == SourceObjective::adaptrep ? "adaptrep" : "frozenrep";
  j["train_loss"] = sol.train_loss;
  j["data_loss"] = sol.data_loss;
  j["restarts_used"] = sol.restarts_used;
  j["converged"] = sol.converged;
  j["best_restart"] = sol.best_restart;
  j["d"] = static_cast<int>(sol.B0.rows());
  j["k"] = static_cast<int>(sol.B0.cols());
  j["b0_row_major"] = matrix_to_json(sol.B0);
  json restarts = json::array();
  for (const SourceRestart& r : sol.restarts) {
    json rj;
    rj["train_loss"] = r.train_loss;
    rj["data_loss"] = r.data_loss;
    rj["converged"] = r.converged;
    rj["seed"] = r.seed;
    rj["b0_row_major"] = matrix_to_json(r.B0);
    restarts.push_back(std::move(rj));
  }
  j["restarts"] = std::move(restarts);
  json tasks = json::array();
  for (const TaskParams& p : sol.per_task) {
    json t;
    t["delta_row_major"] = matrix_to_json(p.Delta);
    t["w"] = vector_to_json(p.w);
    tasks.push_back(std::move(t));
  }
  j["per_task"] = std::move(tasks);
  return j;
}

json target_task_to_json(const TargetTask& task) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "target_task";
  j["theta_star"] = vector_to_json(task.theta_star);
  j["w_star"] = vector_to_json(task.w_star);
  j["delta_star"] = vector_to_json(task.delta_star);
  return j;
}

TargetTask target_task_from_json(const json& j) {
  check_schema(j, "target_task");
  TargetTask task;
  task.theta_star = vector_from_json(j["theta_star"]);
  task.w_star = vector_from_json(j["w_star"]);
  task.delta_star = vector_from_json(j["delta_star"]);
  return task;
}

json finetune_result_to_json(const FineTuneResult& res,
                             const TargetTask& task) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "finetune_result";
  const char* mode = res.spec.mode == AdaptMode::delta_only ? "delta_only"
                     : res.spec.mode == AdaptMode::full_adapt ? "full_adapt"
                                                              : "ignore_rep";
  j["mode"] = mode;
  j["beta_scale"] = res.spec.beta_scale;
  j["c1"] = res.spec.c1;
  j["c2"] = res.spec.c2;
  j["t_pgd"] = res.spec.t_pgd;
  j["theta_hat"] = vector_to_json(res.theta_hat);
  j["best_index"] = res.trace.best_index;
  j["best_loss"] = res.trace.losses.empty()
                       ? 0.0
                       : res.trace.losses[res.trace.best_index];
  j["task"] = target_task_to_json(task);
  return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json j;
  in >> j;
  return j;
}

std::string format_double(double v) { return json(v).dump(); }

void dataset_to_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  const Eigen::Index d = ds.X.cols();
  for (Eigen::Index j = 0; j < d; ++j) out << "x" << j << ",";
  out << "y\n";
  for (int i = 0; i < ds.n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      out << format_double(ds.X(i, j)) << ",";
    out << format_double(ds.y[i]) << "\n";
  }
}

Dataset dataset_from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("dataset_from_csv: empty file");
  Eigen::Index d = static_cast<Eigen::Index>(
      std::count(line.begin(), line.end(), ',');
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(row.size()) != d + 1)
      throw std::runtime_error("dataset_from_csv: ragged row");
    rows.push_back(std::move(row));
  }
  Dataset ds;
  ds.n = static_cast<int>(rows.size());
  ds.X.resize(ds.n, d);
  ds.y.resize(ds.n);
  for (int i = 0; i < ds.n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) ds.X(i, j) = rows[i][j];
    ds.y[i] = rows[i][d];
  }
  return ds;
}

void trace_to_csv(const PGDTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "iteration,loss,param_norm\n";
  for (std::size_t t = 0; t < trace.losses.size(); ++t) {
    double nrm = t < trace.iterates.size() ? trace.iterates[t].norm() : 0.0;
    out << t << "," << format_double(trace.losses[t]) << ","
        << format_double(nrm) << "\n";
  }
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace replab
