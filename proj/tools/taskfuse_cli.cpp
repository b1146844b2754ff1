#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "taskfuse/baselines.hpp"
#include "taskfuse/cv_harness.hpp"
#include "taskfuse/data_model.hpp"
#include "taskfuse/errors.hpp"
#include "taskfuse/path_tree.hpp"
#include "taskfuse/solver.hpp"
#include "taskfuse/synth.hpp"
#include "taskfuse/weight_graph.hpp"

namespace {

using nlohmann::json;
using namespace taskfuse;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file '" + path + "'");
  out << text;
  if (!out.good()) throw ValidationError("write failed for '" + path + "'");
}

void write_dataset_csv(const TaskDataset& d, const std::string& path) {
  std::ostringstream os;
  os << "task_id,y";
  for (Eigen::Index j = 0; j < d.p; ++j) os << ",x" << (j + 1);
  os << "\n";
  for (const auto& task : d.tasks)
    for (Eigen::Index i = 0; i < task.y.size(); ++i) {
      os << task.id << "," << fmt17(task.y(i));
      for (Eigen::Index j = 0; j < d.p; ++j) os << "," << fmt17(task.X(i, j));
      os << "\n";
    }
  write_file(path, os.str());
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
}

SynthSpec read_synth_spec(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw ValidationError(path + ": spec must be an object");
  SynthSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n")
        s.n = value.get<int>();
      else if (key == "p")
        s.p = value.get<int>();
      else if (key == "groups")
        s.groups = value.get<int>();
      else if (key == "tasks_per_group")
        s.tasks_per_group = value.get<int>();
      else if (key == "support_size")
        s.support_size = value.get<int>();
      else if (key == "coef_mode") {
        const auto mode = value.get<std::string>();
        if (mode == "equal")
          s.coef_mode = CoefMode::equal;
        else if (mode == "perturbed")
          s.coef_mode = CoefMode::perturbed;
        else
          throw ValidationError(path + ": coef_mode must be equal|perturbed");
      } else if (key == "coef_value")
        s.coef_value = value.get<double>();
      else if (key == "noise_sd")
        s.noise_sd = value.get<double>();
      else if (key == "seed")
        s.seed = value.get<std::uint64_t>();
      else
        throw ValidationError(path + ": unknown spec field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  s.validate();
  return s;
}

CsvSchema schema_from_string(const std::string& s) {
  if (s == "long") return CsvSchema::long_format;
  if (s == "multi") return CsvSchema::multi_response;
  throw ValidationError("unknown schema '" + s + "' (expected long|multi)");
}

WeightGraph make_weights(const TaskDataset& data, const std::string& wfile,
                         int knn, double phi) {
  if (!wfile.empty()) return load_weights(wfile, data.task_count());
  if (knn > 0) return knn_weights(data, knn, phi);
  return uniform_weights(data.task_count());
}

json theta_to_json(const ParamMatrix& theta) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < theta.cols(); ++j) row.push_back(theta(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct GenArgs {
  std::string spec, out;
};

int run_gen(const GenArgs& a) {
  const SynthSpec spec = a.spec.empty() ? SynthSpec{} : read_synth_spec(a.spec);
  const SynthInstance inst = generate(spec);
  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec)
    throw ValidationError("cannot create directory '" + a.out +
                          "': " + ec.message());
  write_dataset_csv(inst.train, a.out + "/train.csv");
  write_dataset_csv(inst.validation, a.out + "/validation.csv");
  write_dataset_csv(inst.test, a.out + "/test.csv");

  json truth;
  json ids = json::array();
  for (const auto& task : inst.train.tasks) ids.push_back(task.id);
  truth["task_ids"] = std::move(ids);
  truth["true_groups"] = inst.true_groups;
  truth["true_theta"] = theta_to_json(inst.true_theta);
  truth["spec"] = {
      {"n", spec.n},
      {"p", spec.p},
      {"groups", spec.groups},
      {"tasks_per_group", spec.tasks_per_group},
      {"support_size", spec.support_size},
      {"coef_mode", spec.coef_mode == CoefMode::equal ? "equal" : "perturbed"},
      {"coef_value", spec.coef_value},
      {"noise_sd", spec.noise_sd},
      {"seed", spec.seed}};
  write_file(a.out + "/truth.json", truth.dump(2) + "\n");
  return 0;
}

struct FitArgs {
  std::string data, weights, out, schema = "long";
  double lambda1 = 0.0, lambda2 = 0.0, phi = 0.0;
  int knn = 0;
  SolverConfig cfg;
};

int run_fit(const FitArgs& a) {
  const TaskDataset data = load_csv(a.data, schema_from_string(a.schema));
  const WeightGraph w = make_weights(data, a.weights, a.knn, a.phi);
  Hyperparams hp;
  hp.lambda1 = a.lambda1;
  hp.lambda2 = a.lambda2;
  const FitResult res = fit(data, hp, w, a.cfg);

  std::ostringstream os;
  for (int s = 0; s < data.task_count(); ++s)
    os << (s ? "," : "") << data.tasks[static_cast<size_t>(s)].id;
  os << "\n";
  for (Eigen::Index i = 0; i < res.theta.rows(); ++i) {
    for (Eigen::Index j = 0; j < res.theta.cols(); ++j)
      os << (j ? "," : "") << fmt17(res.theta(i, j));
    os << "\n";
  }
  write_file(a.out, os.str());

  json summary = {{"objective", res.objective},
                  {"iterations", res.iterations},
                  {"converged", res.converged},
                  {"lambda1", hp.lambda1},
                  {"lambda2", hp.lambda2},
                  {"tasks", data.task_count()},
                  {"p", data.p},
                  {"out", a.out}};
  std::cout << summary.dump() << "\n";
  return 0;
}

struct PathArgs {
  std::string data, weights, out, grid, schema = "long";
  double lambda1 = 0.0, phi = 0.0, merge_tol = 1e-4;
  int knn = 0;
  bool light = false, auto_extend = false;
  SolverConfig cfg;
};

std::vector<double> parse_grid(const std::string& text) {
  const auto a = text.find(':');
  const auto b = text.rfind(':');
  if (a == std::string::npos || b == a)
    throw ValidationError("--grid expects gmin:gmax:npts, got '" + text + "'");
  try {
    const double lo = std::stod(text.substr(0, a));
    const double hi = std::stod(text.substr(a + 1, b - a - 1));
    const int n = std::stoi(text.substr(b + 1));
    if (!(lo > 0.0))
      throw ValidationError("--grid minimum must be > 0 (log-spaced grid)");
    return log_spaced(lo, hi, n);
  } catch (const std::logic_error&) {
    throw ValidationError("--grid expects gmin:gmax:npts, got '" + text + "'");
  }
}

int run_path(const PathArgs& a) {
  const TaskDataset data = load_csv(a.data, schema_from_string(a.schema));
  const WeightGraph w = make_weights(data, a.weights, a.knn, a.phi);
  PathSpec spec;
  spec.lambda1 = a.lambda1;
  spec.lambda2_grid = parse_grid(a.grid);
  spec.merge_tol = a.merge_tol;
  const auto path = a.auto_extend ? compute_path_auto(data, w, spec, a.cfg)
                                  : compute_path(data, w, spec, a.cfg);

  json j;
  j["lambda1"] = spec.lambda1;
  j["p"] = data.p;
  json ids = json::array();
  for (const auto& task : data.tasks) ids.push_back(task.id);
  j["task_ids"] = std::move(ids);
  j["points"] = json::array();
  for (const auto& pt : path) {
    json point = {{"lambda2", pt.lambda2},
                  {"objective", pt.fit.objective},
                  {"converged", pt.fit.converged},
                  {"iterations", pt.fit.iterations}};
    if (a.light) {
      const auto d = normalized_distances(pt.lambda2, pt.fit.theta);
      json rows = json::array();
      for (Eigen::Index r = 0; r < d.dist.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < d.dist.cols(); ++c)
          row.push_back(d.dist(r, c));
        rows.push_back(std::move(row));
      }
      point["dist"] = std::move(rows);
    } else {
      point["theta"] = theta_to_json(pt.fit.theta);
    }
    j["points"].push_back(std::move(point));
  }
  write_file(a.out, j.dump() + "\n");

  json summary = {{"points", path.size()},
                  {"lambda2_max", path.back().lambda2},
                  {"out", a.out}};
  std::cout << summary.dump() << "\n";
  return 0;
}

struct TreeArgs {
  std::string path, out, newick;
  double merge_tol = 1e-4;
};

int run_tree(const TreeArgs& a) {
  const json j = read_json_file(a.path);
  std::vector<std::string> ids;
  std::vector<PathDistances> dists;
  try {
    ids = j.at("task_ids").get<std::vector<std::string>>();
    const int k = static_cast<int>(ids.size());
    for (const auto& point : j.at("points")) {
      PathDistances d;
      d.lambda2 = point.at("lambda2").get<double>();
      d.dist = Eigen::MatrixXd::Zero(k, k);
      if (point.contains("dist")) {
        const auto& rows = point["dist"];
        if (static_cast<int>(rows.size()) != k)
          throw ValidationError(a.path + ": dist matrix size mismatch");
        for (int r = 0; r < k; ++r)
          for (int c = 0; c < k; ++c)
            d.dist(r, c) = rows.at(static_cast<size_t>(r))
                               .at(static_cast<size_t>(c))
                               .get<double>();
      } else {
        const auto& rows = point.at("theta");
        const auto p = static_cast<Eigen::Index>(rows.size());
        ParamMatrix theta(p, k);
        for (Eigen::Index r = 0; r < p; ++r)
          for (int c = 0; c < k; ++c)
            theta(r, c) = rows.at(static_cast<size_t>(r))
                              .at(static_cast<size_t>(c))
                              .get<double>();
        d.dist = normalized_distances(d.lambda2, theta).dist;
      }
      dists.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw ValidationError(a.path + ": bad path file: " + e.what());
  }

  const Dendrogram tree = extract_tree(dists, a.merge_tol, ids);
  write_file(a.out, dendrogram_to_json(tree) + "\n");
  if (!a.newick.empty()) write_file(a.newick, dendrogram_to_newick(tree) + "\n");

  json summary = {{"leaves", tree.leaves.size()},
                  {"merges", tree.merges.size()},
                  {"raw_splits", tree.raw_splits.size()},
                  {"out", a.out}};
  std::cout << summary.dump() << "\n";
  return 0;
}

struct BenchArgs {
  std::string spec, out, methods = "ours,single_task,nogroup,pregroup";
  int repeats = 5;
  BenchmarkOptions opts;
};

int run_bench(const BenchArgs& a) {
  const SynthSpec spec = a.spec.empty() ? SynthSpec{} : read_synth_spec(a.spec);
  std::vector<Method> methods;
  std::stringstream ss(a.methods);
  std::string name;
  while (std::getline(ss, name, ','))
    if (!name.empty()) methods.push_back(method_from_string(name));
  const BenchmarkReport report = benchmark(spec, a.repeats, methods, a.opts);
  std::cout << report.to_text();
  if (!a.out.empty()) write_file(a.out, report.to_csv());
  return 0;
}

void add_solver_flags(CLI::App* cmd, SolverConfig& cfg) {
  cmd->add_option("--max-iter", cfg.max_iter, "iteration cap");
  cmd->add_option("--tol", cfg.tol, "convergence tolerance");
  cmd->add_option("--gamma", cfg.gamma, "prox scaling (sigma = m*gamma)");
  cmd->add_option("--mu", cfg.mu, "relaxation parameter in (0,2)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fused multitask sparse regression: joint sparse linear models "
               "with a pairwise fusion penalty that clusters tasks"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "OpenMP thread count (default: hardware concurrency)");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "write synthetic benchmark datasets");
  gen->add_option("--spec", gen_args.spec, "synthesis spec JSON file");
  gen->add_option("--out", gen_args.out, "output directory")->required();

  FitArgs fit_args;
  auto* fitc = app.add_subcommand("fit", "fit one (lambda1, lambda2) point");
  fitc->add_option("--data", fit_args.data, "input CSV")->required();
  fitc->add_option("--schema", fit_args.schema, "CSV schema: long|multi");
  fitc->add_option("--lambda1", fit_args.lambda1, "sparsity strength")
      ->required();
  fitc->add_option("--lambda2", fit_args.lambda2, "fusion strength")
      ->required();
  auto* fw = fitc->add_option("--weights", fit_args.weights,
                              "pairwise weight CSV (s,t,w)");
  auto* fk = fitc->add_option("--knn", fit_args.knn,
                              "k-nearest-neighbor weights on responses");
  fitc->add_option("--phi", fit_args.phi, "weight decay exp(-phi d^2)");
  fitc->add_option("--out", fit_args.out, "theta CSV output")->required();
  fw->excludes(fk);
  fk->excludes(fw);
  add_solver_flags(fitc, fit_args.cfg);

  PathArgs path_args;
  auto* pathc = app.add_subcommand("path", "sweep lambda2 with warm starts");
  pathc->add_option("--data", path_args.data, "input CSV")->required();
  pathc->add_option("--schema", path_args.schema, "CSV schema: long|multi");
  pathc->add_option("--lambda1", path_args.lambda1, "sparsity strength")
      ->required();
  pathc->add_option("--grid", path_args.grid, "lambda2 grid gmin:gmax:npts")
      ->required();
  auto* pw = pathc->add_option("--weights", path_args.weights,
                               "pairwise weight CSV (s,t,w)");
  auto* pk = pathc->add_option("--knn", path_args.knn,
                               "k-nearest-neighbor weights on responses");
  pathc->add_option("--phi", path_args.phi, "weight decay exp(-phi d^2)");
  pathc->add_option("--out", path_args.out, "path JSON output")->required();
  pathc->add_flag("--light", path_args.light,
                  "store pairwise distances instead of theta");
  pathc->add_flag("--auto", path_args.auto_extend,
                  "keep doubling lambda2 until tasks fully merge");
  pathc->add_option("--merge-tol", path_args.merge_tol,
                    "merge tolerance used by --auto");
  pw->excludes(pk);
  pk->excludes(pw);
  add_solver_flags(pathc, path_args.cfg);

  TreeArgs tree_args;
  auto* treec = app.add_subcommand("tree", "extract the task tree from a path");
  treec->add_option("--path", tree_args.path, "path JSON input")->required();
  treec->add_option("--merge-tol", tree_args.merge_tol, "merge tolerance");
  treec->add_option("--out", tree_args.out, "tree JSON output")->required();
  treec->add_option("--newick", tree_args.newick, "also write Newick format");

  BenchArgs bench_args;
  auto* benchc =
      app.add_subcommand("bench", "run the synthetic method comparison");
  benchc->add_option("--spec", bench_args.spec, "synthesis spec JSON file");
  benchc->add_option("--repeats", bench_args.repeats, "number of repeats");
  benchc->add_option("--methods", bench_args.methods,
                     "comma list: ours,single_task,nogroup,pregroup");
  benchc->add_option("--kappa", bench_args.opts.kappa,
                     "k-nearest-neighbor count for ours");
  benchc->add_option("--phi", bench_args.opts.phi,
                     "weight decay exp(-phi d^2)");
  benchc->add_flag("--kappa-sweep", bench_args.opts.kappa_sweep,
                   "sweep kappa over 2..6 for ours");
  benchc->add_option("--out", bench_args.out, "also write the report CSV");
  add_solver_flags(benchc, bench_args.opts.cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (gen->parsed()) return run_gen(gen_args);
    if (fitc->parsed()) return run_fit(fit_args);
    if (pathc->parsed()) return run_path(path_args);
    if (treec->parsed()) return run_tree(tree_args);
    if (benchc->parsed()) return run_bench(bench_args);
  } catch (const SolverDivergenceError& e) {
    std::cerr << "solver divergence at iteration " << e.iteration() << ": "
              << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
