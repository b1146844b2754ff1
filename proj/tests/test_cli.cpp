#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "taskfuse/baselines.hpp"
#include "taskfuse/data_model.hpp"
#include "taskfuse/weight_graph.hpp"

using namespace taskfuse;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string make_scratch() {
  char tmpl[] = "/tmp/taskfuse_cli_XXXXXX";
  REQUIRE(mkdtemp(tmpl) != nullptr);
  return tmpl;
}

CliRun cli(const std::string& args, const std::string& dir) {
  const std::string out_file = dir + "/stdout.txt";
  const std::string err_file = dir + "/stderr.txt";
  const std::string cmd = std::string(TASKFUSE_CLI_PATH) + " " + args + " > " +
                          out_file + " 2> " + err_file;
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

bool file_exists(const std::string& path) {
  return std::ifstream(path).good();
}

ParamMatrix read_theta_csv(const std::string& path,
                           std::vector<std::string>* header = nullptr) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  std::vector<std::string> ids;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) ids.push_back(cell);
  if (header) *header = ids;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    REQUIRE(row.size() == ids.size());
    rows.push_back(row);
  }
  ParamMatrix theta(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(ids.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < ids.size(); ++j)
      theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return theta;
}

std::string small_spec(int groups, int tasks_per_group, int n, int p,
                       int support, double noise, int seed) {
  json j = {{"groups", groups}, {"tasks_per_group", tasks_per_group},
            {"n", n},           {"p", p},
            {"support_size", support}, {"noise_sd", noise},
            {"seed", seed}};
  return j.dump();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen writes the three splits and the truth sidecar") {
  const std::string dir = make_scratch();
  const CliRun r = cli("gen --out " + dir, dir);
  CHECK(r.code == 0);
  for (const char* name : {"train.csv", "validation.csv", "test.csv"})
    CHECK(file_exists(dir + "/" + name));
  const TaskDataset train =
      load_csv(dir + "/train.csv", CsvSchema::long_format);
  CHECK(train.task_count() == 15);
  CHECK(train.p == 50);
  const json truth = json::parse(slurp(dir + "/truth.json"));
  REQUIRE(truth.contains("true_groups"));
  CHECK(truth["true_groups"].size() == 3);
  CHECK(truth["true_theta"].size() == 50);
  CHECK(truth["task_ids"].size() == 15);
}

TEST_CASE("gen is byte-for-byte reproducible") {
  const std::string a = make_scratch();
  const std::string b = make_scratch();
  spit(a + "/spec.json", small_spec(2, 2, 8, 5, 2, 1.0, 11));
  CHECK(cli("gen --spec " + a + "/spec.json --out " + a, a).code == 0);
  CHECK(cli("gen --spec " + a + "/spec.json --out " + b, b).code == 0);
  for (const char* name : {"train.csv", "validation.csv", "test.csv",
                           "truth.json"})
    CHECK(slurp(a + "/" + name) == slurp(b + "/" + name));
}

TEST_CASE("fit on one task with no fusion matches the reference lasso") {
  const std::string dir = make_scratch();
  spit(dir + "/spec.json", small_spec(1, 1, 12, 6, 2, 1.0, 3));
  REQUIRE(cli("gen --spec " + dir + "/spec.json --out " + dir, dir).code == 0);
  const CliRun r = cli("fit --data " + dir + "/train.csv --lambda1 0.5 "
                           "--lambda2 0 --tol 1e-9 --max-iter 50000 --out " +
                           dir + "/theta.csv",
                       dir);
  REQUIRE(r.code == 0);
  const json summary = json::parse(r.out);
  CHECK(summary["tasks"] == 1);
  CHECK(summary["p"] == 6);
  CHECK(summary["lambda1"] == 0.5);
  CHECK(summary["lambda2"] == 0.0);
  CHECK(summary["converged"] == true);
  CHECK(summary["iterations"].get<int>() >= 1);

  const TaskDataset d = load_csv(dir + "/train.csv", CsvSchema::long_format);
  const LassoFit ref = lasso_cd(d.tasks[0].X, d.tasks[0].y, 0.5);
  CHECK(std::abs(summary["objective"].get<double>() - ref.objective) <=
        1e-4 * std::max(1.0, ref.objective));
}

TEST_CASE("fit output round-trips through the objective") {
  const std::string dir = make_scratch();
  spit(dir + "/spec.json", small_spec(1, 3, 10, 5, 2, 1.0, 21));
  REQUIRE(cli("gen --spec " + dir + "/spec.json --out " + dir, dir).code == 0);
  const CliRun r = cli("fit --data " + dir + "/train.csv --lambda1 0.3 "
                           "--lambda2 0.7 --out " +
                           dir + "/theta.csv",
                       dir);
  REQUIRE(r.code == 0);
  const json summary = json::parse(r.out);

  std::vector<std::string> header;
  const ParamMatrix theta = read_theta_csv(dir + "/theta.csv", &header);
  const TaskDataset d = load_csv(dir + "/train.csv", CsvSchema::long_format);
  REQUIRE(static_cast<int>(header.size()) == d.task_count());
  for (int s = 0; s < d.task_count(); ++s)
    CHECK(header[static_cast<size_t>(s)] == d.tasks[static_cast<size_t>(s)].id);
  CHECK(theta.rows() == d.p);

  Hyperparams hp;
  hp.lambda1 = 0.3;
  hp.lambda2 = 0.7;
  const double direct = eval_objective(theta, d, hp, uniform_weights(3));
  const double reported = summary["objective"].get<double>();
  CHECK(std::abs(direct - reported) <= 1e-9 * std::max(1.0, reported));
}

TEST_CASE("thread count does not change the bytes") {
  const std::string dir = make_scratch();
  spit(dir + "/spec.json", small_spec(2, 2, 8, 6, 2, 1.0, 31));
  REQUIRE(cli("gen --spec " + dir + "/spec.json --out " + dir, dir).code == 0);
  const std::string base = " fit --data " + dir + "/train.csv --lambda1 0.2 "
                           "--lambda2 0.4 --knn 2 --phi 0.05 --out ";
  const CliRun one = cli("--threads 1" + base + dir + "/theta1.csv", dir);
  const std::string out_one = one.out;
  const CliRun two = cli("--threads 2" + base + dir + "/theta2.csv", dir);
  REQUIRE(one.code == 0);
  REQUIRE(two.code == 0);
  CHECK(slurp(dir + "/theta1.csv") == slurp(dir + "/theta2.csv"));
  const json ja = json::parse(out_one);
  const json jb = json::parse(two.out);
  CHECK(ja["objective"] == jb["objective"]);
  CHECK(ja["iterations"] == jb["iterations"]);
}

TEST_CASE("path and tree agree between full and light storage") {
  const std::string dir = make_scratch();
  // two identical tasks: zero noise within one group
  spit(dir + "/spec.json", small_spec(1, 2, 10, 5, 2, 0.0, 4));
  REQUIRE(cli("gen --spec " + dir + "/spec.json --out " + dir, dir).code == 0);
  const std::string common = "path --data " + dir +
                             "/train.csv --lambda1 0.2 --grid 0.5:4:3 ";
  REQUIRE(cli(common + "--out " + dir + "/path_full.json", dir).code == 0);
  REQUIRE(cli(common + "--light --out " + dir + "/path_light.json", dir)
              .code == 0);

  const json full = json::parse(slurp(dir + "/path_full.json"));
  REQUIRE(full["points"].size() == 3);
  CHECK(full["task_ids"].size() == 2);
  for (const auto& pt : full["points"]) {
    CHECK(pt["converged"] == true);
    CHECK(pt.contains("theta"));
  }
  const json light = json::parse(slurp(dir + "/path_light.json"));
  CHECK(light["points"][0].contains("dist"));

  REQUIRE(cli("tree --path " + dir + "/path_full.json --out " + dir +
                  "/tree_full.json --newick " + dir + "/tree.nwk",
              dir)
              .code == 0);
  REQUIRE(cli("tree --path " + dir + "/path_light.json --out " + dir +
                  "/tree_light.json",
              dir)
              .code == 0);
  CHECK(slurp(dir + "/tree_full.json") == slurp(dir + "/tree_light.json"));

  const json tree = json::parse(slurp(dir + "/tree_full.json"));
  CHECK(tree["merges"].size() == 1);  // identical tasks merge immediately
  const std::string nwk = slurp(dir + "/tree.nwk");
  CHECK(nwk.find(';') != std::string::npos);
  CHECK(nwk.front() == '(');
}

TEST_CASE("auto extension grows the grid until tasks fuse") {
  const std::string dir = make_scratch();
  spit(dir + "/spec.json", small_spec(1, 2, 10, 5, 2, 1.0, 6));
  REQUIRE(cli("gen --spec " + dir + "/spec.json --out " + dir, dir).code == 0);
  const CliRun r = cli("path --data " + dir + "/train.csv --lambda1 0.2 "
                           "--grid 0.5:0.5:1 --auto --gamma 0.05 "
                           "--max-iter 10000 --light --out " +
                           dir + "/path.json",
                       dir);
  REQUIRE(r.code == 0);
  const json path = json::parse(slurp(dir + "/path.json"));
  const size_t npts = path["points"].size();
  REQUIRE(npts > 1);
  for (size_t i = 1; i < npts; ++i)
    CHECK(path["points"][i]["lambda2"].get<double>() ==
          2.0 * path["points"][i - 1]["lambda2"].get<double>());
  REQUIRE(cli("tree --path " + dir + "/path.json --out " + dir + "/tree.json",
              dir)
              .code == 0);
  CHECK(json::parse(slurp(dir + "/tree.json"))["merges"].size() == 1);
}

TEST_CASE("usage errors exit with code 1") {
  const std::string dir = make_scratch();
  CHECK(cli("fit --lambda1 0.1 --lambda2 0 --out x.csv", dir).code == 1);
  CHECK(cli("frobnicate", dir).code == 1);
  CHECK(cli("", dir).code == 1);
}

TEST_CASE("data errors exit with code 2") {
  const std::string dir = make_scratch();
  const CliRun missing = cli("fit --data " + dir + "/absent.csv --lambda1 0.1 "
                                 "--lambda2 0 --out " +
                                 dir + "/t.csv",
                             dir);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("absent.csv") != std::string::npos);

  spit(dir + "/spec.json", small_spec(1, 2, 6, 4, 2, 1.0, 8));
  REQUIRE(cli("gen --spec " + dir + "/spec.json --out " + dir, dir).code == 0);
  CHECK(cli("fit --data " + dir + "/train.csv --schema sideways --lambda1 "
                "0.1 --lambda2 0 --out " +
                dir + "/t.csv",
            dir)
            .code == 2);
  CHECK(cli("path --data " + dir + "/train.csv --lambda1 0.1 --grid 0:5:4 "
                "--out " +
                dir + "/p.json",
            dir)
            .code == 2);
  CHECK(cli("tree --path " + dir + "/nothing.json --out " + dir + "/t.json",
            dir)
            .code == 2);
  spit(dir + "/badspec.json", "{\"volume\": 11}");
  CHECK(cli("gen --spec " + dir + "/badspec.json --out " + dir, dir).code ==
        2);
}

TEST_CASE("numeric blowups exit with code 3") {
  const std::string dir = make_scratch();
  std::ostringstream csv;
  csv << "task_id,y,x1,x2\n";
  for (int i = 0; i < 4; ++i)
    csv << "a,1e308," << (1.0 + 0.25 * i) << "," << (0.5 + 0.125 * i) << "\n";
  spit(dir + "/huge.csv", csv.str());
  const CliRun r = cli("fit --data " + dir + "/huge.csv --lambda1 0.1 "
                           "--lambda2 0 --out " +
                           dir + "/t.csv",
                       dir);
  CHECK(r.code == 3);
}

TEST_CASE("bench smoke run writes a report") {
  const std::string dir = make_scratch();
  spit(dir + "/spec.json", small_spec(2, 2, 8, 6, 2, 1.0, 12));
  const CliRun r = cli("bench --spec " + dir + "/spec.json --repeats 1 "
                           "--methods single_task --out " +
                           dir + "/bench.csv",
                       dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("single_task") != std::string::npos);
  const std::string csv = slurp(dir + "/bench.csv");
  CHECK(csv.find("single_task") != std::string::npos);
  CHECK(csv.find("mean_rmse") != std::string::npos);
}

}  // TEST_SUITE
