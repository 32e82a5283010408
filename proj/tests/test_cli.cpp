#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "plmodel/empirical.hpp"
#include "plmodel/io_util.hpp"
#include "support.hpp"

using namespace plmodel;
using plmodel::test::random_dataset;
using plmodel::test::TempDir;

namespace {

// Runs the CLI with stdout and stderr captured into files under `dir`.
int run(const TempDir& dir, const std::string& args) {
  const std::string cmd = std::string("\"") + PLMODEL_CLI_PATH + "\" " + args + " > \"" +
                          (dir / "stdout.txt").string() + "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

std::vector<double> column(const std::filesystem::path& csv, const std::string& name) {
  const CsvTable t = read_csv(csv);
  const std::size_t c = *t.column(name);
  std::vector<double> out;
  for (const auto& row : t.rows) out.push_back(*parse_double(row[c]));
  return out;
}

}  // namespace

TEST_CASE("cli scene commands") {
  TempDir dir("cli_scene");
  CHECK(run(dir, "--seed 3 scene gen --buildings 12 -o " + q(dir / "a.json")) == 0);
  CHECK(run(dir, "--seed 3 scene gen --buildings 12 -o " + q(dir / "b.json")) == 0);
  CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));
  CHECK(run(dir, "--seed 4 scene gen --buildings 12 -o " + q(dir / "c.json")) == 0);
  CHECK(read_text_file(dir / "a.json") != read_text_file(dir / "c.json"));
  CHECK(run(dir, "scene gen --buildings 0 -o " + q(dir / "empty.json")) == 0);
  CHECK(run(dir, "scene validate " + q(dir / "empty.json")) == 0);
  CHECK(run(dir, "scene validate " + q(dir / "a.json")) == 0);

  std::string broken = read_text_file(dir / "a.json");
  broken.replace(broken.find("\"concrete\""), 10, "\"glass\"");
  write_file_atomic(dir / "broken.json", broken);
  CHECK(run(dir, "scene validate " + q(dir / "broken.json")) == 2);
  CHECK(read_text_file(dir / "stderr.txt").find("glass") != std::string::npos);

  CHECK(run(dir, "scene validate " + q(dir / "missing.json")) == 1);
  CHECK(run(dir, "frobnicate") == 2);
}

TEST_CASE("cli simulate and dataset build on an empty scene") {
  TempDir dir("cli_sim");
  REQUIRE(run(dir, "scene gen --buildings 0 -o " + q(dir / "empty.json")) == 0);
  write_file_atomic(dir / "cfg.json", R"({"sim":{"max_reflections":0,"max_wall_reflections":0}})");
  const std::string sim = "--config " + q(dir / "cfg.json") + " --out " + q(dir / "run") + " simulate --scene " +
                          q(dir / "empty.json") + " --site A:0:0 --freq 2.3 --height 12 --power 5 --spacing 100";
  REQUIRE(run(dir, sim) == 0);
  const auto file = dir / "run" / "coverage" / "A_f2.3_h12_p5.csv";
  REQUIRE(std::filesystem::exists(file));
  const std::string first = read_text_file(file);
  std::filesystem::rename(dir / "run", dir / "run1");
  REQUIRE(run(dir, sim) == 0);
  CHECK(read_text_file(file) == first);

  REQUIRE(run(dir, "--out " + q(dir / "run") + " dataset build") == 0);
  const auto pl = column(dir / "run" / "site_A.csv", "pl_db");
  const auto d = column(dir / "run" / "site_A.csv", "distance_m");
  REQUIRE(pl.size() > 50);
  double worst = 0;
  for (std::size_t i = 0; i < pl.size(); ++i) worst = std::max(worst, std::abs(pl[i] - fspl(2.3, d[i])));
  CHECK(worst < 0.01);
}

TEST_CASE("cli dataset, training, evaluation and prediction") {
  TempDir dir("cli_ml");
  save_csv(random_dataset(1000, 5), dir / "all.csv");
  const std::string out = " --out " + q(dir.path()) + " ";

  REQUIRE(run(dir, out + "dataset split --input " + q(dir / "all.csv")) == 0);
  CHECK(load_csv(dir / "train.csv").size() == 800);
  CHECK(load_csv(dir / "test.csv").size() == 200);

  CHECK(run(dir, out + "train knn --k 1000000 --data " + q(dir / "train.csv")) == 3);
  CHECK(read_text_file(dir / "stderr.txt").find("k exceeds training size") != std::string::npos);

  REQUIRE(run(dir, out + "train dtr --data " + q(dir / "train.csv") + " --model " + q(dir / "d1.json")) == 0);
  REQUIRE(run(dir, out + "train dtr --data " + q(dir / "train.csv") + " --model " + q(dir / "d2.json")) == 0);
  CHECK(read_text_file(dir / "d1.json") == read_text_file(dir / "d2.json"));

  REQUIRE(run(dir, out + "train mlp --epochs 1 --data " + q(dir / "train.csv")) == 0);
  const auto model = nlohmann::json::parse(read_text_file(dir / "mlp.json"));
  CHECK(model["training"]["train_mse"].size() == 1);
  CHECK(read_text_file(dir / "mlp.log").find("epoch,train_mse,validation_mse\n1,") != std::string::npos);

  REQUIRE(run(dir, out + "evaluate --model " + q(dir / "d1.json") + " --data " + q(dir / "test.csv")) == 0);
  const std::string eval = read_text_file(dir / "d1_eval.csv");
  const std::string table = read_text_file(dir / "stdout.txt");
  REQUIRE(run(dir, out + "evaluate --model " + q(dir / "d1.json") + " --data " + q(dir / "test.csv")) == 0);
  CHECK(read_text_file(dir / "d1_eval.csv") == eval);
  CHECK(read_text_file(dir / "stdout.txt") == table);
  CHECK(table.find("Total") != std::string::npos);

  REQUIRE(run(dir, out + "train knn --k 1 --data " + q(dir / "train.csv")) == 0);
  REQUIRE(run(dir, out + "predict --model " + q(dir / "knn.json") + " --input " + q(dir / "train.csv") +
                       " --output " + q(dir / "pred.csv")) == 0);
  CHECK(column(dir / "pred.csv", "pl_pred_db") == column(dir / "train.csv", "pl_db"));

  const std::string header = read_text_file(dir / "train.csv").substr(0, read_text_file(dir / "train.csv").find('\n') + 1);
  write_file_atomic(dir / "empty.csv", header);
  REQUIRE(run(dir, out + "predict --model " + q(dir / "knn.json") + " --input " + q(dir / "empty.csv") +
                       " --output " + q(dir / "empty_pred.csv")) == 0);
  CHECK(read_text_file(dir / "empty_pred.csv") == header.substr(0, header.size() - 1) + ",pl_pred_db\n");

  REQUIRE(run(dir, out + "baseline ci-fit --data " + q(dir / "train.csv")) == 0);
  CHECK(std::filesystem::exists(dir / "ci_fit.json"));
  REQUIRE(run(dir, out + "baseline ci-eval --params " + q(dir / "ci_fit.json") + " --data " + q(dir / "test.csv")) == 0);
  REQUIRE(run(dir, out + "baseline cost231 --data " + q(dir / "test.csv")) == 0);
  CHECK(read_text_file(dir / "stderr.txt").find("warning: COST-231") != std::string::npos);
}
