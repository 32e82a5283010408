#include <fstream>
#include <sstream>

#include "doctest.h"
#include "plmodel/empirical.hpp"
#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"
#include "plmodel/pipeline.hpp"
#include "support.hpp"

using namespace plmodel;
using plmodel::test::random_dataset;
using plmodel::test::TempDir;

namespace {

RunConfig tiny_config() {
  RunConfig c = default_run_config(Scale::small);
  c.scene_gen.bounds = {-220.0, -220.0, 220.0, 220.0};
  c.scene_gen.buildings = 8;
  c.sites = {{"A", {-100.0, 60.0}}, {"B", {110.0, -80.0}}, {"C", {150.0, 150.0}}};
  c.sweep.f_ghz = {2.3};
  c.sweep.h_tx_m = {12.0};
  c.sweep.p_tx_w = {5.0};
  c.grid.spacing = 40.0;
  c.sim.max_reflections = 1;
  c.sim.max_wall_reflections = 1;
  c.models.resize(1);
  c.models[0] = ModelSpec{};
  c.models[0].type = ModelType::dtr;
  return c;
}

}  // namespace

TEST_CASE("run configuration") {
  const RunConfig small = default_run_config(Scale::small);
  CHECK_NOTHROW(small.validate());
  CHECK(small.sweep.combinations() == 12);
  CHECK(small.holdout_sites == std::vector<std::string>{"C"});
  CHECK(small.models.size() == 4);
  const RunConfig full = default_run_config(Scale::full_sweep);
  CHECK(full.sweep.combinations() == 45);

  const std::string text = run_config_json(small);
  CHECK(run_config_json(parse_run_config(text)) == text);

  RunConfig seeded = small;
  apply_seed(seeded, 7);
  CHECK(seeded.split.seed == 7);
  for (const ModelSpec& m : seeded.models) CHECK(m.rfr.seed == 7);
  CHECK(run_config_json(parse_run_config(run_config_json(seeded))) == run_config_json(seeded));

  const RunConfig partial = parse_run_config(R"({"scale":"small","models":{"knn":{"k":7}}})");
  REQUIRE(partial.models.size() == 1);
  CHECK(partial.models[0].type == ModelType::knn);
  CHECK(partial.models[0].knn.k == 7);

  CHECK_THROWS_WITH_AS(parse_run_config(R"({"sede":1})"), doctest::Contains("sede"), ValidationError);
  CHECK_THROWS_AS(parse_run_config(R"({"scale":"huge"})"), ValidationError);
  CHECK_THROWS_AS(parse_run_config(R"({"holdout_sites":["Z"]})"), ValidationError);
  CHECK_THROWS_AS(parse_run_config(R"({"holdout_sites":["A","B","C"]})"), ValidationError);
  CHECK_THROWS_AS(parse_run_config("[1,2"), ParseError);
  CHECK(parse_scale("full-sweep") == Scale::full_sweep);
}

TEST_CASE("baseline predictions") {
  Dataset d = random_dataset(200, 1);
  SUBCASE("fspl") {
    const auto p = baseline_predict(Baseline::fspl, d, {}, 1.5);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(p.pl_db[i] == fspl(d.samples[i].f_ghz, d.samples[i].distance_m));
    }
    CHECK(p.warnings.empty());
  }
  SUBCASE("ci fit recovers an exact free-space law") {
    for (Sample& s : d.samples) s.pl_db = fspl(s.f_ghz, s.distance_m);
    const CiParams ci = ci_fit_dataset(d);
    CHECK(ci.n == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(ci.sigma_db < 1e-9);
    const auto p = baseline_predict(Baseline::ci_fit, d, ci, 1.5);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(p.pl_db[i] == doctest::Approx(d.samples[i].pl_db).epsilon(1e-10));
  }
  SUBCASE("ci clamps distances below d0") {
    const CiParams ci{100.0, 3.0, 0.0};
    Dataset near;
    near.samples.push_back(d.samples[0]);
    near.samples[0].distance_m = 20.0;
    const auto p = baseline_predict(Baseline::ci_fit, near, ci, 1.5);
    CHECK(p.pl_db[0] == fspl(near.samples[0].f_ghz, 100.0));
  }
  SUBCASE("cost231 reports out-of-range samples") {
    const auto p = baseline_predict(Baseline::cost231, d, {}, 1.5);
    std::size_t freq = 0, dist = 0;
    for (const auto& [w, n] : p.warnings) {
      if (w == Cost231Warning::frequency_range) freq = n;
      if (w == Cost231Warning::distance_range) dist = n;
    }
    std::size_t expect_freq = 0, expect_dist = 0;
    for (const Sample& s : d.samples) {
      expect_freq += s.f_ghz > 2.0;
      expect_dist += s.distance_m < 1000.0;
    }
    CHECK(freq == expect_freq);
    CHECK(dist == expect_dist);
  }
  CHECK(parse_baseline("ci-eval") == Baseline::ci_fit);
  CHECK_THROWS_AS(parse_baseline("okumura"), ValidationError);
}

TEST_CASE("pl curve") {
  Dataset d;
  for (double dist : {10.0, 40.0, 60.0, 160.0}) {
    Sample s = random_dataset(1, 2).samples[0];
    s.distance_m = dist;
    s.pl_db = dist;
    d.samples.push_back(s);
  }
  const std::string csv = pl_curve_csv(d, 50.0, {{"m", {1.0, 3.0, 5.0, 7.0}}});
  CHECK(csv == "bin_lo_m,bin_hi_m,count,simulated_pl_db,m_pl_db\n"
               "0,50,2,25,2\n"
               "50,100,1,60,5\n"
               "150,200,1,160,7\n");
  CHECK_THROWS_AS(pl_curve_csv(d, 0.0, {}), ValidationError);
  CHECK_THROWS_AS(pl_curve_csv(d, 50.0, {{"m", {1.0}}}), ValidationError);
}

TEST_CASE("hash tree") {
  TempDir dir("hash");
  write_file_atomic(dir / "b.txt", "abc");
  write_file_atomic(dir / "a" / "x.txt", "");
  write_file_atomic(dir / "manifest.json", "{}");
  const auto entries = hash_tree(dir.path(), "manifest.json");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].path == "a/x.txt");
  CHECK(entries[0].sha256 == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(entries[1].path == "b.txt");
  CHECK(entries[1].bytes == 3);
  CHECK(entries[1].sha256 == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("reproduce on a tiny configuration") {
  const RunConfig cfg = tiny_config();
  TempDir a("repro_a"), b("repro_b");
  std::ostringstream log;
  const ReproduceResult ra = reproduce(cfg, a.path(), &log);
  const ReproduceResult rb = reproduce(cfg, b.path(), nullptr);
  CHECK(log.str().find("[reproduce]") != std::string::npos);
  CHECK(read_text_file(ra.manifest_path) == read_text_file(rb.manifest_path));
  for (const char* f : {"scene.json", "config.json", "datasets/train.csv", "datasets/test.csv",
                        "datasets/site_C.csv", "models/dtr.json", "reports/comparison.csv",
                        "reports/comparison.txt", "baselines/ci_fit.json", "figures/site_rmse.csv"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(a / f));
  }
  CHECK_FALSE(ra.gates.empty());
  // the output directory must be fresh
  CHECK_THROWS_AS(reproduce(cfg, a.path(), nullptr), IoError);
}
