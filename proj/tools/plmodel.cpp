// plmodel: path-loss modeling toolkit command line.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "plmodel/config_json.hpp"
#include "plmodel/dataset.hpp"
#include "plmodel/empirical.hpp"
#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"
#include "plmodel/metrics.hpp"
#include "plmodel/ml/model.hpp"
#include "plmodel/pipeline.hpp"
#include "plmodel/raysim.hpp"
#include "plmodel/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plmodel;

namespace {

enum Exit : int { kOk = 0, kIo = 1, kValidation = 2, kTraining = 3 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

std::string format_mhz_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

RunConfig load_config(const Globals& g) {
  RunConfig c = g.config.empty() ? default_run_config(Scale::small) : parse_run_config(read_text_file(g.config));
  if (g.seed) apply_seed(c, *g.seed);
  return c;
}

Scene scene_for(const RunConfig& c, const std::string& scene_path) {
  if (!scene_path.empty()) return load_scene(scene_path);
  if (c.scene_path) return load_scene(*c.scene_path);
  throw ValidationError("no scene given: pass --scene or set scene.path in the config");
}

void print_warnings(const BaselinePrediction& p) {
  for (const auto& [w, n] : p.warnings) {
    std::cerr << "warning: COST-231 " << to_string(w) << " outside the validity range for " << n << " samples\n";
  }
}

// ---------------------------------------------------------------------------

int cmd_scene_gen(const Globals& g, int buildings, const std::string& output) {
  SceneGenSpec spec;
  if (!g.config.empty()) spec = load_config(g).scene_gen;
  if (buildings >= 0) spec.buildings = buildings;
  const std::uint64_t seed = g.seed.value_or(42);
  const Scene scene = generate_scene(seed, spec);
  const fs::path path = output.empty() ? fs::path(g.out) / "scene.json" : fs::path(output);
  save_scene(scene, path);
  std::cout << "wrote " << path.string() << " (" << scene.buildings().size() << " buildings, seed " << seed << ")\n";
  return kOk;
}

int cmd_scene_validate(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  try {
    const Scene scene = parse_scene(text);
    std::cout << "valid: " << scene.buildings().size() << " buildings, " << scene.materials().size()
              << " materials\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "invalid scene '" << path << "': " << e.what() << "\n";
    return kValidation;
  }
}

struct SimulateArgs {
  std::string scene;
  std::vector<std::string> sites;
  std::vector<double> f, h, p;
  double spacing = 0.0;
  int max_wall_reflections = -1;
  bool pgm = false;
};

TransmitterSite parse_site_flag(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() < 3 || parts.size() > 4) throw ValidationError("--site expects NAME:X:Y[:GAIN_DBI], got '" + text + "'");
  TransmitterSite s;
  s.name = parts[0];
  const auto x = parse_double(parts[1]);
  const auto y = parse_double(parts[2]);
  if (!x || !y) throw ValidationError("--site: bad coordinates in '" + text + "'");
  s.position = {*x, *y};
  if (parts.size() == 4) {
    const auto gain = parse_double(parts[3]);
    if (!gain) throw ValidationError("--site: bad gain in '" + text + "'");
    s.gain_dbi = *gain;
  }
  return s;
}

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  RunConfig c = load_config(g);
  const Scene scene = scene_for(c, a.scene);
  if (!a.sites.empty()) {
    c.sites.clear();
    for (const std::string& s : a.sites) c.sites.push_back(parse_site_flag(s));
  }
  if (!a.f.empty()) c.sweep.f_ghz = a.f;
  if (!a.h.empty()) c.sweep.h_tx_m = a.h;
  if (!a.p.empty()) c.sweep.p_tx_w = a.p;
  if (a.spacing > 0.0) c.grid.spacing = a.spacing;
  if (a.max_wall_reflections >= 0) c.sim.max_wall_reflections = a.max_wall_reflections;
  ReceiverGrid grid = c.grid;
  if (grid.extent.width() <= 0.0 || grid.extent.height() <= 0.0) grid.extent = scene.bounds();

  const fs::path dir = fs::path(g.out) / "coverage";
  json index;
  index["version"] = 1;
  index["scene"] = fs::absolute(a.scene.empty() ? *c.scene_path : fs::path(a.scene)).lexically_normal().string();
  index["grid"] = to_json(grid);
  index["sim"] = to_json(c.sim);
  index["entries"] = json::array();
  for (const TransmitterSite& site : c.sites) {
    for (double h : c.sweep.h_tx_m) {
      TransmitterSite tx = site;
      tx.height_agl = h;
      tx.power_w = c.sweep.p_tx_w.front();
      const CoverageGeometry geo = trace_coverage(scene, tx, grid, c.sim);
      for (double f : c.sweep.f_ghz) {
        SimConfig cfg = c.sim;
        cfg.frequency_ghz = f;
        for (double p : c.sweep.p_tx_w) {
          tx.power_w = p;
          const CoverageGrid cov = evaluate_coverage(geo, scene, tx, cfg);
          const std::string stem = site.name + "_f" + format_mhz_tag(f) + "_h" + format_mhz_tag(h) + "_p" + format_mhz_tag(p);
          write_file_atomic(dir / (stem + ".csv"), coverage_csv(cov, scene));
          if (a.pgm) write_file_atomic(dir / (stem + ".pgm"), coverage_pgm(cov, 40.0, 160.0));
          json e = to_json(tx);
          e["f_ghz"] = f;
          e["file"] = stem + ".csv";
          e["covered"] = cov.covered_cells();
          e["cells"] = cov.results.size();
          index["entries"].push_back(e);
          std::cout << stem << ": " << cov.covered_cells() << "/" << cov.results.size() << " cells covered\n";
        }
      }
    }
  }
  write_file_atomic(dir / "coverage_index.json", index.dump(2) + "\n");
  return kOk;
}

int cmd_dataset_build(const Globals& g, const std::string& coverage_dir) {
  const fs::path dir = coverage_dir.empty() ? fs::path(g.out) / "coverage" : fs::path(coverage_dir);
  const fs::path index_path = dir / "coverage_index.json";
  if (!fs::exists(index_path)) throw IoError("missing coverage index '" + index_path.string() + "'");
  json index;
  try {
    index = json::parse(read_text_file(index_path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("coverage index: ") + e.what());
  }
  const Scene scene = load_scene(index.at("scene").get<std::string>());
  const ReceiverGrid grid = receiver_grid_from_json(index.at("grid"), ReceiverGrid{});
  std::vector<std::string> order;
  std::map<std::string, std::pair<Dataset, int>> by_site;
  for (const json& e : index.at("entries")) {
    json site_j = e;
    site_j.erase("f_ghz");
    site_j.erase("file");
    site_j.erase("covered");
    site_j.erase("cells");
    const TransmitterSite tx = site_from_json(site_j);
    const double f = e.at("f_ghz").get<double>();
    const fs::path csv_path = dir / e.at("file").get<std::string>();
    if (!fs::exists(csv_path)) throw IoError("missing coverage file '" + csv_path.string() + "'");
    const CsvTable t = read_csv(csv_path);
    for (const char* col : {"x_m", "y_m", "distance_m", "los", "p_rx_dbm"}) {
      if (!t.column(col)) throw SchemaError(csv_path.string() + ": missing column '" + col + "'");
    }
    const std::size_t cx = *t.column("x_m"), cy = *t.column("y_m"), cd = *t.column("distance_m"),
                      cl = *t.column("los"), cp = *t.column("p_rx_dbm");
    if (!by_site.count(tx.name)) order.push_back(tx.name);
    auto& [data, subsets] = by_site[tx.name];
    ++subsets;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      if (row[cp].empty()) continue;
      const auto x = parse_double(row[cx]), y = parse_double(row[cy]), d = parse_double(row[cd]),
                 p = parse_double(row[cp]);
      if (!x || !y || !d || !p) throw ParseError(csv_path.string() + ": row " + std::to_string(r + 1) + " is malformed");
      const Vec3 rx{*x, *y, scene.ground_elevation({*x, *y}) + grid.rx_height};
      data.samples.push_back(sample_from_cell(scene, tx, f, tx.name, rx, *d, row[cl] == "1", *p, grid.rx_gain_dbi));
    }
  }
  for (const std::string& name : order) {
    const auto& [data, subsets] = by_site[name];
    const fs::path out = fs::path(g.out) / ("site_" + name + ".csv");
    save_csv(data, out);
    std::cout << "site " << name << ": " << subsets << " sub-datasets merged, " << data.size() << " samples -> "
              << out.string() << "\n";
  }
  return kOk;
}

int cmd_dataset_split(const Globals& g, const std::string& input, double test_fraction) {
  RunConfig c = load_config(g);
  SplitSpec spec = c.split;
  if (test_fraction > 0.0) spec.test_fraction = test_fraction;
  const Dataset data = load_csv(input);
  const auto [train, test] = train_test_split(data, spec);
  save_csv(train, fs::path(g.out) / "train.csv");
  save_csv(test, fs::path(g.out) / "test.csv");
  std::cout << "train " << train.size() << ", test " << test.size() << " (seed " << spec.seed << ")\n";
  return kOk;
}

struct BaselineArgs {
  std::string kind;
  std::string data;
  std::string params;
  double rx_height = 1.5;
  double d0 = 1.0;
  double bin = 50.0;
};

int cmd_baseline(const Globals& g, const BaselineArgs& a) {
  const Dataset data = load_csv(a.data);
  if (data.empty()) throw ValidationError("baseline: dataset '" + a.data + "' has no samples");
  const Baseline b = parse_baseline(a.kind);
  CiParams ci;
  const fs::path out(g.out);
  if (a.kind == "ci-fit" || a.kind == "ci_fit") {
    ci = ci_fit_dataset(data, a.d0);
    const json j = {{"d0_m", ci.d0}, {"n", ci.n}, {"sigma_db", ci.sigma_db}, {"fit_samples", data.size()}};
    write_file_atomic(out / "ci_fit.json", j.dump(2) + "\n");
    std::printf("ci-fit: n = %.12g, sigma = %.6g dB (d0 = %g m, %zu samples)\n", ci.n, ci.sigma_db, ci.d0, data.size());
  } else if (a.kind == "ci-eval") {
    if (a.params.empty()) throw ValidationError("ci-eval needs --params <ci_fit.json>");
    json j;
    try {
      j = json::parse(read_text_file(a.params));
      ci.d0 = j.at("d0_m").get<double>();
      ci.n = j.at("n").get<double>();
      ci.sigma_db = j.at("sigma_db").get<double>();
    } catch (const json::exception& e) {
      throw SchemaError(std::string("ci parameters: ") + e.what());
    }
  }
  const BaselinePrediction p = baseline_predict(b, data, ci, a.rx_height);
  print_warnings(p);
  const EvaluationReport r = evaluate_stratified(targets(data), p.pl_db, los_flags(data));
  const std::string name = to_string(b);
  const std::string table = report_table(r, name + " on " + a.data);
  std::cout << table;
  write_file_atomic(out / (name + "_report.txt"), table);
  write_file_atomic(out / (name + "_report.csv"), report_csv(r));
  write_file_atomic(out / (name + "_curve.csv"), pl_curve_csv(data, a.bin, {{name, p.pl_db}}));
  return kOk;
}

struct TrainArgs {
  std::string type;
  std::string data;
  std::string model_out;
  std::string max_depth;
  int min_samples_split = -1;
  int n_estimators = -1;
  bool no_bootstrap = false;
  bool feature_subsampling = false;
  int k = -1;
  int epochs = -1;
  double lr = -1.0;
  int batch_size = -1;
  int patience = -1;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const ModelType type = parse_model_type(a.type);
  ModelSpec spec;
  spec.type = type;
  if (!g.config.empty()) {
    const RunConfig c = load_config(g);
    for (const ModelSpec& m : c.models) {
      if (m.type == type) spec = m;
    }
  }
  if (g.seed) {
    spec.rfr.seed = *g.seed;
    spec.mlp.seed = *g.seed;
  }
  if (!a.max_depth.empty()) {
    std::optional<int> d;
    if (a.max_depth != "none") {
      const auto v = parse_double(a.max_depth);
      if (!v || *v != std::floor(*v)) throw TrainingError("--max-depth expects an integer or 'none'");
      d = static_cast<int>(*v);
    }
    spec.dtr.max_depth = d;
    spec.rfr.max_depth = d;
  }
  if (a.min_samples_split >= 0) spec.dtr.min_samples_split = spec.rfr.min_samples_split = a.min_samples_split;
  if (a.n_estimators >= 0) spec.rfr.n_estimators = a.n_estimators;
  if (a.no_bootstrap) spec.rfr.bootstrap = false;
  if (a.feature_subsampling) spec.rfr.feature_subsampling = true;
  if (a.k >= 0) spec.knn.k = a.k;
  if (a.epochs >= 0) spec.mlp.epochs = a.epochs;
  if (a.lr >= 0.0) spec.mlp.learning_rate = a.lr;
  if (a.batch_size >= 0) spec.mlp.batch_size = a.batch_size;
  if (a.patience >= 0) spec.mlp.patience = a.patience;

  const Dataset data = load_csv(a.data);
  const Regressor model = train_model(spec, data);
  const fs::path path = a.model_out.empty() ? fs::path(g.out) / (a.type + ".json") : fs::path(a.model_out);
  save_model(model, path);
  std::string log = "model " + a.type + " trained on " + std::to_string(data.size()) + " samples from " + a.data + "\n";
  if (type == ModelType::mlp) {
    log += "epoch,train_mse,validation_mse\n";
    for (std::size_t e = 0; e < model.history.train_mse.size(); ++e) {
      log += std::to_string(e + 1) + "," + format_double(model.history.train_mse[e]) + "," +
             (e < model.history.validation_mse.size() ? format_double(model.history.validation_mse[e]) : "") + "\n";
    }
    if (model.history.early_stopped) log += "early stop: validation loss stopped improving\n";
  }
  fs::path log_path = path;
  log_path.replace_extension(".log");
  write_file_atomic(log_path, log);
  std::cout << "wrote " << path.string() << "\n";
  return kOk;
}

int cmd_evaluate(const Globals& g, const std::string& model_path, const std::string& data_path) {
  const Regressor model = load_model(model_path);
  const Dataset data = load_csv(data_path);
  if (data.empty()) throw ValidationError("evaluate: dataset '" + data_path + "' has no samples");
  const auto pred = model.predict(data);
  const EvaluationReport r = evaluate_stratified(targets(data), pred, los_flags(data));
  const std::string name = fs::path(model_path).stem().string();
  const std::string table = report_table(r, to_string(model.type()) + " (" + model_path + ") on " + data_path);
  std::cout << table;
  write_file_atomic(fs::path(g.out) / (name + "_eval.txt"), table);
  write_file_atomic(fs::path(g.out) / (name + "_eval.csv"), report_csv(r));
  return kOk;
}

int cmd_predict(const Globals& g, const std::string& model_path, const std::string& input, const std::string& output) {
  const Regressor model = load_model(model_path);
  CsvTable t = read_csv(input);
  std::vector<std::size_t> cols;
  for (std::string_view f : kFeatureNames) {
    const auto c = t.column(f);
    if (!c) throw SchemaError(input + ": missing feature column '" + std::string(f) + "'");
    cols.push_back(*c);
  }
  FeatureMatrix x(t.rows.size(), kFeatureCount);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const auto v = parse_double(t.rows[r][cols[j]]);
      if (!v) {
        throw ParseError(input + ": row " + std::to_string(r + 1) + ", column '" + std::string(kFeatureNames[j]) +
                         "' is not a number");
      }
      x(r, j) = *v;
    }
  }
  const auto pred = x.rows ? model.predict(x) : std::vector<double>{};
  t.header.push_back("pl_pred_db");
  for (std::size_t r = 0; r < t.rows.size(); ++r) t.rows[r].push_back(format_double(pred[r]));
  const fs::path path = output.empty() ? fs::path(g.out) / "predictions.csv" : fs::path(output);
  write_file_atomic(path, to_csv(t));
  std::cout << "wrote " << path.string() << " (" << t.rows.size() << " rows)\n";
  return kOk;
}

int cmd_reproduce(const Globals& g, const std::string& scale) {
  RunConfig c = g.config.empty() ? default_run_config(parse_scale(scale.empty() ? "small" : scale))
                                 : parse_run_config(read_text_file(g.config));
  if (!g.config.empty() && !scale.empty() && parse_scale(scale) != c.scale) {
    const RunConfig d = default_run_config(parse_scale(scale));
    c.scale = d.scale;
    c.sweep = d.sweep;
  }
  if (g.seed) apply_seed(c, *g.seed);
  const ReproduceResult r = reproduce(c, g.out, &std::cerr);
  std::cout << "manifest: " << r.manifest_path.string() << "\n";
  for (const GateResult& gate : r.gates) {
    std::cout << (gate.passed ? "PASS " : "FAIL ") << gate.name << ": " << gate.detail << "\n";
  }
  return r.all_passed() ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plmodel: site-specific path-loss simulation, baselines and ML regressors"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--out", g.out, "Output directory");

  auto* scene = app.add_subcommand("scene", "Generate or validate a scene")->fallthrough();
  scene->require_subcommand(1);
  int buildings = -1;
  std::string scene_output;
  auto* scene_gen = scene->add_subcommand("gen", "Generate a synthetic suburban scene")->fallthrough();
  scene_gen->add_option("--buildings", buildings, "Number of buildings")->check(CLI::NonNegativeNumber);
  scene_gen->add_option("-o,--output", scene_output, "Scene file (default <out>/scene.json)");
  std::string validate_path;
  auto* scene_validate = scene->add_subcommand("validate", "Validate a scene file")->fallthrough();
  scene_validate->add_option("path", validate_path, "Scene file")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Trace coverage for every site and sweep combination")->fallthrough();
  simulate->add_option("--scene", sim.scene, "Scene file");
  simulate->add_option("--site", sim.sites, "Transmitter NAME:X:Y[:GAIN_DBI]");
  simulate->add_option("--freq", sim.f, "Frequencies (GHz)");
  simulate->add_option("--height", sim.h, "Transmitter heights above ground (m)");
  simulate->add_option("--power", sim.p, "Transmit powers (W)");
  simulate->add_option("--spacing", sim.spacing, "Receiver grid spacing (m)");
  simulate->add_option("--max-wall-reflections", sim.max_wall_reflections, "Wall reflection order");
  simulate->add_flag("--pgm", sim.pgm, "Also write PGM coverage images");

  auto* dataset = app.add_subcommand("dataset", "Build or split datasets")->fallthrough();
  dataset->require_subcommand(1);
  std::string coverage_dir;
  auto* dataset_build = dataset->add_subcommand("build", "Merge coverage outputs into per-site datasets")->fallthrough();
  dataset_build->add_option("--coverage", coverage_dir, "Directory holding coverage_index.json (default <out>/coverage)");
  std::string split_input;
  double test_fraction = -1.0;
  auto* dataset_split = dataset->add_subcommand("split", "Write train/test splits")->fallthrough();
  dataset_split->add_option("--input", split_input, "Dataset CSV")->required();
  dataset_split->add_option("--test-fraction", test_fraction, "Test share in (0, 1)");

  BaselineArgs base;
  auto* baseline = app.add_subcommand("baseline", "Fit or evaluate an empirical baseline")->fallthrough();
  baseline->add_option("kind", base.kind, "ci-fit | ci-eval | cost231 | fspl")
      ->required()
      ->check(CLI::IsMember({"ci-fit", "ci-eval", "cost231", "fspl"}));
  baseline->add_option("--data", base.data, "Dataset CSV")->required();
  baseline->add_option("--params", base.params, "CI parameters from ci-fit (for ci-eval)");
  baseline->add_option("--rx-height", base.rx_height, "Receiver height for COST-231 (m)");
  baseline->add_option("--d0", base.d0, "CI reference distance (m)");
  baseline->add_option("--bin", base.bin, "Distance bin width for the curve (m)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a regressor")->fallthrough();
  train->add_option("type", tr.type, "dtr | rfr | knn | mlp")->required()->check(CLI::IsMember({"dtr", "rfr", "knn", "mlp"}));
  train->add_option("--data", tr.data, "Training dataset CSV")->required();
  train->add_option("--model", tr.model_out, "Model file (default <out>/<type>.json)");
  train->add_option("--max-depth", tr.max_depth, "Tree depth limit or 'none'");
  train->add_option("--min-samples-split", tr.min_samples_split);
  train->add_option("--n-estimators", tr.n_estimators);
  train->add_flag("--no-bootstrap", tr.no_bootstrap);
  train->add_flag("--feature-subsampling", tr.feature_subsampling);
  train->add_option("--k", tr.k);
  train->add_option("--epochs", tr.epochs);
  train->add_option("--lr", tr.lr);
  train->add_option("--batch-size", tr.batch_size);
  train->add_option("--patience", tr.patience);

  std::string model_path, data_path;
  auto* evaluate = app.add_subcommand("evaluate", "Stratified evaluation of a model on a dataset")->fallthrough();
  evaluate->add_option("--model", model_path, "Model file")->required();
  evaluate->add_option("--data", data_path, "Dataset CSV")->required();

  std::string predict_model, predict_input, predict_output;
  auto* predict = app.add_subcommand("predict", "Append pl_pred_db to a feature CSV")->fallthrough();
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--input", predict_input, "Input CSV")->required();
  predict->add_option("--output", predict_output, "Output CSV (default <out>/predictions.csv)");

  std::string scale;
  auto* repro = app.add_subcommand("reproduce", "Run the desk-scale comparative experiment")->fallthrough();
  repro->add_option("--scale", scale, "small | full-sweep")->check(CLI::IsMember({"small", "full-sweep"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (scene_gen->parsed()) return cmd_scene_gen(g, buildings, scene_output);
    if (scene_validate->parsed()) return cmd_scene_validate(validate_path);
    if (simulate->parsed()) return cmd_simulate(g, sim);
    if (dataset_build->parsed()) return cmd_dataset_build(g, coverage_dir);
    if (dataset_split->parsed()) return cmd_dataset_split(g, split_input, test_fraction);
    if (baseline->parsed()) return cmd_baseline(g, base);
    if (train->parsed()) return cmd_train(g, tr);
    if (evaluate->parsed()) return cmd_evaluate(g, model_path, data_path);
    if (predict->parsed()) return cmd_predict(g, predict_model, predict_input, predict_output);
    if (repro->parsed()) return cmd_reproduce(g, scale);
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kTraining;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kValidation;
}
