#include "plmodel/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>

#include "plmodel/config_json.hpp"
#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"

namespace plmodel {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Scale s) { return s == Scale::small ? "small" : "full-sweep"; }

Scale parse_scale(std::string_view name) {
  if (name == "small") return Scale::small;
  if (name == "full-sweep") return Scale::full_sweep;
  throw ValidationError("unknown scale '" + std::string(name) + "' (expected small or full-sweep)");
}

void RunConfig::validate() const {
  if (sites.empty()) throw ValidationError("config: no transmitter sites");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    sites[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (sites[j].name == sites[i].name) throw ValidationError("config: duplicate site name '" + sites[i].name + "'");
    }
  }
  for (const std::string& h : holdout_sites) {
    if (std::none_of(sites.begin(), sites.end(), [&](const TransmitterSite& s) { return s.name == h; })) {
      throw ValidationError("config: holdout site '" + h + "' is not a declared site");
    }
  }
  if (holdout_sites.size() >= sites.size()) throw ValidationError("config: no training sites left");
  if (sweep.f_ghz.empty() || sweep.h_tx_m.empty() || sweep.p_tx_w.empty()) {
    throw ValidationError("config: sweep sets must be non-empty");
  }
  for (double h : sweep.h_tx_m) {
    if (!(h > 0.0)) throw ValidationError("config: sweep heights must be > 0");
    if (!scene_path && !(h > site_roof_height_m)) {
      throw ValidationError("config: sweep height " + format_double(h) + " m is not above the site roof");
    }
  }
  for (double p : sweep.p_tx_w) {
    if (!(p > 0.0)) throw ValidationError("config: sweep powers must be > 0");
  }
  sim.validate();
  split.validate();
  if (models.empty()) throw ValidationError("config: no models selected");
  for (const ModelSpec& m : models) m.validate();
  if (!(curve_bin_m > 0.0)) throw ValidationError("config: curve_bin_m must be > 0");
  if (scene_path && !fs::exists(*scene_path)) {
    throw ValidationError("config: scene file '" + scene_path->string() + "' does not exist");
  }
}

RunConfig default_run_config(Scale scale) {
  RunConfig c;
  c.scale = scale;
  if (scale == Scale::small) {
    c.sweep.f_ghz = {1.5, 2.3, 3.5};
    c.sweep.h_tx_m = {12.0, 21.0};
    c.sweep.p_tx_w = {5.0, 15.0};
  }
  c.sites = {{"A", {-150.0, 100.0}}, {"B", {150.0, -120.0}}, {"C", {420.0, 380.0}}};
  c.holdout_sites = {"C"};
  c.sim.max_reflections = 4;
  c.sim.max_wall_reflections = 2;
  for (ModelType t : {ModelType::dtr, ModelType::rfr, ModelType::knn, ModelType::mlp}) {
    ModelSpec m;
    m.type = t;
    c.models.push_back(m);
  }
  // shorter schedule for the bundled run; TrainConfig keeps 1000
  c.models.back().mlp.epochs = 80;
  apply_seed(c, c.seed);
  return c;
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.split.seed = seed;
  for (ModelSpec& m : cfg.models) {
    m.rfr.seed = seed;
    m.mlp.seed = seed;
  }
}

std::string run_config_json(const RunConfig& c) {
  json doc;
  doc["scale"] = to_string(c.scale);
  doc["seed"] = c.seed;
  json scene;
  if (c.scene_path) scene["path"] = c.scene_path->string();
  else scene["generate"] = to_json(c.scene_gen);
  scene["site_roof_height_m"] = c.site_roof_height_m;
  scene["site_roof_half_width_m"] = c.site_roof_half_width_m;
  doc["scene"] = scene;
  doc["sites"] = json::array();
  for (const TransmitterSite& s : c.sites) doc["sites"].push_back(to_json(s));
  doc["holdout_sites"] = c.holdout_sites;
  doc["sweep"] = to_json(c.sweep);
  doc["grid"] = to_json(c.grid);
  doc["sim"] = to_json(c.sim);
  doc["split"] = to_json(c.split);
  doc["models"] = json::object();
  for (const ModelSpec& m : c.models) doc["models"][to_string(m.type)] = to_json(m);
  doc["curve_bin_m"] = c.curve_bin_m;
  return doc.dump(2) + "\n";
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  for (const auto& item : doc.items()) {
    static const char* kKeys[] = {"scale", "seed", "scene", "sites", "holdout_sites", "sweep", "grid",
                                  "sim", "split", "models", "curve_bin_m"};
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return item.key() == k; }) ==
        std::end(kKeys)) {
      throw ValidationError("config: unknown key '" + item.key() + "'");
    }
  }
  try {
    RunConfig c = default_run_config(parse_scale(doc.value("scale", std::string("small"))));
    if (doc.contains("seed")) apply_seed(c, doc["seed"].get<std::uint64_t>());
    if (doc.contains("scene")) {
      const json& s = doc["scene"];
      for (const auto& item : s.items()) {
        if (item.key() != "path" && item.key() != "generate" && item.key() != "site_roof_height_m" &&
            item.key() != "site_roof_half_width_m") {
          throw ValidationError("config: unknown key 'scene." + item.key() + "'");
        }
      }
      if (s.contains("path") && s.contains("generate")) {
        throw ValidationError("config: scene takes either 'path' or 'generate', not both");
      }
      if (s.contains("path")) c.scene_path = s["path"].get<std::string>();
      if (s.contains("generate")) c.scene_gen = scene_gen_from_json(s["generate"], c.scene_gen);
      c.site_roof_height_m = s.value("site_roof_height_m", c.site_roof_height_m);
      c.site_roof_half_width_m = s.value("site_roof_half_width_m", c.site_roof_half_width_m);
    }
    if (doc.contains("sites")) {
      c.sites.clear();
      for (const json& s : doc["sites"]) c.sites.push_back(site_from_json(s));
    }
    if (doc.contains("holdout_sites")) c.holdout_sites = doc["holdout_sites"].get<std::vector<std::string>>();
    if (doc.contains("sweep")) c.sweep = sweep_from_json(doc["sweep"], c.sweep);
    if (doc.contains("grid")) c.grid = receiver_grid_from_json(doc["grid"], c.grid);
    if (doc.contains("sim")) c.sim = sim_config_from_json(doc["sim"], c.sim);
    if (doc.contains("split")) c.split = split_from_json(doc["split"], c.split);
    if (doc.contains("models")) {
      std::vector<ModelSpec> chosen;
      for (const auto& item : doc["models"].items()) {
        const ModelType t = parse_model_type(item.key());
        const auto base = std::find_if(c.models.begin(), c.models.end(),
                                       [&](const ModelSpec& m) { return m.type == t; });
        chosen.push_back(model_spec_from_json(item.value(), t, *base));
      }
      c.models = std::move(chosen);
    }
    c.curve_bin_m = doc.value("curve_bin_m", c.curve_bin_m);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Baselines

std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::ci_fit: return "ci_fit";
    case Baseline::cost231: return "cost231";
    case Baseline::fspl: return "fspl";
  }
  return "unknown";
}

Baseline parse_baseline(std::string_view name) {
  if (name == "ci_fit" || name == "ci-fit" || name == "ci-eval") return Baseline::ci_fit;
  if (name == "cost231") return Baseline::cost231;
  if (name == "fspl") return Baseline::fspl;
  throw ValidationError("unknown baseline '" + std::string(name) + "'");
}

CiParams ci_fit_dataset(const Dataset& data, double d0) {
  std::vector<CiSample> s;
  s.reserve(data.size());
  for (const Sample& x : data.samples) s.push_back({x.distance_m, x.f_ghz, x.pl_db});
  return ci_fit(s, d0);
}

BaselinePrediction baseline_predict(Baseline b, const Dataset& data, const CiParams& ci, double rx_height_m) {
  BaselinePrediction out;
  out.pl_db.reserve(data.size());
  std::map<Cost231Warning, std::size_t> counts;
  for (const Sample& s : data.samples) {
    switch (b) {
      case Baseline::ci_fit: out.pl_db.push_back(ci_pathloss(ci, s.f_ghz, std::max(s.distance_m, ci.d0))); break;
      case Baseline::fspl: out.pl_db.push_back(fspl(s.f_ghz, s.distance_m)); break;
      case Baseline::cost231: {
        const Cost231Result r = cost231_hata_suburban({s.f_ghz * 1000.0, s.h_tx_m, rx_height_m, s.distance_m / 1000.0, 0.0});
        for (Cost231Warning w : r.warnings) ++counts[w];
        out.pl_db.push_back(r.pl_db);
        break;
      }
    }
  }
  out.warnings.assign(counts.begin(), counts.end());
  return out;
}

std::string pl_curve_csv(const Dataset& data, double bin_m,
                         const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  if (!(bin_m > 0.0)) throw ValidationError("curve: bin width must be > 0");
  for (const auto& s : series) {
    if (s.second.size() != data.size()) throw ValidationError("curve: series '" + s.first + "' has the wrong length");
  }
  struct Bin {
    std::size_t count = 0;
    double sim = 0.0;
    std::vector<double> pred;
  };
  std::map<long long, Bin> bins;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto k = static_cast<long long>(std::floor(data.samples[i].distance_m / bin_m));
    Bin& b = bins[k];
    if (b.pred.empty()) b.pred.assign(series.size(), 0.0);
    ++b.count;
    b.sim += data.samples[i].pl_db;
    for (std::size_t j = 0; j < series.size(); ++j) b.pred[j] += series[j].second[i];
  }
  std::string out = "bin_lo_m,bin_hi_m,count,simulated_pl_db";
  for (const auto& s : series) out += "," + s.first + "_pl_db";
  out += "\n";
  for (const auto& [k, b] : bins) {
    const double n = static_cast<double>(b.count);
    out += format_double(static_cast<double>(k) * bin_m) + "," + format_double(static_cast<double>(k + 1) * bin_m) +
           "," + std::to_string(b.count) + "," + format_double(b.sim / n);
    for (double p : b.pred) out += "," + format_double(p / n);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reproduce

bool ReproduceResult::all_passed() const {
  return std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.passed; });
}

std::vector<ManifestEntry> hash_tree(const fs::path& dir, std::string_view exclude) {
  std::vector<ManifestEntry> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == exclude) continue;
    out.push_back({rel, e.file_size(), sha256_file(e.path())});
  }
  std::sort(out.begin(), out.end(), [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

class Stage {
 public:
  Stage(std::ostream* log, std::string name) : log_(log), name_(std::move(name)), start_(Clock::now()) {
    if (log_) *log_ << "[reproduce] " << name_ << " ..." << std::endl;
  }
  ~Stage() {
    if (log_) {
      const double s = std::chrono::duration<double>(Clock::now() - start_).count();
      *log_ << "[reproduce] " << name_ << " done in " << format_fixed(s) << " s" << std::endl;
    }
  }

 private:
  static std::string format_fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
  }
  std::ostream* log_;
  std::string name_;
  Clock::time_point start_;
};

struct Evaluated {
  std::string set;    // "test" or "site_<name>"
  std::string model;  // model or baseline name
  bool baseline = false;
  EvaluationReport report;
  std::vector<double> pred;
};

void ensure_fresh(const fs::path& dir) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw IoError("output path '" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir)) throw IoError("output directory '" + dir.string() + "' is not empty");
  }
  fs::create_directories(dir);
}

Scene build_scene(const RunConfig& cfg) {
  if (cfg.scene_path) return load_scene(*cfg.scene_path);
  SceneGenSpec gen = cfg.scene_gen;
  const double w = cfg.site_roof_half_width_m;
  for (const TransmitterSite& s : cfg.sites) {
    Building b;
    b.footprint = {{s.position.x - w, s.position.y - w},
                   {s.position.x + w, s.position.y - w},
                   {s.position.x + w, s.position.y + w},
                   {s.position.x - w, s.position.y + w}};
    b.height = cfg.site_roof_height_m;
    b.material = "concrete";
    gen.reserved.push_back(std::move(b));
  }
  return generate_scene(cfg.seed, gen);
}

std::string row_csv_line(const std::string& set, const std::string& model, const char* stratum, const MetricRow& m) {
  return set + "," + model + "," + stratum + "," + std::to_string(m.count) + "," + format_double(m.rmse_db) + "," +
         format_double(m.mape_pct) + "," + format_double(m.msle) + "," + format_optional(m.rho) + "\n";
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

ReproduceResult reproduce(const RunConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  cfg.validate();
  ensure_fresh(out_dir);
  const Stage total(log, "reproduce (" + to_string(cfg.scale) + ")");

  std::optional<Scene> scene_holder;
  {
    const Stage s(log, "scene");
    scene_holder.emplace(build_scene(cfg));
  }
  const Scene& scene = *scene_holder;
  save_scene(scene, out_dir / "scene.json");
  write_file_atomic(out_dir / "config.json", run_config_json(cfg));

  ReceiverGrid grid = cfg.grid;
  if (grid.extent.width() <= 0.0 || grid.extent.height() <= 0.0) grid.extent = scene.bounds();

  std::vector<Dataset> per_site;
  std::vector<SubDatasetInfo> info;
  {
    const Stage s(log, "simulate sweep");
    per_site = sweep(scene, cfg.sites, cfg.sweep, grid, cfg.sim, &info);
  }
  {
    std::string csv = "site,f_ghz,h_tx_m,p_tx_w,cells,covered\n";
    for (const SubDatasetInfo& i : info) {
      csv += i.site + "," + format_double(i.f_ghz) + "," + format_double(i.h_tx_m) + "," + format_double(i.p_tx_w) +
             "," + std::to_string(i.cells) + "," + std::to_string(i.covered) + "\n";
    }
    write_file_atomic(out_dir / "datasets" / "sub_datasets.csv", csv);
  }

  auto is_holdout = [&](const std::string& name) {
    return std::find(cfg.holdout_sites.begin(), cfg.holdout_sites.end(), name) != cfg.holdout_sites.end();
  };
  std::vector<Dataset> train_parts;
  for (std::size_t i = 0; i < cfg.sites.size(); ++i) {
    save_csv(per_site[i], out_dir / "datasets" / ("site_" + cfg.sites[i].name + ".csv"));
    if (!is_holdout(cfg.sites[i].name)) train_parts.push_back(per_site[i]);
  }
  const Dataset pool = concat(train_parts);
  auto [train, test] = train_test_split(pool, cfg.split);
  if (train.empty() || test.empty()) throw ValidationError("reproduce: the split left an empty train or test set");
  save_csv(train, out_dir / "datasets" / "train.csv");
  save_csv(test, out_dir / "datasets" / "test.csv");
  if (log) *log << "[reproduce] samples: train " << train.size() << ", test " << test.size() << std::endl;

  // Evaluation sets: the test split, then every held-out site.
  std::vector<std::pair<std::string, const Dataset*>> sets{{"test", &test}};
  for (std::size_t i = 0; i < cfg.sites.size(); ++i) {
    if (is_holdout(cfg.sites[i].name)) sets.emplace_back("site_" + cfg.sites[i].name, &per_site[i]);
  }

  std::vector<Evaluated> results;
  const CiParams ci = ci_fit_dataset(train);
  {
    json j = {{"d0_m", ci.d0}, {"n", ci.n}, {"sigma_db", ci.sigma_db}, {"fit_samples", train.size()}};
    write_file_atomic(out_dir / "baselines" / "ci_fit.json", j.dump(2) + "\n");
  }
  std::string warnings_text;
  for (const auto& [set_name, data] : sets) {
    for (Baseline b : {Baseline::ci_fit, Baseline::cost231, Baseline::fspl}) {
      BaselinePrediction p = baseline_predict(b, *data, ci, grid.rx_height);
      for (const auto& [w, n] : p.warnings) {
        warnings_text += set_name + "," + to_string(b) + "," + to_string(w) + "," + std::to_string(n) + "\n";
      }
      results.push_back({set_name, to_string(b), true,
                         evaluate_stratified(targets(*data), p.pl_db, los_flags(*data)), std::move(p.pl_db)});
    }
  }
  write_file_atomic(out_dir / "baselines" / "cost231_warnings.csv", "set,baseline,warning,samples\n" + warnings_text);

  for (const ModelSpec& spec : cfg.models) {
    const std::string name = to_string(spec.type);
    std::optional<Regressor> model;
    {
      const Stage s(log, "train " + name);
      model.emplace(train_model(spec, train));
    }
    save_model(*model, out_dir / "models" / (name + ".json"));
    if (spec.type == ModelType::mlp) {
      std::string csv = "epoch,train_mse,validation_mse\n";
      for (std::size_t e = 0; e < model->history.train_mse.size(); ++e) {
        csv += std::to_string(e + 1) + "," + format_double(model->history.train_mse[e]) + "," +
               (e < model->history.validation_mse.size() ? format_double(model->history.validation_mse[e]) : "") + "\n";
      }
      write_file_atomic(out_dir / "reports" / "mlp_history.csv", csv);
    }
    const Stage s(log, "evaluate " + name);
    for (const auto& [set_name, data] : sets) {
      std::vector<double> pred = model->predict(*data);
      results.push_back({set_name, name, false, evaluate_stratified(targets(*data), pred, los_flags(*data)),
                         std::move(pred)});
    }
  }

  {
    const auto dtr = std::find_if(cfg.models.begin(), cfg.models.end(),
                                  [](const ModelSpec& m) { return m.type == ModelType::dtr; });
    if (dtr != cfg.models.end()) {
      const Stage s(log, "dtr cross-validation");
      const CvResult cv = cross_validate(*dtr, train, cfg.split.k, cfg.split.seed);
      std::string csv = "fold,count,rmse_db,mape_pct,msle,rho\n";
      for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const MetricRow& r = cv.folds[f];
        csv += std::to_string(f + 1) + "," + std::to_string(r.count) + "," + format_double(r.rmse_db) + "," +
               format_double(r.mape_pct) + "," + format_double(r.msle) + "," + format_optional(r.rho) + "\n";
      }
      const MetricRow& m = cv.mean;
      csv += "mean," + std::to_string(m.count) + "," + format_double(m.rmse_db) + "," + format_double(m.mape_pct) +
             "," + format_double(m.msle) + "," + format_optional(m.rho) + "\n";
      write_file_atomic(out_dir / "reports" / "cv_dtr.csv", csv);
    }
  }

  // Comparative table.
  {
    std::string csv = "set,model,stratum,count,rmse_db,mape_pct,msle,rho\n";
    std::string text = "MSLE uses the natural logarithm. Baselines: ci_fit (fitted on the training split), "
                       "cost231 (suburban Hata), fspl.\n"
                       "The MLP consumes min-max normalized features; trees use raw features.\n"
                       "Reflections: up to " + std::to_string(cfg.sim.max_reflections) + " in total, at most " +
                       std::to_string(cfg.sim.max_wall_reflections) + " on walls.\n\n";
    for (const Evaluated& e : results) {
      const auto& r = e.report;
      if (r.los) csv += row_csv_line(e.set, e.model, "LoS", *r.los);
      if (r.nlos) csv += row_csv_line(e.set, e.model, "NLoS", *r.nlos);
      if (r.total) csv += row_csv_line(e.set, e.model, "Total", *r.total);
      text += report_table(r, "[" + e.set + "] " + e.model + (e.baseline ? " (baseline)" : "")) + "\n";
      write_file_atomic(out_dir / "reports" / e.set / (e.model + ".csv"), report_csv(r));
    }
    write_file_atomic(out_dir / "reports" / "comparison.csv", csv);
    write_file_atomic(out_dir / "reports" / "comparison.txt", text);
  }

  // Per-site RMSE bars: test-split rows of each training site, all rows of a held-out site.
  {
    std::string csv = "model,site,role,count,rmse_db\n";
    for (const Evaluated& e : results) {
      if (e.set == "test") {
        for (const TransmitterSite& site : cfg.sites) {
          if (is_holdout(site.name)) continue;
          std::vector<double> y, p;
          for (std::size_t i = 0; i < test.size(); ++i) {
            if (test.samples[i].site == site.name) {
              y.push_back(test.samples[i].pl_db);
              p.push_back(e.pred[i]);
            }
          }
          if (y.empty()) continue;
          csv += e.model + "," + site.name + ",train," + std::to_string(y.size()) + "," + format_double(rmse(y, p)) + "\n";
        }
      } else if (e.report.total) {
        csv += e.model + "," + e.set.substr(5) + ",holdout," + std::to_string(e.report.total->count) + "," +
               format_double(e.report.total->rmse_db) + "\n";
      }
    }
    write_file_atomic(out_dir / "figures" / "site_rmse.csv", csv);
  }

  // PL versus distance curves.
  for (const auto& [set_name, data] : sets) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (const Evaluated& e : results) {
      if (e.set == set_name) series.emplace_back(e.model, e.pred);
    }
    write_file_atomic(out_dir / "figures" / ("pl_vs_distance_" + set_name + ".csv"),
                      pl_curve_csv(*data, cfg.curve_bin_m, series));
  }

  // Gates.
  ReproduceResult result;
  auto find = [&](const std::string& set, const std::string& model) -> const Evaluated* {
    for (const Evaluated& e : results) {
      if (e.set == set && e.model == model) return &e;
    }
    return nullptr;
  };
  auto total_rmse = [&](const std::string& set, const std::string& model) -> std::optional<double> {
    const Evaluated* e = find(set, model);
    if (!e || !e->report.total) return std::nullopt;
    return e->report.total->rmse_db;
  };
  auto gate = [&](std::string name, bool pass, std::string detail) {
    result.gates.push_back({std::move(name), pass, std::move(detail)});
  };
  constexpr double kAcceptableRmse = 7.0;
  const auto ci_test = total_rmse("test", "ci_fit");
  const auto cost_test = total_rmse("test", "cost231");
  for (const char* m : {"dtr", "rfr"}) {
    const auto r = total_rmse("test", m);
    const std::string name = m;
    if (!r) {
      gate(name + "_test_total_rmse_le_7db", false, "model not trained");
      gate(name + "_test_below_baselines", false, "model not trained");
      gate(name + "_test_los_le_nlos", false, "model not trained");
      continue;
    }
    gate(name + "_test_total_rmse_le_7db", *r <= kAcceptableRmse, "rmse " + fixed3(*r) + " dB");
    gate(name + "_test_below_baselines", *r < *ci_test && *r < *cost_test,
         "rmse " + fixed3(*r) + " vs ci_fit " + fixed3(*ci_test) + ", cost231 " + fixed3(*cost_test));
    const Evaluated* e = find("test", m);
    if (e->report.los && e->report.nlos) {
      gate(name + "_test_los_le_nlos", e->report.los->rmse_db <= e->report.nlos->rmse_db,
           "LoS " + fixed3(e->report.los->rmse_db) + " vs NLoS " + fixed3(e->report.nlos->rmse_db));
    } else {
      gate(name + "_test_los_le_nlos", false, "a stratum is empty");
    }
  }
  for (const auto& [set_name, data] : sets) {
    if (set_name == "test") continue;
    std::string best;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (const ModelSpec& m : cfg.models) {
      const auto r = total_rmse(set_name, to_string(m.type));
      if (r && *r < best_rmse) {
        best_rmse = *r;
        best = to_string(m.type);
      }
    }
    gate(set_name + "_best_ml_rmse_le_7db", best_rmse <= kAcceptableRmse, best + " rmse " + fixed3(best_rmse) + " dB");
    bool below = true;
    std::string detail = best + " " + fixed3(best_rmse);
    for (Baseline b : {Baseline::ci_fit, Baseline::cost231, Baseline::fspl}) {
      const double r = *total_rmse(set_name, to_string(b));
      below = below && best_rmse < r;
      detail += ", " + to_string(b) + " " + fixed3(r);
    }
    gate(set_name + "_best_ml_below_baselines", below, detail);
  }
  gate("cost231_test_rmse_gt_15db", cost_test && *cost_test > 15.0, "rmse " + fixed3(cost_test.value_or(0.0)) + " dB");

  {
    json g = json::array();
    for (const GateResult& r : result.gates) g.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    write_file_atomic(out_dir / "gates.json", g.dump(2) + "\n");
  }

  {
    const Stage s(log, "manifest");
    json m;
    m["version"] = 1;
    m["config"] = json::parse(run_config_json(cfg));
    m["gates_passed"] = result.all_passed();
    m["files"] = json::array();
    for (const ManifestEntry& e : hash_tree(out_dir, "manifest.json")) {
      m["files"].push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
    }
    result.manifest_path = out_dir / "manifest.json";
    write_file_atomic(result.manifest_path, m.dump(2) + "\n");
  }
  return result;
}

}  // namespace plmodel
