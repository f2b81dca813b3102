#include "app.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "json.hpp"
#include "tastenet/config.hpp"
#include "tastenet/error.hpp"
#include "tastenet/estimation.hpp"
#include "tastenet/format.hpp"
#include "tastenet/hash.hpp"
#include "tastenet/indicators.hpp"
#include "tastenet/model.hpp"
#include "tastenet/simd/kernels.hpp"
#include "tastenet/synth.hpp"

namespace tastenet::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

struct Common {
  std::string isa = "auto";
  std::string output_root = "runs";
  std::string out_dir;
};

fs::path make_out_dir(const Common& common, const std::string& command, const json& identity) {
  fs::path dir = common.out_dir.empty()
                     ? fs::path(common.output_root) /
                           (command + "-" + sha256_hex(identity.dump()).substr(0, 12))
                     : fs::path(common.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    fail(ErrorKind::io, "cannot create output directory '" + dir.string() + "'");
  }
  return dir;
}

template <typename Doc>
void write_json(const Doc& doc, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

struct ConfigFile {
  json doc = json::object();
  fs::path base;
};

ConfigFile load_config(const std::string& path) {
  ConfigFile cfg;
  if (path.empty()) return cfg;
  cfg.doc = read_json_file(path);
  if (!cfg.doc.is_object()) fail(ErrorKind::config, "'" + path + "' must hold a JSON object");
  cfg.base = fs::path(path).parent_path();
  return cfg;
}

fs::path resolve(const fs::path& p, const fs::path& base, const std::string& data_dir) {
  if (p.is_absolute()) return p;
  if (!data_dir.empty()) return fs::path(data_dir) / p;
  return base / p;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& flag, const json& section,
                           const char* command) {
  if (flag) return *flag;
  if (section.is_object() && section.contains("seed")) return section.at("seed").get<std::uint64_t>();
  fail(ErrorKind::argument, std::string(command) + " needs a seed (--seed or config)");
}

// ---------------------------------------------------------------------------
// Data sections shared by train and grid

struct LoadedData {
  SchemaConfig config;
  Dataset train;
  Dataset dev;
  std::optional<Dataset> test;
  json hashes = json::object();
};

SchemaConfig data_config_from(const json& entry, const fs::path& base, const std::string& data_dir) {
  if (entry.is_string()) {
    return schema_config_from_json(read_json_file(resolve(entry.get<std::string>(), base, data_dir)));
  }
  return schema_config_from_json(entry);
}

LoadedData load_data(const json& section, const fs::path& base, const std::string& data_dir,
                     std::uint64_t root_seed) {
  if (!section.is_object()) fail(ErrorKind::config, "config needs a 'data' section");
  if (!section.contains("config")) fail(ErrorKind::config, "data: missing key 'config'");
  LoadedData out;
  out.config = data_config_from(section.at("config"), base, data_dir);
  auto path_of = [&](const char* key) {
    return resolve(section.at(key).get<std::string>(), base, data_dir);
  };
  if (section.contains("file")) {
    const fs::path file = path_of("file");
    out.hashes["file"] = sha256_file(file);
    const Dataset all = load_csv(file, out.config);
    const auto f = section.value("split", std::vector<double>{0.70, 0.15, 0.15});
    if (f.size() != 3) fail(ErrorKind::config, "data.split needs three fractions");
    const std::uint64_t split_seed = section.value("split_seed", root_seed);
    auto parts = split_dataset(all, {f[0], f[1], f[2]}, split_seed);
    out.train = std::move(parts.train);
    out.dev = std::move(parts.dev);
    out.test = std::move(parts.test);
    return out;
  }
  for (const char* key : {"train", "dev"}) {
    if (!section.contains(key)) fail(ErrorKind::config, std::string("data: missing key '") + key + "'");
  }
  out.hashes["train"] = sha256_file(path_of("train"));
  out.hashes["dev"] = sha256_file(path_of("dev"));
  out.train = load_csv(path_of("train"), out.config, nullptr, SplitTag::train);
  out.dev = load_csv(path_of("dev"), out.config, nullptr, SplitTag::dev);
  if (section.contains("test")) {
    out.hashes["test"] = sha256_file(path_of("test"));
    out.test = load_csv(path_of("test"), out.config, nullptr, SplitTag::test);
  }
  return out;
}

UtilitySpec utility_section(const json& doc, const FeatureSchema& schema) {
  if (doc.contains("preset")) {
    const auto name = doc.at("preset").get<std::string>();
    const std::size_t draws = doc.value("draws", std::size_t{200});
    if (name == "mnl_true") return synth::mnl_true_spec();
    if (name == "mnl_i") return synth::mnl_i_spec();
    if (name == "mnl_ii") return synth::mnl_ii_spec();
    if (name == "tastenet") return synth::tastenet_spec();
    if (name == "rcl_i") return synth::rcl_i_spec(draws);
    if (name == "rcl_ii") return synth::rcl_ii_spec(draws);
    fail(ErrorKind::config, "unknown utility preset '" + name + "'");
  }
  if (!doc.contains("utility")) fail(ErrorKind::config, "config needs 'utility' or 'preset'");
  return utility_from_json(doc.at("utility"), schema);
}

ModelSpec model_spec_section(const json& doc, const FeatureSchema& schema) {
  ModelSpec spec;
  spec.schema = schema;
  spec.utility = utility_section(doc, schema);
  if (doc.contains("network") && !doc.at("network").is_null()) {
    spec.mlp = mlp_spec_from_json(doc.at("network"));
  }
  // Surface binding problems as configuration errors before any training.
  try {
    make_model(spec.schema, spec.utility, spec.mlp ? &*spec.mlp : nullptr, 0);
    if (spec.mlp && spec.utility.network_outputs() == 0) {
      fail(ErrorKind::spec, "network given but the utility uses none of its outputs");
    }
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("utility does not fit the data schema: ") + e.what());
  }
  return spec;
}

ordered metrics_json(const ClassificationMetrics& m) {
  ordered doc;
  doc["observations"] = m.observations;
  doc["nll"] = m.nll;
  doc["acc"] = m.acc;
  doc["f1"] = m.f1;
  doc["clamped"] = m.clamped;
  return doc;
}

void write_history(const FittedModel& model, const fs::path& path) {
  std::vector<std::vector<double>> rows;
  for (const auto& h : model.history) {
    rows.push_back({static_cast<double>(h.epoch), h.train_nll, h.dev_nll});
  }
  write_table_csv({"epoch", "train_nll", "dev_nll"}, rows, path);
}

Dataset load_eval_data(const std::string& data, const std::string& data_config,
                       const FittedModel& model) {
  const SchemaConfig config = data_config.empty()
                                  ? roundtrip_config(model.schema)
                                  : schema_config_from_json(read_json_file(data_config));
  return load_csv(data, config);
}

// ---------------------------------------------------------------------------

void cmd_gen(const Common& common, const std::string& config_path,
             const std::optional<std::uint64_t>& seed, const std::optional<std::size_t>& n_train,
             const std::optional<std::size_t>& n_dev, const std::optional<std::size_t>& n_test,
             std::ostream& out) {
  const ConfigFile cfg = load_config(config_path);
  const json gen_doc = cfg.doc.value("generator", json::object());
  synth::GenConfig gen = gen_config_from_json(gen_doc);
  gen.seed = require_seed(seed, gen_doc, "gen");
  if (n_train) gen.n_train = *n_train;
  if (n_dev) gen.n_dev = *n_dev;
  if (n_test) gen.n_test = *n_test;
  const synth::TrueTasteParams truth = true_params_from_json(cfg.doc.value("truth", json()));
  gen.validate();

  const json identity{{"generator", gen_config_to_json(gen)}, {"truth", true_params_to_json(truth)}};
  const fs::path dir = make_out_dir(common, "gen", identity);
  const auto data = synth::generate_dataset(gen, truth);
  write_csv(data.train, dir / "train.csv");
  write_csv(data.dev, dir / "dev.csv");
  write_csv(data.test, dir / "test.csv");
  write_json(true_params_to_json(truth), dir / "truth.json");
  write_json(schema_config_to_json(roundtrip_config(data.train.schema())), dir / "data_config.json");
  save_model(synth::true_model(truth, gen.attribute_scale), dir / "true_model.json");

  ordered manifest;
  manifest["generator"] = gen_config_to_json(gen);
  manifest["truth"] = true_params_to_json(truth);
  ordered files;
  for (const char* name :
       {"train.csv", "dev.csv", "test.csv", "truth.json", "data_config.json", "true_model.json"}) {
    files[name] = sha256_file(dir / name);
  }
  manifest["files"] = files;
  manifest["rows"] = {{"train", data.train.size()}, {"dev", data.dev.size()}, {"test", data.test.size()}};
  write_json(manifest, dir / "manifest.json");
  ordered summary;
  summary["out_dir"] = dir.string();
  summary["rows"] = manifest["rows"];
  out << summary.dump() << '\n';
}

void cmd_train(const Common& common, const std::string& config_path,
               const std::optional<std::uint64_t>& seed, const std::string& data_dir,
               std::ostream& out) {
  const ConfigFile cfg = load_config(config_path);
  const json train_doc = cfg.doc.value("training", json::object());
  TrainConfig tc = train_config_from_json(train_doc);
  tc.seed = require_seed(seed, train_doc, "train");
  tc.validate();
  LoadedData data = load_data(cfg.doc.value("data", json()), cfg.base, data_dir, tc.seed);
  const ModelSpec spec = model_spec_section(cfg.doc, data.train.schema());

  json identity{{"config", cfg.doc}, {"training", train_config_to_json(tc)}, {"inputs", data.hashes}};
  const fs::path dir = make_out_dir(common, "train", identity);

  FittedModel model;
  std::optional<double> sigma;
  if (spec.utility.random) {
    auto fit = estimate_rcl(spec.schema, spec.utility, data.train, data.dev, tc);
    sigma = fit.sigma;
    model = std::move(fit.model);
  } else if (spec.mlp) {
    model = train(spec, data.train, data.dev, tc);
  } else {
    model = estimate_mnl(spec.schema, spec.utility, data.train, data.dev, tc);
  }
  model.metadata["training"] = train_config_to_json(tc);
  save_model(model, dir / "model.json");
  write_history(model, dir / "history.csv");

  ordered coefs;
  coefs["kind"] = std::string(model_kind_name(model.kind));
  coefs["coefficients"] = coefficients_json(model);
  if (sigma) coefs["sigma"] = *sigma;
  write_json(coefs, dir / "coefficients.json");

  ordered metrics;
  metrics["train"] = metrics_json(classification_metrics(model, data.train));
  metrics["dev"] = metrics_json(classification_metrics(model, data.dev));
  if (data.test) metrics["test"] = metrics_json(classification_metrics(model, *data.test));
  metrics["best_epoch"] = model.best_epoch;
  metrics["f1_definition"] = "macro one-vs-rest";
  write_json(metrics, dir / "metrics.json");

  ordered summary;
  summary["out_dir"] = dir.string();
  summary["model"] = (dir / "model.json").string();
  summary["metrics"] = metrics;
  if (sigma) summary["sigma"] = *sigma;
  out << summary.dump() << '\n';
}

void cmd_eval(const Common& common, const std::string& model_path, const std::string& data_path,
              const std::string& data_config, std::ostream& out) {
  const FittedModel model = load_model(model_path);
  const Dataset data = load_eval_data(data_path, data_config, model);
  const auto m = classification_metrics(model, data);
  ordered doc;
  doc["model_sha256"] = sha256_file(model_path);
  doc["data_sha256"] = sha256_file(data_path);
  doc["metrics"] = metrics_json(m);
  doc["f1_definition"] = "macro one-vs-rest";
  const fs::path dir = make_out_dir(common, "eval", json(doc));
  write_json(doc, dir / "metrics.json");
  out << doc.dump() << '\n';
}

IndicatorRequest request_from_json(const json& doc, const FeatureSchema& schema) {
  IndicatorRequest req;
  req.tastes = doc.value("tastes", true);
  req.vot = doc.value("vot", false);
  req.time_attribute = doc.value("time_attribute", std::string("time"));
  req.cost_attribute = doc.value("cost_attribute", std::string("cost"));
  for (const auto& e : doc.value("elasticities", json::array())) {
    const auto alt_name = e.at("alternative").get<std::string>();
    const auto alt = schema.alternative_index(alt_name);
    if (!alt) fail(ErrorKind::config, "unknown alternative '" + alt_name + "'");
    const auto attr_name = e.at("attribute").get<std::string>();
    const auto attr = schema.attribute_index(*alt, attr_name);
    if (!attr) fail(ErrorKind::config, "unknown attribute '" + attr_name + "'");
    req.elasticities.push_back({*alt, *attr, e.value("group", std::string())});
  }
  return req;
}

ordered summary_json(const Summary& s) {
  ordered doc;
  doc["mean"] = s.mean;
  doc["p05"] = s.p05;
  doc["p25"] = s.p25;
  doc["p50"] = s.p50;
  doc["p75"] = s.p75;
  doc["p95"] = s.p95;
  return doc;
}

ordered error_json(const ErrorMetrics& m) {
  ordered doc;
  doc["rmse"] = m.rmse;
  doc["mae"] = m.mae;
  doc["mape_percent"] = m.mape;
  doc["mape_excluded"] = m.mape_excluded;
  return doc;
}

void cmd_indicators(const Common& common, const std::string& model_path,
                    const std::string& data_path, const std::string& data_config,
                    const std::string& request_path, bool vot_flag, bool compare_truth,
                    std::ostream& out) {
  const FittedModel model = load_model(model_path);
  const Dataset data = load_eval_data(data_path, data_config, model);
  const json req_doc = request_path.empty() ? json::object() : read_json_file(request_path);
  IndicatorRequest req = request_from_json(req_doc, model.schema);
  if (vot_flag) req.vot = true;
  compare_truth = compare_truth || req_doc.value("compare_truth", false);

  ordered sidecar;
  sidecar["model_sha256"] = sha256_file(model_path);
  sidecar["data_sha256"] = sha256_file(data_path);
  sidecar["request"] = req_doc;
  sidecar["request"]["vot"] = req.vot;
  sidecar["request"]["compare_truth"] = compare_truth;
  const fs::path dir = make_out_dir(common, "indicators", json(sidecar));

  const IndicatorReport report = indicator_report(model, data, req);
  write_table_csv(report.columns, report.rows, dir / "indicators.csv");
  ordered summaries;
  for (const auto& [name, s] : report.summaries) summaries[name] = summary_json(s);
  sidecar["summaries"] = summaries;
  ordered aggregates;
  for (const auto& [name, agg] : report.aggregates) {
    ordered entry;
    ordered groups = ordered::array();
    for (const auto& g : agg.groups) {
      groups.push_back({{"group", g.group}, {"count", g.count}, {"value", g.value}});
    }
    entry["groups"] = groups;
    entry["warnings"] = agg.warnings;
    aggregates[name] = entry;
  }
  sidecar["aggregate_elasticities"] = aggregates;
  sidecar["numeric_elasticities"] = report.numeric_elasticities;

  if (compare_truth) {
    if (!(model.schema.characteristic_names == synth::synthetic_schema().characteristic_names)) {
      fail(ErrorKind::indicator, "truth comparison needs the synthetic schema");
    }
    const auto truth = true_params_from_json(req_doc.value("truth", json()));
    const auto alt = model.schema.alternative_index("0");
    std::vector<double> est, tru;
    for (const auto& obs : data.observations()) {
      est.push_back(value_of_time(model, obs)[alt.value_or(0)].value_or(0.0));
      tru.push_back(-synth::true_taste(synth::characteristics_of(obs), truth) * 60.0);
    }
    sidecar["vot_error_vs_truth"] = error_json(error_metrics(est, tru));
  }

  if (req_doc.contains("what_if")) {
    const auto& w = req_doc.at("what_if");
    const Observation base = observation_from_json(w.value("observation", json::object()), model.schema);
    const auto alt = model.schema.alternative_index(w.at("alternative").get<std::string>());
    if (!alt) fail(ErrorKind::config, "what_if: unknown alternative");
    const auto attr = model.schema.attribute_index(*alt, w.at("attribute").get<std::string>());
    if (!attr) fail(ErrorKind::config, "what_if: unknown attribute");
    std::optional<std::size_t> target;
    if (w.contains("target")) {
      target = model.schema.alternative_index(w.at("target").get<std::string>());
      if (!target) fail(ErrorKind::config, "what_if: unknown target alternative");
    }
    const auto curve = what_if_curve(model, base, *alt, *attr, w.at("from").get<double>(),
                                     w.at("to").get<double>(), w.value("steps", std::size_t{100}),
                                     target);
    std::vector<std::vector<double>> rows;
    for (const auto& p : curve) rows.push_back({p.x, p.probability, p.elasticity});
    write_table_csv({"x", "probability", "elasticity"}, rows, dir / "what_if.csv");
  }
  write_json(sidecar, dir / "indicators.json");
  ordered summary;
  summary["out_dir"] = dir.string();
  summary["rows"] = report.rows.size();
  if (sidecar.contains("vot_error_vs_truth")) summary["vot_error_vs_truth"] = sidecar["vot_error_vs_truth"];
  out << summary.dump() << '\n';
}

void cmd_grid(const Common& common, const std::string& config_path,
              const std::optional<std::uint64_t>& seed, const std::string& data_dir,
              std::size_t workers, std::ostream& out) {
  const ConfigFile cfg = load_config(config_path);
  const json train_doc = cfg.doc.value("training", json::object());
  TrainConfig tc = train_config_from_json(train_doc);
  tc.seed = require_seed(seed, train_doc, "grid");
  tc.validate();
  if (!cfg.doc.contains("search")) fail(ErrorKind::config, "grid config needs a 'search' section");
  const SearchSpace space = search_space_from_json(cfg.doc.at("search"));
  LoadedData data = load_data(cfg.doc.value("data", json()), cfg.base, data_dir, tc.seed);
  const ModelSpec spec = model_spec_section(cfg.doc, data.train.schema());

  json identity{{"config", cfg.doc}, {"training", train_config_to_json(tc)}, {"inputs", data.hashes}};
  const fs::path dir = make_out_dir(common, "grid", identity);
  const GridResult result = grid_search(spec, space, data.train, data.dev, tc, workers);
  write_grid_csv(result, dir / "grid.csv");
  ordered summary;
  summary["out_dir"] = dir.string();
  summary["runs"] = result.rows.size();
  summary["failed"] = result.rows.size() - result.ranking.size();
  if (result.best) {
    save_model(*result.best, dir / "best_model.json");
    const auto& row = result.rows[result.ranking.front()];
    summary["best"] = {{"config", row.config},
                       {"restart", row.restart},
                       {"hidden_sizes", row.hidden_sizes},
                       {"activation", std::string(activation_name(row.activation))},
                       {"transform", std::string(transform_name(row.transform))},
                       {"reg_norm", row.reg_norm},
                       {"reg_strength", row.reg_strength},
                       {"dev_nll", row.dev_nll}};
  }
  write_json(summary, dir / "summary.json");
  out << summary.dump() << '\n';
}

ProbeGrid probe_grid_from_json(const json& doc) {
  ProbeGrid grid;
  try {
    for (const auto& a : doc.value("axes", json::array())) {
      ProbeAxis axis;
      axis.characteristic = a.at("characteristic").get<std::string>();
      if (a.contains("values")) {
        axis.values = a.at("values").get<std::vector<double>>();
      } else {
        const double from = a.at("from").get<double>();
        const double to = a.at("to").get<double>();
        const auto steps = a.value("steps", std::size_t{11});
        for (std::size_t s = 0; s < steps; ++s) {
          axis.values.push_back(steps == 1 ? from
                                           : from + (to - from) * static_cast<double>(s) /
                                                        static_cast<double>(steps - 1));
        }
      }
      grid.axes.push_back(std::move(axis));
    }
    const json base = doc.value("base", json::object());
    for (const auto& [name, value] : base.items()) {
      grid.base.emplace_back(name, value.get<double>());
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("malformed probe grid: ") + e.what());
  }
  return grid;
}

void cmd_probe(const Common& common, const std::string& model_path, const std::string& grid_path,
               std::ostream& out) {
  const FittedModel model = load_model(model_path);
  const json grid_doc = grid_path.empty() ? json::object() : read_json_file(grid_path);
  const ProbeGrid grid = probe_grid_from_json(grid_doc);
  ordered sidecar;
  sidecar["model_sha256"] = sha256_file(model_path);
  sidecar["grid"] = grid_doc;
  const ProbeResult result = activation_probe(model, grid);
  const fs::path dir = make_out_dir(common, "probe", json(sidecar));
  write_table_csv(result.columns, result.rows, dir / "probe.csv");
  sidecar["points"] = result.rows.size();
  write_json(sidecar, dir / "probe.json");
  ordered summary;
  summary["out_dir"] = dir.string();
  summary["points"] = result.rows.size();
  out << summary.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TasteNet-MNL: neural taste embedding in logit choice models"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--isa", common.isa, "Kernel variant: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  app.add_option("--output-root", common.output_root, "Parent of hash-named output directories");

  std::string config, data_dir, model_path, data_path, data_config, request, grid_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_train, n_dev, n_test;
  std::size_t workers = 1;
  bool vot = false;
  bool compare_truth = false;

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out-dir", common.out_dir, "Write here instead of a hash-named directory");
  };

  auto* gen = app.add_subcommand("gen", "Generate the synthetic train/dev/test data");
  gen->add_option("--config", config, "Generator config (JSON)");
  gen->add_option("--seed", seed, "Root seed");
  gen->add_option("--n-train", n_train);
  gen->add_option("--n-dev", n_dev);
  gen->add_option("--n-test", n_test);
  add_out(gen);

  auto* tr = app.add_subcommand("train", "Estimate a model");
  tr->add_option("--config", config, "Run config (JSON)")->required();
  tr->add_option("--seed", seed, "Root seed");
  tr->add_option("--data-dir", data_dir, "Resolve data paths against this directory");
  add_out(tr);

  auto* ev = app.add_subcommand("eval", "NLL, accuracy and F1 of a model on a dataset");
  ev->add_option("--model", model_path)->required();
  ev->add_option("--data", data_path)->required();
  ev->add_option("--data-config", data_config, "CSV schema config (default: generated layout)");
  add_out(ev);

  auto* ind = app.add_subcommand("indicators", "Tastes, values of time and elasticities");
  ind->add_option("--model", model_path)->required();
  ind->add_option("--data", data_path)->required();
  ind->add_option("--data-config", data_config);
  ind->add_option("--request", request, "Indicator request (JSON)");
  ind->add_flag("--vot", vot, "Include values of time");
  ind->add_flag("--compare-truth", compare_truth, "VOT errors against the synthetic truth");
  add_out(ind);

  auto* grid = app.add_subcommand("grid", "Hyperparameter grid search");
  grid->add_option("--config", config)->required();
  grid->add_option("--seed", seed);
  grid->add_option("--data-dir", data_dir);
  grid->add_option("--workers", workers)->check(CLI::PositiveNumber);
  add_out(grid);

  auto* probe = app.add_subcommand("probe", "Hidden-unit activations over a characteristic grid");
  probe->add_option("--model", model_path)->required();
  probe->add_option("--grid", grid_path, "Probe grid (JSON)");
  add_out(probe);

  std::string command = "cli";
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    command = app.get_subcommands().front()->get_name();
    simd::set_isa(common.isa == "auto" ? simd::best_isa() : simd::parse_isa(common.isa));

    if (command == "gen") {
      cmd_gen(common, config, seed, n_train, n_dev, n_test, out);
    } else if (command == "train") {
      cmd_train(common, config, seed, data_dir, out);
    } else if (command == "eval") {
      cmd_eval(common, model_path, data_path, data_config, out);
    } else if (command == "indicators") {
      cmd_indicators(common, model_path, data_path, data_config, request, vot, compare_truth, out);
    } else if (command == "grid") {
      cmd_grid(common, config, seed, data_dir, workers, out);
    } else if (command == "probe") {
      cmd_probe(common, model_path, grid_path, out);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << json{{"error", {{"command", command}, {"kind", "argument"}, {"message", e.what()}}}}.dump()
        << '\n';
    return 2;
  } catch (const Error& e) {
    err << json{{"error",
                 {{"command", command},
                  {"kind", std::string(error_kind_name(e.kind()))},
                  {"message", e.what()}}}}
               .dump()
        << '\n';
    return e.kind() == ErrorKind::argument || e.kind() == ErrorKind::config ? 2 : 1;
  } catch (const std::exception& e) {
    err << json{{"error", {{"command", command}, {"kind", "internal"}, {"message", e.what()}}}}.dump()
        << '\n';
    return 1;
  }
}

}  // namespace tastenet::cli
