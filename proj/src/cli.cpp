// SPDX-License-Identifier: Apache-2.0
#include "slr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "json_io.hpp"
#include "slr/error.hpp"
#include "slr/heatmap.hpp"
#include "slr/keypoint_data.hpp"

namespace slr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string experiment_config_json(const ExperimentConfig& c) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"manifest", c.manifest},
            {"mlp_hidden", c.mlp_hidden},
            {"gru_hidden", c.gru_hidden},
            {"train", c.train},
            {"init_seed", opt(c.init_seed)},
            {"init_from", opt(c.init_from)},
            {"transfer_scope", to_string(c.transfer_scope)},
            {"filter_threshold", opt(c.filter_threshold)},
            {"metric", c.metric ? json(to_string(*c.metric)) : json(nullptr)}};
  return j.dump(2) + "\n";
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorKind::schema, "experiment config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      static const std::set<std::string> known{"manifest", "mlp_hidden", "gru_hidden", "train",
                                               "init_seed", "init_from", "transfer_scope",
                                               "filter_threshold", "metric"};
      if (!known.contains(it.key()))
        throw Error(ErrorKind::schema, "unknown experiment config key '" + it.key() + "'");
    }
    auto present = [&](const char* k) { return j.contains(k) && !j.at(k).is_null(); };
    if (present("manifest")) c.manifest = j.at("manifest").get<std::string>();
    if (present("mlp_hidden")) c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
    if (present("gru_hidden")) c.gru_hidden = j.at("gru_hidden").get<std::size_t>();
    if (present("train")) c.train = j.at("train").get<TrainConfig>();
    if (present("init_seed")) c.init_seed = j.at("init_seed").get<std::uint64_t>();
    if (present("init_from")) c.init_from = j.at("init_from").get<std::string>();
    if (present("transfer_scope"))
      c.transfer_scope = parse_transfer_scope(j.at("transfer_scope").get<std::string>());
    if (present("filter_threshold")) c.filter_threshold = j.at("filter_threshold").get<double>();
    if (present("metric")) c.metric = parse_selection_metric(j.at("metric").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("bad experiment config: ") + e.what());
  }
  validate(c.train);
  if (c.mlp_hidden == 0 || c.gru_hidden == 0)
    throw Error(ErrorKind::invalid_argument, "mlp_hidden and gru_hidden must be >= 1");
  return c;
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

void require_distinct(const fs::path& input, const fs::path& output) {
  std::error_code ec;
  if (fs::exists(output) && fs::equivalent(input, output, ec))
    throw Error(ErrorKind::invalid_argument, "--out must not overwrite the input " + input.string());
}

struct LoadedSet {
  std::vector<KeypointSequence> train;
  std::vector<KeypointSequence> test;
  std::vector<KeypointSequence> unassigned;
  Manifest manifest;
};

LoadedSet load_manifest_data(const fs::path& manifest_path, std::optional<double> threshold) {
  LoadedSet s;
  s.manifest = read_manifest_csv(manifest_path);
  const fs::path base = manifest_path.parent_path();
  for (const auto& row : s.manifest.rows) {
    KeypointSequence seq = read_kpseq(base / row.path);
    if (seq.label != row.label)
      throw Error(ErrorKind::label, row.path + ": file label '" + seq.label +
                                        "' differs from manifest label '" + row.label + "'");
    if (threshold) seq = filter_frames(seq, *threshold);
    switch (row.split) {
      case Split::train: s.train.push_back(std::move(seq)); break;
      case Split::test: s.test.push_back(std::move(seq)); break;
      case Split::unassigned: s.unassigned.push_back(std::move(seq)); break;
    }
  }
  return s;
}

/// Training rows: the train split, or everything when nothing is assigned.
std::vector<KeypointSequence>& training_rows(LoadedSet& s) {
  if (!s.train.empty()) return s.train;
  if (!s.test.empty()) throw Error(ErrorKind::invalid_argument, "manifest has test rows but no train rows");
  return s.unassigned;
}

LabelMap labels_of(const std::vector<KeypointSequence>& seqs) {
  std::set<std::string> names;
  for (const auto& s : seqs) names.insert(s.label);
  return LabelMap({names.begin(), names.end()});
}

json metrics_json(const EvalResult& ev, std::optional<std::size_t> best_epoch,
                  std::optional<std::size_t> stopped_epoch) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return {{"accuracy", ev.accuracy},
          {"macro_f1", ev.macro_f1},
          {"confusion", ev.confusion.rows()},
          {"best_epoch", opt(best_epoch)},
          {"stopped_epoch", opt(stopped_epoch)}};
}

std::vector<GridPair> parse_pairs(const std::string& text) {
  std::vector<GridPair> pairs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    GridPair p;
    try {
      if (x == std::string::npos) throw std::invalid_argument(item);
      std::size_t used = 0;
      p.mlp_hidden = std::stoul(item.substr(0, x), &used);
      if (used != x) throw std::invalid_argument(item);
      const std::string rest = item.substr(x + 1);
      p.gru_hidden = std::stoul(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_argument, "bad grid pair '" + item + "', expected MLPxGRU");
    }
    pairs.push_back(p);
  }
  return pairs;
}

std::map<std::string, Point2> ring_anchors(std::size_t n) {
  std::map<std::string, Point2> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * static_cast<double>(i) / static_cast<double>(n);
    char name[32];
    std::snprintf(name, sizeof name, "concept_%02zu", i);
    out[name] = {0.5 + 0.12 * std::cos(a), 0.38 + 0.12 * std::sin(a)};
  }
  return out;
}

std::pair<std::string, Point2> parse_anchor(const std::string& text) {
  const auto colon = text.rfind(':');
  const auto comma = text.find(',', colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || colon == 0 || comma == std::string::npos)
    throw Error(ErrorKind::invalid_argument, "bad --concept '" + text + "', expected NAME:X,Y");
  try {
    return {text.substr(0, colon),
            {std::stod(text.substr(colon + 1, comma - colon - 1)), std::stod(text.substr(comma + 1))}};
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument, "bad --concept '" + text + "', expected NAME:X,Y");
  }
}

struct Options {
  // synth
  SynthSpec synth;
  std::vector<std::string> concepts;
  std::string class_concepts;
  // shared paths
  std::string in, out, manifest, model, config;
  std::string history_out, summary_out, metrics_out;
  // filter / split
  double threshold = 0.6;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  // train / grid
  ExperimentConfig exp;
  std::uint64_t init_seed = 0;
  std::string monitor = "train_loss";
  bool no_shuffle = false;
  std::size_t max_epochs = 0;
  std::string scope = "mlp";
  double filter_threshold = 0.6;
  std::string init_from;
  std::string pairs;
  std::string metric = "auto";
  int jobs = 1;
  // eval
  std::string split = "test";
  std::size_t batch = 32;
  // transfer-init
  std::string source;
  std::size_t mlp = 0, gru = 0;
  // report
  std::string baseline, tl, report_metric = "accuracy";
  // heatmap
  std::string concept_name, selector = "wrists", out_csv, out_pgm;
  std::size_t grid = 64;
  bool raw = false;
  std::string grid_a, grid_b;
};

void add_train_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--mlp", o.exp.mlp_hidden, "MLP hidden units")->capture_default_str();
  cmd->add_option("--gru", o.exp.gru_hidden, "GRU hidden size")->capture_default_str();
  cmd->add_option("--lr", o.exp.train.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch", o.exp.train.batch_size, "Batch size")->capture_default_str();
  cmd->add_option("--patience", o.exp.train.patience_epochs,
                  "Stop after this many epochs without a lower loss")
      ->capture_default_str();
  cmd->add_option("--max-epochs", o.max_epochs, "Hard epoch cap (0 = uncapped)")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Shuffling seed")->capture_default_str();
  cmd->add_option("--init-seed", o.init_seed, "Weight initialisation seed (default: --seed)");
  cmd->add_flag("--no-shuffle", o.no_shuffle, "Keep sample order fixed");
  cmd->add_option("--monitor", o.monitor, "Early-stopping signal")
      ->check(CLI::IsMember({"train_loss", "eval_loss"}))
      ->capture_default_str();
  cmd->add_option("--filter-threshold", o.filter_threshold,
                  "Drop frames where neither wrist has y below this value");
}

ExperimentConfig resolve_experiment(CLI::App* cmd, Options& o) {
  ExperimentConfig c;
  if (!o.config.empty()) c = parse_experiment_config(read_text(o.config));
  auto given = [&](const char* flag) { return cmd->count(flag) > 0; };
  if (given("--manifest")) c.manifest = o.manifest;
  if (given("--mlp")) c.mlp_hidden = o.exp.mlp_hidden;
  if (given("--gru")) c.gru_hidden = o.exp.gru_hidden;
  if (given("--lr")) c.train.learning_rate = o.exp.train.learning_rate;
  if (given("--batch")) c.train.batch_size = o.exp.train.batch_size;
  if (given("--patience")) c.train.patience_epochs = o.exp.train.patience_epochs;
  if (given("--max-epochs")) c.train.max_epochs = o.max_epochs == 0 ? std::nullopt : std::optional(o.max_epochs);
  if (given("--seed")) c.train.seed = o.seed;
  if (given("--init-seed")) c.init_seed = o.init_seed;
  if (given("--no-shuffle")) c.train.shuffle = false;
  if (given("--monitor")) c.train.monitor = o.monitor == "eval_loss" ? Monitor::eval_loss : Monitor::train_loss;
  if (given("--filter-threshold")) c.filter_threshold = o.filter_threshold;
  if (cmd->get_option_no_throw("--init-from") && given("--init-from")) c.init_from = o.init_from;
  if (cmd->get_option_no_throw("--transfer-scope") && given("--transfer-scope"))
    c.transfer_scope = parse_transfer_scope(o.scope);
  if (cmd->get_option_no_throw("--metric") && given("--metric") && o.metric != "auto")
    c.metric = parse_selection_metric(o.metric);
  if (c.manifest.empty())
    throw Error(ErrorKind::invalid_argument, "--manifest is required (flag or config file)");
  if (!fs::exists(c.manifest)) throw Error(ErrorKind::io, "manifest not found: " + c.manifest);
  if (c.init_from && !fs::exists(*c.init_from))
    throw Error(ErrorKind::io, "checkpoint not found: " + *c.init_from);
  validate(c.train);
  return c;
}

int cmd_synth(Options& o, std::ostream& out) {
  SynthSpec spec = o.synth;
  if (o.concepts.empty()) {
    spec.concept_anchors = ring_anchors(spec.num_classes);
  } else {
    for (const auto& c : o.concepts) {
      auto [name, p] = parse_anchor(c);
      spec.concept_anchors[name] = p;
    }
  }
  if (!o.class_concepts.empty()) {
    std::stringstream ss(o.class_concepts);
    std::string item;
    while (std::getline(ss, item, ',')) spec.class_to_concept.push_back(item);
  } else {
    std::vector<std::string> names;
    if (o.concepts.empty()) {
      for (const auto& [n, _] : spec.concept_anchors) names.push_back(n);
    } else {
      for (const auto& c : o.concepts) names.push_back(parse_anchor(c).first);
    }
    for (std::size_t i = 0; i < spec.num_classes; ++i) spec.class_to_concept.push_back(names[i % names.size()]);
  }
  const SynthDataset data = synth_generate(spec);
  write_dataset(data, o.out);
  out << "wrote " << data.sequences.size() << " sequences and manifest.csv to " << o.out << "\n";
  return 0;
}

int cmd_filter(Options& o, std::ostream& out) {
  require_distinct(o.in, o.out);
  const KeypointSequence seq = read_kpseq(o.in);
  const KeypointSequence kept = filter_frames(seq, o.threshold);
  write_kpseq(kept, o.out);
  out << "kept " << kept.frames.size() << " of " << seq.frames.size() << " frames\n";
  return 0;
}

int cmd_split(Options& o, std::ostream& out) {
  require_distinct(o.manifest, o.out);
  const Manifest m = split_manifest(read_manifest_csv(o.manifest), o.train_fraction, o.seed);
  write_manifest_csv(m, o.out);
  std::size_t train = 0;
  for (const auto& r : m.rows) train += r.split == Split::train;
  out << "train " << train << " test " << m.rows.size() - train << "\n";
  return 0;
}

int cmd_train(CLI::App* cmd, Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve_experiment(cmd, o);
  LoadedSet data = load_manifest_data(c.manifest, c.filter_threshold);
  check_test_labels_in_train(data.manifest);
  auto& train_rows = training_rows(data);
  const LabelMap labels = labels_of(train_rows);
  const Dataset train_set = make_dataset(train_rows, labels);
  std::optional<Dataset> eval_set;
  if (!data.test.empty()) eval_set = make_dataset(data.test, labels);
  if (c.train.monitor == Monitor::eval_loss && !eval_set)
    throw Error(ErrorKind::invalid_argument, "--monitor eval_loss needs test rows in the manifest");

  const std::uint64_t init_seed = c.init_seed.value_or(c.train.seed);
  Dims dims{kFrameWidth, c.mlp_hidden, c.gru_hidden, labels.size()};
  Model model;
  Provenance prov;
  if (c.init_from) {
    const Checkpoint source = load_checkpoint(*c.init_from);
    const bool mlp_given = cmd->count("--mlp") > 0, gru_given = cmd->count("--gru") > 0;
    if (!mlp_given && o.config.empty()) dims.mlp_hidden = source.model.params.dims.mlp_hidden;
    if (!gru_given && o.config.empty()) dims.gru_hidden = source.model.params.dims.gru_hidden;
    model = init_from_source(source, dims, labels, c.transfer_scope, init_seed);
    prov.initialized_from = *c.init_from;
  } else {
    model = {init_params(dims, init_seed), labels};
  }

  const TrainResult r = train(model.params, train_set, c.train, eval_set ? &*eval_set : nullptr);

  prov.config = c.train;
  prov.dataset_id = train_rows.front().dataset_id;
  prov.best_epoch = r.best_loss_epoch;
  prov.stopped_epoch = r.stopped_epoch;
  prov.metrics["best_loss"] = r.best_loss;
  std::optional<EvalResult> final_eval;
  if (eval_set) {
    final_eval = evaluate(r.best_params, *eval_set, c.train.batch_size);
    prov.metrics["accuracy"] = final_eval->accuracy;
    prov.metrics["macro_f1"] = final_eval->macro_f1;
    if (r.best_accuracy) prov.metrics["best_accuracy"] = *r.best_accuracy;
    if (r.best_macro_f1) prov.metrics["best_macro_f1"] = *r.best_macro_f1;
  }
  save_checkpoint({{r.best_params, labels}, std::string(kLandmarkLayout), prov}, o.out);
  if (!o.history_out.empty()) write_text(o.history_out, history_csv(r));
  if (!o.summary_out.empty()) write_text(o.summary_out, summary_json(r));
  if (!o.metrics_out.empty()) {
    if (!final_eval)
      throw Error(ErrorKind::invalid_argument, "--metrics-out needs test rows in the manifest");
    json m = metrics_json(*final_eval, r.best_loss_epoch, r.stopped_epoch);
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    m["best_accuracy"] = opt(r.best_accuracy);
    m["best_accuracy_epoch"] = opt(r.best_accuracy_epoch);
    m["best_macro_f1"] = opt(r.best_macro_f1);
    m["best_macro_f1_epoch"] = opt(r.best_macro_f1_epoch);
    write_text(o.metrics_out, m.dump(2) + "\n");
  }
  out << "stopped at epoch " << r.stopped_epoch << " (" << to_string(r.stop_reason)
      << "), best loss " << r.best_loss << " at epoch " << r.best_loss_epoch << "\n";
  if (final_eval)
    out << "test accuracy " << final_eval->accuracy << " macro_f1 " << final_eval->macro_f1 << "\n";
  return 0;
}

int cmd_eval(CLI::App* cmd, Options& o, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.model);
  std::optional<double> threshold;
  if (cmd->count("--filter-threshold")) threshold = o.filter_threshold;
  LoadedSet data = load_manifest_data(o.manifest, threshold);
  std::vector<KeypointSequence> rows;
  if (o.split == "test") rows = std::move(data.test);
  else if (o.split == "train") rows = std::move(data.train);
  else if (o.split == "unassigned") rows = std::move(data.unassigned);
  else {
    for (auto* part : {&data.train, &data.test, &data.unassigned})
      rows.insert(rows.end(), part->begin(), part->end());
  }
  if (rows.empty()) throw Error(ErrorKind::invalid_argument, "no rows in split '" + o.split + "'");
  const Dataset ds = make_dataset(rows, ck.model.labels);
  const EvalResult ev = evaluate(ck.model.params, ds, o.batch);
  const json m = metrics_json(ev, ck.provenance.best_epoch, ck.provenance.stopped_epoch);
  write_text(o.out, m.dump(2) + "\n");
  out << "accuracy " << ev.accuracy << " macro_f1 " << ev.macro_f1 << "\n";
  return 0;
}

int cmd_grid(CLI::App* cmd, Options& o, std::ostream& out) {
  const ExperimentConfig c = resolve_experiment(cmd, o);
  LoadedSet data = load_manifest_data(c.manifest, c.filter_threshold);
  check_test_labels_in_train(data.manifest);
  if (data.train.empty() || data.test.empty())
    throw Error(ErrorKind::invalid_argument, "grid needs both train and test rows in the manifest");
  const LabelMap labels = labels_of(data.train);
  const Dataset train_set = make_dataset(data.train, labels);
  const Dataset eval_set = make_dataset(data.test, labels);

  GridSpec spec;
  if (!o.pairs.empty()) spec.pairs = parse_pairs(o.pairs);
  spec.metric = c.metric.value_or(default_selection_metric(train_set));
  spec.train = c.train;
  spec.init_seed = c.init_seed.value_or(c.train.seed);
  const GridResult r = run_grid(spec, train_set, eval_set, o.jobs);
  write_text(o.out, grid_csv(r));
  const GridRow& w = r.rows[r.winner];
  out << "winner " << w.pair.mlp_hidden << "x" << w.pair.gru_hidden << " " << to_string(r.metric)
      << " " << w.metric(r.metric) << " at epoch " << w.best_epoch(r.metric) << "\n";
  return 0;
}

int cmd_transfer_init(CLI::App* cmd, Options& o, std::ostream& out) {
  const Checkpoint source = load_checkpoint(o.source);
  const Manifest m = read_manifest_csv(o.manifest);
  Manifest train_rows;
  for (const auto& r : m.rows)
    if (r.split == Split::train) train_rows.rows.push_back(r);
  const LabelMap labels = LabelMap::from_manifest(train_rows.rows.empty() ? m : train_rows);
  Dims dims = source.model.params.dims;
  dims.num_classes = labels.size();
  if (cmd->count("--mlp")) dims.mlp_hidden = o.mlp;
  if (cmd->count("--gru")) dims.gru_hidden = o.gru;
  const Model model = init_from_source(source, dims, labels, parse_transfer_scope(o.scope), o.seed);
  Provenance prov;
  prov.initialized_from = o.source;
  save_checkpoint({model, source.landmark_layout, prov}, o.out);
  out << "initialised " << labels.size() << "-class model from " << o.source << " ("
      << to_string(parse_transfer_scope(o.scope)) << ")\n";
  return 0;
}

double metric_from_file(const std::string& path, const std::string& key) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number())
    throw Error(ErrorKind::schema, path + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}

int cmd_report(Options& o, std::ostream& out) {
  const double base = metric_from_file(o.baseline, o.report_metric);
  const double tl = metric_from_file(o.tl, o.report_metric);
  const double rel = relative_improvement(base, tl);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f%%", rel == 0.0 ? 0.0 : rel);
  out << buf << "\n";
  return 0;
}

int cmd_heatmap(Options& o, std::ostream& out) {
  if (o.out_csv.empty() && o.out_pgm.empty())
    throw Error(ErrorKind::invalid_argument, "heatmap needs --out-csv and/or --out-pgm");
  LoadedSet data = load_manifest_data(o.manifest, std::nullopt);
  std::vector<KeypointSequence> all;
  for (auto* part : {&data.train, &data.test, &data.unassigned})
    all.insert(all.end(), part->begin(), part->end());
  std::optional<std::string> tag;
  if (!o.concept_name.empty()) tag = o.concept_name;
  ActivityGrid g = accumulate(all, tag, o.grid, parse_landmark_selector(o.selector));
  if (!o.raw) g = normalize(g);
  if (!o.out_csv.empty()) write_text(o.out_csv, grid_csv(g));
  if (!o.out_pgm.empty()) write_text(o.out_pgm, grid_pgm(g));
  out << "accumulated " << g.count << " landmarks into a " << g.size << "x" << g.size << " grid\n";
  return 0;
}

int cmd_compare(Options& o, std::ostream& out) {
  const ActivityGrid a = normalize(parse_grid_csv(read_text(o.grid_a)));
  const ActivityGrid b = normalize(parse_grid_csv(read_text(o.grid_b)));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", concept_similarity(a, b));
  out << buf << "\n";
  if (!o.out.empty()) write_text(o.out, json{{"similarity", concept_similarity(a, b)}}.dump(2) + "\n");
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keypoint sign recognition toolkit: data, MLP-GRU training, transfer, analysis", "slr"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic keypoint dataset");
  synth->add_option("--classes", o.synth.num_classes, "Number of classes")->capture_default_str();
  synth->add_option("--samples-per-class", o.synth.samples_per_class, "Samples per class")
      ->capture_default_str();
  synth->add_option("--frames-min", o.synth.frames_min, "Shortest sign in frames")->capture_default_str();
  synth->add_option("--frames-max", o.synth.frames_max, "Longest sign in frames")->capture_default_str();
  synth->add_option("--jitter", o.synth.jitter_stddev, "Per-landmark Gaussian jitter stddev")
      ->capture_default_str();
  synth->add_option("--seed", o.synth.seed, "Generator seed")->capture_default_str();
  synth->add_option("--dataset-id", o.synth.dataset_id, "Dataset identifier")->capture_default_str();
  synth->add_option("--concept", o.concepts, "Concept anchor NAME:X,Y (repeatable)");
  synth->add_option("--class-concepts", o.class_concepts,
                    "Comma-separated concept per class (default: round robin)");
  synth->add_option("--rest-frames", o.synth.rest_frames, "Hands-down frames before and after")
      ->capture_default_str();
  synth->add_option("--fps", o.synth.fps, "Frame rate recorded in the files")->capture_default_str();
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* filter = app.add_subcommand("filter", "Drop frames where neither wrist is raised");
  filter->add_option("--in", o.in, "Input KPSEQ file")->required()->check(CLI::ExistingFile);
  filter->add_option("--threshold", o.threshold, "Keep frames with min wrist y below this")
      ->capture_default_str();
  filter->add_option("--out", o.out, "Output KPSEQ file")->required();

  auto* split = app.add_subcommand("split", "Stratified train/test assignment of a manifest");
  split->add_option("--manifest", o.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  split->add_option("--train-fraction", o.train_fraction, "Share of each class sent to train")
      ->capture_default_str();
  split->add_option("--seed", o.seed, "Shuffle seed")->capture_default_str();
  split->add_option("--out", o.out, "Output manifest CSV")->required();

  auto* train_cmd = app.add_subcommand("train", "Train an MLP-GRU classifier");
  train_cmd->add_option("--manifest", o.manifest, "Manifest CSV (train/test splits)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--config", o.config, "Experiment config JSON")->check(CLI::ExistingFile);
  add_train_flags(train_cmd, o);
  train_cmd->add_option("--init-from", o.init_from, "Source checkpoint for weight initialisation")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--transfer-scope", o.scope, "Tensors copied from --init-from")
      ->check(CLI::IsMember({"mlp", "mlp_and_gru"}))
      ->capture_default_str();
  train_cmd->add_option("--out", o.out, "Output checkpoint")->required();
  train_cmd->add_option("--history-out", o.history_out, "Per-epoch history CSV");
  train_cmd->add_option("--summary-out", o.summary_out, "Run summary JSON");
  train_cmd->add_option("--metrics-out", o.metrics_out, "Test-split metrics JSON");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
  eval->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", o.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", o.split, "Rows to evaluate")
      ->check(CLI::IsMember({"test", "train", "unassigned", "all"}))
      ->capture_default_str();
  eval->add_option("--batch", o.batch, "Batch size")->capture_default_str();
  eval->add_option("--filter-threshold", o.filter_threshold,
                   "Drop frames where neither wrist has y below this value");
  eval->add_option("--out", o.out, "Metrics JSON")->required();

  auto* grid = app.add_subcommand("grid", "Grid search over (MLP, GRU) size pairs");
  grid->add_option("--manifest", o.manifest, "Manifest CSV with train/test rows")
      ->check(CLI::ExistingFile);
  grid->add_option("--config", o.config, "Experiment config JSON")->check(CLI::ExistingFile);
  add_train_flags(grid, o);
  grid->add_option("--pairs", o.pairs,
                   "Comma-separated MLPxGRU pairs (default 256x512,512x1024,1024x2048,2000x3000,2048x4096)");
  grid->add_option("--metric", o.metric, "Selection metric")
      ->check(CLI::IsMember({"auto", "accuracy", "macro_f1"}))
      ->capture_default_str();
  grid->add_option("--jobs", o.jobs, "Pairs trained concurrently")->capture_default_str();
  grid->add_option("--out", o.out, "Grid report CSV")->required();

  auto* tinit = app.add_subcommand("transfer-init", "Build a target model from a source checkpoint");
  tinit->add_option("--source", o.source, "Source checkpoint")->required()->check(CLI::ExistingFile);
  tinit->add_option("--manifest", o.manifest, "Target manifest (class labels)")
      ->required()
      ->check(CLI::ExistingFile);
  tinit->add_option("--mlp", o.mlp, "Target MLP hidden units (default: source)");
  tinit->add_option("--gru", o.gru, "Target GRU hidden size (default: source)");
  tinit->add_option("--scope", o.scope, "Tensors copied from the source")
      ->check(CLI::IsMember({"mlp", "mlp_and_gru"}))
      ->capture_default_str();
  tinit->add_option("--seed", o.seed, "Seed for freshly initialised tensors")->capture_default_str();
  tinit->add_option("--out", o.out, "Output checkpoint")->required();

  auto* report = app.add_subcommand("report", "Relative improvement of a transfer run over a baseline");
  report->add_option("--baseline", o.baseline, "Baseline metrics JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--tl", o.tl, "Transfer metrics JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--metric", o.report_metric, "Field compared")
      ->check(CLI::IsMember({"accuracy", "macro_f1"}))
      ->capture_default_str();

  auto* heat = app.add_subcommand("heatmap", "Hand-activity grid for one concept");
  heat->add_option("--manifest", o.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  heat->add_option("--concept", o.concept_name, "Concept tag (default: all sequences)");
  heat->add_option("--grid", o.grid, "Cells per side")->capture_default_str();
  heat->add_option("--selector", o.selector, "Landmarks accumulated")
      ->check(CLI::IsMember({"wrists", "hands"}))
      ->capture_default_str();
  heat->add_flag("--raw", o.raw, "Write counts instead of a normalized grid");
  heat->add_option("--out-csv", o.out_csv, "Grid CSV output");
  heat->add_option("--out-pgm", o.out_pgm, "Grid PGM (P5) output");

  auto* compare = app.add_subcommand("compare-heatmaps", "Pearson similarity of two grid CSVs");
  compare->add_option("--a", o.grid_a, "First grid CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--b", o.grid_b, "Second grid CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", o.out, "Optional JSON output");

  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*filter) return cmd_filter(o, out);
    if (*split) return cmd_split(o, out);
    if (*train_cmd) return cmd_train(train_cmd, o, out);
    if (*eval) return cmd_eval(eval, o, out);
    if (*grid) return cmd_grid(grid, o, out);
    if (*tinit) return cmd_transfer_init(tinit, o, out);
    if (*report) return cmd_report(o, out);
    if (*heat) return cmd_heatmap(o, out);
    if (*compare) return cmd_compare(o, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace slr
