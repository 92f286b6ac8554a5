#include "setmlvis/cli.hpp"

#include <csignal>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "setmlvis/payloads.hpp"
#include "setmlvis/service.hpp"

namespace setmlvis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;
constexpr int kFailure = 1;

struct EvalFlags {
  double eval_iou = 0.5;
  double conf_min = 0.7;
  double conf_max = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--eval-iou", eval_iou, "Ground-truth IOU threshold")->capture_default_str();
    cmd->add_option("--conf-min", conf_min, "Lowest confidence kept")->capture_default_str();
    cmd->add_option("--conf-max", conf_max, "Highest confidence kept")->capture_default_str();
  }

  EvalParams params() const { return EvalParams{eval_iou, conf_min, conf_max}; }
};

struct Options {
  // build
  std::string folder;
  std::string object_class;
  std::string out;
  double set_iou = 0.3;
  // artifact consumers
  std::string artifact;
  EvalFlags eval;
  // serve
  std::string listen = "127.0.0.1:8080";
  std::string image_root;
  // query
  std::vector<std::string> include, exclude, neutral;
  std::string status = "all";
  // metrics
  std::string format = "json";
  // tag
  std::string tag;
  std::vector<std::string> images;
  // match
  std::string mode;
  std::string predictions;
  std::string truth;
  double epsilon = 0;
};

std::string reason_flag(std::string reason) {
  // "eval_iou must be in (0, 1]" -> "eval-iou out of range"
  const auto space = reason.find(' ');
  std::string field = reason.substr(0, space);
  for (auto& c : field)
    if (c == '_') c = '-';
  if (reason.find("exceed") != std::string::npos) return "conf-min must not exceed conf-max";
  return field + " out of range";
}

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") out << text;
  else write_file_atomic(out_path, text);
}

int cmd_build(const Options& o, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(o.folder)) {
    err << "error: folder not found: " << o.folder << "\n";
    return kUsage;
  }
  if (!(o.set_iou > 0.0 && o.set_iou <= 1.0)) {
    err << "error: set-iou out of range (must be in (0, 1]): " << o.set_iou << "\n";
    return kUsage;
  }
  const fs::path out_path(o.out);
  const fs::path parent = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    err << "error: output directory not found: " << parent.string() << "\n";
    return kUsage;
  }

  SetArtifact a;
  a.raw = load_dataset(o.folder, o.object_class);
  const ValidationReport report = validate_dataset(a.raw);
  if (!report.ok()) {
    for (const auto& v : report.violations) err << "invalid: " << v.subject << ": " << v.message << "\n";
    return kFailure;
  }
  a.set_iou = o.set_iou;
  a.edges = compute_edges(a.raw, o.set_iou);
  a.build = BuildMetadata{kToolVersion, build_timestamp(), fs::absolute(o.folder).lexically_normal().string()};
  write_artifact(a, out_path);

  if (o.set_iou > EvalParams{}.eval_iou)
    err << "warning: set IOU " << o.set_iou << " exceeds the default evaluation IOU "
        << EvalParams{}.eval_iou << "\n";
  out << "models: " << a.raw.models.size() << " (";
  for (std::size_t i = 0; i < a.raw.models.size(); ++i) out << (i ? ", " : "") << a.raw.models[i];
  out << ")\n"
      << "class: " << a.raw.object_class << "\n"
      << "images: " << a.raw.images.size() << "\n"
      << "detections: " << a.raw.detections.size() << " (dropped " << a.raw.dropped_detections
      << " of other classes)\n"
      << "ground truth: " << a.raw.ground_truth.size() << " (dropped "
      << a.raw.dropped_ground_truth << " of other classes)\n"
      << "edges: " << a.edges.size() << " at set IOU " << a.set_iou << "\n"
      << "wrote " << o.out << "\n";
  return 0;
}

int check_eval(const EvalParams& p, std::ostream& err) {
  if (auto r = p.check(); !r.empty()) {
    err << "error: " << reason_flag(r) << "\n";
    return kUsage;
  }
  return 0;
}

volatile std::sig_atomic_t g_stop_requested = 0;
Service* g_running = nullptr;

extern "C" void on_signal(int) {
  g_stop_requested = 1;
  if (g_running) g_running->stop();
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  ServiceConfig cfg;
  cfg.artifact_path = o.artifact;
  cfg.defaults = o.eval.params();
  if (int rc = check_eval(cfg.defaults, err)) return rc;
  if (!parse_listen_address(o.listen, cfg.host, cfg.port)) {
    err << "error: listen address must be host:port, got '" << o.listen << "'\n";
    return kUsage;
  }
  cfg.static_image_root = o.image_root;

  Service service(load_artifact(o.artifact), cfg);
  const int port = service.bind();
  if (port < 0) {
    err << "error: cannot bind " << o.listen << " (port busy?)\n";
    return kFailure;
  }
  out << "serving " << o.artifact << " on http://" << cfg.host << ":" << port << "\n" << std::flush;
  g_running = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const bool ok = service.listen();
  g_running = nullptr;
  return ok || g_stop_requested ? 0 : kFailure;
}

int cmd_query(const Options& o, std::ostream& out, std::ostream& err) {
  const SetArtifact a = load_artifact(o.artifact);
  QuerySpec spec;
  if (auto r = api::make_query_spec(a, o.include, o.exclude, o.neutral, spec); !r.empty()) {
    err << "error: " << r << "\n";
    return kUsage;
  }
  if (!parse_status_filter(o.status, spec.status)) {
    err << "error: status must be one of all, tp, fp\n";
    return kUsage;
  }
  spec.params = o.eval.params();
  if (int rc = check_eval(spec.params, err)) return rc;
  emit(api::query_for(a, spec), o.out, out);
  return 0;
}

void print_metrics_table(const json& doc, std::ostream& out) {
  const auto& models = doc["models"];
  std::size_t width = 5;
  for (const auto& m : models) width = std::max(width, m.get<std::string>().size());
  out << std::left << std::setw(static_cast<int>(width)) << "model" << std::right
      << std::setw(6) << "tp" << std::setw(6) << "fp" << std::setw(6) << "fn" << std::setw(11)
      << "precision" << std::setw(8) << "recall" << "\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& s : doc["scores"]) {
    out << std::left << std::setw(static_cast<int>(width)) << s["model"].get<std::string>()
        << std::right << std::setw(6) << s["tp"].get<std::size_t>() << std::setw(6)
        << s["fp"].get<std::size_t>() << std::setw(6) << s["fn"].get<std::size_t>()
        << std::setw(11) << s["precision"].get<double>() << std::setw(8)
        << s["recall"].get<double>() << "\n";
  }
  out << "\njaccard\n" << std::left << std::setw(static_cast<int>(width)) << "";
  for (const auto& m : models) out << std::right << std::setw(static_cast<int>(width) + 2) << m.get<std::string>();
  out << "\n";
  for (std::size_t i = 0; i < models.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << models[i].get<std::string>();
    for (const auto& v : doc["jaccard"][i])
      out << std::right << std::setw(static_cast<int>(width) + 2) << v.get<double>();
    out << "\n";
  }
}

int cmd_metrics(const Options& o, std::ostream& out, std::ostream& err) {
  const SetArtifact a = load_artifact(o.artifact);
  const EvalParams p = o.eval.params();
  if (int rc = check_eval(p, err)) return rc;
  const json doc = api::metrics_for(a, p);
  if (o.format == "table") {
    std::ostringstream text;
    print_metrics_table(doc, text);
    if (o.out.empty() || o.out == "-") out << text.str();
    else write_file_atomic(o.out, text.str());
  } else {
    emit(doc, o.out, out);
  }
  return 0;
}

void load_sidecar(TagStore& store, const fs::path& artifact_path) {
  const fs::path sidecar = tag_sidecar_path(artifact_path);
  if (fs::exists(sidecar)) store.load_from(sidecar);
}

int cmd_tag(const Options& o, std::ostream& out, std::ostream& err) {
  const SetArtifact a = load_artifact(o.artifact);
  TagStore store(a.raw.images);
  load_sidecar(store, o.artifact);
  try {
    store.assign(o.tag, o.images);
  } catch (const TagError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  store.export_to(tag_sidecar_path(o.artifact));
  out << "tag '" << o.tag << "': " << store.snapshot().at(o.tag).size() << " image(s)\n";
  return 0;
}

int cmd_export_tags(const Options& o, std::ostream& out, std::ostream&) {
  const SetArtifact a = load_artifact(o.artifact);
  TagStore store(a.raw.images);
  load_sidecar(store, o.artifact);
  if (o.out == "-") out << store.export_document();
  else store.export_to(o.out);
  return 0;
}

int cmd_match(const Options& o, std::ostream& out, std::ostream& err) {
  using namespace generic;
  const auto records = read_prediction_csv(o.predictions);
  if (o.mode == "classification") {
    const PredictionTable t = make_label_table(records);
    std::map<std::string, std::string> truth;
    if (!o.truth.empty()) truth = read_truth_csv(o.truth);
    emit(api::agreement_groups(t.models, match_classification(t, o.truth.empty() ? nullptr : &truth)),
         o.out, out);
  } else if (o.mode == "regression") {
    if (!(o.epsilon > 0)) {
      err << "error: epsilon out of range (must be > 0)\n";
      return kUsage;
    }
    const PredictionTable t = make_value_table(records);
    emit(api::agreement_groups(t.models, match_regression(t, o.epsilon)), o.out, out);
  } else {
    const PredictionTable t = make_label_table(records);
    if (t.models.size() != 2) {
      err << "error: clustering alignment compares exactly two models, found " << t.models.size()
          << "\n";
      return kUsage;
    }
    ClusterLabels a, b;
    for (std::size_t i = 0; i < t.items.size(); ++i) {
      a[t.items[i]] = t.labels[i][0];
      b[t.items[i]] = t.labels[i][1];
    }
    const ClusterAlignment al = align_clusterings(a, b);
    json doc = api::agreement_groups(t.models, al.groups);
    doc["mapping"] = al.mapping;
    emit(doc, o.out, out);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Set-based comparison of multiple models' predictions", "setmlvis"};
  app.require_subcommand(1);
  Options o;

  auto artifact_option = [&](CLI::App* cmd) {
    cmd->add_option("--artifact", o.artifact, "Artifact written by build")
        ->envname("SETMLVIS_ARTIFACT")
        ->required();
  };

  auto* build = app.add_subcommand("build", "Match predictions into agreement sets and write an artifact");
  build->add_option("--folder", o.folder, "Folder with model predictions and ground truth")->required();
  build->add_option("--class", o.object_class, "Object class to analyse")->required();
  build->add_option("--out", o.out, "Artifact output path")->required();
  build->add_option("--set-iou", o.set_iou, "Set generation IOU threshold")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Serve the explorer HTTP interface");
  artifact_option(serve);
  serve->add_option("--listen", o.listen, "host:port")->envname("SETMLVIS_LISTEN")->capture_default_str();
  serve->add_option("--image-root", o.image_root, "Directory holding image files")
      ->envname("SETMLVIS_IMAGE_ROOT");
  o.eval.attach(serve);

  auto* query_cmd = app.add_subcommand("query", "Tri-state query over agreement sets");
  artifact_option(query_cmd);
  query_cmd->add_option("--include", o.include, "Models that must be present")->delimiter(',');
  query_cmd->add_option("--exclude", o.exclude, "Models that must be absent")->delimiter(',');
  query_cmd->add_option("--neutral", o.neutral, "Unconstrained models (the default)")->delimiter(',');
  query_cmd->add_option("--status", o.status, "all, tp or fp")->capture_default_str();
  query_cmd->add_option("--out", o.out, "Write to file instead of standard output");
  o.eval.attach(query_cmd);

  auto* metrics_cmd = app.add_subcommand("metrics", "Per-model scores and Jaccard matrix");
  artifact_option(metrics_cmd);
  metrics_cmd->add_option("--format", o.format, "json or table")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  metrics_cmd->add_option("--out", o.out, "Write to file instead of standard output");
  o.eval.attach(metrics_cmd);

  auto* tag_cmd = app.add_subcommand("tag", "Add images to a tag");
  artifact_option(tag_cmd);
  tag_cmd->add_option("--tag", o.tag, "Tag name")->required();
  tag_cmd->add_option("--images", o.images, "Image ids")->delimiter(',')->required();

  auto* export_cmd = app.add_subcommand("export-tags", "Write the tag document");
  artifact_option(export_cmd);
  export_cmd->add_option("--out", o.out, "Output path, or - for standard output")->required();

  auto* match_cmd = app.add_subcommand("match", "Agreement groups for tabular predictions");
  match_cmd->add_option("--mode", o.mode, "classification, regression or clustering")
      ->check(CLI::IsMember({"classification", "regression", "clustering"}))
      ->required();
  match_cmd->add_option("--predictions", o.predictions, "CSV model_id,item_id,label|value|cluster")
      ->required();
  match_cmd->add_option("--truth", o.truth, "CSV item_id,label");
  match_cmd->add_option("--epsilon", o.epsilon, "Regression agreement distance");
  match_cmd->add_option("--out", o.out, "Write to file instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (build->parsed()) return cmd_build(o, out, err);
    if (serve->parsed()) return cmd_serve(o, out, err);
    if (query_cmd->parsed()) return cmd_query(o, out, err);
    if (metrics_cmd->parsed()) return cmd_metrics(o, out, err);
    if (tag_cmd->parsed()) return cmd_tag(o, out, err);
    if (export_cmd->parsed()) return cmd_export_tags(o, out, err);
    if (match_cmd->parsed()) return cmd_match(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace setmlvis
