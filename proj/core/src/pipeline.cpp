#include "saflow/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "saflow/affinity.hpp"
#include "saflow/image.hpp"
#include "saflow/io.hpp"
#include "saflow/patchlab.hpp"
#include "saflow/prototypes.hpp"
#include "saflow/seeding.hpp"
#include "saflow/selfassign.hpp"

namespace saflow::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* format_name(InputFormat f) {
  switch (f) {
    case InputFormat::ppm: return "ppm";
    case InputFormat::pgm: return "pgm";
    case InputFormat::csv: return "csv";
    case InputFormat::edgelist: return "edgelist";
  }
  return "?";
}

const char* weights_name(WeightScheme w) {
  switch (w) {
    case WeightScheme::uniform: return "uniform";
    case WeightScheme::nlm: return "nlm";
    case WeightScheme::graph: return "graph";
  }
  return "?";
}

// Wall-clock per pipeline stage, milliseconds.
class StageClock {
 public:
  void start() { last_ = std::chrono::steady_clock::now(); }
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_[stage] =
        std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }
  const json& timings() const { return timings_; }

 private:
  std::chrono::steady_clock::time_point last_ =
      std::chrono::steady_clock::now();
  json timings_ = json::object();
};

std::string out_path(const CommonOptions& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  return (fs::path(opt.out_dir) / name).string();
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_diagnostics(const std::string& path, const flow::FlowTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "iter,entropy,tr_b,min_mass,max_mass\n";
  for (size_t t = 0; t < trace.entropy.size(); ++t)
    out << t + 1 << ',' << trace.entropy[t] << ',' << trace.confusion_trace[t]
        << ',' << trace.min_mass[t] << ',' << trace.max_mass[t] << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

json metrics_json(const flow::FlowResult& result, int c_effective) {
  json m;
  m["schema_version"] = 1;
  m["c_effective"] = c_effective;
  m["iterations"] = result.iterations;
  m["final_entropy"] = result.final_entropy;
  m["objective"] = result.objective_value;
  m["tr_b_trace"] = result.trace.confusion_trace;
  return m;
}

json common_config(const CommonOptions& opt) {
  json c;
  c["input"] = opt.input;
  c["format"] = format_name(opt.format);
  c["out_dir"] = opt.out_dir;
  c["s"] = opt.s;
  c["c"] = opt.c;
  c["rho"] = opt.rho;
  c["sigma"] = opt.sigma;
  c["step"] = opt.step;
  c["entropy_tol"] = opt.entropy_tol;
  c["max_iters"] = opt.max_iters;
  c["seed"] = opt.seed;
  return c;
}

flow::FlowConfig flow_config(const CommonOptions& opt) {
  flow::FlowConfig cfg;
  cfg.s = opt.s;
  cfg.step = opt.step;
  cfg.rho = opt.rho;
  cfg.entropy_tol = opt.entropy_tol;
  cfg.max_iters = opt.max_iters;
  return cfg;
}

// Sketch width from the flag: negative selects automatically (sketch only
// past the dense materialization comfort zone), zero is exact, and a width
// that covers every column degenerates to exact.
Eigen::Index resolve_sketch_cols(int flag, Eigen::Index n) {
  Eigen::Index ell = flag < 0 ? (n > 4096 ? 100 : 0) : flag;
  if (ell >= n) ell = 0;
  return ell;
}

void check_label_count(int c, Eigen::Index n) {
  if (static_cast<Eigen::Index>(c) > n)
    throw std::runtime_error("more labels requested than data points");
}

struct ExportedLabels {
  std::vector<int> labels;        // first-occurrence ids
  std::vector<int> soft_columns;  // per id, column of the soft assignment
  int c_effective = 0;
};

ExportedLabels export_labels(const flow::LabelField& field) {
  ExportedLabels ex;
  std::vector<int> order;
  ex.labels = remap_first_occurrence(field.labels, &order);
  ex.c_effective = static_cast<int>(order.size());
  ex.soft_columns.reserve(order.size());
  for (int old_id : order)
    ex.soft_columns.push_back(field.column_of_label[old_id]);
  return ex;
}

// Manifest shared by every command; caller adds command-specific fields.
json manifest_json(const std::string& command, const json& config,
                   const StageClock& clock, const flow::FlowResult& result,
                   const RunOutcome& outcome) {
  json m;
  m["schema_version"] = 1;
  m["command"] = command;
  m["config"] = config;
  m["timings_ms"] = clock.timings();
  m["iterations"] = result.iterations;
  m["c_effective"] = outcome.c_effective;
  m["final_entropy"] = result.final_entropy;
  m["converged"] = result.converged;
  m["outputs"] = outcome.outputs;
  return m;
}

RunOutcome base_outcome(const flow::FlowResult& result, int c_effective) {
  RunOutcome out;
  out.converged = result.converged;
  out.iterations = result.iterations;
  out.c_effective = c_effective;
  out.final_entropy = result.final_entropy;
  out.objective = result.objective_value;
  return out;
}

}  // namespace

std::optional<InputFormat> infer_format(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".ppm") return InputFormat::ppm;
  if (ext == ".pgm") return InputFormat::pgm;
  if (ext == ".csv") return InputFormat::csv;
  if (ext == ".edges" || ext == ".edgelist") return InputFormat::edgelist;
  return std::nullopt;
}

std::vector<int> remap_first_occurrence(const std::vector<int>& labels,
                                        std::vector<int>* column_order) {
  std::vector<int> new_of_old;
  std::vector<int> order;
  std::vector<int> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const int old_id = labels[i];
    if (old_id < 0) throw std::invalid_argument("negative label");
    if (static_cast<size_t>(old_id) >= new_of_old.size())
      new_of_old.resize(static_cast<size_t>(old_id) + 1, -1);
    if (new_of_old[old_id] < 0) {
      new_of_old[old_id] = static_cast<int>(order.size());
      order.push_back(old_id);
    }
    out[i] = new_of_old[old_id];
  }
  if (column_order) *column_order = order;
  return out;
}

RunOutcome run_label(const LabelOptions& opt) {
  const CommonOptions& com = opt.common;
  StageClock clock;

  // Ingest: image pixels or CSV rows become the feature matrix.
  bool from_image = false;
  image::Image img;
  Eigen::MatrixXd F;
  switch (com.format) {
    case InputFormat::ppm:
    case InputFormat::pgm:
      img = image::load_pnm(com.input);
      F = img.values;
      from_image = true;
      break;
    case InputFormat::csv:
      F = io::load_csv_matrix(com.input);
      break;
    case InputFormat::edgelist:
      throw std::runtime_error("edge lists are handled by the graph command");
  }
  const Eigen::Index n = F.rows();
  check_label_count(com.c, n);
  const affinity::FeatureSet features{F, affinity::Metric::euclidean};

  flow::NeighborhoodSystem nbhd;
  if (from_image) {
    switch (opt.weights) {
      case WeightScheme::uniform:
        nbhd = flow::grid_uniform(img.rows, img.cols, opt.nbhd);
        break;
      case WeightScheme::nlm:
        nbhd = flow::grid_nonlocal_means(F, img.rows, img.cols, opt.nbhd,
                                         (opt.nlm_patch - 1) / 2, opt.rho_w);
        break;
      case WeightScheme::graph:
        throw std::runtime_error("graph weights need an edge-list input");
    }
  } else {
    if (opt.weights != WeightScheme::uniform)
      throw std::runtime_error("feature CSV input supports uniform weights only");
    nbhd = flow::singleton(n);
  }
  clock.mark("load");

  const Eigen::Index ell = resolve_sketch_cols(opt.sketch_cols, n);
  const affinity::AffinityOperator K =
      ell == 0 ? affinity::gaussian_kernel(features, com.sigma)
               : affinity::nystrom_sketch(
                     n,
                     [&](Eigen::Index k) {
                       return affinity::gaussian_kernel_column(features,
                                                               com.sigma, k);
                     },
                     ell, com.seed);
  clock.mark("affinity");

  const seeding::SeedSet seeds =
      seeding::greedy_k_center(features, com.c, com.seed);
  const Eigen::MatrixXd D0 = seeding::seed_distances(features, seeds);
  clock.mark("seeding");

  const flow::FlowResult result = flow::run_saf(K, D0, nbhd, flow_config(com));
  clock.mark("flow");

  const ExportedLabels ex = export_labels(result.labels);
  // Prototype rows follow the exported label order.
  const Eigen::MatrixXd all_protos =
      prototypes::recover_prototypes(result.W, F);
  Eigen::MatrixXd protos(ex.c_effective, F.cols());
  for (int j = 0; j < ex.c_effective; ++j)
    protos.row(j) = all_protos.row(ex.soft_columns[j]);
  clock.mark("prototypes");

  RunOutcome outcome = base_outcome(result, ex.c_effective);
  const std::string labels_path = out_path(com, "labels.csv");
  io::save_labels_csv(labels_path, ex.labels);
  outcome.outputs.push_back(labels_path);
  if (from_image) {
    const std::string img_path = out_path(com, "labels.ppm");
    image::save_pnm(img_path, io::labels_to_image(ex.labels, img.rows, img.cols));
    outcome.outputs.push_back(img_path);
  }
  const std::string protos_path = out_path(com, "prototypes.csv");
  io::save_csv_matrix(protos_path, protos);
  outcome.outputs.push_back(protos_path);
  const std::string metrics_path = out_path(com, "metrics.json");
  write_json_file(metrics_path, metrics_json(result, ex.c_effective));
  outcome.outputs.push_back(metrics_path);
  const std::string diag_path = out_path(com, "diagnostics.csv");
  write_diagnostics(diag_path, result.trace);
  outcome.outputs.push_back(diag_path);
  clock.mark("export");

  json config = common_config(com);
  config["nbhd"] = opt.nbhd;
  config["sketch_cols"] = opt.sketch_cols;
  config["sketch_cols_effective"] = ell;
  config["weights"] = weights_name(opt.weights);
  config["nlm_patch"] = opt.nlm_patch;
  config["rho_w"] = opt.rho_w;
  const std::string manifest_path = out_path(com, "manifest.json");
  outcome.outputs.push_back(manifest_path);
  write_json_file(manifest_path,
                  manifest_json("label", config, clock, result, outcome));
  return outcome;
}

RunOutcome run_patch(const PatchOptions& opt) {
  const CommonOptions& com = opt.common;
  StageClock clock;

  if (com.format != InputFormat::ppm && com.format != InputFormat::pgm)
    throw std::runtime_error("the patch command needs an image input");
  const image::Image img = image::load_pnm(com.input);
  const patchlab::PatchGrid grid = patchlab::extract_patches(img, opt.patch_size);
  const Eigen::Index n = grid.count();
  check_label_count(com.c, n);

  flow::NeighborhoodSystem nbhd;
  switch (opt.weights) {
    case WeightScheme::uniform:
      nbhd = flow::grid_uniform(grid.rows, grid.cols, opt.nbhd);
      break;
    case WeightScheme::nlm:
      // Patch rows are the features; the direct row distance is already a
      // patch difference, so no second windowing.
      nbhd = flow::grid_nonlocal_means(grid.patches, grid.rows, grid.cols,
                                       opt.nbhd, 0, opt.rho_w);
      break;
    case WeightScheme::graph:
      throw std::runtime_error("graph weights need an edge-list input");
  }
  clock.mark("load");

  const double sigma_sq = com.sigma * com.sigma;
  const Eigen::Index ell = resolve_sketch_cols(opt.sketch_cols, n);
  affinity::AffinityOperator K = [&] {
    if (ell == 0) {
      const Eigen::MatrixXd D = patchlab::sym_patch_distance_matrix(grid);
      return affinity::AffinityOperator::exact(
          (-D.array().square() / sigma_sq).exp().matrix());
    }
    return affinity::nystrom_sketch(
        n,
        [&](Eigen::Index k) {
          const Eigen::VectorXd d = patchlab::sym_patch_distance_column(grid, k);
          return (-d.array().square() / sigma_sq).exp().matrix().eval();
        },
        ell, com.seed);
  }();
  clock.mark("affinity");

  const seeding::DistanceFn dist = [&](Eigen::Index a, Eigen::Index b) {
    return patchlab::sym_patch_distance(grid, a, b);
  };
  const seeding::SeedSet seeds = seeding::greedy_k_center(n, com.c, dist, com.seed);
  const Eigen::MatrixXd D0 = seeding::seed_distances(n, seeds, dist);
  clock.mark("seeding");

  const flow::FlowResult result = flow::run_saf(K, D0, nbhd, flow_config(com));
  clock.mark("flow");

  const ExportedLabels ex = export_labels(result.labels);
  const patchlab::PatchPrototypes all_protos =
      patchlab::learn_patch_prototypes(grid, result.W, opt.rounds);
  patchlab::PatchPrototypes protos;
  protos.side = all_protos.side;
  protos.channels = all_protos.channels;
  protos.patches.resize(ex.c_effective, all_protos.patches.cols());
  for (int j = 0; j < ex.c_effective; ++j)
    protos.patches.row(j) = all_protos.patches.row(ex.soft_columns[j]);
  const patchlab::Reconstruction rec =
      patchlab::assign_and_reconstruct(img, grid, protos, ex.labels);
  clock.mark("prototypes");

  RunOutcome outcome = base_outcome(result, ex.c_effective);
  const std::string labels_path = out_path(com, "labels.csv");
  io::save_labels_csv(labels_path, ex.labels);
  outcome.outputs.push_back(labels_path);
  const std::string part_path = out_path(com, "labels.ppm");
  image::save_pnm(part_path, io::labels_to_image(ex.labels, grid.rows, grid.cols));
  outcome.outputs.push_back(part_path);

  const std::string protos_path = out_path(com, "prototypes.csv");
  io::save_csv_matrix(protos_path, protos.patches);
  outcome.outputs.push_back(protos_path);

  // Prototype strip: the learned patches side by side, left to right.
  const char* img_ext = img.channels == 3 ? "ppm" : "pgm";
  image::Image strip =
      image::make_image(grid.side, grid.side * ex.c_effective, img.channels);
  for (int j = 0; j < ex.c_effective; ++j)
    for (int r = 0; r < grid.side; ++r)
      for (int c = 0; c < grid.side; ++c)
        for (int ch = 0; ch < img.channels; ++ch)
          strip.at(r, j * grid.side + c, ch) = protos.patches(
              j, (static_cast<Eigen::Index>(r) * grid.side + c) * img.channels +
                     ch);
  const std::string strip_path =
      out_path(com, std::string("prototype_strip.") + img_ext);
  image::save_pnm(strip_path, strip);
  outcome.outputs.push_back(strip_path);

  const std::string rec_path =
      out_path(com, std::string("reconstruction.") + img_ext);
  image::save_pnm(rec_path, rec.output);
  outcome.outputs.push_back(rec_path);

  // Pixel error magnitude clamped to [0, 0.3] and stretched to full range.
  image::Image diff = image::make_image(img.rows, img.cols, 1);
  for (Eigen::Index p = 0; p < img.pixel_count(); ++p) {
    const double err = (img.values.row(p) - rec.output.values.row(p)).norm();
    diff.values(p, 0) = std::min(err, 0.3) / 0.3;
  }
  const std::string diff_path = out_path(com, "difference.pgm");
  image::save_pnm(diff_path, diff);
  outcome.outputs.push_back(diff_path);

  const std::string metrics_path = out_path(com, "metrics.json");
  write_json_file(metrics_path, metrics_json(result, ex.c_effective));
  outcome.outputs.push_back(metrics_path);
  const std::string diag_path = out_path(com, "diagnostics.csv");
  write_diagnostics(diag_path, result.trace);
  outcome.outputs.push_back(diag_path);
  clock.mark("export");

  json config = common_config(com);
  config["patch_size"] = opt.patch_size;
  config["nbhd"] = opt.nbhd;
  config["sketch_cols"] = opt.sketch_cols;
  config["sketch_cols_effective"] = ell;
  config["weights"] = weights_name(opt.weights);
  config["nlm_patch"] = opt.nlm_patch;
  config["rho_w"] = opt.rho_w;
  config["rounds"] = opt.rounds;
  const std::string manifest_path = out_path(com, "manifest.json");
  outcome.outputs.push_back(manifest_path);
  write_json_file(manifest_path,
                  manifest_json("patch", config, clock, result, outcome));
  return outcome;
}

RunOutcome run_graph(const GraphOptions& opt) {
  const CommonOptions& com = opt.common;
  StageClock clock;

  if (com.format != InputFormat::edgelist)
    throw std::runtime_error("the graph command needs an edge-list input");
  double max_asym = 0.0;
  const Eigen::MatrixXd K_E = io::load_edge_list(com.input, &max_asym);
  const Eigen::Index n = K_E.rows();
  check_label_count(com.c, n);
  const flow::NeighborhoodSystem nbhd = flow::graph_weights(K_E);
  clock.mark("load");

  const affinity::AffinityOperator K = affinity::AffinityOperator::exact(K_E);
  clock.mark("affinity");

  // Spectral features seed the flow; the affinity itself scores it.
  const Eigen::MatrixXd spectral =
      affinity::dominant_eigenvectors(K_E, com.c, com.seed);
  const affinity::FeatureSet features{spectral, affinity::Metric::euclidean};
  const seeding::SeedSet seeds =
      seeding::greedy_k_center(features, com.c, com.seed);
  const Eigen::MatrixXd D0 = seeding::seed_distances(features, seeds);
  clock.mark("seeding");

  const flow::FlowResult result = flow::run_saf(K, D0, nbhd, flow_config(com));
  clock.mark("flow");

  const ExportedLabels ex = export_labels(result.labels);
  RunOutcome outcome = base_outcome(result, ex.c_effective);
  const std::string labels_path = out_path(com, "labels.csv");
  io::save_labels_csv(labels_path, ex.labels);
  outcome.outputs.push_back(labels_path);

  json metrics = metrics_json(result, ex.c_effective);
  if (!opt.truth.empty()) {
    const std::vector<int> truth = io::load_labels_csv(opt.truth);
    if (static_cast<Eigen::Index>(truth.size()) != n)
      throw std::runtime_error("ground-truth label count mismatch");
    const double agreement = flow::label_agreement(ex.labels, truth);
    const int disagreements =
        static_cast<int>(std::lround((1.0 - agreement) * static_cast<double>(n)));
    metrics["agreement"] = agreement;
    metrics["disagreements"] = disagreements;
  }
  const std::string metrics_path = out_path(com, "metrics.json");
  write_json_file(metrics_path, metrics);
  outcome.outputs.push_back(metrics_path);
  const std::string diag_path = out_path(com, "diagnostics.csv");
  write_diagnostics(diag_path, result.trace);
  outcome.outputs.push_back(diag_path);
  clock.mark("export");

  json config = common_config(com);
  config["truth"] = opt.truth;
  json manifest = manifest_json("graph", config, clock, result, outcome);
  if (max_asym > 1e-8) {
    manifest["warnings"] = json::array(
        {"edge list not symmetric: max discrepancy " + std::to_string(max_asym) +
         ", averaged"});
  }
  const std::string manifest_path = out_path(com, "manifest.json");
  outcome.outputs.push_back(manifest_path);
  manifest["outputs"] = outcome.outputs;
  write_json_file(manifest_path, manifest);
  return outcome;
}

}  // namespace saflow::pipeline
