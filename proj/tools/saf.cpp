#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include "saflow/pipeline.hpp"

// Unsupervised labeling front end.  Exit codes: 0 success, 1 data or
// runtime failure (including non-convergence; partial outputs are kept),
// 2 usage error.
namespace {

using saflow::pipeline::CommonOptions;
using saflow::pipeline::GraphOptions;
using saflow::pipeline::InputFormat;
using saflow::pipeline::LabelOptions;
using saflow::pipeline::PatchOptions;
using saflow::pipeline::RunOutcome;
using saflow::pipeline::WeightScheme;

constexpr int kUsageError = 2;

const std::map<std::string, InputFormat> kFormats{
    {"ppm", InputFormat::ppm},
    {"pgm", InputFormat::pgm},
    {"csv", InputFormat::csv},
    {"edgelist", InputFormat::edgelist}};

const std::map<std::string, WeightScheme> kWeights{
    {"uniform", WeightScheme::uniform},
    {"nlm", WeightScheme::nlm},
    {"graph", WeightScheme::graph}};

void add_common(CLI::App* sub, CommonOptions& com, std::string& format) {
  sub->add_option("--input", com.input, "input file")->required();
  sub->add_option("--format", format,
                  "input format; inferred from the extension when omitted")
      ->transform(CLI::IsMember(kFormats, CLI::ignore_case));
  sub->add_option("--out-dir", com.out_dir, "output directory");
  sub->add_option("--s", com.s, "objective family parameter")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--c", com.c, "number of labels")
      ->check(CLI::Range(2, 1 << 20));
  sub->add_option("--rho", com.rho, "likelihood scale")
      ->check(CLI::PositiveNumber);
  sub->add_option("--sigma", com.sigma, "kernel bandwidth")
      ->check(CLI::PositiveNumber);
  sub->add_option("--step", com.step, "Euler step size")
      ->check(CLI::PositiveNumber);
  sub->add_option("--entropy-tol", com.entropy_tol,
                  "mean-entropy termination threshold")
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", com.max_iters, "iteration cap")
      ->check(CLI::Range(1, 1 << 30));
  sub->add_option("--seed", com.seed, "random seed");
}

// Empty string means report the problem and exit 2.
std::string resolve_format(const std::string& flag, CommonOptions& com) {
  if (!flag.empty()) {
    com.format = kFormats.at(flag);
    return "";
  }
  const auto inferred = saflow::pipeline::infer_format(com.input);
  if (!inferred)
    return "cannot infer --format from '" + com.input + "'";
  com.format = *inferred;
  return "";
}

bool is_image(InputFormat f) {
  return f == InputFormat::ppm || f == InputFormat::pgm;
}

std::string check_odd(int value, const char* flag) {
  if (value < 1 || value % 2 == 0)
    return std::string(flag) + " must be odd and positive";
  return "";
}

int usage_error(const std::string& message) {
  std::cerr << "saf: " << message << "\n";
  return kUsageError;
}

int finish(const RunOutcome& outcome) {
  if (!outcome.converged) {
    std::cerr << "saf: flow did not converge within the iteration cap; "
                 "outputs were written with the manifest flagged\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-assignment labeling for features, images, and graphs"};
  app.require_subcommand(1);

  LabelOptions label;
  std::string label_format, label_weights = "uniform";
  CLI::App* cmd_label = app.add_subcommand(
      "label", "label feature vectors or image pixels");
  add_common(cmd_label, label.common, label_format);
  cmd_label->add_option("--nbhd", label.nbhd, "averaging window side (odd)");
  cmd_label->add_option("--sketch-cols", label.sketch_cols,
                        "affinity sketch columns; 0 exact, -1 auto")
      ->check(CLI::Range(-1, 1 << 30));
  cmd_label->add_option("--weights", label_weights, "averaging weight scheme")
      ->transform(CLI::IsMember(kWeights, CLI::ignore_case));
  cmd_label->add_option("--nlm-patch", label.nlm_patch,
                        "patch side for nlm weights (odd)");
  cmd_label->add_option("--rho-w", label.rho_w, "nlm weight scale")
      ->check(CLI::PositiveNumber);

  PatchOptions patch;
  std::string patch_format, patch_weights = "uniform";
  CLI::App* cmd_patch = app.add_subcommand(
      "patch", "label transformation-invariant image patches");
  add_common(cmd_patch, patch.common, patch_format);
  cmd_patch->add_option("--patch-size", patch.patch_size,
                        "invariant patch side (odd)");
  cmd_patch->add_option("--nbhd", patch.nbhd, "averaging window side (odd)");
  cmd_patch->add_option("--sketch-cols", patch.sketch_cols,
                        "affinity sketch columns; 0 exact, -1 auto")
      ->check(CLI::Range(-1, 1 << 30));
  cmd_patch->add_option("--weights", patch_weights, "averaging weight scheme")
      ->transform(CLI::IsMember(kWeights, CLI::ignore_case));
  cmd_patch->add_option("--nlm-patch", patch.nlm_patch,
                        "patch side for nlm weights (odd)");
  cmd_patch->add_option("--rho-w", patch.rho_w, "nlm weight scale")
      ->check(CLI::PositiveNumber);
  cmd_patch->add_option("--rounds", patch.rounds,
                        "prototype refinement rounds")
      ->check(CLI::Range(0, 1 << 20));

  GraphOptions graph;
  std::string graph_format;
  CLI::App* cmd_graph =
      app.add_subcommand("graph", "label edge-list graph vertices");
  add_common(cmd_graph, graph.common, graph_format);
  cmd_graph->add_option("--truth", graph.truth,
                        "ground-truth labels CSV for disagreement reporting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (cmd_label->parsed()) {
      if (auto m = resolve_format(label_format, label.common); !m.empty())
        return usage_error(m);
      label.weights = kWeights.at(label_weights);
      if (auto m = check_odd(label.nbhd, "--nbhd"); !m.empty())
        return usage_error(m);
      if (auto m = check_odd(label.nlm_patch, "--nlm-patch"); !m.empty())
        return usage_error(m);
      if (label.common.format == InputFormat::edgelist)
        return usage_error("edge lists are handled by the graph command");
      if (label.weights == WeightScheme::graph)
        return usage_error("graph weights need an edge-list input");
      if (!is_image(label.common.format) &&
          label.weights != WeightScheme::uniform)
        return usage_error("feature CSV input supports uniform weights only");
      return finish(saflow::pipeline::run_label(label));
    }
    if (cmd_patch->parsed()) {
      if (auto m = resolve_format(patch_format, patch.common); !m.empty())
        return usage_error(m);
      patch.weights = kWeights.at(patch_weights);
      if (auto m = check_odd(patch.patch_size, "--patch-size"); !m.empty())
        return usage_error(m);
      if (auto m = check_odd(patch.nbhd, "--nbhd"); !m.empty())
        return usage_error(m);
      if (auto m = check_odd(patch.nlm_patch, "--nlm-patch"); !m.empty())
        return usage_error(m);
      if (!is_image(patch.common.format))
        return usage_error("the patch command needs an image input");
      if (patch.weights == WeightScheme::graph)
        return usage_error("graph weights need an edge-list input");
      return finish(saflow::pipeline::run_patch(patch));
    }
    if (auto m = resolve_format(graph_format, graph.common); !m.empty())
      return usage_error(m);
    if (graph.common.format != InputFormat::edgelist)
      return usage_error("the graph command needs an edge-list input");
    return finish(saflow::pipeline::run_graph(graph));
  } catch (const std::exception& e) {
    std::cerr << "saf: " << e.what() << "\n";
    return 1;
  }
}
