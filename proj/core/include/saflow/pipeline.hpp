#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "saflow/flow.hpp"

// End-to-end runs behind the command-line surface: ingestion, affinity,
// seeding, flow, exports.  Option validation beyond basic range checks is
// the caller's job; functions here throw std::runtime_error on data errors.
namespace saflow::pipeline {

enum class InputFormat { ppm, pgm, csv, edgelist };

// Format from a file extension; empty optional when unknown.
std::optional<InputFormat> infer_format(const std::string& path);

enum class WeightScheme { uniform, nlm, graph };

// Flags shared by every subcommand.
struct CommonOptions {
  std::string input;
  InputFormat format = InputFormat::csv;
  std::string out_dir = ".";
  double s = 0.0;
  int c = 2;
  double rho = 0.1;
  double sigma = 0.316227766;  // sqrt(0.1), matches unit-range features
  double step = 0.1;
  double entropy_tol = 1e-3;
  int max_iters = 5000;
  std::uint64_t seed = 0;
};

struct LabelOptions {
  CommonOptions common;
  int nbhd = 3;          // odd window side for grid weights
  int sketch_cols = -1;  // -1 auto (100 when n > 4096), 0 exact, >0 fixed
  WeightScheme weights = WeightScheme::uniform;
  int nlm_patch = 3;     // odd patch side for nlm weights
  double rho_w = 0.1;    // nlm weight scale
};

struct PatchOptions {
  CommonOptions common;
  int patch_size = 3;  // odd side of the invariant patches
  int nbhd = 3;
  int sketch_cols = -1;
  WeightScheme weights = WeightScheme::uniform;  // uniform or nlm
  int nlm_patch = 3;
  double rho_w = 0.1;
  int rounds = 5;  // prototype refinement rounds
};

struct GraphOptions {
  CommonOptions common;
  std::string truth;  // optional label CSV for disagreement reporting
};

struct RunOutcome {
  bool converged = false;
  int iterations = 0;
  int c_effective = 0;
  double final_entropy = 0.0;
  double objective = 0.0;
  std::vector<std::string> outputs;  // paths written, manifest last
};

// Feature labeling: load features or image, Gaussian affinity (exact or
// column-sketched), k-center seeding, flow, rounding, prototype recovery.
// Writes labels.csv, prototypes.csv, metrics.json, diagnostics.csv,
// manifest.json, and labels.ppm for image input.
RunOutcome run_label(const LabelOptions& opt);

// Transformation-invariant patch labeling on one image, then prototype
// learning and reconstruction.  Adds prototype strip, reconstruction, and
// difference image (pixel error clamped to [0, 0.3], scaled to full range).
RunOutcome run_patch(const PatchOptions& opt);

// Edge-list labeling: spectral features from the affinity's dominant
// eigenvectors seed the flow; neighborhood weights come from the graph.
RunOutcome run_graph(const GraphOptions& opt);

// Exported label ids are renumbered by first occurrence: the label of the
// lowest-index vertex becomes 0, the next distinct label 1, and so on.
// column_order receives, per exported id, the index into the pre-remap
// label set (useful to reorder per-label exports consistently).
std::vector<int> remap_first_occurrence(const std::vector<int>& labels,
                                        std::vector<int>* column_order);

}  // namespace saflow::pipeline
