#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "saflow/image.hpp"

// Patch-level machinery: square patches over interior pixels, the eight
// square symmetries as index permutations (no interpolation, center fixed),
// translation-tolerant patch distances, prototype patch learning, and
// image reconstruction from assigned prototypes.
namespace saflow::patchlab {

// Patch rows are handed around as contiguous pointers in the distance hot
// path, so patch matrices must be stored row-major.
using PatchMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// The eight symmetries of the square as permutations of patch entries.
// permutation(e, side)[m] is the source entry read by position m of the
// transformed patch.  Element 0 is the identity; compose(a, b) applies b
// first, then a; inverse(e) is the group inverse.
namespace d4 {
inline constexpr int order = 8;
const std::array<int, order * order>& composition_table();
const std::vector<int>& permutation(int element, int side);
int compose(int a, int b);
int inverse(int element);
}  // namespace d4

// Patches of odd side over interior centers (full windows only), flattened
// row-major with channels innermost.  Centers form a grid of
// (image.rows - side + 1) x (image.cols - side + 1) positions in row-major
// order.  side = 1 degenerates to per-pixel features.
struct PatchGrid {
  int image_rows = 0, image_cols = 0, channels = 1;
  int side = 1, radius = 0;
  int rows = 0, cols = 0;       // interior grid dimensions
  PatchMatrix patches;          // count() x (side*side*channels)

  Eigen::Index count() const {
    return static_cast<Eigen::Index>(rows) * cols;
  }
  int pixels_per_patch() const { return side * side; }
  // Center of interior index i in image coordinates.
  std::pair<int, int> center(Eigen::Index i) const {
    return {static_cast<int>(i) / cols + radius,
            static_cast<int>(i) % cols + radius};
  }
};

PatchGrid extract_patches(const image::Image& img, int side);

// Patch i transformed by D4 element e, as a flat vector.
Eigen::VectorXd d4_apply(const PatchGrid& grid, Eigen::Index i, int element);

// Sum over patch positions of the per-pixel Euclidean distance between the
// transform of patch a and patch b, minimized over the eight transforms.
// Symmetric in (a, b).
double min_orbit_distance(const PatchGrid& grid, Eigen::Index a,
                          Eigen::Index b);

// d(P_i -> P_k): additionally minimized over source centers l in the patch
// window of i (intersected with the interior grid).  Not symmetric.
double asym_patch_distance(const PatchGrid& grid, Eigen::Index i,
                           Eigen::Index k);

// min(d(P_i -> P_k), d(P_k -> P_i)).
double sym_patch_distance(const PatchGrid& grid, Eigen::Index i,
                          Eigen::Index k);

// Full symmetric distance matrix, computed from the orbit-minimized cross
// matrix followed by window minima; equals the pairwise definition exactly.
Eigen::MatrixXd sym_patch_distance_matrix(const PatchGrid& grid);

// Column k of the symmetric distance matrix without building all of it.
Eigen::VectorXd sym_patch_distance_column(const PatchGrid& grid,
                                          Eigen::Index k);

// One prototype patch per label, c x (side*side*channels).
struct PatchPrototypes {
  PatchMatrix patches;
  int side = 1, channels = 1;
};

// Weighted objective sum_j sum_i q_ji d(P_i -> proto_j)^2 with q = mass
// normalized assignment weights; the distance minimizes over transforms and
// window translations like asym_patch_distance.
double prototype_objective(const PatchGrid& grid, const Eigen::MatrixXd& W,
                           const PatchPrototypes& protos);

// Block-coordinate alternation: transforms given prototypes, then weighted
// averages of the aligned patches given transforms.  Initialized with the
// weighted average under identity transforms.  W is the assignment matrix
// over interior centers.
PatchPrototypes learn_patch_prototypes(const PatchGrid& grid,
                                       const Eigen::MatrixXd& W,
                                       int rounds = 5);

struct Reconstruction {
  image::Image output;
  Eigen::VectorXi contributions;  // per-pixel entry count
};

// Each interior center finds the best (transform, translation) alignment of
// its label's prototype; the inverse-transformed prototype is painted onto
// the window of the chosen translation.  Pixel values average their painted
// entries; pixels that never receive one copy the input.  Candidates are
// scanned center-and-identity first so exact self matches win ties.
Reconstruction assign_and_reconstruct(const image::Image& input,
                                      const PatchGrid& grid,
                                      const PatchPrototypes& protos,
                                      const std::vector<int>& labels);

}  // namespace saflow::patchlab
