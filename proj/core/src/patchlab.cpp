#include "saflow/patchlab.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "saflow/selfassign.hpp"

namespace saflow::patchlab {

namespace d4 {

namespace {

// Local coordinates read by each symmetry: out(r, c) = in(f_e(r, c)).
std::pair<int, int> source_coord(int element, int r, int c, int side) {
  const int m = side - 1;
  switch (element) {
    case 0: return {r, c};          // identity
    case 1: return {c, m - r};      // quarter turn
    case 2: return {m - r, m - c};  // half turn
    case 3: return {m - c, r};      // three-quarter turn
    case 4: return {r, m - c};      // column mirror
    case 5: return {m - r, c};      // row mirror
    case 6: return {c, r};          // diagonal mirror
    case 7: return {m - c, m - r};  // antidiagonal mirror
    default: throw std::invalid_argument("transform index out of range");
  }
}

std::array<std::vector<int>, order> build_permutations(int side) {
  std::array<std::vector<int>, order> perms;
  for (int e = 0; e < order; ++e) {
    perms[e].resize(static_cast<size_t>(side) * side);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        auto [sr, sc] = source_coord(e, r, c, side);
        perms[e][static_cast<size_t>(r) * side + c] = sr * side + sc;
      }
  }
  return perms;
}

}  // namespace

const std::vector<int>& permutation(int element, int side) {
  if (element < 0 || element >= order)
    throw std::invalid_argument("transform index out of range");
  if (side < 1 || side % 2 == 0)
    throw std::invalid_argument("patch side must be odd and positive");
  static std::map<int, std::array<std::vector<int>, order>> cache;
  auto it = cache.find(side);
  if (it == cache.end())
    it = cache.emplace(side, build_permutations(side)).first;
  return it->second[element];
}

const std::array<int, order * order>& composition_table() {
  static const std::array<int, order * order> table = [] {
    // Fix the table on a faithful side-3 representation.
    std::array<int, order * order> t{};
    const auto perms = build_permutations(3);
    for (int a = 0; a < order; ++a)
      for (int b = 0; b < order; ++b) {
        std::vector<int> ab(9);
        // (T_a T_b P)[m] = P[perm_b[perm_a[m]]]
        for (int m = 0; m < 9; ++m) ab[m] = perms[b][perms[a][m]];
        int found = -1;
        for (int e = 0; e < order; ++e)
          if (perms[e] == ab) { found = e; break; }
        t[static_cast<size_t>(a) * order + b] = found;
      }
    return t;
  }();
  return table;
}

int compose(int a, int b) {
  if (a < 0 || a >= order || b < 0 || b >= order)
    throw std::invalid_argument("transform index out of range");
  return composition_table()[static_cast<size_t>(a) * order + b];
}

int inverse(int element) {
  for (int e = 0; e < order; ++e)
    if (compose(element, e) == 0) return e;
  throw std::invalid_argument("transform index out of range");
}

}  // namespace d4

PatchGrid extract_patches(const image::Image& img, int side) {
  if (side < 1 || side % 2 == 0)
    throw std::invalid_argument("patch side must be odd and positive");
  if (img.rows < side || img.cols < side)
    throw std::invalid_argument("image smaller than the patch");
  PatchGrid grid;
  grid.image_rows = img.rows;
  grid.image_cols = img.cols;
  grid.channels = img.channels;
  grid.side = side;
  grid.radius = (side - 1) / 2;
  grid.rows = img.rows - side + 1;
  grid.cols = img.cols - side + 1;
  grid.patches.resize(grid.count(),
                      static_cast<Eigen::Index>(side) * side * img.channels);
  for (Eigen::Index i = 0; i < grid.count(); ++i) {
    auto [cy, cx] = grid.center(i);
    Eigen::Index col = 0;
    for (int dy = -grid.radius; dy <= grid.radius; ++dy)
      for (int dx = -grid.radius; dx <= grid.radius; ++dx)
        for (int ch = 0; ch < img.channels; ++ch)
          grid.patches(i, col++) = img.at(cy + dy, cx + dx, ch);
  }
  return grid;
}

namespace {

void check_index(const PatchGrid& grid, Eigen::Index i) {
  if (i < 0 || i >= grid.count())
    throw std::invalid_argument("patch index out of range");
}

// Per-position Euclidean distance between two flat patch rows under a
// permutation of the first argument.
double permuted_distance(const PatchGrid& grid, const double* a,
                         const double* b, const std::vector<int>& perm) {
  const int np = grid.pixels_per_patch();
  const int ch = grid.channels;
  double acc = 0.0;
  if (ch == 1) {
    for (int m = 0; m < np; ++m) acc += std::abs(a[perm[m]] - b[m]);
  } else {
    for (int m = 0; m < np; ++m) {
      double sq = 0.0;
      const double* pa = a + static_cast<size_t>(perm[m]) * ch;
      const double* pb = b + static_cast<size_t>(m) * ch;
      for (int t = 0; t < ch; ++t) {
        const double d = pa[t] - pb[t];
        sq += d * d;
      }
      acc += std::sqrt(sq);
    }
  }
  return acc;
}

double orbit_min_rows(const PatchGrid& grid, const double* a, const double* b) {
  double best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < d4::order; ++e) {
    const double v =
        permuted_distance(grid, a, b, d4::permutation(e, grid.side));
    if (v < best) best = v;
  }
  return best;
}

// Window translates of center i in the interior grid, own center first,
// the rest in row-major order.
std::vector<Eigen::Index> window_translates(const PatchGrid& grid,
                                            Eigen::Index i) {
  const int gy = static_cast<int>(i) / grid.cols;
  const int gx = static_cast<int>(i) % grid.cols;
  std::vector<Eigen::Index> out;
  out.push_back(i);
  for (int dy = -grid.radius; dy <= grid.radius; ++dy) {
    const int yy = gy + dy;
    if (yy < 0 || yy >= grid.rows) continue;
    for (int dx = -grid.radius; dx <= grid.radius; ++dx) {
      const int xx = gx + dx;
      if (xx < 0 || xx >= grid.cols) continue;
      const Eigen::Index l = static_cast<Eigen::Index>(yy) * grid.cols + xx;
      if (l != i) out.push_back(l);
    }
  }
  return out;
}

struct Alignment {
  int element = 0;
  Eigen::Index translate = 0;
  double distance = std::numeric_limits<double>::infinity();
};

// Best (transform, translate) of image patches in the window of i against a
// flat target patch.  First strict improvement wins, so the scan order
// (own center first, identity transform first) is the tie-break.
Alignment align_to_target(const PatchGrid& grid, Eigen::Index i,
                          const double* target) {
  Alignment best;
  for (const Eigen::Index l : window_translates(grid, i)) {
    const double* src = grid.patches.row(l).data();
    for (int e = 0; e < d4::order; ++e) {
      const double v =
          permuted_distance(grid, src, target, d4::permutation(e, grid.side));
      if (v < best.distance) {
        best.distance = v;
        best.element = e;
        best.translate = l;
      }
    }
  }
  return best;
}

void check_prototypes(const PatchGrid& grid, const PatchPrototypes& protos) {
  if (protos.side != grid.side || protos.channels != grid.channels)
    throw std::invalid_argument("prototype shape mismatch");
  if (protos.patches.cols() != grid.patches.cols() || protos.patches.rows() < 1)
    throw std::invalid_argument("prototype shape mismatch");
}

// Mass-normalized assignment weights, one row per label.
Eigen::MatrixXd normalized_weights(const PatchGrid& grid,
                                   const Eigen::MatrixXd& W) {
  if (W.rows() != grid.count())
    throw std::invalid_argument("assignment rows must match patch count");
  Eigen::VectorXd mass = selfassign::cluster_mass(W);
  if (!(mass.array() > 0.0).all())
    throw std::domain_error("every column needs positive mass");
  return mass.cwiseInverse().asDiagonal() * W.transpose();
}

}  // namespace

Eigen::VectorXd d4_apply(const PatchGrid& grid, Eigen::Index i, int element) {
  check_index(grid, i);
  const std::vector<int>& perm = d4::permutation(element, grid.side);
  const int ch = grid.channels;
  Eigen::VectorXd out(grid.patches.cols());
  for (int m = 0; m < grid.pixels_per_patch(); ++m)
    for (int t = 0; t < ch; ++t)
      out[static_cast<Eigen::Index>(m) * ch + t] =
          grid.patches(i, static_cast<Eigen::Index>(perm[m]) * ch + t);
  return out;
}

double min_orbit_distance(const PatchGrid& grid, Eigen::Index a,
                          Eigen::Index b) {
  check_index(grid, a);
  check_index(grid, b);
  return orbit_min_rows(grid, grid.patches.row(a).data(),
                        grid.patches.row(b).data());
}

double asym_patch_distance(const PatchGrid& grid, Eigen::Index i,
                           Eigen::Index k) {
  check_index(grid, i);
  check_index(grid, k);
  double best = std::numeric_limits<double>::infinity();
  const double* target = grid.patches.row(k).data();
  for (const Eigen::Index l : window_translates(grid, i)) {
    const double v = orbit_min_rows(grid, grid.patches.row(l).data(), target);
    if (v < best) best = v;
  }
  return best;
}

double sym_patch_distance(const PatchGrid& grid, Eigen::Index i,
                          Eigen::Index k) {
  return std::min(asym_patch_distance(grid, i, k),
                  asym_patch_distance(grid, k, i));
}

namespace {

// Orbit-minimized distances of every patch against patch k.
Eigen::VectorXd cross_column(const PatchGrid& grid, Eigen::Index k) {
  const double* target = grid.patches.row(k).data();
  Eigen::VectorXd col(grid.count());
  for (Eigen::Index i = 0; i < grid.count(); ++i)
    col[i] = orbit_min_rows(grid, grid.patches.row(i).data(), target);
  return col;
}

// Window minimum over the first index: out[i] = min_{l in win(i)} col[l].
Eigen::VectorXd window_min(const PatchGrid& grid, const Eigen::VectorXd& col) {
  Eigen::VectorXd out(grid.count());
  for (Eigen::Index i = 0; i < grid.count(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Eigen::Index l : window_translates(grid, i))
      if (col[l] < best) best = col[l];
    out[i] = best;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd sym_patch_distance_matrix(const PatchGrid& grid) {
  const Eigen::Index n = grid.count();
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    R.col(k) = window_min(grid, cross_column(grid, k));
  // d(i,k) = min of the two directed distances.
  return R.cwiseMin(R.transpose());
}

Eigen::VectorXd sym_patch_distance_column(const PatchGrid& grid,
                                          Eigen::Index k) {
  check_index(grid, k);
  Eigen::VectorXd col = window_min(grid, cross_column(grid, k));
  // Other direction: min over the window of k of the translate columns.
  for (const Eigen::Index l : window_translates(grid, k))
    col = col.cwiseMin(cross_column(grid, l));
  return col;
}

double prototype_objective(const PatchGrid& grid, const Eigen::MatrixXd& W,
                           const PatchPrototypes& protos) {
  check_prototypes(grid, protos);
  Eigen::MatrixXd Q = normalized_weights(grid, W);
  if (protos.patches.rows() != Q.rows())
    throw std::invalid_argument("label count mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < Q.rows(); ++j) {
    const double* target = protos.patches.row(j).data();
    for (Eigen::Index i = 0; i < grid.count(); ++i) {
      const double d = align_to_target(grid, i, target).distance;
      acc += Q(j, i) * d * d;
    }
  }
  return acc;
}

PatchPrototypes learn_patch_prototypes(const PatchGrid& grid,
                                       const Eigen::MatrixXd& W, int rounds) {
  if (rounds < 0) throw std::invalid_argument("negative round count");
  Eigen::MatrixXd Q = normalized_weights(grid, W);
  PatchPrototypes protos;
  protos.side = grid.side;
  protos.channels = grid.channels;
  protos.patches = Q * grid.patches;  // identity-transform weighted average

  const int ch = grid.channels;
  for (int round = 0; round < rounds; ++round) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(Q.rows(), grid.patches.cols());
    for (Eigen::Index j = 0; j < Q.rows(); ++j) {
      const double* target = protos.patches.row(j).data();
      for (Eigen::Index i = 0; i < grid.count(); ++i) {
        const Alignment a = align_to_target(grid, i, target);
        const std::vector<int>& perm = d4::permutation(a.element, grid.side);
        for (int m = 0; m < grid.pixels_per_patch(); ++m)
          for (int t = 0; t < ch; ++t)
            next(j, static_cast<Eigen::Index>(m) * ch + t) +=
                Q(j, i) *
                grid.patches(a.translate,
                             static_cast<Eigen::Index>(perm[m]) * ch + t);
      }
    }
    protos.patches = next;
  }
  return protos;
}

Reconstruction assign_and_reconstruct(const image::Image& input,
                                      const PatchGrid& grid,
                                      const PatchPrototypes& protos,
                                      const std::vector<int>& labels) {
  check_prototypes(grid, protos);
  if (input.rows != grid.image_rows || input.cols != grid.image_cols ||
      input.channels != grid.channels)
    throw std::invalid_argument("image shape mismatch");
  if (static_cast<Eigen::Index>(labels.size()) != grid.count())
    throw std::invalid_argument("label count must match patch count");

  const int ch = grid.channels;
  Eigen::MatrixXd accum =
      Eigen::MatrixXd::Zero(input.pixel_count(), ch);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(input.pixel_count());

  for (Eigen::Index i = 0; i < grid.count(); ++i) {
    const int j = labels[i];
    if (j < 0 || j >= protos.patches.rows())
      throw std::invalid_argument("label out of range");
    const Alignment a =
        align_to_target(grid, i, protos.patches.row(j).data());
    const std::vector<int>& perm = d4::permutation(a.element, grid.side);
    auto [cy, cx] = grid.center(a.translate);
    // The match reads P_l[perm[m]] ~= proto[m]: entry perm[m] of the window
    // at the chosen translate receives prototype entry m.
    for (int m = 0; m < grid.pixels_per_patch(); ++m) {
      const int dy = perm[m] / grid.side - grid.radius;
      const int dx = perm[m] % grid.side - grid.radius;
      const Eigen::Index pix = input.pixel_index(cy + dy, cx + dx);
      for (int t = 0; t < ch; ++t)
        accum(pix, t) += protos.patches(j, static_cast<Eigen::Index>(m) * ch + t);
      counts[pix] += 1;
    }
  }

  Reconstruction rec;
  rec.output = input;
  rec.contributions = counts;
  for (Eigen::Index p = 0; p < input.pixel_count(); ++p)
    if (counts[p] > 0)
      rec.output.values.row(p) = accum.row(p) / static_cast<double>(counts[p]);
  return rec;
}

}  // namespace saflow::patchlab
