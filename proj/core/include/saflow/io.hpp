#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "saflow/image.hpp"

// File formats for features, labels, and affinities.  CSV values are written
// with round-trip precision: save followed by load reproduces the matrix
// bit for bit.
namespace saflow::io {

// Comma-separated numeric matrix, '.' decimal separator, one row per line.
// Rows must all have the same width.
Eigen::MatrixXd load_csv_matrix(const std::string& path);
void save_csv_matrix(const std::string& path, const Eigen::MatrixXd& M);

// One integer per line.
void save_labels_csv(const std::string& path, const std::vector<int>& labels);
std::vector<int> load_labels_csv(const std::string& path);

// Whitespace-separated "i j w" triples, 0-indexed, undirected with each pair
// listed once.  Returns the dense symmetric affinity; absent pairs are zero.
// When both orientations of a pair appear with different weights the average
// is kept and *max_asym (if given) reports the largest discrepancy.
Eigen::MatrixXd load_edge_list(const std::string& path,
                               double* max_asym = nullptr);

// Fixed pseudo-color palette for partition images; label j maps to entry
// j mod 16.  Values in [0,1].
const std::array<std::array<double, 3>, 16>& label_palette();

// Paints labels (row-major, rows*cols entries) with the palette.
image::Image labels_to_image(const std::vector<int>& labels, int rows,
                             int cols);

}  // namespace saflow::io
