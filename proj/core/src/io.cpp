#include "saflow/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace saflow::io {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

Eigen::MatrixXd load_csv_matrix(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      // strtod instead of stod: stod raises on ERANGE underflow, rejecting
      // subnormals that the writer emits legitimately
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || !std::isfinite(v))
        throw std::runtime_error(path + ": bad numeric cell '" + cell + "'");
      size_t used = static_cast<size_t>(end - cell.c_str());
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
        ++used;
      if (used != cell.size())
        throw std::runtime_error(path + ": bad numeric cell '" + cell + "'");
      row.push_back(v);
    }
    if (row.empty()) throw std::runtime_error(path + ": empty row");
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      M(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return M;
}

void save_csv_matrix(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream out = open_output(path);
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out << ',';
      out << M(i, j);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_labels_csv(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out = open_output(path);
  for (int l : labels) out << l << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<int> load_labels_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t used = 0;
    int v;
    try {
      v = std::stoi(line, &used);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": bad label '" + line + "'");
    }
    while (used < line.size() && std::isspace(static_cast<unsigned char>(line[used])))
      ++used;
    if (used != line.size())
      throw std::runtime_error(path + ": bad label '" + line + "'");
    labels.push_back(v);
  }
  if (labels.empty()) throw std::runtime_error(path + ": no labels");
  return labels;
}

Eigen::MatrixXd load_edge_list(const std::string& path, double* max_asym) {
  std::ifstream in = open_input(path);
  std::vector<std::array<double, 3>> edges;
  long long i, j;
  double w;
  while (in >> i >> j >> w) {
    if (i < 0 || j < 0) throw std::runtime_error(path + ": negative vertex id");
    edges.push_back({static_cast<double>(i), static_cast<double>(j), w});
  }
  if (!in.eof()) throw std::runtime_error(path + ": malformed edge entry");
  if (edges.empty()) throw std::runtime_error(path + ": no edges");

  long long max_id = 0;
  for (const auto& e : edges)
    max_id = std::max({max_id, static_cast<long long>(e[0]),
                       static_cast<long long>(e[1])});
  const Eigen::Index n = static_cast<Eigen::Index>(max_id) + 1;

  // NaN marks untouched entries so repeated pairs can be detected.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd K = Eigen::MatrixXd::Constant(n, n, nan);
  double asym = 0.0;
  for (const auto& e : edges) {
    const auto a = static_cast<Eigen::Index>(e[0]);
    const auto b = static_cast<Eigen::Index>(e[1]);
    if (std::isnan(K(a, b))) {
      K(a, b) = K(b, a) = e[2];
    } else {
      asym = std::max(asym, std::abs(K(a, b) - e[2]));
      const double avg = 0.5 * (K(a, b) + e[2]);
      K(a, b) = K(b, a) = avg;
    }
  }
  K = K.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
  if (max_asym) *max_asym = asym;
  return K;
}

const std::array<std::array<double, 3>, 16>& label_palette() {
  // Saturated, mutually distinguishable colors; index is label mod 16.
  static const std::array<std::array<double, 3>, 16> colors = {{
      {0.902, 0.098, 0.294},  // red
      {0.235, 0.706, 0.294},  // green
      {1.000, 0.882, 0.098},  // yellow
      {0.000, 0.510, 0.784},  // blue
      {0.961, 0.510, 0.188},  // orange
      {0.569, 0.118, 0.706},  // purple
      {0.275, 0.941, 0.941},  // cyan
      {0.941, 0.196, 0.902},  // magenta
      {0.824, 0.961, 0.235},  // lime
      {0.980, 0.745, 0.745},  // pink
      {0.000, 0.502, 0.502},  // teal
      {0.902, 0.745, 1.000},  // lavender
      {0.667, 0.431, 0.157},  // brown
      {1.000, 0.980, 0.784},  // beige
      {0.502, 0.000, 0.000},  // maroon
      {0.667, 1.000, 0.765},  // mint
  }};
  return colors;
}

image::Image labels_to_image(const std::vector<int>& labels, int rows,
                             int cols) {
  if (static_cast<size_t>(rows) * cols != labels.size())
    throw std::invalid_argument("label count must equal rows*cols");
  image::Image img = image::make_image(rows, cols, 3);
  const auto& palette = label_palette();
  for (size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] < 0) throw std::invalid_argument("negative label");
    const auto& c = palette[static_cast<size_t>(labels[p]) % palette.size()];
    for (int t = 0; t < 3; ++t)
      img.values(static_cast<Eigen::Index>(p), t) = c[t];
  }
  return img;
}

}  // namespace saflow::io
