#pragma once

#include <Eigen/Dense>
#include <filesystem>

// Raster image container and binary PNM input/output.  Pixel values live in
// [0, 1]; files are 8-bit with maxval 255.
namespace saflow::image {

struct Image {
  int rows = 0, cols = 0, channels = 1;
  // (rows * cols) x channels, pixels in row-major scan order.
  Eigen::MatrixXd values;

  Eigen::Index pixel_index(int r, int c) const {
    return static_cast<Eigen::Index>(r) * cols + c;
  }
  double at(int r, int c, int ch) const {
    return values(pixel_index(r, c), ch);
  }
  double& at(int r, int c, int ch) { return values(pixel_index(r, c), ch); }
  Eigen::Index pixel_count() const {
    return static_cast<Eigen::Index>(rows) * cols;
  }
};

Image make_image(int rows, int cols, int channels, double fill = 0.0);

// Binary P5 (1 channel) or P6 (3 channels), maxval 255 required.
Image load_pnm(const std::filesystem::path& path);

// Writes P5 for 1 channel, P6 for 3; values are clamped to [0, 1] and
// quantized by round(v * 255).
void save_pnm(const std::filesystem::path& path, const Image& img);

}  // namespace saflow::image
