#include "saflow/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace saflow::image {

Image make_image(int rows, int cols, int channels, double fill) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("empty image");
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("images carry 1 or 3 channels");
  Image img;
  img.rows = rows;
  img.cols = cols;
  img.channels = channels;
  img.values = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(rows) * cols, channels, fill);
  return img;
}

namespace {

// Next whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  for (;;) {
    const int ch = in.peek();
    if (ch == EOF) throw std::runtime_error("truncated image header");
    if (std::isspace(ch)) { in.get(); continue; }
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    break;
  }
  in >> tok;
  if (tok.empty()) throw std::runtime_error("truncated image header");
  return tok;
}

}  // namespace

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path.string());
  const std::string magic = next_token(in);
  int channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else throw std::runtime_error("unsupported image magic: " + magic);
  const int cols = std::stoi(next_token(in));
  const int rows = std::stoi(next_token(in));
  const int maxval = std::stoi(next_token(in));
  if (cols < 1 || rows < 1) throw std::runtime_error("bad image dimensions");
  if (maxval != 255) throw std::runtime_error("maxval must be 255");
  in.get();  // single whitespace byte before the raster

  Image img = make_image(rows, cols, channels);
  const size_t bytes =
      static_cast<size_t>(rows) * cols * static_cast<size_t>(channels);
  std::string raster(bytes, '\0');
  in.read(raster.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<size_t>(in.gcount()) != bytes)
    throw std::runtime_error("truncated image raster");
  size_t pos = 0;
  for (Eigen::Index p = 0; p < img.pixel_count(); ++p)
    for (int ch = 0; ch < channels; ++ch)
      img.values(p, ch) =
          static_cast<unsigned char>(raster[pos++]) / 255.0;
  return img;
}

void save_pnm(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("images carry 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path.string());
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.cols << " " << img.rows << "\n255\n";
  std::string raster;
  raster.reserve(static_cast<size_t>(img.pixel_count()) * img.channels);
  for (Eigen::Index p = 0; p < img.pixel_count(); ++p)
    for (int ch = 0; ch < img.channels; ++ch) {
      const double v = std::clamp(img.values(p, ch), 0.0, 1.0);
      raster.push_back(static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw std::runtime_error("image write failed: " + path.string());
}

}  // namespace saflow::image
