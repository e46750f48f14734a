#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "pnpw/errors.hpp"
#include "pnpw/image.hpp"

// Grayscale image files. Intensities are mapped to [0,1] on read and
// clamped and quantized on write.

namespace pnpw::io {

namespace detail {

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return ext;
}

// Next header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(char(ch));
  }
  if (tok.empty()) throw IoError("truncated PGM header");
  return tok;
}

inline int pnm_int(std::istream& is) {
  const std::string tok = pnm_token(is);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw IoError("bad PGM header field: " + tok);
    return v;
  } catch (const std::logic_error&) {
    throw IoError("bad PGM header field: " + tok);
  }
}

inline unsigned quantize(double v, unsigned maxval) {
  const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  return unsigned(std::lround(c * maxval));
}

}  // namespace detail

/// Reads binary (P5) or ASCII (P2) PGM with maxval up to 65535.
inline Image read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string magic = detail::pnm_token(is);
  if (magic != "P5" && magic != "P2") throw IoError(path.string() + ": not a PGM file");
  const int width = detail::pnm_int(is);
  const int height = detail::pnm_int(is);
  const int maxval = detail::pnm_int(is);
  if (width <= 0 || height <= 0) throw IoError(path.string() + ": bad dimensions");
  if (maxval <= 0 || maxval > 65535) throw IoError(path.string() + ": bad maxval");

  Image img(Shape{height, width});
  const auto n = img.pixels.size();
  if (magic == "P5") {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(std::size_t(n) * bytes);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (is.gcount() != std::streamsize(buf.size())) throw IoError(path.string() + ": truncated");
    for (Eigen::Index i = 0; i < n; ++i) {
      const unsigned v = bytes == 1 ? buf[std::size_t(i)]
                                    : (unsigned(buf[2 * std::size_t(i)]) << 8) |
                                          buf[2 * std::size_t(i) + 1];
      img.pixels[i] = double(v) / maxval;
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      int v = 0;
      if (!(is >> v)) throw IoError(path.string() + ": truncated");
      img.pixels[i] = double(v) / maxval;
    }
  }
  return img;
}

/// Writes binary PGM, 8-bit unless `sixteen_bit` is set.
inline void write_pgm(const std::filesystem::path& path, const Image& img,
                      bool sixteen_bit = false) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  const unsigned maxval = sixteen_bit ? 65535u : 255u;
  os << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> buf;
  buf.reserve(std::size_t(img.pixels.size()) * (sixteen_bit ? 2 : 1));
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
    const unsigned v = detail::quantize(img.pixels[i], maxval);
    if (sixteen_bit) buf.push_back((unsigned char)(v >> 8));
    buf.push_back((unsigned char)(v & 0xff));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

/// Reads any PNG; color is converted to gray and alpha is composited away by libpng.
inline Image read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;  // 8-bit gray; deeper files are reduced by libpng
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path.string() + ": " + msg);
  }
  Image img(Shape{int(image.height), int(image.width)});
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = buf[std::size_t(i)] / 255.0;
  }
  return img;
}

/// Writes an 8-bit grayscale PNG.
inline void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<unsigned char> buf(std::size_t(img.pixels.size()));
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
    buf[std::size_t(i)] = (unsigned char)detail::quantize(img.pixels[i], 255);
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.width());
  image.height = png_uint_32(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
}

inline Image read_image(const std::filesystem::path& path) {
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".pnm") return read_pgm(path);
  throw IoError("unsupported image format: " + path.string());
}

inline void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".pgm" || ext == ".pnm") return write_pgm(path, img);
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace pnpw::io
