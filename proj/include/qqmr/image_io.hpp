#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "qvector.hpp"

namespace qqmr
{

/// Square n x n image with 3 (R, G, B) or 4 (w, R, G, B) channels.
/// Planes are row-major; for 3-channel images plane 0 stays zero.
struct ColorImage
{
  std::size_t n = 0;
  int channels = 3;
  std::array<std::vector<double>, 4> planes;

  ColorImage() = default;
  ColorImage(std::size_t size, int ch) : n(size), channels(ch)
  {
    if (ch != 3 && ch != 4)
    {
      throw usage_error("ColorImage: channel count must be 3 or 4");
    }
    for (auto &p : planes)
    {
      p.assign(n * n, 0.0);
    }
  }

  double &at(int plane, std::size_t row, std::size_t col) { return planes[plane][row * n + col]; }
  double at(int plane, std::size_t row, std::size_t col) const { return planes[plane][row * n + col]; }
};

/// vec(X): column-major stacking, pixel (row, col) -> index col * n + row.
inline QVector to_qvector(const ColorImage &img)
{
  QVector v(img.n * img.n);
  for (std::size_t c = 0; c < img.n; ++c)
  {
    for (std::size_t r = 0; r < img.n; ++r)
    {
      v[c * img.n + r] = {img.at(0, r, c), img.at(1, r, c), img.at(2, r, c), img.at(3, r, c)};
    }
  }
  return v;
}

/// Inverse of to_qvector. For 3 channels the real part is dropped.
inline ColorImage from_qvector(std::span<const Quaternion> v, std::size_t n, int channels = 3)
{
  detail::check_same_size(v.size(), n * n, "from_qvector");
  ColorImage img(n, channels);
  for (std::size_t c = 0; c < n; ++c)
  {
    for (std::size_t r = 0; r < n; ++r)
    {
      const Quaternion &q = v[c * n + r];
      for (int p = channels == 3 ? 1 : 0; p < 4; ++p)
      {
        img.at(p, r, c) = q[p];
      }
    }
  }
  return img;
}

/// Clamps every plane to [0, 255].
inline void clamp_pixels(ColorImage &img)
{
  for (auto &p : img.planes)
  {
    for (auto &v : p)
    {
      v = std::clamp(v, 0.0, 255.0);
    }
  }
}

namespace detail
{
inline std::string pnm_token(std::istream &in)
{
  std::string tok;
  char ch = 0;
  while (in.get(ch))
  {
    if (ch == '#')
    {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch)))
    {
      if (!tok.empty())
      {
        break;
      }
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

inline std::size_t pnm_number(std::istream &in, const char *what)
{
  const std::string tok = pnm_token(in);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
  {
    throw parse_error(std::string("PNM header: bad ") + what + " '" + tok + "'", 0);
  }
  return std::stoul(tok);
}

inline std::ifstream open_in(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw io_error("cannot open " + path.string());
  }
  return in;
}

inline std::ofstream open_out(const std::filesystem::path &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw io_error("cannot write " + path.string());
  }
  return out;
}

inline unsigned char to_byte(double v)
{
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)));
}
}  // namespace detail

/// Reads binary PPM (P6, RGB into planes 1..3) or PGM (P5, gray replicated
/// into planes 1..3). 8-bit only; the image must be square.
inline ColorImage read_pnm(std::istream &in)
{
  const std::string magic = detail::pnm_token(in);
  if (magic != "P6" && magic != "P5")
  {
    throw parse_error("unsupported image magic '" + magic + "' (expected P5 or P6)", 0);
  }
  const std::size_t w = detail::pnm_number(in, "width");
  const std::size_t h = detail::pnm_number(in, "height");
  const std::size_t maxval = detail::pnm_number(in, "maxval");
  if (maxval == 0 || maxval > 255)
  {
    throw parse_error("only 8-bit images are supported", 0);
  }
  if (w != h || w == 0)
  {
    throw usage_error("image must be square and nonempty (" + std::to_string(w) + " x " + std::to_string(h) + ")");
  }
  const bool color = magic == "P6";
  std::vector<unsigned char> buf(w * h * (color ? 3 : 1));
  in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
  {
    throw parse_error("image data truncated", 0);
  }
  ColorImage img(w, 3);
  for (std::size_t r = 0; r < h; ++r)
  {
    for (std::size_t c = 0; c < w; ++c)
    {
      for (int p = 0; p < 3; ++p)
      {
        const std::size_t k = r * w + c;
        img.at(p + 1, r, c) = color ? buf[3 * k + p] : buf[k];
      }
    }
  }
  return img;
}

/// Writes planes 1..3 as binary PPM, rounding and clamping to [0, 255].
inline void write_ppm(std::ostream &out, const ColorImage &img)
{
  out << "P6\n" << img.n << ' ' << img.n << "\n255\n";
  std::vector<unsigned char> buf(3 * img.n * img.n);
  for (std::size_t r = 0; r < img.n; ++r)
  {
    for (std::size_t c = 0; c < img.n; ++c)
    {
      for (int p = 0; p < 3; ++p)
      {
        buf[3 * (r * img.n + c) + p] = detail::to_byte(img.at(p + 1, r, c));
      }
    }
  }
  out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

/// Writes the mean of planes 1..3 as binary PGM.
inline void write_pgm(std::ostream &out, const ColorImage &img)
{
  out << "P5\n" << img.n << ' ' << img.n << "\n255\n";
  std::vector<unsigned char> buf(img.n * img.n);
  for (std::size_t r = 0; r < img.n; ++r)
  {
    for (std::size_t c = 0; c < img.n; ++c)
    {
      buf[r * img.n + c] = detail::to_byte((img.at(1, r, c) + img.at(2, r, c) + img.at(3, r, c)) / 3.0);
    }
  }
  out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

/// Four-channel planar raw format: "QIMG4 n\n" then 4 n^2 little-endian
/// float64 values, plane order w, R, G, B, each plane row-major.
inline ColorImage read_qimg4(std::istream &in)
{
  std::string magic;
  std::string size_tok;
  in >> magic >> size_tok;
  if (magic != "QIMG4")
  {
    throw parse_error("missing QIMG4 header", 1);
  }
  if (size_tok.empty() || size_tok.find_first_not_of("0123456789") != std::string::npos)
  {
    throw parse_error("QIMG4: bad size '" + size_tok + "'", 1);
  }
  const std::size_t n = std::stoul(size_tok);
  if (n == 0)
  {
    throw parse_error("QIMG4: size must be positive", 1);
  }
  if (in.get() != '\n')
  {
    throw parse_error("QIMG4: header must end with a newline", 1);
  }
  ColorImage img(n, 4);
  for (auto &plane : img.planes)
  {
    for (auto &v : plane)
    {
      unsigned char b[8];
      in.read(reinterpret_cast<char *>(b), 8);
      if (in.gcount() != 8)
      {
        throw parse_error("QIMG4: data truncated", 0);
      }
      std::uint64_t bits = 0;
      for (int k = 7; k >= 0; --k)
      {
        bits = (bits << 8) | b[k];
      }
      v = std::bit_cast<double>(bits);
    }
  }
  return img;
}

inline void write_qimg4(std::ostream &out, const ColorImage &img)
{
  out << "QIMG4 " << img.n << '\n';
  for (const auto &plane : img.planes)
  {
    for (double v : plane)
    {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      unsigned char b[8];
      for (int k = 0; k < 8; ++k)
      {
        b[k] = static_cast<unsigned char>(bits & 0xffU);
        bits >>= 8;
      }
      out.write(reinterpret_cast<const char *>(b), 8);
    }
  }
}

/// Dispatches on extension: .qimg4 / .qimg, otherwise PPM/PGM.
inline ColorImage read_image(const std::filesystem::path &path)
{
  auto in = detail::open_in(path);
  const auto ext = path.extension().string();
  if (ext == ".qimg4" || ext == ".qimg")
  {
    return read_qimg4(in);
  }
  return read_pnm(in);
}

inline void write_image(const std::filesystem::path &path, const ColorImage &img)
{
  auto out = detail::open_out(path);
  const auto ext = path.extension().string();
  if (ext == ".qimg4" || ext == ".qimg")
  {
    write_qimg4(out, img);
  }
  else if (ext == ".pgm")
  {
    write_pgm(out, img);
  }
  else
  {
    write_ppm(out, img);
  }
  if (!out)
  {
    throw io_error("write failed: " + path.string());
  }
}

}  // namespace qqmr
