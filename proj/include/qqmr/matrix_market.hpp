#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "operator.hpp"

namespace qqmr
{

namespace detail
{
inline std::string lowercase(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline bool blank_or_comment(const std::string &line)
{
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '%';
}
}  // namespace detail

/// Reads a real Matrix Market file (coordinate or array; real or integer;
/// general or symmetric). Duplicate coordinate entries are summed and
/// symmetric storage is expanded to both triangles.
inline RealSparseMatrix read_matrix_market(std::istream &in)
{
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line))
  {
    throw parse_error("empty Matrix Market stream", 0);
  }
  ++lineno;

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket")
  {
    throw parse_error("missing %%MatrixMarket banner", lineno);
  }
  object = detail::lowercase(object);
  format = detail::lowercase(format);
  field = detail::lowercase(field);
  symmetry = detail::lowercase(symmetry);
  if (object != "matrix")
  {
    throw parse_error("unsupported object '" + object + "'", lineno);
  }
  if (format != "coordinate" && format != "array")
  {
    throw parse_error("unsupported format '" + format + "'", lineno);
  }
  if (field != "real" && field != "integer")
  {
    throw parse_error("unsupported field '" + field + "' (only real and integer)", lineno);
  }
  if (symmetry != "general" && symmetry != "symmetric")
  {
    throw parse_error("unsupported symmetry '" + symmetry + "'", lineno);
  }
  const bool symmetric = symmetry == "symmetric";

  auto next_data_line = [&](std::string &out) {
    while (std::getline(in, out))
    {
      ++lineno;
      if (!detail::blank_or_comment(out))
      {
        return true;
      }
    }
    return false;
  };

  if (!next_data_line(line))
  {
    throw parse_error("missing size line", lineno);
  }
  std::size_t rows = 0, cols = 0, entries = 0;
  {
    std::istringstream ss(line);
    long long r = -1, c = -1, e = -1;
    ss >> r >> c;
    if (format == "coordinate")
    {
      ss >> e;
    }
    if (!ss || r < 0 || c < 0 || (format == "coordinate" && e < 0))
    {
      throw parse_error("malformed size line", lineno);
    }
    rows = static_cast<std::size_t>(r);
    cols = static_cast<std::size_t>(c);
    entries = format == "coordinate" ? static_cast<std::size_t>(e) : 0;
  }
  if (symmetric && rows != cols)
  {
    throw parse_error("symmetric matrix must be square", lineno);
  }

  std::vector<Triplet<double>> t;
  auto push = [&](std::size_t i, std::size_t j, double v) {
    t.push_back({i, j, v});
    if (symmetric && i != j)
    {
      t.push_back({j, i, v});
    }
  };

  if (format == "coordinate")
  {
    t.reserve(symmetric ? 2 * entries : entries);
    for (std::size_t k = 0; k < entries; ++k)
    {
      if (!next_data_line(line))
      {
        throw parse_error("expected " + std::to_string(entries) + " entries, found " + std::to_string(k),
                          lineno);
      }
      std::istringstream ss(line);
      long long i = 0, j = 0;
      double v = 0.0;
      ss >> i >> j >> v;
      if (!ss)
      {
        throw parse_error("malformed entry", lineno);
      }
      if (i < 1 || j < 1 || static_cast<std::size_t>(i) > rows || static_cast<std::size_t>(j) > cols)
      {
        throw parse_error("index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range",
                          lineno);
      }
      if (symmetric && j > i)
      {
        throw parse_error("symmetric storage must be lower triangular", lineno);
      }
      push(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1), v);
    }
  }
  else
  {
    // column-major; symmetric stores the lower triangle only
    for (std::size_t j = 0; j < cols; ++j)
    {
      for (std::size_t i = symmetric ? j : 0; i < rows; ++i)
      {
        if (!next_data_line(line))
        {
          throw parse_error("array data ended early", lineno);
        }
        std::istringstream ss(line);
        double v = 0.0;
        ss >> v;
        if (!ss)
        {
          throw parse_error("malformed array value", lineno);
        }
        if (v != 0.0 || i == j)
        {
          push(i, j, v);
        }
      }
    }
  }
  return {rows, cols, std::move(t)};
}

inline RealSparseMatrix read_matrix_market(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw io_error("cannot open Matrix Market file " + path.string());
  }
  return read_matrix_market(in);
}

}  // namespace qqmr
