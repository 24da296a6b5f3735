#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "onseg/core.hpp"
#include "onseg/losses.hpp"

namespace onseg {

struct Dataset {
  std::vector<LossSample> samples;

  std::size_t n() const { return samples.size(); }
  int d() const { return samples.empty() ? 0 : static_cast<int>(samples.front().z.size()); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view token, double& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

inline std::ifstream open_for_reading(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace detail

// libSVM sparse text: "label idx:val idx:val ..." with 1-based indices. Vectors
// are densified to the largest index seen anywhere in the file.
inline Dataset parse_libsvm(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::pair<double, std::vector<std::pair<int, double>>>> rows;
  int width = 0;
  std::string line;
  long line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;

    std::istringstream tokens{std::string(view)};
    std::string token;
    tokens >> token;
    double label = 0.0;
    if (!detail::parse_double(token, label)) fail("non-numeric label '" + token + "'");
    std::vector<std::pair<int, double>> features;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) fail("expected index:value, got '" + token + "'");
      const std::string_view key(token.data(), colon);
      if (key == "qid") continue;
      int index = 0;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
      if (ec != std::errc() || ptr != key.data() + key.size()) fail("non-numeric index '" + token + "'");
      if (index <= 0) fail("feature index must be >= 1, got " + std::to_string(index));
      double value = 0.0;
      if (!detail::parse_double(std::string_view(token).substr(colon + 1), value)) {
        fail("non-numeric value '" + token + "'");
      }
      features.emplace_back(index, value);
      width = std::max(width, index);
    }
    rows.emplace_back(label, std::move(features));
  }
  if (rows.empty()) throw DataError(source + ": empty dataset");

  Dataset data;
  data.samples.reserve(rows.size());
  for (auto& [label, features] : rows) {
    LossSample s;
    s.y = label;
    s.z = Point::Zero(width);
    for (const auto& [index, value] : features) s.z[index - 1] = value;
    data.samples.push_back(std::move(s));
  }
  return data;
}

inline Dataset parse_libsvm(const std::string& path) {
  auto in = detail::open_for_reading(path);
  return parse_libsvm(in, path);
}

// Writes nonzero entries only, with round-trip precision.
inline void write_libsvm(const Dataset& data, std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& s : data.samples) {
    out << s.y;
    for (Eigen::Index i = 0; i < s.z.size(); ++i) {
      if (s.z[i] != 0.0) out << ' ' << (i + 1) << ':' << s.z[i];
    }
    out << '\n';
  }
}

// Returns table: a header row of asset names, then one row of per-asset
// return rates (decimal fractions) per period.
inline Dataset parse_returns_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  long line_no = 0;
  std::size_t columns = 0;
  bool have_header = false;
  Dataset data;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = view.find(',', start);
      cells.push_back(view.substr(start, comma == std::string_view::npos ? view.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!have_header) {
      columns = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != columns) {
      throw DataError(source + ":" + std::to_string(line_no) + ": ragged row with " +
                      std::to_string(cells.size()) + " cells, header has " + std::to_string(columns));
    }
    LossSample s;
    s.z.resize(static_cast<Eigen::Index>(columns));
    for (std::size_t j = 0; j < columns; ++j) {
      double value = 0.0;
      if (!detail::parse_double(cells[j], value)) {
        throw DataError(source + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                        std::string(cells[j]) + "'");
      }
      s.z[static_cast<Eigen::Index>(j)] = value;
    }
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) throw DataError(source + ": empty dataset");
  return data;
}

inline Dataset parse_returns_csv(const std::string& path) {
  auto in = detail::open_for_reading(path);
  return parse_returns_csv(in, path);
}

}  // namespace onseg
