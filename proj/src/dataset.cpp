#include "plc/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "plc/error.hpp"

namespace plc {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

void Dataset::validate() const {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double v = series.values[i];
    if (kind == DataKind::price ? !(v > 0.0) : !(v >= 0.0)) {
      throw InvalidInputError(std::string(to_string(kind)) + " value at t=" + format_double(series.time(i)) +
                              (kind == DataKind::price ? " must be positive" : " must be non-negative"));
    }
  }
}

Dataset load_csv(const std::string& path, DataKind kind, DataUnits units) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> ts, vs;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (!header) {
      const auto comma = body.find(',');
      if (comma == std::string_view::npos || trim(body.substr(0, comma)) != "t" || trim(body.substr(comma + 1)) != "value")
        throw ParseError(path + ": expected header 't,value'", lineno);
      header = true;
      continue;
    }
    const auto comma = body.find(',');
    double t = 0.0, v = 0.0;
    if (comma == std::string_view::npos || !parse_number(body.substr(0, comma), t) ||
        !parse_number(body.substr(comma + 1), v))
      throw ParseError(path + ": malformed row '" + std::string(body) + "'", lineno);
    if (!ts.empty() && !(t > ts.back())) throw ParseError(path + ": times must increase strictly", lineno);
    ts.push_back(t);
    vs.push_back(v);
    lines.push_back(lineno);
  }
  if (in.bad()) throw IoError("read failure on " + path);
  if (ts.empty()) throw EmptyInputError(path + ": no data rows");

  Dataset d;
  d.kind = kind;
  d.units = units;
  d.source_label = path;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (kind == DataKind::price ? !(vs[i] > 0.0) : !(vs[i] >= 0.0))
      throw ParseError(path + (kind == DataKind::price ? ": price must be positive" : ": value must be non-negative"),
                       lines[i]);
  }

  const std::size_t n = ts.size();
  const double dt = n > 1 ? (ts.back() - ts.front()) / static_cast<double>(n - 1) : 1.0;
  bool uniform = true;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs((ts[i] - ts[i - 1]) - dt) > 1e-6 * dt) uniform = false;
  d.series = SalesSeries{ts.front(), dt, {}};
  if (uniform) {
    d.series.values = std::move(vs);
    return d;
  }
  d.resampled = true;
  d.series.values.resize(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i + 1 == n ? ts.back() : d.series.time(i);
    while (j + 2 < n && ts[j + 1] < t) ++j;
    const double w = (t - ts[j]) / (ts[j + 1] - ts[j]);
    d.series.values[i] = vs[j] + std::clamp(w, 0.0, 1.0) * (vs[j + 1] - vs[j]);
  }
  return d;
}

DataKind parse_kind(const std::string& name) {
  if (name == "penetration") return DataKind::penetration;
  if (name == "sales") return DataKind::sales;
  if (name == "price") return DataKind::price;
  throw InvalidParameterError("unknown data kind '" + name + "'");
}

DataUnits parse_units(const std::string& name) {
  if (name == "fraction") return DataUnits::fraction;
  if (name == "count") return DataUnits::count;
  if (name == "currency") return DataUnits::currency;
  throw InvalidParameterError("unknown data units '" + name + "'");
}

const char* to_string(DataKind kind) {
  switch (kind) {
    case DataKind::penetration: return "penetration";
    case DataKind::sales: return "sales";
    case DataKind::price: return "price";
  }
  return "?";
}

const char* to_string(DataUnits units) {
  switch (units) {
    case DataUnits::fraction: return "fraction";
    case DataUnits::count: return "count";
    case DataUnits::currency: return "currency";
  }
  return "?";
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("number formatting failed", false);
  return std::string(buf.data(), p);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failure on " + path);
}

void emit(const SalesSeries& s, const std::string& path, EmitFormat format) {
  std::ostringstream os;
  os << (format == EmitFormat::csv ? "t,value\n" : "# t value\n");
  const char sep = format == EmitFormat::csv ? ',' : ' ';
  for (std::size_t i = 0; i < s.size(); ++i) os << format_double(s.time(i)) << sep << format_double(s.values[i]) << '\n';
  write_text(path, os.str());
}

void emit(const std::vector<std::pair<std::string, SalesSeries>>& components, const std::string& path,
          EmitFormat format) {
  std::ostringstream os;
  if (format == EmitFormat::csv) {
    os << "t,value,component\n";
    for (const auto& [name, s] : components)
      for (std::size_t i = 0; i < s.size(); ++i)
        os << format_double(s.time(i)) << ',' << format_double(s.values[i]) << ',' << name << '\n';
  } else {
    bool first = true;
    for (const auto& [name, s] : components) {
      if (!first) os << "\n\n";
      first = false;
      os << "# component " << name << "\n# t value\n";
      for (std::size_t i = 0; i < s.size(); ++i) os << format_double(s.time(i)) << ' ' << format_double(s.values[i]) << '\n';
    }
  }
  write_text(path, os.str());
}

}  // namespace plc
