#pragma once

#include <string>
#include <utility>
#include <vector>

#include "plc/series.hpp"

namespace plc {

enum class DataKind { penetration, sales, price };
enum class DataUnits { fraction, count, currency };
enum class EmitFormat { csv, plot_data };

struct Dataset {
  DataKind kind = DataKind::sales;
  SalesSeries series;
  DataUnits units = DataUnits::fraction;
  std::string source_label;
  // True when the file had uneven spacing and was interpolated onto a
  // uniform grid with the same span and sample count.
  bool resampled = false;

  // Sales and penetration >= 0, prices > 0.
  void validate() const;
};

// Reads a `t,value` CSV. Blank lines and `#` comments are skipped. Times must
// increase strictly.
Dataset load_csv(const std::string& path, DataKind kind, DataUnits units = DataUnits::fraction);

DataKind parse_kind(const std::string& name);
DataUnits parse_units(const std::string& name);
const char* to_string(DataKind kind);
const char* to_string(DataUnits units);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// `t,value` CSV, or two whitespace-separated columns with a `#` header.
void emit(const SalesSeries& s, const std::string& path, EmitFormat format);

// Several named series on one grid: `t,value,component` rows grouped by
// component, or one gnuplot index block per component.
void emit(const std::vector<std::pair<std::string, SalesSeries>>& components, const std::string& path,
          EmitFormat format);

// Writes `text` to `path`, raising IoError with the path on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace plc
