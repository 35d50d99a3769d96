#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plc/competition.hpp"
#include "plc/income_market.hpp"
#include "plc/scenario.hpp"
#include "plc/stochastic_sizes.hpp"

namespace plc {

// One `[name]` block of an INI scenario file.
struct Section {
  std::string name;
  std::map<std::string, std::string> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;  // comma separated

  // Throws InvalidParameterError on any key not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;
};

struct ScenarioFile {
  std::string path;
  std::vector<Section> sections;

  const Section* find(const std::string& name) const;
  // Sections whose `kind` equals `kind`, in file order.
  std::vector<const Section*> of_kind(const std::string& kind) const;
};

// Parses the INI file; syntax errors raise ParseError with the line number.
ScenarioFile load_config(const std::string& path);

// Builders with validation. Each rejects unknown keys for its kind.
PlcModel plc_model_from(const Section& s);
struct PlcGrid {
  double dt = 0.25;
  double horizon = 40.0;  // years after t0
  std::size_t samples() const;
};
PlcGrid plc_grid_from(const Section& s);

MarketVolumeParams volume_from(const Section& s);
struct CompetitionSetup {
  CompetitionConfig config;
  std::size_t runs = 1;
};
CompetitionSetup competition_from(const Section& s, std::optional<std::uint64_t> seed_override);
GibratConfig gibrat_from(const Section& s, std::optional<std::uint64_t> seed_override);

struct SubstitutionSetup {
  double theta = 0.0;
  double offset = 0.0;  // C_m
  double t_max = 20.0;
  double dt = 0.1;
};
SubstitutionSetup substitution_from(const Section& s);

struct VolumeSweep {
  MarketVolumeParams volume;
  double price_min = 0.0;
  double price_max = 1.0;
  std::size_t points = 101;
};
VolumeSweep volume_sweep_from(const Section& s);

}  // namespace plc
