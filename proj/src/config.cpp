#include "plc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "plc/error.hpp"

namespace plc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Strips a trailing `;` or `#` comment.
std::string strip_comment(const std::string& s) {
  const auto pos = s.find_first_of(";#");
  return trim(pos == std::string::npos ? s : s.substr(0, pos));
}

double to_number(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const char* b = v.data();
  if (!v.empty() && v.front() == '+') ++b;
  const auto [p, ec] = std::from_chars(b, v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw InvalidParameterError("[" + section + "] " + key + ": '" + v + "' is not a number");
  return out;
}

const std::vector<std::string> kCommon{"kind"};

std::vector<std::string> with_common(std::vector<std::string> keys) {
  keys.insert(keys.end(), kCommon.begin(), kCommon.end());
  return keys;
}

}  // namespace

std::string Section::text(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) throw InvalidParameterError("[" + name + "] missing required key '" + key + "'");
  return it->second;
}

std::string Section::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double Section::number(const std::string& key) const { return to_number(name, key, text(key)); }

double Section::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::uint64_t Section::count(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const double v = number(key);
  if (v < 0.0 || v != std::floor(v) || v > 1.8e19)
    throw InvalidParameterError("[" + name + "] " + key + " must be a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

bool Section::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = text(key);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw InvalidParameterError("[" + name + "] " + key + ": '" + v + "' is not a boolean");
}

std::vector<double> Section::numbers(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(text(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(name, key, item));
  if (out.empty()) throw InvalidParameterError("[" + name + "] " + key + " is empty");
  return out;
}

void Section::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : entries)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw InvalidParameterError("[" + name + "] unknown key '" + k + "'");
}

const Section* ScenarioFile::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<const Section*> ScenarioFile::of_kind(const std::string& kind) const {
  std::vector<const Section*> out;
  for (const auto& s : sections)
    if (s.text("kind", "") == kind) out.push_back(&s);
  return out;
}

ScenarioFile load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    if (e.line() == 0) throw IoError("cannot read config " + path + ": " + e.message());
    throw ParseError(path + ": " + e.message(), e.line());
  }
  ScenarioFile file;
  file.path = path;
  for (const auto& [name, body] : tree) {
    if (body.empty()) throw InvalidParameterError(path + ": key '" + name + "' outside any section");
    Section s;
    s.name = name;
    for (const auto& [key, value] : body) s.entries[key] = strip_comment(value.data());
    if (!s.has("kind")) throw InvalidParameterError("[" + name + "] needs a 'kind' entry");
    file.sections.push_back(std::move(s));
  }
  if (file.sections.empty()) throw EmptyInputError(path + ": no sections");
  return file;
}

PlcModel plc_model_from(const Section& s) {
  std::vector<std::string> allowed{"preset", "recurrent", "lifetime_spread", "dt", "horizon"};
  for (Param p : all_params()) allowed.push_back(param_info(p).key);
  s.require_known(with_common(allowed));
  PlcModel m = s.has("preset") ? preset(s.text("preset")) : PlcModel{};
  m.name = s.name;
  for (Param p : all_params()) {
    const std::string key = param_info(p).key;
    if (!s.has(key)) continue;
    if (s.text(key) == "-")
      m.clear(p);
    else
      m.set(p, s.number(key));
  }
  m.recurrent = s.flag("recurrent", m.recurrent);
  m.lifetime_spread = s.number("lifetime_spread", m.lifetime_spread);
  m.validate();
  return m;
}

std::size_t PlcGrid::samples() const { return static_cast<std::size_t>(std::floor(horizon / dt + 1e-9)) + 1; }

PlcGrid plc_grid_from(const Section& s) {
  PlcGrid g;
  g.dt = s.number("dt", g.dt);
  g.horizon = s.number("horizon", g.horizon);
  if (!(g.dt > 0.0)) throw InvalidParameterError("[" + s.name + "] dt must be positive");
  if (!(g.horizon > 0.0)) throw InvalidParameterError("[" + s.name + "] horizon must be positive");
  return g;
}

MarketVolumeParams volume_from(const Section& s) {
  auto mv = MarketVolumeParams::from_fractions(s.number("lower_fraction", 1.0), s.number("natural_price"),
                                               s.number("width"), s.number("potential", 1.0));
  mv.validate();
  return mv;
}

CompetitionSetup competition_from(const Section& s, std::optional<std::uint64_t> seed_override) {
  s.require_known(with_common({"lower_fraction", "natural_price", "width", "potential", "brands", "prices",
                               "price_mean", "price_variance", "preference", "reproduction", "stock",
                               "total_sales", "consumer_pool", "repurchase_rate", "epsilon", "dtau", "steps",
                               "micro", "jumps", "jump_rate", "jump_price", "jump_preference",
                               "jump_reproduction", "record_every", "runs", "seed"}));
  CompetitionSetup out;
  CompetitionConfig& c = out.config;
  MarketState& m = c.initial;
  m.volume = volume_from(s);
  const double preference = s.number("preference", 1.0);
  const double reproduction = s.number("reproduction", 0.05);
  const double stock = s.number("stock", 1.0);
  const double total = s.number("total_sales", 1.0);
  if (s.has("prices")) {
    const auto prices = s.numbers("prices");
    for (double p : prices)
      m.brands.push_back({p, preference, reproduction, stock, total / static_cast<double>(prices.size())});
  } else {
    m.brands = gaussian_brands(s.count("brands", 50), s.number("price_mean"), s.number("price_variance"),
                               preference, reproduction, stock, total);
  }
  m.consumer_pool = s.number("consumer_pool", 1.0);
  m.repurchase_rate = s.number("repurchase_rate", 1.0);
  m.epsilon = s.number("epsilon", m.epsilon);
  c.dtau = s.number("dtau", 1.0);
  c.steps = s.count("steps", 1000);
  c.micro = s.flag("micro", false);
  c.jumps_enabled = s.flag("jumps", false);
  c.jumps.rate = s.number("jump_rate", c.jumps.rate);
  c.jumps.price_magnitude = s.number("jump_price", c.jumps.price_magnitude);
  c.jumps.preference_magnitude = s.number("jump_preference", c.jumps.preference_magnitude);
  c.jumps.reproduction_magnitude = s.number("jump_reproduction", c.jumps.reproduction_magnitude);
  c.record_every = s.count("record_every", 1);
  c.seed = seed_override.value_or(s.count("seed", 0));
  out.runs = s.count("runs", 1);
  if (out.runs == 0) throw InvalidParameterError("[" + s.name + "] runs must be at least 1");
  if (!(c.dtau > 0.0)) throw InvalidParameterError("[" + s.name + "] dtau must be positive");
  m.validate();
  c.jumps.validate();
  return out;
}

GibratConfig gibrat_from(const Section& s, std::optional<std::uint64_t> seed_override) {
  s.require_known(with_common({"n_units", "horizon", "drift", "volatility", "initial_size", "increment", "seed"}));
  GibratConfig g;
  g.n_units = s.count("n_units", 100000);
  g.horizon = s.count("horizon", 400);
  g.drift = s.number("drift", 0.0);
  g.volatility = s.number("volatility", 0.05);
  g.initial_size = s.number("initial_size", 1.0);
  const std::string inc = s.text("increment", "normal");
  if (inc == "normal")
    g.increment = IncrementKind::normal;
  else if (inc == "uniform")
    g.increment = IncrementKind::uniform;
  else
    throw InvalidParameterError("[" + s.name + "] increment must be 'normal' or 'uniform'");
  g.seed = seed_override.value_or(s.count("seed", 0));
  g.validate();
  return g;
}

SubstitutionSetup substitution_from(const Section& s) {
  s.require_known(with_common({"theta", "f1", "f2", "epsilon", "offset", "initial_share", "t_max", "dt"}));
  SubstitutionSetup out;
  if (s.has("theta")) {
    if (s.has("f1") || s.has("f2")) throw InvalidParameterError("[" + s.name + "] give theta or f1/f2, not both");
    out.theta = s.number("theta");
  } else {
    out.theta = fitness_advantage(s.number("f1"), s.number("f2"), s.number("epsilon", 1.0));
  }
  if (s.has("initial_share")) {
    if (s.has("offset")) throw InvalidParameterError("[" + s.name + "] give offset or initial_share, not both");
    const double m0 = s.number("initial_share");
    if (!(m0 > 0.0 && m0 < 1.0)) throw InvalidParameterError("[" + s.name + "] initial_share must lie in (0, 1)");
    out.offset = std::log(m0 / (1.0 - m0));
  } else {
    out.offset = s.number("offset", 0.0);
  }
  out.t_max = s.number("t_max", out.t_max);
  out.dt = s.number("dt", out.dt);
  if (!(out.t_max > 0.0) || !(out.dt > 0.0)) throw InvalidParameterError("[" + s.name + "] t_max and dt must be positive");
  return out;
}

VolumeSweep volume_sweep_from(const Section& s) {
  s.require_known(with_common({"lower_fraction", "natural_price", "width", "potential", "price_min", "price_max",
                               "points"}));
  VolumeSweep v;
  v.volume = volume_from(s);
  v.price_min = s.number("price_min", 0.0);
  v.price_max = s.number("price_max", v.volume.natural_price + 4.0 * v.volume.width);
  v.points = s.count("points", 101);
  if (v.points < 2 || !(v.price_max > v.price_min) || v.price_min < 0.0)
    throw InvalidParameterError("[" + s.name + "] need 0 <= price_min < price_max and points >= 2");
  return v;
}

}  // namespace plc
