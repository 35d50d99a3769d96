#include "plc/scenario.hpp"

#include <cmath>
#include <limits>

#include "plc/error.hpp"

namespace plc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<ParamInfo, kParamCount> kInfo{{
    {"t0", -kInf, kInf},
    {"delta_t0", 0.0, 20.0},
    {"pm_over_p0", 0.0, 0.99},
    {"a", 0.0, 2.0},
    {"k", 0.0, 200.0},
    {"n_G0", 0.0, 1.0},
    {"n_B0", 0.0, 1.0},
    {"A", 1e-6, 1.0},
    {"B", 0.0, 10.0},
    {"R", 0.0, 2.0},
    {"Q", 0.0, 1.0},
    {"R_prime", 0.0, 2.0},
    {"Q_prime", 0.0, 1.0},
    {"t_p", 1.0, 30.0},
    {"t_p_prime", 1.0, 30.0},
    {"M", 0.0, kInf},
}};

constexpr std::array<Param, kParamCount> kAll{Param::t0, Param::delta_t0, Param::pm_over_p0, Param::a,
                                              Param::k,  Param::n_G0,     Param::n_B0,       Param::A,
                                              Param::B,  Param::R,        Param::Q,          Param::R_g,
                                              Param::Q_g, Param::t_p,     Param::t_p_g,      Param::M};

FailureDistribution failure(double lifetime, double spread) {
  return spread > 0.0 ? FailureDistribution::gaussian(lifetime, spread) : FailureDistribution::dirac(lifetime);
}

}  // namespace

const ParamInfo& param_info(Param p) { return kInfo[static_cast<std::size_t>(p)]; }

std::optional<Param> param_from_key(std::string_view key) {
  for (Param p : kAll)
    if (key == param_info(p).key) return p;
  return std::nullopt;
}

const std::array<Param, kParamCount>& all_params() { return kAll; }

BassParams PlcModel::bass() const { return {get(Param::A), get(Param::B), get(Param::n_B0)}; }

GompertzParams PlcModel::gompertz() const {
  return {get(Param::n_G0), get(Param::k), get(Param::a), get(Param::delta_t0)};
}

RepurchaseParams PlcModel::bass_repurchase() const {
  return {get(Param::R), get(Param::Q), failure(has(Param::t_p) ? get(Param::t_p) : 30.0, lifetime_spread), recurrent};
}

RepurchaseParams PlcModel::gompertz_repurchase() const {
  return {get(Param::R_g), get(Param::Q_g), failure(has(Param::t_p_g) ? get(Param::t_p_g) : 30.0, lifetime_spread),
          recurrent};
}

void PlcModel::validate() const {
  for (Param p : kAll) {
    if (!has(p)) continue;
    const auto& info = param_info(p);
    const double v = get(p);
    if (!std::isfinite(v) || v < info.lower || v > info.upper)
      throw InvalidParameterError(std::string("parameter ") + info.key + " = " + std::to_string(v) + " outside [" +
                                  std::to_string(info.lower) + ", " + std::to_string(info.upper) + "]");
  }
  if (has(Param::M) && !(get(Param::M) > 0.0)) throw InvalidParameterError("market potential M must be positive");
  if (!has_bass() && !has_gompertz()) throw InvalidParameterError("model needs n_B0 > 0 or n_G0 > 0");
  if (has_bass()) {
    bass().validate();
    if (get(Param::R) > 0.0 && !has(Param::t_p)) throw InvalidParameterError("replacement R needs a lifetime t_p");
  }
  if (has_gompertz()) {
    gompertz().validate();
    if (get(Param::R_g) > 0.0 && !has(Param::t_p_g))
      throw InvalidParameterError("replacement R_prime needs a lifetime t_p_prime");
  }
  if (!(lifetime_spread >= 0.0)) throw InvalidParameterError("lifetime spread must be non-negative");
  const double sum = get(Param::n_B0) + get(Param::n_G0);
  if (sum > 1.0 + 1e-12) throw InvalidParameterError("n_B0 + n_G0 must not exceed 1");
}

PlcModel preset(std::string_view name) {
  PlcModel m;
  m.name = std::string(name);
  if (name == "bw_tv") {
    m.set(Param::t0, 1948);
    m.set(Param::delta_t0, 0.0);
    m.set(Param::pm_over_p0, 0.33);
    m.set(Param::a, 0.2);
    m.set(Param::k, 8.5);
    m.set(Param::n_G0, 0.77);
    m.set(Param::n_B0, 0.18);
    m.set(Param::A, 0.02);
    m.set(Param::B, 2.5);
    m.set(Param::R, 0.3);
    m.set(Param::Q, 0.06);
    m.set(Param::R_g, 0.65);
    m.set(Param::Q_g, 0.06);
    m.set(Param::t_p, 9.2);
    m.set(Param::t_p_g, 10.2);
    m.set(Param::M, 53e6);
  } else if (name == "colour_tv") {
    m.set(Param::t0, 1954);
    m.set(Param::delta_t0, 0.5);
    m.set(Param::pm_over_p0, 0.0);
    m.set(Param::a, 0.103);
    m.set(Param::k, 27);
    m.set(Param::n_G0, 0.97);
    m.set(Param::n_B0, 0.01);
    m.set(Param::A, 0.001);
    m.set(Param::B, 1.8);
  } else if (name == "c_class") {
    // Lifetime from the reported mean lifetime of about 8 years.
    m.set(Param::t0, 1979);
    m.set(Param::n_B0, 1.0);
    m.set(Param::A, 0.004);
    m.set(Param::B, 0.58);
    m.set(Param::R, 1.2);
    m.set(Param::Q, 0.05);
    m.set(Param::t_p, 8.0);
    m.set(Param::M, 1.1e6);
  } else if (name == "s_class") {
    // Lifetime from the reported mean lifetime of about 16 years.
    m.set(Param::t0, 1964);
    m.set(Param::n_B0, 1.0);
    m.set(Param::A, 0.02);
    m.set(Param::B, 0.5);
    m.set(Param::R, 1.0);
    m.set(Param::Q, 0.15);
    m.set(Param::t_p, 16.0);
    m.set(Param::M, 0.27e6);
  } else {
    throw InvalidParameterError("unknown preset '" + std::string(name) + "'");
  }
  return m;
}

std::vector<std::string> preset_names() { return {"bw_tv", "colour_tv", "c_class", "s_class"}; }

SalesSeries shifted_gompertz_rate(const GompertzParams& g, double t0, double dt, std::size_t n) {
  return SalesSeries::sample(t0, dt, n, [&](double t) { return t < g.delay ? 0.0 : gompertz_rate(t - g.delay, g); });
}

SalesSeries shifted_gompertz_cumulative(const GompertzParams& g, double t0, double dt, std::size_t n) {
  return SalesSeries::sample(t0, dt, n,
                             [&](double t) { return t < g.delay ? 0.0 : gompertz_cumulative(t - g.delay, g); });
}

std::vector<std::pair<std::string, SalesSeries>> PlcComponents::named() const {
  return {{"bass_first", bass_first},         {"bass_branch", bass_branch}, {"gompertz_first", gompertz_first},
          {"gompertz_branch", gompertz_branch}, {"total", total},          {"penetration", penetration},
          {"price", price}};
}

PlcComponents assemble_plc(const PlcModel& model, double dt, std::size_t n) {
  model.validate();
  require_positive_dt(dt);
  const double t0 = model.get(Param::t0);
  const SalesSeries zero = SalesSeries::sample(t0, dt, n, [](double) { return 0.0; });
  PlcComponents c;
  c.bass_first = c.bass_branch = c.gompertz_first = c.gompertz_branch = zero;
  SalesSeries bass_adopters = zero, gompertz_adopters = zero;

  if (model.has_bass()) {
    const BassParams b = model.bass();
    c.bass_first = SalesSeries::sample(t0, dt, n, [&](double t) { return bass_rate(t, b); });
    bass_adopters = SalesSeries::sample(t0, dt, n, [&](double t) { return bass_cumulative(t, b); });
    c.bass_branch = branch_plc(c.bass_first, bass_adopters, model.bass_repurchase());
  }
  const double delay = model.get(Param::delta_t0);
  const double ratio = model.get(Param::pm_over_p0);
  const double a = model.get(Param::a);
  if (model.has_gompertz()) {
    const GompertzParams g = model.gompertz();
    c.gompertz_first = shifted_gompertz_rate(g, t0, dt, n);
    gompertz_adopters = shifted_gompertz_cumulative(g, t0, dt, n);
    c.gompertz_branch = branch_plc(c.gompertz_first, gompertz_adopters, model.gompertz_repurchase());
    c.price = SalesSeries::sample(
        t0, dt, n, [&](double t) { return t < delay ? 1.0 : ratio + (1.0 - ratio) * std::exp(-a * (t - delay)); });
  } else {
    c.price = SalesSeries::sample(t0, dt, n, [](double) { return 1.0; });
  }
  c.total = c.bass_branch + c.gompertz_branch;
  c.penetration = bass_adopters + gompertz_adopters;
  return c;
}

}  // namespace plc
