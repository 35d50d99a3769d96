#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plc/diffusion.hpp"
#include "plc/repurchase.hpp"
#include "plc/series.hpp"

namespace plc {

// Columns of the characteristic-parameter table, in table order. The `_g`
// entries belong to the Gompertz branch (primed in the usual notation).
enum class Param : std::size_t {
  t0,
  delta_t0,
  pm_over_p0,
  a,
  k,
  n_G0,
  n_B0,
  A,
  B,
  R,
  Q,
  R_g,
  Q_g,
  t_p,
  t_p_g,
  M,
};
inline constexpr std::size_t kParamCount = 16;

struct ParamInfo {
  const char* key;  // config/CSV name
  double lower;
  double upper;
};

const ParamInfo& param_info(Param p);
std::optional<Param> param_from_key(std::string_view key);
// All parameters in table order.
const std::array<Param, kParamCount>& all_params();

// One column of the table. Entries not given for a product are inactive and
// read as zero; an inactive R or Q switches that repurchase channel off, an
// inactive n_G0 or n_B0 switches the whole branch off.
struct PlcModel {
  std::string name;
  std::array<double, kParamCount> value{};
  std::array<bool, kParamCount> active{};
  bool recurrent = true;        // replacement sales are replaced again
  double lifetime_spread = 0.0; // > 0 selects a Gaussian failure law

  double get(Param p) const { return active[static_cast<std::size_t>(p)] ? value[static_cast<std::size_t>(p)] : 0.0; }
  void set(Param p, double v) {
    value[static_cast<std::size_t>(p)] = v;
    active[static_cast<std::size_t>(p)] = true;
  }
  bool has(Param p) const { return active[static_cast<std::size_t>(p)]; }
  void clear(Param p) {
    value[static_cast<std::size_t>(p)] = 0.0;
    active[static_cast<std::size_t>(p)] = false;
  }

  bool has_bass() const { return get(Param::n_B0) > 0.0; }
  bool has_gompertz() const { return get(Param::n_G0) > 0.0; }
  double potential() const { return has(Param::M) ? get(Param::M) : 1.0; }

  BassParams bass() const;
  GompertzParams gompertz() const;
  RepurchaseParams bass_repurchase() const;
  RepurchaseParams gompertz_repurchase() const;

  // Active entries within their bounds; structure consistent (a branch with
  // replacement needs a lifetime).
  void validate() const;
};

// Presets: "bw_tv", "colour_tv", "c_class", "s_class".
PlcModel preset(std::string_view name);
std::vector<std::string> preset_names();

struct PlcComponents {
  SalesSeries bass_first;       // Bass adoption rate
  SalesSeries bass_branch;      // plus replacement and multiple purchase
  SalesSeries gompertz_first;   // Gompertz adoption rate, delayed by delta_t0
  SalesSeries gompertz_branch;  // plus its repurchase channels
  SalesSeries total;
  SalesSeries penetration;  // n_B(t) + n_G(t - delta_t0)
  SalesSeries price;        // p/p0, exponential decline from the Gompertz origin

  // Named list in output order.
  std::vector<std::pair<std::string, SalesSeries>> named() const;
};

// Assembles the model on n samples spaced dt from calendar year t0 (in
// fractions of the market potential).
PlcComponents assemble_plc(const PlcModel& model, double dt, std::size_t n);

// Sales of the Gompertz origin shifted by delta_t0: first-purchase rate at
// t - delta_t0 on each grid point, zero before the origin.
SalesSeries shifted_gompertz_rate(const GompertzParams& g, double t0, double dt, std::size_t n);
SalesSeries shifted_gompertz_cumulative(const GompertzParams& g, double t0, double dt, std::size_t n);

}  // namespace plc
