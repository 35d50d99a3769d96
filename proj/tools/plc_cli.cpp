// Batch front end: scenario files in, CSV or plot-data files out.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plc/competition.hpp"
#include "plc/config.hpp"
#include "plc/dataset.hpp"
#include "plc/error.hpp"
#include "plc/fit.hpp"
#include "plc/income_market.hpp"
#include "plc/peaks.hpp"
#include "plc/scenario.hpp"
#include "plc/stochastic_sizes.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kValidation = 2;
constexpr int kNotConverged = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string format = "csv";
  std::string section;
};

plc::EmitFormat emit_format(const Globals& g) {
  if (g.format == "csv") return plc::EmitFormat::csv;
  if (g.format == "plot") return plc::EmitFormat::plot_data;
  throw plc::InvalidParameterError("--format must be 'csv' or 'plot'");
}

std::string ext(const Globals& g) { return g.format == "csv" ? ".csv" : ".dat"; }

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

plc::ScenarioFile need_config(const Globals& g) {
  if (g.config.empty()) throw plc::InvalidParameterError("--config is required for this command");
  return plc::load_config(g.config);
}

// Sections of `kind`, narrowed to --section when given.
std::vector<const plc::Section*> select(const plc::ScenarioFile& file, const Globals& g, const std::string& kind) {
  auto all = file.of_kind(kind);
  if (!g.section.empty()) {
    const plc::Section* s = file.find(g.section);
    if (!s || s->text("kind", "") != kind)
      throw plc::InvalidParameterError("no [" + g.section + "] section of kind " + kind);
    return {s};
  }
  if (all.empty()) throw plc::InvalidParameterError(g.config + ": no section of kind " + kind);
  return all;
}

void print_peaks(const std::string& name, const plc::SalesSeries& total) {
  std::cout << name << " peaks:";
  for (const auto& p : plc::local_maxima(total)) std::cout << ' ' << plc::format_double(std::round(p.time * 100) / 100);
  std::cout << '\n';
}

int run_simulate(const Globals& g, const std::string& preset_name) {
  std::vector<std::pair<plc::PlcModel, plc::PlcGrid>> jobs;
  if (!preset_name.empty()) {
    jobs.push_back({plc::preset(preset_name), plc::PlcGrid{}});
  } else {
    const auto file = need_config(g);
    for (const auto* s : select(file, g, "plc")) jobs.push_back({plc::plc_model_from(*s), plc::plc_grid_from(*s)});
  }
  for (const auto& [model, grid] : jobs) {
    const auto c = plc::assemble_plc(model, grid.dt, grid.samples());
    const std::string path = out_path(g, model.name + "_plc" + ext(g));
    plc::emit(c.named(), path, emit_format(g));
    print_peaks(model.name, c.total);
    std::cout << "wrote " << path << '\n';
  }
  return kOk;
}

std::optional<plc::Dataset> maybe_load(const plc::Section& s, const std::string& key, plc::DataKind kind,
                                       const fs::path& base) {
  if (!s.has(key)) return std::nullopt;
  fs::path p = s.text(key);
  if (p.is_relative()) p = base / p;
  plc::DataUnits units = kind == plc::DataKind::price ? plc::DataUnits::currency : plc::DataUnits::fraction;
  if (s.has(key + "_units")) units = plc::parse_units(s.text(key + "_units"));
  return plc::load_csv(p.string(), kind, units);
}

int run_fit(const Globals& g) {
  const auto file = need_config(g);
  const fs::path base = fs::path(g.config).parent_path();
  bool all_converged = true;
  for (const auto* s : select(file, g, "fit")) {
    s->require_known({"kind", "prior", "sales", "sales_units", "price", "price_units", "penetration",
                      "penetration_units", "threads", "keep", "max_evals"});
    const std::string prior_name = s->text("prior");
    plc::PlcModel prior;
    if (const auto* ps = file.find(prior_name))
      prior = plc::plc_model_from(*ps);
    else
      prior = plc::preset(prior_name);

    plc::FitOptions opt;
    opt.threads = static_cast<unsigned>(s->count("threads", 1));
    opt.keep = s->count("keep", opt.keep);
    opt.simplex.max_evals = s->count("max_evals", opt.simplex.max_evals);

    plc::FitResult fit;
    const auto sales = maybe_load(*s, "sales", plc::DataKind::sales, base);
    const auto price = maybe_load(*s, "price", plc::DataKind::price, base);
    const auto pen = maybe_load(*s, "penetration", plc::DataKind::penetration, base);
    if (sales) {
      fit = plc::fit_plc(*sales, prior, {price, pen}, opt);
    } else if (pen) {
      plc::GompertzFitOptions go;
      go.origin = prior.get(plc::Param::t0);
      if (prior.has_bass()) go.bass = prior.bass();
      std::optional<double> a;
      if (price) {
        const auto pf = plc::fit_price_curve(*price, opt);
        if (pf.converged) a = pf.parameters.get(plc::Param::a);
        // Prices are quoted from market entry on, which fixes the delay.
        go.fit_delay = false;
        go.delay = std::max(0.0, price->series.t0 - *go.origin);
      }
      fit = plc::fit_gompertz(*pen, a, go, opt);
    } else if (price) {
      fit = plc::fit_price_curve(*price, opt);
    } else {
      throw plc::InvalidParameterError("[" + s->name + "] needs sales, penetration or price data");
    }
    fit.parameters.name = s->name;
    fit.check_bounds();
    const std::string path = out_path(g, s->name + "_fit" + ext(g));
    plc::emit(fit, path, emit_format(g));
    std::cout << fit.to_csv();
    for (const auto& n : fit.notes) std::cout << "note: " << n << '\n';
    std::cout << "wrote " << path << '\n';
    if (sales) {
      const auto& ser = sales->series;
      const double t0 = fit.parameters.get(plc::Param::t0);
      const auto n = static_cast<std::size_t>(std::llround((ser.time(ser.size() - 1) - t0) / ser.dt)) + 1;
      const auto c = plc::assemble_plc(fit.parameters, ser.dt, n);
      const std::string curve = out_path(g, s->name + "_fitted_plc" + ext(g));
      plc::emit(c.named(), curve, emit_format(g));
      std::cout << "wrote " << curve << '\n';
    }
    all_converged = all_converged && fit.converged;
  }
  return all_converged ? kOk : kNotConverged;
}

int run_compete(const Globals& g) {
  const auto file = need_config(g);
  for (const auto* s : select(file, g, "competition")) {
    const auto setup = plc::competition_from(*s, g.seed);
    const auto runs = plc::simulate_ensemble(setup.config, setup.runs);
    const auto& first = runs.front();

    std::ostringstream traj;
    traj << "t,brand_id,share,price,sales\n";
    for (const auto& r : first.rows)
      traj << plc::format_double(r.t) << ',' << r.brand << ',' << plc::format_double(r.share) << ','
           << plc::format_double(r.price) << ',' << plc::format_double(r.sales) << '\n';
    const std::string tpath = out_path(g, s->name + "_trajectory.csv");
    plc::write_text(tpath, traj.str());

    // Ensemble mean of the sales-weighted mean price, and its variance.
    std::vector<std::pair<std::string, plc::SalesSeries>> comps(2);
    comps[0].first = "mean_price";
    comps[1].first = "price_variance";
    const double t0 = first.time.front();
    const double dt = first.time.size() > 1 ? first.time[1] - first.time[0] : 1.0;
    for (auto& c : comps) c.second = plc::SalesSeries{t0, dt, std::vector<double>(first.time.size(), 0.0)};
    for (const auto& r : runs)
      for (std::size_t i = 0; i < first.time.size(); ++i) {
        comps[0].second.values[i] += r.mean_price[i] / static_cast<double>(runs.size());
        comps[1].second.values[i] += r.price_variance[i] / static_cast<double>(runs.size());
      }
    const std::string mpath = out_path(g, s->name + "_mean_price" + ext(g));
    plc::emit(comps, mpath, emit_format(g));
    std::cout << s->name << ": " << runs.size() << " run(s), final mean price "
              << plc::format_double(comps[0].second.values.back()) << '\n'
              << "wrote " << tpath << "\nwrote " << mpath << '\n';
  }
  return kOk;
}

int run_sizedist(const Globals& g) {
  const auto file = need_config(g);
  for (const auto* s : select(file, g, "gibrat")) {
    const auto cfg = plc::gibrat_from(*s, g.seed);
    const auto sample = plc::gibrat_simulate(cfg);
    std::ostringstream os;
    os << "unit_id,size\n";
    for (std::size_t i = 0; i < sample.sizes.size(); ++i) os << i << ',' << plc::format_double(sample.sizes[i]) << '\n';
    const std::string spath = out_path(g, s->name + "_sizes.csv");
    plc::write_text(spath, os.str());

    std::ostringstream rep;
    rep << "metric,value\n";
    rep << "n," << sample.sizes.size() << '\n' << "resampled_draws," << sample.resampled << '\n';
    if (sample.sizes.size() >= 1000) {
      const auto r = plc::normality_test(sample.sizes);
      rep << "mean_log," << plc::format_double(r.mean_log) << '\n'
          << "variance_log," << plc::format_double(r.variance_log) << '\n'
          << "variance_log_expected," << plc::format_double(cfg.volatility * cfg.volatility * cfg.horizon) << '\n'
          << "skewness_log," << plc::format_double(r.skewness) << '\n'
          << "excess_kurtosis_log," << plc::format_double(r.excess_kurtosis) << '\n'
          << "ks_distance," << plc::format_double(r.ks_distance) << '\n'
          << "ks_critical_95," << plc::format_double(r.ks_critical_95) << '\n'
          << "degenerate," << (r.degenerate ? 1 : 0) << '\n';
    }
    const std::string rpath = out_path(g, s->name + "_report.csv");
    plc::write_text(rpath, rep.str());
    std::cout << rep.str() << "wrote " << spath << "\nwrote " << rpath << '\n';
  }
  return kOk;
}

int run_volume(const Globals& g) {
  const auto file = need_config(g);
  for (const auto* s : select(file, g, "volume")) {
    const auto sweep = plc::volume_sweep_from(*s);
    std::ostringstream os;
    const bool csv = g.format == "csv";
    os << (csv ? "mu,value,component\n" : "# mu value\n");
    const double step = (sweep.price_max - sweep.price_min) / static_cast<double>(sweep.points - 1);
    for (const char* comp : {"volume", "density", "slope"}) {
      if (!csv && std::string(comp) != "volume") os << "\n\n";
      if (!csv) os << "# component " << comp << '\n';
      for (std::size_t i = 0; i < sweep.points; ++i) {
        const double mu = sweep.price_min + step * static_cast<double>(i);
        const std::string c = comp;
        const double v = c == "volume"    ? plc::market_volume(mu, sweep.volume)
                         : c == "density" ? plc::volume_density(mu, sweep.volume)
                                          : plc::volume_density_slope(mu, sweep.volume);
        os << plc::format_double(mu) << (csv ? ',' : ' ') << plc::format_double(v);
        if (csv) os << ',' << comp;
        os << '\n';
      }
    }
    const std::string path = out_path(g, s->name + "_volume" + ext(g));
    plc::write_text(path, os.str());
    std::cout << "wrote " << path << '\n';
  }
  return kOk;
}

int run_substitute(const Globals& g) {
  const auto file = need_config(g);
  for (const auto* s : select(file, g, "substitution")) {
    const auto setup = plc::substitution_from(*s);
    const auto n = static_cast<std::size_t>(std::floor(setup.t_max / setup.dt + 1e-9)) + 1;
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = setup.dt * static_cast<double>(i);
    const auto closed = plc::fisher_pry(times, setup.theta, setup.offset);
    const auto ode = plc::fisher_pry_ode(times, setup.theta, closed.front());
    std::vector<std::pair<std::string, plc::SalesSeries>> comps{
        {"closed_form", plc::SalesSeries{0.0, setup.dt, closed}}, {"ode", plc::SalesSeries{0.0, setup.dt, ode}}};
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) gap = std::max(gap, std::abs(closed[i] - ode[i]));
    const std::string path = out_path(g, s->name + "_substitution" + ext(g));
    plc::emit(comps, path, emit_format(g));
    std::cout << s->name << ": theta " << plc::format_double(setup.theta) << ", max |closed - ode| "
              << plc::format_double(gap) << "\nwrote " << path << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Product life cycle models: diffusion, repurchase, competition and size distributions"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Scenario file (INI)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the random seed of every scenario");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "Output format: csv or plot")->capture_default_str();
  app.add_option("--section", g.section, "Run only this section of the scenario file");

  std::string preset_name;
  auto* simulate = app.add_subcommand("simulate", "Assemble a product life cycle");
  simulate->add_option("--preset", preset_name, "Built-in column: bw_tv, colour_tv, c_class, s_class");
  auto* fit = app.add_subcommand("fit", "Estimate parameters from CSV data");
  auto* compete = app.add_subcommand("compete", "Brand competition under replicator or micro dynamics");
  auto* sizedist = app.add_subcommand("sizedist", "Gibrat growth and the lognormal size law");
  auto* volume = app.add_subcommand("volume", "Market volume against real price");
  auto* substitute = app.add_subcommand("substitute", "Fisher-Pry logistic substitution");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    emit_format(g);
    if (*simulate) return run_simulate(g, preset_name);
    if (*fit) return run_fit(g);
    if (*compete) return run_compete(g);
    if (*sizedist) return run_sizedist(g);
    if (*volume) return run_volume(g);
    if (*substitute) return run_substitute(g);
  } catch (const plc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.validation() ? kValidation : kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
