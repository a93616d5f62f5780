// Command-line runner for the pilot-wave experiments. Every subcommand writes
// CSV/JSON artifacts under an output prefix plus a manifest recording the
// tool version, a hash of the effective configuration, the seed and the
// tolerances in effect.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pilotwave/density.hpp"
#include "pilotwave/drift_field.hpp"
#include "pilotwave/entropy.hpp"
#include "pilotwave/errors.hpp"
#include "pilotwave/field_models.hpp"
#include "pilotwave/guidance.hpp"
#include "pilotwave/io.hpp"
#include "pilotwave/oscillator.hpp"
#include "pilotwave/parallel.hpp"
#include "pilotwave/spectral_line.hpp"
#include "pilotwave/stats.hpp"
#include "pilotwave/vorticity.hpp"

namespace pw = pilotwave;
namespace io = pilotwave::io;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

struct Globals {
  unsigned workers = 0;
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 0.0;  // 0: the module's own default
  double node_guard = 1e-12;
};

/// Shared state of one invocation: output prefix, seed and manifest.
class Run {
 public:
  Run(std::string prefix, std::uint64_t seed, const Globals& g) : prefix_(std::move(prefix)), globals_(g) {
    manifest.seed = seed;
  }

  std::uint64_t seed() const { return manifest.seed; }
  const Globals& globals() const { return globals_; }

  /// Output path `prefix + suffix`, registered in the manifest.
  fs::path output(const std::string& suffix) {
    fs::path p = prefix_ + suffix;
    manifest.outputs.push_back(p.filename().string());
    return p;
  }

  pw::IntegratorSettings integrator(double module_max_step = kTwoPi / 1000) {
    pw::IntegratorSettings s;
    s.rtol = globals_.rtol;
    s.atol = globals_.atol;
    s.max_step = globals_.max_step > 0 ? globals_.max_step : module_max_step;
    s.node_guard = globals_.node_guard;
    manifest.tolerances["rtol"] = s.rtol;
    manifest.tolerances["atol"] = s.atol;
    manifest.tolerances["max_step"] = s.max_step;
    manifest.tolerances["node_guard"] = s.node_guard;
    return s;
  }

  pw::ode::Settings ode(double module_max_step = kTwoPi / 1000) {
    auto s = integrator(module_max_step).ode();
    manifest.tolerances.erase("node_guard");
    return s;
  }

  void write_manifest() {
    manifest.outputs.push_back(fs::path(prefix_ + "_manifest.json").filename().string());
    io::write_json(prefix_ + "_manifest.json", manifest.to_json());
  }

  io::Manifest manifest;

 private:
  std::string prefix_;
  Globals globals_;
};

void write_histogram(const fs::path& path, const pw::stats::Histogram& h) {
  io::CsvWriter csv(path, {"bin_lo", "bin_hi", "density"});
  const auto d = h.density();
  for (std::size_t k = 0; k < h.bins(); ++k) csv.row({h.edge(k), h.edge(k + 1), d[k]});
}

std::vector<double> finite(const std::vector<double>& x) {
  std::vector<double> out;
  for (double v : x)
    if (std::isfinite(v)) out.push_back(v);
  return out;
}

/// Wave function given as a JSON file or as a random state of cutoff m.
struct StateSource {
  std::string file;
  int random_m = 0;

  void add(CLI::App* sc) {
    auto* f = sc->add_option("--state", file, "state JSON file {basis, m, coeffs: [[n1, n2, re, im], ...]}");
    auto* r = sc->add_option("--random-m", random_m, "use random_state(m, seed) instead of a file")
                  ->check(CLI::Range(1, pw::kMaxCutoff));
    f->excludes(r);
  }

  bool given() const { return !file.empty() || random_m > 0; }

  pw::OscillatorState load(std::uint64_t seed) const {
    if (!file.empty()) return pw::load_state(file);
    if (random_m > 0) return pw::random_state(random_m, seed);
    throw pw::InvalidArgument("one of --state or --random-m is required");
  }
};

json state_summary(const pw::OscillatorState& s) {
  json j = pw::state_to_json(s);
  try {
    const auto v = pw::total_vorticity(s);
    j["vorticity_over_2pi"] = v.winding;
    j["vorticity_category"] = pw::to_string(v.category);
  } catch (const pw::Indeterminate&) {
    j["vorticity_over_2pi"] = nullptr;
    j["vorticity_category"] = "indeterminate";
  }
  return j;
}

using Runner = std::function<int(Run&)>;

struct Command {
  CLI::App* app;
  std::string out;
  std::uint64_t seed = 0;
  Runner run;
};

// ---- subcommands -------------------------------------------------------------

Runner add_vorticity_census(CLI::App* sc) {
  struct Opt {
    int m = 2;
    int n = 10000;
  };
  auto o = std::make_shared<Opt>();
  sc->add_option("--m", o->m, "energy cutoff")->required()->check(CLI::Range(1, pw::kMaxCutoff));
  sc->add_option("--n", o->n, "number of random states")->check(CLI::PositiveNumber);
  return [o](Run& run) {
    struct Row {
      std::uint64_t seed;
      std::optional<pw::VorticityClass> v;
    };
    const auto rows = pw::parallel_map(
        static_cast<std::size_t>(o->n),
        [&](std::size_t k) {
          Row r{pw::sub_seed(run.seed(), k), std::nullopt};
          try {
            r.v = pw::total_vorticity(pw::random_state(o->m, r.seed));
          } catch (const pw::Indeterminate&) {
          }
          return r;
        },
        run.globals().workers);

    io::CsvWriter csv(run.output(".csv"), {"m", "seed", "vorticity_over_2pi", "category"});
    std::map<int, long> counts;
    long indeterminate = 0;
    for (const auto& r : rows) {
      if (r.v) {
        ++counts[r.v->winding];
        csv.row({static_cast<long long>(o->m), std::to_string(r.seed), static_cast<long long>(r.v->winding),
                 pw::to_string(r.v->category)});
      } else {
        ++indeterminate;
        csv.row({static_cast<long long>(o->m), std::to_string(r.seed), std::string{}, std::string{"indeterminate"}});
      }
    }
    json fractions = json::object(), cnt = json::object();
    for (const auto& [w, c] : counts) {
      cnt[std::to_string(w)] = c;
      fractions[std::to_string(w)] = static_cast<double>(c) / o->n;
    }
    io::write_json(run.output("_summary.json"), {{"m", o->m},
                                                 {"n", o->n},
                                                 {"counts", cnt},
                                                 {"fractions", fractions},
                                                 {"indeterminate", indeterminate}});
    run.manifest.tolerances["unit_circle_margin"] = 1e-9;
    return 0;
  };
}

Runner add_find_nodes(CLI::App* sc) {
  struct Opt {
    StateSource state;
    double t = 0.0;
    double t_end = std::nan("");
    double dt = 0.05;
    double half_width = 0.0;
    int grid = 256;
  };
  auto o = std::make_shared<Opt>();
  o->state.add(sc);
  sc->add_option("--t", o->t, "time of the node scan (start of tracking)");
  sc->add_option("--t-end", o->t_end, "track nodes from --t to this time");
  sc->add_option("--dt", o->dt, "tracking step")->check(CLI::PositiveNumber);
  sc->add_option("--half-width", o->half_width, "search box [-L, L]^2; 0 picks the state default");
  sc->add_option("--grid", o->grid, "search cells per side")->check(CLI::Range(8, 4096));
  return [o](Run& run) {
    const auto state = o->state.load(run.seed());
    auto box = pw::default_node_box(state);
    if (o->half_width > 0) box = pw::GridSpec::square(o->half_width, o->grid);
    box.nx = box.ny = o->grid;
    run.manifest.tolerances["newton_merge"] = 1e-6;
    run.manifest.tolerances["charge_loop_radius"] = 1e-3;

    io::CsvWriter nodes(run.output("_nodes.csv"), {"T", "Qx", "Qy", "charge"});
    json summary = {{"state", state_summary(state)},
                    {"box", {box.xmin, box.xmax, box.ymin, box.ymax}},
                    {"grid", o->grid}};
    if (std::isnan(o->t_end)) {
      const auto set = pw::find_nodes(state, o->t, box);
      for (const auto& n : set.nodes) nodes.row({n.t, n.q.qx, n.q.qy, static_cast<long long>(n.charge)});
      summary["T"] = o->t;
      summary["count"] = set.nodes.size();
      summary["total_charge"] = set.total_charge();
    } else {
      const auto track = pw::track_nodes(state, o->t, o->t_end, o->dt, box);
      json per = json::array();
      for (std::size_t k = 0; k < track.snapshots.size(); ++k) {
        for (const auto& n : track.snapshots[k].nodes)
          nodes.row({track.times[k], n.q.qx, n.q.qy, static_cast<long long>(n.charge)});
        per.push_back({{"T", track.times[k]},
                       {"count", track.snapshots[k].nodes.size()},
                       {"total_charge", track.snapshots[k].total_charge()}});
      }
      io::CsvWriter events(run.output("_events.csv"), {"T", "Qx", "Qy", "kind", "charge"});
      for (const auto& e : track.events)
        events.row({e.t, e.q.qx, e.q.qy, pw::to_string(e.kind), static_cast<long long>(e.charge)});
      summary["snapshots"] = per;
      summary["events"] = track.events.size();
    }
    io::write_json(run.output("_summary.json"), summary);
    return 0;
  };
}

struct DriftOptions {
  StateSource state;
  double eta_min = 4.0;
  double eta_max = 20.0;
  int grid = 100;
  double threshold = 1e-6;

  void add(CLI::App* sc) {
    state.add(sc);
    sc->add_option("--eta-min", eta_min, "inner radius")->check(CLI::PositiveNumber);
    sc->add_option("--eta-max", eta_max, "outer radius")->check(CLI::PositiveNumber);
    sc->add_option("--grid", grid, "points per polar axis")->check(CLI::Range(4, 2000));
    sc->add_option("--threshold", threshold, "ring averages below this are ignored when counting sign changes");
  }

  pw::DriftField build(Run& run, const pw::OscillatorState& s) const {
    pw::PolarGrid g{eta_min, eta_max, grid, grid};
    pw::DriftSettings ds;
    ds.integrator = run.integrator(ds.integrator.max_step);
    ds.workers = run.globals().workers;
    run.manifest.tolerances["max_masked"] = ds.max_masked;
    run.manifest.tolerances["classify_threshold"] = threshold;
    return pw::build_drift_field(s, g, ds);
  }
};

json classification_json(const pw::OscillatorState& s, const pw::DriftField& f, const pw::DriftClassification& c) {
  json axes = json::array();
  for (const auto& a : c.axes) axes.push_back({{"phi", a.phi}, {"attractive", a.attractive}});
  const auto rb = pw::radial_balance(f);
  return {{"state", state_summary(s)},
          {"type", pw::to_string(c.type)},
          {"sign_changes", c.sign_changes},
          {"uniform_sign", c.uniform_sign},
          {"axes", axes},
          {"masked_fraction", f.masked_fraction()},
          {"radial_inward", rb.inward},
          {"radial_outward", rb.outward}};
}

Runner add_drift_field(CLI::App* sc) {
  auto o = std::make_shared<DriftOptions>();
  o->add(sc);
  return [o](Run& run) {
    const auto state = o->state.load(run.seed());
    const auto field = o->build(run, state);
    const auto cls = pw::classify(field, o->threshold);
    io::CsvWriter ang(run.output("_angular.csv"), {"eta", "phi", "d_phi", "masked"});
    io::CsvWriter rad(run.output("_radial.csv"), {"eta", "phi", "d_eta", "masked"});
    const auto& g = field.grid;
    for (int i = 0; i < g.n_eta; ++i)
      for (int j = 0; j < g.n_phi; ++j) {
        const auto k = g.index(i, j);
        const long long m = field.masked[k];
        ang.row({g.eta(i), g.phi(j), field.d_phi[k], m});
        rad.row({g.eta(i), g.phi(j), field.d_eta[k], m});
      }
    io::write_json(run.output("_classification.json"), classification_json(state, field, cls));
    return 0;
  };
}

Runner add_classify(CLI::App* sc) {
  auto o = std::make_shared<DriftOptions>();
  o->add(sc);
  return [o](Run& run) {
    const auto state = o->state.load(run.seed());
    const auto field = o->build(run, state);
    const auto cls = pw::classify(field, o->threshold);
    io::CsvWriter ring(run.output("_ring.csv"), {"phi", "mean_d_phi"});
    for (int j = 0; j < field.grid.n_phi; ++j)
      ring.row({field.grid.phi(j), cls.ring_average[static_cast<std::size_t>(j)]});
    io::write_json(run.output("_classification.json"), classification_json(state, field, cls));
    return 0;
  };
}

Runner add_long_drift(CLI::App* sc) {
  struct Opt {
    StateSource state;
    int n = 200;
    double eta_lo = 10.0;
    double eta_hi = 20.0;
    int periods = 1000;
  };
  auto o = std::make_shared<Opt>();
  o->state.add(sc);
  sc->add_option("--n", o->n, "trajectories")->check(CLI::PositiveNumber);
  sc->add_option("--eta-lo", o->eta_lo, "lower starting radius")->check(CLI::PositiveNumber);
  sc->add_option("--eta-hi", o->eta_hi, "upper starting radius")->check(CLI::PositiveNumber);
  sc->add_option("--periods", o->periods, "wave-function periods")->check(CLI::PositiveNumber);
  return [o](Run& run) {
    const auto state = o->state.load(run.seed());
    pw::DriftSettings ds;
    ds.integrator = run.integrator(ds.integrator.max_step);
    ds.workers = run.globals().workers;
    const auto r = pw::long_drift(state, o->n, o->eta_lo, o->eta_hi, o->periods, run.seed(), ds);
    io::CsvWriter csv(run.output(".csv"), {"eta_initial", "phi_initial", "eta_final", "delta_eta"});
    for (std::size_t k = 0; k < r.eta_initial.size(); ++k)
      csv.row({r.eta_initial[k], r.phi_initial[k], r.eta_final[k], r.eta_final[k] - r.eta_initial[k]});
    const auto ok = finite(r.eta_final);
    io::write_json(run.output("_summary.json"), {{"state", state_summary(state)},
                                                 {"periods", o->periods},
                                                 {"n", o->n},
                                                 {"failed", r.failed},
                                                 {"median_delta_eta", ok.empty() ? json(nullptr) : json(r.median_shift())}});
    return 0;
  };
}

Runner add_relax_density(CLI::App* sc) {
  struct Opt {
    StateSource state;
    double w = 0.5;
    int periods = 19;
    int grid = 256;
    double half_width = 8.0;
    int coarse = 32;
    std::string method = "fv";
    bool frames = false;
    bool control = false;
  };
  auto o = std::make_shared<Opt>();
  o->state.add(sc);
  sc->add_option("--w", o->w, "initial Gaussian width relative to the ground state")->check(CLI::PositiveNumber);
  sc->add_option("--periods", o->periods, "wave-function periods")->check(CLI::NonNegativeNumber);
  sc->add_option("--grid", o->grid, "cells per side")->check(CLI::Range(8, 4096));
  sc->add_option("--half-width", o->half_width, "domain [-L, L]^2")->check(CLI::PositiveNumber);
  sc->add_option("--coarse", o->coarse, "coarse cells per side for H")->check(CLI::PositiveNumber);
  sc->add_option("--method", o->method, "fv or backtrack")->check(CLI::IsMember({"fv", "backtrack"}));
  sc->add_flag("--frames", o->frames, "write the density after every period");
  sc->add_flag("--control", o->control, "also evolve the equilibrium density (fv only)");
  return [o](Run& run) {
    // Without a state the nine-mode superposition with phases from the seed.
    const auto state = o->state.given() ? o->state.load(run.seed()) : pw::nine_mode_state(run.seed());
    const auto g = pw::GridSpec::square(o->half_width, o->grid);
    const pw::CoarseGrain cg{o->coarse, o->coarse};
    cg.validate(g);
    const auto noneq = pw::NonequilibriumSpec::widened(o->w);
    std::vector<pw::DensityGrid> frames;
    std::vector<double> times, hbar, control;

    if (o->method == "fv") {
      pw::RelaxationSettings rs;
      rs.grid = g;
      rs.coarse = cg;
      rs.keep_frames = o->frames;
      rs.equilibrium_control = o->control;
      run.manifest.tolerances["cfl"] = rs.fv.cfl;
      run.manifest.tolerances["cap_factor"] = rs.fv.cap_factor;
      const auto r = pw::relaxation_run(state, noneq, o->periods, rs);
      run.manifest.tolerances["dt"] = r.stats.dt;
      times = r.times;
      hbar = r.hbar;
      control = r.control_hbar;
      frames = r.frames;
    } else {
      if (o->control) throw pw::InvalidArgument("--control needs --method fv");
      const double s2 = o->w * o->w / 2;
      const auto f0 = [&](double x, double y) {
        const double rho = std::exp(-(x * x + y * y) / (2 * s2)) / (2 * std::numbers::pi * s2);
        const double psi2 = std::norm(pw::eval_psi(state, {x, y}, 0.0));
        return psi2 > 1e-300 ? rho / psi2 : 0.0;
      };
      const auto settings = run.integrator();
      for (int p = 0; p <= o->periods; ++p) {
        const double t = p * kTwoPi;
        auto r = pw::evolve_backtrack(f0, state, t, g, settings, run.globals().workers);
        r.rho.t = t;
        times.push_back(t);
        hbar.push_back(pw::coarse_grained_H(r.rho, pw::born_density(state, t, g), cg));
        if (o->frames) frames.push_back(std::move(r.rho));
      }
    }

    std::vector<std::string> header{"T", "Hbar"};
    if (!control.empty()) header.push_back("Hbar_control");
    io::CsvWriter csv(run.output("_hbar.csv"), header);
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (control.empty()) csv.row({times[k], hbar[k]});
      else csv.row({times[k], hbar[k], control[k]});
    }
    for (std::size_t k = 0; k < frames.size(); ++k) {
      frames[k].t = times[k];
      char name[32];
      std::snprintf(name, sizeof name, "_frame_%04zu", k);
      const fs::path prefix = run.output(name).string();
      run.manifest.outputs.back() += ".bin";
      run.manifest.outputs.push_back(prefix.filename().string() + ".json");
      io::write_frame(prefix, frames[k]);
    }
    io::write_json(run.output("_summary.json"), {{"state", state_summary(state)},
                                                 {"method", o->method},
                                                 {"w", o->w},
                                                 {"periods", o->periods},
                                                 {"hbar_initial", hbar.front()},
                                                 {"hbar_final", hbar.back()},
                                                 {"ratio", hbar.front() > 0 ? hbar.back() / hbar.front() : 0.0}});
    return 0;
  };
}

Runner add_trajectories(CLI::App* sc) {
  struct Opt {
    StateSource state;
    double qx = 1.0;
    double qy = 0.0;
    double t0 = 0.0;
    double t1 = kTwoPi;
  };
  auto o = std::make_shared<Opt>();
  o->state.add(sc);
  sc->add_option("--qx", o->qx, "initial Qx");
  sc->add_option("--qy", o->qy, "initial Qy");
  sc->add_option("--t0", o->t0, "start time");
  sc->add_option("--t1", o->t1, "end time");
  return [o](Run& run) {
    const auto state = o->state.load(run.seed());
    const auto traj = pw::integrate(state, {o->qx, o->qy}, o->t0, o->t1, run.integrator());
    io::CsvWriter csv(run.output(".csv"), {"T", "Qx", "Qy"});
    for (const auto& s : traj.samples) csv.row({s.t, s.q.qx, s.q.qy});
    return 0;
  };
}

Runner add_decay(CLI::App* sc) {
  struct Opt {
    double w = 1.0;
    int n = 10000;
    double t = std::numbers::pi;
    double omega = 1.0;
    double g = 1.0;
    int bins = 60;
  };
  auto o = std::make_shared<Opt>();
  sc->add_option("--w", o->w, "widening of the excited-mode coordinate")->check(CLI::PositiveNumber);
  sc->add_option("--n", o->n, "ensemble size")->check(CLI::Range(2, 100'000'000));
  sc->add_option("--t", o->t, "evolution time");
  sc->add_option("--omega", o->omega, "mode frequency")->check(CLI::PositiveNumber);
  sc->add_option("--g", o->g, "coupling")->check(CLI::PositiveNumber);
  sc->add_option("--bins", o->bins, "marginal histogram bins")->check(CLI::PositiveNumber);
  return [o](Run& run) {
    const pw::DecayConfig cfg{o->omega, o->g};
    cfg.validate();
    const auto e = pw::decay_ensemble(o->w, o->n, o->t, run.seed(), cfg, run.ode(), run.globals().workers);
    io::CsvWriter csv(run.output("_joint.csv"), {"q1_initial", "q2_initial", "q1", "q2"});
    for (std::size_t k = 0; k < e.q1.size(); ++k) csv.row({e.q1_initial[k], e.q2_initial[k], e.q1[k], e.q2[k]});
    const auto q1 = e.valid_q1(), q2 = e.valid_q2();
    const double lim = 5.0 / std::sqrt(o->omega);
    write_histogram(run.output("_q1.csv"), pw::stats::histogram(q1, -lim, lim, static_cast<std::size_t>(o->bins)));
    write_histogram(run.output("_q2.csv"), pw::stats::histogram(q2, -lim, lim, static_cast<std::size_t>(o->bins)));

    // Born marginals at t: the excitation moves from mode 1 to mode 2 as
    // cos^2 / sin^2 of g t / (2 omega); cross terms integrate out.
    const double a = o->g * o->t / (2 * o->omega);
    const double c2 = std::cos(a) * std::cos(a), s2 = 1 - c2;
    const double root = std::sqrt(o->omega);
    const auto ground = [&](double q) { return pw::stats::normal_cdf(q * root, 0.0, std::sqrt(0.5)); };
    const auto excited = [&](double q) { return pw::one_particle_cdf(q * root); };
    json summary = {{"t", o->t},
                    {"w", o->w},
                    {"n", o->n},
                    {"failed", e.failed},
                    {"excited_weight_mode1", c2},
                    {"ks_q1_born", pw::stats::ks_statistic(q1, [&](double q) { return c2 * excited(q) + s2 * ground(q); })},
                    {"ks_q2_born", pw::stats::ks_statistic(q2, [&](double q) { return c2 * ground(q) + s2 * excited(q); })},
                    {"ks_q2_one_particle", pw::stats::ks_statistic(q2, excited)}};
    if (q1.size() == q2.size() && q1.size() > 1) summary["corr_q1_q2"] = pw::stats::pearson(q1, q2);
    io::write_json(run.output("_summary.json"), summary);
    return 0;
  };
}

Runner add_energy_measure(CLI::App* sc) {
  struct Opt {
    std::string kind = "superposition";
    double theta = 0.0;
    double w = 1.0;
    int n = 10000;
    double t = 4.5;
    double threshold = 9.0;
    int bins = 60;
    bool detection = false;
  };
  auto o = std::make_shared<Opt>();
  sc->add_option("--case", o->kind, "field state")->check(CLI::IsMember({"vacuum", "one-particle", "superposition"}));
  sc->add_option("--theta", o->theta, "relative phase of the superposition");
  sc->add_option("--w", o->w, "widening of the field coordinate")->check(CLI::PositiveNumber);
  sc->add_option("--n", o->n, "ensemble size")->check(CLI::Range(2, 100'000'000));
  sc->add_option("--t", o->t, "interaction time");
  sc->add_option("--threshold", o->threshold, "pointer reading counted as a detected particle");
  sc->add_option("--bins", o->bins, "marginal histogram bins")->check(CLI::PositiveNumber);
  sc->add_flag("--detection", o->detection, "also average the detection probability over ten phases");
  return [o](Run& run) {
    pw::MeasurementModel model;
    model.kind = o->kind == "vacuum"         ? pw::MeasurementCase::Vacuum
                 : o->kind == "one-particle" ? pw::MeasurementCase::OneParticle
                                             : pw::MeasurementCase::Superposition;
    model.theta = o->theta;
    const auto settings = run.ode();
    const auto workers = run.globals().workers;
    const auto e = pw::measurement_ensemble(model, o->w, o->n, o->t, run.seed(), settings, workers);
    io::CsvWriter csv(run.output("_joint.csv"), {"Q_initial", "Y_initial", "Q", "Y"});
    for (std::size_t k = 0; k < e.q.size(); ++k) csv.row({e.q_initial[k], e.y_initial[k], e.q[k], e.y[k]});
    const auto q = finite(e.q), y = e.valid_y();
    const auto ymax = std::max(20.0, 3 * o->t + 10);
    write_histogram(run.output("_Q.csv"), pw::stats::histogram(q, -6, 6, static_cast<std::size_t>(o->bins)));
    write_histogram(run.output("_Y.csv"), pw::stats::histogram(y, -10, ymax, static_cast<std::size_t>(o->bins)));
    long beyond = 0;
    for (double v : y) beyond += v > o->threshold;

    // Reference: the same experiment started in equilibrium.
    const auto ref = pw::measurement_ensemble(model, 1.0, o->n, o->t, pw::sub_seed(run.seed(), 1), settings, workers);
    json summary = {{"case", o->kind},
                    {"theta", o->theta},
                    {"w", o->w},
                    {"t", o->t},
                    {"n", o->n},
                    {"failed", e.failed},
                    {"threshold", o->threshold},
                    {"probability_beyond_threshold", y.empty() ? 0.0 : static_cast<double>(beyond) / y.size()},
                    {"ks_Y_vs_equilibrium", pw::stats::ks_two_sample(y, ref.valid_y())}};
    if (o->detection) {
      const auto d = pw::detection_probability(o->w, pw::default_thetas(), o->n, run.seed(), o->t, o->threshold,
                                               settings, workers);
      summary["detection"] = {{"thetas", pw::default_thetas()},
                              {"per_theta", d.per_theta},
                              {"mean", d.probability},
                              {"failed", d.failed}};
    }
    io::write_json(run.output("_summary.json"), summary);
    return 0;
  };
}

Runner add_spectral_line(CLI::App* sc) {
  struct Opt {
    double w = 1.0;
    std::vector<double> t{5.0};
    int n = 10000;
    int bins = 80;
    double lo = -10.0;
    double hi = 10.0;
  };
  auto o = std::make_shared<Opt>();
  sc->add_option("--w", o->w, "widening of the field coordinate")->check(CLI::PositiveNumber);
  sc->add_option("--T", o->t, "observation times (ascending, in [1, 1000])")->expected(1, -1);
  sc->add_option("--n", o->n, "ensemble size")->check(CLI::Range(2, 100'000'000));
  sc->add_option("--bins", o->bins, "histogram bins")->check(CLI::PositiveNumber);
  sc->add_option("--lo", o->lo, "histogram lower edge");
  sc->add_option("--hi", o->hi, "histogram upper edge");
  return [o](Run& run) {
    pw::LineSettings ls;
    ls.hist_lo = o->lo;
    ls.hist_hi = o->hi;
    ls.bins = static_cast<std::size_t>(o->bins);
    ls.integrator = run.ode();
    ls.workers = run.globals().workers;
    run.manifest.tolerances["peak_bandwidth"] = ls.peak_bandwidth;
    const auto profiles = pw::line_profiles(o->w, o->t, o->n, run.seed(), ls);
    io::CsvWriter csv(run.output("_histogram.csv"), {"T", "bin_lo", "bin_hi", "density"});
    json list = json::array();
    for (const auto& p : profiles) {
      const auto d = p.histogram.density();
      for (std::size_t k = 0; k < p.histogram.bins(); ++k)
        csv.row({p.t_obs, p.histogram.edge(k), p.histogram.edge(k + 1), d[k]});
      list.push_back({{"T", p.t_obs},
                      {"mean", p.mean},
                      {"std", p.std},
                      {"peaks", p.peaks},
                      {"ks_standard_normal", pw::stats::ks_statistic(p.dev_e, [](double x) { return pw::stats::normal_cdf(x); })},
                      {"failed", p.failed}});
    }
    io::write_json(run.output("_summary.json"), {{"w", o->w}, {"n", o->n}, {"profiles", list}});
    return 0;
  };
}

Runner add_entropy_check(CLI::App* sc) {
  struct Opt {
    std::vector<int> sizes{3, 5, 8};
    int matrices = 10000;
    int trials = 100;
  };
  auto o = std::make_shared<Opt>();
  sc->add_option("--sizes", o->sizes, "matrix sizes")->expected(1, -1)->check(CLI::Range(2, 64));
  sc->add_option("--matrices", o->matrices, "random matrices in total")->check(CLI::PositiveNumber);
  sc->add_option("--trials", o->trials, "random distributions per matrix")->check(CLI::Range(100, 1'000'000));
  return [o](Run& run) {
    struct Row {
      int n;
      pw::TransitionFamily family;
      pw::ConservationCheck check;
    };
    const auto rows = pw::parallel_map(
        static_cast<std::size_t>(o->matrices),
        [&](std::size_t k) {
          const int n = o->sizes[k % o->sizes.size()];
          const auto family = static_cast<pw::TransitionFamily>((k / o->sizes.size()) % 3);
          const auto t = pw::random_transition(n, family, pw::sub_seed(run.seed(), 2 * k));
          return Row{n, family, pw::check_entropy_conservation(t, o->trials, pw::sub_seed(run.seed(), 2 * k + 1))};
        },
        run.globals().workers);
    run.manifest.tolerances["entropy"] = 1e-9;
    run.manifest.tolerances["permutation"] = 1e-12;
    io::CsvWriter csv(run.output(".csv"), {"index", "n", "family", "permutation", "entropy_conserved", "max_deviation"});
    long agree = 0, perms = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows[k];
      agree += r.check.permutation == r.check.entropy_conserved;
      perms += r.check.permutation;
      csv.row({static_cast<long long>(k), static_cast<long long>(r.n), pw::to_string(r.family),
               static_cast<long long>(r.check.permutation), static_cast<long long>(r.check.entropy_conserved),
               r.check.max_deviation});
    }
    const long disagree = static_cast<long>(rows.size()) - agree;
    io::write_json(run.output("_summary.json"), {{"matrices", o->matrices},
                                                 {"trials", o->trials},
                                                 {"permutations", perms},
                                                 {"agreements", agree},
                                                 {"disagreements", disagree}});
    if (disagree > 0) {
      std::cerr << "error: " << disagree << " matrices break conservation <=> permutation\n";
      return 3;
    }
    return 0;
  };
}

/// key=value lines of the effective configuration: global options and those
/// of the selected subcommand, without settings that do not change results.
std::string effective_config(const CLI::App& app, const std::string& subcommand) {
  std::istringstream in(app.config_to_str(true, false));
  std::string line, out;
  while (std::getline(in, line)) {
    auto key = line.substr(0, line.find('='));
    if (const auto dot = key.find('.'); dot != std::string::npos) {
      if (key.substr(0, dot) != subcommand) continue;
      key = key.substr(dot + 1);
    }
    if (key == "workers" || key == "config" || key == "out" || line.empty()) continue;
    out += line + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pilot-wave experiment runner", "pilotwave"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(PILOTWAVE_VERSION));
  app.set_config("--config", "", "TOML file; [subcommand] tables hold subcommand options");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--workers", g.workers, "worker threads (0: all cores)");
  app.add_option("--rtol", g.rtol, "integrator relative tolerance")->check(CLI::PositiveNumber);
  app.add_option("--atol", g.atol, "integrator absolute tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-step", g.max_step, "integrator step cap (0: module default)")->check(CLI::NonNegativeNumber);
  app.add_option("--node-guard", g.node_guard, "relative |psi|^2 floor refused by the node guard")
      ->check(CLI::PositiveNumber);

  const std::vector<std::pair<std::string, std::pair<std::string, Runner (*)(CLI::App*)>>> specs = {
      {"vorticity-census", {"total vorticity of random states", add_vorticity_census}},
      {"find-nodes", {"nodes of a state at one time or tracked over an interval", add_find_nodes}},
      {"drift-field", {"one-period drift field and its classification", add_drift_field}},
      {"classify", {"drift-field type of a state", add_classify}},
      {"long-drift", {"radial transport over many periods", add_long_drift}},
      {"relax-density", {"coarse-grained H of a nonequilibrium density", add_relax_density}},
      {"trajectories", {"one guidance trajectory", add_trajectories}},
      {"decay", {"two-mode decay ensemble", add_decay}},
      {"energy-measure", {"pointer measurement of a field mode's energy", add_energy_measure}},
      {"spectral-line", {"recorded line profiles of a nonequilibrium photon", add_spectral_line}},
      {"entropy-check", {"entropy conservation against permutation structure", add_entropy_check}},
  };
  std::vector<Command> commands;
  commands.reserve(specs.size());
  for (const auto& [name, desc] : specs) {
    auto& c = commands.emplace_back();
    c.app = app.add_subcommand(name, desc.first);
    c.app->add_option("--seed", c.seed, "random seed")->required();
    c.app->add_option("--out", c.out, "output prefix")->default_val(name);
    c.run = desc.second(c.app);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  pw::default_workers() = g.workers > 0 ? g.workers : std::max(1u, std::thread::hardware_concurrency());

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    Run run(c.out, c.seed, g);
    run.manifest.version = PILOTWAVE_VERSION;
    run.manifest.subcommand = c.app->get_name();
    run.manifest.config = effective_config(app, c.app->get_name());
    try {
      const int code = c.run(run);
      run.write_manifest();
      return code;
    } catch (const pw::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return pw::is_config_error(e) ? 2 : 3;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
