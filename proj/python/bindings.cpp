// Python bindings: pilotwave._core. Arrays come back as NumPy float64.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numbers>

#include "pilotwave/density.hpp"
#include "pilotwave/drift_field.hpp"
#include "pilotwave/entropy.hpp"
#include "pilotwave/errors.hpp"
#include "pilotwave/field_models.hpp"
#include "pilotwave/guidance.hpp"
#include "pilotwave/oscillator.hpp"
#include "pilotwave/spectral_line.hpp"
#include "pilotwave/vorticity.hpp"

namespace py = pybind11;
namespace pw = pilotwave;
using namespace py::literals;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> grid_array(const pw::DensityGrid& d) {
  py::array_t<double> a({d.grid.ny, d.grid.nx});
  std::copy(d.rho.begin(), d.rho.end(), a.mutable_data());
  return a;
}

pw::IntegratorSettings integrator(double rtol, double atol) {
  pw::IntegratorSettings s;
  s.rtol = rtol;
  s.atol = atol;
  return s;
}

pw::ode::Settings ode_settings(double rtol, double atol) { return integrator(rtol, atol).ode(); }

pw::MeasurementCase measurement_case(const std::string& s) {
  if (s == "vacuum") return pw::MeasurementCase::Vacuum;
  if (s == "one-particle") return pw::MeasurementCase::OneParticle;
  if (s == "superposition") return pw::MeasurementCase::Superposition;
  throw pw::InvalidArgument("unknown measurement case '" + s + "'");
}

pw::TransitionFamily transition_family(const std::string& s) {
  if (s == "permutation") return pw::TransitionFamily::Permutation;
  if (s == "many-to-one") return pw::TransitionFamily::ManyToOne;
  if (s == "mixing") return pw::TransitionFamily::Mixing;
  throw pw::InvalidArgument("unknown transition family '" + s + "'");
}

py::dict drift_dict(const pw::DriftField& f, const pw::DriftClassification& c) {
  const auto shape = std::vector<py::ssize_t>{f.grid.n_eta, f.grid.n_phi};
  py::array_t<double> d_eta(shape), d_phi(shape);
  std::copy(f.d_eta.begin(), f.d_eta.end(), d_eta.mutable_data());
  std::copy(f.d_phi.begin(), f.d_phi.end(), d_phi.mutable_data());
  py::list axes;
  for (const auto& a : c.axes) axes.append(py::make_tuple(a.phi, a.attractive));
  return py::dict("d_eta"_a = d_eta, "d_phi"_a = d_phi, "type"_a = pw::to_string(c.type),
                  "sign_changes"_a = c.sign_changes, "uniform_sign"_a = c.uniform_sign,
                  "ring_average"_a = to_array(c.ring_average), "axes"_a = axes,
                  "masked_fraction"_a = f.masked_fraction());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pilot-wave dynamics of oscillator states, entropy functionals and field-measurement models";
  m.attr("__version__") = PILOTWAVE_VERSION;

  static py::exception<pw::Error> error(m, "Error");
  static py::exception<pw::InvalidArgument> invalid(m, "InvalidArgument", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pw::InvalidArgument& e) {
      invalid(e.what());
    } catch (const pw::Error& e) {
      error(e.what());
    }
  });

  // ---- states ----------------------------------------------------------------
  py::class_<pw::OscillatorState>(m, "OscillatorState")
      .def(py::init([](int m, const std::vector<pw::cplx>& c) { return pw::OscillatorState::normalized(m, c); }),
           "m"_a, "coeffs"_a, "Coefficients in level order, rescaled to unit norm.")
      .def_static("from_levels", &pw::OscillatorState::from_levels, "levels"_a,
                  "Sparse construction from (nd, ng, C) triples.")
      .def_static("from_json", [](const std::string& s) { return pw::state_from_json(nlohmann::json::parse(s)); })
      .def_static("load", [](const std::string& path) { return pw::load_state(path); }, "path"_a)
      .def("to_json", [](const pw::OscillatorState& s, const std::string& basis) {
        return pw::state_to_json(s, basis).dump();
      }, "basis"_a = "angular")
      .def_property_readonly("cutoff", &pw::OscillatorState::cutoff)
      .def_property_readonly("coeffs", [](const pw::OscillatorState& s) {
        return std::vector<pw::cplx>(s.coeffs().begin(), s.coeffs().end());
      })
      .def("coeff", &pw::OscillatorState::coeff, "nd"_a, "ng"_a)
      .def("mirrored", &pw::OscillatorState::mirrored)
      .def("psi", [](const pw::OscillatorState& s, double x, double y, double t) {
        return pw::eval_psi(s, {x, y}, t);
      }, "x"_a, "y"_a, "t"_a = 0.0);

  m.def("random_state", &pw::random_state, "m"_a, "seed"_a);
  m.def("nine_mode_state", &pw::nine_mode_state, "seed"_a);

  // ---- guidance --------------------------------------------------------------
  m.def("velocity", [](const pw::OscillatorState& s, double x, double y, double t) {
    return pw::velocity_cartesian(s, {x, y}, t);
  }, "state"_a, "x"_a, "y"_a, "t"_a = 0.0, "Guidance velocity (vx, vy).");
  m.def("trajectory", [](const pw::OscillatorState& s, double x, double y, double t0, double t1, double rtol,
                         double atol) {
    const auto tr = pw::integrate(s, {x, y}, t0, t1, integrator(rtol, atol));
    py::array_t<double> out({static_cast<py::ssize_t>(tr.samples.size()), py::ssize_t{3}});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
      const auto i = static_cast<py::ssize_t>(k);
      a(i, 0) = tr.samples[k].t;
      a(i, 1) = tr.samples[k].q.qx;
      a(i, 2) = tr.samples[k].q.qy;
    }
    return out;
  }, "state"_a, "x"_a, "y"_a, "t0"_a = 0.0, "t1"_a = kTwoPi, "rtol"_a = 1e-8, "atol"_a = 1e-10,
        "Rows (T, Qx, Qy) at every accepted step.");
  m.def("born_density", [](const pw::OscillatorState& s, double t, double half_width, int n) {
    return grid_array(pw::born_density(s, t, pw::GridSpec::square(half_width, n)));
  }, "state"_a, "t"_a = 0.0, "half_width"_a = 8.0, "n"_a = 128, "|psi|^2 at cell centres, shape (n, n), x fastest.");

  // ---- vorticity -------------------------------------------------------------
  m.def("total_vorticity", [](const pw::OscillatorState& s) {
    const auto v = pw::total_vorticity(s);
    return py::make_tuple(v.winding, pw::to_string(v.category));
  }, "state"_a, "(winding in units of 2 pi, category)");
  m.def("winding_number", [](const pw::OscillatorState& s, double t, double eta) {
    return pw::winding_number(s, t, eta);
  }, "state"_a, "t"_a, "eta"_a);
  m.def("find_nodes", [](const pw::OscillatorState& s, double t, double half_width, int n) {
    std::optional<pw::GridSpec> box;
    if (half_width > 0) box = pw::GridSpec::square(half_width, n);
    py::list out;
    for (const auto& node : pw::find_nodes(s, t, box).nodes) out.append(py::make_tuple(node.q.qx, node.q.qy, node.charge));
    return out;
  }, "state"_a, "t"_a = 0.0, "half_width"_a = 0.0, "n"_a = 256, "[(Qx, Qy, charge)]; half_width 0 uses the default box.");

  // ---- drift fields ----------------------------------------------------------
  m.def("drift_field", [](const pw::OscillatorState& s, double eta_min, double eta_max, int n) {
    const auto f = pw::build_drift_field(s, pw::PolarGrid{eta_min, eta_max, n, n});
    const auto c = pw::classify(f);
    py::gil_scoped_acquire gil;
    return drift_dict(f, c);
  }, "state"_a, "eta_min"_a = 4.0, "eta_max"_a = 20.0, "n"_a = 100, py::call_guard<py::gil_scoped_release>());
  m.def("long_drift", [](const pw::OscillatorState& s, int n, double eta_lo, double eta_hi, int periods,
                         std::uint64_t seed) {
    const auto r = pw::long_drift(s, n, eta_lo, eta_hi, periods, seed);
    py::gil_scoped_acquire gil;
    return py::dict("eta_initial"_a = to_array(r.eta_initial), "eta_final"_a = to_array(r.eta_final),
                    "phi_initial"_a = to_array(r.phi_initial), "failed"_a = r.failed,
                    "median_shift"_a = r.median_shift());
  }, "state"_a, "n"_a = 200, "eta_lo"_a = 10.0, "eta_hi"_a = 20.0, "periods"_a = 1000, "seed"_a = 1,
        py::call_guard<py::gil_scoped_release>());

  // ---- entropy ---------------------------------------------------------------
  m.def("discrete_entropy", &pw::discrete_entropy, "p"_a);
  m.def("is_permutation", &pw::is_permutation, "t"_a, "tol"_a = 1e-12);
  m.def("is_entropy_conserving", &pw::is_entropy_conserving, "t"_a, "trials"_a = 100, "seed"_a = 0);
  m.def("random_transition", [](int n, const std::string& family, std::uint64_t seed) {
    return pw::random_transition(n, transition_family(family), seed);
  }, "n"_a, "family"_a, "seed"_a, "family: permutation, many-to-one or mixing");

  // ---- relaxation ------------------------------------------------------------
  m.def("relaxation", [](const pw::OscillatorState& s, double w, int periods, int n, double half_width, int coarse,
                         bool control) {
    pw::RelaxationSettings rs;
    rs.grid = pw::GridSpec::square(half_width, n);
    rs.coarse = {coarse, coarse};
    rs.equilibrium_control = control;
    const auto r = pw::relaxation_run(s, pw::NonequilibriumSpec::widened(w), periods, rs);
    py::gil_scoped_acquire gil;
    return py::dict("times"_a = to_array(r.times), "hbar"_a = to_array(r.hbar),
                    "control_hbar"_a = to_array(r.control_hbar), "dt"_a = r.stats.dt);
  }, "state"_a, "w"_a = 1.0, "periods"_a = 1, "n"_a = 128, "half_width"_a = 8.0, "coarse"_a = 32,
        "control"_a = false, "Coarse-grained H after each period of finite-volume evolution.",
        py::call_guard<py::gil_scoped_release>());

  // ---- field models ----------------------------------------------------------
  m.def("one_particle_cdf", &pw::one_particle_cdf, "q"_a);
  m.def("decay_ensemble", [](double w, int n, double t, std::uint64_t seed, double omega, double g) {
    const auto e = pw::decay_ensemble(w, n, t, seed, pw::DecayConfig{omega, g});
    py::gil_scoped_acquire gil;
    return py::dict("q1_initial"_a = to_array(e.q1_initial), "q2_initial"_a = to_array(e.q2_initial),
                    "q1"_a = to_array(e.q1), "q2"_a = to_array(e.q2), "failed"_a = e.failed);
  }, "w"_a, "n"_a, "t"_a = std::numbers::pi, "seed"_a = 1, "omega"_a = 1.0, "g"_a = 1.0,
        py::call_guard<py::gil_scoped_release>());
  m.def("measurement_ensemble", [](const std::string& kind, double theta, double w, int n, double t,
                                   std::uint64_t seed) {
    const auto e = pw::measurement_ensemble({measurement_case(kind), theta}, w, n, t, seed);
    py::gil_scoped_acquire gil;
    return py::dict("q_initial"_a = to_array(e.q_initial), "y_initial"_a = to_array(e.y_initial),
                    "q"_a = to_array(e.q), "y"_a = to_array(e.y), "failed"_a = e.failed);
  }, "case"_a, "theta"_a = 0.0, "w"_a = 1.0, "n"_a = 1000, "t"_a = 4.5, "seed"_a = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("detection_probability", [](double w, int n, std::uint64_t seed, double t, double threshold) {
    const auto d = pw::detection_probability(w, pw::default_thetas(), n, seed, t, threshold);
    py::gil_scoped_acquire gil;
    return py::dict("probability"_a = d.probability, "per_theta"_a = to_array(d.per_theta),
                    "thetas"_a = to_array(pw::default_thetas()), "failed"_a = d.failed);
  }, "w"_a, "n"_a = 10000, "seed"_a = 1, "t"_a = 4.5, "threshold"_a = 9.0,
        py::call_guard<py::gil_scoped_release>());
  m.def("stationary_pointer", [](double w, int n, std::uint64_t seed, double t_end, double t_compare) {
    pw::PointerSettings ps;
    ps.t_end = t_end;
    ps.t_compare = t_compare;
    const auto p = pw::stationary_vacuum_pointer(w, n, seed, ps);
    py::gil_scoped_acquire gil;
    return py::dict("q"_a = to_array(p.q), "y_prime"_a = to_array(p.y_prime),
                    "convergence_l1"_a = p.convergence_l1, "central_depression"_a = pw::central_depression(p.y_prime),
                    "failed"_a = p.failed);
  }, "w"_a, "n"_a = 10000, "seed"_a = 1, "t_end"_a = 120.0, "t_compare"_a = 100.0,
        py::call_guard<py::gil_scoped_release>());

  // ---- spectral line ---------------------------------------------------------
  m.def("reduced_velocity", &pw::reduced_velocity, "q"_a, "dev_e"_a);
  m.def("orbit_constant", &pw::orbit_constant, "q"_a, "dev_e"_a);
  m.def("evolve_reduced", [](double q, double dev_e, double t0, double t1, double rtol, double atol) {
    return pw::evolve_reduced({q, dev_e}, t0, t1, ode_settings(rtol, atol));
  }, "q"_a, "dev_e"_a, "t0"_a, "t1"_a, "rtol"_a = 1e-8, "atol"_a = 1e-10);
  m.def("line_profiles", [](double w, const std::vector<double>& t_obs, int n, std::uint64_t seed) {
    const auto ps = pw::line_profiles(w, t_obs, n, seed);
    py::gil_scoped_acquire gil;
    py::list out;
    for (const auto& p : ps)
      out.append(py::dict("T"_a = p.t_obs, "dev_e"_a = to_array(p.dev_e), "mean"_a = p.mean, "std"_a = p.std,
                          "peaks"_a = p.peaks, "density"_a = to_array(p.histogram.density()),
                          "edges"_a = py::make_tuple(p.histogram.lo, p.histogram.hi), "failed"_a = p.failed));
    return out;
  }, "w"_a, "t_obs"_a, "n"_a = 10000, "seed"_a = 1, py::call_guard<py::gil_scoped_release>());
  m.def("dispersion", &pw::dispersion, "e"_a, "e_gamma"_a, "t"_a);
}
