#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "resforge/fit.hpp"
#include "resforge/physics.hpp"
#include "resforge/synth.hpp"

namespace py = pybind11;
using namespace resforge;

namespace {

py::dict fit_result_to_dict(const FitResult& fit) {
    py::dict params, errors;
    for (const auto& [k, v] : fit.params) params[py::str(k)] = v;
    for (const auto& [k, v] : fit.std_errors) errors[py::str(k)] = v;
    py::dict out;
    out["params"] = params;
    out["std_errors"] = errors;
    out["residual_norm"] = fit.residual_norm;
    out["converged"] = fit.converged;
    out["n_iterations"] = fit.n_iterations;
    out["diagnostics"] = fit.diagnostics;
    return out;
}

ComplexTrace make_trace(const std::vector<double>& freqs,
                        const std::vector<std::complex<double>>& samples,
                        double power_dbm, double attenuation_db) {
    ComplexTrace trace;
    trace.freqs = freqs;
    trace.samples = samples;
    trace.power_dbm = power_dbm;
    trace.attenuation_db = attenuation_db;
    trace.validate();
    return trace;
}

}  // namespace

PYBIND11_MODULE(_resforge, m) {
    m.doc() = "Superconducting hanger-resonator models, fitting and synthesis";

    py::register_exception<NoDipFound>(m, "NoDipFound");
    py::register_exception<BifurcationInFitWindow>(m, "BifurcationInFitWindow");
    py::register_exception<PositiveShiftDominates>(m, "PositiveShiftDominates");

    py::class_<ResonanceParams>(m, "ResonanceParams")
        .def(py::init<double, double, double>(), py::arg("omega0"), py::arg("kappa_ext"),
             py::arg("gamma_int"))
        .def_static("from_quality_factors", &ResonanceParams::from_quality_factors,
                    py::arg("f0_hz"), py::arg("q_i"), py::arg("q_c"))
        .def_readonly("omega0", &ResonanceParams::omega0)
        .def_readonly("kappa_ext", &ResonanceParams::kappa_ext)
        .def_readonly("gamma_int", &ResonanceParams::gamma_int)
        .def("f0_hz", &ResonanceParams::f0_hz)
        .def("q_internal", &ResonanceParams::q_internal)
        .def("q_coupling", &ResonanceParams::q_coupling)
        .def("total_rate", &ResonanceParams::total_rate);

    py::class_<EnvironmentParams>(m, "EnvironmentParams")
        .def(py::init<double, double, double, double>(), py::arg("amplitude_a") = 1.0,
             py::arg("phase_alpha") = 0.0, py::arg("delay_tau") = 0.0,
             py::arg("impedance_mismatch_phi") = 0.0)
        .def_readonly("amplitude_a", &EnvironmentParams::amplitude_a)
        .def_readonly("phase_alpha", &EnvironmentParams::phase_alpha)
        .def_readonly("delay_tau", &EnvironmentParams::delay_tau)
        .def_readonly("impedance_mismatch_phi", &EnvironmentParams::impedance_mismatch_phi);

    py::class_<KerrModelParams>(m, "KerrModelParams")
        .def(py::init<double, double>(), py::arg("kerr_K"), py::arg("drive_amplitude_sq"))
        .def_readonly("kerr_K", &KerrModelParams::kerr_K)
        .def_readonly("drive_amplitude_sq", &KerrModelParams::drive_amplitude_sq);

    py::class_<LossModelParams>(m, "LossModelParams")
        .def(py::init<double, double, double, double, double, double>(),
             py::arg("tls_loss_F_delta0"), py::arg("critical_photon_nC"),
             py::arg("saturation_beta"), py::arg("residual_delta0"), py::arg("qp_loss"),
             py::arg("temperature_T"));

    py::class_<FilmProperties>(m, "FilmProperties")
        .def(py::init<>())
        .def_readwrite("lk_sheet", &FilmProperties::lk_sheet)
        .def_readwrite("thickness_t", &FilmProperties::thickness_t)
        .def_readwrite("critical_temp_Tc", &FilmProperties::critical_temp_Tc)
        .def_readwrite("sheet_resistance", &FilmProperties::sheet_resistance)
        .def_readwrite("gap_delta0", &FilmProperties::gap_delta0)
        .def_readwrite("diffusion_D", &FilmProperties::diffusion_D)
        .def_readwrite("depairing_current_Istar", &FilmProperties::depairing_current_Istar)
        .def_readwrite("switching_current_Isw", &FilmProperties::switching_current_Isw)
        .def_readwrite("grain_size_a", &FilmProperties::grain_size_a)
        .def_readwrite("depairing_exponent_n", &FilmProperties::depairing_exponent_n)
        .def("gap", &FilmProperties::gap);

    py::class_<ResonatorGeometry>(m, "ResonatorGeometry")
        .def(py::init<double, double, double, double>(), py::arg("width_w"),
             py::arg("length_l"), py::arg("inductance_per_length"),
             py::arg("capacitance_per_length"))
        .def_static("from_film", &ResonatorGeometry::from_film, py::arg("film"),
                    py::arg("width"), py::arg("length"), py::arg("ctilde"))
        .def_readonly("width_w", &ResonatorGeometry::width_w)
        .def_readonly("length_l", &ResonatorGeometry::length_l)
        .def_readonly("inductance_per_length", &ResonatorGeometry::inductance_per_length)
        .def_readonly("capacitance_per_length", &ResonatorGeometry::capacitance_per_length)
        .def("total_inductance", &ResonatorGeometry::total_inductance);

    // forward models
    m.def("s21_linear", &s21_linear, py::arg("f_drive"), py::arg("res"), py::arg("env"));
    m.def("s21_nonlinear", &s21_nonlinear, py::arg("f_drive"), py::arg("res"),
          py::arg("kerr"), py::arg("env_phi") = 0.0);
    m.def(
        "solve_photon_occupation",
        [](double delta, double xi) {
            const auto r = solve_photon_occupation(delta, xi);
            return py::make_tuple(r.roots, r.stable_root);
        },
        py::arg("delta"), py::arg("xi"),
        "Returns (roots ascending, stable_root) of the occupation cubic");
    m.def("bifurcation_onset", &bifurcation_onset, py::arg("delta_lo"),
          py::arg("delta_hi"), py::arg("xi"));
    m.def("inverse_qi", &inverse_qi, py::arg("n_ph"), py::arg("loss"), py::arg("omega0"));
    m.def("lk_of_current", &lk_of_current, py::arg("i"), py::arg("film"));
    m.def("lk_from_sheet_resistance", &lk_from_sheet_resistance, py::arg("film"),
          py::arg("temperature"));
    m.def("kerr_bcs", &kerr_bcs, py::arg("omega_r"), py::arg("total_inductance"),
          py::arg("i_star"));
    m.def("kerr_bcs_geometric", &kerr_bcs_geometric, py::arg("omega_r"), py::arg("film"),
          py::arg("geom"), py::arg("j_c"));
    m.def("kerr_jj", &kerr_jj, py::arg("omega_r"), py::arg("film"), py::arg("geom"));
    m.def("inplane_freq_shift", &inplane_freq_shift, py::arg("b_par"), py::arg("film"),
          py::arg("geom"), py::arg("theta_b"));
    m.def("quadratic_shift_bc", &quadratic_shift_bc, py::arg("b"), py::arg("b_c"));
    m.def("gap_vs_field", &gap_vs_field, py::arg("b"), py::arg("film"), py::arg("b_c"));
    m.def("photon_number", &photon_number, py::arg("power_dbm"), py::arg("attenuation_db"),
          py::arg("res"), py::arg("config_C") = 4.0);
    m.def("drive_amplitude_sq_from_power", &drive_amplitude_sq_from_power,
          py::arg("power_dbm"), py::arg("attenuation_db"), py::arg("res"));
    m.def("quarterwave_frequency", &quarterwave_frequency, py::arg("geom"));
    m.def("characteristic_impedance", &characteristic_impedance, py::arg("geom"));
    m.def("fit_ctilde_from_frequency", &fit_ctilde_from_frequency, py::arg("f_measured"),
          py::arg("geom_partial"));

    // fitting on raw arrays
    m.def(
        "fit_linear_resonance",
        [](const std::vector<double>& freqs,
           const std::vector<std::complex<double>>& samples) {
            return fit_result_to_dict(
                fit_linear_resonance(make_trace(freqs, samples, 0.0, 0.0)));
        },
        py::arg("freqs"), py::arg("samples"));
    m.def(
        "fit_kerr_2d",
        [](const std::vector<std::vector<double>>& freqs,
           const std::vector<std::vector<std::complex<double>>>& samples,
           const std::vector<double>& powers_dbm, double attenuation_db,
           const ResonanceParams& res) {
            std::vector<ComplexTrace> traces;
            for (std::size_t i = 0; i < freqs.size(); ++i)
                traces.push_back(
                    make_trace(freqs[i], samples[i], powers_dbm.at(i), attenuation_db));
            return fit_result_to_dict(fit_kerr_2d(traces, res));
        },
        py::arg("freqs"), py::arg("samples"), py::arg("powers_dbm"),
        py::arg("attenuation_db"), py::arg("res"));
    m.def(
        "fit_field_sweep_bc",
        [](const std::vector<double>& b, const std::vector<double>& rel_shift) {
            FieldSweepSeries series;
            for (std::size_t i = 0; i < b.size(); ++i)
                series.points.push_back({b[i], rel_shift.at(i), 1.0, 1.0});
            return fit_result_to_dict(fit_field_sweep_bc(series));
        },
        py::arg("b"), py::arg("rel_shift"));
    m.def(
        "fit_power_scan",
        [](const std::vector<double>& n_ph, const std::vector<double>& q_i,
           const std::vector<double>& q_i_err, double omega0, double temperature) {
            PowerScan scan;
            for (std::size_t i = 0; i < n_ph.size(); ++i)
                scan.points.push_back(
                    {n_ph[i], q_i.at(i), q_i_err.empty() ? 0.0 : q_i_err.at(i)});
            return fit_result_to_dict(fit_power_scan(scan, omega0, temperature));
        },
        py::arg("n_ph"), py::arg("q_i"), py::arg("q_i_err"), py::arg("omega0"),
        py::arg("temperature") = 0.0);

    // synthesis
    m.def(
        "generate_trace",
        [](const ResonanceParams& res, const EnvironmentParams& env,
           const KerrModelParams& kerr, const std::vector<double>& grid, double sigma,
           std::uint64_t seed) {
            GeneratorTruth truth;
            truth.resonance = res;
            truth.env = env;
            truth.kerr = kerr;
            const auto trace = generate_trace(truth, grid, NoiseSpec{sigma, seed});
            return py::make_tuple(trace.freqs, trace.samples);
        },
        py::arg("res"), py::arg("env"), py::arg("kerr"), py::arg("grid"),
        py::arg("sigma") = 0.0, py::arg("seed") = 0);
    m.def("oracle_cubic_roots", &oracle_cubic_roots, py::arg("delta"), py::arg("xi"));
}
