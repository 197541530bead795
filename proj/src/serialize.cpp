#include "resforge/serialize.hpp"

#include <algorithm>

namespace resforge {

void reject_unknown_keys(const json& object, const std::vector<std::string>& allowed,
                         const std::string& context) {
    if (!object.is_object())
        throw InvalidParameter(context + ": expected an object");
    for (const auto& item : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw InvalidParameter(context + ": unknown key '" + item.key() + "'");
    }
}

namespace {

double get_num(const json& j, const std::string& key, double fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw InvalidParameter("field '" + key + "' must be a number");
    return it->get<double>();
}

}  // namespace

json to_json(const EnvironmentParams& env) {
    return {{"amplitude_a", env.amplitude_a},
            {"phase_alpha", env.phase_alpha},
            {"delay_tau", env.delay_tau},
            {"impedance_mismatch_phi", env.impedance_mismatch_phi}};
}

EnvironmentParams environment_from_json(const json& j) {
    reject_unknown_keys(j, {"amplitude_a", "phase_alpha", "delay_tau",
                            "impedance_mismatch_phi"},
                        "environment");
    return EnvironmentParams(get_num(j, "amplitude_a", 1.0), get_num(j, "phase_alpha", 0.0),
                             get_num(j, "delay_tau", 0.0),
                             get_num(j, "impedance_mismatch_phi", 0.0));
}

json to_json(const ResonanceParams& res) {
    return {{"f0_hz", res.f0_hz()},
            {"kappa_hz", res.kappa_ext / two_pi},
            {"gamma_hz", res.gamma_int / two_pi}};
}

ResonanceParams resonance_from_json(const json& j) {
    reject_unknown_keys(j, {"f0_hz", "kappa_hz", "gamma_hz", "q_i", "q_c"}, "resonance");
    const double f0 = get_num(j, "f0_hz", 0.0);
    if (j.contains("q_i") || j.contains("q_c")) {
        if (j.contains("kappa_hz") || j.contains("gamma_hz"))
            throw InvalidParameter("resonance: give either rates or quality factors");
        return ResonanceParams::from_quality_factors(f0, get_num(j, "q_i", 0.0),
                                                     get_num(j, "q_c", 0.0));
    }
    return ResonanceParams(two_pi * f0, two_pi * get_num(j, "kappa_hz", 0.0),
                           two_pi * get_num(j, "gamma_hz", 0.0));
}

json to_json(const KerrModelParams& kerr) {
    return {{"kerr_hz_per_photon", kerr.kerr_K / two_pi},
            {"drive_amplitude_sq", kerr.drive_amplitude_sq}};
}

KerrModelParams kerr_from_json(const json& j) {
    reject_unknown_keys(j, {"kerr_hz_per_photon", "drive_amplitude_sq"}, "kerr");
    return KerrModelParams(two_pi * get_num(j, "kerr_hz_per_photon", 0.0),
                           get_num(j, "drive_amplitude_sq", 0.0));
}

json to_json(const LossModelParams& loss) {
    return {{"tls_loss_F_delta0", loss.tls_loss_F_delta0},
            {"critical_photon_nC", loss.critical_photon_nC},
            {"saturation_beta", loss.saturation_beta},
            {"residual_delta0", loss.residual_delta0},
            {"qp_loss", loss.qp_loss},
            {"temperature_T", loss.temperature_T}};
}

LossModelParams loss_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"tls_loss_F_delta0", "critical_photon_nC", "saturation_beta",
                         "residual_delta0", "qp_loss", "temperature_T"},
                        "loss");
    return LossModelParams(get_num(j, "tls_loss_F_delta0", 0.0),
                           get_num(j, "critical_photon_nC", 1.0),
                           get_num(j, "saturation_beta", 1.0),
                           get_num(j, "residual_delta0", 0.0), get_num(j, "qp_loss", 0.0),
                           get_num(j, "temperature_T", 0.0));
}

json to_json(const FilmProperties& film) {
    return {{"lk_sheet", film.lk_sheet},
            {"thickness_t", film.thickness_t},
            {"critical_temp_Tc", film.critical_temp_Tc},
            {"sheet_resistance", film.sheet_resistance},
            {"gap_delta0", film.gap_delta0},
            {"diffusion_D", film.diffusion_D},
            {"depairing_current_Istar", film.depairing_current_Istar},
            {"switching_current_Isw", film.switching_current_Isw},
            {"grain_size_a", film.grain_size_a},
            {"depairing_exponent_n", film.depairing_exponent_n}};
}

FilmProperties film_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"lk_sheet", "thickness_t", "critical_temp_Tc", "sheet_resistance",
                         "gap_delta0", "diffusion_D", "depairing_current_Istar",
                         "switching_current_Isw", "grain_size_a", "depairing_exponent_n"},
                        "film");
    FilmProperties film;
    film.lk_sheet = get_num(j, "lk_sheet", 0.0);
    film.thickness_t = get_num(j, "thickness_t", 0.0);
    film.critical_temp_Tc = get_num(j, "critical_temp_Tc", 0.0);
    film.sheet_resistance = get_num(j, "sheet_resistance", 0.0);
    film.gap_delta0 = get_num(j, "gap_delta0", 0.0);
    film.diffusion_D = get_num(j, "diffusion_D", 0.0);
    film.depairing_current_Istar = get_num(j, "depairing_current_Istar", 0.0);
    film.switching_current_Isw = get_num(j, "switching_current_Isw", 0.0);
    film.grain_size_a = get_num(j, "grain_size_a", 0.0);
    film.depairing_exponent_n = get_num(j, "depairing_exponent_n", 2.21);
    film.validate();
    return film;
}

json to_json(const ResonatorGeometry& geom) {
    return {{"width_w", geom.width_w},
            {"length_l", geom.length_l},
            {"inductance_per_length", geom.inductance_per_length},
            {"capacitance_per_length", geom.capacitance_per_length}};
}

ResonatorGeometry geometry_from_json(const json& j) {
    reject_unknown_keys(
        j, {"width_w", "length_l", "inductance_per_length", "capacitance_per_length"},
        "geometry");
    const double w = get_num(j, "width_w", 0.0);
    const double l = get_num(j, "length_l", 0.0);
    const double ltilde = get_num(j, "inductance_per_length", 0.0);
    const double ctilde = get_num(j, "capacitance_per_length", 0.0);
    // an all-zero object means "no geometry given"
    if (w == 0.0 && l == 0.0 && ltilde == 0.0 && ctilde == 0.0)
        return ResonatorGeometry{};
    return ResonatorGeometry(w, l, ltilde, ctilde);
}

json to_json(const FieldBehavior& field) {
    json knots = json::array();
    for (const auto& [b, q] : field.qi_template) knots.push_back({{"b_t", b}, {"q_i", q}});
    return {{"b_c_parallel_t", field.b_c_parallel_t},
            {"b_c_perp_t", field.b_c_perp_t},
            {"theta_b_rad", field.theta_b_rad},
            {"qi_template", knots}};
}

FieldBehavior field_behavior_from_json(const json& j) {
    reject_unknown_keys(j, {"b_c_parallel_t", "b_c_perp_t", "theta_b_rad", "qi_template"},
                        "field");
    FieldBehavior field;
    field.b_c_parallel_t = get_num(j, "b_c_parallel_t", 0.0);
    field.b_c_perp_t = get_num(j, "b_c_perp_t", 0.0);
    field.theta_b_rad = get_num(j, "theta_b_rad", 0.0);
    if (j.contains("qi_template")) {
        for (const auto& knot : j.at("qi_template")) {
            reject_unknown_keys(knot, {"b_t", "q_i"}, "qi_template knot");
            field.qi_template.emplace_back(get_num(knot, "b_t", 0.0),
                                           get_num(knot, "q_i", 0.0));
        }
    }
    return field;
}

json to_json(const GeneratorTruth& truth) {
    return {{"schema", 1},
            {"rng", rng_algorithm},
            {"resonance", to_json(truth.resonance)},
            {"environment", to_json(truth.env)},
            {"kerr", to_json(truth.kerr)},
            {"loss", to_json(truth.loss)},
            {"film", to_json(truth.film)},
            {"geometry", to_json(truth.geometry)},
            {"field", to_json(truth.field)}};
}

GeneratorTruth truth_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"schema", "rng", "resonance", "environment", "kerr", "loss", "film",
                         "geometry", "field"},
                        "truth");
    if (j.contains("schema") && j.at("schema").get<int>() != 1)
        throw InvalidParameter("truth: unsupported schema version");
    GeneratorTruth truth;
    truth.resonance = resonance_from_json(j.at("resonance"));
    if (j.contains("environment")) truth.env = environment_from_json(j.at("environment"));
    if (j.contains("kerr")) truth.kerr = kerr_from_json(j.at("kerr"));
    if (j.contains("loss")) truth.loss = loss_from_json(j.at("loss"));
    if (j.contains("film")) truth.film = film_from_json(j.at("film"));
    if (j.contains("geometry")) truth.geometry = geometry_from_json(j.at("geometry"));
    if (j.contains("field")) truth.field = field_behavior_from_json(j.at("field"));
    return truth;
}

json to_json(const NoiseSpec& noise) {
    return {{"sigma", noise.sigma}, {"seed", noise.seed}, {"rng", rng_algorithm}};
}

NoiseSpec noise_from_json(const json& j) {
    reject_unknown_keys(j, {"sigma", "seed", "rng"}, "noise");
    NoiseSpec noise;
    noise.sigma = get_num(j, "sigma", 0.0);
    if (j.contains("seed")) noise.seed = j.at("seed").get<std::uint64_t>();
    noise.validate();
    return noise;
}

json to_json(const FitResult& fit) {
    json params = json::object();
    for (const auto& [k, v] : fit.params) params[k] = v;
    json errors = json::object();
    for (const auto& [k, v] : fit.std_errors) errors[k] = v;
    return {{"params", params},
            {"std_errors", errors},
            {"residual_norm", fit.residual_norm},
            {"converged", fit.converged},
            {"n_iterations", fit.n_iterations},
            {"diagnostics", fit.diagnostics}};
}

json to_json(const FieldSweepSeries& series) {
    json points = json::array();
    for (const auto& p : series.points)
        points.push_back(
            {{"b_t", p.b}, {"rel_shift", p.rel_shift}, {"q_i", p.q_i}, {"q_c", p.q_c}});
    return {{"orientation",
             series.orientation == FieldOrientation::in_plane ? "in_plane" : "out_of_plane"},
            {"points", points}};
}

FieldSweepSeries field_sweep_from_json(const json& j) {
    reject_unknown_keys(j, {"orientation", "points"}, "field sweep");
    FieldSweepSeries series;
    const std::string orientation = j.at("orientation").get<std::string>();
    if (orientation == "in_plane") series.orientation = FieldOrientation::in_plane;
    else if (orientation == "out_of_plane") series.orientation = FieldOrientation::out_of_plane;
    else throw InvalidParameter("field sweep: unknown orientation '" + orientation + "'");
    for (const auto& p : j.at("points")) {
        reject_unknown_keys(p, {"b_t", "rel_shift", "q_i", "q_c"}, "field sweep point");
        FieldSweepSeries::Point point;
        point.b = get_num(p, "b_t", 0.0);
        point.rel_shift = get_num(p, "rel_shift", 0.0);
        point.q_i = get_num(p, "q_i", 0.0);
        point.q_c = get_num(p, "q_c", 0.0);
        series.points.push_back(point);
    }
    series.validate();
    return series;
}

json to_json(const PowerScan& scan) {
    json points = json::array();
    for (const auto& p : scan.points)
        points.push_back({{"n_ph", p.n_ph}, {"q_i", p.q_i}, {"q_i_err", p.q_i_err}});
    return {{"points", points}};
}

}  // namespace resforge
