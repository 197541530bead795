// resforge: resonator spectroscopy fitting, synthesis and campaign tool.
//
// Subcommands: fit-trace, kerr, field, synth, estimate.
// Exit codes: 0 success, 1 input/processing error, 2 QC/physics rejection.
// Results go to stdout (or --output); diagnostics go to stderr.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "resforge/campaign.hpp"
#include "resforge/serialize.hpp"
#include "resforge/synth.hpp"
#include "resforge/trace_io.hpp"

namespace rf = resforge;
namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_rejected = 2;

struct CommonOptions {
    std::string format = "table";
    std::string output;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"json", "csv", "table"}))
        ->envname("RESFORGE_FORMAT");
    cmd->add_option("--output", common.output, "Write primary output to a file")
        ->envname("RESFORGE_OUTPUT");
    cmd->add_option("--seed", common.seed, "Random seed override")
        ->envname("RESFORGE_SEED")
        ->each([&common](const std::string&) { common.seed_given = true; });
    cmd->add_flag("--verbose", common.verbose, "Diagnostics on stderr")
        ->envname("RESFORGE_VERBOSE");
}

void emit(const CommonOptions& common, const std::string& text) {
    if (common.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(common.output);
    if (!out) throw std::runtime_error("cannot write '" + common.output + "'");
    out << text;
}

std::string format_number(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.10g", v);
    return buffer;
}

// Key/value renderers for fit-style results.
std::string render_pairs(const std::string& format, const rf::json& doc) {
    if (format == "json") return doc.dump(2) + "\n";
    std::string out;
    const auto& params = doc.at("params");
    const auto& errors = doc.at("std_errors");
    if (format == "csv") {
        out += "name,value,std_error\n";
        for (const auto& item : params.items()) {
            out += item.key() + "," + format_number(item.value().get<double>());
            out += errors.contains(item.key())
                       ? "," + format_number(errors.at(item.key()).get<double>())
                       : ",";
            out += "\n";
        }
        return out;
    }
    // table
    std::size_t width = 4;
    for (const auto& item : params.items()) width = std::max(width, item.key().size());
    for (const auto& item : params.items()) {
        out += item.key() + std::string(width - item.key().size() + 2, ' ') +
               format_number(item.value().get<double>());
        if (errors.contains(item.key()))
            out += " +- " + format_number(errors.at(item.key()).get<double>());
        out += "\n";
    }
    if (doc.contains("qc_accepted"))
        out += std::string("qc") + std::string(width, ' ') +
               (doc.at("qc_accepted").get<bool>() ? "accepted" : "rejected: ") +
               doc.value("qc_reason", "") + "\n";
    return out;
}

rf::json fit_to_document(const rf::FitResult& fit) {
    rf::json doc = rf::to_json(fit);
    return doc;
}

// ---------------------------------------------------------------------------
// fit-trace
// ---------------------------------------------------------------------------

int run_fit_trace(const std::string& path, const CommonOptions& common,
                  const std::string& curve_path) {
    const rf::ComplexTrace trace = rf::ingest_trace_file(path);
    const rf::FitResult fit = rf::fit_linear_resonance(trace);
    const rf::QcDecision qc = rf::qc_filter(fit);

    rf::json doc = fit_to_document(fit);
    doc["qc_accepted"] = qc.accepted;
    doc["qc_reason"] = qc.reason;
    emit(common, render_pairs(common.format, doc));

    if (!curve_path.empty()) {
        // plot-ready series: data and model magnitude vs frequency
        const rf::ResonanceParams res(rf::two_pi * fit.param("f0_hz"),
                                      rf::two_pi * fit.param("kappa_hz"),
                                      rf::two_pi * fit.param("gamma_hz"));
        const rf::EnvironmentParams env(fit.param("a"), fit.param("alpha"),
                                        fit.param("tau_s"), fit.param("phi"));
        std::ofstream out(curve_path);
        if (!out) throw std::runtime_error("cannot write '" + curve_path + "'");
        out << "freq_hz,mag_data,mag_fit,arg_data,arg_fit\n";
        char line[160];
        for (std::size_t i = 0; i < trace.size(); ++i) {
            const auto model = rf::s21_linear(trace.freqs[i], res, env);
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          trace.freqs[i], std::abs(trace.samples[i]), std::abs(model),
                          std::arg(trace.samples[i]), std::arg(model));
            out << line;
        }
    }
    return qc.accepted ? exit_ok : exit_rejected;
}

// ---------------------------------------------------------------------------
// kerr
// ---------------------------------------------------------------------------

int run_kerr(const std::string& directory, const CommonOptions& common) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "kerr: no .csv traces in '" << directory << "'\n";
        return exit_error;
    }

    std::vector<rf::ComplexTrace> traces;
    for (const auto& file : files) traces.push_back(rf::ingest_trace_file(file.string()));
    std::sort(traces.begin(), traces.end(),
              [](const auto& a, const auto& b) { return a.power_dbm < b.power_dbm; });

    // Rates and environment from the weakest drive.
    const rf::FitResult low = rf::fit_linear_resonance(traces.front());
    const auto low_qc = rf::qc_filter(low);
    if (!low_qc.accepted) {
        std::cerr << "kerr: low-power anchor fit rejected: " << low_qc.reason << "\n";
        return exit_rejected;
    }
    const rf::ResonanceParams res(rf::two_pi * low.param("f0_hz"),
                                  rf::two_pi * low.param("kappa_hz"),
                                  rf::two_pi * low.param("gamma_hz"));
    const double a = low.param("a");
    const double alpha = low.param("alpha");
    const double tau = low.param("tau_s");
    for (auto& trace : traces)
        for (std::size_t i = 0; i < trace.size(); ++i)
            trace.samples[i] /=
                a * std::polar(1.0, alpha - rf::two_pi * trace.freqs[i] * tau);

    // First-cut Kerr from the dip shift, for the bifurcation pre-filter.
    auto dip_freq = [](const rf::ComplexTrace& t) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (std::abs(t.samples[i]) < std::abs(t.samples[best])) best = i;
        return t.freqs[best];
    };
    const double total = res.total_rate();
    auto drive_of = [&](const rf::ComplexTrace& t) {
        return rf::drive_amplitude_sq_from_power(t.power_dbm, t.attenuation_db, res);
    };
    const double n_lo = 2.0 * res.kappa_ext * drive_of(traces.front()) / (total * total);
    const double n_hi = 2.0 * res.kappa_ext * drive_of(traces.back()) / (total * total);
    double k_guess = 0.0;
    if (n_hi > n_lo)
        k_guess = rf::two_pi * (dip_freq(traces.back()) - dip_freq(traces.front())) /
                  (n_hi - n_lo);

    std::vector<rf::ComplexTrace> usable;
    rf::json flags = rf::json::array();
    for (const auto& trace : traces) {
        const double xi =
            res.kappa_ext * drive_of(trace) * k_guess / (total * total * total);
        const double d_lo = (rf::two_pi * trace.freqs.front() - res.omega0) / total;
        const double d_hi = (rf::two_pi * trace.freqs.back() - res.omega0) / total;
        const bool bifurcated = rf::bifurcation_onset(d_lo, d_hi, xi);
        flags.push_back({{"power_dbm", trace.power_dbm}, {"bifurcated", bifurcated}});
        if (!bifurcated) usable.push_back(trace);
    }
    if (usable.size() < 3) {
        std::cerr << "kerr: fewer than 3 traces below the bifurcation threshold\n";
        emit(common, rf::json({{"flags", flags}}).dump(2) + "\n");
        return exit_rejected;
    }

    rf::FitResult fit;
    try {
        fit = rf::fit_kerr_2d(usable, res);
    } catch (const rf::BifurcationInFitWindow& e) {
        std::cerr << "kerr: " << e.what() << "\n";
        return exit_rejected;
    }

    rf::json doc = fit_to_document(fit);
    doc["anchor"] = rf::to_json(low);
    doc["traces"] = flags;
    doc["n_traces_used"] = usable.size();
    emit(common, render_pairs(common.format, doc));
    return fit.converged ? exit_ok : exit_rejected;
}

// ---------------------------------------------------------------------------
// field
// ---------------------------------------------------------------------------

std::string render_report_table(const std::vector<rf::ResonatorReport>& report) {
    std::string out =
        "name      w(nm)   f0(GHz)     Q_i            Q_c           Z(kOhm)  "
        "K/2pi(Hz/ph)    B_C//(T)        B_C|_(mT)\n";
    char line[256];
    for (const auto& row : report) {
        auto opt = [](const std::optional<double>& v, const std::optional<double>& e) {
            char buffer[64];
            if (!v) return std::string("-");
            if (e) std::snprintf(buffer, sizeof buffer, "%.4g+-%.2g", *v, *e);
            else std::snprintf(buffer, sizeof buffer, "%.4g", *v);
            return std::string(buffer);
        };
        std::snprintf(line, sizeof line,
                      "%-9s %-7.0f %-11.5g %-7.5g+-%-6.2g %-7.5g+-%-5.2g %-8.4g %-15s "
                      "%-15s %-15s%s%s\n",
                      row.name.c_str(), row.width_nm, row.f0_ghz, row.q_i, row.q_i_err,
                      row.q_c, row.q_c_err, row.z_kohm,
                      opt(row.kerr_hz_per_photon, row.kerr_err).c_str(),
                      opt(row.b_c_parallel_t, row.b_c_parallel_err).c_str(),
                      opt(row.b_c_perp_mt, row.b_c_perp_err).c_str(),
                      row.flags.empty() ? "" : "  ! ",
                      row.flags.empty() ? "" : row.flags.front().c_str());
        out += line;
    }
    return out;
}

std::string render_report_csv(const std::vector<rf::ResonatorReport>& report) {
    std::string out =
        "name,width_nm,f0_ghz,q_i,q_i_err,q_c,q_c_err,z_kohm,kerr_hz_per_photon,"
        "kerr_err,b_c_parallel_t,b_c_parallel_err,b_c_perp_mt,b_c_perp_err\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? format_number(*v) : std::string();
    };
    for (const auto& row : report) {
        out += row.name + "," + format_number(row.width_nm) + "," +
               format_number(row.f0_ghz) + "," + format_number(row.q_i) + "," +
               format_number(row.q_i_err) + "," + format_number(row.q_c) + "," +
               format_number(row.q_c_err) + "," + format_number(row.z_kohm) + "," +
               opt(row.kerr_hz_per_photon) + "," + opt(row.kerr_err) + "," +
               opt(row.b_c_parallel_t) + "," + opt(row.b_c_parallel_err) + "," +
               opt(row.b_c_perp_mt) + "," + opt(row.b_c_perp_err) + "\n";
    }
    return out;
}

int run_field(const std::string& config_path, const std::string& mode,
              const std::string& outdir, const CommonOptions& common) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "field: cannot open config '" << config_path << "'\n";
        return exit_error;
    }
    rf::json config_json;
    try {
        config_json = rf::json::parse(in);
    } catch (const std::exception& e) {
        std::cerr << "field: config parse failure: " << e.what() << "\n";
        return exit_error;
    }
    rf::CampaignConfig config = rf::campaign_config_from_json(config_json);
    if (common.seed_given) config.seed = common.seed;

    fs::create_directories(outdir);
    const std::string trace_dir = (fs::path(outdir) / "traces").string();

    rf::CampaignResults results;
    if (mode == "simulate") {
        rf::SimulatedProvider simulated(config);
        rf::RecordingProvider recording(simulated, trace_dir);
        results = rf::run_field_campaign(config, recording);
    } else {
        rf::ReplayProvider replay(trace_dir);
        results = rf::run_field_campaign(config, replay);
    }

    const auto report = rf::build_report(results);
    rf::json doc = rf::campaign_results_to_json(results, report);
    if (config.shift_model == "inplane_misalignment" && config.resonators.size() >= 3) {
        try {
            doc["misalignment"] = rf::to_json(rf::misalignment_from_campaign(results));
        } catch (const std::exception& e) {
            std::cerr << "field: misalignment subfit failed: " << e.what() << "\n";
        }
    }
    {
        std::ofstream results_out(fs::path(outdir) / "results.json");
        results_out << doc.dump(2) << "\n";
    }
    if (common.verbose) {
        for (const auto& event : results.audit)
            if (event.value("event", "") == "lost")
                std::cerr << "field: lost " << event.value("resonator", "") << " at "
                          << event.value("field_t", 0.0) << " T\n";
    }

    if (common.format == "json") emit(common, rf::report_to_json(report).dump(2) + "\n");
    else if (common.format == "csv") emit(common, render_report_csv(report));
    else emit(common, render_report_table(report));
    return exit_ok;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int run_synth(const std::string& truth_path, const std::string& kind,
              const std::string& outdir, double sigma, int points,
              double span_linewidths, std::vector<double> powers, double attenuation,
              double b_max, int b_points, const std::string& orientation,
              const CommonOptions& common) {
    std::ifstream in(truth_path);
    if (!in) {
        std::cerr << "synth: cannot open truth '" << truth_path << "'\n";
        return exit_error;
    }
    const rf::GeneratorTruth truth = rf::truth_from_json(rf::json::parse(in));

    rf::NoiseSpec noise;
    noise.sigma = sigma;
    noise.seed = common.seed_given ? common.seed : 1;

    fs::create_directories(outdir);
    const auto& res = truth.resonance;
    const double linewidth = res.total_rate() / rf::two_pi;
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = res.f0_hz() +
                  span_linewidths * linewidth *
                      (static_cast<double>(i) / (points - 1) - 0.5);

    rf::json sidecar = rf::to_json(truth);
    sidecar["noise"] = rf::to_json(noise);
    sidecar["kind"] = kind;

    if (kind == "trace") {
        auto trace = rf::generate_trace(truth, grid, noise);
        rf::write_trace_file((fs::path(outdir) / "trace.csv").string(), trace);
    } else if (kind == "powermap") {
        if (powers.empty())
            for (int k = -8; k <= 0; ++k) powers.push_back(-30.0 + 2.0 * k);
        std::sort(powers.begin(), powers.end());
        const auto map = rf::generate_power_map(truth, powers, grid, noise, attenuation);
        rf::json flag_list = rf::json::array();
        char name[64];
        for (std::size_t i = 0; i < map.traces.size(); ++i) {
            std::snprintf(name, sizeof name, "power_%03zu.csv", i);
            rf::write_trace_file((fs::path(outdir) / name).string(), map.traces[i]);
            flag_list.push_back({{"file", name},
                                 {"power_dbm", map.traces[i].power_dbm},
                                 {"bifurcated", static_cast<bool>(map.bifurcated[i])}});
        }
        sidecar["traces"] = flag_list;
    } else {  // fieldsweep
        std::vector<double> axis(b_points);
        for (int i = 0; i < b_points; ++i)
            axis[i] = b_max * static_cast<double>(i) / (b_points - 1);
        const auto series = rf::generate_field_sweep(
            truth, axis,
            orientation == "out_of_plane" ? rf::FieldOrientation::out_of_plane
                                          : rf::FieldOrientation::in_plane,
            noise);
        std::ofstream series_out(fs::path(outdir) / "fieldsweep.json");
        series_out << rf::to_json(series).dump(2) << "\n";
    }

    std::ofstream sidecar_out(fs::path(outdir) / "truth.json");
    sidecar_out << sidecar.dump(2) << "\n";
    if (common.verbose) std::cerr << "synth: wrote " << kind << " to " << outdir << "\n";
    emit(common, rf::json({{"outdir", outdir}, {"kind", kind}}).dump(2) + "\n");
    return exit_ok;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

int run_estimate(const std::string& input_path, double temperature,
                 const CommonOptions& common) {
    std::ifstream in(input_path);
    if (!in) {
        std::cerr << "estimate: cannot open '" << input_path << "'\n";
        return exit_error;
    }
    const rf::json doc = rf::json::parse(in);
    rf::reject_unknown_keys(doc, {"film", "geometry", "f0_hz"}, "estimate input");
    if (!doc.contains("film") || !doc.contains("geometry")) {
        std::cerr << "estimate: missing fields: film, geometry\n";
        return exit_error;
    }
    const rf::FilmProperties film = rf::film_from_json(doc.at("film"));
    rf::ResonatorGeometry geom = rf::geometry_from_json(doc.at("geometry"));
    if (geom.inductance_per_length == 0.0 && film.lk_sheet > 0.0 && geom.width_w > 0.0)
        geom.inductance_per_length = film.lk_sheet / geom.width_w;

    double f0 = doc.value("f0_hz", 0.0);
    std::vector<std::string> missing;
    if (geom.capacitance_per_length == 0.0) {
        if (f0 > 0.0 && geom.length_l > 0.0 && geom.inductance_per_length > 0.0) {
            geom.capacitance_per_length = rf::fit_ctilde_from_frequency(f0, geom);
        } else {
            missing.push_back("geometry.capacitance_per_length (or f0_hz to invert)");
        }
    }
    if (!missing.empty()) {
        std::cerr << "estimate: missing fields:";
        for (const auto& m : missing) std::cerr << " " << m;
        std::cerr << "\n";
        return exit_error;
    }

    rf::json out;
    out["inputs"] = {{"film", rf::to_json(film)}, {"geometry", rf::to_json(geom)}};
    if (f0 > 0.0) out["inputs"]["f0_hz"] = f0;

    const double f_quarterwave = rf::quarterwave_frequency(geom);
    if (f0 == 0.0) f0 = f_quarterwave;
    const double omega_r = rf::two_pi * f0;

    out["estimates"]["f0_quarterwave_hz"] = f_quarterwave;
    out["estimates"]["z_ohm"] = rf::characteristic_impedance(geom);
    out["estimates"]["ctilde_f_per_m"] = geom.capacitance_per_length;
    if (film.sheet_resistance > 0.0 && film.critical_temp_Tc > 0.0) {
        out["estimates"]["lk_sheet_from_rsq_t0"] = rf::lk_from_sheet_resistance(film, 0.0);
        if (temperature > 0.0 && temperature < film.critical_temp_Tc)
            out["estimates"]["lk_sheet_from_rsq"] =
                rf::lk_from_sheet_resistance(film, temperature);
    }
    if (film.depairing_current_Istar > 0.0)
        out["estimates"]["kerr_bcs_hz_per_photon"] =
            rf::kerr_bcs(omega_r, geom.total_inductance(), film.depairing_current_Istar) /
            rf::two_pi;
    if (film.grain_size_a > 0.0 && film.switching_current_Isw > 0.0 &&
        film.thickness_t > 0.0)
        out["estimates"]["kerr_jj_hz_per_photon"] =
            rf::kerr_jj(omega_r, film, geom) / rf::two_pi;

    if (common.format == "json") {
        emit(common, out.dump(2) + "\n");
    } else {
        std::string text;
        for (const auto& item : out.at("estimates").items())
            text += item.key() + (common.format == "csv" ? "," : "  ") +
                    format_number(item.value().get<double>()) + "\n";
        emit(common, text);
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superconducting resonator characterization toolkit"};
    app.require_subcommand(1);
    app.set_config("--config-file", "", "Defaults file (INI)");

    CommonOptions common;

    // fit-trace
    std::string trace_path, curve_path;
    auto* fit_cmd = app.add_subcommand("fit-trace", "Fit one hanger trace");
    fit_cmd->add_option("trace", trace_path, "Trace CSV file")->required();
    fit_cmd->add_option("--emit-curve", curve_path, "Write data/model series CSV");
    add_common(fit_cmd, common);

    // kerr
    std::string map_dir;
    auto* kerr_cmd = app.add_subcommand("kerr", "Self-Kerr from a power-map directory");
    kerr_cmd->add_option("directory", map_dir, "Directory of trace CSVs")->required();
    add_common(kerr_cmd, common);

    // field
    std::string field_config, field_mode = "simulate", field_outdir;
    auto* field_cmd = app.add_subcommand("field", "Run or replay a field campaign");
    field_cmd->add_option("--config", field_config, "Campaign config JSON")->required();
    field_cmd->add_option("--mode", field_mode, "simulate or replay")
        ->check(CLI::IsMember({"simulate", "replay"}));
    field_cmd->add_option("--outdir", field_outdir, "Campaign output directory")
        ->required();
    add_common(field_cmd, common);

    // synth
    std::string truth_path, synth_kind, synth_outdir, synth_orientation = "out_of_plane";
    double synth_sigma = 0.0, synth_span = 10.0, synth_attenuation = 80.0,
           synth_bmax = 1.0;
    int synth_points = 401, synth_bpoints = 25;
    std::vector<double> synth_powers;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic artifacts");
    synth_cmd->add_option("--truth", truth_path, "Generator truth JSON")->required();
    synth_cmd->add_option("--kind", synth_kind, "trace, powermap or fieldsweep")
        ->required()
        ->check(CLI::IsMember({"trace", "powermap", "fieldsweep"}));
    synth_cmd->add_option("--outdir", synth_outdir, "Output directory")->required();
    synth_cmd->add_option("--sigma", synth_sigma, "Per-quadrature noise");
    synth_cmd->add_option("--points", synth_points, "Points per trace");
    synth_cmd->add_option("--span-linewidths", synth_span, "Trace span in linewidths");
    synth_cmd->add_option("--powers", synth_powers, "Power list (dBm)")->expected(-1);
    synth_cmd->add_option("--attenuation", synth_attenuation, "Line attenuation (dB)");
    synth_cmd->add_option("--b-max", synth_bmax, "Field sweep maximum (T)");
    synth_cmd->add_option("--b-points", synth_bpoints, "Field sweep points");
    synth_cmd->add_option("--orientation", synth_orientation, "Field orientation")
        ->check(CLI::IsMember({"in_plane", "out_of_plane"}));
    add_common(synth_cmd, common);

    // estimate
    std::string estimate_path;
    double estimate_temperature = 0.0;
    auto* estimate_cmd =
        app.add_subcommand("estimate", "Design estimates from film + geometry");
    estimate_cmd->add_option("input", estimate_path, "Film/geometry JSON")->required();
    estimate_cmd->add_option("--temperature", estimate_temperature,
                             "Evaluation temperature (K)");
    add_common(estimate_cmd, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit_cmd) return run_fit_trace(trace_path, common, curve_path);
        if (*kerr_cmd) return run_kerr(map_dir, common);
        if (*field_cmd) return run_field(field_config, field_mode, field_outdir, common);
        if (*synth_cmd)
            return run_synth(truth_path, synth_kind, synth_outdir, synth_sigma,
                             synth_points, synth_span, synth_powers, synth_attenuation,
                             synth_bmax, synth_bpoints, synth_orientation, common);
        if (*estimate_cmd) return run_estimate(estimate_path, estimate_temperature, common);
    } catch (const rf::NoDipFound& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return exit_rejected;
    } catch (const rf::PositiveShiftDominates& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return exit_rejected;
    } catch (const rf::BifurcationInFitWindow& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return exit_rejected;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
