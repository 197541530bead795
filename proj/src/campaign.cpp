#include "resforge/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "resforge/trace_io.hpp"

namespace resforge {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void CampaignConfig::validate() const {
    if (schema != 1) throw ConfigError("config: unsupported schema version");
    if (!(field_step_t > 0.0)) throw ConfigError("config: field step must be > 0");
    if (max_field_t < 0.0) throw ConfigError("config: max field must be >= 0");
    if (!(ramp_rate_mt_per_min > 0.0)) throw ConfigError("config: ramp rate must be > 0");
    if (settle_time_s < 0.0) throw ConfigError("config: settle time must be >= 0");
    if (!(fast_scan_width_hz > 0.0)) throw ConfigError("config: fast-scan width must be > 0");
    if (fast_scan_points < 16) throw ConfigError("config: fast scan needs >= 16 points");
    if (detail_points < 8) throw ConfigError("config: detail scan needs >= 8 points");
    if (!(detail_span_linewidths > 0.0))
        throw ConfigError("config: detail span must be > 0 linewidths");
    if (noise_sigma < 0.0) throw ConfigError("config: noise sigma must be >= 0");
    if (shift_model != "quadratic_bc" && shift_model != "inplane_misalignment")
        throw ConfigError("config: unknown shift model '" + shift_model + "'");
    if (resonators.empty()) throw ConfigError("config: no resonators");

    std::set<std::string> names;
    for (const auto& r : resonators) {
        if (r.name.empty()) throw ConfigError("config: resonator without a name");
        if (!names.insert(r.name).second)
            throw ConfigError("config: duplicate resonator '" + r.name + "'");
        if (!(r.width_m > 0.0) || !(r.design_f0_hz > 0.0) || !(r.q_i > 0.0) ||
            !(r.q_c > 0.0))
            throw ConfigError("config: resonator '" + r.name +
                              "' needs width, f0, q_i, q_c > 0");
        if (shift_model == "quadratic_bc") {
            const double b_c = orientation == FieldOrientation::in_plane ? r.b_c_parallel_t
                                                                         : r.b_c_perp_t;
            if (max_field_t > 0.0 && !(b_c > 0.0))
                throw ConfigError("config: resonator '" + r.name +
                                  "' needs a critical field for the quadratic model");
        }
    }
    if (shift_model == "inplane_misalignment") {
        if (orientation != FieldOrientation::in_plane)
            throw ConfigError("config: misalignment model requires in-plane orientation");
        if (!(film.thickness_t > 0.0 && film.critical_temp_Tc > 0.0 &&
              film.diffusion_D > 0.0))
            throw ConfigError("config: misalignment model needs film t, Tc and D");
    }
    for (std::size_t i = 1; i < powers_dbm.size(); ++i)
        if (!(powers_dbm[i] > powers_dbm[i - 1]))
            throw ConfigError("config: power list must be strictly ascending");
}

CampaignConfig campaign_config_from_json(const json& j) {
    try {
        reject_unknown_keys(
            j, {"schema",          "orientation",       "max_field_t",
                "field_step_t",    "ramp_rate_mt_per_min", "settle_time_s",
                "powers_dbm",      "power_scan_fields_t",  "tracking_power_dbm",
                "attenuation_db",  "fast_scan_width_hz",   "fast_scan_points",
                "detail_span_linewidths", "detail_points", "noise_sigma",
                "seed",            "shift_model",       "theta_b_rad",
                "film",            "resonators"},
            "config");

        CampaignConfig config;
        config.schema = j.value("schema", 0);
        const std::string orientation = j.value("orientation", "in_plane");
        if (orientation == "in_plane") config.orientation = FieldOrientation::in_plane;
        else if (orientation == "out_of_plane")
            config.orientation = FieldOrientation::out_of_plane;
        else throw ConfigError("config: unknown orientation '" + orientation + "'");

        config.max_field_t = j.value("max_field_t", 0.0);
        config.field_step_t = j.value("field_step_t", 0.0);
        config.ramp_rate_mt_per_min = j.value("ramp_rate_mt_per_min", 100.0);
        config.settle_time_s = j.value("settle_time_s", 120.0);
        if (j.contains("powers_dbm"))
            config.powers_dbm = j.at("powers_dbm").get<std::vector<double>>();
        if (j.contains("power_scan_fields_t"))
            config.power_scan_fields_t =
                j.at("power_scan_fields_t").get<std::vector<double>>();
        config.tracking_power_dbm = j.value("tracking_power_dbm", -30.0);
        config.attenuation_db = j.value("attenuation_db", 80.0);
        config.fast_scan_width_hz = j.value("fast_scan_width_hz", 80e6);
        config.fast_scan_points = j.value("fast_scan_points", 401);
        config.detail_span_linewidths = j.value("detail_span_linewidths", 20.0);
        config.detail_points = j.value("detail_points", 401);
        config.noise_sigma = j.value("noise_sigma", 0.0);
        config.seed = j.value("seed", std::uint64_t{1});
        config.shift_model = j.value("shift_model", "quadratic_bc");
        config.theta_b_rad = j.value("theta_b_rad", 0.0);
        if (j.contains("film")) config.film = film_from_json(j.at("film"));

        if (!j.contains("resonators")) throw ConfigError("config: missing resonators");
        for (const auto& rj : j.at("resonators")) {
            reject_unknown_keys(rj,
                                {"name", "width_m", "length_m", "design_f0_hz", "q_i",
                                 "q_c", "environment", "b_c_parallel_t", "b_c_perp_t",
                                 "qi_template"},
                                "resonator");
            ResonatorConfig r;
            r.name = rj.value("name", "");
            r.width_m = rj.value("width_m", 0.0);
            r.length_m = rj.value("length_m", 0.0);
            r.design_f0_hz = rj.value("design_f0_hz", 0.0);
            r.q_i = rj.value("q_i", 0.0);
            r.q_c = rj.value("q_c", 0.0);
            if (rj.contains("environment"))
                r.env = environment_from_json(rj.at("environment"));
            r.b_c_parallel_t = rj.value("b_c_parallel_t", 0.0);
            r.b_c_perp_t = rj.value("b_c_perp_t", 0.0);
            if (rj.contains("qi_template"))
                for (const auto& knot : rj.at("qi_template")) {
                    reject_unknown_keys(knot, {"b_t", "q_i"}, "qi_template knot");
                    r.qi_template.emplace_back(knot.value("b_t", 0.0),
                                               knot.value("q_i", 0.0));
                }
            config.resonators.push_back(std::move(r));
        }
        config.validate();
        return config;
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
}

json to_json(const CampaignConfig& config) {
    json resonators = json::array();
    for (const auto& r : config.resonators) {
        json knots = json::array();
        for (const auto& [b, q] : r.qi_template) knots.push_back({{"b_t", b}, {"q_i", q}});
        resonators.push_back({{"name", r.name},
                              {"width_m", r.width_m},
                              {"length_m", r.length_m},
                              {"design_f0_hz", r.design_f0_hz},
                              {"q_i", r.q_i},
                              {"q_c", r.q_c},
                              {"environment", to_json(r.env)},
                              {"b_c_parallel_t", r.b_c_parallel_t},
                              {"b_c_perp_t", r.b_c_perp_t},
                              {"qi_template", knots}});
    }
    return {{"schema", config.schema},
            {"orientation", config.orientation == FieldOrientation::in_plane
                                ? "in_plane"
                                : "out_of_plane"},
            {"max_field_t", config.max_field_t},
            {"field_step_t", config.field_step_t},
            {"ramp_rate_mt_per_min", config.ramp_rate_mt_per_min},
            {"settle_time_s", config.settle_time_s},
            {"powers_dbm", config.powers_dbm},
            {"power_scan_fields_t", config.power_scan_fields_t},
            {"tracking_power_dbm", config.tracking_power_dbm},
            {"attenuation_db", config.attenuation_db},
            {"fast_scan_width_hz", config.fast_scan_width_hz},
            {"fast_scan_points", config.fast_scan_points},
            {"detail_span_linewidths", config.detail_span_linewidths},
            {"detail_points", config.detail_points},
            {"noise_sigma", config.noise_sigma},
            {"seed", config.seed},
            {"shift_model", config.shift_model},
            {"theta_b_rad", config.theta_b_rad},
            {"film", to_json(config.film)},
            {"resonators", resonators}};
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

SimulatedProvider::SimulatedProvider(CampaignConfig config) : config_(std::move(config)) {
    config_.validate();
}

double SimulatedProvider::true_rel_shift(const ResonatorConfig& res, double field_t) const {
    if (field_t == 0.0) return 0.0;
    if (config_.shift_model == "inplane_misalignment") {
        const ResonatorGeometry geom = ResonatorGeometry::from_film(
            config_.film, res.width_m, res.length_m > 0.0 ? res.length_m : 1e-4, 0.0);
        return inplane_freq_shift(field_t, config_.film, geom, config_.theta_b_rad);
    }
    const double b_c = config_.orientation == FieldOrientation::in_plane
                           ? res.b_c_parallel_t
                           : res.b_c_perp_t;
    return quadratic_shift_bc(field_t, b_c);
}

namespace {

double interpolate_knots(const std::vector<std::pair<double, double>>& knots, double b,
                         double fallback) {
    if (knots.empty()) return fallback;
    if (b <= knots.front().first) return knots.front().second;
    if (b >= knots.back().first) return knots.back().second;
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (b <= knots[i].first) {
            const auto& [b0, q0] = knots[i - 1];
            const auto& [b1, q1] = knots[i];
            return q0 + (b - b0) / (b1 - b0) * (q1 - q0);
        }
    return knots.back().second;
}

}  // namespace

ComplexTrace SimulatedProvider::scan(const ScanRequest& request) {
    const auto it = std::find_if(config_.resonators.begin(), config_.resonators.end(),
                                 [&](const auto& r) { return r.name == request.resonator; });
    if (it == config_.resonators.end())
        throw ConfigError("scan request for unknown resonator '" + request.resonator + "'");
    const ResonatorConfig& res = *it;

    const double f0 = res.design_f0_hz * (1.0 + true_rel_shift(res, request.field_t));
    const double q_i = interpolate_knots(res.qi_template, request.field_t, res.q_i);

    GeneratorTruth truth;
    truth.resonance = ResonanceParams::from_quality_factors(f0, q_i, res.q_c);
    truth.env = res.env;

    std::vector<double> grid(request.points);
    for (int i = 0; i < request.points; ++i)
        grid[i] = request.f_lo_hz + (request.f_hi_hz - request.f_lo_hz) *
                                        static_cast<double>(i) /
                                        static_cast<double>(request.points - 1);

    NoiseSpec noise;
    noise.sigma = config_.noise_sigma;
    noise.seed = derive_seed(config_.seed, request.scan_index);
    ComplexTrace trace = generate_trace(truth, grid, noise);
    trace.power_dbm = request.power_dbm;
    trace.attenuation_db = request.attenuation_db;
    return trace;
}

std::string trace_file_name(std::uint64_t scan_index) {
    char name[32];
    std::snprintf(name, sizeof name, "scan_%06llu.csv",
                  static_cast<unsigned long long>(scan_index));
    return name;
}

ReplayProvider::ReplayProvider(std::string directory) : directory_(std::move(directory)) {}

ComplexTrace ReplayProvider::scan(const ScanRequest& request) {
    const std::string path =
        (std::filesystem::path(directory_) / trace_file_name(request.scan_index)).string();
    ComplexTrace trace = ingest_trace_file(path);
    if (static_cast<int>(trace.size()) != request.points)
        throw ConfigError("replay: " + path + " does not match the requested scan");
    return trace;
}

RecordingProvider::RecordingProvider(TraceProvider& inner, std::string directory)
    : inner_(inner), directory_(std::move(directory)) {
    std::filesystem::create_directories(directory_);
}

ComplexTrace RecordingProvider::scan(const ScanRequest& request) {
    ComplexTrace trace = inner_.scan(request);
    const std::string path =
        (std::filesystem::path(directory_) / trace_file_name(request.scan_index)).string();
    write_trace_file(path, trace);
    return trace;
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

namespace {

struct DipEstimate {
    double f_dip = 0.0;
    double fwhm = 0.0;
};

// Coarse dip locator for fast scans: baseline and noise from the wings,
// dip frequency from the magnitude minimum and a half-depth width.
std::optional<DipEstimate> detect_dip(const ComplexTrace& trace) {
    const std::size_t n = trace.size();
    const std::size_t w = std::min(std::max<std::size_t>(3, n / 10), n / 2);

    std::vector<double> wing_mags;
    double diff_sq = 0.0;
    std::size_t n_diff = 0;
    auto add_wing = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            wing_mags.push_back(std::abs(trace.samples[i]));
            if (i > begin) {
                diff_sq += std::norm(trace.samples[i] - trace.samples[i - 1]);
                ++n_diff;
            }
        }
    };
    add_wing(0, w);
    add_wing(n - w, n);
    std::nth_element(wing_mags.begin(), wing_mags.begin() + wing_mags.size() / 2,
                     wing_mags.end());
    const double baseline = wing_mags[wing_mags.size() / 2];
    const double noise = n_diff ? std::sqrt(diff_sq / (4.0 * n_diff)) : 0.0;

    std::size_t dip_index = 0;
    double min_mag = baseline;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::abs(trace.samples[i]);
        if (m < min_mag) {
            min_mag = m;
            dip_index = i;
        }
    }
    const double dip = baseline - min_mag;
    if (!(dip > std::max(3.0 * noise, 1e-9) + 1e-12 * std::max(baseline, 1.0)))
        return std::nullopt;

    const double half_level = baseline - 0.5 * dip;
    std::size_t lo = dip_index, hi = dip_index;
    while (lo > 0 && std::abs(trace.samples[lo]) < half_level) --lo;
    while (hi + 1 < n && std::abs(trace.samples[hi]) < half_level) ++hi;
    double fwhm = trace.freqs[hi] - trace.freqs[lo];
    if (!(fwhm > 0.0)) fwhm = trace.span() / static_cast<double>(n - 1);
    return DipEstimate{trace.freqs[dip_index], fwhm};
}

}  // namespace

TrackedResonance track_resonance(double previous_f0_hz, double linewidth_hint_hz,
                                 const std::string& resonator, double field_t,
                                 TraceProvider& source, const CampaignConfig& config,
                                 std::uint64_t next_scan_index,
                                 std::vector<ScanRequest>* requests, bool centred_window,
                                 double power_dbm_override) {
    const double power = std::isnan(power_dbm_override) ? config.tracking_power_dbm
                                                        : power_dbm_override;
    auto issue = [&](double f_lo, double f_hi, int points) {
        ScanRequest request{next_scan_index++, resonator, field_t, f_lo,
                            f_hi,              points,    power,   config.attenuation_db};
        if (requests) requests->push_back(request);
        return source.scan(request);
    };

    double f_lo, f_hi;
    if (centred_window) {
        f_lo = previous_f0_hz - config.fast_scan_width_hz / 2.0;
        f_hi = previous_f0_hz + config.fast_scan_width_hz / 2.0;
    } else {
        // Downward search (frequencies only decrease with field), with a
        // few linewidths of headroom above so an unshifted dip stays
        // fully visible.
        const double margin = std::max(5.0 * linewidth_hint_hz,
                                       config.fast_scan_width_hz / 64.0);
        f_lo = previous_f0_hz - config.fast_scan_width_hz;
        f_hi = previous_f0_hz + margin;
    }

    TrackedResonance tracked;
    tracked.resonator = resonator;
    tracked.field_t = field_t;
    tracked.fast_scan_index = next_scan_index;
    const ComplexTrace fast = issue(f_lo, f_hi, config.fast_scan_points);
    const auto dip = detect_dip(fast);
    if (!dip) {
        tracked.lost = true;
        tracked.qc_reason = "LostResonance: no dip in the fast window";
        return tracked;
    }

    const double linewidth = linewidth_hint_hz > 0.0 ? linewidth_hint_hz : dip->fwhm;
    const double span = std::min(config.detail_span_linewidths * linewidth,
                                 config.fast_scan_width_hz);  // fast >= detail
    tracked.detail_scan_index = next_scan_index;
    const ComplexTrace detail =
        issue(dip->f_dip - span / 2.0, dip->f_dip + span / 2.0, config.detail_points);
    try {
        tracked.fit = fit_linear_resonance(detail);
        const QcDecision qc = qc_filter(tracked.fit);
        tracked.accepted = qc.accepted;
        tracked.qc_reason = qc.reason;
        tracked.f0_est_hz = tracked.fit.param("f0_hz");
    } catch (const NoDipFound& e) {
        tracked.accepted = false;
        tracked.qc_reason = e.what();
        tracked.f0_est_hz = dip->f_dip;
    }
    return tracked;
}

namespace {

class CampaignRunner {
public:
    CampaignRunner(const CampaignConfig& config, TraceProvider& source)
        : config_(config), source_(source) {
        results_.config = config;
    }

    CampaignResults run() {
        zero_field_reference();
        if (power_scan_due(0.0))
            for (auto& [name, state] : states_)
                if (state.active) power_scan(name, state, 0.0);
        double previous_field = 0.0;
        for (double field = config_.field_step_t;
             field <= config_.max_field_t + 1e-12 * config_.field_step_t;
             field += config_.field_step_t) {
            ramp_to(previous_field, field);
            for (auto& [name, state] : states_)
                if (state.active) track_step(name, state, field);
            if (power_scan_due(field))
                for (auto& [name, state] : states_)
                    if (state.active) power_scan(name, state, field);
            previous_field = field;
        }
        return std::move(results_);
    }

private:
    struct ResonatorState {
        bool active = false;
        double previous_f0 = 0.0;
        double previous_linewidth_hz = 0.0;
        double reference_f0 = 0.0;
    };

    void log_requests(const std::vector<ScanRequest>& requests) {
        for (const auto& request : requests) {
            results_.audit.push_back({{"event", "scan"},
                                      {"scan_index", request.scan_index},
                                      {"resonator", request.resonator},
                                      {"field_t", request.field_t},
                                      {"f_lo_hz", request.f_lo_hz},
                                      {"f_hi_hz", request.f_hi_hz},
                                      {"points", request.points},
                                      {"power_dbm", request.power_dbm}});
            next_scan_index_ = request.scan_index + 1;
        }
    }

    void log_outcome(const TrackedResonance& tracked) {
        if (tracked.lost) {
            results_.audit.push_back({{"event", "lost"},
                                      {"resonator", tracked.resonator},
                                      {"field_t", tracked.field_t}});
            return;
        }
        results_.audit.push_back({{"event", "fit"},
                                  {"scan_index", tracked.detail_scan_index},
                                  {"resonator", tracked.resonator},
                                  {"field_t", tracked.field_t},
                                  {"accepted", tracked.accepted},
                                  {"reason", tracked.qc_reason},
                                  {"f0_hz", tracked.f0_est_hz}});
    }

    ComplexTrace request_scan(const std::string& name, double field, double f_lo,
                              double f_hi, int points, double power_dbm) {
        ScanRequest request{next_scan_index_++, name,   field,
                            f_lo,               f_hi,   points,
                            power_dbm,          config_.attenuation_db};
        results_.audit.push_back({{"event", "scan"},
                                  {"scan_index", request.scan_index},
                                  {"resonator", name},
                                  {"field_t", field},
                                  {"f_lo_hz", f_lo},
                                  {"f_hi_hz", f_hi},
                                  {"points", points},
                                  {"power_dbm", power_dbm}});
        last_scan_index_ = request.scan_index;
        return source_.scan(request);
    }

    void zero_field_reference() {
        for (const auto& res : config_.resonators) {
            auto& state = states_[res.name];
            std::vector<ScanRequest> requests;
            TrackedResonance tracked =
                track_resonance(res.design_f0_hz, 0.0, res.name, 0.0, source_, config_,
                                next_scan_index_, &requests, /*centred_window=*/true);
            log_requests(requests);
            log_outcome(tracked);
            if (tracked.lost) continue;
            results_.tracked.push_back(tracked);
            if (!tracked.accepted) {
                mark_lost(res.name, 0.0);
                continue;
            }
            state.active = true;
            state.previous_f0 = tracked.f0_est_hz;
            state.reference_f0 = tracked.f0_est_hz;
            state.previous_linewidth_hz =
                tracked.fit.param("kappa_hz") + tracked.fit.param("gamma_hz");
            results_.reference_fits[res.name] = tracked.fit;
            results_.reference_f0_hz[res.name] = tracked.f0_est_hz;

            auto& series = results_.series[res.name];
            series.orientation = config_.orientation;
            series.points.push_back({0.0, 0.0, tracked.fit.param("q_i"),
                                     tracked.fit.param("q_c")});
        }
        if (results_.reference_fits.empty())
            throw MissingInput("campaign: no resonator produced a zero-field reference");
    }

    void ramp_to(double from_t, double to_t) {
        const double minutes = (to_t - from_t) * 1000.0 / config_.ramp_rate_mt_per_min;
        results_.elapsed_minutes += minutes;
        results_.audit.push_back({{"event", "ramp"},
                                  {"from_t", from_t},
                                  {"to_t", to_t},
                                  {"minutes", minutes}});
        const double settle_minutes = config_.settle_time_s / 60.0;
        results_.elapsed_minutes += settle_minutes;
        results_.audit.push_back({{"event", "settle"}, {"minutes", settle_minutes}});
    }

    void track_step(const std::string& name, ResonatorState& state, double field) {
        std::vector<ScanRequest> requests;
        TrackedResonance tracked =
            track_resonance(state.previous_f0, state.previous_linewidth_hz, name, field,
                            source_, config_, next_scan_index_, &requests);
        log_requests(requests);
        log_outcome(tracked);
        results_.tracked.push_back(tracked);
        if (tracked.lost) {
            state.active = false;
            return;
        }
        if (!tracked.accepted) return;  // keep tracking from the last good point

        auto& series = results_.series[name];
        series.points.push_back(
            {field, (tracked.f0_est_hz - state.reference_f0) / state.reference_f0,
             tracked.fit.param("q_i"), tracked.fit.param("q_c")});
        state.previous_f0 = tracked.f0_est_hz;
        state.previous_linewidth_hz =
            tracked.fit.param("kappa_hz") + tracked.fit.param("gamma_hz");
    }

    bool power_scan_due(double field) const {
        for (double target : config_.power_scan_fields_t)
            if (std::abs(target - field) <= config_.field_step_t / 2.0) return true;
        return false;
    }

    void power_scan(const std::string& name, ResonatorState& state, double field) {
        if (config_.powers_dbm.empty()) return;
        PowerScanRecord record;
        record.resonator = name;
        record.field_t = field;
        for (double power : config_.powers_dbm) {
            const double span = std::min(
                config_.detail_span_linewidths * state.previous_linewidth_hz,
                config_.fast_scan_width_hz);
            ComplexTrace trace = request_scan(name, field, state.previous_f0 - span / 2.0,
                                              state.previous_f0 + span / 2.0,
                                              config_.detail_points, power);
            try {
                const FitResult fit = fit_linear_resonance(trace);
                const QcDecision qc = qc_filter(fit);
                results_.audit.push_back({{"event", "fit"},
                                          {"scan_index", last_scan_index_},
                                          {"resonator", name},
                                          {"field_t", field},
                                          {"accepted", qc.accepted},
                                          {"reason", qc.reason},
                                          {"f0_hz", fit.param("f0_hz")}});
                if (!qc.accepted) continue;
                const ResonanceParams res(two_pi * fit.param("f0_hz"),
                                          two_pi * fit.param("kappa_hz"),
                                          two_pi * fit.param("gamma_hz"));
                record.scan.points.push_back({photon_number(power, config_.attenuation_db,
                                                            res),
                                              fit.param("q_i"), fit.std_error("q_i")});
            } catch (const NoDipFound&) {
                results_.audit.push_back({{"event", "fit"},
                                          {"scan_index", last_scan_index_},
                                          {"resonator", name},
                                          {"field_t", field},
                                          {"accepted", false},
                                          {"reason", "NoDipFound"}});
            }
        }
        results_.audit.push_back({{"event", "power_scan"},
                                  {"resonator", name},
                                  {"field_t", field},
                                  {"n_points", record.scan.points.size()}});
        results_.power_scans.push_back(std::move(record));
    }

    void mark_lost(const std::string& name, double field) {
        states_[name].active = false;
        results_.audit.push_back(
            {{"event", "lost"}, {"resonator", name}, {"field_t", field}});
    }

    const CampaignConfig& config_;
    TraceProvider& source_;
    CampaignResults results_;
    std::map<std::string, ResonatorState> states_;
    std::uint64_t next_scan_index_ = 0;
    std::uint64_t last_scan_index_ = 0;
};

}  // namespace

CampaignResults run_field_campaign(const CampaignConfig& config, TraceProvider& source) {
    config.validate();
    return CampaignRunner(config, source).run();
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

std::vector<ResonatorReport> build_report(const CampaignResults& results,
                                          const std::map<std::string, FitResult>& kerr_fits) {
    std::vector<ResonatorReport> report;
    std::vector<std::string> missing;

    for (const auto& res : results.config.resonators) {
        const auto ref = results.reference_fits.find(res.name);
        if (ref == results.reference_fits.end()) {
            missing.push_back(res.name);
            continue;
        }
        ResonatorReport row;
        row.name = res.name;
        row.width_nm = res.width_m * 1e9;
        row.f0_ghz = ref->second.param("f0_hz") / 1e9;

        // Q_i at <n_ph> ~ 1 from a zero-field power scan when available,
        // otherwise from the reference fit.
        row.q_i = ref->second.param("q_i");
        row.q_i_err = ref->second.std_error("q_i");
        for (const auto& scan : results.power_scans) {
            if (scan.resonator != res.name || scan.field_t != 0.0) continue;
            double best_distance = std::numeric_limits<double>::infinity();
            for (const auto& p : scan.scan.points) {
                const double distance = std::abs(std::log10(std::max(p.n_ph, 1e-300)));
                if (distance < best_distance) {
                    best_distance = distance;
                    row.q_i = p.q_i;
                    row.q_i_err = p.q_i_err;
                }
            }
        }
        row.q_c = ref->second.param("q_c");
        row.q_c_err = ref->second.std_error("q_c");

        // Impedance from the quarter-wave chain: Ltilde = Lk/w, Ctilde
        // from inverting the measured f0 at the design length.
        if (results.config.film.lk_sheet > 0.0 && res.length_m > 0.0) {
            const double ltilde = results.config.film.lk_sheet / res.width_m;
            ResonatorGeometry geom(res.width_m, res.length_m, ltilde, 1.0);
            const double ctilde =
                fit_ctilde_from_frequency(ref->second.param("f0_hz"), geom);
            geom.capacitance_per_length = ctilde;
            row.z_kohm = characteristic_impedance(geom) / 1e3;
        } else {
            row.flags.push_back("z: film sheet inductance or length missing");
        }

        if (const auto kerr = kerr_fits.find(res.name); kerr != kerr_fits.end()) {
            row.kerr_hz_per_photon = kerr->second.param("kerr_hz_per_photon");
            row.kerr_err = kerr->second.std_error("kerr_hz_per_photon");
        }

        const auto series = results.series.find(res.name);
        if (series != results.series.end() && series->second.points.size() >= 2) {
            try {
                const FitResult bc = fit_field_sweep_bc(series->second);
                if (results.config.orientation == FieldOrientation::in_plane) {
                    row.b_c_parallel_t = bc.param("b_c_t");
                    row.b_c_parallel_err = bc.std_error("b_c_t");
                } else {
                    row.b_c_perp_mt = bc.param("b_c_t") * 1e3;
                    row.b_c_perp_err = bc.std_error("b_c_t") * 1e3;
                }
            } catch (const PositiveShiftDominates& e) {
                row.flags.push_back(std::string("b_c: ") + e.what());
            }
        } else {
            row.flags.push_back("b_c: insufficient tracked points");
        }
        for (const auto& event : results.audit)
            if (event.value("event", "") == "lost" && event.value("resonator", "") == res.name)
                row.flags.push_back("lost at " +
                                    std::to_string(event.value("field_t", 0.0)) + " T");
        report.push_back(std::move(row));
    }

    if (!missing.empty()) {
        std::string message = "missing zero-field fits for:";
        for (const auto& name : missing) message += " " + name;
        throw MissingInput(message);
    }
    return report;
}

json report_to_json(const std::vector<ResonatorReport>& report) {
    json rows = json::array();
    for (const auto& row : report) {
        json r = {{"name", row.name},
                  {"width_nm", row.width_nm},
                  {"f0_ghz", row.f0_ghz},
                  {"q_i", row.q_i},
                  {"q_i_err", row.q_i_err},
                  {"q_c", row.q_c},
                  {"q_c_err", row.q_c_err},
                  {"z_kohm", row.z_kohm},
                  {"kerr_hz_per_photon", nullptr},
                  {"kerr_err", nullptr},
                  {"b_c_parallel_t", nullptr},
                  {"b_c_parallel_err", nullptr},
                  {"b_c_perp_mt", nullptr},
                  {"b_c_perp_err", nullptr},
                  {"flags", row.flags}};
        if (row.kerr_hz_per_photon) r["kerr_hz_per_photon"] = *row.kerr_hz_per_photon;
        if (row.kerr_err) r["kerr_err"] = *row.kerr_err;
        if (row.b_c_parallel_t) r["b_c_parallel_t"] = *row.b_c_parallel_t;
        if (row.b_c_parallel_err) r["b_c_parallel_err"] = *row.b_c_parallel_err;
        if (row.b_c_perp_mt) r["b_c_perp_mt"] = *row.b_c_perp_mt;
        if (row.b_c_perp_err) r["b_c_perp_err"] = *row.b_c_perp_err;
        rows.push_back(std::move(r));
    }
    return {{"schema", 1}, {"columns",
             {"name", "width_nm", "f0_ghz", "q_i", "q_c", "z_kohm", "kerr_hz_per_photon",
              "b_c_parallel_t", "b_c_perp_mt"}},
            {"rows", rows}};
}

void validate_report_json(const json& report) {
    const std::vector<std::string> row_keys = {
        "name",         "width_nm",       "f0_ghz",          "q_i",
        "q_i_err",      "q_c",            "q_c_err",         "z_kohm",
        "kerr_hz_per_photon", "kerr_err", "b_c_parallel_t",  "b_c_parallel_err",
        "b_c_perp_mt",  "b_c_perp_err",   "flags"};
    if (!report.is_object() || report.value("schema", 0) != 1)
        throw InvalidParameter("report: missing schema 1");
    if (!report.contains("rows") || !report.at("rows").is_array())
        throw InvalidParameter("report: missing rows");
    for (const auto& row : report.at("rows")) {
        reject_unknown_keys(row, row_keys, "report row");
        for (const auto& key : row_keys)
            if (!row.contains(key))
                throw InvalidParameter("report row: missing column '" + key + "'");
        if (!row.at("name").is_string() || !row.at("flags").is_array())
            throw InvalidParameter("report row: bad name/flags types");
        for (const auto& key : {"width_nm", "f0_ghz", "q_i", "q_i_err", "q_c", "q_c_err",
                                "z_kohm"})
            if (!row.at(key).is_number())
                throw InvalidParameter(std::string("report row: column '") + key +
                                       "' must be numeric");
    }
}

FitResult misalignment_from_campaign(const CampaignResults& results) {
    std::map<double, FieldSweepSeries> by_width;
    for (const auto& res : results.config.resonators) {
        const auto series = results.series.find(res.name);
        if (series == results.series.end()) continue;
        if (series->second.orientation != FieldOrientation::in_plane) continue;
        by_width[res.width_m] = series->second;
    }
    return fit_misalignment(by_width, results.config.film);
}

json campaign_results_to_json(const CampaignResults& results,
                              const std::vector<ResonatorReport>& report) {
    json tracked = json::array();
    for (const auto& t : results.tracked)
        tracked.push_back({{"resonator", t.resonator},
                           {"field_t", t.field_t},
                           {"f0_est_hz", t.f0_est_hz},
                           {"accepted", t.accepted},
                           {"reason", t.qc_reason},
                           {"fit", to_json(t.fit)},
                           {"fast_scan_index", t.fast_scan_index},
                           {"detail_scan_index", t.detail_scan_index}});
    json series = json::object();
    for (const auto& [name, s] : results.series) series[name] = to_json(s);
    json references = json::object();
    for (const auto& [name, fit] : results.reference_fits) references[name] = to_json(fit);
    json power_scans = json::array();
    for (const auto& record : results.power_scans)
        power_scans.push_back({{"resonator", record.resonator},
                               {"field_t", record.field_t},
                               {"scan", to_json(record.scan)}});
    return {{"schema", 1},
            {"config", to_json(results.config)},
            {"elapsed_minutes", results.elapsed_minutes},
            {"reference_fits", references},
            {"tracked", tracked},
            {"series", series},
            {"power_scans", power_scans},
            {"report", report_to_json(report)},
            {"audit", results.audit}};
}

}  // namespace resforge
