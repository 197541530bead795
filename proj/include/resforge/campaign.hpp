#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resforge/serialize.hpp"
#include "resforge/synth.hpp"

namespace resforge {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One resonator entry of a campaign: design geometry plus the generator
/// truth used in simulate mode.
struct ResonatorConfig {
    std::string name;
    double width_m = 0.0;
    double length_m = 0.0;
    double design_f0_hz = 0.0;
    double q_i = 0.0;  // zero-field truth
    double q_c = 0.0;
    EnvironmentParams env;
    double b_c_parallel_t = 0.0;
    double b_c_perp_t = 0.0;
    std::vector<std::pair<double, double>> qi_template;  // optional (B, Q_i) knots
};

/// Field-sweep protocol configuration; `schema` is versioned and unknown
/// keys are rejected at parse time.
struct CampaignConfig {
    int schema = 1;
    FieldOrientation orientation = FieldOrientation::in_plane;
    double max_field_t = 0.0;
    double field_step_t = 0.0;
    double ramp_rate_mt_per_min = 100.0;
    double settle_time_s = 120.0;
    std::vector<double> powers_dbm;           // power-scan source powers
    std::vector<double> power_scan_fields_t;  // fields at which power scans run
    double tracking_power_dbm = -30.0;
    double attenuation_db = 80.0;
    double fast_scan_width_hz = 80e6;
    int fast_scan_points = 401;
    double detail_span_linewidths = 20.0;
    int detail_points = 401;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
    /// "quadratic_bc": each resonator shifts by its own B_C law.
    /// "inplane_misalignment": shifts from the film/misalignment model.
    std::string shift_model = "quadratic_bc";
    double theta_b_rad = 0.0;
    FilmProperties film;
    std::vector<ResonatorConfig> resonators;

    void validate() const;
};

CampaignConfig campaign_config_from_json(const json& j);
json to_json(const CampaignConfig& config);

/// A single spectroscopy request issued by the protocol.
struct ScanRequest {
    std::uint64_t scan_index = 0;
    std::string resonator;
    double field_t = 0.0;
    double f_lo_hz = 0.0;
    double f_hi_hz = 0.0;
    int points = 0;
    double power_dbm = 0.0;
    double attenuation_db = 0.0;
};

/// Source of traces: either the synthetic generator or recorded files.
/// Campaigns never talk to an instrument.
class TraceProvider {
public:
    virtual ~TraceProvider() = default;
    virtual ComplexTrace scan(const ScanRequest& request) = 0;
};

/// Evaluates the configured forward models at the requested field and
/// drive, with deterministic per-scan noise streams.
class SimulatedProvider : public TraceProvider {
public:
    explicit SimulatedProvider(CampaignConfig config);
    ComplexTrace scan(const ScanRequest& request) override;

    /// Generator truth helpers (exposed for round-trip tests).
    double true_rel_shift(const ResonatorConfig& res, double field_t) const;

private:
    CampaignConfig config_;
};

/// Replays traces recorded by a previous campaign run.
class ReplayProvider : public TraceProvider {
public:
    explicit ReplayProvider(std::string directory);
    ComplexTrace scan(const ScanRequest& request) override;

private:
    std::string directory_;
};

/// Writes every trace produced by the wrapped provider to a directory,
/// making the run replayable.
class RecordingProvider : public TraceProvider {
public:
    RecordingProvider(TraceProvider& inner, std::string directory);
    ComplexTrace scan(const ScanRequest& request) override;

private:
    TraceProvider& inner_;
    std::string directory_;
};

/// Path of the recorded trace for a scan index.
std::string trace_file_name(std::uint64_t scan_index);

/// Outcome of tracking one resonator at one field point.
struct TrackedResonance {
    std::string resonator;
    double field_t = 0.0;
    double f0_est_hz = 0.0;
    FitResult fit;
    bool accepted = false;
    std::string qc_reason;
    bool lost = false;
    std::uint64_t fast_scan_index = 0;
    std::uint64_t detail_scan_index = 0;
};

/// One tracking step: fast scan over a window below previous_f0 (plus a
/// few linewidths of headroom so an unshifted dip stays visible), dip
/// location, a detail scan centred on the estimate, and a full fit with
/// QC. A missing dip marks the outcome lost. The scan requests issued
/// are appended to `requests` for the audit trail.
TrackedResonance track_resonance(double previous_f0_hz, double linewidth_hint_hz,
                                 const std::string& resonator, double field_t,
                                 TraceProvider& source, const CampaignConfig& config,
                                 std::uint64_t next_scan_index,
                                 std::vector<ScanRequest>* requests = nullptr,
                                 bool centred_window = false,
                                 double power_dbm_override =
                                     std::numeric_limits<double>::quiet_NaN());

struct PowerScanRecord {
    std::string resonator;
    double field_t = 0.0;
    PowerScan scan;
};

struct CampaignResults {
    CampaignConfig config;
    std::map<std::string, FitResult> reference_fits;  // zero-field
    std::map<std::string, double> reference_f0_hz;
    std::vector<TrackedResonance> tracked;
    std::map<std::string, FieldSweepSeries> series;
    std::vector<PowerScanRecord> power_scans;
    json audit = json::array();
    double elapsed_minutes = 0.0;  // ramp + settle bookkeeping
};

/// Executes the sweep protocol: zero-field references, ramp/settle
/// bookkeeping, downward fast scans, detail fits with QC, and periodic
/// power scans. A lost resonator is retired; the campaign continues.
CampaignResults run_field_campaign(const CampaignConfig& config, TraceProvider& source);

/// Tables-style summary row; one per resonator.
struct ResonatorReport {
    std::string name;
    double width_nm = 0.0;
    double f0_ghz = 0.0;
    double q_i = 0.0, q_i_err = 0.0;
    double q_c = 0.0, q_c_err = 0.0;
    double z_kohm = 0.0;
    std::optional<double> kerr_hz_per_photon, kerr_err;
    std::optional<double> b_c_parallel_t, b_c_parallel_err;
    std::optional<double> b_c_perp_mt, b_c_perp_err;
    std::vector<std::string> flags;
};

/// Assembles the report: Z from the quarter-wave chain, B_C from the
/// critical-field fits, K from externally supplied Kerr fits. Missing
/// per-resonator cells are flagged, a fully absent resonator raises
/// MissingInput.
std::vector<ResonatorReport> build_report(
    const CampaignResults& results,
    const std::map<std::string, FitResult>& kerr_fits = {});

json report_to_json(const std::vector<ResonatorReport>& report);

/// Validates a serialized report against the fixed column schema.
void validate_report_json(const json& report);

/// Misalignment estimate from the campaign's in-plane series (needs
/// >= 3 widths).
FitResult misalignment_from_campaign(const CampaignResults& results);

/// Full results document (config, references, tracked log, series,
/// power scans, report, audit).
json campaign_results_to_json(const CampaignResults& results,
                              const std::vector<ResonatorReport>& report);

}  // namespace resforge
