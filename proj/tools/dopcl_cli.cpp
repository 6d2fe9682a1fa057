// dopcl — batch front-end for the Doppler-cloak simulation toolkit.
// Subcommands run one study each and emit CSV artifacts plus a run manifest.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <dopcl/dopcl.hpp>

namespace fs = std::filesystem;
using namespace dopcl;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "flat key-value config file");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--seed", opt.seed, "simulation seed (overrides the config)");
    cmd->add_option("--format", opt.format, "output format (csv)");
}

Config load_config(const CommonOptions& opt) {
    if (opt.config_path.empty()) return Config::from_string("", "<defaults>");
    return Config::load_file(opt.config_path);
}

void check_format(const CommonOptions& opt) {
    if (opt.format != "csv") throw std::runtime_error("unsupported format '" + opt.format + "'");
}

void write_manifest(const CommonOptions& opt, const std::string& subcommand,
                    std::uint64_t seed) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::ostringstream out;
    out << "tool = dopcl\n"
        << "subcommand = " << subcommand << '\n'
        << "config = " << (opt.config_path.empty() ? "<defaults>" : opt.config_path) << '\n'
        << "out = " << opt.out_dir << '\n'
        << "seed = " << seed << '\n'
        << "timestamp = " << stamp << '\n';
    csv::atomic_write_text(fs::path(opt.out_dir) / "manifest.txt", out.str());
}

fs::path prepare_out(const CommonOptions& opt) {
    fs::path dir(opt.out_dir);
    fs::create_directories(dir);
    return dir;
}

metasurface::SurfaceParams surface_from_config(const Config& cfg) {
    metasurface::SurfaceParams p;
    const std::string fit = cfg.str_or("surface.fit", "fig3");
    if (fit == "experiment")
        p = metasurface::SurfaceParams::experiment_fit();
    else if (fit != "fig3")
        throw std::runtime_error("surface.fit must be fig3 or experiment");
    p.substrate_thickness_m = cfg.number_or("surface.thickness_m", p.substrate_thickness_m);
    p.relative_permittivity = cfg.number_or("surface.epsilon_r", p.relative_permittivity);
    p.sheet_resistance_ohm = cfg.number_or("surface.sheet_resistance_ohm", p.sheet_resistance_ohm);
    p.sheet_inductance_h = cfg.number_or("surface.sheet_inductance_h", p.sheet_inductance_h);
    p.sheet_capacitance_f = cfg.number_or("surface.sheet_capacitance_f", p.sheet_capacitance_f);
    p.cell_period_m = cfg.number_or("surface.cell_period_m", p.cell_period_m);
    return p;
}

scene::RadarConfig radar_from_config(const Config& cfg) {
    scene::RadarConfig radar;
    if (cfg.has("radar.carriers_hz")) radar.carriers_hz = cfg.number_list("radar.carriers_hz");
    radar.band_start_hz = cfg.number_or("radar.band_start_hz", radar.band_start_hz);
    radar.band_stop_hz = cfg.number_or("radar.band_stop_hz", radar.band_stop_hz);
    radar.pulse_interval_s = cfg.number_or("radar.pulse_interval_s", radar.pulse_interval_s);
    radar.num_pulses =
        static_cast<std::size_t>(cfg.integer_or("radar.num_pulses",
                                                static_cast<std::int64_t>(radar.num_pulses)));
    if (cfg.has("radar.noise_snr_db")) radar.noise_snr_db = cfg.number("radar.noise_snr_db");
    radar.validate();
    return radar;
}

struct BuiltScene {
    scene::Scene scene;
    double span_rad = 0.0;          // span of the first coated target
    double planned_modulation = 0.0;  // its modulation frequency
};

// Builds the scene from a flat config. Coated targets either carry an
// idealized sawtooth of `span_rad`, or a drive calibrated against the fitted
// surface map at the first carrier. `modulation_hz = cancel` resolves to the
// cancellation frequency for the target's own velocity.
BuiltScene scene_from_config(const Config& cfg, std::uint64_t seed) {
    BuiltScene built;
    built.scene.radar = radar_from_config(cfg);
    built.scene.seed = seed;

    if (cfg.has("clutter.amplitudes")) {
        const auto amps = cfg.number_list("clutter.amplitudes");
        std::vector<double> phases(amps.size(), 0.0);
        if (cfg.has("clutter.phases_rad")) {
            phases = cfg.number_list("clutter.phases_rad");
            if (phases.size() != amps.size())
                throw std::runtime_error("clutter.phases_rad length mismatch");
        }
        for (std::size_t i = 0; i < amps.size(); ++i)
            built.scene.clutter.emplace_back(amps[i] * std::cos(phases[i]),
                                             amps[i] * std::sin(phases[i]));
    }

    const double carrier = built.scene.radar.carriers_hz.front();
    std::optional<PhaseMap> surface_map;
    std::optional<modulation::Calibration> calibration;
    const auto ensure_calibration = [&]() {
        if (calibration) return;
        const auto surface = surface_from_config(cfg);
        surface_map = metasurface::surface_phase_map(
            surface, metasurface::default_capacitance_grid(), std::vector<double>{carrier});
        calibration = modulation::calibrate(*surface_map, modulation::varactor_from_config(cfg),
                                            carrier);
    };

    const auto count = cfg.integer_or("target.count", cfg.has("target.1.velocity_mps") ? 1 : 0);
    const double duration = static_cast<double>(built.scene.radar.num_pulses) *
                            built.scene.radar.pulse_interval_s;
    for (std::int64_t k = 1; k <= count; ++k) {
        const std::string prefix = "target." + std::to_string(k) + ".";
        scene::Target target;
        target.range_m = cfg.number_or(prefix + "range_m", 2.0);
        target.velocity_mps = cfg.number_or(prefix + "velocity_mps", 0.0);
        target.reflectivity = cfg.number_or(prefix + "reflectivity", 1.0);
        target.oscillation_amplitude_m = cfg.number_or(prefix + "oscillation_amplitude_m", 0.0);
        target.oscillation_frequency_hz = cfg.number_or(prefix + "oscillation_frequency_hz", 0.0);
        if (cfg.flag_or(prefix + "coated", false)) {
            scene::Coating coat;
            coat.amplitude_ripple = cfg.flag_or("coating.amplitude_ripple", true);
            const std::string span_source = cfg.str_or(prefix + "span_source", "calibrated");
            double span = 0.0;
            if (span_source == "calibrated") {
                ensure_calibration();
                span = calibration->span_rad;
            } else if (span_source == "value") {
                span = cfg.number(prefix + "span_rad");
            } else {
                throw std::runtime_error(prefix + "span_source must be calibrated or value");
            }

            double f_m = 0.0;
            const std::string mod = cfg.str_or(prefix + "modulation_hz", "0");
            if (mod == "cancel") {
                f_m = cloak::cancellation_frequency(target.velocity_mps, carrier, span,
                                                    built.scene.radar.speed_of_light);
            } else {
                f_m = Config::from_string(prefix + "modulation_hz = " + mod)
                          .number(prefix + "modulation_hz");
            }
            const double rate =
                std::max(cfg.number_or("coating.sample_rate_hz", 20.0), 20.0 * std::abs(f_m));
            if (span_source == "calibrated") {
                coat.waveform = modulation::waveform(*calibration, f_m, duration, rate);
                coat.map = surface_map;
            } else {
                coat.waveform = modulation::ideal_sawtooth(f_m, span, duration, rate);
            }
            target.coating = coat;
            if (built.span_rad == 0.0) {
                built.span_rad = span;
                built.planned_modulation = f_m;
            }
        }
        built.scene.targets.push_back(target);
    }
    return built;
}

// ------------------------------------------------------------------ knife
int cmd_knife(const CommonOptions& opt) {
    check_format(opt);
    const Config cfg = load_config(opt);
    const fs::path dir = prepare_out(opt);
    const std::uint64_t seed = opt.seed.value_or(cfg.integer_or("seed", 1));

    const std::string kind = cfg.str_or("map", "dipole");
    std::vector<double> freqs = linspace(cfg.number_or("freq.min_hz", 1.2e9),
                                         cfg.number_or("freq.max_hz", 1.7e9),
                                         static_cast<std::size_t>(cfg.integer_or("freq.points", 101)));
    PhaseMap map;
    if (kind == "dipole") {
        circuit::CircuitParams params;
        params.resistance_ohm = cfg.number_or("circuit.resistance_ohm", params.resistance_ohm);
        params.inductance_h = cfg.number_or("circuit.inductance_h", params.inductance_h);
        params.capacitance_f = cfg.number_or("circuit.capacitance_f", params.capacitance_f);
        std::vector<double> caps;
        if (cfg.has("cap.min_f")) {
            caps = logspace(cfg.number("cap.min_f"), cfg.number("cap.max_f"),
                            static_cast<std::size_t>(cfg.integer_or("cap.points", 200)));
            if (cfg.flag_or("cap.include_zero", true)) caps.insert(caps.begin(), 0.0);
        } else {
            caps = circuit::default_capacitance_grid();
        }
        map = circuit::knife_map(params, caps, freqs);
    } else if (kind == "surface") {
        const auto surface = surface_from_config(cfg);
        std::vector<double> caps =
            cfg.has("cap.min_f")
                ? linspace(cfg.number("cap.min_f"), cfg.number("cap.max_f"),
                           static_cast<std::size_t>(cfg.integer_or("cap.points", 201)))
                : metasurface::default_capacitance_grid();
        map = metasurface::surface_phase_map(surface, caps, freqs);
        // reflection magnitude rides in a sibling file with the same layout
        PhaseMap amplitude = map;
        amplitude.values = map.amplitude;
        amplitude.amplitude.clear();
        csv::atomic_write_text(dir / "map_amplitude.csv", serialize_phase_map(amplitude));
    } else {
        throw std::runtime_error("map must be dipole or surface");
    }
    save_phase_map(map, dir / "map.csv");
    write_manifest(opt, "knife", seed);
    std::cout << "wrote " << (dir / "map.csv").string() << " (" << map.capacitance_count() << "x"
              << map.frequency_count() << ")\n";
    return 0;
}

// ------------------------------------------------------------------ rectify
int cmd_rectify(const CommonOptions& opt, const std::string& input_arg) {
    check_format(opt);
    const Config cfg = load_config(opt);
    const fs::path dir = prepare_out(opt);
    const std::uint64_t seed = opt.seed.value_or(cfg.integer_or("seed", 1));

    const std::string input = !input_arg.empty() ? input_arg : cfg.str("input");
    const PhaseMap map = load_phase_map(input);
    const double threshold = cfg.number_or("threshold_rad", kPi / 4.0);
    const double tolerance = cfg.number_or("flatness_tolerance_f", 0.1e-12);

    const auto result = metasurface::rectify(map, threshold);
    metasurface::save_capacitor_curve(result.curve, dir / "c_omega.csv");
    save_phase_map(result.rectified, dir / "rectified_map.csv");

    const double band = metasurface::usable_bandwidth(result.rectified, tolerance, threshold);
    const double band_before = metasurface::usable_bandwidth(map, tolerance, threshold);
    const double center = 0.5 * (map.frequency_axis.front() + map.frequency_axis.back());
    std::ostringstream summary;
    summary << "threshold_rad = " << csv::format_number(threshold, 12) << '\n'
            << "flatness_tolerance_f = " << csv::format_number(tolerance, 12) << '\n'
            << "reference_threshold_f = "
            << csv::format_number(result.curve.reference_threshold_f, 12) << '\n'
            << "usable_bandwidth_hz = " << csv::format_number(band, 12) << '\n'
            << "usable_bandwidth_before_hz = " << csv::format_number(band_before, 12) << '\n'
            << "fractional_bandwidth = " << csv::format_number(band / center, 12) << '\n';
    csv::atomic_write_text(dir / "bandwidth.txt", summary.str());
    write_manifest(opt, "rectify", seed);
    std::cout << "usable bandwidth " << band * 1e-6 << " MHz (" << 100.0 * band / center
              << "% of band center)\n";
    return 0;
}

// ------------------------------------------------------------------ phases
int cmd_phases(const CommonOptions& opt) {
    check_format(opt);
    const Config cfg = load_config(opt);
    const fs::path dir = prepare_out(opt);
    const std::uint64_t seed = opt.seed.value_or(cfg.integer_or("seed", 1));

    const BuiltScene built = scene_from_config(cfg, seed);
    const auto trains = scene::simulate(built.scene);
    for (std::size_t ci = 0; ci < trains.size(); ++ci) {
        const auto& train = trains[ci];
        std::vector<double> args(train.samples.size());
        double peak = 0.0;
        for (std::size_t k = 0; k < train.samples.size(); ++k) {
            args[k] = std::arg(train.samples[k]);
            peak = std::max(peak, std::abs(train.samples[k]));
        }
        unwrap_inplace(args);
        std::ostringstream out;
        out << "k,t_s,phase_rad,amplitude_norm\n";
        for (std::size_t k = 0; k < train.samples.size(); ++k)
            out << k << ',' << csv::format_number(train.timestamps_s[k], 9) << ','
                << csv::format_number(args[k], 9) << ','
                << csv::format_number(peak > 0 ? std::abs(train.samples[k]) / peak : 0.0, 9)
                << '\n';
        const std::string name = "phases_" + std::to_string(ci) + ".csv";
        csv::atomic_write_text(dir / name, out.str());
        scene::save_pulse_train(train, dir / ("pulses_" + std::to_string(ci) + ".csv"));
    }
    // drive waveform artifact for the first coated target
    for (const auto& target : built.scene.targets)
        if (target.coating) {
            modulation::save_waveform(target.coating->waveform, dir / "waveform.csv");
            break;
        }
    write_manifest(opt, "phases", seed);
    std::cout << "wrote " << trains.size() << " phase profile(s) to " << dir.string() << '\n';
    return 0;
}

// ------------------------------------------------------------------ doppler
int cmd_doppler(const CommonOptions& opt, bool mti) {
    check_format(opt);
    const Config cfg = load_config(opt);
    const fs::path dir = prepare_out(opt);
    const std::uint64_t seed = opt.seed.value_or(cfg.integer_or("seed", 1));

    const BuiltScene built = scene_from_config(cfg, seed);
    const auto fft_size = static_cast<std::size_t>(cfg.integer_or("processing.fft_size", 512));
    const std::string window_name = cfg.str_or("processing.window", "rectangular");
    const dsp::Window window =
        window_name == "hann" ? dsp::Window::hann : dsp::Window::rectangular;

    const auto trains = scene::simulate(built.scene);
    for (std::size_t ci = 0; ci < trains.size(); ++ci) {
        const auto& train = trains[ci];
        std::vector<std::complex<double>> samples = train.samples;
        double interval = train.pulse_interval_s;
        if (mti) {
            double expected = cfg.number_or("processing.expected_doppler_hz", 0.0);
            if (expected == 0.0 && !built.scene.targets.empty())
                expected = std::abs(2.0 * built.scene.targets.front().velocity_mps *
                                    train.carrier_hz / built.scene.radar.speed_of_light);
            if (expected > 0.0) {
                const auto ds = dsp::downsample_for_mti(samples, expected, interval);
                samples = ds.samples;
                interval *= static_cast<double>(ds.factor);
            }
            samples = dsp::mti_two_pulse(samples);
        }
        const std::size_t fft = std::max(fft_size, next_power_of_two(samples.size()));
        auto report = dsp::doppler_fft(samples, fft, window, interval);
        report.mti_applied = mti;
        try {
            dsp::estimate_velocity(report, train.carrier_hz, built.scene.radar.speed_of_light);
        } catch (const no_detection&) {
        }
        dsp::save_doppler_report(report, dir / ("doppler_" + std::to_string(ci) + ".csv"));
    }
    write_manifest(opt, "doppler", seed);
    std::cout << "wrote " << trains.size() << " doppler report(s) to " << dir.string() << '\n';
    return 0;
}

// ------------------------------------------------------------------ sweep
int cmd_sweep(const CommonOptions& opt) {
    check_format(opt);
    const Config cfg = load_config(opt);
    const fs::path dir = prepare_out(opt);
    const std::uint64_t seed = opt.seed.value_or(cfg.integer_or("seed", 1));

    scene::RadarConfig radar = radar_from_config(cfg);
    std::vector<double> velocities{-0.04, -0.02, 0.0, 0.02, 0.04};
    if (cfg.has("sweep.velocities_mps")) velocities = cfg.number_list("sweep.velocities_mps");
    const auto modulations =
        linspace(cfg.number_or("sweep.modulation_min_hz", -0.5),
                 cfg.number_or("sweep.modulation_max_hz", 0.5),
                 static_cast<std::size_t>(cfg.integer_or("sweep.modulation_count", 25)));
    const double span = cfg.number_or("sweep.span_rad", 5.7595865315812876);
    const auto fft_size = static_cast<std::size_t>(cfg.integer_or("sweep.fft_size", 1024));

    // independent runs; dispatch one velocity row per task
    std::vector<std::future<std::vector<cloak::SweepPoint>>> rows;
    for (const double v : velocities)
        rows.push_back(std::async(std::launch::async, [&, v]() {
            scene::Target tmpl;
            return cloak::velocity_modulation_sweep(radar, tmpl, span,
                                                    std::vector<double>{v}, modulations,
                                                    fft_size, dsp::Window::rectangular, seed);
        }));

    std::ostringstream matrix;
    matrix << "f_m_Hz,v_true_mps,v_hat_mps\n";
    std::ostringstream fits;
    fits << "v_true_mps,slope_mps_per_hz,intercept_mps,r_squared\n";
    double slope_sum = 0.0;
    std::vector<double> cancel_mods;
    for (std::size_t vi = 0; vi < velocities.size(); ++vi) {
        const auto points = rows[vi].get();
        std::vector<double> x, y;
        for (const auto& point : points) {
            matrix << csv::format_number(point.modulation_hz, 9) << ','
                   << csv::format_number(point.true_velocity_mps, 9) << ','
                   << csv::format_number(point.estimated_velocity_mps, 9) << '\n';
            x.push_back(point.modulation_hz);
            y.push_back(point.estimated_velocity_mps);
        }
        const auto fit = least_squares_line(x, y);
        slope_sum += fit.slope;
        cancel_mods.push_back(fit.slope != 0.0 ? -fit.intercept / fit.slope : 0.0);
        fits << csv::format_number(velocities[vi], 9) << ',' << csv::format_number(fit.slope, 9)
             << ',' << csv::format_number(fit.intercept, 9) << ','
             << csv::format_number(fit.r_squared, 9) << '\n';
    }
    csv::atomic_write_text(dir / "sweep.csv", matrix.str());
    csv::atomic_write_text(dir / "fits.csv", fits.str());

    const auto invisibility = least_squares_line(velocities, cancel_mods);
    const double carrier = radar.carriers_hz.front();
    std::ostringstream summary;
    summary << "common_slope_mps_per_hz = "
            << csv::format_number(slope_sum / static_cast<double>(velocities.size()), 12) << '\n'
            << "expected_slope_mps_per_hz = "
            << csv::format_number(radar.speed_of_light * span / (2.0 * kTwoPi * carrier), 12)
            << '\n'
            << "invisibility_slope_hz_per_mps = " << csv::format_number(invisibility.slope, 12)
            << '\n'
            << "expected_invisibility_slope_hz_per_mps = "
            << csv::format_number(-2.0 * kTwoPi * carrier / (radar.speed_of_light * span), 12)
            << '\n'
            << "invisibility_r_squared = " << csv::format_number(invisibility.r_squared, 12)
            << '\n';
    csv::atomic_write_text(dir / "summary.txt", summary.str());
    write_manifest(opt, "sweep", seed);
    std::cout << "wrote sweep matrix (" << velocities.size() << "x" << modulations.size()
              << ") to " << dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Doppler-cloak metasurface simulator and radar-chain analysis toolkit"};
    app.require_subcommand(1);

    CommonOptions knife_opt, rectify_opt, phases_opt, doppler_opt, sweep_opt;
    std::string rectify_input;
    bool mti = false;

    auto* knife = app.add_subcommand("knife", "phase-shift map over capacitance and frequency");
    add_common(knife, knife_opt);
    auto* rectify = app.add_subcommand("rectify", "straighten a knife map with a dispersive capacitor");
    add_common(rectify, rectify_opt);
    rectify->add_option("input", rectify_input, "phase map CSV to rectify");
    auto* phases = app.add_subcommand("phases", "slow-time phase/amplitude profiles of a scene");
    add_common(phases, phases_opt);
    auto* doppler = app.add_subcommand("doppler", "Doppler spectra of a scene");
    add_common(doppler, doppler_opt);
    doppler->add_flag("--mti", mti, "apply downsampling and the two-pulse canceller");
    auto* sweep = app.add_subcommand("sweep", "velocity-estimate grid over (v, f_m)");
    add_common(sweep, sweep_opt);

    CLI11_PARSE(app, argc, argv);
    try {
        if (knife->parsed()) return cmd_knife(knife_opt);
        if (rectify->parsed()) return cmd_rectify(rectify_opt, rectify_input);
        if (phases->parsed()) return cmd_phases(phases_opt);
        if (doppler->parsed()) return cmd_doppler(doppler_opt, mti);
        if (sweep->parsed()) return cmd_sweep(sweep_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
