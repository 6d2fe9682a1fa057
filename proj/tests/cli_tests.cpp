#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <dopcl/circuit.hpp>
#include <dopcl/config.hpp>
#include <dopcl/csv.hpp>
#include <dopcl/metasurface.hpp>
#include <dopcl/numeric.hpp>
#include <dopcl/phase_map.hpp>

using namespace dopcl;
namespace fs = std::filesystem;
using Catch::Matchers::WithinAbs;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
    std::string error;
};

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("dopcl_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string command = std::string(DOPCL_CLI_PATH) + " " + args + " > " + out.string() +
                                " 2> " + err.string();
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = csv::read_text(out);
    result.error = csv::read_text(err);
    return result;
}

void write_config(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

double summary_v_hat(const std::string& csv_text) {
    const auto pos = csv_text.find("v_hat_mps=");
    REQUIRE(pos != std::string::npos);
    return std::stod(csv_text.substr(pos + 10));
}

const std::string kSceneCommon =
    "radar.carriers_hz = 1.5e9\n"
    "radar.pulse_interval_s = 0.05\n"
    "radar.num_pulses = 256\n"
    "target.count = 1\n"
    "target.1.range_m = 2.0\n";

}  // namespace

TEST_CASE("knife with defaults emits the 201x101 map with a zero reference row") {
    const auto dir = fresh_dir("knife_default");
    const auto run = run_cli("knife --out " + dir.string(), dir);
    REQUIRE(run.exit_code == 0);
    const auto map = load_phase_map(dir / "map.csv");
    CHECK(map.capacitance_count() == 201);
    CHECK(map.frequency_count() == 101);
    CHECK(map.capacitance_axis.front() == 0.0);
    for (std::size_t j = 0; j < map.frequency_count(); ++j) CHECK(map.phase_at(0, j) == 0.0);
    CHECK(fs::exists(dir / "manifest.txt"));
    const std::string header = data_lines(csv::read_text(dir / "map.csv")).front();
    CHECK(header.rfind("Cv_F\\f_Hz,", 0) == 0);
}

TEST_CASE("knife map edge matches the closed-form curve") {
    const auto dir = fresh_dir("knife_edge");
    REQUIRE(run_cli("knife --out " + dir.string(), dir).exit_code == 0);
    const auto map = load_phase_map(dir / "map.csv");
    const auto closed = circuit::rectifying_capacitance(circuit::CircuitParams{}, 1.45e9);
    REQUIRE(closed.has_value());
    const double edge = metasurface::threshold_capacitance(map, 1.45e9);
    CHECK(std::abs(edge - *closed) < 3e-15);
}

TEST_CASE("rectify emits curve, rectified map and bandwidth summary") {
    const auto dir = fresh_dir("rectify");
    write_config(dir / "knife.cfg", "map = surface\n");
    REQUIRE(run_cli("knife --config " + (dir / "knife.cfg").string() + " --out " + dir.string(),
                    dir)
                .exit_code == 0);
    REQUIRE(run_cli("rectify " + (dir / "map.csv").string() + " --out " + dir.string(), dir)
                .exit_code == 0);
    const auto rectified = load_phase_map(dir / "rectified_map.csv");
    CHECK(rectified.capacitance_count() == 201);
    const std::string curve_text = csv::read_text(dir / "c_omega.csv");
    CHECK(data_lines(curve_text).front() == "f_Hz,C_omega_F");
    const auto cfg = Config::load_file(dir / "bandwidth.txt");
    CHECK(cfg.number("usable_bandwidth_hz") >= 300e6);
    CHECK(cfg.number("fractional_bandwidth") >= 0.20);
}

TEST_CASE("rectify reports rows without an edge") {
    const auto dir = fresh_dir("rectify_fail");
    write_config(dir / "knife.cfg", "freq.min_hz = 1.65e9\nfreq.max_hz = 1.7e9\nfreq.points = 4\n");
    REQUIRE(run_cli("knife --config " + (dir / "knife.cfg").string() + " --out " + dir.string(),
                    dir)
                .exit_code == 0);
    const auto run =
        run_cli("rectify " + (dir / "map.csv").string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code != 0);
    CHECK(run.error.find("GHz") != std::string::npos);
}

TEST_CASE("phases: forward motion rises, cancellation flattens") {
    const auto dir = fresh_dir("phases");
    write_config(dir / "forward.cfg", kSceneCommon + "target.1.velocity_mps = 0.03\n");
    REQUIRE(run_cli("phases --config " + (dir / "forward.cfg").string() + " --out " +
                        (dir / "fwd").string(),
                    dir)
                .exit_code == 0);
    const auto fwd_lines = data_lines(csv::read_text(dir / "fwd" / "phases_0.csv"));
    CHECK(fwd_lines.front() == "k,t_s,phase_rad,amplitude_norm");
    const double first = std::stod(csv::split_line(fwd_lines[1])[2]);
    const double last = std::stod(csv::split_line(fwd_lines.back())[2]);
    CHECK(last - first > 20.0);  // rising linear phase over ~12.8 s

    write_config(dir / "cloaked.cfg", kSceneCommon +
                                          "target.1.velocity_mps = -0.03\n"
                                          "target.1.coated = true\n"
                                          "target.1.modulation_hz = cancel\n"
                                          "surface.fit = experiment\n");
    REQUIRE(run_cli("phases --config " + (dir / "cloaked.cfg").string() + " --out " +
                        (dir / "clk").string(),
                    dir)
                .exit_code == 0);
    const auto clk_lines = data_lines(csv::read_text(dir / "clk" / "phases_0.csv"));
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 1; i < clk_lines.size(); ++i) {
        const double phase = std::stod(csv::split_line(clk_lines[i])[2]);
        lo = std::min(lo, phase);
        hi = std::max(hi, phase);
    }
    CHECK(hi - lo < 0.05);
    CHECK(fs::exists(dir / "clk" / "waveform.csv"));
    CHECK(fs::exists(dir / "clk" / "pulses_0.csv.truth.txt"));
}

TEST_CASE("phases: stationary modulated target ramps and ripples") {
    const auto dir = fresh_dir("phases_ripple");
    write_config(dir / "mod.cfg", kSceneCommon +
                                      "target.1.velocity_mps = 0\n"
                                      "target.1.coated = true\n"
                                      "target.1.modulation_hz = 0.33\n"
                                      "surface.fit = experiment\n");
    REQUIRE(run_cli("phases --config " + (dir / "mod.cfg").string() + " --out " +
                        (dir / "out").string(),
                    dir)
                .exit_code == 0);
    const auto lines = data_lines(csv::read_text(dir / "out" / "phases_0.csv"));
    const double first = std::stod(csv::split_line(lines[1])[2]);
    const double last = std::stod(csv::split_line(lines.back())[2]);
    // slope f_m * span with span near 330 degrees
    CHECK_THAT((last - first) / (0.05 * 255.0), WithinAbs(0.33 * 5.7596, 0.01));
    double amp_min = 1.0;
    for (std::size_t i = 1; i < lines.size(); ++i)
        amp_min = std::min(amp_min, std::stod(csv::split_line(lines[i])[3]));
    CHECK(amp_min < 0.995);  // visible amplitude ripple
}

TEST_CASE("doppler with MTI floors static clutter") {
    const auto dir = fresh_dir("doppler_clutter");
    write_config(dir / "clutter.cfg",
                 "radar.carriers_hz = 1.5e9\n"
                 "radar.pulse_interval_s = 0.05\n"
                 "radar.num_pulses = 128\n"
                 "clutter.amplitudes = 0.9,0.4\n"
                 "clutter.phases_rad = 0.3,2.0\n"
                 "processing.expected_doppler_hz = 0.3\n");
    REQUIRE(run_cli("doppler --mti --config " + (dir / "clutter.cfg").string() + " --out " +
                        (dir / "out").string(),
                    dir)
                .exit_code == 0);
    const std::string text = csv::read_text(dir / "out" / "doppler_0.csv");
    const auto lines = data_lines(text);
    CHECK(lines.front() == "f_Hz,v_mps,mag_dB");
    for (std::size_t i = 1; i < lines.size(); ++i)
        CHECK(std::stod(csv::split_line(lines[i])[2]) <= -300.0);
}

TEST_CASE("doppler reproduces the modulation-frequency peak ordering") {
    const auto dir = fresh_dir("doppler_orders");
    const std::string base = kSceneCommon + "radar.noise_snr_db = 40\n";
    const auto run_case = [&](const std::string& tag, const std::string& extra) {
        write_config(dir / (tag + ".cfg"), base + extra);
        REQUIRE(run_cli("doppler --config " + (dir / (tag + ".cfg")).string() + " --out " +
                            (dir / tag).string(),
                        dir)
                    .exit_code == 0);
        return summary_v_hat(csv::read_text(dir / tag / "doppler_0.csv"));
    };
    const double bare = run_case("bare", "target.1.velocity_mps = -0.03\n");
    const double same = run_case("same", "target.1.velocity_mps = -0.03\n"
                                         "target.1.coated = true\n"
                                         "target.1.span_source = value\n"
                                         "target.1.span_rad = 5.7595865315812876\n"
                                         "target.1.modulation_hz = -0.5\n");
    const double opposite = run_case("opp", "target.1.velocity_mps = -0.03\n"
                                            "target.1.coated = true\n"
                                            "target.1.span_source = value\n"
                                            "target.1.span_rad = 5.7595865315812876\n"
                                            "target.1.modulation_hz = 0.5\n");
    const double cancel = run_case("cancel", "target.1.velocity_mps = -0.03\n"
                                             "target.1.coated = true\n"
                                             "target.1.span_source = value\n"
                                             "target.1.span_rad = 5.7595865315812876\n"
                                             "target.1.modulation_hz = cancel\n");
    CHECK_THAT(bare, WithinAbs(-0.03, 0.005));
    CHECK(same < bare);                        // same polarity: faster, same direction
    CHECK(opposite > 0.0);                     // opposite polarity: flipped direction
    CHECK(std::abs(opposite) < std::abs(bare));
    CHECK(std::abs(cancel) < 0.008);           // shifted to zero
}

TEST_CASE("sweep emits matrix, fits and summary") {
    const auto dir = fresh_dir("sweep");
    write_config(dir / "sweep.cfg",
                 "radar.carriers_hz = 1.5e9\n"
                 "radar.pulse_interval_s = 0.05\n"
                 "radar.num_pulses = 256\n"
                 "sweep.velocities_mps = -0.03,0,0.03\n"
                 "sweep.modulation_min_hz = -0.4\n"
                 "sweep.modulation_max_hz = 0.4\n"
                 "sweep.modulation_count = 5\n");
    REQUIRE(run_cli("sweep --config " + (dir / "sweep.cfg").string() + " --out " +
                        (dir / "out").string(),
                    dir)
                .exit_code == 0);
    const auto matrix = data_lines(csv::read_text(dir / "out" / "sweep.csv"));
    CHECK(matrix.front() == "f_m_Hz,v_true_mps,v_hat_mps");
    CHECK(matrix.size() == 1 + 3 * 5);
    const auto fits = data_lines(csv::read_text(dir / "out" / "fits.csv"));
    CHECK(fits.front() == "v_true_mps,slope_mps_per_hz,intercept_mps,r_squared");
    for (std::size_t i = 1; i < fits.size(); ++i)
        CHECK(std::stod(csv::split_line(fits[i])[3]) >= 0.99);
    const auto summary = Config::load_file(dir / "out" / "summary.txt");
    CHECK_THAT(summary.number("common_slope_mps_per_hz"),
               WithinAbs(summary.number("expected_slope_mps_per_hz"), 0.01));
    // v_hat at (v=0, f_m=0) is exactly zero
    for (std::size_t i = 1; i < matrix.size(); ++i) {
        const auto cells = csv::split_line(matrix[i]);
        if (std::stod(cells[0]) == 0.0 && std::stod(cells[1]) == 0.0)
            CHECK_THAT(std::stod(cells[2]), WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("identical config and seed reproduce byte-identical artifacts") {
    const auto dir = fresh_dir("repro");
    write_config(dir / "scene.cfg", kSceneCommon +
                                        "radar.noise_snr_db = 20\n"
                                        "target.1.velocity_mps = -0.03\n");
    REQUIRE(run_cli("phases --config " + (dir / "scene.cfg").string() + " --seed 5 --out " +
                        (dir / "a").string(),
                    dir)
                .exit_code == 0);
    REQUIRE(run_cli("phases --config " + (dir / "scene.cfg").string() + " --seed 5 --out " +
                        (dir / "b").string(),
                    dir)
                .exit_code == 0);
    CHECK(csv::read_text(dir / "a" / "phases_0.csv") == csv::read_text(dir / "b" / "phases_0.csv"));
    CHECK(csv::read_text(dir / "a" / "pulses_0.csv") == csv::read_text(dir / "b" / "pulses_0.csv"));
    REQUIRE(run_cli("phases --config " + (dir / "scene.cfg").string() + " --seed 6 --out " +
                        (dir / "c").string(),
                    dir)
                .exit_code == 0);
    CHECK(csv::read_text(dir / "a" / "pulses_0.csv") != csv::read_text(dir / "c" / "pulses_0.csv"));
}

TEST_CASE("malformed configs fail with a diagnostic naming the line") {
    const auto dir = fresh_dir("badcfg");
    write_config(dir / "bad.cfg", "radar.carriers_hz = 1.5e9\nradar.num_pulses = many\n");
    const auto run =
        run_cli("phases --config " + (dir / "bad.cfg").string() + " --out " + dir.string(), dir);
    CHECK(run.exit_code != 0);
    CHECK(run.error.find("row 2") != std::string::npos);
}

TEST_CASE("unsupported output formats are rejected") {
    const auto dir = fresh_dir("badfmt");
    const auto run = run_cli("knife --format json --out " + dir.string(), dir);
    CHECK(run.exit_code != 0);
}
