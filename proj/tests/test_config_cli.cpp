#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "starkbec/config.hpp"
#include "starkbec/io.hpp"

using namespace starkbec;
namespace fs = std::filesystem;

namespace {

const char* kSampleConfig = R"([params]
v0 = 5.0          # lattice depth, recoil units
force = 0.25
g = 0.25

[box]
wells = 41
points_per_period = 64

[preparation]
first_well = -6
amplitudes = 1,1,1,1,1,1,1,1,1,1,1,1

[run]
solver = model
t_end = 10
samples = 16
)";

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(STARKBEC_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int rc = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WEXITSTATUS(rc);
    res.out = read_text_file(out.string());
    res.err = read_text_file(err.string());
    return res;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("config: parse, serialize, round trip") {
    Config cfg = Config::parse(kSampleConfig);
    CHECK(cfg.get("params", "v0") == "5.0");
    CHECK(cfg.get_double("params", "force", 0.0) == 0.25);
    CHECK(cfg.get_long("box", "wells", 0) == 41);
    CHECK(cfg.get_list("preparation", "amplitudes").size() == 12);
    CHECK(cfg.get_or("run", "solver", "") == "model");
    CHECK(cfg.get_double("run", "dt", 1e-3) == 1e-3);  // fallback used

    const Config again = Config::parse(cfg.serialize());
    CHECK(again == cfg);
    CHECK(Config::parse(again.serialize()) == again);
    CHECK(again.serialize() == cfg.serialize());
}

TEST_CASE("config: errors") {
    CHECK_THROWS_AS(Config::parse("key = 1\n"), Error);          // no section
    CHECK_THROWS_AS(Config::parse("[a\nk = 1\n"), Error);        // bad header
    Config cfg = Config::parse(kSampleConfig);
    CHECK_THROWS_AS(cfg.get("params", "missing"), Error);
    CHECK_THROWS_AS(cfg.get_double("run", "solver", 0.0), Error);
    CHECK_THROWS_AS(cfg.get_bool("params", "v0", false), Error);
    CHECK_THROWS_AS(cfg.get_long("params", "force", 0), Error);
}

TEST_CASE("config: overrides") {
    Config cfg = Config::parse(kSampleConfig);
    cfg.apply_overrides({"params.g=0.5", "run.samples=32", "outputs.directory=x"});
    CHECK(cfg.get("params", "g") == "0.5");
    CHECK(cfg.get_long("run", "samples", 0) == 32);
    CHECK(cfg.get("outputs", "directory") == "x");
    CHECK_THROWS_AS(cfg.apply_overrides({"no_dot_or_equals"}), Error);
}

TEST_CASE("preparation: auto-normalization with warning") {
    Config cfg = Config::parse(kSampleConfig);  // amplitudes 1,... (norm 12)
    RunConfig rc = RunConfig::from_config(cfg);
    CHECK(!rc.preparation.warnings.empty());
    ModeState m = rc.preparation.to_modes();
    CHECK(m.norm2() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.first_well == -6);

    // already normalized: no warning
    Config cfg2 = Config::parse(
        "[preparation]\nfirst_well = 0\namplitudes = 0.6,0.8\n");
    CHECK(RunConfig::from_config(cfg2).preparation.warnings.empty());
}

TEST_CASE("run config: defaults, validation, round trip") {
    RunConfig rc = RunConfig::from_config(Config::parse(kSampleConfig));
    CHECK(rc.params.v0 == 5.0);
    CHECK(rc.box.edge_margin == 5);
    CHECK(rc.t_end == 10.0);
    CHECK(rc.track_wells.front() == -8);
    CHECK(rc.track_wells.back() == 7);

    // parse -> serialize -> parse is the identity on the resolved form
    const Config c1 = rc.to_config();
    const RunConfig rc2 = RunConfig::from_config(c1);
    const Config c2 = rc2.to_config();
    CHECK(c1 == c2);
    CHECK(c1.serialize() == c2.serialize());

    CHECK_THROWS_AS(RunConfig::from_config(
                        Config::parse("[run]\nsolver = quantum\n")),
                    Error);
    CHECK_THROWS_AS(RunConfig::from_config(
                        Config::parse("[params]\ng = 7\n")),
                    Error);
}

TEST_CASE("lab section feeds the normalized parameters") {
    Config cfg = Config::parse(R"([lab]
scattering_length_m = 5.3e-9
atom_count = 70000
transverse_length_m = 2.0e-5
laser_wavelength_m = 8.5e-7
lattice_depth = 5.0
tilt_force = 0.25

[params]
g_max = 1.5
)");
    RunConfig rc = RunConfig::from_config(cfg);
    CHECK(rc.lab.has_value());
    CHECK(rc.params.g == doctest::Approx(1.0038).epsilon(1e-3));
    CHECK(rc.params.v0 == 5.0);
}

TEST_CASE("cli: basis command writes a deterministic chi report") {
    const fs::path dir = fresh_dir("starkbec_cli_basis");
    const fs::path cfgp = dir / "run.ini";
    write_text_file(cfgp.string(),
                    "[outputs]\ndirectory = " + (dir / "out").string() + "\n");

    CliResult r1 = run_cli("-c " + cfgp.string() + " basis", dir);
    CHECK(r1.exit_code == 0);
    CHECK(r1.out.find("chi000 = 1.98") != std::string::npos);

    const std::string report1 =
        read_text_file((dir / "out" / "chi_report.txt").string());
    const std::string basis1 =
        read_text_file((dir / "out" / "basis.json").string());
    CHECK(report1.find("chi000 = 1.98") != std::string::npos);

    // rerun: byte-identical artifacts
    CliResult r2 = run_cli("-c " + cfgp.string() + " basis", dir);
    CHECK(r2.exit_code == 0);
    CHECK(read_text_file((dir / "out" / "chi_report.txt").string()) == report1);
    CHECK(read_text_file((dir / "out" / "basis.json").string()) == basis1);
}

TEST_CASE("cli: shallow lattice exits with a numerical-failure code") {
    const fs::path dir = fresh_dir("starkbec_cli_shallow");
    const fs::path cfgp = dir / "run.ini";
    write_text_file(cfgp.string(), "[params]\nv0 = 0.1\n[outputs]\ndirectory = " +
                                       (dir / "out").string() + "\n");
    CliResult r = run_cli("-c " + cfgp.string() + " basis", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("band") != std::string::npos);
}

TEST_CASE("cli: usage errors exit with code 1") {
    const fs::path dir = fresh_dir("starkbec_cli_usage");
    CliResult r = run_cli("frobnicate", dir);
    CHECK(r.exit_code == 1);
    CliResult r2 = run_cli("-c /nonexistent.ini basis", dir);
    CHECK(r2.exit_code == 1);
}

TEST_CASE("cli: zero-horizon evolve emits only the initial sample") {
    const fs::path dir = fresh_dir("starkbec_cli_zero");
    const fs::path cfgp = dir / "run.ini";
    write_text_file(cfgp.string(), R"([run]
solver = model
t_end = 0
samples = 1
[outputs]
directory = )" + (dir / "out").string() +
                                       "\n");
    CliResult r = run_cli("-c " + cfgp.string() + " evolve", dir);
    CHECK(r.exit_code == 0);
    const std::string csv =
        read_text_file((dir / "out" / "model_trajectory.csv").string());
    CHECK(count_lines(csv) == 2);  // header + one sample
}

TEST_CASE("cli: resonances table contains the 1:1 locus") {
    const fs::path dir = fresh_dir("starkbec_cli_res");
    const fs::path cfgp = dir / "run.ini";
    write_text_file(cfgp.string(),
                    "[outputs]\ndirectory = " + (dir / "out").string() + "\n");
    CliResult r = run_cli("-c " + cfgp.string() + " resonances", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("1:1 -> I0 = 0.701") != std::string::npos);
    const std::string csv =
        read_text_file((dir / "out" / "resonances.csv").string());
    CHECK(csv.find("a,b,exists,I0,I1") != std::string::npos);
}

TEST_CASE("cli: small section run produces per-orbit files and a manifest") {
    const fs::path dir = fresh_dir("starkbec_cli_section");
    const fs::path cfgp = dir / "run.ini";
    write_text_file(cfgp.string(), R"([section]
launches = 0.3,0.6
crossings = 25
max_time = 1000
[outputs]
directory = )" + (dir / "out").string() +
                                       "\n");
    CliResult r = run_cli("-c " + cfgp.string() + " section", dir);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "section.csv"));
    CHECK(fs::exists(dir / "out" / "orbit_000.csv"));
    CHECK(fs::exists(dir / "out" / "orbit_001.csv"));
    CHECK(fs::exists(dir / "out" / "section_manifest.json"));
    const std::string manifest =
        read_text_file((dir / "out" / "section_manifest.json").string());
    CHECK(manifest.find("rotation_number") != std::string::npos);
    CHECK(manifest.find("\"overrides\"") != std::string::npos);
}
