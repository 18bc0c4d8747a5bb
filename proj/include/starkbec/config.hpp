#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "starkbec/analysis.hpp"
#include "starkbec/gpe.hpp"
#include "starkbec/lattice.hpp"
#include "starkbec/units.hpp"
#include "starkbec/ws_basis.hpp"

namespace starkbec {

/// Sectioned key-value text config. Sections and keys keep file order;
/// serialize(parse(text)) is a fixed point, so configs round-trip.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);
    std::string serialize() const;

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    long get_long(const std::string& section, const std::string& key,
                  long fallback) const;
    bool get_bool(const std::string& section, const std::string& key,
                  bool fallback) const;
    std::vector<double> get_list(const std::string& section,
                                 const std::string& key) const;

    void set(const std::string& section, const std::string& key,
             const std::string& value);

    /// Applies "section.key=value" override strings.
    void apply_overrides(const std::vector<std::string>& overrides);

    bool operator==(const Config& other) const;

    const std::vector<std::string>& section_names() const { return order_; }

private:
    struct Section {
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::vector<std::string> order_;
    std::map<std::string, Section> sections_;
};

/// Initial state over a contiguous well window: amplitudes are auto-normalized
/// (a warning is recorded when the correction exceeds 1e-6).
struct Preparation {
    int first_well = -6;
    std::vector<double> amplitudes;
    std::vector<double> phases;
    std::vector<std::string> warnings;

    ModeState to_modes() const;
    static Preparation equal_split(int first_well, int count);
};

/// Fully resolved run description: parameters, box, preparation, solver
/// controls and output destination.
struct RunConfig {
    ModelParams params;
    std::optional<LabParams> lab;  // set when [lab] is present; params derived
    BoundingBox box;
    int chi_cutoff = 3;
    Preparation preparation;

    std::string solver = "model";  // gpe | model | both
    double t_end = 75.0;
    double dt = 1e-3;              // gpe step
    double tol = 1e-10;            // model integrator tolerance
    int samples = 256;
    int well_margin = 4;           // retained wells beyond the preparation
    std::vector<int> track_wells;  // outputs; defaults to preparation +- 2

    SectionSpec section;
    int section_well_min = -1;
    int section_well_max = 1;
    std::vector<double> section_launches;

    double lyap_horizon = 20000.0;
    LyapunovOptions lyap;
    std::vector<double> lyap_launches;

    std::vector<std::pair<int, int>> resonance_orders = {{1, 1}, {3, 1}, {5, 1}};

    std::string output_dir = "out";
    int threads = 0;

    static RunConfig from_config(const Config& cfg);
    Config to_config() const;
};

}  // namespace starkbec
