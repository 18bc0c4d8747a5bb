#include "starkbec/config.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "starkbec/io.hpp"

namespace starkbec {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(ErrorCode::InvalidParameter,
                            "config line " + std::to_string(lineno) +
                                ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw Error(ErrorCode::InvalidParameter,
                            "config line " + std::to_string(lineno) +
                                ": empty section name");
            if (!cfg.sections_.count(section)) {
                cfg.order_.push_back(section);
                cfg.sections_[section] = {};
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw Error(ErrorCode::InvalidParameter,
                        "config line " + std::to_string(lineno) +
                            ": expected 'key = value' inside a section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw Error(ErrorCode::InvalidParameter,
                        "config line " + std::to_string(lineno) + ": empty key");
        cfg.set(section, key, value);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    return parse(read_text_file(path));
}

std::string Config::serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& name : order_) {
        if (!first) out << "\n";
        first = false;
        out << "[" << name << "]\n";
        for (const auto& [k, v] : sections_.at(name).entries)
            out << k << " = " << v << "\n";
    }
    return out.str();
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return false;
    for (const auto& [k, v] : it->second.entries)
        if (k == key) return true;
    return false;
}

std::string Config::get(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it != sections_.end())
        for (const auto& [k, v] : it->second.entries)
            if (k == key) return v;
    throw Error(ErrorCode::InvalidParameter,
                "missing config key [" + section + "] " + key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidParameter,
                    "[" + section + "] " + key + ": not a number: " + v);
    }
    if (pos != v.size())
        throw Error(ErrorCode::InvalidParameter,
                    "[" + section + "] " + key + ": trailing characters: " + v);
    return out;
}

long Config::get_long(const std::string& section, const std::string& key,
                      long fallback) const {
    if (!has(section, key)) return fallback;
    const double v = get_double(section, key, 0.0);
    const long l = std::lround(v);
    if (std::abs(v - l) > 1e-9)
        throw Error(ErrorCode::InvalidParameter,
                    "[" + section + "] " + key + ": expected an integer");
    return l;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::InvalidParameter,
                "[" + section + "] " + key + ": expected a boolean, got " + v);
}

std::vector<double> Config::get_list(const std::string& section,
                                     const std::string& key) const {
    std::vector<double> out;
    std::istringstream in(get(section, key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidParameter,
                        "[" + section + "] " + key + ": bad list entry: " + item);
        }
    }
    return out;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
    if (!sections_.count(section)) {
        order_.push_back(section);
        sections_[section] = {};
    }
    for (auto& [k, v] : sections_[section].entries)
        if (k == key) {
            v = value;
            return;
        }
    sections_[section].entries.emplace_back(key, value);
}

void Config::apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        const auto dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw Error(ErrorCode::InvalidParameter,
                        "override must look like section.key=value: " + ov);
        set(trim(ov.substr(0, dot)), trim(ov.substr(dot + 1, eq - dot - 1)),
            trim(ov.substr(eq + 1)));
    }
}

bool Config::operator==(const Config& other) const {
    if (order_ != other.order_) return false;
    for (const auto& name : order_) {
        if (sections_.at(name).entries != other.sections_.at(name).entries)
            return false;
    }
    return true;
}

ModeState Preparation::to_modes() const {
    if (amplitudes.empty())
        throw Error(ErrorCode::InvalidParameter, "empty preparation");
    if (!phases.empty() && phases.size() != amplitudes.size())
        throw Error(ErrorCode::InvalidParameter,
                    "preparation phases and amplitudes differ in length");
    ModeState m;
    m.first_well = first_well;
    m.amplitudes.resize(static_cast<Eigen::Index>(amplitudes.size()));
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        const double ph = phases.empty() ? 0.0 : phases[i];
        m.amplitudes[static_cast<Eigen::Index>(i)] =
            amplitudes[i] * std::exp(std::complex<double>(0.0, ph));
    }
    const double norm = m.amplitudes.norm();
    if (norm == 0.0)
        throw Error(ErrorCode::InvalidParameter, "preparation has zero norm");
    m.amplitudes /= norm;
    return m;
}

Preparation Preparation::equal_split(int first_well, int count) {
    Preparation p;
    p.first_well = first_well;
    p.amplitudes.assign(count, 1.0 / std::sqrt(static_cast<double>(count)));
    p.phases.assign(count, 0.0);
    return p;
}

RunConfig RunConfig::from_config(const Config& cfg) {
    RunConfig rc;

    if (cfg.section_names().end() !=
        std::find(cfg.section_names().begin(), cfg.section_names().end(), "lab")) {
        LabParams lab;
        lab.scattering_length =
            cfg.get_double("lab", "scattering_length_m", lab.scattering_length);
        lab.atom_count = cfg.get_long("lab", "atom_count", lab.atom_count);
        lab.transverse_length =
            cfg.get_double("lab", "transverse_length_m", lab.transverse_length);
        lab.laser_wavelength =
            cfg.get_double("lab", "laser_wavelength_m", lab.laser_wavelength);
        lab.lattice_depth = cfg.get_double("lab", "lattice_depth", lab.lattice_depth);
        lab.tilt_force = cfg.get_double("lab", "tilt_force", lab.tilt_force);
        rc.lab = lab;
        rc.params = lab_to_normalized(lab);
    }
    rc.params.v0 = cfg.get_double("params", "v0", rc.params.v0);
    rc.params.force = cfg.get_double("params", "force", rc.params.force);
    rc.params.g = cfg.get_double("params", "g", rc.params.g);
    rc.params.g_max = cfg.get_double("params", "g_max", rc.params.g_max);
    rc.params.validate();

    rc.box.well_count = static_cast<int>(cfg.get_long("box", "wells", rc.box.well_count));
    rc.box.points_per_period = static_cast<int>(
        cfg.get_long("box", "points_per_period", rc.box.points_per_period));
    rc.box.edge_margin =
        static_cast<int>(cfg.get_long("box", "edge_margin", rc.box.edge_margin));
    rc.chi_cutoff = static_cast<int>(cfg.get_long("box", "chi_cutoff", rc.chi_cutoff));
    rc.box.validate();

    if (cfg.has("preparation", "amplitudes")) {
        rc.preparation.first_well =
            static_cast<int>(cfg.get_long("preparation", "first_well", -6));
        rc.preparation.amplitudes = cfg.get_list("preparation", "amplitudes");
        if (cfg.has("preparation", "phases"))
            rc.preparation.phases = cfg.get_list("preparation", "phases");
        double norm2 = 0.0;
        for (double a : rc.preparation.amplitudes) norm2 += a * a;
        if (std::abs(norm2 - 1.0) > 1e-6)
            rc.preparation.warnings.push_back(
                "preparation amplitudes renormalized (sum of squares was " +
                format_full(norm2) + ")");
    } else {
        rc.preparation = Preparation::equal_split(
            static_cast<int>(cfg.get_long("preparation", "first_well", -6)),
            static_cast<int>(cfg.get_long("preparation", "wells", 12)));
    }

    rc.solver = cfg.get_or("run", "solver", rc.solver);
    if (rc.solver != "gpe" && rc.solver != "model" && rc.solver != "both")
        throw Error(ErrorCode::InvalidParameter,
                    "[run] solver must be gpe, model or both");
    rc.t_end = cfg.get_double("run", "t_end", rc.t_end);
    if (rc.t_end < 0.0)
        throw Error(ErrorCode::InvalidParameter, "[run] t_end must be >= 0");
    rc.dt = cfg.get_double("run", "dt", rc.dt);
    rc.tol = cfg.get_double("run", "tol", rc.tol);
    rc.samples = static_cast<int>(cfg.get_long("run", "samples", rc.samples));
    rc.well_margin =
        static_cast<int>(cfg.get_long("run", "well_margin", rc.well_margin));
    if (cfg.has("run", "track_wells"))
        for (double w : cfg.get_list("run", "track_wells"))
            rc.track_wells.push_back(static_cast<int>(std::lround(w)));
    else {
        const int lo = rc.preparation.first_well - 2;
        const int hi = rc.preparation.first_well +
                       static_cast<int>(rc.preparation.amplitudes.size()) + 1;
        for (int w = lo; w <= hi; ++w) rc.track_wells.push_back(w);
    }

    rc.section.trigger_well_a =
        static_cast<int>(cfg.get_long("section", "trigger_well_a", -1));
    rc.section.trigger_well_b =
        static_cast<int>(cfg.get_long("section", "trigger_well_b", 0));
    rc.section.record_well =
        static_cast<int>(cfg.get_long("section", "record_well", 0));
    rc.section.record_well_a =
        static_cast<int>(cfg.get_long("section", "record_well_a", 1));
    rc.section.record_well_b =
        static_cast<int>(cfg.get_long("section", "record_well_b", 0));
    rc.section.fixed_well =
        static_cast<int>(cfg.get_long("section", "fixed_well", -1));
    rc.section.fixed_action = cfg.get_double("section", "fixed_action", 0.1);
    rc.section.partner_well =
        static_cast<int>(cfg.get_long("section", "partner_well", 1));
    rc.section.total_norm = cfg.get_double("section", "total_norm", 1.0);
    rc.section.crossing_tol = cfg.get_double("section", "crossing_tol", 1e-6);
    rc.section.max_crossings =
        static_cast<int>(cfg.get_long("section", "crossings", 500));
    rc.section.max_time = cfg.get_double("section", "max_time", 5000.0);
    rc.section_well_min = static_cast<int>(cfg.get_long("section", "well_min", -1));
    rc.section_well_max = static_cast<int>(cfg.get_long("section", "well_max", 1));
    if (cfg.has("section", "launches")) {
        rc.section_launches = cfg.get_list("section", "launches");
    } else {
        const double lo = cfg.get_double("section", "launch_start", 0.02);
        const double hi = cfg.get_double("section", "launch_stop", 0.88);
        const int count = static_cast<int>(cfg.get_long("section", "launch_count", 44));
        for (int i = 0; i < count; ++i)
            rc.section_launches.push_back(
                count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }

    rc.lyap_horizon = cfg.get_double("lyapunov", "horizon", rc.lyap_horizon);
    rc.lyap.renorm_interval =
        cfg.get_double("lyapunov", "renorm_interval", rc.lyap.renorm_interval);
    rc.lyap.delta0 = cfg.get_double("lyapunov", "delta0", rc.lyap.delta0);
    rc.lyap.regular_floor =
        cfg.get_double("lyapunov", "regular_floor", rc.lyap.regular_floor);
    if (cfg.has("lyapunov", "launches"))
        rc.lyap_launches = cfg.get_list("lyapunov", "launches");
    else
        rc.lyap_launches = rc.section_launches;

    if (cfg.has("resonances", "orders")) {
        rc.resonance_orders.clear();
        std::istringstream in(cfg.get("resonances", "orders"));
        std::string item;
        while (std::getline(in, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw Error(ErrorCode::InvalidParameter,
                            "[resonances] orders entries look like a:b");
            rc.resonance_orders.emplace_back(std::stoi(item.substr(0, colon)),
                                             std::stoi(item.substr(colon + 1)));
        }
    }

    rc.output_dir = cfg.get_or("outputs", "directory", rc.output_dir);
    rc.threads = static_cast<int>(cfg.get_long("outputs", "threads", rc.threads));
    return rc;
}

Config RunConfig::to_config() const {
    Config cfg;
    if (lab) {
        cfg.set("lab", "scattering_length_m", format_full(lab->scattering_length));
        cfg.set("lab", "atom_count", std::to_string(lab->atom_count));
        cfg.set("lab", "transverse_length_m", format_full(lab->transverse_length));
        cfg.set("lab", "laser_wavelength_m", format_full(lab->laser_wavelength));
        cfg.set("lab", "lattice_depth", format_full(lab->lattice_depth));
        cfg.set("lab", "tilt_force", format_full(lab->tilt_force));
    }
    cfg.set("params", "v0", format_full(params.v0));
    cfg.set("params", "force", format_full(params.force));
    cfg.set("params", "g", format_full(params.g));
    cfg.set("params", "g_max", format_full(params.g_max));

    cfg.set("box", "wells", std::to_string(box.well_count));
    cfg.set("box", "points_per_period", std::to_string(box.points_per_period));
    cfg.set("box", "edge_margin", std::to_string(box.edge_margin));
    cfg.set("box", "chi_cutoff", std::to_string(chi_cutoff));

    cfg.set("preparation", "first_well", std::to_string(preparation.first_well));
    std::string amps, phs;
    for (std::size_t i = 0; i < preparation.amplitudes.size(); ++i) {
        amps += (i ? "," : "") + format_full(preparation.amplitudes[i]);
        phs += (i ? "," : "") +
               format_full(i < preparation.phases.size() ? preparation.phases[i] : 0.0);
    }
    cfg.set("preparation", "amplitudes", amps);
    cfg.set("preparation", "phases", phs);

    cfg.set("run", "solver", solver);
    cfg.set("run", "t_end", format_full(t_end));
    cfg.set("run", "dt", format_full(dt));
    cfg.set("run", "tol", format_full(tol));
    cfg.set("run", "samples", std::to_string(samples));
    cfg.set("run", "well_margin", std::to_string(well_margin));
    std::string tw;
    for (std::size_t i = 0; i < track_wells.size(); ++i)
        tw += (i ? "," : "") + std::to_string(track_wells[i]);
    cfg.set("run", "track_wells", tw);

    cfg.set("section", "trigger_well_a", std::to_string(section.trigger_well_a));
    cfg.set("section", "trigger_well_b", std::to_string(section.trigger_well_b));
    cfg.set("section", "record_well", std::to_string(section.record_well));
    cfg.set("section", "record_well_a", std::to_string(section.record_well_a));
    cfg.set("section", "record_well_b", std::to_string(section.record_well_b));
    cfg.set("section", "fixed_well", std::to_string(section.fixed_well));
    cfg.set("section", "fixed_action", format_full(section.fixed_action));
    cfg.set("section", "partner_well", std::to_string(section.partner_well));
    cfg.set("section", "total_norm", format_full(section.total_norm));
    cfg.set("section", "crossing_tol", format_full(section.crossing_tol));
    cfg.set("section", "crossings", std::to_string(section.max_crossings));
    cfg.set("section", "max_time", format_full(section.max_time));
    cfg.set("section", "well_min", std::to_string(section_well_min));
    cfg.set("section", "well_max", std::to_string(section_well_max));
    std::string ls;
    for (std::size_t i = 0; i < section_launches.size(); ++i)
        ls += (i ? "," : "") + format_full(section_launches[i]);
    cfg.set("section", "launches", ls);

    cfg.set("lyapunov", "horizon", format_full(lyap_horizon));
    cfg.set("lyapunov", "renorm_interval", format_full(lyap.renorm_interval));
    cfg.set("lyapunov", "delta0", format_full(lyap.delta0));
    cfg.set("lyapunov", "regular_floor", format_full(lyap.regular_floor));
    std::string ll;
    for (std::size_t i = 0; i < lyap_launches.size(); ++i)
        ll += (i ? "," : "") + format_full(lyap_launches[i]);
    cfg.set("lyapunov", "launches", ll);

    std::string orders;
    for (std::size_t i = 0; i < resonance_orders.size(); ++i)
        orders += (i ? "," : "") + std::to_string(resonance_orders[i].first) +
                  ":" + std::to_string(resonance_orders[i].second);
    cfg.set("resonances", "orders", orders);

    cfg.set("outputs", "directory", output_dir);
    cfg.set("outputs", "threads", std::to_string(threads));
    return cfg;
}

}  // namespace starkbec
