#include "starkbec/ws_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <lapacke.h>
#include <json.hpp>

namespace starkbec {

namespace {

// Tilted lattice potential of the normalized Hamiltonian.
double potential(double x, const ModelParams& p) {
    return p.v0 * std::cos(2.0 * kPi * x) + p.force * x;
}

struct Candidate {
    double energy = 0.0;
    double x_mean = 0.0;
    double x_sigma = 0.0;
    double band_energy = 0.0;  // energy - F * x_mean (co-tilted frame)
    int column = 0;
};

}  // namespace

void BoundingBox::validate() const {
    if (well_count < 1 || well_count % 2 == 0)
        throw Error(ErrorCode::InvalidParameter,
                    "well_count must be odd and positive, got " +
                        std::to_string(well_count));
    if (points_per_period < 32)
        throw Error(ErrorCode::InvalidParameter,
                    "points_per_period must be >= 32, got " +
                        std::to_string(points_per_period));
    if (edge_margin < 0)
        throw Error(ErrorCode::InvalidParameter, "edge_margin must be >= 0");
    if (well_count - 2 * edge_margin < 5)
        throw Error(ErrorCode::BoxTooSmall,
                    "box keeps fewer than 5 interior wells (" +
                        std::to_string(well_count) + " wells, margin " +
                        std::to_string(edge_margin) + ")");
}

Grid BoundingBox::make_grid() const {
    Grid g;
    g.x_lo = static_cast<double>(min_well());  // wall on the barrier top
    g.spacing = 1.0 / points_per_period;
    g.size = well_count * points_per_period;
    return g;
}

WsBasis::WsBasis(std::vector<WsState> states, Grid grid, BoundingBox box,
                 ModelParams params)
    : states_(std::move(states)), grid_(grid), box_(box), params_(params) {
    std::sort(states_.begin(), states_.end(),
              [](const WsState& a, const WsState& b) {
                  return a.well_index < b.well_index;
              });
}

bool WsBasis::has(int well) const {
    for (const auto& s : states_)
        if (s.well_index == well) return true;
    return false;
}

const WsState& WsBasis::at(int well) const {
    for (const auto& s : states_)
        if (s.well_index == well) return s;
    throw Error(ErrorCode::NotApplicable,
                "no Wannier-Stark state for well " + std::to_string(well));
}

int WsBasis::min_well() const {
    if (states_.empty()) throw Error(ErrorCode::NotApplicable, "empty basis");
    return states_.front().well_index;
}

int WsBasis::max_well() const {
    if (states_.empty()) throw Error(ErrorCode::NotApplicable, "empty basis");
    return states_.back().well_index;
}

double WsBasis::ladder_max_rel_dev(int n_half) const {
    double worst = 0.0;
    for (int n = -n_half; n < n_half; ++n) {
        double diff = at(n + 1).energy - at(n).energy;
        worst = std::max(worst, std::abs(diff - params_.force) /
                                    std::abs(params_.force));
    }
    return worst;
}

double WsBasis::translation_max_dev(int well_a, int well_b) const {
    const auto& a = at(well_a);
    const auto& b = at(well_b);
    const int shift = (well_a - well_b) * box_.points_per_period;
    double worst = 0.0;
    for (int i = 0; i < grid_.size; ++i) {
        const int j = i - shift;  // phi_b evaluated at x - (a-b)
        const double vb = (j >= 0 && j < grid_.size) ? b.samples[j] : 0.0;
        worst = std::max(worst, std::abs(a.samples[i] - vb));
    }
    return worst;
}

double WsBasis::overlap(int well_a, int well_b) const {
    return grid_.spacing * at(well_a).samples.dot(at(well_b).samples);
}

WsBasis solve_ws_states(const ModelParams& params, const BoundingBox& box) {
    params.validate();
    box.validate();
    if (params.v0 <= 0.0)
        throw Error(ErrorCode::NoLocalizedBand,
                    "v0 must be positive to bind Wannier-Stark states");

    const Grid grid = box.make_grid();
    const double h = grid.spacing;
    const int n_pts = grid.size - 1;  // interior points of the Dirichlet problem

    // Second-order central differences: tridiagonal with
    // diag = 1/(m h^2) + V(x_i), offdiag = -1/(2 m h^2).
    std::vector<double> diag(n_pts), offdiag(n_pts - 1);
    const double kin = 1.0 / (ModelParams::mass * h * h);
    for (int i = 0; i < n_pts; ++i)
        diag[i] = kin + potential(grid.x(i + 1), params);
    std::fill(offdiag.begin(), offdiag.end(), -0.5 * kin);

    // Lowest eigenpairs; three per well covers the lowest band of every well
    // plus the second-band states that overlap it in absolute energy.
    const int want = std::min(3 * box.well_count, n_pts);
    std::vector<double> evals(n_pts);
    std::vector<double> evecs(static_cast<size_t>(n_pts) * want);
    std::vector<lapack_int> isuppz(2 * static_cast<size_t>(want));
    lapack_int found = 0;
    lapack_int info = LAPACKE_dstevr(
        LAPACK_COL_MAJOR, 'V', 'I', n_pts, diag.data(), offdiag.data(), 0.0,
        0.0, 1, want, 0.0, &found, evals.data(), evecs.data(), n_pts,
        isuppz.data());
    if (info != 0 || found < want)
        throw Error(ErrorCode::NoLocalizedBand,
                    "eigensolver failed (info=" + std::to_string(info) + ")");

    // Classify candidates in the co-tilted frame: lowest-band states share
    // band_energy = E - F<x> regardless of the well they sit in.
    std::vector<Candidate> cands(want);
    for (int c = 0; c < want; ++c) {
        const double* v = &evecs[static_cast<size_t>(c) * n_pts];
        double xm = 0.0, x2 = 0.0;
        for (int i = 0; i < n_pts; ++i) {
            const double w = v[i] * v[i];
            const double x = grid.x(i + 1);
            xm += w * x;
            x2 += w * x * x;
        }
        cands[c] = {evals[c], xm, std::sqrt(std::max(0.0, x2 - xm * xm)),
                    evals[c] - params.force * xm, c};
    }

    const double band_floor =
        std::min_element(cands.begin(), cands.end(),
                         [](const Candidate& a, const Candidate& b) {
                             return a.band_energy < b.band_energy;
                         })
            ->band_energy;
    // Bound by the lattice, not by the walls: the lowest band must lie below
    // the barrier top (+v0 in the co-tilted frame).
    if (band_floor >= params.v0)
        throw Error(ErrorCode::NoLocalizedBand,
                    "lowest band (" + format_full(band_floor) +
                        ") lies above the lattice barrier top -- v0 too shallow");
    // Half the harmonic level spacing separates the lowest band from the next.
    const double band_window = 0.5 * std::sqrt(8.0 * params.v0);

    std::map<int, Candidate> best;  // well -> candidate, lowest band energy wins
    std::vector<double> sigmas;
    for (const auto& c : cands) {
        if (c.band_energy >= band_floor + band_window) continue;
        sigmas.push_back(c.x_sigma);
        const int n = static_cast<int>(std::lround(c.x_mean - 0.5));
        auto it = best.find(n);
        if (it == best.end() || c.band_energy < it->second.band_energy ||
            (c.band_energy == it->second.band_energy &&
             c.energy < it->second.energy))
            best[n] = c;
    }

    // At F = 0 there is no Stark localization and the band states legitimately
    // spread over the box; the width check only applies under a tilt.
    std::sort(sigmas.begin(), sigmas.end());
    const double median_sigma = sigmas[sigmas.size() / 2];
    if (params.force != 0.0 && median_sigma > 0.75)
        throw Error(ErrorCode::NoLocalizedBand,
                    "lowest band is not localized (median width " +
                        format_full(median_sigma) + " periods) -- v0 too shallow");

    const int keep_lo = box.min_well() + box.edge_margin;
    const int keep_hi = box.max_well() - box.edge_margin;
    std::vector<WsState> states;
    for (const auto& [well, cand] : best) {
        if (well < keep_lo || well > keep_hi) continue;
        WsState s;
        s.well_index = well;
        s.energy = cand.energy;
        s.samples = Eigen::VectorXd::Zero(grid.size);
        const double* v = &evecs[static_cast<size_t>(cand.column) * n_pts];
        const double scale = 1.0 / std::sqrt(h);  // unit quadrature norm
        for (int i = 0; i < n_pts; ++i) s.samples[i + 1] = v[i] * scale;
        // Sign convention: positive peak.
        int peak = 0;
        s.samples.cwiseAbs().maxCoeff(&peak);
        if (s.samples[peak] < 0.0) s.samples = -s.samples;
        states.push_back(std::move(s));
    }

    if (params.force != 0.0) {
        // A tilt localizes one state per well; gaps mean the band assignment
        // failed, which is a localization problem, not a box problem.
        for (int n = keep_lo; n <= keep_hi; ++n) {
            const bool present = std::any_of(
                states.begin(), states.end(),
                [n](const WsState& s) { return s.well_index == n; });
            if (!present)
                throw Error(ErrorCode::NoLocalizedBand,
                            "no lowest-band state localized in well " +
                                std::to_string(n));
        }
    }

    return WsBasis(std::move(states), grid, box, params);
}

std::array<int, 3> ChiTensor::canonical(int k, int l, int m) {
    std::array<int, 3> t{k, l, m};
    std::sort(t.begin(), t.end());
    return t;
}

double ChiTensor::chi(int k, int l, int m) const {
    auto it = entries_.find(canonical(k, l, m));
    return it == entries_.end() ? 0.0 : it->second;
}

bool ChiTensor::has(int k, int l, int m) const {
    return entries_.count(canonical(k, l, m)) > 0;
}

void ChiTensor::set(int k, int l, int m, double value) {
    entries_[canonical(k, l, m)] = value;
    cutoff_ = std::max({cutoff_, std::abs(k), std::abs(l), std::abs(m)});
}

ChiTensor chi_tensor(const WsBasis& basis, int cutoff_radius) {
    if (cutoff_radius < 1)
        throw Error(ErrorCode::InvalidParameter, "cutoff_radius must be >= 1");
    const double h = basis.grid().spacing;
    const Eigen::VectorXd& phi0 = basis.at(0).samples;
    ChiTensor chi(cutoff_radius);
    for (int k = -cutoff_radius; k <= cutoff_radius; ++k)
        for (int l = k; l <= cutoff_radius; ++l)
            for (int m = l; m <= cutoff_radius; ++m) {
                const double v = h * (basis.at(k).samples.array() *
                                      basis.at(l).samples.array() *
                                      basis.at(m).samples.array() *
                                      phi0.array())
                                         .sum();
                chi.set(k, l, m, v);
            }
    if (chi.chi000() <= 0.0)
        throw Error(ErrorCode::NoLocalizedBand, "chi000 must be positive");
    return chi;
}

double verify_translation_identity(const WsBasis& basis, const ChiTensor& chi,
                                   int n) {
    const int central = basis.box().well_count / 4;
    if (std::abs(n) > central)
        throw Error(ErrorCode::NotApplicable,
                    "well " + std::to_string(n) + " is outside the central region");
    const int r = chi.cutoff_radius();
    for (int d = -r; d <= r; ++d)
        if (!basis.has(n + d))
            throw Error(ErrorCode::NotApplicable,
                        "states around well " + std::to_string(n) +
                            " not all available");
    const double h = basis.grid().spacing;
    const Eigen::VectorXd& phin = basis.at(n).samples;
    double worst = 0.0;
    for (const auto& [triple, value] : chi.entries()) {
        const double direct = h * (basis.at(triple[0] + n).samples.array() *
                                   basis.at(triple[1] + n).samples.array() *
                                   basis.at(triple[2] + n).samples.array() *
                                   phin.array())
                                      .sum();
        worst = std::max(worst, std::abs(direct - value));
    }
    return worst;
}

std::string basis_content_hash(const ModelParams& params,
                               const BoundingBox& box) {
    // FNV-1a over the canonical parameter serialization.
    std::string key = format_full(params.v0) + "|" + format_full(params.force) +
                      "|" + format_full(params.g) + "|" +
                      std::to_string(box.well_count) + "|" +
                      std::to_string(box.points_per_period) + "|" +
                      std::to_string(box.edge_margin);
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : key) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash));
    return std::string(buf);
}

void save_basis_json(const std::string& path, const WsBasis& basis,
                     const ChiTensor& chi) {
    nlohmann::json j;
    j["format"] = "starkbec-basis/1";
    const auto& p = basis.params();
    const auto& b = basis.box();
    j["params"] = {{"v0", p.v0}, {"force", p.force}, {"g", p.g}, {"g_max", p.g_max}};
    j["box"] = {{"well_count", b.well_count},
                {"points_per_period", b.points_per_period},
                {"edge_margin", b.edge_margin}};
    j["grid"] = {{"x_lo", basis.grid().x_lo},
                 {"spacing", basis.grid().spacing},
                 {"size", basis.grid().size}};
    j["content_hash"] = basis_content_hash(p, b);
    auto& states = j["states"] = nlohmann::json::array();
    for (const auto& s : basis.states()) {
        nlohmann::json js;
        js["well_index"] = s.well_index;
        js["energy"] = s.energy;
        js["samples"] = std::vector<double>(s.samples.data(),
                                            s.samples.data() + s.samples.size());
        states.push_back(std::move(js));
    }
    auto& entries = j["chi"]["entries"] = nlohmann::json::array();
    j["chi"]["cutoff_radius"] = chi.cutoff_radius();
    for (const auto& [t, v] : chi.entries())
        entries.push_back({{"k", t[0]}, {"l", t[1]}, {"m", t[2]}, {"value", v}});

    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << j.dump(1) << "\n";
}

std::pair<WsBasis, ChiTensor> load_basis_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "starkbec-basis/1")
        throw Error(ErrorCode::Io, path + ": not a basis file");

    ModelParams p;
    p.v0 = j["params"]["v0"].get<double>();
    p.force = j["params"]["force"].get<double>();
    p.g = j["params"]["g"].get<double>();
    p.g_max = j["params"].value("g_max", 1.0);
    BoundingBox b;
    b.well_count = j["box"]["well_count"].get<int>();
    b.points_per_period = j["box"]["points_per_period"].get<int>();
    b.edge_margin = j["box"]["edge_margin"].get<int>();
    if (j["content_hash"].get<std::string>() != basis_content_hash(p, b))
        throw Error(ErrorCode::Io, path + ": content hash mismatch");

    Grid grid = b.make_grid();
    std::vector<WsState> states;
    for (const auto& js : j["states"]) {
        WsState s;
        s.well_index = js["well_index"].get<int>();
        s.energy = js["energy"].get<double>();
        auto samples = js["samples"].get<std::vector<double>>();
        if (static_cast<int>(samples.size()) != grid.size)
            throw Error(ErrorCode::Io, path + ": sample count mismatch");
        s.samples = Eigen::Map<Eigen::VectorXd>(samples.data(), samples.size());
        states.push_back(std::move(s));
    }
    ChiTensor chi(j["chi"]["cutoff_radius"].get<int>());
    for (const auto& je : j["chi"]["entries"])
        chi.set(je["k"].get<int>(), je["l"].get<int>(), je["m"].get<int>(),
                je["value"].get<double>());
    return {WsBasis(std::move(states), grid, b, p), std::move(chi)};
}

}  // namespace starkbec
