#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "starkbec/common.hpp"
#include "starkbec/grid.hpp"
#include "starkbec/units.hpp"

namespace starkbec {

/// Hard-wall bounding box enclosing an odd number of lattice periods.
/// Wells are indexed symmetrically around n = 0; well n is centered at
/// x = n + 1/2 and the walls sit on the barrier tops at integer x.
struct BoundingBox {
    int well_count = 41;
    int points_per_period = 64;
    int edge_margin = 5;  // wells dropped at each wall

    void validate() const;
    int min_well() const { return -(well_count - 1) / 2; }
    int max_well() const { return (well_count - 1) / 2; }
    Grid make_grid() const;
};

/// One lowest-band Wannier-Stark state. Samples are real (phases chosen so)
/// on the box grid, unit L2 norm under the grid quadrature, sign fixed so the
/// peak value is positive.
struct WsState {
    int well_index = 0;
    double energy = 0.0;
    Eigen::VectorXd samples;
};

class WsBasis {
public:
    WsBasis() = default;
    WsBasis(std::vector<WsState> states, Grid grid, BoundingBox box,
            ModelParams params);

    const std::vector<WsState>& states() const { return states_; }
    const Grid& grid() const { return grid_; }
    const BoundingBox& box() const { return box_; }
    const ModelParams& params() const { return params_; }

    bool has(int well) const;
    const WsState& at(int well) const;
    int min_well() const;
    int max_well() const;

    /// max over |n| <= n_half of |(E_{n+1} - E_n) - F| / F
    double ladder_max_rel_dev(int n_half) const;
    /// max_x |phi_a(x) - phi_b(x - (a-b))|, grid-aligned shift
    double translation_max_dev(int well_a, int well_b) const;
    double overlap(int well_a, int well_b) const;

private:
    std::vector<WsState> states_;  // ordered by well_index
    Grid grid_;
    BoundingBox box_;
    ModelParams params_;
};

/// Quartic overlap coefficients chi_{klm} = \int phi_k phi_l phi_m phi_0 dx,
/// stored once per permutation class (indices sorted ascending). Triples
/// outside the cutoff read as zero.
class ChiTensor {
public:
    ChiTensor() = default;
    explicit ChiTensor(int cutoff_radius) : cutoff_(cutoff_radius) {}

    double chi(int k, int l, int m) const;
    void set(int k, int l, int m, double value);
    bool has(int k, int l, int m) const;

    double chi000() const { return chi(0, 0, 0); }
    double chi001() const { return chi(0, 0, 1); }
    double chi00m1() const { return chi(0, 0, -1); }

    int cutoff_radius() const { return cutoff_; }
    const std::map<std::array<int, 3>, double>& entries() const { return entries_; }

    static std::array<int, 3> canonical(int k, int l, int m);

private:
    std::map<std::array<int, 3>, double> entries_;
    int cutoff_ = 0;
};

/// Diagonalizes H0 = -(1/2m) d^2/dx^2 + v0 cos(2 pi x) + F x with hard walls
/// (second-order central differences) and keeps the lowest-band state of each
/// well away from the walls.
WsBasis solve_ws_states(const ModelParams& params, const BoundingBox& box);

/// Grid quadrature of the quartic products for all triples with
/// max(|k|,|l|,|m|) <= cutoff_radius.
ChiTensor chi_tensor(const WsBasis& basis, int cutoff_radius);

/// Direct check of the discrete-translation identity: recomputes every stored
/// triple from the states around well n and returns the max deviation from
/// the stored (well-0) value.
double verify_translation_identity(const WsBasis& basis, const ChiTensor& chi,
                                   int n);

/// JSON export/import so downstream runs skip re-diagonalization. The file
/// carries a content hash of (params, box) which is checked on load.
void save_basis_json(const std::string& path, const WsBasis& basis,
                     const ChiTensor& chi);
std::pair<WsBasis, ChiTensor> load_basis_json(const std::string& path);

std::string basis_content_hash(const ModelParams& params, const BoundingBox& box);

}  // namespace starkbec
