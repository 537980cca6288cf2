#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "labyrinth/lattice.hpp"
#include "labyrinth/lifting.hpp"

namespace lab {

// Caps of the unit sphere in R^m, chord metric: the covering caps have radius 2 eta_c, the enlarged ones 4 eta_c.
struct SphereCover {
    int m = 0;
    double eta_c = 0.0;
    std::vector<Vec> centers;
    int mesh_points = 0;  // size of the verification mesh

    double radius() const { return 2.0 * eta_c; }
    double enlarged() const { return 4.0 * eta_c; }
    int size() const { return static_cast<int>(centers.size()); }
};

SphereCover build_cover(int m, double eta_c, std::uint64_t seed, int mesh_points = 0);
// Largest distance from a mesh point to its nearest center.
double cover_gap(const SphereCover& c, int mesh_points, std::uint64_t seed);
// Every cap of radius 2 eta_c with a sampled center lies in some enlarged cap (triangle inequality witness).
bool caps_in_enlarged(const SphereCover& c, int samples, std::uint64_t seed);

struct BoxPlan {
    double A = 0.0;
    double alpha = 0.0, beta = 0.0;
    double mu = 0.0, omega = 0.0;
    int m = 0;
    long ell = 0;
    double tau = 0.0, eta_s = 0.0;
    bool coarse = false;  // hand-picked tau and eta_s; A is then the analytic bound, not a target

    double width() const { return beta - alpha; }
    double analytic_bound() const { return ell * tau * mu - m * ell * eta_s; }
    // layer radius r_{k,j}: sub-interval k < ell, j = 0..m
    double radius(long k, int j) const { return alpha + width() * (static_cast<double>(k) + double(j) / m) / ell; }
    bool identities_hold() const;
};

BoxPlan plan_box(double A, const ShellInterval& J, double mu, double omega, int m, double tau0 = 1e300, long ell0 = 1,
                 long budget = 1000000);
// Hand-picked single sub-interval plan for desk-scale demonstrations. Layer shells still must not overlap
// (tau^2 omega < width / m).
BoxPlan coarse_plan(const ShellInterval& J, double tau, double eta_s, double mu, double omega, int m);
// Largest tau for which cells meeting U1 stay in U0.
double coverage_tau_bound(const DomeChart& chart, const Tessellation& t);

struct BarrierFacet {
    Simplex facet;  // world coordinates
    Hyperplane plane;
    double eta_s = 0.0;
    int layer = 0;  // index into the owning box's layers
};

struct BarrierLayer {
    long sub = 0;  // sub-interval k
    int j = 1;     // 1..m
    double r = 0.0, r_lo = 0.0;
    Vec q;
    double eta_s = 0.0;
    double convexity_margin = 0.0;  // chart frame, unscaled by the box scale
    double shell_lo = 0.0;          // r - omega_sh tau^2
    std::vector<BarrierFacet> facets;
    Skeleton skeleton;  // (m-2)-faces of the kept facets, world coordinates

    // Points of the facet hyperplane pieces, i.e. facet minus the open eta_s-neighbourhood of the skeleton.
    bool in_piece(const Vec& x, int facet, double tol = 1e-12) const;
};

// The chart frame is rotated and scaled into the world: world = scale * rotation * chart.
BarrierLayer build_layer(long sub, int j, const BoxPlan& plan, const DomeChart& chart, const Tessellation& t,
                         const Vec& q, const Mat& rotation, double scale = 1.0);

struct BoxBarrier {
    SphericalBox box;  // world cap and interval (interval scaled)
    BoxPlan plan;
    DomeChart chart;
    Mat rotation;  // chart pole -> cap center
    double scale = 1.0;
    std::vector<BarrierLayer> layers;

    std::size_t facet_count() const;
};

// Chord radius of caps whose cone stays inside the chart tube over the whole interval, with room for a 25%
// dilation of the cap.
double max_cap_radius(const DomeChart& chart, double beta);

BoxBarrier assemble_box(const BoxPlan& plan, const Vec& cap_center, double cap_radius, const DomeChart& chart,
                        const Tessellation& t, const std::vector<Vec>& shifts, double scale = 1.0);

struct ShellLayout {
    double r = 0.0, R = 0.0, A = 0.0;
    long ell_outer = 0;
    struct Box {
        long k = 0;
        int s = 0;
        ShellInterval J;
    };
    std::vector<Box> boxes;  // ordered by radius
};

ShellLayout layout_shell(const ShellInterval& J, double A, const SphereCover& cover);

struct ShellBarrier {
    ShellInterval J;
    SphereCover cover;
    ShellLayout layout;
    std::vector<BoxBarrier> boxes;
    double scale = 1.0;
};

struct ShellInputs {
    DomeChart chart;
    const Tessellation* t = nullptr;
    std::vector<Vec> shifts;
    double mu = 0.0;
    double omega = 0.0;
    std::size_t facet_budget = 2000000;  // refuse to build more than this
};

ShellBarrier assemble_shell(const ShellInterval& J, double A, const SphereCover& cover, const ShellInputs& in);

// Shell n lives in (r_n, R_n) and is built in the normalized frame where the shell is (r_n/s, R_n/s] with
// s = R_n / top; only the first cover cap is used when `single_cap` is set (desk scale).
struct MultiShellSpec {
    std::vector<double> r, R, B;
    double top = 0.95;
    bool single_cap = true;
    bool coarse = false;           // use coarse plans (tau, eta_s fixed per shell, relative to the shell scale)
    double coarse_tau = 0.2, coarse_eta = 0.03;
};
std::vector<ShellBarrier> build_multi_shell(const MultiShellSpec& spec, const ShellInputs& in, const SphereCover& cover);

nlohmann::json plan_to_json(const BoxPlan& p);
BoxPlan plan_from_json(const nlohmann::json& j);
// plans, layer indices, rotation and scale; geometry goes to OBJ
nlohmann::json box_manifest(const BoxBarrier& b);
std::string barrier_obj(const std::vector<const BoxBarrier*>& boxes);

}  // namespace lab
