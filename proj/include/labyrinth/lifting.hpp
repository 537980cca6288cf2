#pragma once

#include <string>
#include <vector>

#include "labyrinth/lattice.hpp"

namespace lab {

// Graph chart of the upper hemisphere of radius r over the base ball |x| < u0.
struct DomeChart {
    double u0 = 0.1, u1 = 0.06, u = 0.05;  // u0 > u1 > u > 0
    double r = 0.75;                       // 1/2 < r < 1

    void validate() const;
};

double psi(double r, const Vec& x);
Vec grad_psi(double r, const Vec& x);
// sup |grad psi_r| over |x| <= u0 and every r > 1/2
double gradient_bound(const DomeChart& chart);
// lifted edge / base edge never exceeds this on a chart (mean value theorem)
double chord_stretch_bound(const DomeChart& chart);
// 2 nu^2 d^2 with the a-priori stretch; usable before tau is known
double shell_constant_bound(const DomeChart& chart, const Tessellation& t);

struct LiftedFacet {
    Simplex base;
    Simplex lifted;
    Hyperplane plane;
    std::vector<int> vid;  // indices into LiftedSurface::vertices
    bool meets_w = false;  // base simplex meets the inner ball |x| <= u
};

struct LiftedSurface {
    DomeChart chart;
    double tau = 1.0;
    Vec z;
    double nu_c = 1.0;      // measured chord stretch
    double edge = 0.0;      // longest unscaled prototype edge
    double omega_sh = 0.0;  // 2 nu_c^2 edge^2
    std::vector<Vec> vertices;       // lifted, R^m
    std::vector<Vec> base_vertices;  // R^(m-1)
    std::vector<LiftedFacet> facets;

    int m = 0;  // ambient dimension

    double r() const { return chart.r; }
    double shell_lo() const { return chart.r - omega_sh * tau * tau; }
};

// The tessellation's tau and z are used as given; only cells inside |x| <= u0 are lifted.
LiftedSurface lift_tessellation(const Tessellation& t, const DomeChart& chart);

struct ConvexityCertificate {
    std::vector<double> facet_margin;
    double global_margin = 0.0;
    std::vector<std::pair<int, int>> violations;  // (facet, vertex), capped
    bool valid() const { return global_margin > 0.0; }
    std::string report() const;
};

ConvexityCertificate certify_convexity(const LiftedSurface& s);

struct ProjectionCheck {
    bool ok = false;
    double worst_excess = 0.0;  // max distance of projected samples from the base circumsphere
    double tolerance = 0.0;     // tau * eta_m
};
// Diagnostic: projected circumspheres of lifted facets stay near the base circumspheres.
ProjectionCheck circumsphere_projection_check(const LiftedSurface& s, double eta_m, int samples_per_facet = 32,
                                              std::uint64_t seed = 1);

// Ambient dimension <= 3 directly; dimension 4 as drop_last with the height as the w coordinate.
std::string lifted_obj(const LiftedSurface& s);

}  // namespace lab
