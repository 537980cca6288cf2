#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "labyrinth/barrier.hpp"
#include "labyrinth/path.hpp"
#include "labyrinth/runge.hpp"

namespace lab {

// R^(2N) -> C^N by z_k = x_(2k) + i x_(2k+1).
std::vector<cplx> to_complex(const Vec& x);

// l(z) = sum c_k z_k with Re l(x) = normal . x / offset.
struct FacetFunctional {
    std::vector<cplx> c;
    Vec normal;
    double offset = 0.0;
    double bound = 0.0;  // sup of |l| on the closed unit ball (= |c|, attained)

    cplx operator()(const Vec& x) const;
};

FacetFunctional facet_functional(const Hyperplane& h);

// Points of a facet at distance >= eta from its boundary faces: the homothetic copy about the incenter.
Simplex shrink_facet(const Simplex& f, double eta);
// Barycentric grid; every point of the simplex is within `spacing` of a returned point.
std::vector<Vec> sample_simplex(const Simplex& s, double spacing);

struct LayerTerm {
    FacetFunctional ell;
    UniPoly phi;
    BoundCertificate cert;
};

struct LayerOptions {
    std::vector<int> schedule = default_schedule();
    double spacing = 0.0;        // zeta-plane sample spacing for the fits, 0: critical segment / 100
    std::vector<Simplex> later;  // pieces of later stages: -floor3 <= Re phi_i, |phi_i| <= cap3 on their images
    double floor3 = 1.0;
    double cap3 = 0.0;           // 0: cap_factor * (level + 2)
    double cap_factor = 6.0;
};

// Sum of phi_i o l_i over the kept facets of one layer.
struct LayerPolynomial {
    std::vector<LayerTerm> terms;
    std::vector<Simplex> pieces;  // shrunk facets, same order as terms
    double level = 0.0, eps = 0.0, inner_radius = 0.0, nu_slab = 0.0;
    // certified through the one-variable certificates
    double sup_inner = 0.0;   // |Phi| on the inner ball
    double inf_pieces = 0.0;  // Re Phi on the layer's own pieces
    double inf_later = 0.0;   // Re Phi on the later pieces (0 when there are none)
    double sup_later = 0.0;   // |Phi| on the later pieces

    cplx operator()(const Vec& x) const;
    int max_degree() const;
};

double choose_slab_width(const BarrierLayer& L, double inner_radius);
LayerPolynomial build_layer_polynomial(const BarrierLayer& L, double level, double eps, double inner_radius,
                                       const LayerOptions& opt = {});

struct SetBound {
    double sampled = 0.0, certified = 0.0;
    std::size_t samples = 0;
};
// inf Re of a sum of terms over simplices. In collapsed coordinates the sum has degree <= D in each
// variable, so tensor Chebyshev nodes (oversample * (D+1) per axis) give a norming set.
SetBound inf_re(const std::vector<const LayerTerm*>& terms, const std::vector<Simplex>& pieces, int oversample = 32);
// max |sum| at the given points; `certified` only adds the rounding estimate
SetBound sup_abs(const std::vector<const LayerTerm*>& terms, const std::vector<Vec>& pts);

struct StageSpec {
    BarrierLayer layer;
    double inner_radius = 0.0;  // mu_j: the ball that must see a small delta
    double target = 0.0;        // Re Phi_j >= target on the pieces
    double budget = 0.0;        // |Phi_j - Phi_(j-1)| < budget on mu_j B
    int group = 0;              // shell index, for reporting
};

struct StageRecord {
    StageSpec spec;
    double C = 0.0;                 // level handed to the layer polynomial
    SetBound before;                // inf Re Phi_(j-1) on E_j
    SetBound after;                 // inf Re Phi_j on E_j
    double delta_certified = 0.0;   // sup |Psi_j| on mu_j B, from the layer certificates
    double delta_sampled = 0.0;     // sampled on the sphere of radius mu_j (maximum modulus)
    LayerPolynomial psi;
};

struct TelescopeOptions {
    std::vector<int> schedule = default_schedule();
    double spacing = 0.0;        // zeta-plane fit spacing, 0: per term critical segment / 100
    int oversample = 32;         // norming nodes per axis on the pieces, times (degree + 1)
    double floor3 = 1.0, cap_factor = 6.0;
    int sphere_samples = 4096;
    // Which later pieces each stage's fits must keep bounded (K3). Across shells the level C absorbs the drift;
    // pieces of the next shell sit right behind the current one and make the fits far harder.
    enum class Later { None, SameGroup, All } later = Later::SameGroup;
};

struct TelescopeSequence {
    std::vector<StageRecord> stages;

    cplx operator()(const Vec& x) const { return partial(x, static_cast<int>(stages.size())); }
    cplx partial(const Vec& x, int k) const;  // Phi_k, k stages summed
    // Phi_k at many points at once (k < 0: all stages)
    std::vector<cplx> values(const std::vector<Vec>& xs, int k = -1) const;
    double tail_after(int k) const;           // budgets of the stages Phi_k leaves out
    std::vector<const LayerTerm*> terms(int k) const;
};

TelescopeSequence telescope(const std::vector<StageSpec>& stages, const TelescopeOptions& opt = {});

// One stage per barrier layer, shells in order. Shell n gets budget 2^-n split over its layers and the
// target L_n + 1 + budget; every inner ball holds all pieces built before it.
std::vector<StageSpec> shell_stages(const std::vector<ShellBarrier>& shells, const std::vector<double>& levels);

// Finite partial sum with the budget of the stages it leaves out.
struct EntireApprox {
    TelescopeSequence seq;
    double tail_bound = 0.0;

    cplx operator()(const Vec& x) const { return seq(x); }
    std::vector<cplx> values(const std::vector<Vec>& xs) const { return seq.values(xs); }
};

struct ProfilePoint {
    double t = 0.0, re = 0.0, abs = 0.0;
};
struct Profile {
    std::vector<ProfilePoint> pts;
    double max_re = 0.0;
    double t_at_max = 0.0;
    Vec x_at_max;
};

template <class G>
Profile profile_along_path(const G& g, const Polyline& path, int samples) {
    Profile pr;
    pr.max_re = -std::numeric_limits<double>::infinity();
    if (path.pts.empty()) return pr;
    if (path.pts.size() == 1) {
        cplx v = g(path.pts[0]);
        pr.pts.push_back({0.0, v.real(), std::abs(v)});
        pr.max_re = v.real();
        pr.x_at_max = path.pts[0];
        return pr;
    }
    const double total = path.length();
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < path.pts.size(); ++i) cum.push_back(cum.back() + (path.pts[i] - path.pts[i - 1]).norm());
    std::size_t seg = 0;
    std::vector<Vec> xs;
    std::vector<double> ts;
    for (int k = 0; k < samples; ++k) {
        double t = samples > 1 ? double(k) / (samples - 1) : 0.0;
        double s = t * total;
        while (seg + 2 < path.pts.size() && cum[seg + 1] < s) ++seg;
        double len = cum[seg + 1] - cum[seg];
        double u = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
        xs.push_back((1.0 - u) * path.pts[seg] + u * path.pts[seg + 1]);
        ts.push_back(t);
    }
    std::vector<cplx> vals;
    if constexpr (requires { g.values(xs); }) {
        vals = g.values(xs);
    } else {
        for (const auto& x : xs) vals.push_back(g(x));
    }
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const cplx v = vals[k];
        pr.pts.push_back({ts[k], v.real(), std::abs(v)});
        if (v.real() > pr.max_re) {
            pr.max_re = v.real();
            pr.t_at_max = ts[k];
            pr.x_at_max = xs[k];
        }
    }
    return pr;
}

std::string profile_csv(const Profile& p);
nlohmann::json to_json(const FacetFunctional& f);
nlohmann::json to_json(const LayerPolynomial& L);
nlohmann::json to_json(const TelescopeSequence& s);
TelescopeSequence telescope_from_json(const nlohmann::json& j);

}  // namespace lab
