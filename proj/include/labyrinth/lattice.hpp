#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "labyrinth/geometry.hpp"

namespace lab {

using IVec = Eigen::Matrix<int, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

struct Lattice {
    Mat basis;  // columns e_1..e_d
    std::uint64_t seed = 0;
    double delta = 0.0;
    int seeds_tried = 1;

    int dim() const { return static_cast<int>(basis.rows()); }
    double det() const { return basis.determinant(); }
    Vec point(const IVec& n) const;
    Vec coords(const Vec& x) const;  // basis^{-1} x
    // All lattice points within `radius` of `center`, with their integer coordinates.
    std::vector<IVec> points_near(const Vec& center, double radius) const;
};

Lattice perturb_basis(int dim, std::uint64_t seed, double delta);
Lattice lattice_from_basis(const Mat& basis);

// Cell given by integer vertex coordinates.
struct LatticeCell {
    std::vector<IVec> v;
};

struct Tessellation {
    Lattice lat;
    std::vector<LatticeCell> prototypes;  // one period, barycenters in [0,1)^d
    double tau = 1.0;
    Vec z;                                // offset, unscaled lattice units
    double eta_m = 0.0;                   // unscaled circumsphere margin
    std::vector<std::pair<int, IVec>> window;  // materialized (prototype, translate)
    Vec window_center;
    double window_radius = 0.0;           // unscaled

    int dim() const { return lat.dim(); }
    // τ(S + z) for a prototype translated by w.
    Simplex cell(int proto, const IVec& w) const;
    Simplex unscaled_cell(int proto, const IVec& w) const;
    double longest_prototype_edge() const;  // unscaled
    // Materialize translates whose cell meets the ball B(center, radius), both in scaled coordinates.
    void materialize(const Vec& center, double radius);
    Tessellation scaled(double new_tau, const Vec& new_z) const;
};

Tessellation delaunay_tessellate(const Lattice& lat, double window_radius);
double verify_true_delaunay(const Tessellation& t);

struct Skeleton {
    std::vector<Simplex> faces;  // scaled coordinates
    double cell = 0.0;           // spatial hash cell size
    std::vector<std::vector<int>> bins;
    std::vector<IVec> bin_keys;
    std::vector<Vec> box_lo, box_hi;  // per-face bounding boxes for culling

    double distance(const Vec& x) const;
    // min(distance, cap); faster when only a bounded neighbourhood matters
    double distance_capped(const Vec& x, double cap) const;
    void build_index();

private:
    std::unordered_map<std::uint64_t, int> lookup_table_;
};

Skeleton build_skeleton(const Tessellation& t);
double skeleton_distance(const Vec& x, const Skeleton& sk);

// Periodic face set of the unscaled tessellation, used by the μ estimator.
struct PeriodicFaces {
    const Tessellation* t = nullptr;
    std::vector<LatticeCell> faces;  // unique (d-1)-faces of prototypes, up to translation
    double reach = 0.0;              // max distance from a face point to its anchor
    double cover = 0.0;              // every point has a skeleton vertex within this distance
    // Exact distance from x (unscaled) to Skel(T)+q.
    double distance(const Vec& x, const Vec& q) const;
};
PeriodicFaces periodic_faces(const Tessellation& t);

struct ShiftFamily {
    std::vector<Vec> q;  // q_0 = 0, unscaled base coordinates
    double mu = 0.0;     // certified
    double mu_sampled = 0.0;
    double mesh = 0.0;
    double arrangement = 0.0;  // hyperplane-model separation used to pick the shifts
    int candidates = 0;
};

struct MuEstimate {
    double sampled = 0.0;
    double certified = 0.0;
    double h = 0.0;
    std::size_t samples = 0;
};

MuEstimate estimate_mu_raw(const Tessellation& t, const std::vector<Vec>& q, double h);
double estimate_mu(const ShiftFamily& family, const Tessellation& t, double h);  // throws MeshTooCoarse

// Shifted skeletons with every face replaced by its whole hyperplane. Each hyperplane family is
// a lattice plane family, so the chain minimum for one choice of families has a closed form via
// the dual problem; the arrangement separation is the minimum over all choices. Since the planes
// contain the faces it sits below the true separation, and matches it when faces tile their
// hyperplanes (perturbed cubic lattices in dimensions 2 and 3). Choices with a two-dimensional
// dual are evaluated approximately and higher ones skipped, so this only ranks shift candidates.
class Arrangement {
public:
    explicit Arrangement(const Tessellation& t);
    double separation(const std::vector<Vec>& q) const;
    int families() const { return static_cast<int>(normals_.size()); }

private:
    struct Choice {
        std::vector<int> fam;
        int kind = 0;                 // 1 generic, 2 two-dimensional null space, 3 all parallel
        Vec lambda;                   // kind 1: primitive integer null vector
        double scale = 0.0;           // kind 1: 1 / max partial-sum norm; kind 3: plane spacing
        Mat kernel;                   // kind 2
        std::vector<double> bx, by;   // kind 2: sampled boundary of the dual feasible set
    };
    int dim_ = 0;
    Mat basis_inv_;
    std::vector<IVec> normals_;
    std::vector<Choice> choices_;
};

ShiftFamily find_shifts(const Tessellation& t, int m, std::uint64_t seed, int candidates = 512, double h = 0.0,
                        int retry_budget = 4);

std::string tessellation_obj(const Tessellation& t, bool skeleton_only = false);

}  // namespace lab
