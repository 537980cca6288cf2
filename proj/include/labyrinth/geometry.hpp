#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

#include "labyrinth/error.hpp"

namespace lab {

constexpr int kMaxDim = 8;

// Dynamic dimension with a fixed capacity, so points never touch the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim + 1, kMaxDim + 1>;

constexpr double kRelTol = 1e-9;

Vec make_vec(std::initializer_list<double> xs);
Vec zeros(int dim);
Vec unit(int dim, int axis);

// k-simplex with k+1 vertices in an ambient space of dimension dim().
struct Simplex {
    std::vector<Vec> v;

    Simplex() = default;
    explicit Simplex(std::vector<Vec> verts) : v(std::move(verts)) {}

    int order() const { return static_cast<int>(v.size()) - 1; }
    int dim() const { return v.empty() ? 0 : static_cast<int>(v[0].size()); }
    Vec centroid() const;
    double longest_edge() const;
    // k-dimensional volume (Gram determinant), valid for any ambient dimension.
    double volume() const;
};

struct Sphere {
    Vec center;
    double radius = 0.0;
};

struct Hyperplane {
    Vec normal;
    double offset = 0.0;

    double signed_distance(const Vec& x) const { return normal.dot(x) - offset; }
};

struct ShellInterval {
    double lo = 0.0, hi = 0.0;
    bool lo_closed = false, hi_closed = true;

    ShellInterval() = default;
    ShellInterval(double a, double b, bool lc = false, bool hc = true);
    double width() const { return hi - lo; }
    bool contains(double t) const;
};

struct SphericalBox {
    Vec cap_center;
    double cap_radius = 0.0;  // chord metric on the unit sphere
    ShellInterval shell;

    bool contains(const Vec& x) const;
};

Sphere circumsphere(const Simplex& s);
Hyperplane supporting_hyperplane(const Simplex& s);
Vec radial_projection(const Vec& x);
Vec drop_last(const Vec& x);
Vec append(const Vec& x, double last);

struct Barycentric {
    bool inside = false;
    std::vector<double> lambda;
};
// Full-dimensional simplex only (d+1 vertices in R^d).
Barycentric point_in_simplex(const Vec& x, const Simplex& s, double tol = 1e-12);

// Exact Euclidean distance from x to a simplex of any order in any ambient dimension.
double point_simplex_distance(const Vec& x, const Simplex& s);
Vec closest_point_on_simplex(const Vec& x, const Simplex& s);

// Smallest distance between the origin and the simplex, convenience for shell checks.
inline double min_norm(const Simplex& s) { return point_simplex_distance(zeros(s.dim()), s); }

// Segment/hyperplane intersection parameter in [0,1]; returns false when parallel or missing.
bool segment_hyperplane(const Vec& a, const Vec& b, const Hyperplane& h, double& t);

// Orthonormal rotation sending unit vector `from` to unit vector `to` (Householder pair).
Mat rotation_between(const Vec& from, const Vec& to);

}  // namespace lab
