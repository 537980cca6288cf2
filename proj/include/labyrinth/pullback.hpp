#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "labyrinth/geometry.hpp"
#include "labyrinth/path.hpp"

namespace lab {

using cplx = std::complex<double>;

// sum_a c_a z^a in n complex variables
struct PolyTerm {
    std::vector<int> exp;
    cplx coef;
};

struct MultiPoly {
    int nvars = 0;
    std::vector<PolyTerm> terms;

    cplx operator()(const std::vector<cplx>& z) const;
    MultiPoly derivative(int var) const;  // formal, exact
    int degree() const;
};

// F: C^N -> C^K. Users promise properness; nothing here proves it.
struct ProperPolyMap {
    std::vector<MultiPoly> comp;
    std::vector<std::vector<MultiPoly>> jac;  // jac[k][j] = dF_k / dz_j

    ProperPolyMap() = default;
    ProperPolyMap(int nvars, std::vector<MultiPoly> components);

    int n_in() const { return jac.empty() ? 0 : static_cast<int>(jac[0].size()); }
    int n_out() const { return static_cast<int>(comp.size()); }
    std::vector<cplx> operator()(const std::vector<cplx>& z) const;
    Eigen::MatrixXcd jacobian(const std::vector<cplx>& z) const;
    // real coordinates on both sides, z_k = x_2k + i x_2k+1
    Vec apply(const Vec& x) const;
};

ProperPolyMap identity_map(int n, cplx scale = 1.0);
ProperPolyMap quadric_map();  // (z, w) -> (z, w, z^2 + w^2)

std::vector<cplx> complex_coords(const Vec& x);
Vec real_coords(const std::vector<cplx>& z);

// Largest singular value by power iteration on A^H A.
double spectral_norm(const Eigen::MatrixXcd& A, int max_iter = 500, double tol = 1e-14);

// Central differences of F in each real direction, compared against the symbolic Jacobian.
double jacobian_fd_error(const ProperPolyMap& F, const std::vector<cplx>& z, double h = 1e-6);

struct ShellSpec {
    double r = 0.0, R = 0.0;
    double box = 0.0;  // sample |z| <= box; 0 means R, enough whenever |F(z)| >= |z|

    bool contains(double normF) const { return normF >= r && normF <= R; }
};

struct ShellNorm {
    ShellSpec shell;
    double d = 0.0;  // max ||DF|| over the accepted samples; sampled, not certified
    Vec argmax;
    std::size_t tried = 0, accepted = 0;
    std::uint64_t seed = 0;
};

ShellNorm df_norm_max(const ProperPolyMap& F, const ShellSpec& shell, std::size_t samples, std::uint64_t seed,
                      int threads = 1);

struct ScalingPlan {
    std::vector<ShellNorm> shells;
    std::vector<double> A, d, B;
    double safety = 1.5, delta_inc = 1.0;
    bool certified = false;  // d_n are sample maxima

    bool holds() const;  // A_n d_n <= B_n and B strictly increasing, exactly as stored
};

ScalingPlan plan_scaling(const std::vector<double>& A, const std::vector<ShellNorm>& shells, double safety = 1.5,
                         double delta_inc = 1.0);

// f = g o F for any g taking real coordinates of C^K.
template <class G>
struct Pullback {
    G g;
    ProperPolyMap F;

    cplx operator()(const Vec& x) const { return g(F.apply(x)); }
};

Polyline pushforward(const ProperPolyMap& F, const Polyline& p, int refine = 16);

struct LengthAudit {
    double length = 0.0, image_length = 0.0, bound = 0.0;
    bool pass = false;
};
// length(F o p) <= (1 + slack) d length(p); the image is traced with `refine` points per segment
LengthAudit length_audit(const ProperPolyMap& F, const Polyline& p, double d, double slack = 0.02, int refine = 16);

// Random walks kept inside the shell, every segment checked on `checks` interior points.
std::vector<Polyline> random_shell_polylines(const ProperPolyMap& F, const ShellSpec& shell, int count,
                                             std::uint64_t seed, int segments = 8, double step = 0.0,
                                             int checks = 16);

// min |F| on the sphere |z| = rho, sampled; growth with rho is the properness spot check
double min_norm_on_sphere(const ProperPolyMap& F, double rho, int samples, std::uint64_t seed);

nlohmann::json to_json(const MultiPoly& p);
MultiPoly multipoly_from_json(const nlohmann::json& j, int nvars);
nlohmann::json to_json(const ProperPolyMap& F);
ProperPolyMap map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScalingPlan& p);

}  // namespace lab
