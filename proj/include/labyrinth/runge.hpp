#pragma once

#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "labyrinth/error.hpp"

namespace lab {

using cplx = std::complex<double>;

struct UniPoly {
    std::vector<cplx> a;  // a[0] + a[1] z + ..., or sum a_k q_k(z) when H is set
    // Arnoldi basis: q_0 = 1, q_(k+1) = (z q_k - sum_(j<=k) H(j,k) q_j) / H(k+1,k). Fits whose sets span
    // very different radii have monomial coefficients far beyond what double evaluation can resolve.
    Eigen::MatrixXcd H;

    UniPoly() = default;
    explicit UniPoly(std::vector<cplx> c) : a(std::move(c)) {}
    int degree() const { return static_cast<int>(a.size()) - 1; }
    bool arnoldi() const { return H.size() > 0; }
    cplx operator()(cplx z) const;
    // Values with an estimate of their rounding error. Monomial: Horner's bound. Arnoldi: the gap between
    // double and extended-precision runs, which overstates the extended run's error by about 2^11.
    void eval(const std::vector<cplx>& z, std::vector<cplx>& v, std::vector<double>& err) const;
    // plain double values, batched; same numbers as operator() up to summation order
    std::vector<cplx> values(const std::vector<cplx>& z) const;
    UniPoly derivative() const;  // monomial only
};

UniPoly shift_by_constant(const UniPoly& p, cplx C);

// ---- dense LP: min c.x subject to G x <= h, x free (primal-dual interior point, Mehrotra) ----
struct LpOptions {
    int max_iter = 300;
    double tol = 1e-10;       // duality gap, relative to the objective
    double feas_tol = 1e-9;   // primal residual
    double dual_tol = 1e-6;   // dual residual; normal-equation round-off puts a floor under it
};
struct LpResult {
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};
LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                  const LpOptions& opt = {});

// ---- compact sets in the plane, as unions of curves ----
struct Curve {
    enum Kind { Segment, Arc } kind = Segment;
    cplx a, b;                      // segment ends
    cplx c;                         // arc center
    double r = 0.0, t0 = 0.0, t1 = 0.0;  // arc radius and angle range

    static Curve segment(cplx a, cplx b);
    static Curve arc(cplx c, double r, double t0, double t1);
    double length() const;
    cplx at(double s) const;  // s in [0, 1]
    double max_modulus() const;
};

// Filled region for the interior cross-check: disc intersected with {Re <= re_max}.
struct Region {
    cplx center;
    double radius = 0.0;
    double re_max = std::numeric_limits<double>::infinity();
};

struct KSet {
    std::vector<Curve> curves;
    std::vector<Region> interiors;  // boundaries are among the curves (maximum modulus)

    bool empty() const { return curves.empty(); }
    std::vector<cplx> sample(double spacing) const;
    std::vector<cplx> sample_interior(double spacing) const;
    double max_modulus() const;
};

// Norming sets. A polynomial of degree D along a segment, sampled at N Chebyshev nodes, has sup at most
// 1/cos(D pi / 2N) times the sampled max; along a full circle with N equispaced nodes, 1/cos(D pi / N).
bool normable(const Curve& c);
std::vector<cplx> norming_nodes(const Curve& c, int N);
double norming_factor(const Curve& c, int D, int N);
// Nodes per curve: oversample * (D + 1), or more when the spacing asks for it. K3 may range over
// hundreds, and the centred bound loses (factor - 1) * range, so it gets a denser set.
constexpr int kOversample = 16, kOversampleK3 = 64;
int norming_count(const Curve& c, int D, double spacing, int oversample);
// Chebyshev nodes on [0, 1] and the matching factor, for callers with their own parametrisation.
std::vector<double> chebyshev_nodes01(int N);
double chebyshev_factor(int D, int N);

struct SlabSpec {
    double level = 0.0;      // L: certify Re >= L+1 on K1, fit at L+2
    double eps_small = 0.1;  // certify |phi| <= eps on K2, fit aims at eps/2
    double nu = 0.1;         // slab width, sets the default spacing
    double floor3 = std::numeric_limits<double>::infinity();  // Re phi >= -floor3 on K3, fit aims at -floor3/2
    double cap3 = std::numeric_limits<double>::infinity();    // |phi| <= cap3 on K3, fit aims at cap3/2 per part
    double spacing = 0.0;    // 0: nu/50
    enum class Basis { Auto, Monomial, Arnoldi } basis = Basis::Auto;  // Auto: Arnoldi when every curve is normable
    KSet K1, K2, K3;

    // The critical segment {Re = 1} and the far side {Re <= 1 - nu} of the disc of radius 2.
    static SlabSpec reference(double L, double eps_small, double nu);
    double sample_spacing() const { return spacing > 0.0 ? spacing : nu / 50.0; }
    double radius() const;  // smallest origin disc holding every K-set
    bool use_arnoldi() const;
    void validate() const;
};

struct BoundCertificate {
    // lipschitz: samples plus derivative margins (monomial). norming: per-curve norming sets (Arnoldi).
    std::string method = "lipschitz";
    double spacing = 0.0;
    double radius = 0.0;         // disc on which B' is taken
    double derivative_bound = 0.0;  // B' = sum k |a_k| R^(k-1)
    std::size_t samples = 0;
    double k1_sampled = 0.0, k1_certified = 0.0;  // min Re on K1
    double k2_sampled = 0.0, k2_certified = 0.0;  // max |phi| on K2 (boundary)
    double k2_interior = 0.0;                     // max |phi| on an interior mesh of K2, cross-check only
    double k3_sampled = 0.0, k3_certified = 0.0;  // min Re on K3
    double k3_abs_sampled = 0.0, k3_abs_certified = 0.0;
    double max_margin = 0.0;  // largest gap between a certified bound and its sampled value
    double need_k1 = 0.0, need_k2 = 0.0, need_k3 = 0.0, need_k3_abs = 0.0;
    bool K3_empty = true;

    bool k1_ok() const { return k1_certified >= need_k1; }
    bool k2_ok() const { return k2_certified <= need_k2; }
    bool k3_ok() const { return K3_empty || (k3_certified >= need_k3 && k3_abs_certified <= need_k3_abs); }
    bool valid() const { return k1_ok() && k2_ok() && k3_ok(); }
};

// Values at z_i with a rigorous bound on |p(w) - p(z_i)| over |w - z_i| <= s, rounding included.
struct BoundedValues {
    std::vector<double> re, im, margin;
};
BoundedValues bounded_values(const UniPoly& p, const std::vector<cplx>& z, double s,
                             double bprime = std::numeric_limits<double>::infinity());

BoundCertificate certify(const UniPoly& p, const SlabSpec& spec);
BoundCertificate certify(const UniPoly& p, const SlabSpec& spec, double spacing);
// Halves the spacing while only the margins stand between the samples and the thresholds.
BoundCertificate certify_refined(const UniPoly& p, const SlabSpec& spec, int halvings = 8);

struct RungeAttempt {
    int degree = 0;
    double t = 0.0;  // LP optimum: max(|Re|,|Im|) on K2
    bool lp_converged = false;
    bool certified = false;
    int cuts = 0;
    double residual = 0.0;  // worst sample violation left when the cutting loop stopped
};

struct RungeFit {
    UniPoly p;
    BoundCertificate cert;
    std::vector<RungeAttempt> attempts;
};

class DegreeExhausted : public Error {
public:
    DegreeExhausted(double best_t, std::vector<RungeAttempt> at)
        : Error("runge.DegreeExhausted", "no degree in the schedule certified; best t = " + std::to_string(best_t)),
          best_t(best_t), attempts(std::move(at)) {}
    double best_t;
    std::vector<RungeAttempt> attempts;
};

std::vector<int> default_schedule();
// LP fit at one degree, no certification.
UniPoly fit_degree(const SlabSpec& spec, int degree, RungeAttempt* info = nullptr);
RungeFit fit_runge(const SlabSpec& spec, const std::vector<int>& schedule = default_schedule());

nlohmann::json poly_to_json(const UniPoly& p);
UniPoly poly_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoundCertificate& c);

}  // namespace lab
