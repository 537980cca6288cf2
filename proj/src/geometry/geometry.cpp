#include "labyrinth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lab {

Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

Vec zeros(int dim) { return Vec::Zero(dim); }

Vec unit(int dim, int axis) {
    Vec v = Vec::Zero(dim);
    v[axis] = 1.0;
    return v;
}

namespace {

// Columns v_i - v_0.
Mat edge_matrix(const Simplex& s) {
    const int d = s.dim(), k = s.order();
    Mat e(d, k);
    for (int i = 0; i < k; ++i) e.col(i) = s.v[i + 1] - s.v[0];
    return e;
}

bool gram_degenerate(const Mat& e) {
    if (e.cols() == 0) return false;
    Mat g = e.transpose() * e;
    double scale = 1.0;
    for (int i = 0; i < g.rows(); ++i) scale *= std::max(g(i, i), 1e-300);
    double det = g.determinant();
    return !(det > 1e-20 * scale);
}

}  // namespace

Vec Simplex::centroid() const {
    Vec c = Vec::Zero(dim());
    for (const auto& p : v) c += p;
    return c / static_cast<double>(v.size());
}

double Simplex::longest_edge() const {
    double best = 0.0;
    for (size_t i = 0; i < v.size(); ++i)
        for (size_t j = i + 1; j < v.size(); ++j) best = std::max(best, (v[i] - v[j]).norm());
    return best;
}

double Simplex::volume() const {
    const int k = order();
    if (k <= 0) return 0.0;
    Mat e = edge_matrix(*this);
    double g = (e.transpose() * e).determinant();
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return std::sqrt(std::max(g, 0.0)) / fact;
}

ShellInterval::ShellInterval(double a, double b, bool lc, bool hc) : lo(a), hi(b), lo_closed(lc), hi_closed(hc) {
    if (!(a > 0.0) || !(b > a)) throw Error("geometry.InvalidShell", "require 0 < lo < hi");
}

bool ShellInterval::contains(double t) const {
    bool above = lo_closed ? t >= lo : t > lo;
    bool below = hi_closed ? t <= hi : t < hi;
    return above && below;
}

bool SphericalBox::contains(const Vec& x) const {
    double n = x.norm();
    if (!shell.contains(n)) return false;
    return (x / n - cap_center).norm() < cap_radius;
}

Sphere circumsphere(const Simplex& s) {
    if (s.order() < 1) throw Error("geometry.DegenerateSimplex", "circumsphere needs at least two vertices");
    Mat e = edge_matrix(s);
    if (gram_degenerate(e)) throw Error("geometry.DegenerateSimplex", "vertices affinely dependent");
    Mat g = e.transpose() * e;
    Vec b(s.order());
    for (int i = 0; i < s.order(); ++i) b[i] = 0.5 * g(i, i);
    Vec alpha = g.ldlt().solve(b);
    Sphere out;
    out.center = s.v[0] + e * alpha;
    out.radius = (out.center - s.v[0]).norm();
    return out;
}

Hyperplane supporting_hyperplane(const Simplex& s) {
    const int d = s.dim();
    if (s.order() != d - 1) throw Error("geometry.DimensionMismatch", "need a (d-1)-simplex in R^d");
    Mat e = edge_matrix(s);
    if (gram_degenerate(e)) throw Error("geometry.DegenerateSimplex", "facet vertices affinely dependent");
    Eigen::HouseholderQR<Mat> qr(e);
    Mat q = qr.householderQ();
    Hyperplane h;
    h.normal = q.col(d - 1);
    h.normal.normalize();
    h.offset = h.normal.dot(s.centroid());
    double scale = 0.0;
    for (const auto& p : s.v) scale = std::max(scale, p.norm());
    if (std::abs(h.offset) <= kRelTol * std::max(scale, 1.0))
        throw Error("geometry.OrientationUndefined", "affine hull passes through the origin");
    if (h.offset < 0) {
        h.normal = -h.normal;
        h.offset = -h.offset;
    }
    return h;
}

Vec radial_projection(const Vec& x) {
    double n = x.norm();
    if (!(n > 0.0)) throw Error("geometry.ProjectionUndefined", "radial projection of the origin");
    return x / n;
}

Vec drop_last(const Vec& x) {
    if (x.size() < 2) throw Error("geometry.DimensionMismatch", "drop_last needs dimension >= 2");
    return x.head(x.size() - 1);
}

Vec append(const Vec& x, double last) {
    Vec y(x.size() + 1);
    y.head(x.size()) = x;
    y[x.size()] = last;
    return y;
}

Barycentric point_in_simplex(const Vec& x, const Simplex& s, double tol) {
    const int d = s.dim();
    if (s.order() != d || x.size() != d) throw Error("geometry.DimensionMismatch", "point_in_simplex needs a full simplex");
    Mat e = edge_matrix(s);
    if (gram_degenerate(e)) throw Error("geometry.DegenerateSimplex", "degenerate simplex");
    Vec l = e.partialPivLu().solve(x - s.v[0]);
    Barycentric out;
    out.lambda.resize(d + 1);
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
        out.lambda[i + 1] = l[i];
        sum += l[i];
    }
    out.lambda[0] = 1.0 - sum;
    out.inside = std::all_of(out.lambda.begin(), out.lambda.end(), [&](double v) { return v >= -tol; });
    return out;
}

Vec closest_point_on_simplex(const Vec& x, const Simplex& s) {
    const int n = static_cast<int>(s.v.size());
    if (n == 1) return s.v[0];
    if (n == 2) {
        Vec d = s.v[1] - s.v[0];
        double dd = d.squaredNorm();
        double t = dd > 0 ? std::clamp((x - s.v[0]).dot(d) / dd, 0.0, 1.0) : 0.0;
        return s.v[0] + t * d;
    }
    if (n == 3) {
        // Voronoi-region walk for triangles; only dot products, so any ambient dimension works.
        const Vec &a = s.v[0], &b = s.v[1], &c = s.v[2];
        Vec ab = b - a, ac = c - a, ap = x - a;
        double d1 = ab.dot(ap), d2 = ac.dot(ap);
        if (d1 <= 0 && d2 <= 0) return a;
        Vec bp = x - b;
        double d3 = ab.dot(bp), d4 = ac.dot(bp);
        if (d3 >= 0 && d4 <= d3) return b;
        double vc = d1 * d4 - d3 * d2;
        if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
        Vec cp = x - c;
        double d5 = ab.dot(cp), d6 = ac.dot(cp);
        if (d6 >= 0 && d5 <= d6) return c;
        double vb = d5 * d2 - d1 * d6;
        if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
        double va = d3 * d6 - d5 * d4;
        if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
        double den = 1.0 / (va + vb + vc);
        return a + (vb * den) * ab + (vc * den) * ac;
    }
    // The minimizer is the orthogonal projection onto the affine hull of the face
    // containing it in its relative interior; scan all faces.
    double best = std::numeric_limits<double>::infinity();
    Vec best_p = s.v[0];
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        int idx[kMaxDim + 2] = {};
        int c = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) idx[c++] = i;
        Vec p;
        if (c == 1) {
            p = s.v[idx[0]];
        } else {
            Mat e(x.size(), c - 1);
            for (int i = 1; i < c; ++i) e.col(i - 1) = s.v[idx[i]] - s.v[idx[0]];
            Mat g = e.transpose() * e;
            Vec rhs = e.transpose() * (x - s.v[idx[0]]);
            Vec a = g.ldlt().solve(rhs);
            double sum = 0.0;
            bool ok = true;
            for (int i = 0; i < c - 1; ++i) {
                if (!(a[i] >= 0.0)) ok = false;
                sum += a[i];
            }
            if (!ok || sum > 1.0) continue;
            p = s.v[idx[0]] + e * a;
        }
        double dist = (x - p).squaredNorm();
        if (dist < best) {
            best = dist;
            best_p = p;
        }
    }
    return best_p;
}

double point_simplex_distance(const Vec& x, const Simplex& s) { return (x - closest_point_on_simplex(x, s)).norm(); }

bool segment_hyperplane(const Vec& a, const Vec& b, const Hyperplane& h, double& t) {
    double da = h.signed_distance(a), db = h.signed_distance(b);
    if ((da > 0 && db > 0) || (da < 0 && db < 0)) return false;
    double denom = da - db;
    if (denom == 0.0) return false;
    t = da / denom;
    return t >= 0.0 && t <= 1.0;
}

Mat rotation_between(const Vec& from, const Vec& to) {
    const int d = static_cast<int>(from.size());
    Mat id = Mat::Identity(d, d);
    Vec w = from - to;
    if (w.norm() < 1e-15) return id;
    w.normalize();
    Mat h1 = id - 2.0 * w * w.transpose();
    // second reflection fixing `to`, so the product has determinant +1
    int axis = 0;
    for (int i = 1; i < d; ++i)
        if (std::abs(to[i]) < std::abs(to[axis])) axis = i;
    Vec u = unit(d, axis) - to[axis] * to;
    u.normalize();
    Mat h2 = id - 2.0 * u * u.transpose();
    return h2 * h1;
}

}  // namespace lab
