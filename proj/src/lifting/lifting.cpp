#include "labyrinth/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "labyrinth/kernels.hpp"
#include "labyrinth/rng.hpp"

namespace lab {

void DomeChart::validate() const {
    if (!(u > 0.0 && u1 > u && u0 > u1)) throw Error("lifting.InvalidChart", "need u0 > u1 > u > 0");
    if (!(r > 0.5 && r < 1.0)) throw Error("lifting.InvalidChart", "need 1/2 < r < 1");
    if (u0 >= 0.5) throw Error("lifting.ChartTooLarge", "u0 must be below 1/2");
    // r^2 - |x|^2 >= (r/2)^2 on U0
    if (u0 > r * std::sqrt(3.0) / 2.0) throw Error("lifting.ChartTooLarge", "chart leaves the dome");
}

double psi(double r, const Vec& x) {
    double s = r * r - x.squaredNorm();
    if (!(s > 0.0)) throw Error("lifting.ChartDomainExceeded", "|x| >= r");
    return std::sqrt(s);
}

Vec grad_psi(double r, const Vec& x) { return -x / psi(r, x); }

double gradient_bound(const DomeChart& chart) {
    if (chart.u0 >= 0.5) throw Error("lifting.ChartTooLarge", "u0 must be below 1/2");
    return chart.u0 / std::sqrt(0.25 - chart.u0 * chart.u0);
}

double chord_stretch_bound(const DomeChart& chart) {
    double w = gradient_bound(chart);
    return std::sqrt(1.0 + w * w);
}

double shell_constant_bound(const DomeChart& chart, const Tessellation& t) {
    double nu = chord_stretch_bound(chart), d = t.longest_prototype_edge();
    return 2.0 * nu * nu * d * d;
}

LiftedSurface lift_tessellation(const Tessellation& t_in, const DomeChart& chart) {
    chart.validate();
    const int d = t_in.dim();
    Tessellation t = t_in;
    t.materialize(zeros(d), chart.u0);
    LiftedSurface s;
    s.chart = chart;
    s.tau = t.tau;
    s.z = t.z;
    s.m = d + 1;
    s.edge = t.longest_prototype_edge();

    std::map<std::vector<int>, int> ids;
    auto vertex_id = [&](const IVec& n, const Vec& x) {
        std::vector<int> key(n.data(), n.data() + d);
        auto [it, fresh] = ids.emplace(key, static_cast<int>(s.base_vertices.size()));
        if (fresh) {
            s.base_vertices.push_back(x);
            s.vertices.push_back(append(x, psi(chart.r, x)));
        }
        return it->second;
    };
    const double slack = kRelTol * chart.u0;
    for (const auto& [p, w] : t.window) {
        Simplex base = t.cell(p, w);
        double dist = point_simplex_distance(zeros(d), base);
        bool inside = std::all_of(base.v.begin(), base.v.end(), [&](const Vec& v) { return v.norm() <= chart.u0; });
        if (!inside) {
            // tiles cover U1 only if every cell touching U1 stays inside U0
            if (dist <= chart.u1 + slack)
                throw Error("lifting.TauTooLarge", "a cell meeting the covered ball leaves the chart");
            continue;
        }
        LiftedFacet f;
        f.base = base;
        std::vector<Vec> lv;
        for (std::size_t i = 0; i < base.v.size(); ++i) {
            f.vid.push_back(vertex_id(t.prototypes[p].v[i] + w, base.v[i]));
            lv.push_back(s.vertices[f.vid.back()]);
        }
        f.lifted = Simplex(lv);
        f.plane = supporting_hyperplane(f.lifted);
        f.meets_w = dist <= chart.u;
        s.facets.push_back(std::move(f));
    }
    if (s.facets.empty()) throw Error("lifting.TauTooLarge", "no cell fits inside the chart");

    double nu = 1.0;
    for (const auto& f : s.facets)
        for (std::size_t i = 0; i < f.vid.size(); ++i)
            for (std::size_t j = i + 1; j < f.vid.size(); ++j) {
                double b = (s.base_vertices[f.vid[i]] - s.base_vertices[f.vid[j]]).norm();
                double l = (s.vertices[f.vid[i]] - s.vertices[f.vid[j]]).norm();
                nu = std::max(nu, l / b);
            }
    s.nu_c = nu;
    s.omega_sh = 2.0 * nu * nu * s.edge * s.edge;
    const double lo = s.shell_lo();
    for (const auto& f : s.facets) {
        // the closest point of a facet to the origin bounds every point of it
        if (!(min_norm(f.lifted) > lo) || !(f.plane.offset > lo))
            throw Error("lifting.ContainmentViolation", "lifted facet reaches below r - omega tau^2");
    }
    return s;
}

std::string ConvexityCertificate::report() const {
    std::ostringstream os;
    os << "global margin " << global_margin << ", " << violations.size() << " violating (facet, vertex) pairs";
    for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 10); ++i)
        os << (i ? " " : ": ") << "(" << violations[i].first << "," << violations[i].second << ")";
    return os.str();
}

ConvexityCertificate certify_convexity(const LiftedSurface& s) {
    const int m = s.m;
    const std::size_t n = s.vertices.size();
    std::vector<std::vector<double>> coords(m, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < m; ++k) coords[k][i] = s.vertices[i][k];
    std::vector<const double*> soa(m);
    for (int k = 0; k < m; ++k) soa[k] = coords[k].data();
    std::vector<double> penalty(n, 0.0);
    const double inf = std::numeric_limits<double>::infinity();

    ConvexityCertificate c;
    c.global_margin = inf;
    for (std::size_t fi = 0; fi < s.facets.size(); ++fi) {
        const auto& f = s.facets[fi];
        for (int v : f.vid) penalty[v] = inf;
        double margin = kernels::min_margin(soa.data(), m, n, f.plane.normal.data(), f.plane.offset, penalty.data());
        if (!(margin > 0.0)) {
            for (std::size_t v = 0; v < n; ++v)
                if (penalty[v] == 0.0 && f.plane.offset - f.plane.normal.dot(s.vertices[v]) <= 0.0 &&
                    c.violations.size() < 1000)
                    c.violations.emplace_back(static_cast<int>(fi), static_cast<int>(v));
        }
        for (int v : f.vid) penalty[v] = 0.0;
        c.facet_margin.push_back(margin);
        c.global_margin = std::min(c.global_margin, margin);
    }
    return c;
}

ProjectionCheck circumsphere_projection_check(const LiftedSurface& s, double eta_m, int samples_per_facet,
                                              std::uint64_t seed) {
    Rng rng(seed);
    ProjectionCheck out;
    out.tolerance = s.tau * eta_m;
    for (const auto& f : s.facets) {
        Sphere lifted = circumsphere(f.lifted), base = circumsphere(f.base);
        const int k = f.lifted.order();
        // orthonormal directions of the facet's affine hull
        Mat e(s.m, k);
        for (int i = 0; i < k; ++i) e.col(i) = f.lifted.v[i + 1] - f.lifted.v[0];
        Eigen::HouseholderQR<Mat> qr(e);
        Mat q = Mat(qr.householderQ()).leftCols(k);
        for (int i = 0; i < samples_per_facet; ++i) {
            Vec g(k);
            for (int j = 0; j < k; ++j) g[j] = rng.normal();
            if (g.norm() == 0.0) continue;
            Vec p = lifted.center + lifted.radius * (q * (g / g.norm()));
            double excess = std::abs((drop_last(p) - base.center).norm() - base.radius);
            out.worst_excess = std::max(out.worst_excess, excess);
        }
    }
    out.ok = out.worst_excess <= out.tolerance;
    return out;
}

std::string lifted_obj(const LiftedSurface& s) {
    std::ostringstream os;
    os.precision(17);
    os << "# lifted surface r=" << s.chart.r << " tau=" << s.tau << " omega_sh=" << s.omega_sh << "\n";
    for (const auto& v : s.vertices) {
        os << "v";
        if (s.m <= 3) {
            for (int k = 0; k < 3; ++k) os << " " << (k < s.m ? v[k] : 0.0);
        } else {
            for (int k = 0; k < 3; ++k) os << " " << v[k];
            os << " " << v[s.m - 1];
        }
        os << "\n";
    }
    for (const auto& f : s.facets) {
        const auto& id = f.vid;
        if (id.size() == 2) {
            os << "l " << id[0] + 1 << " " << id[1] + 1 << "\n";
        } else {
            // triangles of the facet's boundary (the facet itself when it is a triangle)
            for (std::size_t a = 0; a < id.size(); ++a)
                for (std::size_t b = a + 1; b < id.size(); ++b)
                    for (std::size_t c = b + 1; c < id.size(); ++c)
                        os << "f " << id[a] + 1 << " " << id[b] + 1 << " " << id[c] + 1 << "\n";
        }
    }
    return os.str();
}

}  // namespace lab
