#include "labyrinth/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "labyrinth/rng.hpp"

namespace lab {

namespace {

std::vector<Vec> sphere_mesh(int m, int n, std::uint64_t seed, bool offset) {
    std::vector<Vec> pts;
    pts.reserve(n);
    if (m == 2) {
        // uniform angles, so symmetric configurations are represented exactly
        for (int i = 0; i < n; ++i) {
            double th = 2.0 * M_PI * (i + (offset ? 0.5 : 0.0)) / n;
            pts.push_back(make_vec({std::cos(th), std::sin(th)}));
        }
        return pts;
    }
    Rng rng(seed);
    while (static_cast<int>(pts.size()) < n) {
        Vec g(m);
        for (int k = 0; k < m; ++k) g[k] = rng.normal();
        double nn = g.norm();
        if (nn > 1e-12) pts.push_back(g / nn);
    }
    return pts;
}

int default_mesh(int m, double eta_c) {
    double n = 20.0 * std::pow(2.0 / eta_c, m - 1);
    return static_cast<int>(std::clamp(n, 2048.0, 400000.0)) / 8 * 8;
}

}  // namespace

SphereCover build_cover(int m, double eta_c, std::uint64_t seed, int mesh_points) {
    if (m < 2) throw Error("barrier.InvalidCover", "need m >= 2");
    if (!(eta_c > 0.0) || eta_c > 1.0) throw Error("barrier.InvalidCover", "need 0 < eta_c <= 1");
    SphereCover c;
    c.m = m;
    c.eta_c = eta_c;
    c.mesh_points = mesh_points > 0 ? mesh_points : default_mesh(m, eta_c);
    const double rad = c.radius() * (1.0 - 1e-12);
    auto mesh = sphere_mesh(m, c.mesh_points, seed, false);
    std::vector<double> gap(mesh.size(), std::numeric_limits<double>::infinity());
    auto add = [&](const Vec& w) {
        c.centers.push_back(w);
        for (std::size_t i = 0; i < mesh.size(); ++i) gap[i] = std::min(gap[i], (mesh[i] - w).norm());
    };
    add(mesh[0]);
    while (true) {
        std::size_t far = std::max_element(gap.begin(), gap.end()) - gap.begin();
        // stop short of the full radius: the mesh misses points between its nodes
        if (gap[far] < 0.9 * rad) break;
        add(mesh[far]);
    }
    // independent verification mesh; anything it finds uncovered becomes a center
    auto check = sphere_mesh(m, c.mesh_points, seed ^ 0x5bd1e995u, true);
    for (int round = 0; round < 8; ++round) {
        bool clean = true;
        for (const auto& w : check) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& x : c.centers) best = std::min(best, (w - x).norm());
            if (best >= rad) {
                c.centers.push_back(w);
                clean = false;
            }
        }
        if (clean) return c;
    }
    throw Error("barrier.InvalidCover", "cover verification did not converge");
}

double cover_gap(const SphereCover& c, int mesh_points, std::uint64_t seed) {
    double worst = 0.0;
    for (const auto& w : sphere_mesh(c.m, mesh_points, seed, true)) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& x : c.centers) best = std::min(best, (w - x).norm());
        worst = std::max(worst, best);
    }
    return worst;
}

bool caps_in_enlarged(const SphereCover& c, int samples, std::uint64_t seed) {
    for (const auto& w : sphere_mesh(c.m, samples, seed, false)) {
        // |w - w_j| < 2 eta and |x - w| < 2 eta give |x - w_j| < 4 eta
        bool inside = std::any_of(c.centers.begin(), c.centers.end(),
                                  [&](const Vec& x) { return (w - x).norm() < c.radius(); });
        if (!inside) return false;
    }
    return true;
}

bool BoxPlan::identities_hold() const {
    if (coarse) return tau * tau * omega < width() / (m * static_cast<double>(ell));
    bool length = std::abs(ell * tau * mu - (A + 1.0)) <= 1e-12 * (A + 1.0);
    bool clearance = std::abs(m * ell * eta_s - 0.5) <= 1e-14;
    bool thickness = tau * tau * omega < width() / (m * static_cast<double>(ell));
    return length && clearance && thickness;
}

BoxPlan plan_box(double A, const ShellInterval& J, double mu, double omega, int m, double tau0, long ell0,
                 long budget) {
    if (!(A > 0.0)) throw Error("barrier.InvalidPlan", "need A > 0");
    if (!(mu > 0.0)) throw Error("barrier.InvalidPlan", "need mu > 0");
    if (!(omega > 0.0) || m < 2) throw Error("barrier.InvalidPlan", "need omega > 0 and m >= 2");
    if (!(J.width() > 0.0)) throw Error("barrier.InvalidPlan", "zero-width interval");
    BoxPlan p;
    p.A = A;
    p.alpha = J.lo;
    p.beta = J.hi;
    p.mu = mu;
    p.omega = omega;
    p.m = m;
    const double w = J.width();
    // tau = (A+1)/(ell mu) turns tau^2 omega < w/(m ell) into ell > m (A+1)^2 omega / (w mu^2)
    double need = m * (A + 1.0) * (A + 1.0) * omega / (w * mu * mu);
    double need_tau = (A + 1.0) / (mu * tau0);
    double start = std::max({static_cast<double>(ell0), std::floor(need) + 1.0, std::ceil(need_tau)});
    if (!(start <= static_cast<double>(budget)))
        throw Error("barrier.PlanInfeasible", "no feasible ell below the budget (need ell > " + std::to_string(need) + ")");
    for (long ell = static_cast<long>(start); ell <= budget; ++ell) {
        double tau = (A + 1.0) / (ell * mu);
        if (tau <= tau0 && tau * tau * omega < w / (m * static_cast<double>(ell))) {
            p.ell = ell;
            p.tau = tau;
            p.eta_s = 1.0 / (2.0 * m * static_cast<double>(ell));
            return p;
        }
    }
    throw Error("barrier.PlanInfeasible", "no feasible ell below the budget");
}

BoxPlan coarse_plan(const ShellInterval& J, double tau, double eta_s, double mu, double omega, int m) {
    BoxPlan p;
    p.alpha = J.lo;
    p.beta = J.hi;
    p.mu = mu;
    p.omega = omega;
    p.m = m;
    p.ell = 1;
    p.tau = tau;
    p.eta_s = eta_s;
    p.coarse = true;
    p.A = p.analytic_bound();
    if (!(tau * tau * omega < J.width() / m)) throw Error("barrier.PlanInfeasible", "layer shells would overlap");
    return p;
}

double coverage_tau_bound(const DomeChart& chart, const Tessellation& t) {
    return (chart.u0 - chart.u1) / t.longest_prototype_edge();
}

bool BarrierLayer::in_piece(const Vec& x, int facet, double tol) const {
    const auto& f = facets[facet];
    if (point_simplex_distance(x, f.facet) > tol) return false;
    return skeleton.distance_capped(x, eta_s) >= eta_s;
}

BarrierLayer build_layer(long sub, int j, const BoxPlan& plan, const DomeChart& chart, const Tessellation& t,
                         const Vec& q, const Mat& rotation, double scale) {
    BarrierLayer L;
    L.sub = sub;
    L.j = j;
    L.r = plan.radius(sub, j);
    L.r_lo = plan.radius(sub, j - 1);
    L.q = q;
    L.eta_s = scale * plan.eta_s;
    DomeChart c = chart;
    c.r = L.r;
    LiftedSurface surf = lift_tessellation(t.scaled(plan.tau, q), c);
    ConvexityCertificate cert = certify_convexity(surf);
    if (!cert.valid()) throw Error("lifting.ConvexityFailure", cert.report());
    L.convexity_margin = cert.global_margin;
    L.shell_lo = surf.shell_lo();
    if (!(surf.shell_lo() > L.r_lo)) throw Error("barrier.PlanInfeasible", "layer leaves its sub-shell");

    auto world = [&](const Vec& x) -> Vec { return scale * (rotation * x); };
    std::map<std::vector<int>, bool> seen;
    for (const auto& f : surf.facets) {
        if (!f.meets_w) continue;
        BarrierFacet bf;
        for (const auto& v : f.lifted.v) bf.facet.v.push_back(world(v));
        bf.plane.normal = rotation * f.plane.normal;
        bf.plane.offset = scale * f.plane.offset;
        bf.eta_s = L.eta_s;
        L.facets.push_back(std::move(bf));
        const int n = static_cast<int>(f.vid.size());
        for (int drop = 0; drop < n; ++drop) {
            std::vector<int> key;
            for (int i = 0; i < n; ++i)
                if (i != drop) key.push_back(f.vid[i]);
            std::sort(key.begin(), key.end());
            if (!seen.emplace(key, true).second) continue;
            Simplex face;
            for (int id : key) face.v.push_back(world(surf.vertices[id]));
            L.skeleton.faces.push_back(std::move(face));
        }
    }
    L.skeleton.build_index();
    return L;
}

std::size_t BoxBarrier::facet_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.facets.size();
    return n;
}

double max_cap_radius(const DomeChart& chart, double beta) { return chart.u / (1.25 * beta); }

BoxBarrier assemble_box(const BoxPlan& plan, const Vec& cap_center, double cap_radius, const DomeChart& chart,
                        const Tessellation& t, const std::vector<Vec>& shifts, double scale) {
    const int m = plan.m;
    if (t.dim() != m - 1) throw Error("barrier.DimensionMismatch", "tessellation must live in R^(m-1)");
    if (static_cast<int>(shifts.size()) < m) throw Error("barrier.InvalidShifts", "need m shifts");
    if (cap_radius > max_cap_radius(chart, plan.beta) * (1.0 + 1e-12))
        throw Error("barrier.CapTooLarge", "cap cone leaves the chart tube");
    BoxBarrier b;
    b.plan = plan;
    b.chart = chart;
    b.scale = scale;
    b.rotation = rotation_between(unit(m, m - 1), radial_projection(cap_center));
    b.box.cap_center = radial_projection(cap_center);
    b.box.cap_radius = cap_radius;
    b.box.shell = ShellInterval(scale * plan.alpha, scale * plan.beta);
    for (long k = 0; k < plan.ell; ++k)
        for (int j = 1; j <= m; ++j) b.layers.push_back(build_layer(k, j, plan, chart, t, shifts[j - 1], b.rotation, scale));
    for (std::size_t i = 0; i < b.layers.size(); ++i)
        for (auto& f : b.layers[i].facets) f.layer = static_cast<int>(i);
    return b;
}

ShellLayout layout_shell(const ShellInterval& J, double A, const SphereCover& cover) {
    if (!(A > 0.0)) throw Error("barrier.InvalidPlan", "need A > 0");
    ShellLayout L;
    L.r = J.lo;
    L.R = J.hi;
    L.A = A;
    // strict (3.2): ell * eta > A
    L.ell_outer = static_cast<long>(std::ceil(A / cover.eta_c)) + 1;
    const long mc = cover.size();
    const double w = J.width() / (L.ell_outer * mc);
    for (long k = 0; k < L.ell_outer; ++k)
        for (int s = 0; s < mc; ++s) {
            long idx = k * mc + s;
            double lo = J.lo + idx * w, hi = (idx + 1 == L.ell_outer * mc) ? J.hi : J.lo + (idx + 1) * w;
            L.boxes.push_back({k, s, ShellInterval(lo, hi)});
        }
    return L;
}

ShellBarrier assemble_shell(const ShellInterval& J, double A, const SphereCover& cover, const ShellInputs& in) {
    if (in.t == nullptr) throw Error("barrier.InvalidPlan", "no tessellation");
    ShellBarrier sb;
    sb.J = J;
    sb.cover = cover;
    sb.layout = layout_shell(J, A, cover);
    const double tau0 = coverage_tau_bound(in.chart, *in.t);
    std::vector<BoxPlan> plans;
    double estimate = 0.0;
    for (const auto& bx : sb.layout.boxes) {
        plans.push_back(plan_box(A, bx.J, in.mu, in.omega, cover.m, tau0));
        // facets meeting the tube scale like (u / tau)^(m-1)
        estimate += plans.back().ell * cover.m * std::pow(2.0 * in.chart.u / plans.back().tau + 2.0, cover.m - 1);
    }
    if (estimate > static_cast<double>(in.facet_budget))
        throw Error("barrier.BudgetExceeded", "shell would need about " + std::to_string(estimate) + " facets");
    for (std::size_t i = 0; i < plans.size(); ++i)
        sb.boxes.push_back(assemble_box(plans[i], cover.centers[sb.layout.boxes[i].s], cover.enlarged(), in.chart,
                                        *in.t, in.shifts));
    return sb;
}

std::vector<ShellBarrier> build_multi_shell(const MultiShellSpec& spec, const ShellInputs& in, const SphereCover& cover) {
    const std::size_t n = spec.r.size();
    if (spec.R.size() != n || spec.B.size() != n) throw Error("barrier.InvalidShells", "radii and lengths differ in count");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(spec.r[i] > 0.0 && spec.R[i] > spec.r[i])) throw Error("barrier.InvalidShells", "need r_n < R_n");
        if (i > 0 && !(spec.r[i] > spec.R[i - 1])) throw Error("barrier.InvalidShells", "shells must interleave");
        if (i > 0 && !(spec.B[i] > spec.B[i - 1])) throw Error("barrier.InvalidShells", "lengths must increase");
    }
    if (in.t == nullptr) throw Error("barrier.InvalidShells", "no tessellation");
    std::vector<ShellBarrier> out;
    const int m = in.t->dim() + 1;
    for (std::size_t i = 0; i < n; ++i) {
        double s = spec.R[i] / spec.top;
        ShellInterval Jn(spec.r[i] / s, spec.top);
        if (spec.single_cap) {
            ShellBarrier sb;
            sb.J = ShellInterval(spec.r[i], spec.R[i]);
            sb.scale = s;
            sb.cover.m = m;
            sb.cover.eta_c = max_cap_radius(in.chart, spec.top) / 4.0;
            sb.cover.centers = {unit(m, m - 1)};
            sb.layout.r = spec.r[i];
            sb.layout.R = spec.R[i];
            sb.layout.A = spec.B[i];
            sb.layout.ell_outer = 1;
            sb.layout.boxes.push_back({0, 0, sb.J});
            // lengths scale with the frame, so the normalized target is B / s
            BoxPlan plan = spec.coarse ? coarse_plan(Jn, spec.coarse_tau, spec.coarse_eta, in.mu, in.omega, m)
                                       : plan_box(spec.B[i] / s, Jn, in.mu, in.omega, m,
                                                  coverage_tau_bound(in.chart, *in.t));
            sb.boxes.push_back(assemble_box(plan, unit(m, m - 1), max_cap_radius(in.chart, spec.top), in.chart, *in.t,
                                            in.shifts, s));
            out.push_back(std::move(sb));
        } else {
            ShellBarrier sb = assemble_shell(Jn, spec.B[i] / s, cover, in);
            sb.J = ShellInterval(spec.r[i], spec.R[i]);
            sb.scale = s;
            out.push_back(std::move(sb));
        }
    }
    return out;
}

nlohmann::json plan_to_json(const BoxPlan& p) {
    return {{"A", p.A},   {"alpha", p.alpha}, {"beta", p.beta}, {"mu", p.mu},         {"omega", p.omega},
            {"m", p.m},   {"ell", p.ell},     {"tau", p.tau},   {"eta_s", p.eta_s},   {"coarse", p.coarse},
            {"analytic_bound", p.analytic_bound()}};
}

BoxPlan plan_from_json(const nlohmann::json& j) {
    BoxPlan p;
    p.A = j.at("A");
    p.alpha = j.at("alpha");
    p.beta = j.at("beta");
    p.mu = j.at("mu");
    p.omega = j.at("omega");
    p.m = j.at("m");
    p.ell = j.at("ell");
    p.tau = j.at("tau");
    p.eta_s = j.at("eta_s");
    p.coarse = j.value("coarse", false);
    return p;
}

nlohmann::json box_manifest(const BoxBarrier& b) {
    nlohmann::json rot = nlohmann::json::array();
    for (int i = 0; i < b.rotation.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < b.rotation.cols(); ++k) row.push_back(b.rotation(i, k));
        rot.push_back(row);
    }
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : b.layers) {
        nlohmann::json q = nlohmann::json::array();
        for (int i = 0; i < l.q.size(); ++i) q.push_back(l.q[i]);
        layers.push_back({{"sub", l.sub}, {"j", l.j}, {"r", l.r}, {"r_lo", l.r_lo}, {"shift", q},
                          {"facets", l.facets.size()}, {"convexity_margin", l.convexity_margin},
                          {"shell_lo", l.shell_lo}});
    }
    nlohmann::json cap = nlohmann::json::array();
    for (int i = 0; i < b.box.cap_center.size(); ++i) cap.push_back(b.box.cap_center[i]);
    return {{"plan", plan_to_json(b.plan)}, {"rotation", rot},        {"scale", b.scale},
            {"cap_center", cap},            {"cap_radius", b.box.cap_radius},
            {"interval", {b.box.shell.lo, b.box.shell.hi}}, {"layers", layers}};
}

std::string barrier_obj(const std::vector<const BoxBarrier*>& boxes) {
    std::ostringstream os;
    os.precision(17);
    os << "# barrier facets (full facets; skeleton holes are not cut out)\n";
    int base = 1;
    for (const auto* b : boxes)
        for (const auto& l : b->layers) {
            os << "g layer_" << l.sub << "_" << l.j << "\n";
            for (const auto& f : l.facets) {
                const int m = static_cast<int>(f.facet.v[0].size());
                for (const auto& v : f.facet.v) {
                    os << "v";
                    for (int k = 0; k < 3; ++k) os << " " << (k < m ? v[k] : 0.0);
                    if (m >= 4) os << " " << v[m - 1];
                    os << "\n";
                }
                const int n = static_cast<int>(f.facet.v.size());
                if (n == 2) {
                    os << "l " << base << " " << base + 1 << "\n";
                } else {
                    for (int a = 0; a < n; ++a)
                        for (int c = a + 1; c < n; ++c)
                            for (int e = c + 1; e < n; ++e) os << "f " << base + a << " " << base + c << " " << base + e << "\n";
                }
                base += n;
            }
        }
    return os.str();
}

}  // namespace lab
