// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if every line passes.
// The planar (m = 2) barrier, telescope and profile checks share one world built from the CLI defaults.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "config.hpp"
#include "labyrinth/path.hpp"
#include "labyrinth/potential.hpp"
#include "labyrinth/pullback.hpp"
#include "labyrinth/rng.hpp"

using namespace lab;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

template <class... T>
std::string fmt(const char* f, T... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. perturbed lattice in R^3 is generic, the cubic one is rejected
Verdict c1() {
    auto t0 = Clock::now();
    Tessellation t = delaunay_tessellate(perturb_basis(3, 42, 0.05), 0.0);
    const double eta = verify_true_delaunay(t);
    std::string code = "accepted";
    try {
        delaunay_tessellate(perturb_basis(3, 42, 0.0), 0.0);
    } catch (const Error& e) {
        code = e.code();
    }
    const double sec = since(t0);
    return {eta > 0.0 && code == "lattice.GenericityFailure" && sec < 60.0,
            fmt("eta_m %.3g, cubic lattice: %s, %.1f s", eta, code.c_str(), sec)};
}

// 2. convexity of the lifted surface and the shell inclusion of its vertices
Verdict c2() {
    DomeChart chart;  // r 0.75, u0 0.1
    Tessellation t = delaunay_tessellate(perturb_basis(3, 42, 0.05), 0.0).scaled(0.02, zeros(3));
    LiftedSurface s = lift_tessellation(t, chart);
    ConvexityCertificate cc = certify_convexity(s);
    const double lo = chart.r - s.omega_sh * s.tau * s.tau;
    bool inside = true;
    for (const auto& v : s.vertices) inside &= v.norm() > lo && v.norm() <= chart.r * (1 + 1e-12);

    DomeChart big;
    big.u0 = 0.45;
    big.u1 = 0.3;
    big.u = 0.2;
    bool clean = false;
    std::string how;
    try {
        Tessellation tb = delaunay_tessellate(perturb_basis(3, 42, 0.05), 0.0).scaled(0.08, zeros(3));
        ConvexityCertificate bad = certify_convexity(lift_tessellation(tb, big));
        clean = !bad.valid() && !bad.violations.empty() && !bad.report().empty();
        how = fmt("%zu violations reported", bad.violations.size());
    } catch (const std::exception& e) {
        how = std::string("threw: ") + e.what();
    }
    return {cc.valid() && cc.global_margin > 0.0 && inside && clean,
            fmt("margin %.3g over %zu facets, vertices in (%.6f, %.2f]: %s; u0 = 0.45: %s", cc.global_margin,
                s.facets.size(), lo, chart.r, inside ? "yes" : "no", how.c_str())};
}

// 3. separation constant in R^3, its refinement, and the 1-D toy converging to 1/2
Verdict c3() {
    Tessellation t = delaunay_tessellate(perturb_basis(3, 42, 0.05), 0.0);
    ShiftFamily fam = find_shifts(t, 4, 42);
    const double h = fam.mesh;
    const double a = estimate_mu(fam, t, h);
    const double b = estimate_mu_raw(t, fam.q, h / 2).certified;
    const bool refine = b >= a - 2.0 * 3 * h;

    Tessellation t1 = delaunay_tessellate(perturb_basis(1, 42, 0.0), 0.0);
    std::vector<Vec> q{zeros(1), make_vec({0.5})};
    double last = 0.0;
    std::string seq;
    for (double hh : {0.1, 0.05, 0.02, 0.01, 0.005}) {
        last = estimate_mu_raw(t1, q, hh).certified;
        seq += fmt(" %.4f", last);
    }
    const bool toy = std::abs(last - 0.5) <= 0.05 * 0.5;
    return {a > 0.0 && refine && toy,
            fmt("mu(h=%.3g) %.4f, mu(h/2) %.4f (need >= %.4f); toy:%s", h, a, b, a - 6 * h, seq.c_str())};
}

// Planar box of width 0.4 planned for A = 1, the setting the path checks run in.
struct PlanarBox {
    Tessellation t;
    std::vector<Vec> shifts;
    DomeChart chart;
    ShellInterval J{0.55, 0.95};
    BoxPlan plan;
    BoxBarrier b;
    PlanarBox() {
        t = delaunay_tessellate(perturb_basis(1, 42, 0.05), 0.0);
        const double e = t.lat.basis(0, 0);
        shifts = {zeros(1), make_vec({0.5 * e})};
        plan = plan_box(1.0, J, 0.5 * e, shell_constant_bound(chart, t), 2, coverage_tau_bound(chart, t));
        b = assemble_box(plan, unit(2, 1), max_cap_radius(chart, J.hi), chart, t, shifts);
    }
};

// 4. box plan arithmetic for A = 1 on (0.55, 0.95]. With the R^3 separation constant the planner needs millions
// of sub-intervals, so the identities are checked on the planar plan that criterion 5 certifies.
Verdict c4() {
    std::string m4;
    try {
        Tessellation t = delaunay_tessellate(perturb_basis(3, 42, 0.05), 0.0);
        ShiftFamily fam = find_shifts(t, 4, 42);
        DomeChart chart;
        BoxPlan q = plan_box(1.0, ShellInterval(0.55, 0.95), fam.mu, shell_constant_bound(chart, t), 4,
                             coverage_tau_bound(chart, t));
        m4 = fmt("m = 4 plan: ell %ld", q.ell);
    } catch (const Error& e) {
        m4 = std::string("m = 4: ") + e.code();
    }
    PlanarBox B;
    const BoxPlan& p = B.plan;
    const double prod = p.ell * p.tau * p.mu, half = p.m * p.ell * p.eta_s;
    const bool thick = p.tau * p.tau * p.omega < p.width() / (p.m * p.ell);
    const bool ok = std::abs(prod - 2.0) <= 1e-12 && std::abs(half - 0.5) <= 1e-12 && thick &&
                    std::abs(p.analytic_bound() - 1.5) <= 1e-12 && p.analytic_bound() > p.A && p.identities_hold();
    return {ok, fmt("m = 2, ell %ld, tau %.4g, mu %.4f: ell tau mu = %.15g, m ell eta = %.15g, tau^2 omega %.3g < %.3g, "
                    "bound %.15g (%s)",
                    p.ell, p.tau, p.mu, prod, half, p.tau * p.tau * p.omega, p.width() / (p.m * p.ell),
                    p.analytic_bound(), m4.c_str())};
}

// 5. discrete crossing lengths
Verdict c5() {
    auto t0 = Clock::now();
    PlanarBox B;
    BoxBarrier empty = B.b;
    empty.layers.clear();
    CrossingResult ctl = shortest_crossing(empty, B.J.width() / 50);
    const bool a = ctl.reachable && std::abs(ctl.length - B.J.width()) <= 0.02 * B.J.width();
    LengthCertificate lc = certify_box(B.b, 0.5 * B.plan.eta_s);
    const bool b = lc.coarse.reachable && lc.fine.reachable && lc.coarse.length > 1.0 && lc.fine.length > 1.0 &&
                   lc.witness_clear;
    AuditReport au = random_crossing_audit(B.b, 100, 7, B.plan.A);
    const bool c = au.count == 100 && au.uncontested() == 0;
    const double sec = since(t0);
    return {a && b && c && sec < 600.0,
            fmt("(a) empty %.4f vs width %.2f; (b) %zu facets, crossing %.4f then %.4f, witness clear %d; (c) %d/%d hit, "
                "%d uncontested; %.1f s",
                ctl.length, B.J.width(), B.b.facet_count(), lc.coarse.length, lc.fine.length, int(lc.witness_clear),
                au.hits, au.count, au.uncontested(), sec)};
}

// 6. the slab polynomial at L = 1, nu = 0.1, eps = 0.1
Verdict c6() {
    SlabSpec s = SlabSpec::reference(1.0, 0.1, 0.1);
    const std::vector<int> sched = cli::RunConfig{}.schedule;
    try {
        RungeFit f = fit_runge(s, sched);
        double lo = 1e300, hi = 0.0;
        for (cplx z : s.K1.sample(f.cert.spacing / 10)) lo = std::min(lo, f.p(z).real());
        for (cplx z : s.K2.sample(f.cert.spacing / 10)) hi = std::max(hi, std::abs(f.p(z)));
        const bool audit = lo >= f.cert.k1_certified && hi <= f.cert.k2_certified;
        return {f.cert.valid() && f.cert.k1_certified >= 2.0 && f.cert.k2_certified <= 0.1 && audit,
                fmt("degree %d: Re >= %.4f on K1, |phi| <= %.4f on K2; dense audit %.4f / %.4f", f.p.degree(),
                    f.cert.k1_certified, f.cert.k2_certified, lo, hi)};
    } catch (const DegreeExhausted& e) {
        std::string at;
        for (const auto& a : e.attempts) at += fmt(" D%d:t=%.3g", a.degree, a.t);
        return {false, std::string("no degree certified;") + at + " (need t <= 0.1)"};
    }
}

// The planar multi-shell world of the CLI defaults, with its telescope.
struct World {
    cli::RunConfig cfg;
    Tessellation t;
    ShiftFamily fam;
    std::vector<ShellBarrier> shells;
    TelescopeSequence seq;
    std::string error;
    double seconds = 0.0;
    World() {
        auto t0 = Clock::now();
        try {
            t = delaunay_tessellate(perturb_basis(1, cfg.seed, cfg.delta), 0.0);
            fam = find_shifts(t, 2, cfg.seed, cfg.shift_candidates);
            ShellInputs in;
            in.chart = cfg.chart;
            in.t = &t;
            in.shifts = fam.q;
            in.mu = fam.mu;
            in.omega = shell_constant_bound(cfg.chart, t);
            MultiShellSpec spec;
            spec.r = cfg.r;
            spec.R = cfg.R;
            spec.B = cfg.A;
            spec.coarse = cfg.coarse;
            spec.coarse_tau = cfg.coarse_tau;
            spec.coarse_eta = cfg.coarse_eta;
            shells = build_multi_shell(spec, in, SphereCover{});
            TelescopeOptions opt;
            opt.schedule = cfg.potential_schedule;
            opt.oversample = cfg.oversample;
            opt.cap_factor = cfg.cap_factor;
            opt.floor3 = cfg.floor3;
            opt.later = TelescopeOptions::Later::All;
            seq = telescope(shell_stages(shells, cfg.L), opt);
        } catch (const std::exception& e) {
            error = e.what();
        }
        seconds = since(t0);
    }
};

const World& world() {
    static World w;
    return w;
}

// 7. the first layer polynomial: small on its ball, large on its pieces, counting estimate on audit samples
Verdict c7() {
    const World& w = world();
    if (!w.error.empty()) return {false, "telescope failed: " + w.error};
    const LayerPolynomial& P = w.seq.stages.front().psi;
    const double n = static_cast<double>(P.terms.size());
    const double counting = P.level + 1.0 - (n - 1.0) * P.eps / n;
    double lo = 1e300;
    std::size_t count = 0;
    for (const auto& piece : P.pieces)
        for (const auto& x : sample_simplex(piece, 0.01 * w.seq.stages.front().spec.layer.eta_s)) {
            lo = std::min(lo, P(x).real());
            ++count;
        }
    bool certs = true;
    for (const auto& t : P.terms) certs &= t.cert.valid();
    return {certs && P.sup_inner < P.eps && lo > P.level && lo >= counting,
            fmt("%zu terms, |Phi| <= %.3g < eps %.3g on radius %.3f; Re Phi >= %.4f on %zu piece samples (L %.3f, "
                "counting bound %.4f)",
                P.terms.size(), P.sup_inner, P.eps, P.inner_radius, lo, count, P.level, counting)};
}

// 8. three-shell telescope: per-shell deltas on the previous ball, final levels, budgets
Verdict c8() {
    const World& w = world();
    if (!w.error.empty()) return {false, "telescope failed: " + w.error};
    const auto& seq = w.seq;
    const int S = static_cast<int>(seq.stages.size());
    Rng rng(w.cfg.seed + 7);
    bool ok = w.shells.size() == 3;
    std::string d = fmt("%d stages in %.0f s;", S, w.seconds);
    int first = 0;
    for (std::size_t n = 0; n < w.shells.size(); ++n) {
        int last = first;
        while (last < S && seq.stages[last].spec.group == static_cast<int>(n)) ++last;
        const double rad = n == 0 ? seq.stages[first].spec.inner_radius : w.cfg.R[n - 1];
        double sup = 0.0;
        for (int k = 0; k < 4096; ++k) {
            Vec x = make_vec({rng.normal(), rng.normal()});
            x *= rad / x.norm();
            sup = std::max(sup, std::abs(seq.partial(x, last) - seq.partial(x, first)));
        }
        double lo = 1e300;
        for (int j = first; j < last; ++j)
            for (const auto& piece : seq.stages[j].psi.pieces)
                for (const auto& x : sample_simplex(piece, 0.1 * seq.stages[j].spec.layer.eta_s)) lo = std::min(lo, seq(x).real());
        const double budget = std::ldexp(1.0, -static_cast<int>(n));
        ok &= sup < budget && lo >= w.cfg.L[n] && last > first;
        d += fmt(" shell %zu: sup|dPhi| %.3g < %.3g, min Re g %.3f >= %.0f;", n, sup, budget, lo, w.cfg.L[n]);
        first = last;
    }
    double total = 0.0;
    for (const auto& r : seq.stages) {
        total += r.spec.budget;
        ok &= r.delta_certified <= r.spec.budget;
    }
    ok &= total <= 2.0 && seq.tail_after(S) == 0.0;
    d += fmt(" budgets sum to %.4f", total);
    return {ok, d};
}

// 9. short random crossings climb above the shell level
Verdict c9() {
    const World& w = world();
    if (!w.error.empty()) return {false, "telescope failed: " + w.error};
    bool ok = true;
    std::string d;
    for (std::size_t n = 0; n < w.shells.size(); ++n) {
        auto paths = random_crossings(w.shells[n].boxes.front(), 100, w.cfg.seed + 200 + n, w.cfg.A[n]);
        int above = 0;
        double worst = 1e300, longest = 0.0;
        for (const auto& p : paths) {
            Profile pr = profile_along_path(w.seq, p, w.cfg.profile_samples);
            above += pr.max_re > w.cfg.L[n];
            worst = std::min(worst, pr.max_re);
            longest = std::max(longest, p.length());
        }
        ok &= paths.size() == 100 && above == 100 && longest <= w.cfg.A[n];
        d += fmt(" shell %zu: %d/%zu paths (<= %.3f long) exceed L = %.0f, least max Re %.3f;", n, above, paths.size(),
                 w.cfg.A[n], w.cfg.L[n], worst);
    }
    return {ok, d};
}

// 10. the quadric pullback
Verdict c10() {
    ProperPolyMap F = quadric_map();
    Rng rng(10);
    double fd = 0.0;
    for (int i = 0; i < 100; ++i) fd = std::max(fd, jacobian_fd_error(F, {cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal())}));
    const cli::RunConfig cfg;
    std::vector<ShellNorm> norms;
    for (std::size_t n = 0; n < cfg.pb_r.size(); ++n)
        norms.push_back(df_norm_max(F, ShellSpec{cfg.pb_r[n], cfg.pb_R[n]}, cfg.pb_samples, 400 + n, 4));
    ScalingPlan plan = plan_scaling(cfg.pb_A, norms, cfg.safety, cfg.delta_inc);
    // the stored plan, re-read: B_n >= A_n d_n and B increasing
    const nlohmann::json j = nlohmann::json::parse(to_json(plan).dump());
    const auto& sh = j["shells"];
    bool stored = j["holds"].get<bool>();
    for (std::size_t n = 0; n < sh.size(); ++n) {
        stored &= sh[n]["B"].get<double>() >= sh[n]["A"].get<double>() * sh[n]["d"].get<double>();
        if (n > 0) stored &= sh[n]["B"].get<double>() > sh[n - 1]["B"].get<double>();
    }
    int ok = 0, total = 0;
    for (const auto& sn : norms)
        for (const auto& p : random_shell_polylines(F, sn.shell, 100, 500 + static_cast<int>(total))) {
            ok += length_audit(F, p, sn.d).pass;
            ++total;
        }
    return {fd < 1e-6 && stored && plan.holds() && ok == total && total == 100 * static_cast<int>(norms.size()),
            fmt("DF vs differences %.2e; plan B_n >= A_n d_n as stored: %s; pushforward lengths %d/%d", fd,
                stored ? "yes" : "no", ok, total)};
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Verdict()>>> all = {
        {1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5}, {6, c6}, {7, c7}, {8, c8}, {9, c9}, {10, c10}};
    int failed = 0;
    for (const auto& [k, f] : all) {
        Verdict v;
        try {
            v = f();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("criterion %2d: %s  %s\n", k, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
