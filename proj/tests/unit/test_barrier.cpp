#include <doctest.h>

#include <chrono>
#include <cmath>

#include "labyrinth/barrier.hpp"
#include "labyrinth/rng.hpp"
#include "fixtures.hpp"

using namespace lab;

using test::Planar;

TEST_CASE("sphere cover") {
    SUBCASE("quarter arcs on the circle") {
        SphereCover c = build_cover(2, std::sqrt(2.0) / 2.0, 1);
        CHECK(c.size() == 4);
        CHECK(cover_gap(c, 10000, 3) < c.radius());
    }
    SUBCASE("four dimensions") {
        SphereCover c = build_cover(4, 0.25, 7);
        CHECK(c.size() > 10);
        CHECK(cover_gap(c, 50000, 11) < c.radius());
        CHECK(caps_in_enlarged(c, 5000, 13));
    }
    CHECK_THROWS_AS(build_cover(3, 0.0, 1), Error);
}

TEST_CASE("plan arithmetic") {
    SUBCASE("identities") {
        BoxPlan p = plan_box(1.0, ShellInterval(0.55, 0.95), 0.3, 2.0, 4);
        CHECK(p.ell * p.tau * p.mu == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(p.m * p.ell * p.eta_s == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(p.tau * p.tau * p.omega < p.width() / (p.m * p.ell));
        CHECK(p.analytic_bound() == doctest::Approx(1.5));
        CHECK(p.identities_hold());
        // smallest: one fewer sub-interval breaks the thickness condition
        double tau = 2.0 / ((p.ell - 1) * 0.3);
        CHECK_FALSE(tau * tau * 2.0 < p.width() / (4.0 * (p.ell - 1)));
    }
    SUBCASE("per-sub-interval thickness with r0 = 0.6, rM = 0.9, m = 4") {
        BoxPlan p = plan_box(1.0, ShellInterval(0.6, 0.9), 0.3, 2.0, 4);
        CHECK(p.tau * p.tau * p.omega < (p.radius(0, 4) - p.radius(0, 0)) / 4.0 * 4.0);
        CHECK((0.9 - 0.6) / 4 == doctest::Approx(0.075));
    }
    SUBCASE("tau pinned by coverage: doubling A roughly doubles ell") {
        ShellInterval J(0.55, 0.95);
        BoxPlan a = plan_box(10.0, J, 0.3, 1e-6, 4, 0.01), b = plan_box(20.0, J, 0.3, 1e-6, 4, 0.01);
        double ratio = double(b.ell) / a.ell;
        CHECK(ratio > 1.8);
        CHECK(ratio < 2.0);
    }
    SUBCASE("infeasible and invalid plans") {
        CHECK_THROWS_AS(plan_box(1.0, ShellInterval(0.55, 0.95), 1e-4, 6.0, 4), Error);
        CHECK_THROWS_AS(plan_box(0.0, ShellInterval(0.55, 0.95), 0.3, 2.0, 4), Error);
        CHECK_THROWS_AS(plan_box(1.0, ShellInterval(0.55, 0.95), 0.0, 2.0, 4), Error);
        try {
            plan_box(1.0, ShellInterval(0.55, 0.95), 1e-4, 6.0, 4);
        } catch (const Error& e) {
            CHECK(e.code() == "barrier.PlanInfeasible");
        }
    }
    SUBCASE("json round trip is exact") {
        BoxPlan p = plan_box(1.0, ShellInterval(0.55, 0.95), 0.0213, 6.19, 4);
        BoxPlan q = plan_from_json(nlohmann::json::parse(plan_to_json(p).dump()));
        CHECK(q.tau == p.tau);
        CHECK(q.eta_s == p.eta_s);
        CHECK(q.ell == p.ell);
        CHECK(q.mu == p.mu);
    }
}

TEST_CASE("planar layer") {
    Planar P;
    BoxPlan plan = plan_box(1.0, ShellInterval(0.55, 0.95), P.mu, P.omega, 2, coverage_tau_bound(P.chart, P.t));
    Mat id = Mat::Identity(2, 2);
    BarrierLayer L = build_layer(3, 2, plan, P.chart, P.t, P.shifts[1], id);
    CHECK(L.r == doctest::Approx(plan.radius(3, 2)));
    CHECK(L.shell_lo > L.r_lo);
    REQUIRE(!L.facets.empty());
    CHECK(L.skeleton.faces.size() == L.facets.size() + 1);  // a chain of segments
    Rng rng(4);
    int inside = 0;
    for (std::size_t i = 0; i < L.facets.size(); ++i) {
        const auto& f = L.facets[i];
        // base segment meets the inner tube
        double lo = std::min(f.facet.v[0][0], f.facet.v[1][0]), hi = std::max(f.facet.v[0][0], f.facet.v[1][0]);
        CHECK(lo <= P.chart.u);
        CHECK(hi >= -P.chart.u);
        for (const auto& v : f.facet.v) {
            CHECK(v.norm() == doctest::Approx(L.r).epsilon(1e-12));
            CHECK(v.norm() > L.r_lo);
        }
        for (int s = 0; s < 200; ++s) {
            double a = rng.uniform();
            Vec x = (1 - a) * f.facet.v[0] + a * f.facet.v[1];
            if (L.in_piece(x, static_cast<int>(i))) {
                ++inside;
                CHECK(L.skeleton.distance(x) >= L.eta_s);
                CHECK(x.norm() > L.r_lo);
            }
        }
    }
    CHECK(inside > 0);
}

TEST_CASE("planar box barrier") {
    Planar P;
    ShellInterval J(0.55, 0.95);
    BoxPlan plan = plan_box(1.0, J, P.mu, P.omega, 2, coverage_tau_bound(P.chart, P.t));
    Vec cap = radial_projection(make_vec({0.6, 0.8}));
    double rho = max_cap_radius(P.chart, J.hi);
    BoxBarrier b = assemble_box(plan, cap, rho, P.chart, P.t, P.shifts);
    CHECK(b.layers.size() == static_cast<std::size_t>(plan.ell * 2));
    std::size_t total = 0;
    for (const auto& l : b.layers) total += l.facets.size();
    CHECK(total == b.facet_count());
    // rotation is orthogonal and sends the chart pole to the cap center
    CHECK((b.rotation * b.rotation.transpose() - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK((b.rotation * unit(2, 1) - cap).norm() < 1e-12);
    CHECK((b.rotation.transpose() * cap - unit(2, 1)).norm() < 1e-12);
    // facets inside the shell interval and inside a cone around the cap
    double hull = 0.0;
    for (const auto& l : b.layers)
        for (const auto& f : l.facets)
            for (const auto& v : f.facet.v) {
                CHECK(J.contains(v.norm()));
                hull = std::max(hull, (radial_projection(v) - cap).norm());
            }
    double bound = (P.chart.u + plan.tau * P.t.longest_prototype_edge() * chord_stretch_bound(P.chart)) / J.lo;
    CHECK(hull <= bound);
    CHECK_THROWS_AS(assemble_box(plan, cap, 2 * rho, P.chart, P.t, P.shifts), Error);
    auto man = box_manifest(b);
    CHECK(man["layers"].size() == b.layers.size());
    CHECK(barrier_obj({&b}).find("\nl ") != std::string::npos);
}

TEST_CASE("shell layout and assembly") {
    Planar P;
    SphereCover cover = build_cover(2, 0.1, 1);
    ShellLayout L = layout_shell(ShellInterval(0.55, 0.95), 1.0, cover);
    CHECK(L.ell_outer == 11);
    CHECK(L.boxes.size() == static_cast<std::size_t>(11 * cover.size()));
    CHECK(L.boxes.front().J.lo == 0.55);
    CHECK(L.boxes.back().J.hi == 0.95);
    for (std::size_t i = 1; i < L.boxes.size(); ++i) {
        CHECK(L.boxes[i].J.lo == doctest::Approx(L.boxes[i - 1].J.hi));
        CHECK(L.boxes[i].J.width() == doctest::Approx(0.4 / (11 * cover.size())));
    }
    ShellInputs in;
    in.chart = P.chart;
    in.t = &P.t;
    in.shifts = P.shifts;
    in.mu = P.mu;
    in.omega = P.omega;
    // the full shell is far beyond desk scale
    CHECK_THROWS_AS(assemble_shell(ShellInterval(0.55, 0.95), 1.0, cover, in), Error);
    // one cap: boxes stack radially, each cap one of the cover caps
    SphereCover one;
    one.m = 2;
    one.eta_c = max_cap_radius(P.chart, 0.95) / 4.0;
    one.centers = {unit(2, 1)};
    ShellBarrier sb = assemble_shell(ShellInterval(0.55, 0.95), 0.005, one, in);
    CHECK(sb.boxes.size() == static_cast<std::size_t>(sb.layout.ell_outer));
    for (const auto& b : sb.boxes) {
        CHECK((b.box.cap_center - one.centers[0]).norm() < 1e-15);
        CHECK(b.plan.identities_hold());
    }
}

TEST_CASE("multi-shell barrier") {
    Planar P;
    ShellInputs in;
    in.chart = P.chart;
    in.t = &P.t;
    in.shifts = P.shifts;
    in.mu = P.mu;
    in.omega = P.omega;
    MultiShellSpec spec;
    spec.r = {0.55, 1.0};
    spec.R = {0.95, 1.7};
    spec.B = {0.1, 0.2};
    SphereCover none;
    auto shells = build_multi_shell(spec, in, none);
    REQUIRE(shells.size() == 2);
    double max1 = 0.0, min2 = 1e300;
    for (const auto& l : shells[0].boxes[0].layers)
        for (const auto& f : l.facets)
            for (const auto& v : f.facet.v) max1 = std::max(max1, v.norm());
    for (const auto& l : shells[1].boxes[0].layers)
        for (const auto& f : l.facets)
            for (const auto& v : f.facet.v) min2 = std::min(min2, v.norm());
    CHECK(max1 < min2);
    CHECK(shells[0].boxes[0].plan.A * shells[0].scale == doctest::Approx(0.1));
    CHECK(shells[1].boxes[0].plan.A * shells[1].scale == doctest::Approx(0.2));
    spec.r.clear();
    spec.R.clear();
    spec.B.clear();
    CHECK(build_multi_shell(spec, in, none).empty());
    spec.r = {0.55, 0.9};
    spec.R = {0.95, 1.7};
    spec.B = {0.1, 0.2};
    CHECK_THROWS_AS(build_multi_shell(spec, in, none), Error);
}
