#include <doctest.h>

#include <cmath>

#include "labyrinth/potential.hpp"
#include "labyrinth/rng.hpp"

using namespace lab;

namespace {

// Planar layer whose facets are the segments of a vertex chain, normals facing away from the origin.
BarrierLayer chain_layer(const std::vector<Vec>& pts, double eta) {
    BarrierLayer L;
    L.eta_s = eta;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        BarrierFacet f;
        f.facet = Simplex({pts[i], pts[i + 1]});
        Vec d = pts[i + 1] - pts[i];
        Vec n = make_vec({d[1], -d[0]}).normalized();
        if (n.dot(pts[i]) < 0) n = -n;
        f.plane.normal = n;
        f.plane.offset = n.dot(pts[i]);
        f.eta_s = eta;
        L.facets.push_back(f);
    }
    for (const auto& p : pts) L.skeleton.faces.push_back(Simplex({p}));
    return L;
}

// Consecutive chords of the circle of radius R through the given angles (degrees).
BarrierLayer arc_layer(double R, std::vector<double> deg, double eta) {
    std::vector<Vec> pts;
    for (double d : deg) pts.push_back(make_vec({R * std::cos(d * M_PI / 180), R * std::sin(d * M_PI / 180)}));
    BarrierLayer L = chain_layer(pts, eta);
    L.r = R;
    return L;
}

double min_dist(const Vec& x, const std::vector<Vec>& pts) {
    double best = 1e300;
    for (const auto& p : pts) best = std::min(best, (x - p).norm());
    return best;
}

Vec random_in_ball(Rng& rng, double r) {
    while (true) {
        Vec x = make_vec({rng.uniform(-r, r), rng.uniform(-r, r)});
        if (x.norm() <= r) return x;
    }
}

// One term in long double, straight from its coefficients, at the same (double) point l(x).
std::complex<long double> eval_ld(const LayerTerm& t, const Vec& x) {
    const std::complex<long double> z(t.ell(x));
    std::complex<long double> v = 0.0L;
    if (!t.phi.arnoldi()) {
        for (std::size_t k = t.phi.a.size(); k-- > 0;) v = v * z + std::complex<long double>(t.phi.a[k]);
        return v;
    }
    const int D = t.phi.degree();
    std::vector<std::complex<long double>> q(D + 1);
    q[0] = 1.0L;
    v = std::complex<long double>(t.phi.a[0]);
    for (int k = 0; k < D; ++k) {
        std::complex<long double> w = z * q[k];
        for (int j = 0; j <= k; ++j) w -= std::complex<long double>(t.phi.H(j, k)) * q[j];
        q[k + 1] = w / std::complex<long double>(t.phi.H(k + 1, k));
        v += std::complex<long double>(t.phi.a[k + 1]) * q[k + 1];
    }
    return v;
}

std::vector<StageSpec> two_stages() {
    StageSpec a, b;
    a.layer = arc_layer(1.0, {-20, 20}, 0.05);
    a.inner_radius = 0.4;
    a.target = 2.5;
    a.budget = 0.25;
    b.layer = arc_layer(1.6, {-20, 20}, 0.05);
    b.inner_radius = 1.0;
    b.target = 3.5;
    b.budget = 0.125;
    return {a, b};
}

const TelescopeSequence& shared_telescope() {
    static TelescopeSequence seq = telescope(two_stages());
    return seq;
}

}  // namespace

TEST_CASE("facet functionals") {
    Hyperplane h{make_vec({1.0, 0.0}), 1.0};
    FacetFunctional f = facet_functional(h);
    REQUIRE(f.c.size() == 1);
    CHECK(f.c[0] == cplx(1.0, 0.0));  // {x1 = 1} gives z1
    CHECK(f.bound == doctest::Approx(1.0));

    Rng rng(3);
    Vec n = make_vec({0.3, -1.2, 0.7, 0.4});
    FacetFunctional g = facet_functional(Hyperplane{n, 2.5});
    for (int i = 0; i < 50; ++i) {
        Vec x = make_vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
        CHECK(g(x).real() == doctest::Approx(n.dot(x) / 2.5).epsilon(1e-12));
        CHECK(std::abs(g(x)) <= g.bound * x.norm() * (1 + 1e-12));
    }
    // the bound is attained at the unit normal
    CHECK(std::abs(g(g.normal)) == doctest::Approx(g.bound).epsilon(1e-12));

    BarrierLayer L = arc_layer(1.3, {-30, 0, 25}, 0.05);
    for (const auto& bf : L.facets) {
        FacetFunctional e = facet_functional(bf.plane);
        for (const auto& v : bf.facet.v) CHECK(std::abs(e(v).real() - 1.0) <= 1e-9);
    }
    CHECK_THROWS_WITH_AS(facet_functional(Hyperplane{make_vec({1.0, 0.0}), 0.0}), doctest::Contains("Orientation"),
                         Error);
    CHECK_THROWS_WITH_AS(facet_functional(Hyperplane{make_vec({1.0, 0.0}), -1.0}), doctest::Contains("Orientation"),
                         Error);
    CHECK_THROWS_AS(facet_functional(Hyperplane{make_vec({1.0, 0.0, 0.0}), 1.0}), Error);
    CHECK_THROWS_AS(to_complex(make_vec({1.0, 2.0, 3.0})), Error);
}

TEST_CASE("shrunk facets and simplex samples") {
    Simplex seg({make_vec({0.0, 0.0}), make_vec({1.0, 0.0})});
    Simplex s = shrink_facet(seg, 0.1);
    REQUIRE(s.order() == 1);
    CHECK(s.v[0][0] == doctest::Approx(0.1));
    CHECK(s.v[1][0] == doctest::Approx(0.9));
    CHECK(shrink_facet(seg, 0.5).v.empty());

    // triangle in R^4: the shrunk copy keeps distance eta from every edge line
    Simplex tri({make_vec({0, 0, 0, 0}), make_vec({2, 0, 0, 0}), make_vec({0, 1.5, 1, 0})});
    const double eta = 0.12;
    Simplex t = shrink_facet(tri, eta);
    REQUIRE(t.order() == 2);
    auto line_dist = [](const Vec& x, const Vec& a, const Vec& b) {
        Vec d = (b - a).normalized();
        Vec w = x - a;
        return (w - w.dot(d) * d).norm();
    };
    for (const auto& v : t.v)
        for (int i = 0; i < 3; ++i)
            CHECK(line_dist(v, tri.v[i], tri.v[(i + 1) % 3]) >= eta - 1e-12);

    Rng rng(5);
    for (double sp : {0.2, 0.05}) {
        auto pts = sample_simplex(tri, sp);
        for (int i = 0; i < 300; ++i) {
            double a = rng.uniform(), b = rng.uniform();
            if (a + b > 1) {
                a = 1 - a;
                b = 1 - b;
            }
            Vec x = (1 - a - b) * tri.v[0] + a * tri.v[1] + b * tri.v[2];
            CHECK(min_dist(x, pts) <= sp);
        }
    }
}

TEST_CASE("slab width") {
    // a lone facet: only the inner ball limits the slab
    BarrierLayer one = arc_layer(1.0, {-20, 20}, 0.05);
    double slack = 1.0 - 0.5 / std::cos(20 * M_PI / 180);
    CHECK(choose_slab_width(one, 0.5) == doctest::Approx(slack / 2));

    BarrierLayer two = arc_layer(1.0, {-40, 0, 40}, 0.05);
    double nu = choose_slab_width(two, 0.3);
    CHECK(nu > 0.0);
    // the slab of one functional meets the other facet only near the shared vertex
    for (int j = 0; j < 2; ++j) {
        FacetFunctional other = facet_functional(two.facets[1 - j].plane);
        for (const auto& x : sample_simplex(two.facets[j].facet, 1e-3)) {
            double re = other(x).real();
            if (re > 1.0 - nu && re < 1.0 - 1e-12) CHECK(two.skeleton.distance(x) < two.eta_s);
        }
    }
    // a narrower slab meets the facets in less
    auto hits = [&](double w) {
        int c = 0;
        for (int j = 0; j < 2; ++j) {
            FacetFunctional other = facet_functional(two.facets[1 - j].plane);
            for (const auto& x : sample_simplex(two.facets[j].facet, 1e-3)) {
                double re = other(x).real();
                c += re > 1.0 - w && re < 1.0 - 1e-12;
            }
        }
        return c;
    };
    CHECK(hits(nu / 2) <= hits(nu));
    CHECK(hits(nu) < hits(4 * nu));
    // a reflex corner is rejected
    BarrierLayer bad = chain_layer({make_vec({1.0, -0.6}), make_vec({0.8, 0.0}), make_vec({1.0, 0.6})}, 0.05);
    CHECK_THROWS_AS(choose_slab_width(bad, 0.3), Error);
    CHECK_THROWS_AS(choose_slab_width(one, 0.95), Error);
}

TEST_CASE("single-facet layer polynomial") {
    BarrierLayer L = arc_layer(1.0, {-20, 20}, 0.05);
    const double level = 2.0, eps = 0.1, inner = 0.5;
    LayerPolynomial P = build_layer_polynomial(L, level, eps, inner);
    REQUIRE(P.terms.size() == 1);
    CHECK(P.terms[0].cert.valid());
    CHECK(P.inf_pieces >= level + 1.0 - eps);
    CHECK(P.sup_inner <= eps);
    // 10x denser audit never beats the certified bounds
    double sp = P.terms[0].cert.spacing / 10;
    double lo = 1e300, hi = 0.0;
    for (const auto& x : sample_simplex(P.pieces[0], sp)) lo = std::min(lo, P(x).real());
    for (int k = 0; k < 4000; ++k) {
        double a = 2 * M_PI * k / 4000;
        hi = std::max(hi, std::abs(P(make_vec({inner * std::cos(a), inner * std::sin(a)}))));
    }
    CHECK(lo >= P.inf_pieces);
    CHECK(hi <= P.sup_inner);
    // maximum modulus: the interior sits below the circle
    Rng rng(8);
    for (int i = 0; i < 200; ++i) CHECK(std::abs(P(random_in_ball(rng, inner))) <= P.sup_inner);

    // counting estimate on the facet samples
    std::vector<const LayerTerm*> terms{&P.terms[0]};
    SetBound b = inf_re(terms, {P.pieces[0]});
    CHECK(b.samples == static_cast<std::size_t>(32 * (P.max_degree() + 1)));
    CHECK(b.certified <= b.sampled);
    CHECK(b.certified <= lo);
    CHECK(b.sampled >= level + 1.0 - eps);
}

TEST_CASE("per-term smallness splits with the facet count") {
    LayerPolynomial one = build_layer_polynomial(arc_layer(1.0, {-20, 20}, 0.05), 1.0, 0.2, 0.4);
    LayerPolynomial two = build_layer_polynomial(arc_layer(1.0, {-20, 5, 30}, 0.05), 1.0, 0.2, 0.4);
    REQUIRE(two.terms.size() == 2);
    CHECK(one.terms[0].cert.need_k2 == doctest::Approx(0.2));
    for (const auto& t : two.terms) CHECK(t.cert.need_k2 == doctest::Approx(0.1));
    // unit-ball bound of the functionals: 1 / offset, at most 2 once the offset is 1/2
    for (const auto& t : two.terms) {
        CHECK(t.ell.bound == doctest::Approx(1.0 / t.ell.offset));
        if (t.ell.offset >= 0.5) CHECK(t.ell.bound <= 2.0);
    }
    // the counting estimate, pointwise on the pieces
    const double n = 2.0, eps = 0.2;
    for (std::size_t i = 0; i < 2; ++i)
        for (const auto& x : sample_simplex(two.pieces[i], 1e-3)) CHECK(two(x).real() >= 2.0 - (n - 1) * eps / n);
}

TEST_CASE("two-facet layer and the decomposition identity") {
    BarrierLayer L = arc_layer(1.0, {-35, 0, 35}, 0.1);
    LayerPolynomial P = build_layer_polynomial(L, 1.0, 0.2, 0.3);
    REQUIRE(P.terms.size() == 2);
    for (const auto& t : P.terms) CHECK(t.cert.valid());
    CHECK(P.inf_pieces >= 2.0 - 0.2);
    CHECK(P.sup_inner <= 0.2);
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        Vec x = random_in_ball(rng, 1.2);
        cplx sum = 0.0;
        for (const auto& t : P.terms) sum += t.phi(t.ell(x));
        CHECK(std::abs(P(x) - sum) <= 1e-12 * (1.0 + std::abs(sum)));
        // extended precision agrees up to the rounding estimate the certificates carry
        std::complex<long double> ref = 0.0L;
        for (const auto& t : P.terms) {
            auto r = eval_ld(t, x);
            ref += r;
            std::vector<cplx> v;
            std::vector<double> e;
            t.phi.eval({t.ell(x)}, v, e);
            CHECK(static_cast<double>(std::abs(std::complex<long double>(v[0]) - r)) <= e[0]);
        }
        CHECK(static_cast<double>(std::abs(std::complex<long double>(P(x)) - ref)) <= 1e-10 * (1.0 + static_cast<double>(std::abs(ref))));
    }
    for (std::size_t i = 0; i < 2; ++i)
        for (const auto& x : sample_simplex(P.pieces[i], 1e-3)) CHECK(P(x).real() >= P.inf_pieces);
}

TEST_CASE("profiles") {
    Polyline path;
    path.pts = {make_vec({0.0, 0.0}), make_vec({1.0, 0.0}), make_vec({1.0, 2.0})};
    auto flat = profile_along_path([](const Vec&) { return cplx(2.0, 1.0); }, path, 50);
    CHECK(flat.pts.size() == 50);
    for (const auto& p : flat.pts) {
        CHECK(p.re == 2.0);
        CHECK(p.abs == doctest::Approx(std::sqrt(5.0)));
    }
    auto g = [](const Vec& x) { return cplx(std::sin(3 * x[0]) + x[1] * x[1], x[0]); };
    Polyline rev;
    rev.pts.assign(path.pts.rbegin(), path.pts.rend());
    auto a = profile_along_path(g, path, 101), b = profile_along_path(g, rev, 101);
    for (int k = 0; k <= 100; ++k) {
        CHECK(a.pts[k].re == doctest::Approx(b.pts[100 - k].re).epsilon(1e-12));
        CHECK(a.pts[k].t == doctest::Approx(1.0 - b.pts[100 - k].t));
    }
    CHECK(a.max_re == doctest::Approx(b.max_re));
    // a radial path through a facet piece climbs above the layer's level
    BarrierLayer L = arc_layer(1.0, {-20, 20}, 0.05);
    LayerPolynomial P = build_layer_polynomial(L, 2.0, 0.1, 0.5);
    Polyline radial({make_vec({0.0, 0.0}), make_vec({1.5, 0.0})});
    auto pr = profile_along_path(P, radial, 3001);
    CHECK(pr.max_re > 2.0);
    CHECK(pr.pts.front().abs <= P.sup_inner);
    CHECK(a.max_re == doctest::Approx(4.0 + std::sin(3.0)));
    std::string csv = profile_csv(a);
    CHECK(csv.rfind("t,re,abs\n", 0) == 0);
    Polyline empty;
    CHECK(profile_along_path(g, empty, 10).pts.empty());
}

TEST_CASE("two-stage telescope") {
    const auto specs = two_stages();
    const TelescopeSequence& seq = shared_telescope();
    REQUIRE(seq.stages.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto& r = seq.stages[j];
        CHECK(r.delta_certified <= r.spec.budget);
        CHECK(r.delta_sampled < r.spec.budget);
        CHECK(std::max(r.before.certified + r.psi.inf_pieces, r.after.certified) >= r.spec.target);
        for (const auto& x : sample_simplex(r.psi.pieces.front(), 1e-3))
            CHECK(seq.partial(x, static_cast<int>(j) + 1).real() >= r.spec.target);
    }
    CHECK(seq.stages[0].C == doctest::Approx(specs[0].target));
    CHECK(seq.tail_after(1) == doctest::Approx(specs[1].budget));
    CHECK(seq.tail_after(2) == 0.0);
    // stage increments: Phi_k = Phi_(k-1) + Psi_k, and the later stage barely moves the inner ball
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
        Vec x = random_in_ball(rng, 1.0);
        cplx d = seq.partial(x, 2) - seq.partial(x, 1);
        CHECK(std::abs(d - seq.stages[1].psi(x)) <= 1e-9 * (1 + std::abs(d)));
        CHECK(std::abs(d) <= seq.stages[1].delta_certified);
        CHECK(std::abs(seq.partial(x, 1) - seq.stages[0].psi(x)) <= 1e-12 * (1 + std::abs(seq.partial(x, 1))));
    }
    // batched evaluation matches partial sums
    std::vector<Vec> xs;
    for (int i = 0; i < 40; ++i) xs.push_back(random_in_ball(rng, 1.5));
    for (int k : {0, 1, 2}) {
        const auto v = seq.values(xs, k);
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(std::abs(v[i] - seq.partial(xs[i], k)) <= 1e-10 * (1 + std::abs(v[i])));
    }
    CHECK(seq.values(xs).back() == seq.values(xs, 2).back());
    // the first stage was fitted knowing the second stage's pieces
    CHECK(seq.stages[0].psi.inf_later <= seq.stages[1].before.sampled);
    CHECK(seq.stages[1].before.certified <= seq.stages[1].before.sampled);
    for (const auto& x : sample_simplex(seq.stages[1].psi.pieces.front(), 1e-3))
        CHECK(seq.partial(x, 1).real() >= seq.stages[0].psi.inf_later);
}

TEST_CASE("telescope input validation") {
    auto specs = two_stages();
    specs[1].budget = 0.0;
    CHECK_THROWS_AS(telescope(specs), Error);
    specs = two_stages();
    specs[1].inner_radius = 0.2;
    CHECK_THROWS_AS(telescope(specs), Error);
    specs = two_stages();
    specs[0].inner_radius = 0.99;  // the ball swallows the stage's own facet
    CHECK_THROWS_AS(telescope({specs[0]}), Error);
}

TEST_CASE("telescope json round trip") {
    const TelescopeSequence& seq = shared_telescope();
    TelescopeSequence back = telescope_from_json(nlohmann::json::parse(to_json(seq).dump()));
    REQUIRE(back.stages.size() == seq.stages.size());
    Rng rng(14);
    for (int i = 0; i < 50; ++i) {
        Vec x = random_in_ball(rng, 2.0);
        CHECK(back(x) == seq(x));
    }
    CHECK(back.stages[1].C == seq.stages[1].C);
    CHECK(back.stages[0].psi.nu_slab == seq.stages[0].psi.nu_slab);
    CHECK(back.tail_after(0) == seq.tail_after(0));
}
