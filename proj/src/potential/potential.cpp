#include "labyrinth/potential.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "labyrinth/rng.hpp"

namespace lab {

std::vector<cplx> to_complex(const Vec& x) {
    if (x.size() % 2 != 0) throw Error("potential.DimensionMismatch", "real dimension must be even");
    std::vector<cplx> z(x.size() / 2);
    for (Eigen::Index k = 0; k < x.size() / 2; ++k) z[k] = cplx(x[2 * k], x[2 * k + 1]);
    return z;
}

cplx FacetFunctional::operator()(const Vec& x) const {
    cplx v = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) v += c[k] * cplx(x[2 * k], x[2 * k + 1]);
    return v;
}

FacetFunctional facet_functional(const Hyperplane& h) {
    if (h.normal.size() % 2 != 0 || h.normal.size() == 0)
        throw Error("potential.DimensionMismatch", "real dimension must be even");
    const double nn = h.normal.norm();
    if (!(nn > 0.0) || !(h.offset > 0.0))
        throw Error("potential.OrientationUndefined", "the hyperplane must leave the origin strictly inside");
    FacetFunctional f;
    f.normal = h.normal / nn;
    f.offset = h.offset / nn;
    // c_k z_k = (n_2k x_2k + n_2k+1 x_2k+1) / o + i (...)
    for (Eigen::Index k = 0; k < f.normal.size() / 2; ++k)
        f.c.push_back(cplx(f.normal[2 * k], -f.normal[2 * k + 1]) / f.offset);
    f.bound = 1.0 / f.offset;
    return f;
}

namespace {

double face_measure(const Simplex& s) { return s.order() == 0 ? 1.0 : s.volume(); }

}  // namespace

Simplex shrink_facet(const Simplex& f, double eta) {
    const int k = f.order();
    if (k < 1) throw Error("potential.SlabGeometryError", "facet must have at least two vertices");
    std::vector<double> w(k + 1);
    double total = 0.0;
    for (int i = 0; i <= k; ++i) {
        std::vector<Vec> opp;
        for (int j = 0; j <= k; ++j)
            if (j != i) opp.push_back(f.v[j]);
        w[i] = face_measure(Simplex(opp));
        total += w[i];
    }
    Vec inc = zeros(f.dim());
    for (int i = 0; i <= k; ++i) inc += (w[i] / total) * f.v[i];
    const double rin = k * f.volume() / total;
    if (!(eta < rin)) return Simplex();
    const double lam = (rin - eta) / rin;
    std::vector<Vec> v;
    for (const auto& p : f.v) v.push_back(inc + lam * (p - inc));
    return Simplex(v);
}

std::vector<Vec> sample_simplex(const Simplex& s, double spacing) {
    const int k = s.order();
    if (k < 0) return {};
    if (k == 0) return {s.v[0]};
    // rounding barycentric coordinates to multiples of 1/q moves a point by at most k * longest / q
    const int q = std::max(1, static_cast<int>(std::ceil(k * s.longest_edge() / spacing)));
    std::vector<Vec> out;
    std::vector<int> idx(k + 1, 0);
    // enumerate compositions of q into k+1 parts
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == k) {
            idx[k] = left;
            Vec x = zeros(s.dim());
            for (int i = 0; i <= k; ++i) x += (double(idx[i]) / q) * s.v[i];
            out.push_back(x);
            return;
        }
        for (int a = 0; a <= left; ++a) {
            idx[pos] = a;
            rec(pos + 1, left - a);
        }
    };
    rec(0, q);
    return out;
}

// ---- layer polynomials ----

cplx LayerPolynomial::operator()(const Vec& x) const {
    cplx v = 0.0;
    for (const auto& t : terms) v += t.phi(t.ell(x));
    return v;
}

int LayerPolynomial::max_degree() const {
    int d = 0;
    for (const auto& t : terms) d = std::max(d, t.phi.degree());
    return d;
}

namespace {

// Convex hull of the images as closed polygon edges; collinear images give one segment.
std::vector<Curve> image_hull(const FacetFunctional& f, const Simplex& s) {
    std::vector<cplx> p;
    for (const auto& v : s.v) p.push_back(f(v));
    std::sort(p.begin(), p.end(), [](cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
    auto cross = [](cplx o, cplx a, cplx b) { return (a - o).real() * (b - o).imag() - (a - o).imag() * (b - o).real(); };
    std::vector<cplx> h(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    h.resize(k > 1 ? k - 1 : k);
    // near-collinear hulls (the own facet's image lies on Re = 1) collapse to the extreme pair
    double span = 0.0, area = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        span = std::max(span, std::abs(h[i] - h[0]));
        if (i >= 2) area += std::abs(cross(h[0], h[i - 1], h[i]));
    }
    std::vector<Curve> out;
    if (h.size() <= 2 || area <= 1e-12 * span * span) {
        cplx a = p.front(), b = p.front();
        double best = -1.0;
        for (cplx u : p)
            for (cplx w : p)
                if (std::abs(u - w) > best) {
                    best = std::abs(u - w);
                    a = u;
                    b = w;
                }
        out.push_back(Curve::segment(a, b));
        return out;
    }
    for (std::size_t i = 0; i < h.size(); ++i) out.push_back(Curve::segment(h[i], h[(i + 1) % h.size()]));
    return out;
}

struct KeptFacet {
    FacetFunctional ell;
    Simplex piece;
    int index = 0;  // into the layer's facets
};

std::vector<KeptFacet> kept_facets(const BarrierLayer& L) {
    std::vector<KeptFacet> out;
    for (int i = 0; i < static_cast<int>(L.facets.size()); ++i) {
        const auto& bf = L.facets[i];
        KeptFacet k;
        k.ell = facet_functional(bf.plane);
        for (const auto& v : bf.facet.v)
            if (std::abs(k.ell(v).real() - 1.0) > 1e-9)
                throw Error("potential.FunctionalMismatch", "facet vertex off the functional's critical line");
        k.piece = shrink_facet(bf.facet, L.eta_s);
        k.index = i;
        if (k.piece.order() >= 1) out.push_back(std::move(k));
    }
    return out;
}

}  // namespace

double choose_slab_width(const BarrierLayer& L, double inner_radius) {
    if (L.facets.empty()) throw Error("potential.SlabGeometryError", "layer has no facets");
    std::vector<FacetFunctional> ells;
    for (const auto& f : L.facets) ells.push_back(facet_functional(f.plane));
    // convexity margin in functional units: how far below 1 the other vertices sit
    double conv = std::numeric_limits<double>::infinity(), slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ells.size(); ++i) {
        for (std::size_t j = 0; j < L.facets.size(); ++j)
            for (const auto& v : L.facets[j].facet.v) {
                double gap = 1.0 - ells[i](v).real();
                if (gap > 1e-9) conv = std::min(conv, gap);
                else if (gap < -1e-9) throw Error("potential.SlabGeometryError", "layer is not convex");
            }
        slack = std::min(slack, 1.0 - inner_radius * ells[i].bound);
    }
    double nu = 0.5 * std::min(conv, slack);
    if (!std::isfinite(nu)) nu = 0.5 * slack;
    if (!(nu > 0.0)) throw Error("potential.SlabGeometryError", "inner ball reaches a facet hyperplane");
    // the slab {1 - nu < Re l_i < 1} may only meet other facets near the skeleton
    std::vector<std::vector<Vec>> samples;
    for (const auto& f : L.facets) samples.push_back(sample_simplex(f.facet, L.eta_s / 4.0));
    for (int halving = 0; halving < 60; ++halving) {
        bool ok = true;
        for (std::size_t j = 0; j < L.facets.size() && ok; ++j)
            for (const auto& x : samples[j]) {
                bool in_slab = false;
                for (std::size_t i = 0; i < ells.size() && !in_slab; ++i) {
                    if (i == j) continue;
                    double re = ells[i](x).real();
                    in_slab = re > 1.0 - nu && re < 1.0 - 1e-12;
                }
                if (in_slab && L.skeleton.distance_capped(x, L.eta_s) >= L.eta_s) {
                    ok = false;
                    break;
                }
            }
        if (ok) return nu;
        nu *= 0.5;
    }
    throw Error("potential.SlabGeometryError", "no slab width keeps the slabs near the skeleton");
}

LayerPolynomial build_layer_polynomial(const BarrierLayer& L, double level, double eps, double inner_radius,
                                       const LayerOptions& opt) {
    if (!(eps > 0.0)) throw Error("potential.InvalidInput", "need eps > 0");
    if (!(inner_radius >= 0.0)) throw Error("potential.InvalidInput", "need inner radius >= 0");
    LayerPolynomial P;
    P.level = level;
    P.eps = eps;
    P.inner_radius = inner_radius;
    P.nu_slab = choose_slab_width(L, inner_radius);
    auto kept = kept_facets(L);
    if (kept.empty()) throw Error("potential.SlabGeometryError", "every facet lies inside the skeleton holes");
    const double n = static_cast<double>(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& ell = kept[i].ell;
        SlabSpec s;
        s.level = level;
        s.eps_small = eps / n;
        s.nu = P.nu_slab;
        s.K1.curves = image_hull(ell, kept[i].piece);
        // the critical segment sets the scale; certify_refined halves this when margins need it
        s.spacing = opt.spacing > 0.0 ? opt.spacing : s.K1.curves.front().length() / 100.0;
        if (inner_radius > 0.0) {
            double rho = inner_radius * ell.bound;
            s.K2.curves.push_back(Curve::arc(0.0, rho, 0.0, 2.0 * M_PI));
            s.K2.interiors.push_back(Region{0.0, rho});
        }
        for (std::size_t j = 0; j < kept.size(); ++j)
            if (j != i)
                for (auto& c : image_hull(ell, kept[j].piece)) s.K2.curves.push_back(c);
        if (!opt.later.empty()) {
            s.floor3 = opt.floor3;
            s.cap3 = opt.cap3 > 0.0 ? opt.cap3 : opt.cap_factor * (level + 2.0);
            for (const auto& piece : opt.later)
                for (auto& c : image_hull(ell, piece)) s.K3.curves.push_back(c);
        }
        RungeFit fit = fit_runge(s, opt.schedule);
        P.terms.push_back({ell, std::move(fit.p), fit.cert});
        P.pieces.push_back(kept[i].piece);
    }
    double k2sum = 0.0;
    for (const auto& t : P.terms) k2sum += t.cert.k2_certified;
    P.sup_inner = k2sum;
    P.inf_pieces = std::numeric_limits<double>::infinity();
    for (const auto& t : P.terms) P.inf_pieces = std::min(P.inf_pieces, t.cert.k1_certified - (k2sum - t.cert.k2_certified));
    P.inf_later = 0.0;
    if (!opt.later.empty())
        for (const auto& t : P.terms) {
            P.inf_later += t.cert.k3_certified;
            P.sup_later += t.cert.k3_abs_certified;
        }
    return P;
}

// ---- certified extrema of sums ----

namespace {

// Per point: sum over the terms and of their rounding estimates.
void sum_terms(const std::vector<const LayerTerm*>& terms, const std::vector<Vec>& pts, std::vector<cplx>& val,
               std::vector<double>& err) {
    val.assign(pts.size(), 0.0);
    err.assign(pts.size(), 0.0);
    std::vector<cplx> z(pts.size()), v;
    std::vector<double> e;
    for (const LayerTerm* t : terms) {
        for (std::size_t i = 0; i < pts.size(); ++i) z[i] = t->ell(pts[i]);
        t->phi.eval(z, v, e);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            val[i] += v[i];
            err[i] += e[i];
        }
    }
}

}  // namespace

SetBound inf_re(const std::vector<const LayerTerm*>& terms, const std::vector<Simplex>& pieces, int oversample) {
    SetBound r;
    const double inf = std::numeric_limits<double>::infinity();
    r.sampled = r.certified = inf;
    int D = 0;
    for (const LayerTerm* t : terms) D = std::max(D, t->phi.degree());
    std::vector<cplx> val;
    std::vector<double> err;
    for (const auto& s : pieces) {
        const int k = s.order();
        if (k < 0) continue;
        int N = oversample * (D + 1);
        // keep the tensor grid affordable; the factor degrades but stays finite while N > D
        while (k >= 2 && std::pow(double(N), k) > 4e6 && N > 2 * (D + 1)) N = std::max(D + 1 + (D + 1), N / 2);
        const double f = std::pow(chebyshev_factor(D, N), k);
        const auto x01 = chebyshev_nodes01(N);
        std::vector<Vec> pts;
        if (k == 0) {
            pts.push_back(s.v[0]);
        } else {
            std::vector<int> idx(k, 0);
            while (true) {
                // x = v0 + s1 (v1 - v0) + s1 s2 (v2 - v1) + ...
                Vec x = s.v[0];
                double prod = 1.0;
                for (int a = 0; a < k; ++a) {
                    prod *= x01[idx[a]];
                    x += prod * (s.v[a + 1] - s.v[a]);
                }
                pts.push_back(x);
                int a = 0;
                while (a < k && ++idx[a] == N) idx[a++] = 0;
                if (a == k) break;
            }
        }
        sum_terms(terms, pts, val, err);
        double lo = inf, hi = -inf, e = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!std::isfinite(val[i].real()) || !std::isfinite(err[i])) {
                lo = -inf;
                e = inf;
                continue;
            }
            lo = std::min(lo, val[i].real());
            hi = std::max(hi, val[i].real());
            e = std::max(e, err[i]);
        }
        const double cert = k == 0 ? lo - e : 0.5 * (lo + hi) - f * (0.5 * (hi - lo) + e);
        r.sampled = std::min(r.sampled, lo);
        r.certified = std::min(r.certified, std::isnan(cert) ? -inf : cert);
        r.samples += pts.size();
    }
    if (r.samples == 0) r.sampled = r.certified = 0.0;
    return r;
}

SetBound sup_abs(const std::vector<const LayerTerm*>& terms, const std::vector<Vec>& pts) {
    SetBound r;
    r.samples = pts.size();
    std::vector<cplx> val;
    std::vector<double> err;
    sum_terms(terms, pts, val, err);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double a = std::abs(val[i]);
        if (std::isnan(a) || std::isnan(err[i])) a = std::numeric_limits<double>::infinity();
        r.sampled = std::max(r.sampled, a);
        r.certified = std::max(r.certified, a + err[i]);
    }
    return r;
}

// ---- telescoping ----

cplx TelescopeSequence::partial(const Vec& x, int k) const {
    cplx v = 0.0;
    for (int j = 0; j < k && j < static_cast<int>(stages.size()); ++j) v += stages[j].psi(x);
    return v;
}

std::vector<cplx> TelescopeSequence::values(const std::vector<Vec>& xs, int k) const {
    if (k < 0) k = static_cast<int>(stages.size());
    std::vector<cplx> out(xs.size(), 0.0), z(xs.size());
    for (int j = 0; j < k && j < static_cast<int>(stages.size()); ++j)
        for (const auto& t : stages[j].psi.terms) {
            for (std::size_t i = 0; i < xs.size(); ++i) z[i] = t.ell(xs[i]);
            const auto v = t.phi.values(z);
            for (std::size_t i = 0; i < xs.size(); ++i) out[i] += v[i];
        }
    return out;
}

std::vector<StageSpec> shell_stages(const std::vector<ShellBarrier>& shells, const std::vector<double>& levels) {
    if (levels.size() != shells.size()) throw Error("potential.InvalidInput", "one level per shell");
    std::vector<StageSpec> out;
    double prev = 0.0, reach = 0.0;
    for (std::size_t n = 0; n < shells.size(); ++n) {
        const double budget = std::ldexp(1.0, -static_cast<int>(n));
        std::size_t layers = 0;
        for (const auto& b : shells[n].boxes) layers += b.layers.size();
        if (layers == 0) throw Error("potential.InvalidInput", "shell " + std::to_string(n) + " has no layers");
        for (const auto& b : shells[n].boxes)
            for (const auto& L : b.layers) {
                StageSpec s;
                s.layer = L;
                s.group = static_cast<int>(n);
                s.budget = budget / static_cast<double>(layers);
                s.target = levels[n] + 1.0 + budget;
                s.inner_radius = std::max({prev, reach, L.r_lo * b.scale});
                for (const auto& f : L.facets)
                    for (const auto& v : f.facet.v) reach = std::max(reach, v.norm());
                out.push_back(std::move(s));
            }
        prev = shells[n].J.hi;
    }
    return out;
}

double TelescopeSequence::tail_after(int k) const {
    double s = 0.0;
    for (int j = k; j < static_cast<int>(stages.size()); ++j) s += stages[j].spec.budget;
    return s;
}

std::vector<const LayerTerm*> TelescopeSequence::terms(int k) const {
    std::vector<const LayerTerm*> out;
    for (int j = 0; j < k && j < static_cast<int>(stages.size()); ++j)
        for (const auto& t : stages[j].psi.terms) out.push_back(&t);
    return out;
}

namespace {

std::vector<Vec> sphere_points(int m, double radius, int count, std::uint64_t seed) {
    std::vector<Vec> out;
    if (m == 2) {
        for (int i = 0; i < count; ++i) {
            double th = 2.0 * M_PI * i / count;
            out.push_back(make_vec({radius * std::cos(th), radius * std::sin(th)}));
        }
        return out;
    }
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        Vec g(m);
        for (int d = 0; d < m; ++d) g[d] = rng.normal();
        out.push_back(radius * g.normalized());
    }
    return out;
}

std::vector<Simplex> layer_pieces(const BarrierLayer& L) {
    std::vector<Simplex> out;
    for (const auto& f : L.facets) {
        Simplex p = shrink_facet(f.facet, L.eta_s);
        if (p.order() >= 1) out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

TelescopeSequence telescope(const std::vector<StageSpec>& stages, const TelescopeOptions& opt) {
    for (std::size_t j = 0; j < stages.size(); ++j) {
        const auto& s = stages[j];
        if (!(s.budget > 0.0)) throw Error("potential.InvalidInput", "stage budgets must be positive");
        if (j > 0 && s.inner_radius < stages[j - 1].inner_radius)
            throw Error("potential.InvalidInput", "inner radii must not decrease");
        for (const auto& f : s.layer.facets)
            if (min_norm(f.facet) <= s.inner_radius)
                throw Error("potential.InvalidInput", "barrier piece inside its stage ball");
    }
    std::vector<std::vector<Simplex>> pieces;
    for (const auto& s : stages) pieces.push_back(layer_pieces(s.layer));

    TelescopeSequence seq;
    for (std::size_t j = 0; j < stages.size(); ++j) {
        const StageSpec& s = stages[j];
        StageRecord rec;
        rec.spec = s;
        // tighten the norming factor while it costs more than 5% of the value
        auto audit = [&](const std::vector<const LayerTerm*>& terms) {
            SetBound b;
            for (int over = opt.oversample; over <= 8 * opt.oversample; over *= 2) {
                b = inf_re(terms, pieces[j], over);
                if (b.sampled - b.certified <= 0.05 * std::max(1.0, std::abs(b.sampled))) break;
            }
            return b;
        };
        auto prev = seq.terms(static_cast<int>(j));
        rec.before = prev.empty() ? SetBound{} : audit(prev);
        // every earlier term was fitted with the images of these pieces in its K3
        if (opt.later == TelescopeOptions::Later::All) {
            double from_k3 = 0.0;
            for (const auto& st : seq.stages) from_k3 += st.psi.inf_later;
            if (!prev.empty()) rec.before.certified = std::max(rec.before.certified, from_k3);
        }
        rec.C = std::max(0.0, s.target - rec.before.certified);
        LayerOptions lo;
        lo.schedule = opt.schedule;
        lo.spacing = opt.spacing;
        lo.floor3 = opt.floor3;
        lo.cap_factor = opt.cap_factor;
        for (std::size_t k = j + 1; k < stages.size(); ++k) {
            if (opt.later == TelescopeOptions::Later::None) break;
            if (opt.later == TelescopeOptions::Later::SameGroup && stages[k].group != s.group) continue;
            for (const auto& p : pieces[k]) lo.later.push_back(p);
        }
        rec.psi = build_layer_polynomial(s.layer, rec.C, s.budget, s.inner_radius, lo);
        rec.delta_certified = rec.psi.sup_inner;
        const int m = s.layer.facets.empty() ? 2 : s.layer.facets.front().facet.dim();
        std::vector<const LayerTerm*> own;
        for (const auto& t : rec.psi.terms) own.push_back(&t);
        rec.delta_sampled = sup_abs(own, sphere_points(m, s.inner_radius, opt.sphere_samples, 1000 + j)).sampled;
        seq.stages.push_back(std::move(rec));
        auto now = seq.terms(static_cast<int>(j + 1));
        StageRecord& r = seq.stages.back();
        r.after = audit(now);
        if (!(r.delta_certified <= s.budget) || !(r.delta_sampled < s.budget))
            throw Error("potential.TelescopeBudgetError", "stage " + std::to_string(j) + " exceeds its budget");
        const double floor = r.before.certified + r.psi.inf_pieces;
        if (!(std::max(floor, r.after.certified) >= s.target))
            throw Error("potential.TelescopeBudgetError", "stage " + std::to_string(j) + " misses its target");
    }
    return seq;
}

// ---- output ----

std::string profile_csv(const Profile& p) {
    std::ostringstream o;
    o.precision(17);
    o << "t,re,abs\n";
    for (const auto& q : p.pts) o << q.t << ',' << q.re << ',' << q.abs << '\n';
    return o.str();
}

nlohmann::json to_json(const FacetFunctional& f) {
    nlohmann::json c = nlohmann::json::array();
    for (cplx v : f.c) c.push_back({v.real(), v.imag()});
    return {{"c", c}, {"offset", f.offset}, {"bound", f.bound}};
}

nlohmann::json to_json(const LayerPolynomial& L) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : L.terms)
        terms.push_back({{"functional", to_json(t.ell)}, {"phi", poly_to_json(t.phi)}, {"certificate", to_json(t.cert)}});
    return {{"level", L.level},           {"eps", L.eps},
            {"inner_radius", L.inner_radius}, {"nu_slab", L.nu_slab},
            {"sup_inner", L.sup_inner},   {"inf_pieces", L.inf_pieces},
            {"inf_later", L.inf_later},   {"sup_later", L.sup_later},
            {"terms", terms}};
}

nlohmann::json to_json(const TelescopeSequence& s) {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& r : s.stages)
        st.push_back({{"group", r.spec.group},
                      {"inner_radius", r.spec.inner_radius},
                      {"target", r.spec.target},
                      {"budget", r.spec.budget},
                      {"C", r.C},
                      {"inf_before_certified", r.before.certified},
                      {"inf_after_sampled", r.after.sampled},
                      {"inf_after_certified", r.after.certified},
                      {"delta_certified", r.delta_certified},
                      {"delta_sampled", r.delta_sampled},
                      {"layer", to_json(r.psi)}});
    return {{"stages", st}};
}

TelescopeSequence telescope_from_json(const nlohmann::json& j) {
    TelescopeSequence s;
    for (const auto& st : j.at("stages")) {
        StageRecord r;
        r.spec.group = st.at("group");
        r.spec.inner_radius = st.at("inner_radius");
        r.spec.target = st.at("target");
        r.spec.budget = st.at("budget");
        r.C = st.at("C");
        const auto& L = st.at("layer");
        r.psi.level = L.at("level");
        r.psi.eps = L.at("eps");
        r.psi.inner_radius = L.at("inner_radius");
        r.psi.nu_slab = L.at("nu_slab");
        r.psi.sup_inner = L.at("sup_inner");
        r.psi.inf_pieces = L.at("inf_pieces");
        r.psi.inf_later = L.at("inf_later");
        r.psi.sup_later = L.at("sup_later");
        for (const auto& t : L.at("terms")) {
            LayerTerm term;
            for (const auto& c : t.at("functional").at("c")) term.ell.c.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
            term.ell.offset = t.at("functional").at("offset");
            term.ell.bound = t.at("functional").at("bound");
            term.phi = poly_from_json(t.at("phi"));
            r.psi.terms.push_back(std::move(term));
        }
        s.stages.push_back(std::move(r));
    }
    return s;
}

}  // namespace lab
