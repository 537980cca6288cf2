#include "labyrinth/path.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <queue>
#include <sstream>

#include "labyrinth/rng.hpp"

namespace lab {

namespace {

std::uint64_t cell_hash(const Vec& x, double cell, int* k) {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < x.size(); ++i) {
        int c = static_cast<int>(std::floor(x[i] / cell));
        if (k) k[i] = c;
        h = (h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c) + 0x9e3779b9)) * 1099511628211ull;
    }
    return h;
}

std::uint64_t key_hash(const int* k, int d) {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < d; ++i)
        h = (h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(k[i]) + 0x9e3779b9)) * 1099511628211ull;
    return h;
}

// Calls f(key) for every integer cell in the box [a, b].
template <class F>
void for_cells(const int* a, const int* b, int d, F&& f) {
    int k[kMaxDim];
    std::copy(a, a + d, k);
    while (true) {
        f(k);
        int i = 0;
        while (i < d && ++k[i] > b[i]) {
            k[i] = a[i];
            ++i;
        }
        if (i == d) return;
    }
}

// The box frame: y = R^T x, cap axis e_m.
struct Frame {
    Mat R;
    int m = 0;
    double alpha = 0.0, beta = 0.0, chord = 0.0;

    explicit Frame(const BoxBarrier& b, double dilation)
        : R(b.rotation), m(static_cast<int>(b.rotation.rows())), alpha(b.box.shell.lo), beta(b.box.shell.hi),
          chord(dilation * b.box.cap_radius) {}
    bool in_cone(const Vec& y) const {
        double n = y.norm();
        if (n == 0.0) return false;
        return (y / n - unit(m, m - 1)).norm() <= chord;
    }
};

}  // namespace

double Polyline::length() const {
    double s = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) s += (pts[i] - pts[i - 1]).norm();
    return s;
}

double polyline_length(const Polyline& p) { return p.length(); }

FacetIndex::FacetIndex(std::vector<const BarrierLayer*> layers) : layers_(std::move(layers)) { build(); }

FacetIndex::FacetIndex(const BoxBarrier& b) {
    for (const auto& l : b.layers) layers_.push_back(&l);
    build();
}

void FacetIndex::build() {
    double ext = 0.0;
    for (int li = 0; li < static_cast<int>(layers_.size()); ++li)
        for (int fi = 0; fi < static_cast<int>(layers_[li]->facets.size()); ++fi) {
            const Simplex& s = layers_[li]->facets[fi].facet;
            Ref r{li, fi, s.v[0], s.v[0]};
            for (const auto& v : s.v) {
                r.lo = r.lo.cwiseMin(v);
                r.hi = r.hi.cwiseMax(v);
            }
            ext = std::max(ext, (r.hi - r.lo).maxCoeff());
            refs_.push_back(std::move(r));
        }
    if (refs_.empty()) return;
    cell_ = std::max(ext, 1e-9);
    const int d = static_cast<int>(refs_[0].lo.size());
    int a[kMaxDim], b[kMaxDim];
    for (int i = 0; i < static_cast<int>(refs_.size()); ++i) {
        cell_hash(refs_[i].lo, cell_, a);
        cell_hash(refs_[i].hi, cell_, b);
        for_cells(a, b, d, [&](const int* k) {
            auto& v = bins_[key_hash(k, d)];
            if (v.empty() || v.back() != i) v.push_back(i);
        });
    }
}

bool FacetIndex::segment_hits(const Vec& a, const Vec& b) const {
    if (refs_.empty()) return false;
    const int d = static_cast<int>(a.size());
    Vec lo = a.cwiseMin(b), hi = a.cwiseMax(b);
    int ka[kMaxDim], kb[kMaxDim];
    cell_hash(lo, cell_, ka);
    cell_hash(hi, cell_, kb);
    bool hit = false;
    // segments much longer than a cell fall back to a linear scan
    double cells = 1.0;
    for (int i = 0; i < d; ++i) cells *= kb[i] - ka[i] + 1;
    auto test = [&](int i) {
        const Ref& r = refs_[i];
        for (int c = 0; c < d; ++c)
            if (hi[c] < r.lo[c] - 1e-12 || lo[c] > r.hi[c] + 1e-12) return false;
        const BarrierLayer& L = *layers_[r.layer];
        const BarrierFacet& f = L.facets[r.facet];
        double t;
        if (!segment_hyperplane(a, b, f.plane, t)) return false;
        Vec x = a + t * (b - a);
        // coplanar segments are measure zero and skipped by segment_hyperplane
        return L.in_piece(x, r.facet, 1e-12 * std::max(1.0, x.norm()));
    };
    if (cells > static_cast<double>(bins_.size())) {
        for (int i = 0; i < static_cast<int>(refs_.size()) && !hit; ++i) hit = test(i);
        return hit;
    }
    for_cells(ka, kb, d, [&](const int* k) {
        if (hit) return;
        auto it = bins_.find(key_hash(k, d));
        if (it == bins_.end()) return;
        for (int i : it->second)
            if (test(i)) {
                hit = true;
                return;
            }
    });
    return hit;
}

bool crosses_barrier(const Polyline& p, const FacetIndex& idx) {
    for (std::size_t i = 1; i < p.pts.size(); ++i)
        if (idx.segment_hits(p.pts[i - 1], p.pts[i])) return true;
    return false;
}

bool crosses_barrier(const Polyline& p, const BoxBarrier& b) { return crosses_barrier(p, FacetIndex(b)); }

CrossingResult shortest_crossing(const BoxBarrier& b, double h, const GridOptions& opt) {
    if (!(h > 0.0)) throw Error("path.InvalidGrid", "need h > 0");
    Frame fr(b, opt.dilation);
    const int m = fr.m;
    if (fr.chord >= 2.0) throw Error("path.InvalidGrid", "cone covers the whole sphere");
    FacetIndex idx(b);
    const double theta = 2.0 * std::asin(fr.chord / 2.0);
    const int lat = static_cast<int>(std::ceil(fr.beta * std::sin(std::min(theta, M_PI / 2)) / h)) + 2;
    const int r0 = static_cast<int>(std::floor((fr.alpha * std::cos(std::min(theta, M_PI / 2)) - fr.alpha) / h)) - 2;
    const int r1 = static_cast<int>(std::ceil((fr.beta - fr.alpha) / h)) + 2;
    std::vector<int> lo(m), n(m);
    for (int i = 0; i + 1 < m; ++i) {
        lo[i] = -lat;
        n[i] = 2 * lat + 1;
    }
    lo[m - 1] = r0;
    n[m - 1] = r1 - r0 + 1;
    double total = 1.0;
    for (int i = 0; i < m; ++i) total *= n[i];
    if (total > static_cast<double>(opt.node_budget)) throw Error("path.GridTooLarge", "grid exceeds the node budget");
    const std::size_t N = static_cast<std::size_t>(total);
    std::vector<std::size_t> stride(m);
    stride[0] = 1;
    for (int i = 1; i < m; ++i) stride[i] = stride[i - 1] * n[i - 1];

    auto coords = [&](std::size_t id, int* c) {
        for (int i = 0; i < m; ++i) {
            c[i] = static_cast<int>(id % n[i]);
            id /= n[i];
        }
    };
    auto position = [&](const int* c) {
        Vec y(m);
        for (int i = 0; i + 1 < m; ++i) y[i] = (c[i] + lo[i]) * h;
        y[m - 1] = fr.alpha + (c[m - 1] + lo[m - 1]) * h;
        return y;
    };
    // band of 2h around the shell so every crossing starts and ends on grid nodes
    const double band = 2.0 * h * std::sqrt(static_cast<double>(m));
    auto valid = [&](const Vec& y) {
        double r = y.norm();
        return r >= fr.alpha - band && r <= fr.beta + band && fr.in_cone(y);
    };

    CrossingResult res;
    res.h = h;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(N, inf);
    std::vector<std::int64_t> prev(N, -1);
    std::vector<char> ok(N, 0), done(N, 0);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    int c[kMaxDim];
    for (std::size_t id = 0; id < N; ++id) {
        coords(id, c);
        Vec y = position(c);
        if (!valid(y)) continue;
        ok[id] = 1;
        ++res.nodes;
        double r = y.norm();
        if (r <= fr.alpha) {
            dist[id] = -(fr.alpha - r);
            pq.emplace(dist[id], id);
        }
    }
    // neighbour offsets {-1,0,1}^m minus zero
    std::vector<std::vector<int>> offs;
    {
        std::vector<int> o(m, -1);
        while (true) {
            if (std::any_of(o.begin(), o.end(), [](int v) { return v != 0; })) offs.push_back(o);
            int i = 0;
            while (i < m && ++o[i] > 1) {
                o[i] = -1;
                ++i;
            }
            if (i == m) break;
        }
    }
    double best = inf;
    std::int64_t best_id = -1;
    while (!pq.empty()) {
        auto [dv, u] = pq.top();
        pq.pop();
        if (done[u] || dv > dist[u]) continue;
        if (dv >= best + band) break;  // sink corrections are at most the band
        done[u] = 1;
        ++res.settled;
        coords(u, c);
        Vec yu = position(c);
        double ru = yu.norm();
        if (ru >= fr.beta) {
            double fin = dv - (ru - fr.beta);
            if (fin < best) {
                best = fin;
                best_id = static_cast<std::int64_t>(u);
            }
        }
        Vec xu = fr.R * yu;
        for (const auto& o : offs) {
            int cv[kMaxDim];
            bool inside = true;
            for (int i = 0; i < m && inside; ++i) {
                cv[i] = c[i] + o[i];
                inside = cv[i] >= 0 && cv[i] < n[i];
            }
            if (!inside) continue;
            std::size_t v = 0;
            for (int i = 0; i < m; ++i) v += cv[i] * stride[i];
            if (!ok[v] || done[v]) continue;
            Vec yv = position(cv);
            double nd = dv + (yv - yu).norm();
            if (nd >= dist[v]) continue;
            if (idx.segment_hits(xu, fr.R * yv)) continue;
            dist[v] = nd;
            prev[v] = static_cast<std::int64_t>(u);
            pq.emplace(nd, v);
        }
    }
    if (best_id < 0) return res;
    res.reachable = true;
    res.length = best;
    std::vector<Vec> pts;
    for (std::int64_t id = best_id; id >= 0; id = prev[id]) {
        coords(static_cast<std::size_t>(id), c);
        pts.push_back(fr.R * position(c));
    }
    std::reverse(pts.begin(), pts.end());
    res.witness = Polyline(std::move(pts));
    res.raw_length = res.witness.length();
    return res;
}

double chained_skeleton_bound(const BoxPlan& p) {
    double v = p.ell * (p.tau * p.mu - p.m * p.eta_s);
    double closed = p.ell * p.tau * p.mu - p.m * p.ell * p.eta_s;
    if (std::abs(v - closed) > 1e-12 * std::max(1.0, std::abs(closed)))
        throw Error("path.BoundMismatch", "chained bound disagrees with the closed form");
    return v;
}

LengthCertificate certify_box(const BoxBarrier& b, double h, const GridOptions& opt) {
    LengthCertificate c;
    c.A = b.plan.A;
    c.analytic = chained_skeleton_bound(b.plan) * b.scale;
    c.coarse = shortest_crossing(b, h, opt);
    c.fine = shortest_crossing(b, h / 2.0, opt);
    FacetIndex idx(b);
    c.witness_clear = c.coarse.reachable && c.fine.reachable && !crosses_barrier(c.coarse.witness, idx) &&
                      !crosses_barrier(c.fine.witness, idx);
    return c;
}

std::vector<Polyline> random_crossings(const BoxBarrier& b, int count, std::uint64_t seed, double max_len, int bends) {
    Frame fr(b, 1.0);
    const int m = fr.m;
    Rng rng(seed);
    // lateral offsets u with |u| = sin of the angle to the axis; stay inside the undilated cap
    const double umax = 0.95 * std::sin(2.0 * std::asin(std::min(1.0, fr.chord / 2.0)));
    auto lateral = [&](double rad) {
        Vec u(m - 1);
        while (true) {
            for (int i = 0; i < m - 1; ++i) u[i] = rng.uniform(-rad, rad);
            if (u.norm() <= rad) return u;
        }
    };
    auto point = [&](const Vec& u, double r) {
        Vec y(m);
        for (int i = 0; i + 1 < m; ++i) y[i] = u[i];
        y[m - 1] = std::sqrt(std::max(0.0, 1.0 - u.squaredNorm()));
        return Vec(fr.R * (r * y));
    };
    std::vector<Polyline> out;
    int guard = 0;
    while (static_cast<int>(out.size()) < count && guard++ < 100 * count) {
        Vec u0 = lateral(0.6 * umax), u1 = u0 + lateral(0.2 * umax);
        if (u1.norm() > umax) continue;
        std::vector<Vec> g(bends, zeros(m - 1));
        for (auto& v : g)
            for (int i = 0; i < m - 1; ++i) v[i] = rng.normal();
        double target = rng.uniform(fr.beta - fr.alpha, max_len);
        auto build = [&](double s) {
            std::vector<Vec> pts{point(u0, fr.alpha)};
            for (int k = 1; k <= bends; ++k) {
                double t = double(k) / (bends + 1);
                Vec u = (1 - t) * u0 + t * u1 + s * g[k - 1];
                if (u.norm() > umax) u *= umax / u.norm();
                double r = fr.alpha + t * (fr.beta - fr.alpha);
                pts.push_back(point(u, r));
            }
            pts.push_back(point(u1, fr.beta));
            return Polyline(std::move(pts));
        };
        Polyline straight = build(0.0);
        if (straight.length() > max_len) continue;
        double lo = 0.0, hi = umax;
        for (int it = 0; it < 50; ++it) {
            double mid = 0.5 * (lo + hi);
            (build(mid).length() <= target ? lo : hi) = mid;
        }
        Polyline p = build(lo);
        if (p.length() <= max_len) out.push_back(std::move(p));
    }
    return out;
}

AuditReport random_crossing_audit(const BoxBarrier& b, int count, std::uint64_t seed, double max_len) {
    AuditReport rep;
    rep.paths = random_crossings(b, count, seed, max_len);
    rep.count = static_cast<int>(rep.paths.size());
    FacetIndex idx(b);
    for (int i = 0; i < rep.count; ++i) {
        if (crosses_barrier(rep.paths[i], idx))
            ++rep.hits;
        else
            rep.violations.push_back(i);
    }
    return rep;
}

nlohmann::json to_json(const CrossingResult& r) {
    nlohmann::json j;
    j["h"] = r.h;
    j["reachable"] = r.reachable;
    j["length"] = r.reachable ? nlohmann::json(r.length) : nlohmann::json("inf");
    j["raw_length"] = r.reachable ? nlohmann::json(r.raw_length) : nlohmann::json("inf");
    j["nodes"] = r.nodes;
    j["settled"] = r.settled;
    j["witness_points"] = r.witness.pts.size();
    return j;
}

nlohmann::json to_json(const LengthCertificate& c) {
    nlohmann::json j;
    j["A"] = c.A;
    j["analytic_bound"] = c.analytic;
    j["coarse"] = to_json(c.coarse);
    j["fine"] = to_json(c.fine);
    j["refinement_ratio"] = c.ratio();
    j["witness_clear"] = c.witness_clear;
    j["verdict"] = c.pass() ? "pass" : "fail";
    return j;
}

nlohmann::json to_json(const AuditReport& a) {
    nlohmann::json j;
    j["paths"] = a.count;
    j["hits"] = a.hits;
    j["violations"] = a.violations;
    j["uncontested"] = a.uncontested();
    return j;
}

std::string polyline_csv(const Polyline& p) {
    std::ostringstream os;
    os << std::setprecision(17);
    if (p.pts.empty()) return "";
    const int m = static_cast<int>(p.pts[0].size());
    for (int i = 0; i < m; ++i) os << (i ? "," : "") << "x" << i;
    os << "\n";
    for (const auto& v : p.pts) {
        for (int i = 0; i < m; ++i) os << (i ? "," : "") << v[i];
        os << "\n";
    }
    return os.str();
}

}  // namespace lab
