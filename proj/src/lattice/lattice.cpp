#include "labyrinth/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "labyrinth/rng.hpp"

namespace lab {

Vec Lattice::point(const IVec& n) const { return basis * n.cast<double>(); }

Vec Lattice::coords(const Vec& x) const { return basis.partialPivLu().solve(x); }

std::vector<IVec> Lattice::points_near(const Vec& center, double radius) const {
    const int d = dim();
    Mat inv = basis.inverse();
    Vec c = inv * center;
    IVec lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        double span = inv.row(i).norm() * radius;
        lo[i] = static_cast<int>(std::floor(c[i] - span));
        hi[i] = static_cast<int>(std::ceil(c[i] + span));
    }
    std::vector<IVec> out;
    IVec n = lo;
    const double r2 = radius * radius;
    while (true) {
        if ((point(n) - center).squaredNorm() <= r2) out.push_back(n);
        int k = 0;
        while (k < d && ++n[k] > hi[k]) {
            n[k] = lo[k];
            ++k;
        }
        if (k == d) break;
    }
    return out;
}

Lattice lattice_from_basis(const Mat& basis) {
    Lattice l;
    l.basis = basis;
    return l;
}

Lattice perturb_basis(int dim, std::uint64_t seed, double delta) {
    if (dim < 1 || dim > 4) throw Error("lattice.InvalidDimension", "base dimension must be 1..4");
    if (delta < 0.0 || delta > 0.1) throw Error("lattice.InvalidPerturbation", "require 0 <= delta <= 0.1");
    for (int attempt = 0; attempt < 100; ++attempt) {
        Rng rng(seed + attempt);
        Lattice l;
        l.basis = Mat::Identity(dim, dim);
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < dim; ++i) l.basis(i, j) += delta * (2.0 * rng.uniform() - 1.0);
        l.seed = seed + attempt;
        l.delta = delta;
        l.seeds_tried = attempt + 1;
        if (std::abs(l.det()) >= 0.5) return l;
    }
    throw Error("lattice.GenericityFailure", "no seed with determinant >= 0.5 within 100 attempts");
}

// ---------------------------------------------------------------------------
// Bowyer-Watson in general dimension.

namespace {

struct BwCell {
    std::array<int, kMaxDim + 1> v{};
    Vec c;
    double r2 = 0.0;
    bool alive = true;
};

using FacetKey = std::array<int, kMaxDim>;

struct FacetHash {
    std::size_t operator()(const FacetKey& k) const {
        std::size_t h = 1469598103934665603ull;
        for (int x : k) h = (h ^ static_cast<std::size_t>(x + 0x9e37)) * 1099511628211ull;
        return h;
    }
};

std::vector<std::array<int, kMaxDim + 1>> bowyer_watson(const std::vector<Vec>& pts, int d) {
    double rmax = 1.0;
    for (const auto& p : pts) rmax = std::max(rmax, p.norm());
    // far enough that no prototype circumball reaches a super vertex, close enough to keep circumcentres accurate
    const double big = 4.0 * rmax;
    std::vector<Vec> all;
    all.reserve(pts.size() + d + 1);
    all.push_back(Vec::Constant(d, -big));
    for (int i = 0; i < d; ++i) all.push_back(unit(d, i) * big * d);
    for (const auto& p : pts) all.push_back(p);

    auto make_cell = [&](const std::array<int, kMaxDim + 1>& v) {
        BwCell c;
        c.v = v;
        Simplex s;
        for (int i = 0; i <= d; ++i) s.v.push_back(all[v[i]]);
        Sphere sp = circumsphere(s);
        c.c = sp.center;
        c.r2 = sp.radius * sp.radius;
        return c;
    };

    std::vector<BwCell> cells;
    std::array<int, kMaxDim + 1> first{};
    for (int i = 0; i <= d; ++i) first[i] = i;
    cells.push_back(make_cell(first));

    std::vector<int> bad;
    std::size_t dead = 0;
    for (int pi = d + 1; pi < static_cast<int>(all.size()); ++pi) {
        const Vec& p = all[pi];
        bad.clear();
        for (int ci = 0; ci < static_cast<int>(cells.size()); ++ci) {
            const BwCell& c = cells[ci];
            if (!c.alive) continue;
            if ((p - c.c).squaredNorm() < c.r2 * (1.0 - 1e-13)) bad.push_back(ci);
        }
        if (bad.empty()) throw Error("lattice.GenericityFailure", "point outside every circumsphere");
        std::unordered_map<FacetKey, int, FacetHash> count;
        for (int ci : bad) {
            for (int drop = 0; drop <= d; ++drop) {
                FacetKey k;
                k.fill(-1);
                int c = 0;
                for (int i = 0; i <= d; ++i)
                    if (i != drop) k[c++] = cells[ci].v[i];
                std::sort(k.begin(), k.begin() + d);
                ++count[k];
            }
            cells[ci].alive = false;
            ++dead;
        }
        for (const auto& [k, n] : count) {
            if (n != 1) continue;
            std::array<int, kMaxDim + 1> v{};
            for (int i = 0; i < d; ++i) v[i] = k[i];
            v[d] = pi;
            cells.push_back(make_cell(v));
        }
        if (dead > 4096 && 2 * dead > cells.size()) {
            dead = 0;
            std::vector<BwCell> keep;
            keep.reserve(cells.size());
            for (auto& c : cells)
                if (c.alive) keep.push_back(std::move(c));
            cells.swap(keep);
        }
    }
    std::vector<std::array<int, kMaxDim + 1>> out;
    for (const auto& c : cells) {
        if (!c.alive) continue;
        bool super = false;
        for (int i = 0; i <= d; ++i) super |= c.v[i] <= d;
        if (super) continue;
        std::array<int, kMaxDim + 1> v = c.v;
        for (int i = 0; i <= d; ++i) v[i] -= d + 1;
        out.push_back(v);
    }
    return out;
}

double covering_bound(const Lattice& lat) {
    double s = 0.0;
    for (int i = 0; i < lat.dim(); ++i) s += lat.basis.col(i).norm();
    return 0.5 * s;
}

std::string ivec_str(const IVec& n) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < n.size(); ++i) os << (i ? "," : "") << n[i];
    os << ")";
    return os.str();
}

}  // namespace

Simplex Tessellation::unscaled_cell(int proto, const IVec& w) const {
    Simplex s;
    for (const auto& n : prototypes[proto].v) s.v.push_back(lat.point(n + w));
    return s;
}

Simplex Tessellation::cell(int proto, const IVec& w) const {
    Simplex s = unscaled_cell(proto, w);
    for (auto& p : s.v) p = tau * (p + z);
    return s;
}

double Tessellation::longest_prototype_edge() const {
    double best = 0.0;
    IVec zero = IVec::Zero(dim());
    for (int p = 0; p < static_cast<int>(prototypes.size()); ++p)
        best = std::max(best, unscaled_cell(p, zero).longest_edge());
    return best;
}

void Tessellation::materialize(const Vec& center, double radius) {
    window.clear();
    window_center = center;
    window_radius = radius / tau;
    Vec c = center / tau - z;
    IVec zero = IVec::Zero(dim());
    for (int p = 0; p < static_cast<int>(prototypes.size()); ++p) {
        Simplex s = unscaled_cell(p, zero);
        Vec g = s.centroid();
        double rp = 0.0;
        for (const auto& v : s.v) rp = std::max(rp, (v - g).norm());
        for (const auto& w : lat.points_near(c - g, window_radius + rp)) window.emplace_back(p, w);
    }
    std::sort(window.begin(), window.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return std::lexicographical_compare(a.second.data(), a.second.data() + a.second.size(), b.second.data(),
                                            b.second.data() + b.second.size());
    });
}

Tessellation Tessellation::scaled(double new_tau, const Vec& new_z) const {
    Tessellation t = *this;
    t.tau = new_tau;
    t.z = new_z;
    t.window.clear();
    return t;
}

Tessellation delaunay_tessellate(const Lattice& lat, double window_radius) {
    const int d = lat.dim();
    const double rc = covering_bound(lat);
    double reach = 4.0 * rc + 1.0;
    Tessellation t;
    t.lat = lat;
    t.z = zeros(d);
    for (int attempt = 0; attempt < 4; ++attempt, reach *= 1.5) {
        std::vector<IVec> ids = lat.points_near(zeros(d), reach);
        std::sort(ids.begin(), ids.end(), [&](const IVec& a, const IVec& b) {
            double na = lat.point(a).squaredNorm(), nb = lat.point(b).squaredNorm();
            if (na != nb) return na < nb;
            return std::lexicographical_compare(a.data(), a.data() + d, b.data(), b.data() + d);
        });
        std::vector<Vec> pts;
        pts.reserve(ids.size());
        for (const auto& n : ids) pts.push_back(lat.point(n));
        std::vector<std::array<int, kMaxDim + 1>> cells;
        try {
            cells = bowyer_watson(pts, d);
        } catch (const Error& e) {
            if (e.code() == "geometry.DegenerateSimplex")
                throw Error("lattice.GenericityFailure", "degenerate Delaunay cell (cospherical lattice points)");
            throw;
        }
        t.prototypes.clear();
        bool complete = true;
        for (const auto& c : cells) {
            IVec sum = IVec::Zero(d);
            for (int i = 0; i <= d; ++i) sum += ids[c[i]];
            bool proto = true;
            for (int k = 0; k < d; ++k) proto &= sum[k] >= 0 && sum[k] < d + 1;
            if (!proto) continue;
            LatticeCell lc;
            for (int i = 0; i <= d; ++i) lc.v.push_back(ids[c[i]]);
            std::sort(lc.v.begin(), lc.v.end(), [&](const IVec& a, const IVec& b) {
                return std::lexicographical_compare(a.data(), a.data() + d, b.data(), b.data() + d);
            });
            Simplex s;
            for (const auto& n : lc.v) s.v.push_back(lat.point(n));
            Sphere sp = circumsphere(s);
            if (sp.center.norm() + sp.radius >= reach * (1.0 - 1e-9)) complete = false;
            t.prototypes.push_back(lc);
        }
        if (!complete) continue;
        std::sort(t.prototypes.begin(), t.prototypes.end(), [&](const LatticeCell& a, const LatticeCell& b) {
            for (int i = 0; i <= d; ++i) {
                if (a.v[i] != b.v[i])
                    return std::lexicographical_compare(a.v[i].data(), a.v[i].data() + d, b.v[i].data(),
                                                        b.v[i].data() + d);
            }
            return false;
        });
        t.eta_m = verify_true_delaunay(t);
        double vol = 0.0;
        IVec zero = IVec::Zero(d);
        for (int p = 0; p < static_cast<int>(t.prototypes.size()); ++p) vol += t.unscaled_cell(p, zero).volume();
        if (std::abs(vol - std::abs(lat.det())) > 1e-6 * std::abs(lat.det()))
            throw Error("lattice.TilingFailure", "prototype volumes do not sum to the period volume");
        if (window_radius > 0.0) t.materialize(zeros(d), window_radius);
        return t;
    }
    throw Error("lattice.GenericityFailure", "Delaunay prototypes not certified within the point window");
}

double verify_true_delaunay(const Tessellation& t) {
    const int d = t.dim();
    double eta = std::numeric_limits<double>::infinity();
    std::string worst;
    IVec zero = IVec::Zero(d);
    for (int p = 0; p < static_cast<int>(t.prototypes.size()); ++p) {
        Simplex s = t.unscaled_cell(p, zero);
        Sphere sp = circumsphere(s);
        double best = std::numeric_limits<double>::infinity();
        IVec arg = zero;
        for (const auto& n : t.lat.points_near(sp.center, sp.radius + 1.0)) {
            bool vertex = false;
            for (const auto& v : t.prototypes[p].v) vertex |= (v == n);
            if (vertex) continue;
            double dist = (t.lat.point(n) - sp.center).norm() - sp.radius;
            if (dist < best) {
                best = dist;
                arg = n;
            }
        }
        if (!std::isfinite(best)) best = 1.0;  // nothing within radius + 1
        if (best < eta) {
            eta = best;
            std::ostringstream os;
            os << "cell {";
            for (const auto& v : t.prototypes[p].v) os << ivec_str(v);
            os << "} nearest other point " << ivec_str(arg);
            worst = os.str();
        }
    }
    double scale = 0.0;
    for (int i = 0; i < d; ++i) scale = std::max(scale, t.lat.basis.col(i).norm());
    if (!(eta > kRelTol * scale))
        throw Error("lattice.GenericityFailure", "circumsphere margin " + std::to_string(eta) + " at " + worst);
    return eta * t.tau;
}

// ---------------------------------------------------------------------------
// Skeletons.

namespace {

IVec bin_key(const Vec& x, double cell) {
    IVec k(x.size());
    for (int i = 0; i < x.size(); ++i) k[i] = static_cast<int>(std::floor(x[i] / cell));
    return k;
}

std::uint64_t key_hash(const IVec& k) {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < k.size(); ++i) h = (h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(k[i]) + 0x9e3779b9)) * 1099511628211ull;
    return h;
}

}  // namespace

void Skeleton::build_index() {
    bins.clear();
    bin_keys.clear();
    box_lo.clear();
    box_hi.clear();
    if (faces.empty()) return;
    double ext = 0.0;
    for (const auto& f : faces) ext = std::max(ext, f.longest_edge());
    // vertex-only skeletons have no edges; fall back to the mean spacing of the point cloud
    Vec glo = faces[0].v[0], ghi = faces[0].v[0];
    for (const auto& f : faces)
        for (const auto& p : f.v) {
            glo = glo.cwiseMin(p);
            ghi = ghi.cwiseMax(p);
        }
    const int gd = static_cast<int>(glo.size());
    double spacing = (ghi - glo).maxCoeff() / std::pow(static_cast<double>(faces.size()), 1.0 / gd);
    cell = std::max({0.5 * ext, spacing, 1e-9});
    std::unordered_map<std::uint64_t, int> slot;
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
        const auto& f = faces[fi];
        Vec lo = f.v[0], hi = f.v[0];
        for (const auto& p : f.v) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        box_lo.push_back(lo);
        box_hi.push_back(hi);
        IVec a = bin_key(lo, cell), b = bin_key(hi, cell);
        IVec k = a;
        const int d = static_cast<int>(k.size());
        while (true) {
            std::uint64_t h = key_hash(k);
            auto it = slot.find(h);
            int s;
            if (it == slot.end()) {
                s = static_cast<int>(bins.size());
                slot.emplace(h, s);
                bins.emplace_back();
                bin_keys.push_back(k);
            } else {
                s = it->second;
            }
            bins[s].push_back(fi);
            int i = 0;
            while (i < d && ++k[i] > b[i]) {
                k[i] = a[i];
                ++i;
            }
            if (i == d) break;
        }
    }
    lookup_table_ = std::move(slot);
}

double Skeleton::distance_capped(const Vec& x, double cap) const {
    if (faces.empty()) return cap;
    if (bins.empty()) {
        double best = cap;
        for (const auto& f : faces) best = std::min(best, point_simplex_distance(x, f));
        return best;
    }
    const int d = static_cast<int>(x.size());
    double span = 1.0;
    for (int i = 0; i < d && span <= static_cast<double>(bins.size()); ++i) span *= 2.0 * cap / cell + 2.0;
    if (span > static_cast<double>(bins.size())) {
        double best = cap;
        for (std::size_t fi = 0; fi < faces.size(); ++fi) {
            double box2 = (box_lo[fi] - x).cwiseMax(x - box_hi[fi]).cwiseMax(0.0).squaredNorm();
            if (box2 >= best * best) continue;
            best = std::min(best, point_simplex_distance(x, faces[fi]));
        }
        return best;
    }
    IVec a = bin_key(x - Vec::Constant(d, cap), cell), b = bin_key(x + Vec::Constant(d, cap), cell);
    double best = cap;
    IVec k = a;
    while (true) {
        auto it = lookup_table_.find(key_hash(k));
        if (it != lookup_table_.end())
            for (int fi : bins[it->second]) {
                double box2 = (box_lo[fi] - x).cwiseMax(x - box_hi[fi]).cwiseMax(0.0).squaredNorm();
                if (box2 >= best * best) continue;
                best = std::min(best, point_simplex_distance(x, faces[fi]));
            }
        int i = 0;
        while (i < d && ++k[i] > b[i]) {
            k[i] = a[i];
            ++i;
        }
        if (i == d) break;
    }
    return best;
}

double Skeleton::distance(const Vec& x) const {
    if (faces.empty()) return std::numeric_limits<double>::infinity();
    if (bins.empty()) return distance_capped(x, std::numeric_limits<double>::infinity());
    double cap = cell;
    for (int it = 0; it < 40; ++it, cap *= 2.0) {
        double dd = distance_capped(x, cap);
        if (dd < cap) return dd;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : faces) best = std::min(best, point_simplex_distance(x, f));
    return best;
}

Skeleton build_skeleton(const Tessellation& t) {
    const int d = t.dim();
    std::map<std::vector<int>, Simplex> uniq;
    for (const auto& [p, w] : t.window) {
        const auto& proto = t.prototypes[p];
        for (int drop = 0; drop <= d; ++drop) {
            std::vector<IVec> vs;
            for (int i = 0; i <= d; ++i)
                if (i != drop) vs.push_back(proto.v[i] + w);
            std::sort(vs.begin(), vs.end(), [&](const IVec& a, const IVec& b) {
                return std::lexicographical_compare(a.data(), a.data() + d, b.data(), b.data() + d);
            });
            std::vector<int> key;
            for (const auto& v : vs)
                for (int i = 0; i < d; ++i) key.push_back(v[i]);
            if (uniq.count(key)) continue;
            Simplex s;
            for (const auto& v : vs) s.v.push_back(t.tau * (t.lat.point(v) + t.z));
            uniq.emplace(std::move(key), std::move(s));
        }
    }
    Skeleton sk;
    sk.faces.reserve(uniq.size());
    for (auto& [k, s] : uniq) sk.faces.push_back(std::move(s));
    sk.build_index();
    return sk;
}

double skeleton_distance(const Vec& x, const Skeleton& sk) { return sk.distance(x); }

}  // namespace lab
