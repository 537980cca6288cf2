#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "labyrinth/lattice.hpp"
#include "labyrinth/rng.hpp"

namespace lab {

namespace {

bool ivec_less(const IVec& a, const IVec& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

Simplex face_at(const Tessellation& t, const LatticeCell& f, const IVec& w, const Vec& shift) {
    Simplex s;
    for (const auto& n : f.v) s.v.push_back(t.lat.point(n + w) + shift);
    return s;
}

double circumradius_max(const Tessellation& t) {
    double r = 0.0;
    IVec zero = IVec::Zero(t.dim());
    for (int p = 0; p < static_cast<int>(t.prototypes.size()); ++p)
        r = std::max(r, circumsphere(t.unscaled_cell(p, zero)).radius);
    return r;
}

// Barycentric grid on a simplex with covering radius <= h.
void sample_simplex(const Simplex& s, double h, std::vector<Vec>& out) {
    const int k = s.order();
    if (k == 0) {
        out.push_back(s.v[0]);
        return;
    }
    // Every point lies in a sub-simplex of edge length <= L/n, within L/n of a grid vertex.
    const int n = std::max(1, static_cast<int>(std::ceil(s.longest_edge() / h)));
    std::vector<int> c(k + 1, 0);
    // enumerate compositions of n into k+1 non-negative parts
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == k) {
            c[k] = left;
            Vec p = zeros(s.dim());
            for (int j = 0; j <= k; ++j) p += (static_cast<double>(c[j]) / n) * s.v[j];
            out.push_back(p);
            return;
        }
        for (int a = 0; a <= left; ++a) {
            c[i] = a;
            rec(i + 1, left - a);
        }
    };
    rec(0, n);
}

struct PointGrid {
    double cell = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> bins;

    static std::uint64_t hash(const IVec& k) {
        std::uint64_t h = 1469598103934665603ull;
        for (int i = 0; i < k.size(); ++i) h = (h ^ static_cast<std::uint64_t>(k[i] + 0x40000000)) * 1099511628211ull;
        return h;
    }
    IVec key(const Vec& x) const {
        IVec k(x.size());
        for (int i = 0; i < x.size(); ++i) k[i] = static_cast<int>(std::floor(x[i] / cell));
        return k;
    }
    void insert(const Vec& x, int id) { bins[hash(key(x))].push_back(id); }
    template <class F>
    void visit(const Vec& x, double r, F&& f) const {
        const int d = static_cast<int>(x.size());
        IVec a = key(x - Vec::Constant(d, r)), b = key(x + Vec::Constant(d, r));
        IVec k = a;
        while (true) {
            auto it = bins.find(hash(k));
            if (it != bins.end())
                for (int id : it->second) f(id);
            int i = 0;
            while (i < d && ++k[i] > b[i]) {
                k[i] = a[i];
                ++i;
            }
            if (i == d) break;
        }
    }
};

}  // namespace

PeriodicFaces periodic_faces(const Tessellation& t) {
    const int d = t.dim();
    PeriodicFaces pf;
    pf.t = &t;
    std::map<std::vector<int>, LatticeCell> uniq;
    for (const auto& proto : t.prototypes) {
        for (int drop = 0; drop <= d; ++drop) {
            std::vector<IVec> vs;
            for (int i = 0; i <= d; ++i)
                if (i != drop) vs.push_back(proto.v[i]);
            std::sort(vs.begin(), vs.end(), ivec_less);
            // canonical representative: first vertex translated to the origin
            IVec base = vs[0];
            std::vector<int> key;
            for (auto& v : vs) {
                v -= base;
                for (int i = 0; i < d; ++i) key.push_back(v[i]);
            }
            if (uniq.count(key)) continue;
            uniq.emplace(std::move(key), LatticeCell{vs});
        }
    }
    for (auto& [k, f] : uniq) pf.faces.push_back(f);
    IVec zero = IVec::Zero(d);
    for (const auto& f : pf.faces) {
        Simplex s = face_at(t, f, zero, zeros(d));
        for (const auto& v : s.v) pf.reach = std::max(pf.reach, v.norm());
    }
    pf.cover = circumradius_max(t);
    return pf;
}

double PeriodicFaces::distance(const Vec& x, const Vec& q) const {
    const int d = t->dim();
    double best = std::numeric_limits<double>::infinity();
    Vec y = x - q;
    for (const auto& w : t->lat.points_near(y, cover + reach)) {
        for (const auto& f : faces) {
            Simplex s = face_at(*t, f, w, zeros(d));
            best = std::min(best, point_simplex_distance(y, s));
        }
    }
    return best;
}

namespace {

// Active chain endpoints at one level of the dynamic programme.
struct Level {
    struct Bin {
        IVec key;
        std::vector<int> ids;
        double min_cost = std::numeric_limits<double>::infinity();
    };
    std::vector<Vec> pts;
    std::vector<double> cost;
    PointGrid grid;  // hash of cell key -> index into bins
    std::vector<Bin> bins;

    void index(double cell) {
        grid.cell = cell;
        grid.bins.clear();
        bins.clear();
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
            IVec k = grid.key(pts[i]);
            auto& slot = grid.bins[PointGrid::hash(k)];
            int b = -1;
            for (int c : slot)
                if (bins[c].key == k) b = c;
            if (b < 0) {
                b = static_cast<int>(bins.size());
                bins.push_back(Bin{k, {}, std::numeric_limits<double>::infinity()});
                slot.push_back(b);
            }
            bins[b].ids.push_back(i);
            bins[b].min_cost = std::min(bins[b].min_cost, cost[i]);
        }
    }
    // min over active x of cost(x) + |y-x|; infinity when nothing comes in under r
    double reach_cost(const Vec& y, double r) const {
        double best = r;
        const int d = static_cast<int>(y.size());
        auto scan = [&](const Bin& bin) {
            if (bin.min_cost >= best) return;
            double gap2 = 0.0;  // squared distance from y to the cell box
            for (int i = 0; i < d; ++i) {
                double lo = bin.key[i] * grid.cell, hi = lo + grid.cell;
                double g = y[i] < lo ? lo - y[i] : (y[i] > hi ? y[i] - hi : 0.0);
                gap2 += g * g;
            }
            double slack = best - bin.min_cost;
            if (gap2 >= slack * slack) return;
            for (int id : bin.ids) {
                double room = best - cost[id];
                if (room <= 0.0) continue;
                double dd2 = (y - pts[id]).squaredNorm();
                if (dd2 < room * room) best = cost[id] + std::sqrt(dd2);
            }
        };
        IVec a = grid.key(y - Vec::Constant(d, r)), b = grid.key(y + Vec::Constant(d, r));
        double cells = 1.0;
        for (int i = 0; i < d; ++i) cells *= b[i] - a[i] + 1;
        if (cells > static_cast<double>(bins.size())) {
            // wide query: walking the occupied bins is cheaper than the cell range
            for (const auto& bin : bins) scan(bin);
        } else {
            IVec k = a;
            while (true) {
                auto it = grid.bins.find(PointGrid::hash(k));
                if (it != grid.bins.end())
                    for (int c : it->second)
                        if (bins[c].key == k) scan(bins[c]);
                int i = 0;
                while (i < d && ++k[i] > b[i]) {
                    k[i] = a[i];
                    ++i;
                }
                if (i == d) break;
            }
        }
        return best < r ? best : std::numeric_limits<double>::infinity();
    }
};

Skeleton shifted_skeleton(const Tessellation& t, const Vec& q, const Vec& center, double radius) {
    Tessellation s = t.scaled(1.0, q);
    s.materialize(center, radius);
    return build_skeleton(s);
}

// Fine barycentric grid on a face (covering radius <= h) with a coarse companion grid used
// to discard whole patches: lb(g) must bound the target from below at every point within
// `coarse` of g, after subtracting lip * distance.
template <class LowerBound, class Keep>
void sample_pruned(const Simplex& s, double h, double coarse, double cutoff, double lip, LowerBound&& lb, Keep&& keep) {
    const int k = s.order();
    if (k == 0) {
        if (lb(s.v[0]) <= cutoff) keep(s.v[0]);
        return;
    }
    const double len = s.longest_edge();
    const int nc = std::max(1, static_cast<int>(std::ceil(len / coarse)));
    const int r = std::max(1, static_cast<int>(std::ceil(len / (h * nc))));
    const int n = nc * r;
    auto point = [&](const std::vector<int>& c, int total) {
        Vec p = zeros(s.dim());
        for (int j = 0; j <= k; ++j) p += (static_cast<double>(c[j]) / total) * s.v[j];
        return p;
    };
    std::map<std::vector<int>, double> coarse_lb;
    std::vector<int> c(k + 1, 0), g(k + 1, 0);
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == k) {
            c[k] = left;
            int used = 0;
            for (int j = 0; j < k; ++j) used += (g[j] = c[j] / r);
            g[k] = nc - used;
            auto it = coarse_lb.find(g);
            if (it == coarse_lb.end()) it = coarse_lb.emplace(g, lb(point(g, nc))).first;
            Vec p = point(c, n);
            double gap = (p - point(g, nc)).norm();
            if (gap <= coarse && it->second - lip * gap > cutoff) return;
            keep(p);
            return;
        }
        for (int a = 0; a <= left; ++a) {
            c[i] = a;
            rec(i + 1, left - a);
        }
    };
    rec(0, n);
}

// Adaptive version for segments and triangles: midpoint subdivision, discarding a piece when
// lb(centre) - lip * radius exceeds the cutoff, and emitting the vertices of pieces whose
// edges are <= h (every point of such a piece is within h of one of them).
template <class LowerBound, class Keep>
void sample_adaptive(const Simplex& s, double h, double cutoff, double lip, LowerBound&& lb, Keep&& keep) {
    const int k = s.order();
    if (k == 0 || k > 2) {
        const double coarse = 6.0 * h;
        sample_pruned(s, h, coarse, cutoff, lip, [&](const Vec& y) { return lb(y, coarse); }, keep);
        return;
    }
    std::vector<Simplex> stack{s};
    std::unordered_map<std::uint64_t, std::vector<Vec>> emitted;  // shared vertices are emitted once
    auto emit = [&](const Vec& v) {
        std::uint64_t h = 1469598103934665603ull;
        for (int i = 0; i < v.size(); ++i) {
            std::uint64_t b;
            std::memcpy(&b, &v[i], sizeof b);
            h = (h ^ b) * 1099511628211ull;
        }
        auto& bucket = emitted[h];
        for (const auto& w : bucket)
            if (w == v) return;
        bucket.push_back(v);
        keep(v);
    };
    while (!stack.empty()) {
        Simplex t = std::move(stack.back());
        stack.pop_back();
        Vec c = t.centroid();
        double rad = 0.0;
        for (const auto& v : t.v) rad = std::max(rad, (v - c).norm());
        if (lb(c, rad) - lip * rad > cutoff) continue;
        if (t.longest_edge() <= h) {
            for (const auto& v : t.v) emit(v);
            continue;
        }
        if (k == 1) {
            Vec mid = 0.5 * (t.v[0] + t.v[1]);
            stack.push_back(Simplex({t.v[0], mid}));
            stack.push_back(Simplex({mid, t.v[1]}));
        } else {
            Vec ab = 0.5 * (t.v[0] + t.v[1]), bc = 0.5 * (t.v[1] + t.v[2]), ca = 0.5 * (t.v[2] + t.v[0]);
            stack.push_back(Simplex({t.v[0], ab, ca}));
            stack.push_back(Simplex({ab, t.v[1], bc}));
            stack.push_back(Simplex({ca, bc, t.v[2]}));
            stack.push_back(Simplex({ab, bc, ca}));
        }
    }
}

struct ChainResult {
    double value = std::numeric_limits<double>::infinity();
    std::size_t samples = 0;
};

// Sampled chain minimum over chains of length below `bound` (m >= 3).
struct ChainSetup {
    std::vector<Simplex> base;  // one period of the second skeleton
    std::vector<Skeleton> sk;
    double bound = 0.0;         // skeletons cover every chain shorter than this
};

ChainSetup chain_setup(const Tessellation& t, const PeriodicFaces& pf, const std::vector<Vec>& q, double bound) {
    const int d = t.dim();
    const int m = static_cast<int>(q.size());
    IVec zero = IVec::Zero(d);
    ChainSetup cs;
    cs.bound = bound;
    Vec c0 = zeros(d);
    int nv = 0;
    for (const auto& f : pf.faces) {
        cs.base.push_back(face_at(t, f, zero, q[1]));
        for (const auto& v : cs.base.back().v) {
            c0 += v;
            ++nv;
        }
    }
    c0 /= nv;
    double r1 = 0.0;
    for (const auto& f : cs.base)
        for (const auto& v : f.v) r1 = std::max(r1, (v - c0).norm());
    // level j points lie within r1 + (j-1) bound of c0; queries reach one bound further
    for (int j = 0; j < m; ++j) cs.sk.push_back(shifted_skeleton(t, q[j], c0, r1 + std::max(1, j) * bound + 1e-9));
    return cs;
}

ChainResult chain_dp(const ChainSetup& cs, int m, double h, double bound) {
    const auto& base = cs.base;
    const auto& sk = cs.sk;
    ChainResult res;

    auto last = [&](const Vec& y) { return sk[m - 1].distance_capped(y, bound); };
    // Level 1: x_1 on one period of the second skeleton, cost = exact distance to the first.
    // Lower bounds add the distance to the last skeleton, a valid bound on the rest of the chain.
    Level cur;
    for (const auto& f : base) {
        // capped distances stay lower bounds of the true ones
        auto lb = [&](const Vec& y, double rad) {
            const double cap = bound + rad;
            double a = sk[0].distance_capped(y, cap);
            if (a >= cap) return a;
            return a + std::max(sk[2].distance_capped(y, cap), sk[m - 1].distance_capped(y, cap));
        };
        sample_adaptive(f, h, bound, 2.0, lb, [&](const Vec& p) {
            ++res.samples;
            double cst = sk[0].distance_capped(p, bound);
            if (cst < bound) {
                cur.pts.push_back(p);
                cur.cost.push_back(cst);
            }
        });
    }
    for (int j = 2; j <= m - 2; ++j) {
        cur.index(bound);
        Level next;
        for (const auto& f : sk[j].faces) {
            Vec fc = f.centroid();
            double fr = 0.0;
            for (const auto& v : f.v) fr = std::max(fr, (v - fc).norm());
            if (!(cur.reach_cost(fc, bound + fr) < bound + fr)) continue;
            auto lb = [&](const Vec& y, double rad) {
                double a = cur.reach_cost(y, bound + rad);
                return a < bound + rad ? a + sk[m - 1].distance_capped(y, bound + rad) : a;
            };
            sample_adaptive(f, h, bound, 2.0, lb, [&](const Vec& p) {
                ++res.samples;
                double cst = cur.reach_cost(p, bound);
                if (cst < bound) {
                    next.pts.push_back(p);
                    next.cost.push_back(cst);
                }
            });
        }
        cur = std::move(next);
    }
    for (std::size_t i = 0; i < cur.pts.size(); ++i) {
        if (cur.cost[i] >= res.value) continue;
        double tail = last(cur.pts[i]);
        if (tail < bound) res.value = std::min(res.value, cur.cost[i] + tail);
    }
    return res;
}

}  // namespace

MuEstimate estimate_mu_raw(const Tessellation& t, const std::vector<Vec>& q, double h) {
    const int d = t.dim();
    const int m = static_cast<int>(q.size());
    if (m < 2) throw Error("lattice.InvalidShifts", "need at least two shifted skeletons");
    if (!(h > 0.0)) throw Error("lattice.InvalidMesh", "mesh must be positive");
    PeriodicFaces pf = periodic_faces(t);
    MuEstimate est;
    est.h = h;

    if (m == 2) {
        // single step: exact distance from the sampled second skeleton to the first
        IVec zero = IVec::Zero(d);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& f : pf.faces) {
            std::vector<Vec> pts;
            sample_simplex(face_at(t, f, zero, q[1]), h, pts);
            for (const auto& p : pts) best = std::min(best, pf.distance(p, q[0]));
            est.samples += pts.size();
        }
        est.sampled = best;
        est.certified = d == 1 ? best : best - 2.0 * (m - 1) * h;
        return est;
    }

    // A pass with cutoff b returns the exact sampled minimum whenever that minimum is below b,
    // and every such pass is cheap when b is small; grow b until a chain fits. The sampled
    // minimum is at most mu + 2(m-1)h, and (m-1)(cover + 2h) always admits a chain.
    const double b_max = (m - 1) * (pf.cover + 2.0 * h);
    ChainResult r;
    for (double b = 3.0 * (m - 1) * h;; b *= 2.0) {
        b = std::min(b, b_max);
        r = chain_dp(chain_setup(t, pf, q, b), m, h, b);
        est.samples += r.samples;
        if (std::isfinite(r.value) || b >= b_max) break;
    }
    if (!std::isfinite(r.value)) throw Error("lattice.MeshTooCoarse", "chain search found no chain");
    est.sampled = r.value;
    est.certified = est.sampled - 2.0 * (m - 1) * h;
    return est;
}

double estimate_mu(const ShiftFamily& family, const Tessellation& t, double h) {
    MuEstimate e = estimate_mu_raw(t, family.q, h);
    if (!(e.certified > 0.0)) {
        std::ostringstream os;
        os << "certified bound " << e.certified << " not positive at mesh " << h << " (sampled " << e.sampled << ")";
        throw Error("lattice.MeshTooCoarse", os.str());
    }
    return e.certified;
}

std::string tessellation_obj(const Tessellation& t, bool skeleton_only) {
    std::ostringstream os;
    os.precision(17);
    const int d = t.dim();
    os << "# dim " << d << " tau " << t.tau << "\n";
    std::vector<Simplex> items;
    if (skeleton_only) {
        items = build_skeleton(t).faces;
    } else {
        for (const auto& [p, w] : t.window) items.push_back(t.cell(p, w));
    }
    int base = 1;
    for (const auto& s : items) {
        for (const auto& v : s.v) {
            os << "v";
            for (int i = 0; i < 3; ++i) os << " " << (i < v.size() ? v[i] : 0.0);
            os << "\n";
        }
        const int k = static_cast<int>(s.v.size());
        if (k == 2) {
            os << "l " << base << " " << base + 1 << "\n";
        } else {
            // every triangle of the simplex, which OBJ viewers can draw
            for (int a = 0; a < k; ++a)
                for (int b = a + 1; b < k; ++b)
                    for (int c = b + 1; c < k; ++c) os << "f " << base + a << " " << base + b << " " << base + c << "\n";
        }
        base += k;
    }
    return os.str();
}

}  // namespace lab
