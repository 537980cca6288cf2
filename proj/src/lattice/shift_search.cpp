#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "labyrinth/lattice.hpp"
#include "labyrinth/rng.hpp"

namespace lab {

namespace {

double frac_dist(double x) { return std::abs(x - std::round(x)); }

// Integer normal of the hyperplane through a face, from the (d-1)-minors of its edge matrix.
IVec face_normal(const LatticeCell& f, int d) {
    IVec n(d);
    if (d == 1) {
        n[0] = 1;
        return n;
    }
    Mat e(d, d - 1);
    for (int i = 1; i < d; ++i) e.col(i - 1) = (f.v[i] - f.v[0]).cast<double>();
    for (int r = 0; r < d; ++r) {
        Mat minor(d - 1, d - 1);
        for (int i = 0, k = 0; i < d; ++i)
            if (i != r) minor.row(k++) = e.row(i);
        n[r] = static_cast<int>(std::lround(((r % 2) ? -1.0 : 1.0) * minor.determinant()));
    }
    int g = 0;
    for (int i = 0; i < d; ++i) g = std::gcd(g, std::abs(n[i]));
    n /= g;
    for (int i = 0; i < d; ++i) {
        if (n[i] == 0) continue;
        if (n[i] < 0) n = -n;
        break;
    }
    return n;
}

// Scale a rational vector to the primitive integer vector on the same ray.
bool integerize(Vec& v) {
    v /= v.cwiseAbs().maxCoeff();
    for (int den = 1; den <= 100000; ++den) {
        Vec s = v * den;
        bool ok = true;
        for (int i = 0; i < s.size() && ok; ++i) ok = std::abs(s[i] - std::round(s[i])) < 1e-7;
        if (!ok) continue;
        long g = 0;
        for (int i = 0; i < s.size(); ++i) g = std::gcd(g, std::labs(std::lround(s[i])));
        for (int i = 0; i < s.size(); ++i) v[i] = static_cast<double>(std::lround(s[i]) / g);
        return true;
    }
    return false;
}

constexpr int kBoundarySamples = 128;
constexpr int kClimbs = 4;

}  // namespace

Arrangement::Arrangement(const Tessellation& t) : dim_(t.dim()), basis_inv_(t.lat.basis.inverse()) {
    const int d = dim_, m = d + 1;
    PeriodicFaces pf = periodic_faces(t);
    std::set<std::vector<int>> seen;
    for (const auto& f : pf.faces) {
        IVec n = face_normal(f, d);
        if (seen.insert(std::vector<int>(n.data(), n.data() + d)).second) normals_.push_back(n);
    }
    const int nf = families();
    Mat binv_t = basis_inv_.transpose();
    std::vector<Vec> nu;
    for (const auto& n : normals_) nu.push_back(binv_t * n.cast<double>());

    std::vector<int> sel(m, 0);
    while (true) {
        Choice c;
        c.fam = sel;
        Mat nmat(d, m);
        for (int j = 0; j < m; ++j) nmat.col(j) = normals_[sel[j]].cast<double>();
        Mat ker = Eigen::FullPivLU<Mat>(nmat).kernel();
        bool parallel = std::all_of(sel.begin(), sel.end(), [&](int f) { return f == sel[0]; });
        if (parallel) {
            // consecutive gaps between parallel plane families are independent
            c.kind = 3;
            c.scale = 1.0 / nu[sel[0]].norm();
        } else if (ker.cols() == 1) {
            // Dual of the chain problem: the multipliers of the plane constraints are a multiple
            // of the null vector, the partial sums are the dual edge vectors, so the optimum is
            // |lambda . offsets| / max partial-sum norm; offsets range over alpha + Z^m.
            Vec lam = ker.col(0);
            if (integerize(lam)) {
                c.kind = 1;
                c.lambda = lam;
                Vec w = zeros(d);
                double den = 0.0;
                for (int k = 0; k + 1 < m; ++k) {
                    w += lam[k] * nu[sel[k]];
                    den = std::max(den, w.norm());
                }
                c.scale = 1.0 / den;
            }
        } else if (ker.cols() == 2) {
            // Two-dimensional dual: sample the boundary of the feasible multiplier set.
            c.kind = 2;
            c.kernel = ker;
            std::vector<Vec> wa, wb;
            Vec a = zeros(d), b = zeros(d);
            for (int k = 0; k + 1 < m; ++k) {
                a += ker(k, 0) * nu[sel[k]];
                b += ker(k, 1) * nu[sel[k]];
                wa.push_back(a);
                wb.push_back(b);
            }
            for (int i = 0; i < kBoundarySamples; ++i) {
                double th = 2.0 * M_PI * i / kBoundarySamples, cs = std::cos(th), sn = std::sin(th);
                double r = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < wa.size(); ++k) {
                    double nn = (cs * wa[k] + sn * wb[k]).norm();
                    if (nn > 0) r = std::min(r, 1.0 / nn);
                }
                c.bx.push_back(r * cs);
                c.by.push_back(r * sn);
            }
        }
        if (c.kind != 0) choices_.push_back(std::move(c));
        int i = 0;
        while (i < m && ++sel[i] >= nf) {
            sel[i] = 0;
            ++i;
        }
        if (i == m) break;
    }
}

double Arrangement::separation(const std::vector<Vec>& q) const {
    const int d = dim_, m = d + 1;
    if (static_cast<int>(q.size()) != m) throw Error("lattice.InvalidShifts", "need dim + 1 shifts");
    const int nf = families();
    // alpha(f, j): offset of family f in skeleton j, lattice units
    std::vector<double> alpha(nf * m);
    for (int j = 0; j < m; ++j) {
        Vec p = basis_inv_ * q[j];
        for (int f = 0; f < nf; ++f) alpha[f * m + j] = normals_[f].cast<double>().dot(p);
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : choices_) {
        if (c.kind == 1) {
            double psi = 0.0;
            for (int j = 0; j < m; ++j) psi += c.lambda[j] * alpha[c.fam[j] * m + j];
            best = std::min(best, frac_dist(psi) * c.scale);
        } else if (c.kind == 3) {
            double s = 0.0;
            for (int j = 0; j + 1 < m; ++j) s += frac_dist(alpha[c.fam[0] * m + j + 1] - alpha[c.fam[0] * m + j]);
            best = std::min(best, s * c.scale);
        } else {
            double pa = 0.0, pb = 0.0;
            for (int j = 0; j < m; ++j) {
                pa += c.kernel(j, 0) * alpha[c.fam[j] * m + j];
                pb += c.kernel(j, 1) * alpha[c.fam[j] * m + j];
            }
            // integer offsets in {-1,0,1}^m around the given ones
            std::vector<int> off(m, -1);
            while (true) {
                double va = pa, vb = pb;
                for (int j = 0; j < m; ++j) {
                    va += c.kernel(j, 0) * off[j];
                    vb += c.kernel(j, 1) * off[j];
                }
                double h = 0.0;
                for (int i = 0; i < kBoundarySamples && h < best; ++i) h = std::max(h, c.bx[i] * va + c.by[i] * vb);
                best = std::min(best, h);
                int i = 0;
                while (i < m && ++off[i] > 1) {
                    off[i] = -1;
                    ++i;
                }
                if (i == m) break;
            }
        }
    }
    return best;
}

ShiftFamily find_shifts(const Tessellation& t, int m, std::uint64_t seed, int candidates, double h,
                        int retry_budget) {
    const int d = t.dim();
    if (m != d + 1) throw Error("lattice.InvalidShifts", "need m = dim + 1 shifted skeletons");
    if (candidates < 1) throw Error("lattice.InvalidShifts", "need at least one candidate");
    Arrangement arr(t);
    Rng rng(seed);
    auto shifts = [&](const std::vector<Vec>& p) {
        std::vector<Vec> q;
        for (const auto& u : p) q.push_back(t.lat.basis * u);
        return q;
    };
    for (int attempt = 0; attempt < retry_budget; ++attempt) {
        // random candidates in one fundamental cell, then a shrinking random walk from each of
        // the few best
        std::vector<std::pair<double, std::vector<Vec>>> pool;
        for (int c = 0; c < candidates; ++c) {
            std::vector<Vec> p{zeros(d)};
            for (int j = 1; j < m; ++j) {
                Vec u(d);
                for (int i = 0; i < d; ++i) u[i] = rng.uniform();
                p.push_back(u);
            }
            pool.emplace_back(arr.separation(shifts(p)), std::move(p));
        }
        std::stable_sort(pool.begin(), pool.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        std::vector<Vec> best_p = pool[0].second;
        double best = pool[0].first;
        const int steps = 2 * candidates;
        for (int start = 0; start < std::min<int>(kClimbs, pool.size()); ++start) {
            auto [cur, cur_p] = pool[start];
            double step = 0.05;
            for (int it = 0; it < steps; ++it) {
                if (it > 0 && it % std::max(1, steps / 10) == 0) step *= 0.6;
                std::vector<Vec> p = cur_p;
                for (int j = 1; j < m; ++j)
                    for (int i = 0; i < d; ++i) p[j][i] += step * rng.uniform(-1.0, 1.0);
                double s = arr.separation(shifts(p));
                if (s > cur) {
                    cur = s;
                    cur_p = p;
                }
            }
            if (cur > best) {
                best = cur;
                best_p = cur_p;
            }
        }
        if (!(best > 0.0)) continue;
        // the certified value is roughly best - 2(m-1) mesh; aim for a third of it
        double mesh = h > 0.0 ? h : best / (3.0 * (m - 1));
        const std::vector<Vec> q = shifts(best_p);
        for (int refine = 0; refine < 3; ++refine, mesh *= 0.5) {
            MuEstimate e = estimate_mu_raw(t, q, mesh);
            if (e.certified > 0.0) {
                ShiftFamily fam;
                fam.q = q;
                fam.mu = e.certified;
                fam.mu_sampled = e.sampled;
                fam.mesh = mesh;
                fam.arrangement = best;
                fam.candidates = (attempt + 1) * candidates;
                return fam;
            }
        }
    }
    throw Error("lattice.ShiftSearchFailure", "no shift family with certified positive separation");
}

}  // namespace lab
