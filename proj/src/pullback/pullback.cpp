#include "labyrinth/pullback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "labyrinth/rng.hpp"

namespace lab {

cplx MultiPoly::operator()(const std::vector<cplx>& z) const {
    if (static_cast<int>(z.size()) != nvars) throw Error("pullback.DimensionMismatch", "wrong number of variables");
    cplx s = 0.0;
    for (const auto& t : terms) {
        cplx m = t.coef;
        for (int j = 0; j < nvars; ++j)
            for (int e = 0; e < t.exp[j]; ++e) m *= z[j];
        s += m;
    }
    return s;
}

MultiPoly MultiPoly::derivative(int var) const {
    MultiPoly d;
    d.nvars = nvars;
    for (const auto& t : terms) {
        if (t.exp[var] == 0) continue;
        PolyTerm u = t;
        u.coef *= static_cast<double>(t.exp[var]);
        --u.exp[var];
        d.terms.push_back(std::move(u));
    }
    return d;
}

int MultiPoly::degree() const {
    int d = 0;
    for (const auto& t : terms) {
        int s = 0;
        for (int e : t.exp) s += e;
        d = std::max(d, s);
    }
    return d;
}

ProperPolyMap::ProperPolyMap(int nvars, std::vector<MultiPoly> components) : comp(std::move(components)) {
    if (nvars < 1 || comp.empty()) throw Error("pullback.InvalidMap", "need at least one variable and one component");
    if (2 * nvars > kMaxDim || 2 * n_out() > kMaxDim)
        throw Error("pullback.InvalidMap", "real dimension above " + std::to_string(kMaxDim));
    for (const auto& c : comp) {
        if (c.nvars != nvars) throw Error("pullback.DimensionMismatch", "component variable count differs");
        for (const auto& t : c.terms)
            if (static_cast<int>(t.exp.size()) != nvars || std::any_of(t.exp.begin(), t.exp.end(), [](int e) { return e < 0; }))
                throw Error("pullback.InvalidMap", "bad exponent vector");
    }
    for (const auto& c : comp) {
        jac.emplace_back();
        for (int j = 0; j < nvars; ++j) jac.back().push_back(c.derivative(j));
    }
}

std::vector<cplx> ProperPolyMap::operator()(const std::vector<cplx>& z) const {
    std::vector<cplx> w;
    for (const auto& c : comp) w.push_back(c(z));
    return w;
}

Eigen::MatrixXcd ProperPolyMap::jacobian(const std::vector<cplx>& z) const {
    Eigen::MatrixXcd J(n_out(), n_in());
    for (int k = 0; k < n_out(); ++k)
        for (int j = 0; j < n_in(); ++j) J(k, j) = jac[k][j](z);
    return J;
}

std::vector<cplx> complex_coords(const Vec& x) {
    if (x.size() % 2 != 0) throw Error("pullback.DimensionMismatch", "real dimension must be even");
    std::vector<cplx> z(x.size() / 2);
    for (Eigen::Index k = 0; k < x.size() / 2; ++k) z[k] = cplx(x[2 * k], x[2 * k + 1]);
    return z;
}

Vec real_coords(const std::vector<cplx>& z) {
    Vec x(2 * z.size());
    for (std::size_t k = 0; k < z.size(); ++k) x[2 * k] = z[k].real(), x[2 * k + 1] = z[k].imag();
    return x;
}

Vec ProperPolyMap::apply(const Vec& x) const {
    if (x.size() != 2 * n_in()) throw Error("pullback.DimensionMismatch", "point has the wrong dimension");
    return real_coords((*this)(complex_coords(x)));
}

static MultiPoly monomial(int nvars, std::vector<int> exp, cplx c) {
    MultiPoly p;
    p.nvars = nvars;
    p.terms.push_back({std::move(exp), c});
    return p;
}

ProperPolyMap identity_map(int n, cplx scale) {
    std::vector<MultiPoly> c;
    for (int j = 0; j < n; ++j) {
        std::vector<int> e(n, 0);
        e[j] = 1;
        c.push_back(monomial(n, e, scale));
    }
    return ProperPolyMap(n, std::move(c));
}

ProperPolyMap quadric_map() {
    MultiPoly q;
    q.nvars = 2;
    q.terms = {{{2, 0}, 1.0}, {{0, 2}, 1.0}};
    return ProperPolyMap(2, {monomial(2, {1, 0}, 1.0), monomial(2, {0, 1}, 1.0), q});
}

double spectral_norm(const Eigen::MatrixXcd& A, int max_iter, double tol) {
    if (A.size() == 0) return 0.0;
    const Eigen::MatrixXcd G = A.adjoint() * A;
    // fixed start with unequal entries, so it is not orthogonal to the top vector by accident of symmetry
    Eigen::VectorXcd v(G.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(1.0 + 0.1 * i, 0.05 * i);
    v.normalize();
    double lam = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd w = G * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        const double next = v.dot(w).real();
        v = w / nw;
        if (std::abs(next - lam) <= tol * std::max(1.0, std::abs(next))) {
            lam = next;
            break;
        }
        lam = next;
    }
    // the Rayleigh quotient of the final vector
    lam = std::max(lam, v.dot(G * v).real());
    return std::sqrt(std::max(0.0, lam));
}

double jacobian_fd_error(const ProperPolyMap& F, const std::vector<cplx>& z, double h) {
    const Eigen::MatrixXcd J = F.jacobian(z);
    double worst = 0.0;
    for (int j = 0; j < F.n_in(); ++j) {
        // holomorphic: dF/dx_j = dF/dz_j and dF/dy_j = i dF/dz_j
        for (cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
            std::vector<cplx> zp = z, zm = z;
            zp[j] += h * dir;
            zm[j] -= h * dir;
            auto fp = F(zp), fm = F(zm);
            for (int k = 0; k < F.n_out(); ++k) {
                const cplx fd = (fp[k] - fm[k]) / (2.0 * h);
                const cplx sym = J(k, j) * dir;
                worst = std::max(worst, std::abs(fd - sym) / std::max(1.0, std::abs(sym)));
            }
        }
    }
    return worst;
}

static Vec random_in_ball(Rng& rng, int m, double radius) {
    Vec x(m);
    for (int i = 0; i < m; ++i) x[i] = rng.normal();
    const double n = x.norm();
    if (n == 0.0) return zeros(m);
    return x * (radius * std::pow(rng.uniform(), 1.0 / m) / n);
}

static void check_shell(const ShellSpec& s) {
    if (!(s.r >= 0.0) || !(s.R > s.r) || !(s.box >= 0.0) || !std::isfinite(s.R))
        throw Error("pullback.InvalidShell", "need 0 <= r < R and box >= 0");
}

ShellNorm df_norm_max(const ProperPolyMap& F, const ShellSpec& shell, std::size_t samples, std::uint64_t seed,
                      int threads) {
    check_shell(shell);
    const int m = 2 * F.n_in();
    const double box = shell.box > 0.0 ? shell.box : shell.R;
    ShellNorm out;
    out.shell = shell;
    out.seed = seed;
    // points come from one serial stream so the result does not depend on the thread count
    Rng rng(seed);
    std::vector<Vec> pts(samples);
    for (auto& p : pts) p = random_in_ball(rng, m, box);
    out.tried = samples;

    threads = std::max(1, threads);
    std::vector<double> best(threads, -1.0);
    std::vector<std::size_t> arg(threads, 0), acc(threads, 0);
    auto work = [&](int t) {
        for (std::size_t i = t; i < pts.size(); i += threads) {
            auto z = complex_coords(pts[i]);
            double nf = 0.0;
            for (cplx w : F(z)) nf += std::norm(w);
            if (!shell.contains(std::sqrt(nf))) continue;
            ++acc[t];
            double d = spectral_norm(F.jacobian(z));
            if (d > best[t] || (d == best[t] && i < arg[t])) best[t] = d, arg[t] = i;
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    double d = -1.0;
    std::size_t a = 0;
    for (int t = 0; t < threads; ++t) {
        out.accepted += acc[t];
        if (best[t] > d || (best[t] == d && arg[t] < a)) d = best[t], a = arg[t];
    }
    if (out.accepted == 0) throw Error("pullback.EmptyShellSample", "no sample landed in the shell");
    out.d = d;
    out.argmax = pts[a];
    return out;
}

bool ScalingPlan::holds() const {
    if (A.size() != B.size() || d.size() != B.size()) return false;
    for (std::size_t n = 0; n < B.size(); ++n) {
        if (!(A[n] * d[n] <= B[n])) return false;
        if (n > 0 && !(B[n] > B[n - 1])) return false;
    }
    return true;
}

ScalingPlan plan_scaling(const std::vector<double>& A, const std::vector<ShellNorm>& shells, double safety,
                         double delta_inc) {
    if (A.size() != shells.size()) throw Error("pullback.InvalidInput", "one target length per shell");
    if (!(safety >= 1.0) || !(delta_inc > 0.0)) throw Error("pullback.InvalidInput", "need safety >= 1 and delta > 0");
    for (std::size_t n = 0; n < A.size(); ++n) {
        if (!(A[n] > 0.0) || (n > 0 && !(A[n] > A[n - 1])))
            throw Error("pullback.InvalidInput", "target lengths must be positive and increasing");
    }
    ScalingPlan p;
    p.shells = shells;
    p.A = A;
    p.safety = safety;
    p.delta_inc = delta_inc;
    for (std::size_t n = 0; n < A.size(); ++n) {
        p.d.push_back(shells[n].d);
        double b = A[n] * shells[n].d * safety;
        if (n > 0) b = std::max(b, p.B.back() + delta_inc);
        p.B.push_back(b);
    }
    return p;
}

Polyline pushforward(const ProperPolyMap& F, const Polyline& p, int refine) {
    Polyline q;
    if (p.pts.empty()) return q;
    refine = std::max(1, refine);
    q.pts.push_back(F.apply(p.pts[0]));
    for (std::size_t i = 1; i < p.pts.size(); ++i)
        for (int k = 1; k <= refine; ++k) {
            double u = double(k) / refine;
            q.pts.push_back(F.apply((1.0 - u) * p.pts[i - 1] + u * p.pts[i]));
        }
    return q;
}

LengthAudit length_audit(const ProperPolyMap& F, const Polyline& p, double d, double slack, int refine) {
    LengthAudit a;
    a.length = p.length();
    a.image_length = pushforward(F, p, refine).length();
    a.bound = (1.0 + slack) * d * a.length;
    a.pass = a.image_length <= a.bound;
    return a;
}

static bool in_shell(const ProperPolyMap& F, const ShellSpec& s, const Vec& x) {
    return s.contains(F.apply(x).norm());
}

std::vector<Polyline> random_shell_polylines(const ProperPolyMap& F, const ShellSpec& shell, int count,
                                             std::uint64_t seed, int segments, double step, int checks) {
    check_shell(shell);
    const int m = 2 * F.n_in();
    const double box = shell.box > 0.0 ? shell.box : shell.R;
    if (step <= 0.0) step = 0.1 * (shell.R - shell.r);
    Rng rng(seed);
    std::vector<Polyline> out;
    int misses = 0;
    while (static_cast<int>(out.size()) < count) {
        Vec x = random_in_ball(rng, m, box);
        if (!in_shell(F, shell, x)) {
            if (++misses > 1000000) throw Error("pullback.EmptyShellSample", "could not place a start point");
            continue;
        }
        Polyline p;
        p.pts.push_back(x);
        for (int s = 0; s < segments; ++s) {
            bool placed = false;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                Vec dir(m);
                for (int i = 0; i < m; ++i) dir[i] = rng.normal();
                const double len = step * rng.uniform(0.25, 1.0) * (attempt < 100 ? 1.0 : 0.25);
                Vec y = p.pts.back() + dir.normalized() * len;
                bool ok = true;
                for (int c = 1; c <= checks && ok; ++c) {
                    double u = double(c) / checks;
                    ok = in_shell(F, shell, (1.0 - u) * p.pts.back() + u * y);
                }
                if (ok) p.pts.push_back(y), placed = true;
            }
            if (!placed) break;
        }
        if (p.pts.size() >= 2) out.push_back(std::move(p));
    }
    return out;
}

double min_norm_on_sphere(const ProperPolyMap& F, double rho, int samples, std::uint64_t seed) {
    const int m = 2 * F.n_in();
    Rng rng(seed);
    double lo = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        Vec x(m);
        for (int i = 0; i < m; ++i) x[i] = rng.normal();
        lo = std::min(lo, F.apply(x.normalized() * rho).norm());
    }
    return lo;
}

nlohmann::json to_json(const MultiPoly& p) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& t : p.terms) a.push_back({{"exp", t.exp}, {"coef", {t.coef.real(), t.coef.imag()}}});
    return a;
}

MultiPoly multipoly_from_json(const nlohmann::json& j, int nvars) {
    MultiPoly p;
    p.nvars = nvars;
    for (const auto& t : j) {
        PolyTerm u;
        u.exp = t.at("exp").get<std::vector<int>>();
        const auto& c = t.at("coef");
        u.coef = c.is_array() ? cplx(c.at(0).get<double>(), c.at(1).get<double>()) : cplx(c.get<double>(), 0.0);
        p.terms.push_back(std::move(u));
    }
    return p;
}

nlohmann::json to_json(const ProperPolyMap& F) {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& p : F.comp) c.push_back(to_json(p));
    return {{"nvars", F.n_in()}, {"components", c}};
}

ProperPolyMap map_from_json(const nlohmann::json& j) {
    try {
        const int n = j.at("nvars").get<int>();
        std::vector<MultiPoly> c;
        for (const auto& p : j.at("components")) c.push_back(multipoly_from_json(p, n));
        return ProperPolyMap(n, std::move(c));
    } catch (const nlohmann::json::exception& e) {
        throw Error("pullback.InvalidMap", e.what());
    }
}

nlohmann::json to_json(const ScalingPlan& p) {
    nlohmann::json sh = nlohmann::json::array();
    for (std::size_t n = 0; n < p.B.size(); ++n) {
        const auto& s = p.shells[n];
        sh.push_back({{"r", s.shell.r},
                      {"R", s.shell.R},
                      {"A", p.A[n]},
                      {"d", p.d[n]},
                      {"B", p.B[n]},
                      {"samples_tried", s.tried},
                      {"samples_accepted", s.accepted},
                      {"seed", s.seed}});
    }
    return {{"safety", p.safety},
            {"delta_inc", p.delta_inc},
            {"d_status", p.certified ? "certified" : "sampled"},
            {"holds", p.holds()},
            {"shells", sh}};
}

}  // namespace lab
