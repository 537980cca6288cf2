#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#ifdef LAB_HAVE_OPENBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

#include "labyrinth/runge.hpp"

namespace lab {

namespace {

// Largest step in [0, 1] keeping v + a dv >= 0.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
}

}  // namespace

// Primal:  min c'x  s.t.  Gx + s = h, s >= 0.   Dual:  max -h'z  s.t.  G'z + c = 0, z >= 0.
// Newton steps reduce to the normal equations G' (Z/S) G dx = rhs, solved through a Cholesky of G' (Z/S) G,
// or a QR of (Z/S)^(1/2) G when that is too ill-conditioned.
LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                  const LpOptions& opt) {
    const Eigen::Index n = c.size(), p = G.rows();
    if (G.cols() != n || h.size() != p) throw Error("runge.LpShape", "inconsistent LP dimensions");
    LpResult res;
    // least-squares start shifted into the interior
    Eigen::MatrixXd GtG = G.transpose() * G;
    GtG.diagonal().array() += 1e-12 * std::max(1.0, GtG.diagonal().maxCoeff());
    Eigen::LLT<Eigen::MatrixXd> ls(GtG);
    Eigen::VectorXd x = ls.solve(G.transpose() * h);
    Eigen::VectorXd s = h - G * x;
    Eigen::VectorXd z = -G * ls.solve(c);
    double sh = -s.minCoeff(), zh = -z.minCoeff();
    if (sh >= 0.0) s.array() += 1.0 + sh;
    if (zh >= 0.0) z.array() += 1.0 + zh;
    const double hn = std::max(1.0, h.norm()), cn = std::max(1.0, c.norm());
    Eigen::VectorXd dx(n), ds(p), dz(p);

    Eigen::MatrixXd Rt(n, n);
    // (G' D G) y = r  via the triangular factor of D^(1/2) G
    auto normal_solve = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
        Eigen::VectorXd y = Rt.transpose().triangularView<Eigen::Lower>().solve(r);
        return Rt.triangularView<Eigen::Upper>().solve(y);
    };
    auto newton = [&](const Eigen::VectorXd& rd, const Eigen::VectorXd& rp, const Eigen::VectorXd& rc) {
        Eigen::VectorXd w = (-rc + z.cwiseProduct(rp)).cwiseQuotient(s);
        Eigen::VectorXd rhs = -rd - G.transpose() * w;
        dx = normal_solve(rhs);
        // one step of iterative refinement against the unfactored operator
        Eigen::VectorXd d = z.cwiseQuotient(s);
        Eigen::VectorXd res = rhs - G.transpose() * (d.cwiseProduct(G * dx));
        dx += normal_solve(res);
        Eigen::VectorXd gdx = G * dx;
        dz = w + z.cwiseProduct(gdx).cwiseQuotient(s);
        ds = -rp - gdx;
    };

    // the dual residual can stall on a round-off floor or blow up near degenerate optima; keep the best iterate
    Eigen::VectorXd best_x = x;
    double best_merit = std::numeric_limits<double>::infinity(), best_rd = best_merit;
    for (int it = 0; it < opt.max_iter; ++it) {
        res.iterations = it + 1;
        Eigen::VectorXd rd = G.transpose() * z + c;
        Eigen::VectorXd rp = G * x + s - h;
        double mu = s.dot(z) / static_cast<double>(p);
        double obj = c.dot(x);
        const double erp = rp.norm() / hn, erd = rd.norm() / cn;
        const double merit = std::max({erp / opt.feas_tol, erd / opt.dual_tol, s.dot(z) / (opt.tol * std::max(1.0, std::abs(obj)))});
        if (merit < best_merit) {
            best_merit = merit;
            best_x = x;
        }
        if (merit < 1.0) break;
        best_rd = std::min(best_rd, erd);
        if (erd > 1e6 * std::max(best_rd, opt.dual_tol)) break;
        Eigen::VectorXd dh = z.cwiseQuotient(s).cwiseSqrt();
        const Eigen::MatrixXd W = dh.asDiagonal() * G;
        // Cholesky of W'W is one GEMM; QR of W squares nothing but costs several times more on tall W
        Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, n);
#ifdef LAB_HAVE_OPENBLAS
        // same lower triangle, several times faster than Eigen's portable kernel; one thread keeps sums reproducible
        static std::once_flag single;
        std::call_once(single, [] { openblas_set_num_threads(1); });
        cblas_dsyrk(CblasColMajor, CblasLower, CblasTrans, static_cast<int>(n), static_cast<int>(p), 1.0, W.data(),
                    static_cast<int>(p), 0.0, N.data(), static_cast<int>(n));
#else
        N.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose());
#endif
        // near the optimum D spans many decades; a tiny shift keeps the factor usable and the refinement step
        // below corrects against the unshifted operator
        N.diagonal().array() += 1e-13 * N.diagonal().maxCoeff();
        Eigen::LLT<Eigen::MatrixXd> llt(N);
        if (llt.info() == Eigen::Success) {
            Rt = llt.matrixU();
        } else {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
            Rt = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        }
        bool singular = false;
        for (Eigen::Index i = 0; i < n; ++i) singular |= !(std::abs(Rt(i, i)) > 0.0);
        if (singular) break;

        // predictor
        newton(rd, rp, s.cwiseProduct(z));
        double ap = max_step(s, ds), ad = max_step(z, dz);
        double mu_aff = (s + ap * ds).dot(z + ad * dz) / static_cast<double>(p);
        double sigma = std::pow(mu_aff / mu, 3);
        // corrector
        Eigen::VectorXd rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(p, sigma * mu);
        newton(rd, rp, rc);
        ap = std::min(1.0, 0.99 * max_step(s, ds));
        ad = std::min(1.0, 0.99 * max_step(z, dz));
        Eigen::VectorXd xn = x + ap * dx, sn = s + ap * ds, zn = z + ad * dz;
        if (!xn.allFinite() || !sn.allFinite() || !zn.allFinite()) break;  // keep the last finite iterate
        x = xn;
        s = sn;
        z = zn;
    }
    res.x = best_x;
    res.objective = c.dot(best_x);
    res.converged = best_merit < 1.0 && best_x.allFinite();
    return res;
}

}  // namespace lab
