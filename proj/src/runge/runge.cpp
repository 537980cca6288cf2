#include "labyrinth/runge.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "labyrinth/kernels.hpp"

namespace lab {

namespace {

// The recurrence in precision T, complex products written out (std::complex<long double> goes through
// the slow NaN-checking library multiply).
template <class T>
void arnoldi_eval(const UniPoly& p, cplx z, T& vr, T& vi, std::vector<T>& qr, std::vector<T>& qi) {
    const int D = p.degree();
    qr.assign(D + 1, T(0));
    qi.assign(D + 1, T(0));
    qr[0] = 1;
    const T zr = z.real(), zi = z.imag();
    vr = p.a[0].real();
    vi = p.a[0].imag();
    for (int k = 0; k < D; ++k) {
        T wr = zr * qr[k] - zi * qi[k], wi = zr * qi[k] + zi * qr[k];
        for (int j = 0; j <= k; ++j) {
            const T hr = p.H(j, k).real(), hi = p.H(j, k).imag();
            wr -= hr * qr[j] - hi * qi[j];
            wi -= hr * qi[j] + hi * qr[j];
        }
        const T hr = p.H(k + 1, k).real(), hi = p.H(k + 1, k).imag();
        const T den = hr * hr + hi * hi;
        qr[k + 1] = (wr * hr + wi * hi) / den;
        qi[k + 1] = (wi * hr - wr * hi) / den;
        const T ar = p.a[k + 1].real(), ai = p.a[k + 1].imag();
        vr += ar * qr[k + 1] - ai * qi[k + 1];
        vi += ar * qi[k + 1] + ai * qr[k + 1];
    }
}

}  // namespace

cplx UniPoly::operator()(cplx z) const {
    if (arnoldi()) {
        double vr, vi;
        std::vector<double> qr, qi;
        arnoldi_eval(*this, z, vr, vi, qr, qi);
        return {vr, vi};
    }
    cplx v = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) v = v * z + *it;
    return v;
}

void UniPoly::eval(const std::vector<cplx>& z, std::vector<cplx>& v, std::vector<double>& err) const {
    const std::size_t n = z.size();
    v.resize(n);
    err.resize(n);
    if (a.empty()) {
        std::fill(v.begin(), v.end(), 0.0);
        std::fill(err.begin(), err.end(), 0.0);
        return;
    }
    const int deg = degree();
    if (!arnoldi()) {
        std::vector<double> zr(n), zi(n), vr(n), vi(n), mag(n);
        for (std::size_t i = 0; i < n; ++i) {
            zr[i] = z[i].real();
            zi[i] = z[i].imag();
        }
        kernels::horner(a.data(), deg, zr.data(), zi.data(), n, vr.data(), vi.data(), mag.data());
        const double u = 0x1.0p-53, k = 4.0 * deg;
        const double gamma = k * u / (1.0 - k * u);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = cplx(vr[i], vi[i]);
            err[i] = gamma * mag[i];
        }
        return;
    }
    std::vector<double> qr, qi;
    std::vector<long double> Qr, Qi;
    for (std::size_t i = 0; i < n; ++i) {
        double dr, di;
        long double lr, li;
        arnoldi_eval(*this, z[i], dr, di, qr, qi);
        arnoldi_eval(*this, z[i], lr, li, Qr, Qi);
        v[i] = cplx(static_cast<double>(lr), static_cast<double>(li));
        const long double gap = std::hypot(static_cast<long double>(dr) - lr, static_cast<long double>(di) - li);
        // the final rounding to double, plus the extended run's own error
        err[i] = static_cast<double>(gap) + 0x1.0p-52 * std::abs(v[i]) + 1e-300;
        if (!std::isfinite(dr) || !std::isfinite(di)) err[i] = std::numeric_limits<double>::infinity();
    }
}

std::vector<cplx> UniPoly::values(const std::vector<cplx>& z) const {
    std::vector<cplx> out(z.size(), 0.0);
    if (a.empty()) return out;
    if (!arnoldi()) {
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = (*this)(z[i]);
        return out;
    }
    const int D = degree();
    constexpr std::size_t chunk = 2048;
    Eigen::MatrixXcd Q;
    for (std::size_t s = 0; s < z.size(); s += chunk) {
        const auto m = static_cast<Eigen::Index>(std::min(chunk, z.size() - s));
        Eigen::Map<const Eigen::VectorXcd> w(z.data() + s, m);
        Eigen::Map<Eigen::VectorXcd> v(out.data() + s, m);
        Q.resize(m, D + 1);
        Q.col(0).setOnes();
        v.setConstant(a[0]);
        for (int k = 0; k < D; ++k) {
            Q.col(k + 1) = Q.col(k).cwiseProduct(w);
            Q.col(k + 1).noalias() -= Q.leftCols(k + 1) * H.col(k).head(k + 1);
            Q.col(k + 1) /= H(k + 1, k);
            v += a[k + 1] * Q.col(k + 1);
        }
    }
    return out;
}

UniPoly UniPoly::derivative() const {
    if (arnoldi()) throw Error("runge.Unsupported", "derivative of an Arnoldi-basis polynomial");
    UniPoly d;
    for (std::size_t k = 1; k < a.size(); ++k) d.a.push_back(static_cast<double>(k) * a[k]);
    if (d.a.empty()) d.a.push_back(0.0);
    return d;
}

UniPoly shift_by_constant(const UniPoly& p, cplx C) {
    UniPoly q = p;
    if (q.a.empty()) q.a.push_back(0.0);
    q.a[0] += C;
    return q;
}

// ---- curves and sets ----

Curve Curve::segment(cplx a, cplx b) {
    Curve c;
    c.kind = Segment;
    c.a = a;
    c.b = b;
    return c;
}

Curve Curve::arc(cplx center, double r, double t0, double t1) {
    Curve c;
    c.kind = Arc;
    c.c = center;
    c.r = r;
    c.t0 = t0;
    c.t1 = t1;
    return c;
}

double Curve::length() const { return kind == Segment ? std::abs(b - a) : r * std::abs(t1 - t0); }

cplx Curve::at(double s) const {
    if (kind == Segment) return a + s * (b - a);
    return c + std::polar(r, t0 + s * (t1 - t0));
}

double Curve::max_modulus() const {
    if (kind == Segment) return std::max(std::abs(a), std::abs(b));
    // the farthest arc point from the origin is along the center direction when that angle is on the arc
    double m = std::max(std::abs(at(0.0)), std::abs(at(1.0)));
    if (std::abs(c) > 0.0) {
        double phi = std::arg(c), lo = std::min(t0, t1), hi = std::max(t0, t1);
        double k = std::ceil((lo - phi) / (2 * M_PI));
        if (phi + 2 * M_PI * k <= hi) m = std::max(m, std::abs(c) + r);
    } else {
        m = std::max(m, r);
    }
    return m;
}

std::vector<cplx> KSet::sample(double spacing) const {
    std::vector<cplx> out;
    for (const auto& c : curves) {
        int n = std::max(2, static_cast<int>(std::ceil(c.length() / spacing)) + 1);
        for (int i = 0; i < n; ++i) out.push_back(c.at(double(i) / (n - 1)));
    }
    return out;
}

std::vector<cplx> KSet::sample_interior(double spacing) const {
    std::vector<cplx> out;
    for (const auto& R : interiors) {
        double h = std::max(spacing, 2.0 * R.radius / 150.0);
        for (double x = R.center.real() - R.radius; x <= R.center.real() + R.radius; x += h)
            for (double y = R.center.imag() - R.radius; y <= R.center.imag() + R.radius; y += h) {
                cplx z(x, y);
                if (std::abs(z - R.center) <= R.radius && x <= R.re_max) out.push_back(z);
            }
    }
    return out;
}

double KSet::max_modulus() const {
    double m = 0.0;
    for (const auto& c : curves) m = std::max(m, c.max_modulus());
    return m;
}

SlabSpec SlabSpec::reference(double L, double eps_small, double nu) {
    SlabSpec s;
    s.level = L;
    s.eps_small = eps_small;
    s.nu = nu;
    const double y1 = std::sqrt(3.0);
    s.K1.curves.push_back(Curve::segment(cplx(1.0, -y1), cplx(1.0, y1)));
    const double x = 1.0 - nu, y = std::sqrt(4.0 - x * x), th = std::atan2(y, x);
    s.K2.curves.push_back(Curve::segment(cplx(x, -y), cplx(x, y)));
    s.K2.curves.push_back(Curve::arc(0.0, 2.0, th, 2.0 * M_PI - th));
    s.K2.interiors.push_back(Region{0.0, 2.0, x});
    return s;
}

bool normable(const Curve& c) {
    return c.kind == Curve::Segment || std::abs(c.t1 - c.t0) >= 2.0 * M_PI * (1.0 - 1e-12);
}

std::vector<double> chebyshev_nodes01(int N) {
    std::vector<double> x(N);
    for (int j = 0; j < N; ++j) x[j] = 0.5 * (1.0 + std::cos((2.0 * j + 1.0) * M_PI / (2.0 * N)));
    return x;
}

double chebyshev_factor(int D, int N) {
    if (D <= 0) return 1.0;
    if (N <= D) return std::numeric_limits<double>::infinity();
    return 1.0 / std::cos(D * M_PI / (2.0 * N));
}

std::vector<cplx> norming_nodes(const Curve& c, int N) {
    if (!normable(c)) throw Error("runge.InvalidSpec", "norming sets need segments or full circles");
    std::vector<cplx> z;
    z.reserve(N);
    if (c.kind == Curve::Segment) {
        for (double x : chebyshev_nodes01(N)) z.push_back(c.a + x * (c.b - c.a));
    } else {
        for (int j = 0; j < N; ++j) z.push_back(c.c + std::polar(c.r, c.t0 + 2.0 * M_PI * j / N));
    }
    return z;
}

double norming_factor(const Curve& c, int D, int N) {
    if (c.kind == Curve::Segment) return chebyshev_factor(D, N);
    if (D <= 0) return 1.0;
    if (N <= 2 * D) return std::numeric_limits<double>::infinity();
    return 1.0 / std::cos(D * M_PI / N);
}

int norming_count(const Curve& c, int D, double spacing, int oversample) {
    return std::max(oversample * (std::max(D, 0) + 1), static_cast<int>(std::ceil(c.length() / spacing)) + 1);
}

bool SlabSpec::use_arnoldi() const {
    if (basis != Basis::Auto) return basis == Basis::Arnoldi;
    for (const KSet* K : {&K1, &K2, &K3})
        for (const auto& c : K->curves)
            if (!normable(c)) return false;
    return true;
}

double SlabSpec::radius() const { return std::max({K1.max_modulus(), K2.max_modulus(), K3.max_modulus(), 1e-300}); }

void SlabSpec::validate() const {
    if (!(nu > 0.0 && nu < 1.0)) throw Error("runge.InvalidSpec", "need 0 < nu < 1");
    if (!(eps_small > 0.0)) throw Error("runge.InvalidSpec", "need eps_small > 0");
    if (K1.empty()) throw Error("runge.InvalidSpec", "K1 is empty");
    if (!(floor3 > 0.0) || !(cap3 > 0.0)) throw Error("runge.InvalidSpec", "need floor3 > 0 and cap3 > 0");
}

// ---- certification ----

namespace {

// NaN counts against the certificate
double low(double a, double b) { return std::isnan(b) ? -std::numeric_limits<double>::infinity() : std::min(a, b); }
double high(double a, double b) { return std::isnan(b) ? std::numeric_limits<double>::infinity() : std::max(a, b); }

}  // namespace

// min(B' s, local Taylor remainder) plus a Horner rounding bound
BoundedValues bounded_values(const UniPoly& p, const std::vector<cplx>& z, double s, double bprime) {
    const std::size_t n = z.size();
    BoundedValues e;
    e.re.resize(n);
    e.im.resize(n);
    e.margin.resize(n);
    std::vector<double> zr(n), zi(n), mag(n), tay(n);
    for (std::size_t i = 0; i < n; ++i) {
        zr[i] = z[i].real();
        zi[i] = z[i].imag();
    }
    const int deg = p.degree();
    kernels::horner(p.a.data(), deg, zr.data(), zi.data(), n, e.re.data(), e.im.data(), mag.data());
    kernels::taylor_remainder(p.a.data(), deg, zr.data(), zi.data(), n, s, tay.data());
    const double u = 0x1.0p-53, k = 4.0 * deg;
    const double gamma = k * u / (1.0 - k * u);
    for (std::size_t i = 0; i < n; ++i)
        e.margin[i] = (s > 0.0 ? std::min(bprime * s, tay[i] * (1.0 + gamma)) : 0.0) + gamma * mag[i];
    return e;
}

BoundCertificate certify(const UniPoly& p, const SlabSpec& spec) { return certify(p, spec, spec.sample_spacing()); }

namespace {

BoundCertificate certify_norming(const UniPoly& p, const SlabSpec& spec, double spacing) {
    BoundCertificate c;
    c.method = "norming";
    c.spacing = spacing;
    c.radius = spec.radius();
    c.need_k1 = spec.level + 1.0;
    c.need_k2 = spec.eps_small;
    c.need_k3 = -spec.floor3;
    c.need_k3_abs = spec.cap3;
    c.K3_empty = spec.K3.empty();
    const double inf = std::numeric_limits<double>::infinity();
    const int D = std::max(p.degree(), 0);
    std::vector<cplx> v;
    std::vector<double> err;
    auto nodes = [&](const Curve& cv, double& factor, int over) {
        int N = norming_count(cv, D, spacing, over);
        factor = norming_factor(cv, D, N);
        auto z = norming_nodes(cv, N);
        p.eval(z, v, err);
        c.samples += z.size();
    };
    // |Re p - mid| <= factor * (half range + rounding) along the curve
    // a curve whose coarse bound misses `need` is redone at the fine count
    auto min_re = [&](const KSet& K, double& sampled, double& certified, double need) {
        sampled = certified = K.empty() ? 0.0 : inf;
        for (const auto& cv : K.curves) {
            double lo = inf, cert = -inf;
            for (int over : {kOversample, kOversampleK3}) {
                double f, hi = -inf, e = 0.0;
                nodes(cv, f, over);
                lo = inf;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    lo = low(lo, v[i].real());
                    hi = high(hi, v[i].real());
                    e = high(e, err[i]);
                }
                cert = 0.5 * (lo + hi) - f * (0.5 * (hi - lo) + e);
                if (cert >= need) break;
            }
            sampled = low(sampled, lo);
            certified = low(certified, cert);
        }
        c.max_margin = std::max(c.max_margin, sampled - certified);
    };
    auto max_abs = [&](const KSet& K, double& sampled, double& certified, int over) {
        sampled = certified = 0.0;
        for (const auto& cv : K.curves) {
            double f;
            nodes(cv, f, over);
            double m = 0.0, me = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                m = high(m, std::abs(v[i]));
                me = high(me, std::abs(v[i]) + err[i]);
            }
            sampled = high(sampled, m);
            certified = high(certified, f * me);
        }
        c.max_margin = std::max(c.max_margin, certified - sampled);
    };
    min_re(spec.K1, c.k1_sampled, c.k1_certified, c.need_k1);
    max_abs(spec.K2, c.k2_sampled, c.k2_certified, kOversample);
    // K3 is the bulk of the nodes. Both bounds come from one pass at the coarse count; a curve is redone at the
    // fine count only when the coarse factor leaves its bound on the wrong side of the requirement.
    c.k3_sampled = c.k3_certified = spec.K3.empty() ? 0.0 : inf;
    c.k3_abs_sampled = c.k3_abs_certified = 0.0;
    for (const auto& cv : spec.K3.curves) {
        double lo = 0, hi = 0, cert_re = 0, m = 0, cert_abs = 0;
        for (int over : {kOversample, kOversampleK3}) {
            double f;
            nodes(cv, f, over);
            lo = inf, hi = -inf, m = 0.0;
            double e = 0.0, me = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                lo = low(lo, v[i].real());
                hi = high(hi, v[i].real());
                e = high(e, err[i]);
                m = high(m, std::abs(v[i]));
                me = high(me, std::abs(v[i]) + err[i]);
            }
            cert_re = 0.5 * (lo + hi) - f * (0.5 * (hi - lo) + e);
            cert_abs = f * me;
            if (cert_re >= c.need_k3 && cert_abs <= c.need_k3_abs) break;
        }
        c.k3_sampled = low(c.k3_sampled, lo);
        c.k3_certified = low(c.k3_certified, cert_re);
        c.k3_abs_sampled = high(c.k3_abs_sampled, m);
        c.k3_abs_certified = high(c.k3_abs_certified, cert_abs);
        c.max_margin = std::max({c.max_margin, lo - cert_re, cert_abs - m});
    }
    auto zi = spec.K2.sample_interior(spacing);
    p.eval(zi, v, err);
    for (const auto& x : v) c.k2_interior = high(c.k2_interior, std::abs(x));
    return c;
}

}  // namespace

BoundCertificate certify(const UniPoly& p, const SlabSpec& spec, double spacing) {
    if (p.arnoldi()) return certify_norming(p, spec, spacing);
    BoundCertificate c;
    c.spacing = spacing;
    c.radius = spec.radius();
    for (int k = 1; k <= p.degree(); ++k) c.derivative_bound += k * std::abs(p.a[k]) * std::pow(c.radius, k - 1);
    c.need_k1 = spec.level + 1.0;
    c.need_k2 = spec.eps_small;
    c.need_k3 = -spec.floor3;
    c.need_k3_abs = spec.cap3;
    c.K3_empty = spec.K3.empty();
    const double inf = std::numeric_limits<double>::infinity();

    // consecutive curve samples are at most `spacing` apart, so every curve point is within half of it
    const double cover = 0.5 * spacing;
    auto z1 = spec.K1.sample(spacing);
    BoundedValues e1 = bounded_values(p, z1, cover, c.derivative_bound);
    c.k1_sampled = c.k1_certified = inf;
    for (std::size_t i = 0; i < z1.size(); ++i) {
        c.k1_sampled = low(c.k1_sampled, e1.re[i]);
        c.k1_certified = low(c.k1_certified, e1.re[i] - e1.margin[i]);
        c.max_margin = std::max(c.max_margin, e1.margin[i]);
    }
    auto modulus_pass = [&](const KSet& K, double& sampled, double& certified) {
        sampled = certified = 0.0;
        auto z = K.sample(spacing);
        BoundedValues e = bounded_values(p, z, cover, c.derivative_bound);
        for (std::size_t i = 0; i < z.size(); ++i) {
            double v = std::hypot(e.re[i], e.im[i]);
            sampled = high(sampled, v);
            certified = high(certified, v + e.margin[i]);
            c.max_margin = std::max(c.max_margin, e.margin[i]);
        }
        c.samples += z.size();
    };
    modulus_pass(spec.K2, c.k2_sampled, c.k2_certified);
    {
        auto z3 = spec.K3.sample(spacing);
        BoundedValues e3 = bounded_values(p, z3, cover, c.derivative_bound);
        c.k3_sampled = c.k3_certified = z3.empty() ? 0.0 : inf;
        c.k3_abs_sampled = c.k3_abs_certified = 0.0;
        for (std::size_t i = 0; i < z3.size(); ++i) {
            c.k3_sampled = low(c.k3_sampled, e3.re[i]);
            c.k3_certified = low(c.k3_certified, e3.re[i] - e3.margin[i]);
            double v = std::hypot(e3.re[i], e3.im[i]);
            c.k3_abs_sampled = high(c.k3_abs_sampled, v);
            c.k3_abs_certified = high(c.k3_abs_certified, v + e3.margin[i]);
            c.max_margin = std::max(c.max_margin, e3.margin[i]);
        }
        c.samples += z3.size();
    }
    c.samples += z1.size();
    for (cplx z : spec.K2.sample_interior(spacing)) c.k2_interior = std::max(c.k2_interior, std::abs(p(z)));
    return c;
}

BoundCertificate certify_refined(const UniPoly& p, const SlabSpec& spec, int halvings) {
    double s = spec.sample_spacing();
    BoundCertificate c = certify(p, spec, s);
    // finer spacing only helps when the sampled values already clear the thresholds
    for (int i = 0; i < halvings && !c.valid(); ++i) {
        if (c.k1_sampled < c.need_k1 || c.k2_sampled > c.need_k2 || (!c.K3_empty && (c.k3_sampled < c.need_k3 || c.k3_abs_sampled > c.need_k3_abs))) break;
        s *= 0.5;
        c = certify(p, spec, s);
    }
    return c;
}

// ---- LP fit ----

std::vector<int> default_schedule() { return {4, 8, 16, 32, 64, 128}; }

UniPoly fit_degree(const SlabSpec& spec, int D, RungeAttempt* info) {
    spec.validate();
    if (D < 0) throw Error("runge.InvalidSpec", "negative degree");
    const double R = spec.radius();
    const double s = spec.sample_spacing();
    const int nc = D + 1, n = 2 * nc + 1;  // alpha_k, beta_k, t
    const double target = spec.level + 2.0;
    const bool use3 = std::isfinite(spec.floor3) || std::isfinite(spec.cap3);
    const bool arn = spec.use_arnoldi() && D > 0;
    const double box = 1e8;

    std::vector<cplx> zs;
    std::vector<int> set;  // 1, 2, 3
    for (cplx z : spec.K1.sample(s)) zs.push_back(z), set.push_back(1);
    for (cplx z : spec.K2.sample(s)) zs.push_back(z), set.push_back(2);
    if (use3)
        for (cplx z : spec.K3.sample(s)) zs.push_back(z), set.push_back(3);
    Eigen::Index M = static_cast<Eigen::Index>(zs.size());

    // basis values at every sample: scaled monomials (z/R)^k, or the Arnoldi vectors of the sample set
    Eigen::MatrixXcd B(M, nc);
    Eigen::MatrixXcd H;
    if (!arn) {
        for (Eigen::Index i = 0; i < M; ++i) {
            cplx w = zs[i] / R, pk = 1.0;
            for (int k = 0; k < nc; ++k, pk *= w) B(i, k) = pk;
        }
    } else {
        if (M < 2 * nc) throw Error("runge.InvalidSpec", "too few samples for the degree");
        H = Eigen::MatrixXcd::Zero(nc, D);
        Eigen::VectorXcd zv(M);
        for (Eigen::Index i = 0; i < M; ++i) zv[i] = zs[i];
        B.col(0).setOnes();
        const double sm = std::sqrt(static_cast<double>(M));
        for (int k = 0; k < D; ++k) {
            Eigen::VectorXcd w = zv.cwiseProduct(B.col(k));
            for (int pass = 0; pass < 2; ++pass)  // orthogonalise twice
                for (int j = 0; j <= k; ++j) {
                    cplx h = B.col(j).dot(w) / static_cast<double>(M);
                    H(j, k) += h;
                    w -= h * B.col(j);
                }
            double hn = w.norm() / sm;
            if (!(hn > 1e-14 * std::max(1.0, R))) throw Error("runge.InvalidSpec", "Arnoldi breakdown: samples too few or degenerate");
            H(k + 1, k) = hn;
            B.col(k + 1) = w / hn;
        }
    }

    // constraint rows of one sample, by kind: K1 has two (Re >= target, Re <= cap/2), K2 four (+-Re, +-Im <= t),
    // K3 five (floor, then +-Re, +-Im <= cap/2). Rows are activated one at a time.
    // Without the K1 ceiling, a term with no later pieces nearby grows without limit along its own segment and the
    // norming bound on min Re, which pays a fraction of the range, is lost.
    const int kinds[4] = {0, 2, 4, 5};
    auto row_of = [&](Eigen::Index i, int k, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> r) -> double {
        r.setZero();
        const bool imag = (set[i] == 3 ? k - 1 : k) >= 2;
        const double sg = (set[i] == 3 ? k - 1 : k) % 2 == 0 ? 1.0 : -1.0;
        for (int j = 0; j < nc; ++j) {
            const cplx b = B(i, j);
            r[j] = imag ? b.imag() : b.real();
            r[nc + j] = imag ? b.real() : -b.imag();
        }
        if (set[i] == 1) {
            if (k == 1) return 0.5 * spec.cap3;
            r = -r;
            return -target;
        }
        if (set[i] == 3) {
            if (k == 0) {
                r = -r;
                return 0.5 * spec.floor3;
            }
            r *= sg;
            return 0.5 * spec.cap3;
        }
        r *= sg;
        r[n - 1] = -1.0;
        return 0.0;
    };
    auto row_excess = [&](int st, int k, cplx v, double t) {
        if (st == 1 && k == 1) return std::isfinite(spec.cap3) ? v.real() - 0.5 * spec.cap3 : -1.0;
        if (st == 1) return target - v.real();
        if (st == 3 && k == 0) return std::isfinite(spec.floor3) ? -0.5 * spec.floor3 - v.real() : -1.0;
        const int kk = st == 3 ? k - 1 : k;
        const double comp = (kk >= 2 ? v.imag() : v.real()) * (kk % 2 == 0 ? 1.0 : -1.0);
        if (st == 3) return std::isfinite(spec.cap3) ? comp - 0.5 * spec.cap3 : -1.0;
        return comp - t;
    };

    // basis rows at points outside the sample set, same recurrence as above
    auto basis_rows = [&](const std::vector<cplx>& pts) {
        const auto n = static_cast<Eigen::Index>(pts.size());
        Eigen::MatrixXcd Q(n, nc);
        Eigen::Map<const Eigen::VectorXcd> z(pts.data(), n);
        Q.col(0).setOnes();
        // column at a time, so the projection is a gemv over all points
        for (int k = 0; k < D; ++k) {
            if (!arn) {
                Q.col(k + 1) = Q.col(k).cwiseProduct(z) / R;
                continue;
            }
            Q.col(k + 1) = Q.col(k).cwiseProduct(z);
            Q.col(k + 1).noalias() -= Q.leftCols(k + 1) * H.col(k).head(k + 1);
            Q.col(k + 1) /= H(k + 1, k);
        }
        return Q;
    };
    // the certificate's node sets (K3 at the coarse count); the fit has to hold there too, not only on the spaced samples
    std::vector<cplx> vz;
    std::vector<int> vset;
    if (arn)
        for (int st = 1; st <= (use3 ? 3 : 2); ++st) {
            const KSet& K = st == 1 ? spec.K1 : st == 2 ? spec.K2 : spec.K3;
            for (const auto& cv : K.curves)
                for (cplx z : norming_nodes(cv, norming_count(cv, D, s, kOversample)))
                    vz.push_back(z), vset.push_back(st);
        }

    // active row bitmask per sample
    std::vector<unsigned char> active(M, 0);
    auto full_mask = [&](int st) -> unsigned char {
        unsigned char m = 0;
        for (int k = 0; k < kinds[st]; ++k)
            if (st == 2 || std::isfinite(st == 3 && k == 0 ? spec.floor3 : k == 0 ? 0.0 : spec.cap3))
                m |= static_cast<unsigned char>(1u << k);
        return m;
    };
    // seed: evenly spread samples from each set, all their rows
    for (int st = 1; st <= 3; ++st) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < M; ++i)
            if (set[i] == st) idx.push_back(i);
        if (idx.empty()) continue;
        std::size_t want = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(2 * nc + 8));
        for (std::size_t j = 0; j < want; ++j) active[idx[j * idx.size() / want]] = full_mask(st);
    }
    // rows far from binding leave the LP between rounds; a row that comes back after a drop stays for good
    std::vector<unsigned char> sticky(M, 0), dropped(M, 0);
    // the seeded K2 rows bound t from both sides; without them a thinned LP can run off to the box
    for (Eigen::Index i = 0; i < M; ++i)
        if (set[i] == 2) sticky[i] = active[i];

    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c[n - 1] = 1.0;
    Eigen::VectorXd x;
    LpResult lp;
    int cuts = 0;
    double residual = 0.0;
    struct Cut {
        double excess;
        std::size_t i;
        int k;
        bool operator>(const Cut& o) const { return excess > o.excess; }
    };
    for (int round = 0; round < 400; ++round) {
        Eigen::Index nrows = 4 * nc;
        for (Eigen::Index i = 0; i < M; ++i) nrows += std::popcount(static_cast<unsigned>(active[i]));
        Eigen::MatrixXd G(nrows, n);
        Eigen::VectorXd h(nrows);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < M; ++i)
            for (int k = 0; k < kinds[set[i]]; ++k)
                if (active[i] >> k & 1) {
                    h[row] = row_of(i, k, G.row(row));
                    ++row;
                }
        for (int k = 0; k < 2 * nc; ++k)
            for (double sg : {1.0, -1.0}) {
                G.row(row).setZero();
                G(row, k) = sg;
                h[row++] = box;
            }
        lp = solve_lp(c, G, h);
        x = lp.x;
        const double t = x[n - 1];
        Eigen::VectorXcd coef(nc);
        for (int k = 0; k < nc; ++k) coef[k] = cplx(x[k], x[nc + k]);
        Eigen::VectorXcd vals = B * coef;
        // The fit aims inside the certified thresholds (L+2 against L+1, -floor/2 against -floor, ...); a violation
        // below a quarter of that gap cannot decide the certificate, and chasing it costs whole LP rounds.
        // K2 gets half of whatever room sqrt(2) t leaves under eps, or 1e-3 t when there is none.
        const double tol2 = std::max(1e-3 * std::abs(t), 0.5 * (spec.eps_small / std::sqrt(2.0) - std::abs(t)));
        auto tol_of = [&](int st, int k) {
            if (st == 1) return k == 0 ? 0.25 : 0.125 * spec.cap3;
            if (st == 2) return tol2;
            return k == 0 ? 0.25 * spec.floor3 : 0.125 * spec.cap3;
        };
        std::vector<Cut> viol;
        for (Eigen::Index i = 0; i < M; ++i)
            for (int k = 0; k < kinds[set[i]]; ++k) {
                if (active[i] >> k & 1) continue;
                const double e = row_excess(set[i], k, vals[i], t);
                if (e > tol_of(set[i], k)) viol.push_back({e, static_cast<std::size_t>(i), k});
            }
        residual = 0.0;
        for (auto& v : viol) residual = std::max(residual, v.excess);
        const std::size_t cap = std::max<std::size_t>(40, 2 * n);
        if (viol.empty() && !vz.empty()) {
            // exchange step: violated certificate nodes join the sample set
            std::vector<Cut> bad;
            const std::size_t chunk = 4096;
            for (std::size_t a = 0; a < vz.size(); a += chunk) {
                std::vector<cplx> part(vz.begin() + a, vz.begin() + std::min(vz.size(), a + chunk));
                Eigen::VectorXcd pv = basis_rows(part) * coef;
                for (std::size_t i = 0; i < part.size(); ++i) {
                    double worst = 0.0;
                    int wk = -1;
                    for (int k = 0; k < kinds[vset[a + i]]; ++k) {
                        const double e = row_excess(vset[a + i], k, pv[i], t);
                        if (e > tol_of(vset[a + i], k) && e > worst) worst = e, wk = k;
                    }
                    if (wk >= 0) bad.push_back({worst, a + i, wk});
                }
            }
            if (!bad.empty()) {
                std::size_t take = std::min(bad.size(), cap);
                std::partial_sort(bad.begin(), bad.begin() + take, bad.end(), std::greater<>());
                std::vector<cplx> add;
                for (std::size_t j = 0; j < take; ++j) add.push_back(vz[bad[j].i]);
                Eigen::MatrixXcd Q = basis_rows(add);
                B.conservativeResize(M + Q.rows(), Eigen::NoChange);
                B.bottomRows(Q.rows()) = Q;
                for (std::size_t j = 0; j < take; ++j) {
                    zs.push_back(add[j]);
                    set.push_back(vset[bad[j].i]);
                    active.push_back(static_cast<unsigned char>(1u << bad[j].k));
                    sticky.push_back(0);
                    dropped.push_back(0);
                }
                M += Q.rows();
                residual = bad[0].excess;
                cuts += static_cast<int>(take);
                continue;
            }
        }
        if (viol.empty()) break;
        const double slack = 0.5 * std::max(std::abs(t), spec.eps_small);
        for (Eigen::Index i = 0; i < M; ++i)
            for (int k = 0; k < kinds[set[i]]; ++k) {
                const auto bit = static_cast<unsigned char>(1u << k);
                if ((active[i] & bit) && !(sticky[i] & bit) && row_excess(set[i], k, vals[i], t) < -slack) {
                    active[i] &= static_cast<unsigned char>(~bit);
                    dropped[i] |= bit;
                }
            }
        std::size_t take = std::min(viol.size(), cap);
        std::partial_sort(viol.begin(), viol.begin() + take, viol.end(), std::greater<>());
        for (std::size_t j = 0; j < take; ++j) {
            const auto bit = static_cast<unsigned char>(1u << viol[j].k);
            active[viol[j].i] |= bit;
            if (dropped[viol[j].i] & bit) sticky[viol[j].i] |= bit;
        }
        cuts += static_cast<int>(take);
    }
    UniPoly p;
    if (arn) {
        for (int k = 0; k < nc; ++k) p.a.push_back(cplx(x[k], x[nc + k]));
        p.H = std::move(H);
    } else {
        for (int k = 0; k < nc; ++k) p.a.push_back(cplx(x[k], x[nc + k]) / std::pow(R, k));
    }
    if (info) {
        info->degree = D;
        info->t = x[n - 1];
        info->lp_converged = lp.converged;
        info->cuts = cuts;
        info->residual = residual;
    }
    return p;
}

RungeFit fit_runge(const SlabSpec& spec, const std::vector<int>& schedule) {
    spec.validate();
    RungeFit fit;
    double best = std::numeric_limits<double>::infinity();
    for (int D : schedule) {
        RungeAttempt at;
        UniPoly p = fit_degree(spec, D, &at);
        BoundCertificate cert = certify_refined(p, spec);
        at.certified = cert.valid();
        fit.attempts.push_back(at);
        best = std::min(best, at.t);
        if (at.certified) {
            fit.p = std::move(p);
            fit.cert = cert;
            return fit;
        }
    }
    throw DegreeExhausted(best, fit.attempts);
}

nlohmann::json poly_to_json(const UniPoly& p) {
    nlohmann::json arr = nlohmann::json::array();
    for (cplx c : p.a) arr.push_back({c.real(), c.imag()});
    nlohmann::json j = {{"degree", p.degree()}, {"basis", p.arnoldi() ? "arnoldi" : "monomial"}, {"coefficients", arr}};
    if (p.arnoldi()) {
        // upper Hessenberg, column by column: H(0..k+1, k)
        nlohmann::json h = nlohmann::json::array();
        for (Eigen::Index k = 0; k < p.H.cols(); ++k) {
            nlohmann::json col = nlohmann::json::array();
            for (Eigen::Index r = 0; r <= k + 1; ++r) col.push_back({p.H(r, k).real(), p.H(r, k).imag()});
            h.push_back(col);
        }
        j["hessenberg"] = h;
    }
    return j;
}

UniPoly poly_from_json(const nlohmann::json& j) {
    UniPoly p;
    for (const auto& c : j.at("coefficients")) p.a.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    if (j.value("basis", std::string("monomial")) == "arnoldi") {
        const auto& h = j.at("hessenberg");
        const Eigen::Index D = static_cast<Eigen::Index>(h.size());
        if (D != p.degree()) throw Error("runge.InvalidJson", "Hessenberg size does not match the degree");
        p.H = Eigen::MatrixXcd::Zero(D + 1, D);
        for (Eigen::Index k = 0; k < D; ++k) {
            const auto& col = h.at(k);
            if (static_cast<Eigen::Index>(col.size()) != k + 2) throw Error("runge.InvalidJson", "bad Hessenberg column");
            for (Eigen::Index r = 0; r <= k + 1; ++r) p.H(r, k) = cplx(col.at(r).at(0).get<double>(), col.at(r).at(1).get<double>());
        }
    }
    return p;
}

nlohmann::json to_json(const BoundCertificate& c) {
    return {{"method", c.method},
            {"spacing", c.spacing},
            {"radius", c.radius},
            {"derivative_bound", c.derivative_bound},
            {"samples", c.samples},
            {"k1_min_re_sampled", c.k1_sampled},
            {"k1_min_re_certified", c.k1_certified},
            {"k1_required", c.need_k1},
            {"k2_max_abs_sampled", c.k2_sampled},
            {"k2_max_abs_certified", c.k2_certified},
            {"k2_interior_max_abs", c.k2_interior},
            {"k2_required", c.need_k2},
            {"k3_min_re_certified", c.k3_certified},
            {"k3_max_abs_certified", c.k3_abs_certified},
            {"k3_abs_required", std::isfinite(c.need_k3_abs) ? nlohmann::json(c.need_k3_abs) : nlohmann::json("inf")},
            {"k3_required", std::isfinite(c.need_k3) ? nlohmann::json(c.need_k3) : nlohmann::json("-inf")},
            {"max_margin", c.max_margin},
            {"valid", c.valid()}};
}

}  // namespace lab
