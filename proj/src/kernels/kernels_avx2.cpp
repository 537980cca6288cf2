// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>
#include <limits>
#include <vector>

#include "labyrinth/kernels.hpp"

namespace lab::kernels::avx2 {

namespace {

inline double hmin(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v), hi = _mm256_extractf128_pd(v, 1);
    __m128d m = _mm_min_pd(lo, hi);
    return std::min(_mm_cvtsd_f64(m), _mm_cvtsd_f64(_mm_unpackhi_pd(m, m)));
}

}  // namespace

void horner(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n, double* outr,
            double* outi, double* mag) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xr = _mm256_loadu_pd(zr + i), xi = _mm256_loadu_pd(zi + i);
        __m256d pr = _mm256_set1_pd(a[deg].real()), pi = _mm256_set1_pd(a[deg].imag());
        for (int k = deg - 1; k >= 0; --k) {
            __m256d ar = _mm256_set1_pd(a[k].real()), ai = _mm256_set1_pd(a[k].imag());
            __m256d t = _mm256_fmadd_pd(pr, xr, _mm256_fnmadd_pd(pi, xi, ar));
            pi = _mm256_fmadd_pd(pr, xi, _mm256_fmadd_pd(pi, xr, ai));
            pr = t;
        }
        _mm256_storeu_pd(outr + i, pr);
        _mm256_storeu_pd(outi + i, pi);
        if (mag) {
            __m256d r = _mm256_sqrt_pd(_mm256_fmadd_pd(xr, xr, _mm256_mul_pd(xi, xi)));
            __m256d m = _mm256_set1_pd(std::abs(a[deg]));
            for (int k = deg - 1; k >= 0; --k) m = _mm256_fmadd_pd(m, r, _mm256_set1_pd(std::abs(a[k])));
            _mm256_storeu_pd(mag + i, m);
        }
    }
    if (i < n) scalar::horner(a, deg, zr + i, zi + i, n - i, outr + i, outi + i, mag ? mag + i : nullptr);
}

void taylor_remainder(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n,
                      double s, double* out) {
    // four lanes per coefficient, kept in plain doubles
    std::vector<double> br(4 * (deg + 1)), bi(4 * (deg + 1));
    std::size_t i = 0;
    const __m256d vs = _mm256_set1_pd(s);
    for (; i + 4 <= n; i += 4) {
        for (int k = 0; k <= deg; ++k) {
            _mm256_storeu_pd(&br[4 * k], _mm256_set1_pd(a[k].real()));
            _mm256_storeu_pd(&bi[4 * k], _mm256_set1_pd(a[k].imag()));
        }
        __m256d xr = _mm256_loadu_pd(zr + i), xi = _mm256_loadu_pd(zi + i);
        for (int j = 0; j < deg; ++j)
            for (int k = deg - 1; k >= j; --k) {
                __m256d ur = _mm256_loadu_pd(&br[4 * (k + 1)]), ui = _mm256_loadu_pd(&bi[4 * (k + 1)]);
                __m256d cr = _mm256_loadu_pd(&br[4 * k]), ci = _mm256_loadu_pd(&bi[4 * k]);
                _mm256_storeu_pd(&br[4 * k], _mm256_add_pd(cr, _mm256_fmsub_pd(ur, xr, _mm256_mul_pd(ui, xi))));
                _mm256_storeu_pd(&bi[4 * k], _mm256_add_pd(ci, _mm256_fmadd_pd(ur, xi, _mm256_mul_pd(ui, xr))));
            }
        __m256d acc = _mm256_setzero_pd();
        for (int j = deg; j >= 1; --j) {
            __m256d rj = _mm256_loadu_pd(&br[4 * j]), ij = _mm256_loadu_pd(&bi[4 * j]);
            __m256d m = _mm256_sqrt_pd(_mm256_fmadd_pd(rj, rj, _mm256_mul_pd(ij, ij)));
            acc = _mm256_mul_pd(_mm256_add_pd(acc, m), vs);
        }
        _mm256_storeu_pd(out + i, acc);
    }
    if (i < n) scalar::taylor_remainder(a, deg, zr + i, zi + i, n - i, s, out + i);
}

double min_margin(const double* const* soa, int dim, std::size_t n, const double* normal, double offset,
                  const double* penalty) {
    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    const __m256d off = _mm256_set1_pd(offset);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d dot = _mm256_setzero_pd();
        for (int d = 0; d < dim; ++d) dot = _mm256_fmadd_pd(_mm256_set1_pd(normal[d]), _mm256_loadu_pd(soa[d] + i), dot);
        __m256d m = _mm256_sub_pd(off, dot);
        if (penalty) m = _mm256_add_pd(m, _mm256_loadu_pd(penalty + i));
        best = _mm256_min_pd(best, m);
    }
    double out = hmin(best);
    if (i < n) {
        const double* tail[16];
        for (int d = 0; d < dim; ++d) tail[d] = soa[d] + i;
        out = std::min(out, scalar::min_margin(tail, dim, n - i, normal, offset, penalty ? penalty + i : nullptr));
    }
    return out;
}

}  // namespace lab::kernels::avx2
