#include <cmath>
#include <limits>
#include <vector>

#include "labyrinth/kernels.hpp"

namespace lab::kernels::scalar {

void horner(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n, double* outr,
            double* outi, double* mag) {
    for (std::size_t i = 0; i < n; ++i) {
        double xr = zr[i], xi = zi[i];
        double pr = a[deg].real(), pi = a[deg].imag();
        for (int k = deg - 1; k >= 0; --k) {
            double t = pr * xr - pi * xi + a[k].real();
            pi = pr * xi + pi * xr + a[k].imag();
            pr = t;
        }
        outr[i] = pr;
        outi[i] = pi;
        if (mag) {
            double r = std::sqrt(xr * xr + xi * xi);
            double m = std::abs(a[deg]);
            for (int k = deg - 1; k >= 0; --k) m = m * r + std::abs(a[k]);
            mag[i] = m;
        }
    }
}

void taylor_remainder(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n,
                      double s, double* out) {
    std::vector<double> br(deg + 1), bi(deg + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k <= deg; ++k) {
            br[k] = a[k].real();
            bi[k] = a[k].imag();
        }
        double xr = zr[i], xi = zi[i];
        for (int j = 0; j < deg; ++j)
            for (int k = deg - 1; k >= j; --k) {
                br[k] += br[k + 1] * xr - bi[k + 1] * xi;
                bi[k] += br[k + 1] * xi + bi[k + 1] * xr;
            }
        double acc = 0.0;
        for (int j = deg; j >= 1; --j) acc = (acc + std::hypot(br[j], bi[j])) * s;
        out[i] = acc;
    }
}

double min_margin(const double* const* soa, int dim, std::size_t n, const double* normal, double offset,
                  const double* penalty) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) dot += normal[d] * soa[d][i];
        double m = offset - dot + (penalty ? penalty[i] : 0.0);
        if (m < best) best = m;
    }
    return best;
}

}  // namespace lab::kernels::scalar
