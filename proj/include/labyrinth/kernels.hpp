#pragma once

#include <complex>
#include <cstddef>

// Batch kernels with a scalar reference and an AVX2/FMA variant chosen at runtime.
namespace lab::kernels {

enum class Isa { Scalar, Avx2 };

Isa detected_isa();
Isa active_isa();
void force_isa(Isa isa);  // tests and benchmarking; Avx2 is ignored when unsupported
const char* isa_name(Isa isa);

// p(z_i) for n points, coefficients a[0..deg] (lowest first).
// mag (nullable) receives sum_k |a_k| |z_i|^k, the scale of the Horner rounding error.
void horner(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n, double* outr,
            double* outi, double* mag);

// out_i = sum_{j>=1} |p^{(j)}(z_i)/j!| s^j, the exact modulus bound for |p(z_i+h)-p(z_i)| over |h| <= s.
void taylor_remainder(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n,
                      double s, double* out);

// min over i of (offset - normal . v_i + penalty_i); soa[d][i] holds coordinate d of vertex i.
double min_margin(const double* const* soa, int dim, std::size_t n, const double* normal, double offset,
                  const double* penalty);

namespace scalar {
void horner(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n, double* outr,
            double* outi, double* mag);
void taylor_remainder(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n,
                      double s, double* out);
double min_margin(const double* const* soa, int dim, std::size_t n, const double* normal, double offset,
                  const double* penalty);
}  // namespace scalar

namespace avx2 {
void horner(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n, double* outr,
            double* outi, double* mag);
void taylor_remainder(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n,
                      double s, double* out);
double min_margin(const double* const* soa, int dim, std::size_t n, const double* normal, double offset,
                  const double* penalty);
}  // namespace avx2

}  // namespace lab::kernels
