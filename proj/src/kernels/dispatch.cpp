#include <atomic>

#include "labyrinth/kernels.hpp"

namespace lab::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::atomic<int>& active_slot() {
    static std::atomic<int> slot{static_cast<int>(detected_isa())};
    return slot;
}

}  // namespace

Isa detected_isa() {
    static const Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    return isa;
}

Isa active_isa() { return static_cast<Isa>(active_slot().load(std::memory_order_relaxed)); }

void force_isa(Isa isa) {
    if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
    active_slot().store(static_cast<int>(isa), std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void horner(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n, double* outr,
            double* outi, double* mag) {
    if (active_isa() == Isa::Avx2)
        avx2::horner(a, deg, zr, zi, n, outr, outi, mag);
    else
        scalar::horner(a, deg, zr, zi, n, outr, outi, mag);
}

void taylor_remainder(const std::complex<double>* a, int deg, const double* zr, const double* zi, std::size_t n,
                      double s, double* out) {
    if (active_isa() == Isa::Avx2)
        avx2::taylor_remainder(a, deg, zr, zi, n, s, out);
    else
        scalar::taylor_remainder(a, deg, zr, zi, n, s, out);
}

double min_margin(const double* const* soa, int dim, std::size_t n, const double* normal, double offset,
                  const double* penalty) {
    if (active_isa() == Isa::Avx2) return avx2::min_margin(soa, dim, n, normal, offset, penalty);
    return scalar::min_margin(soa, dim, n, normal, offset, penalty);
}

}  // namespace lab::kernels
