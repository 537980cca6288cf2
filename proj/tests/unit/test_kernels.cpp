#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "labyrinth/kernels.hpp"
#include "labyrinth/rng.hpp"

using namespace lab;
using cd = std::complex<double>;

namespace {

struct Batch {
    std::vector<cd> a;
    std::vector<double> zr, zi;
};

Batch make_batch(std::uint64_t seed, int deg, std::size_t n) {
    Rng rng(seed);
    Batch b;
    for (int k = 0; k <= deg; ++k) b.a.emplace_back(rng.normal(), rng.normal());
    for (std::size_t i = 0; i < n; ++i) {
        b.zr.push_back(rng.uniform(-1.2, 1.2));
        b.zi.push_back(rng.uniform(-1.2, 1.2));
    }
    return b;
}

}  // namespace

TEST_CASE("scalar horner matches std::complex evaluation") {
    Batch b = make_batch(1, 12, 37);
    std::vector<double> r(37), i(37), m(37);
    kernels::scalar::horner(b.a.data(), 12, b.zr.data(), b.zi.data(), 37, r.data(), i.data(), m.data());
    for (std::size_t j = 0; j < 37; ++j) {
        cd z(b.zr[j], b.zi[j]), p = 0, zk = 1;
        double mag = 0;
        for (int k = 0; k <= 12; ++k, zk *= z) {
            p += b.a[k] * zk;
            mag += std::abs(b.a[k]) * std::abs(zk);
        }
        CHECK(std::abs(cd(r[j], i[j]) - p) < 1e-12 * mag);
        CHECK(m[j] == doctest::Approx(mag).epsilon(1e-12));
    }
}

TEST_CASE("taylor remainder bounds the increment over a disc") {
    Batch b = make_batch(2, 9, 8);
    const double s = 0.01;
    std::vector<double> out(8);
    kernels::scalar::taylor_remainder(b.a.data(), 9, b.zr.data(), b.zi.data(), 8, s, out.data());
    Rng rng(9);
    auto eval = [&](cd z) {
        cd p = 0;
        for (int k = 9; k >= 0; --k) p = p * z + b.a[k];
        return p;
    };
    for (std::size_t j = 0; j < 8; ++j) {
        cd z(b.zr[j], b.zi[j]);
        for (int t = 0; t < 50; ++t) {
            double ang = rng.uniform(0, 6.283185307179586);
            cd h = std::polar(s * std::sqrt(rng.uniform()), ang);
            CHECK(std::abs(eval(z + h) - eval(z)) <= out[j] * (1 + 1e-12) + 1e-14);
        }
    }
    // linear polynomial: remainder is exactly |a1| s
    std::vector<cd> lin{cd(1, 2), cd(3, -4)};
    double zr = 0.3, zi = 0.1, o;
    kernels::scalar::taylor_remainder(lin.data(), 1, &zr, &zi, 1, 0.5, &o);
    CHECK(o == doctest::Approx(2.5));
}

TEST_CASE("min margin with penalties") {
    std::vector<double> x{0.0, 1.0, 2.0, 0.5, 3.0}, y{0.0, 0.0, 1.0, 0.5, 2.0};
    const double* soa[2] = {x.data(), y.data()};
    double normal[2] = {1.0, 0.0};
    CHECK(kernels::scalar::min_margin(soa, 2, 5, normal, 3.5, nullptr) == doctest::Approx(0.5));
    std::vector<double> pen{0, 0, 0, 0, 1e300};
    CHECK(kernels::scalar::min_margin(soa, 2, 5, normal, 3.5, pen.data()) == doctest::Approx(1.5));
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
    if (kernels::detected_isa() != kernels::Isa::Avx2) {
        MESSAGE("AVX2 not available, equivalence test skipped");
        return;
    }
    const double u = 1.1102230246251565e-16;
    for (int deg : {0, 1, 5, 31, 64}) {
        for (std::size_t n : {1u, 3u, 4u, 17u, 256u}) {
            Batch b = make_batch(100 + deg + n, deg, n);
            std::vector<double> r1(n), i1(n), m1(n), r2(n), i2(n), m2(n);
            kernels::scalar::horner(b.a.data(), deg, b.zr.data(), b.zi.data(), n, r1.data(), i1.data(), m1.data());
            kernels::avx2::horner(b.a.data(), deg, b.zr.data(), b.zi.data(), n, r2.data(), i2.data(), m2.data());
            for (std::size_t j = 0; j < n; ++j) {
                // both are within (4D+4)u·mag of the true value, so within twice that of each other
                double tol = (8.0 * deg + 8.0) * u * m1[j];
                CHECK(std::abs(r1[j] - r2[j]) <= tol);
                CHECK(std::abs(i1[j] - i2[j]) <= tol);
                CHECK(std::abs(m1[j] - m2[j]) <= (2.0 * deg + 2.0) * u * m1[j]);
            }
            std::vector<double> t1(n), t2(n);
            kernels::scalar::taylor_remainder(b.a.data(), deg, b.zr.data(), b.zi.data(), n, 0.03, t1.data());
            kernels::avx2::taylor_remainder(b.a.data(), deg, b.zr.data(), b.zi.data(), n, 0.03, t2.data());
            for (std::size_t j = 0; j < n; ++j) {
                // rounding in the Taylor shift scales with sum_k |a_k| (|z|+s)^k
                double r = std::hypot(b.zr[j], b.zi[j]) + 0.03, scale = 0.0;
                for (int k = deg; k >= 0; --k) scale = scale * r + std::abs(b.a[k]);
                CHECK(std::abs(t1[j] - t2[j]) <= 4.0 * (deg + 1.0) * (deg + 1.0) * u * scale);
            }
        }
    }
    Rng rng(4);
    for (int dim : {1, 3, 4}) {
        for (std::size_t n : {1u, 5u, 64u, 1001u}) {
            std::vector<std::vector<double>> cols(dim, std::vector<double>(n));
            std::vector<const double*> soa;
            for (auto& c : cols) {
                for (auto& v : c) v = rng.normal();
                soa.push_back(c.data());
            }
            std::vector<double> normal(dim), pen(n);
            for (auto& v : normal) v = rng.normal();
            for (auto& v : pen) v = rng.uniform() < 0.1 ? 1e300 : 0.0;
            double a = kernels::scalar::min_margin(soa.data(), dim, n, normal.data(), 0.7, pen.data());
            double b = kernels::avx2::min_margin(soa.data(), dim, n, normal.data(), 0.7, pen.data());
            CHECK(std::abs(a - b) <= 1e-14 * (1 + std::abs(a)) * dim);
        }
    }
}

TEST_CASE("dispatch follows the forced ISA") {
    auto before = kernels::active_isa();
    kernels::force_isa(kernels::Isa::Scalar);
    CHECK(kernels::active_isa() == kernels::Isa::Scalar);
    kernels::force_isa(kernels::Isa::Avx2);
    CHECK(kernels::active_isa() == kernels::detected_isa());
    kernels::force_isa(before);
}
