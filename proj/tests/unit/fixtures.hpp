#pragma once

#include "labyrinth/barrier.hpp"

namespace lab::test {

// 1-D perturbed lattice with two shifted skeletons half a period apart: the planar (m = 2) barrier setting.
struct Planar {
    Tessellation t;
    std::vector<Vec> shifts;
    double mu = 0.0, omega = 0.0;
    DomeChart chart;
    Planar() {
        t = delaunay_tessellate(perturb_basis(1, 42, 0.05), 0.0);
        double e = t.lat.basis(0, 0);
        shifts = {zeros(1), make_vec({0.5 * e})};
        mu = 0.5 * e;  // nearest-point distance between the two shifted vertex sets
        omega = shell_constant_bound(chart, t);
    }
};

}  // namespace lab::test
