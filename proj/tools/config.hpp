#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "labyrinth/lifting.hpp"

namespace lab::cli {

// Everything a run depends on. Defaults are the bundled planar (N = 1) pipeline.
struct RunConfig {
    int N = 1;  // complex dimension; the ambient space is R^(2N), the lattice lives in R^(2N-1)
    std::uint64_t seed = 42;
    int threads = 1;
    std::string out = "out";

    double delta = 0.05;  // lattice perturbation
    DomeChart chart{0.3, 0.1, 0.08, 0.75};
    double lift_tau = 0.02;

    // shells r_n < R_n, target crossing lengths A_n, levels L_n
    std::vector<double> r{0.55, 1.0, 1.8}, R{0.95, 1.727, 3.11}, A{0.404, 0.735, 1.324}, L{1.0, 2.0, 3.0};
    bool coarse = true;  // fixed tau / eta per shell instead of the length planner
    double coarse_tau = 0.2, coarse_eta = 0.045;
    int shift_candidates = 512;

    double resolution = 2.0;  // grid step = eta_s / resolution; the fine pass halves it again
    int crossings = 100;

    double runge_L = 1.0, runge_nu = 0.1, runge_eps = 0.1;
    std::vector<int> schedule{4, 8, 16, 32, 64, 128};

    std::vector<int> potential_schedule{192};
    int oversample = 32;
    double cap_factor = 200.0, floor3 = 1.0;
    int profile_samples = 1000;

    nlohmann::json map;  // proper map manifest; null means (z, w) -> (z, w, z^2 + w^2)
    std::vector<double> pb_r{1.0, 2.0, 3.0}, pb_R{2.0, 3.0, 4.0}, pb_A{1.0, 2.0, 3.0};
    std::size_t pb_samples = 20000;
    double safety = 1.5, delta_inc = 1.0;
    int polylines = 100;
};

RunConfig config_from_json(const nlohmann::json& j);  // unknown keys are errors
nlohmann::json to_json(const RunConfig& c);
// Throws lab::Error("cli.InvalidConfig", ...) with the first problem found.
void validate(const RunConfig& c);
// FNV-1a over the canonical dump; stable across platforms, unlike std::hash.
std::string config_hash(const RunConfig& c);

}  // namespace lab::cli
