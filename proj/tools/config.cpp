#include "config.hpp"

#include <cmath>
#include <cstdio>

#include "labyrinth/error.hpp"

namespace lab::cli {

using nlohmann::json;

json to_json(const RunConfig& c) {
    return {{"N", c.N},
            {"seed", c.seed},
            {"threads", c.threads},
            {"out", c.out},
            {"lattice", {{"delta", c.delta}}},
            {"chart", {{"r", c.chart.r}, {"u0", c.chart.u0}, {"u1", c.chart.u1}, {"u", c.chart.u}}},
            {"lift", {{"tau", c.lift_tau}}},
            {"shells", {{"r", c.r}, {"R", c.R}, {"A", c.A}, {"L", c.L}}},
            {"barrier",
             {{"coarse", c.coarse}, {"tau", c.coarse_tau}, {"eta", c.coarse_eta}, {"shift_candidates", c.shift_candidates}}},
            {"path", {{"resolution", c.resolution}, {"crossings", c.crossings}}},
            {"runge", {{"L", c.runge_L}, {"nu", c.runge_nu}, {"eps", c.runge_eps}, {"schedule", c.schedule}}},
            {"potential",
             {{"schedule", c.potential_schedule},
              {"oversample", c.oversample},
              {"cap_factor", c.cap_factor},
              {"floor3", c.floor3},
              {"profile_samples", c.profile_samples}}},
            {"pullback",
             {{"map", c.map},
              {"r", c.pb_r},
              {"R", c.pb_R},
              {"A", c.pb_A},
              {"samples", c.pb_samples},
              {"safety", c.safety},
              {"delta_inc", c.delta_inc},
              {"polylines", c.polylines}}}};
}

namespace {

void check_keys(const json& given, const json& known, const std::string& path) {
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!known.contains(it.key())) throw Error("cli.InvalidConfig", "unknown key " + key);
        if (key == "pullback.map") continue;  // free-form manifest
        if (known[it.key()].is_object()) {
            if (!it.value().is_object()) throw Error("cli.InvalidConfig", key + " must be an object");
            check_keys(it.value(), known[it.key()], key);
        }
    }
}

}  // namespace

RunConfig config_from_json(const json& user) {
    if (!user.is_object()) throw Error("cli.InvalidConfig", "config must be a JSON object");
    const json def = to_json(RunConfig{});
    check_keys(user, def, "");
    json j = def;
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (it.value().is_object() && def[it.key()].is_object()) {
            for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) j[it.key()][jt.key()] = jt.value();
        } else {
            j[it.key()] = it.value();
        }
    }
    RunConfig c;
    try {
        c.N = j["N"];
        c.seed = j["seed"];
        c.threads = j["threads"];
        c.out = j["out"];
        c.delta = j["lattice"]["delta"];
        const auto& ch = j["chart"];
        c.chart.r = ch["r"];
        c.chart.u0 = ch["u0"];
        c.chart.u1 = ch["u1"];
        c.chart.u = ch["u"];
        c.lift_tau = j["lift"]["tau"];
        const auto& sh = j["shells"];
        c.r = sh["r"].get<std::vector<double>>();
        c.R = sh["R"].get<std::vector<double>>();
        c.A = sh["A"].get<std::vector<double>>();
        c.L = sh["L"].get<std::vector<double>>();
        const auto& b = j["barrier"];
        c.coarse = b["coarse"];
        c.coarse_tau = b["tau"];
        c.coarse_eta = b["eta"];
        c.shift_candidates = b["shift_candidates"];
        c.resolution = j["path"]["resolution"];
        c.crossings = j["path"]["crossings"];
        const auto& rg = j["runge"];
        c.runge_L = rg["L"];
        c.runge_nu = rg["nu"];
        c.runge_eps = rg["eps"];
        c.schedule = rg["schedule"].get<std::vector<int>>();
        const auto& po = j["potential"];
        c.potential_schedule = po["schedule"].get<std::vector<int>>();
        c.oversample = po["oversample"];
        c.cap_factor = po["cap_factor"];
        c.floor3 = po["floor3"];
        c.profile_samples = po["profile_samples"];
        const auto& pb = j["pullback"];
        c.map = pb["map"];
        c.pb_r = pb["r"].get<std::vector<double>>();
        c.pb_R = pb["R"].get<std::vector<double>>();
        c.pb_A = pb["A"].get<std::vector<double>>();
        c.pb_samples = pb["samples"];
        c.safety = pb["safety"];
        c.delta_inc = pb["delta_inc"];
        c.polylines = pb["polylines"];
    } catch (const json::exception& e) {
        throw Error("cli.InvalidConfig", std::string("bad value type: ") + e.what());
    }
    return c;
}

void validate(const RunConfig& c) {
    auto fail = [](const std::string& why) { throw Error("cli.InvalidConfig", why); };
    if (c.N < 1 || 2 * c.N > 8) fail("N must be between 1 and 4");
    if (c.threads < 1) fail("threads must be >= 1");
    if (c.out.empty()) fail("out must not be empty");
    if (!(c.delta >= 0.0 && c.delta < 0.5)) fail("lattice.delta must lie in [0, 0.5)");
    try {
        c.chart.validate();
    } catch (const Error& e) {
        fail(std::string("chart: ") + e.what());
    }
    if (!(c.lift_tau > 0.0)) fail("lift.tau must be positive");
    const std::size_t n = c.r.size();
    if (n == 0) fail("need at least one shell");
    if (c.R.size() != n || c.A.size() != n || c.L.size() != n) fail("shells.r, R, A and L must have the same length");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(c.r[i] > 0.0)) fail("shells.r[" + std::to_string(i) + "] must be positive");
        if (!(c.R[i] > c.r[i])) fail("shells: need R > r for shell " + std::to_string(i));
        if (i > 0 && !(c.r[i] > c.R[i - 1])) fail("shells must not overlap");
        if (!(c.A[i] > 0.0) || (i > 0 && !(c.A[i] > c.A[i - 1]))) fail("shells.A must be positive and increasing");
        if (i > 0 && !(c.L[i] > c.L[i - 1])) fail("shells.L must be increasing");
    }
    if (!(c.coarse_tau > 0.0) || !(c.coarse_eta > 0.0)) fail("barrier.tau and barrier.eta must be positive");
    if (c.shift_candidates < 1) fail("barrier.shift_candidates must be >= 1");
    if (!(c.resolution > 0.0)) fail("path.resolution must be positive");
    if (c.crossings < 1) fail("path.crossings must be >= 1");
    if (!(c.runge_nu > 0.0 && c.runge_nu < 1.0) || !(c.runge_eps > 0.0)) fail("runge: need 0 < nu < 1 and eps > 0");
    for (const auto* s : {&c.schedule, &c.potential_schedule}) {
        if (s->empty()) fail("degree schedules must not be empty");
        for (int d : *s)
            if (d < 1) fail("degrees must be >= 1");
    }
    if (c.oversample < 2 || !(c.cap_factor > 0.0) || !(c.floor3 > 0.0) || c.profile_samples < 2)
        fail("potential: bad oversample, cap_factor, floor3 or profile_samples");
    const std::size_t m = c.pb_r.size();
    if (c.pb_R.size() != m || c.pb_A.size() != m || m == 0) fail("pullback.r, R and A must have the same nonzero length");
    for (std::size_t i = 0; i < m; ++i) {
        if (!(c.pb_r[i] >= 0.0) || !(c.pb_R[i] > c.pb_r[i])) fail("pullback: need R > r >= 0 for shell " + std::to_string(i));
        if (!(c.pb_A[i] > 0.0) || (i > 0 && !(c.pb_A[i] > c.pb_A[i - 1]))) fail("pullback.A must be positive and increasing");
    }
    if (c.pb_samples < 1 || !(c.safety >= 1.0) || !(c.delta_inc > 0.0) || c.polylines < 1)
        fail("pullback: bad samples, safety, delta_inc or polylines");
}

std::string config_hash(const RunConfig& c) {
    json j = to_json(c);
    // where the files go and how many threads compute them do not change any result
    j.erase("out");
    j.erase("threads");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace lab::cli
