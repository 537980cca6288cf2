#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "labyrinth/potential.hpp"
#include "labyrinth/pullback.hpp"
#include "labyrinth/rng.hpp"
#include "labyrinth/version.hpp"

namespace lab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Run::Run(RunConfig cfg, std::string command)
    : cfg_(std::move(cfg)), command_(std::move(command)), hash_(config_hash(cfg_)), dir_(cfg_.out) {}

void Run::prepare() {
    // only called once something is about to be written, i.e. after validation
    fs::create_directories(dir_);
}

void Run::certify(const std::string& name, bool pass, json detail) {
    certs_.push_back({name, pass, std::move(detail)});
    std::cerr << (pass ? "  pass  " : "  FAIL  ") << name << "\n";
}

void Run::fail(const std::string& stage, const std::exception& e) {
    const auto* le = dynamic_cast<const Error*>(&e);
    json d = {{"error", e.what()}};
    if (le) d["code"] = le->code();
    certify(stage + ".completed", false, d);
}

bool Run::all_pass() const {
    if (certs_.empty()) return false;
    for (const auto& c : certs_)
        if (!c.pass) return false;
    return true;
}

static json meta(const std::string& hash, const std::string& command) {
    return {{"config_hash", hash}, {"versions", module_versions()}, {"command", command}};
}

void Run::write_json(const std::string& file, json payload) {
    prepare();
    json j = {{"meta", meta(hash_, command_)}, {"data", std::move(payload)}};
    std::ofstream(dir_ / file) << j.dump(1) << "\n";
    outputs_.push_back(file);
}

void Run::write_text(const std::string& file, const std::string& body, const std::string& comment) {
    prepare();
    std::ofstream os(dir_ / file);
    os << comment << " config_hash " << hash_ << "\n" << comment << " versions " << module_versions().dump() << "\n";
    os << body;
    outputs_.push_back(file);
}

void Run::finish() {
    prepare();
    json certs = json::array();
    for (const auto& c : certs_) certs.push_back({{"name", c.name}, {"status", c.pass ? "pass" : "fail"}, {"detail", c.detail}});
    json r = {{"meta", meta(hash_, command_)},
              {"config", to_json(cfg_)},
              {"certificates", certs},
              {"all_pass", all_pass()},
              {"outputs", outputs_},
              {"timing_seconds", timing_}};
    std::ofstream(dir_ / "report.json") << r.dump(1) << "\n";
}

namespace {

// Runs one stage; a thrown module error becomes a failed certificate and stops the command.
bool stage(Run& run, const std::string& name, const std::function<void()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    std::cerr << "[" << name << "]\n";
    bool ok = true;
    try {
        f();
    } catch (const std::exception& e) {
        run.fail(name, e);
        ok = false;
    }
    run.timing(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return ok;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

struct World {
    Tessellation t;
    ShiftFamily fam;
    std::vector<ShellBarrier> shells;
    TelescopeSequence seq;
};

void do_lattice(Run& run, World& w) {
    const auto& c = run.cfg();
    const int d = 2 * c.N - 1;
    Lattice lat = perturb_basis(d, c.seed, c.delta);
    w.t = delaunay_tessellate(lat, 0.0);
    const double eta = verify_true_delaunay(w.t);
    run.certify("lattice.true_delaunay", eta > 0.0,
                {{"eta_m", eta}, {"prototypes", w.t.prototypes.size()}, {"seeds_tried", w.t.lat.seeds_tried}});
    json basis = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int k = 0; k < d; ++k) row.push_back(w.t.lat.basis(i, k));
        basis.push_back(row);
    }
    run.write_json("lattice.json", {{"dim", d},
                                    {"seed", w.t.lat.seed},
                                    {"delta", w.t.lat.delta},
                                    {"basis", basis},
                                    {"eta_m", eta},
                                    {"prototypes", w.t.prototypes.size()},
                                    {"longest_edge", w.t.longest_prototype_edge()}});
    Tessellation view = w.t;
    view.materialize(zeros(d), 2.5 * w.t.longest_prototype_edge());
    run.write_text("tessellation.obj", tessellation_obj(view), "#");
}

void do_lift(Run& run, const World& w) {
    const auto& c = run.cfg();
    const int d = w.t.dim();
    LiftedSurface s = lift_tessellation(w.t.scaled(c.lift_tau, zeros(d)), c.chart);
    ConvexityCertificate cc = certify_convexity(s);
    run.certify("lifting.convexity", cc.valid(),
                {{"global_margin", cc.global_margin}, {"facets", s.facets.size()}, {"violations", cc.violations.size()}});
    // every vertex in (r - omega tau^2, r], and every facet plane outside the inner radius
    const double lo = s.shell_lo(), r = c.chart.r;
    double vmin = 1e300, vmax = 0.0, pmin = 1e300;
    for (const auto& v : s.vertices) vmin = std::min(vmin, v.norm()), vmax = std::max(vmax, v.norm());
    for (const auto& f : s.facets) pmin = std::min(pmin, f.plane.offset);
    run.certify("lifting.shell_inclusion", vmin > lo && vmax <= r * (1.0 + 1e-12) && pmin > lo,
                {{"shell_lo", lo}, {"r", r}, {"vertex_min", vmin}, {"vertex_max", vmax}, {"plane_offset_min", pmin}});
    run.write_json("lift.json", {{"tau", s.tau},
                                 {"r", r},
                                 {"nu_c", s.nu_c},
                                 {"omega_sh", s.omega_sh},
                                 {"edge", s.edge},
                                 {"shell_lo", lo},
                                 {"vertices", s.vertices.size()},
                                 {"facets", s.facets.size()},
                                 {"convexity_margin", cc.global_margin}});
    run.write_text("lifted.obj", lifted_obj(s), "#");
}

void do_barrier(Run& run, World& w) {
    const auto& c = run.cfg();
    const int m = w.t.dim() + 1;
    w.fam = find_shifts(w.t, m, c.seed, c.shift_candidates);
    json q = json::array();
    for (const auto& v : w.fam.q) q.push_back(vec_json(v));
    run.certify("lattice.separation", w.fam.mu > 0.0,
                {{"mu", w.fam.mu}, {"mu_sampled", w.fam.mu_sampled}, {"mesh", w.fam.mesh}, {"shifts", q}});
    ShellInputs in;
    in.chart = c.chart;
    in.t = &w.t;
    in.shifts = w.fam.q;
    in.mu = w.fam.mu;
    in.omega = shell_constant_bound(c.chart, w.t);
    MultiShellSpec spec;
    spec.r = c.r;
    spec.R = c.R;
    spec.B = c.A;
    spec.coarse = c.coarse;
    spec.coarse_tau = c.coarse_tau;
    spec.coarse_eta = c.coarse_eta;
    w.shells = build_multi_shell(spec, in, SphereCover{});
    json shells = json::array();
    std::vector<const BoxBarrier*> all;
    for (std::size_t n = 0; n < w.shells.size(); ++n) {
        const auto& sh = w.shells[n];
        json boxes = json::array();
        std::size_t facets = 0;
        bool convex = true, identities = true;
        for (const auto& b : sh.boxes) {
            all.push_back(&b);
            facets += b.facet_count();
            for (const auto& L : b.layers) convex &= L.convexity_margin > 0.0;
            if (!b.plan.coarse) identities &= b.plan.identities_hold();
            boxes.push_back(box_manifest(b));
        }
        const std::string tag = "barrier.shell" + std::to_string(n);
        run.certify(tag + ".built", facets > 0 && convex, {{"facets", facets}, {"layers_convex", convex}});
        if (!c.coarse) run.certify(tag + ".plan_identities", identities);
        shells.push_back({{"r", sh.J.lo}, {"R", sh.J.hi}, {"scale", sh.scale}, {"boxes", boxes}});
    }
    run.write_json("barrier.json", {{"mu", w.fam.mu}, {"omega", in.omega}, {"shells", shells}});
    run.write_text("barrier.obj", barrier_obj(all), "#");
}

void do_paths(Run& run, const World& w) {
    const auto& c = run.cfg();
    json out = json::array();
    for (std::size_t n = 0; n < w.shells.size(); ++n) {
        const BoxBarrier& b = w.shells[n].boxes.front();
        const double h = b.layers.front().eta_s / c.resolution;
        LengthCertificate lc = certify_box(b, h);
        const double A = c.A[n];
        bool pass = lc.coarse.length > A && lc.fine.length > A && lc.witness_clear;
        if (!b.plan.coarse) pass = pass && lc.analytic > A;
        const std::string tag = "path.shell" + std::to_string(n);
        json lj = to_json(lc);
        lj["target"] = A;
        lj["h"] = h;
        run.certify(tag + ".shortest_crossing", pass, lj);
        AuditReport a = random_crossing_audit(b, c.crossings, c.seed + 100 + n, A);
        run.certify(tag + ".random_crossings", a.count == c.crossings && a.uncontested() == 0,
                    {{"count", a.count}, {"hits", a.hits}, {"uncontested", a.uncontested()}, {"max_length", A}});
        run.write_text("witness_shell" + std::to_string(n) + ".csv", polyline_csv(lc.fine.witness), "#");
        out.push_back({{"shell", n}, {"length", lj}, {"audit", to_json(a)}});
    }
    run.write_json("paths.json", out);
}

void do_potential(Run& run, World& w) {
    const auto& c = run.cfg();
    auto stages = shell_stages(w.shells, c.L);
    TelescopeOptions opt;
    opt.schedule = c.potential_schedule;
    opt.oversample = c.oversample;
    opt.cap_factor = c.cap_factor;
    opt.floor3 = c.floor3;
    opt.later = TelescopeOptions::Later::All;
    w.seq = telescope(stages, opt);
    const auto& seq = w.seq;
    const int S = static_cast<int>(seq.stages.size());
    for (int j = 0; j < S; ++j) {
        const auto& r = seq.stages[j];
        run.certify("potential.stage" + std::to_string(j),
                    r.delta_certified <= r.spec.budget && r.delta_sampled < r.spec.budget &&
                        std::max(r.after.certified, r.before.certified + r.psi.inf_pieces) >= r.spec.target,
                    {{"group", r.spec.group},
                     {"C", r.C},
                     {"budget", r.spec.budget},
                     {"delta_certified", r.delta_certified},
                     {"delta_sampled", r.delta_sampled},
                     {"target", r.spec.target},
                     {"after_certified", r.after.certified},
                     {"degrees", [&] {
                          json d = json::array();
                          for (const auto& t : r.psi.terms) d.push_back(t.phi.degree());
                          return d;
                      }()}});
    }
    // shell by shell: sampled sup |Phi_(n+1) - Phi_n| on the ball of the previous outer radius
    int first = 0;
    const int m = w.t.dim() + 1;
    Rng rng(c.seed + 7);
    for (std::size_t n = 0; n < w.shells.size(); ++n) {
        int last = first;
        while (last < S && seq.stages[last].spec.group == static_cast<int>(n)) ++last;
        const double rad = n == 0 ? seq.stages[first].spec.inner_radius : c.R[n - 1];
        std::vector<Vec> xs;
        for (int k = 0; k < 4096; ++k) {
            Vec x(m);
            for (int i = 0; i < m; ++i) x[i] = rng.normal();
            xs.push_back(x * (rad / x.norm()));
        }
        const auto hi = seq.values(xs, last), lo_part = seq.values(xs, first);
        double sup = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) sup = std::max(sup, std::abs(hi[k] - lo_part[k]));
        const double budget = std::ldexp(1.0, -static_cast<int>(n));
        run.certify("potential.shell" + std::to_string(n) + ".delta", sup < budget,
                    {{"radius", rad}, {"sampled_sup", sup}, {"budget", budget}});
        // final Re g >= L_n on the pieces of shell n
        std::vector<Vec> on;
        for (int j = first; j < last; ++j)
            for (const auto& piece : seq.stages[j].psi.pieces)
                for (const auto& x : sample_simplex(piece, 0.1 * seq.stages[j].spec.layer.eta_s)) on.push_back(x);
        double lo = 1e300;
        for (const auto& v : seq.values(on)) lo = std::min(lo, v.real());
        const std::size_t count = on.size();
        run.certify("potential.shell" + std::to_string(n) + ".level", lo >= c.L[n],
                    {{"min_re_sampled", lo}, {"level", c.L[n]}, {"samples", count}});
        first = last;
    }
    double total = 0.0;
    for (const auto& r : seq.stages) total += r.spec.budget;
    run.certify("potential.budget_sum", std::isfinite(total) && seq.tail_after(S) == 0.0,
                {{"sum", total}, {"tail_after_last", seq.tail_after(S)}});
    run.write_json("potential.json", to_json(seq));
}

void do_profiles(Run& run, const World& w) {
    const auto& c = run.cfg();
    for (std::size_t n = 0; n < w.shells.size(); ++n) {
        const BoxBarrier& b = w.shells[n].boxes.front();
        auto paths = random_crossings(b, c.crossings, c.seed + 200 + n, c.A[n]);
        std::ostringstream csv;
        csv << "path,t,re,abs\n";
        csv.precision(12);
        int above = 0;
        double worst = 1e300;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            Profile p = profile_along_path(w.seq, paths[i], c.profile_samples);
            above += p.max_re > c.L[n];
            worst = std::min(worst, p.max_re);
            for (const auto& q : p.pts) csv << i << "," << q.t << "," << q.re << "," << q.abs << "\n";
        }
        run.certify("potential.shell" + std::to_string(n) + ".profiles",
                    static_cast<int>(paths.size()) == c.crossings && above == c.crossings,
                    {{"paths", paths.size()}, {"above_level", above}, {"min_of_max_re", worst}, {"level", c.L[n]}});
        run.write_text("profiles_shell" + std::to_string(n) + ".csv", csv.str(), "#");
    }
}

void do_pullback(Run& run) {
    const auto& c = run.cfg();
    ProperPolyMap F = c.map.is_null() ? quadric_map() : map_from_json(c.map);
    Rng rng(c.seed + 300);
    double fd = 0.0;
    for (int i = 0; i < 100; ++i) {
        std::vector<cplx> z;
        for (int k = 0; k < F.n_in(); ++k) z.emplace_back(rng.normal(), rng.normal());
        fd = std::max(fd, jacobian_fd_error(F, z));
    }
    run.certify("pullback.jacobian", fd < 1e-6, {{"max_rel_error", fd}, {"points", 100}});
    std::vector<ShellNorm> norms;
    for (std::size_t n = 0; n < c.pb_r.size(); ++n)
        norms.push_back(df_norm_max(F, ShellSpec{c.pb_r[n], c.pb_R[n]}, c.pb_samples, c.seed + 400 + n, c.threads));
    ScalingPlan plan = plan_scaling(c.pb_A, norms, c.safety, c.delta_inc);
    run.certify("pullback.scaling", plan.holds(), {{"B", plan.B}, {"d", plan.d}});
    for (std::size_t n = 0; n < norms.size(); ++n) {
        auto polys = random_shell_polylines(F, norms[n].shell, c.polylines, c.seed + 500 + n);
        int ok = 0;
        double worst = 0.0;
        for (const auto& p : polys) {
            LengthAudit a = length_audit(F, p, norms[n].d);
            ok += a.pass;
            worst = std::max(worst, a.image_length / (norms[n].d * a.length));
        }
        run.certify("pullback.shell" + std::to_string(n) + ".pushforward_length", ok == c.polylines,
                    {{"polylines", polys.size()}, {"passed", ok}, {"worst_ratio", worst}, {"d", norms[n].d}});
    }
    run.write_json("map.json", to_json(F));
    run.write_json("plan.json", to_json(plan));
}

}  // namespace

void cmd_lattice(Run& run) {
    World w;
    stage(run, "lattice", [&] { do_lattice(run, w); });
}

void cmd_lift(Run& run) {
    World w;
    stage(run, "lattice", [&] { do_lattice(run, w); }) && stage(run, "lift", [&] { do_lift(run, w); });
}

void cmd_barrier(Run& run) {
    World w;
    stage(run, "lattice", [&] { do_lattice(run, w); }) && stage(run, "barrier", [&] { do_barrier(run, w); });
}

void cmd_certify_path(Run& run) {
    World w;
    stage(run, "lattice", [&] { do_lattice(run, w); }) && stage(run, "barrier", [&] { do_barrier(run, w); }) &&
        stage(run, "path", [&] { do_paths(run, w); });
}

void cmd_runge(Run& run) {
    const auto& c = run.cfg();
    stage(run, "runge", [&] {
        SlabSpec spec = SlabSpec::reference(c.runge_L, c.runge_eps, c.runge_nu);
        json attempts = json::array();
        try {
            RungeFit fit = fit_runge(spec, c.schedule);
            for (const auto& a : fit.attempts) attempts.push_back({{"degree", a.degree}, {"t", a.t}, {"certified", a.certified}});
            run.certify("runge.fit", fit.cert.valid(), to_json(fit.cert));
            run.write_json("runge.json", {{"polynomial", poly_to_json(fit.p)}, {"certificate", to_json(fit.cert)}, {"attempts", attempts}});
        } catch (const DegreeExhausted& e) {
            for (const auto& a : e.attempts) attempts.push_back({{"degree", a.degree}, {"t", a.t}, {"certified", a.certified}});
            run.certify("runge.fit", false, {{"error", e.what()}, {"code", e.code()}, {"attempts", attempts}});
            run.write_json("runge.json", {{"attempts", attempts}, {"error", e.what()}});
        }
    });
}

void cmd_potential(Run& run) {
    World w;
    stage(run, "lattice", [&] { do_lattice(run, w); }) && stage(run, "barrier", [&] { do_barrier(run, w); }) &&
        stage(run, "potential", [&] { do_potential(run, w); }) && stage(run, "profiles", [&] { do_profiles(run, w); });
}

void cmd_pipeline(Run& run) {
    World w;
    stage(run, "lattice", [&] { do_lattice(run, w); }) && stage(run, "lift", [&] { do_lift(run, w); }) &&
        stage(run, "barrier", [&] { do_barrier(run, w); }) && stage(run, "path", [&] { do_paths(run, w); }) &&
        stage(run, "potential", [&] { do_potential(run, w); }) && stage(run, "profiles", [&] { do_profiles(run, w); });
    stage(run, "pullback", [&] { do_pullback(run); });
}

}  // namespace lab::cli
