#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "labyrinth/barrier.hpp"

namespace lab {

struct Polyline {
    std::vector<Vec> pts;

    Polyline() = default;
    explicit Polyline(std::vector<Vec> p) : pts(std::move(p)) {}
    double length() const;
};

double polyline_length(const Polyline& p);

// Spatial index over the facets of a set of layers, all in world coordinates.
class FacetIndex {
public:
    explicit FacetIndex(std::vector<const BarrierLayer*> layers);
    explicit FacetIndex(const BoxBarrier& b);

    // True iff the closed segment meets a facet piece, i.e. a facet point at skeleton distance >= eta_s.
    bool segment_hits(const Vec& a, const Vec& b) const;
    std::size_t facets() const { return refs_.size(); }

private:
    struct Ref {
        int layer, facet;
        Vec lo, hi;
    };
    std::vector<const BarrierLayer*> layers_;
    std::vector<Ref> refs_;
    double cell_ = 1.0;
    // hashed cell -> facet refs; a hash collision only adds candidates
    std::unordered_map<std::uint64_t, std::vector<int>> bins_;
    void build();
};

bool crosses_barrier(const Polyline& p, const FacetIndex& idx);
bool crosses_barrier(const Polyline& p, const BoxBarrier& b);

// Grid over a box neighbourhood: nodes in the shell and inside the cap cone dilated by `dilation`, laid out in the
// box frame so the cap axis is a grid line.
struct CrossingResult {
    double h = 0.0;
    double length = std::numeric_limits<double>::infinity();  // shell-to-shell, band overshoot removed
    double raw_length = std::numeric_limits<double>::infinity();
    std::size_t nodes = 0, settled = 0;
    bool reachable = false;
    Polyline witness;  // world coordinates, source node to sink node
};

struct GridOptions {
    double dilation = 1.25;
    std::size_t node_budget = 6000000;
};

CrossingResult shortest_crossing(const BoxBarrier& b, double h, const GridOptions& opt = {});

// ell (tau mu - m eta_s) from the stored plan; checked against the closed form.
double chained_skeleton_bound(const BoxPlan& p);

struct LengthCertificate {
    double A = 0.0;
    CrossingResult coarse, fine;  // h and h/2
    double analytic = 0.0;
    bool witness_clear = false;  // post-hoc crosses_barrier on both witnesses is false

    bool pass() const { return coarse.length > A && fine.length > A && analytic > A; }
    double ratio() const { return fine.length / coarse.length; }
};

LengthCertificate certify_box(const BoxBarrier& b, double h, const GridOptions& opt = {});

// Random piecewise-linear crossings of the box of length at most max_len.
std::vector<Polyline> random_crossings(const BoxBarrier& b, int count, std::uint64_t seed, double max_len,
                                       int bends = 6);

struct AuditReport {
    int count = 0;
    int hits = 0;
    std::vector<int> violations;  // indices of paths missing every facet piece
    std::vector<Polyline> paths;
    int uncontested() const { return static_cast<int>(violations.size()); }
};

AuditReport random_crossing_audit(const BoxBarrier& b, int count, std::uint64_t seed, double max_len);

nlohmann::json to_json(const CrossingResult& r);
nlohmann::json to_json(const LengthCertificate& c);
nlohmann::json to_json(const AuditReport& a);
std::string polyline_csv(const Polyline& p);

}  // namespace lab
