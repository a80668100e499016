#ifndef LIGHTPIPE_GEOMETRY_HPP
#define LIGHTPIPE_GEOMETRY_HPP

// Reflection geometry for the unit-radius semi-infinite tube in R^d.
//
// Conventions used throughout:
//   * the tube axis is coordinate 0 of a flight displacement,
//   * cross sections are unit spheres S in R^{d-1},
//   * every flight starts, after rotation, at the base point (0,...,0,-1) of S,
//   * theta is the polar angle of the reflected ray against the inward normal,
//     phi_1..phi_{d-2} the remaining angles, all in the open (-pi/2, pi/2).

#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "philox.hpp"

namespace lightpipe {

inline constexpr double pi = 3.14159265358979323846264338327950288;

struct dimension {
    int d;
    explicit dimension(int d_) : d(d_) {
        if (d < 3) throw config_error("dimension: need d >= 3");
    }
};

// unit vector in R^{d-1}; norm-1 within 1e-12 is the contract at API
// boundaries, checked by callers/tests rather than enforced per call
using cross_section_point = std::vector<double>;

struct reflection_angles {
    double theta;
    std::vector<double> phis;   // d-2 entries
};

struct flight_vector {
    std::vector<double> coords; // d entries, coordinate 0 is axial
    double chord;               // R > 0
};

struct plane_hit_point {
    std::vector<double> coords; // d-1 entries, the point in the plane {x1=0}
};

// theta = arcsin(V), V ~ U(-1,1); the cosine density in theta is exactly the
// arcsine pushforward, no rejection needed
inline reflection_angles sample_angles(const dimension& dim, rng_stream& rng) {
    reflection_angles a;
    a.theta = std::asin(rng.upm1());
    a.phis.resize(static_cast<std::size_t>(dim.d - 2));
    for (auto& p : a.phis) p = pi * (rng.u01() - 0.5);
    return a;
}

namespace detail {

inline void check_angles(const reflection_angles& a) {
    if (!(std::fabs(a.theta) < pi / 2))
        throw degenerate_grazing_error("angles: |theta| must be < pi/2");
    for (double p : a.phis)
        if (!(std::fabs(p) < pi / 2))
            throw degenerate_grazing_error("angles: |phi| must be < pi/2");
}

}

// R = 2 cos(theta) / (1 - sin^2(theta) cos^2(phi_1) ... cos^2(phi_{d-2})).
// Range: 2 cos(theta) <= R <= 2 / cos(theta), so R is NOT bounded by 2
// (theta = pi/3 with all phi = 0 already gives R = 4). What is bounded by 2
// is the transverse part of the chord, sqrt(2 R cos(theta)), a chord of the
// unit sphere. The useful exact identity is R (1 - q^2) = 2 cos(theta) with
// q = sin(theta) prod cos(phi_j).
inline double chord_length(const reflection_angles& a) {
    detail::check_angles(a);
    double st = std::sin(a.theta), ct = std::cos(a.theta);
    double q = st;
    for (double p : a.phis) q *= std::cos(p);
    double denom = 1.0 - q * q;
    if (!(denom > 1e-300))
        throw degenerate_grazing_error("chord_length: grazing denominator underflow");
    double r = 2.0 * ct / denom;
    assert(r > 0.0);
    return r;
}

// Displacement of one flight leaving the base point of S:
//   coords[0]     = R sin(theta) cos(phi_1) ... cos(phi_{d-2})      (axial)
//   coords[i]     = R sin(theta) sin(phi_i) cos(phi_{i+1}) ... cos(phi_{d-2})
//   coords[d-1]   = R cos(theta)
// |coords| = R, and base point + coords[1..d-1] lies on S again.
inline flight_vector make_flight_vector(const reflection_angles& a) {
    flight_vector f;
    f.chord = chord_length(a);
    std::size_t m = a.phis.size();          // d-2
    std::size_t d = m + 2;
    f.coords.assign(d, 0.0);
    double st = std::sin(a.theta), ct = std::cos(a.theta);
    // suffix[i] = prod_{j>=i} cos(phi_j), suffix[m] = 1
    double suffix = 1.0;
    f.coords[d - 1] = f.chord * ct;
    for (std::size_t i = m; i-- > 0;) {
        f.coords[i + 1] = f.chord * st * std::sin(a.phis[i]) * suffix;
        suffix *= std::cos(a.phis[i]);
    }
    f.coords[0] = f.chord * st * suffix;
    return f;
}

// axial component only; equals make_flight_vector(a).coords[0]
inline double axial_step(const reflection_angles& a) {
    detail::check_angles(a);
    double st = std::sin(a.theta), ct = std::cos(a.theta);
    double prod = 1.0;
    for (double p : a.phis) prod *= std::cos(p);
    double q = st * prod;
    double denom = 1.0 - q * q;
    if (!(denom > 1e-300))
        throw degenerate_grazing_error("axial_step: grazing denominator underflow");
    return 2.0 * ct * st * prod / denom;
}

// Orthogonal operator on R^{n} (n = d-1) taking the base point (0,...,0,-1)
// to a prescribed target on S. Primary construction: the Householder
// reflection through the bisector of base and target (identity when target
// IS the base point). The alternate construction composes the same
// Householder with diag(-1,1,...,1); it is a second valid choice of U^y and
// exists so tests can confirm the chain law does not depend on the choice.
struct rotation_operator {
    std::vector<double> w;  // target + e_last; empty means identity
    double wn2 = 0.0;
    bool flip0 = false;     // alternate construction: negate coord 0 first

    std::size_t dim() const { return w.size(); }

    void apply(const double* x, double* out) const {
        std::size_t n = w.size();
        double x0 = x[0];
        double first = flip0 ? -x0 : x0;
        if (wn2 <= 0.0) {
            out[0] = first;
            for (std::size_t i = 1; i < n; ++i) out[i] = x[i];
            return;
        }
        double dot = w[0] * first;
        for (std::size_t i = 1; i < n; ++i) dot += w[i] * x[i];
        double f = 2.0 * dot / wn2;
        out[0] = first - f * w[0];
        for (std::size_t i = 1; i < n; ++i) out[i] = x[i] - f * w[i];
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> out(x.size());
        apply(x.data(), out.data());
        return out;
    }

    // materialized (d-1)x(d-1) matrix, row major; for tests and slow paths
    std::vector<double> matrix() const {
        std::size_t n = w.size();
        std::vector<double> m(n * n, 0.0), e(n, 0.0), col(n);
        for (std::size_t j = 0; j < n; ++j) {
            e[j] = 1.0;
            apply(e.data(), col.data());
            e[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i) m[i * n + j] = col[i];
        }
        return m;
    }
};

inline rotation_operator rotation_to(const cross_section_point& target, bool alternate = false) {
    rotation_operator op;
    std::size_t n = target.size();
    op.w.resize(n);
    op.flip0 = alternate;
    for (std::size_t i = 0; i < n; ++i) op.w[i] = target[i];
    op.w[n - 1] += 1.0;
    // sum of squares, not 2(1+y_last): the latter cancels catastrophically
    // when the target sits near the base point
    double s = 0.0;
    for (double v : op.w) s += v * v;
    op.wn2 = s;
    if (s == 0.0) op.w.assign(n, 0.0);  // exact coincidence: identity part
    return op;
}

// Intersection of the ray leaving axial depth -u (u > 0) from the base point
// with the plane {x1 = 0}, expressed in cross-section coordinates:
//   k-th coord (k <= d-2):  u sin(phi_k) / (cos(phi_1) ... cos(phi_k))
//   last coord:             u cot(theta) / (cos(phi_1) ... cos(phi_{d-2})) - 1
// A ray with nonpositive axial component never reaches the plane: miss.
inline std::optional<plane_hit_point> plane_hit(double u, const reflection_angles& a) {
    if (!(u > 0.0)) throw config_error("plane_hit: u must be positive");
    detail::check_angles(a);
    if (a.theta <= 0.0) return std::nullopt;
    std::size_t m = a.phis.size();
    plane_hit_point z;
    z.coords.assign(m + 1, 0.0);
    double prefix = 1.0; // cos(phi_1) ... cos(phi_k)
    for (std::size_t k = 0; k < m; ++k) {
        prefix *= std::cos(a.phis[k]);
        z.coords[k] = u * std::sin(a.phis[k]) / prefix;
    }
    z.coords[m] = u / (std::tan(a.theta) * prefix) - 1.0;
    return z;
}

}

#endif
