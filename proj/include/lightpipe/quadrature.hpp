#ifndef LIGHTPIPE_QUADRATURE_HPP
#define LIGHTPIPE_QUADRATURE_HPP

// Globally adaptive quadrature on a finite interval with an embedded
// Gauss-Legendre 10/21 pair (Kronrod-style error estimation: the error of a
// subinterval is |GL21 - GL10|, refinement always splits the currently worst
// one). Node tables are generated at startup by Newton iteration on the
// Legendre recurrence, so there are no transcribed coefficient tables to get
// wrong. The integrands in this project are smooth away from endpoint
// branch points of square-root type, which bisection absorbs at
// O(log 1/tol) extra levels.

#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "errors.hpp"

namespace lightpipe {

namespace detail {

struct gl_rule {
    std::vector<double> x; // nodes on (-1,1)
    std::vector<double> w;
};

inline gl_rule make_gl_rule(int n) {
    gl_rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 1; i <= n; ++i) {
        double x = std::cos(3.14159265358979323846 * (i - 0.25) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        r.x[i - 1] = x;
        r.w[i - 1] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

inline const gl_rule& gl10() { static const gl_rule r = make_gl_rule(10); return r; }
inline const gl_rule& gl21() { static const gl_rule r = make_gl_rule(21); return r; }
inline const gl_rule& gl64() { static const gl_rule r = make_gl_rule(64); return r; }

struct quad_interval {
    double a, b, val, err;
    bool operator<(const quad_interval& o) const { return err < o.err; }
};

template <class F>
inline quad_interval eval_interval(F& f, double a, double b) {
    const gl_rule& lo = gl10();
    const gl_rule& hi = gl21();
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double i10 = 0.0, i21 = 0.0;
    for (std::size_t k = 0; k < lo.x.size(); ++k) i10 += lo.w[k] * f(c + h * lo.x[k]);
    for (std::size_t k = 0; k < hi.x.size(); ++k) i21 += hi.w[k] * f(c + h * hi.x[k]);
    i10 *= h;
    i21 *= h;
    return {a, b, i21, std::fabs(i21 - i10)};
}

}

struct quad_options {
    double rel_tol = 1e-8;
    double abs_floor = 1e-300;       // success once total error is below this, too
    std::size_t max_evals = 4000000; // 31 evals per interval refinement
    int initial_intervals = 8;
};

// integral of f over [a,b]; throws tolerance_error when refinement stalls
template <class F>
inline double integrate(F&& f, double a, double b, const quad_options& opt = {}) {
    if (!(b >= a)) throw config_error("integrate: bad interval");
    if (a == b) return 0.0;
    std::priority_queue<detail::quad_interval> heap;
    double total = 0.0, toterr = 0.0;
    std::size_t evals = 0;
    int n0 = opt.initial_intervals < 1 ? 1 : opt.initial_intervals;
    for (int i = 0; i < n0; ++i) {
        double ia = a + (b - a) * i / n0;
        double ib = a + (b - a) * (i + 1) / n0;
        auto iv = detail::eval_interval(f, ia, ib);
        total += iv.val;
        toterr += iv.err;
        heap.push(iv);
        evals += 31;
    }
    double span = b - a;
    while (toterr > opt.abs_floor && toterr > opt.rel_tol * std::fabs(total)) {
        if (evals >= opt.max_evals)
            throw tolerance_error("integrate: eval budget exhausted before tolerance");
        auto worst = heap.top();
        if (worst.b - worst.a < 1e-15 * span)
            throw tolerance_error("integrate: interval underflow before tolerance");
        heap.pop();
        total -= worst.val;
        toterr -= worst.err;
        double mid = 0.5 * (worst.a + worst.b);
        auto l = detail::eval_interval(f, worst.a, mid);
        auto r = detail::eval_interval(f, mid, worst.b);
        evals += 62;
        total += l.val + r.val;
        toterr += l.err + r.err;
        heap.push(l);
        heap.push(r);
    }
    return total;
}

// fixed 64-node Gauss-Legendre pass, for integrands known to be smooth
template <class F>
inline double integrate_gl64(F&& f, double a, double b) {
    const detail::gl_rule& r = detail::gl64();
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < r.x.size(); ++k) s += r.w[k] * f(c + h * r.x[k]);
    return s * h;
}

}

#endif
