#pragma once

#include <functional>
#include <string>

#include "oulab/matrixcalc.hpp"
#include "oulab/rng.hpp"

namespace oulab {

// Convex gauge domain O_r = {g < r}. Built-ins are the quadratic gauges
// g(x) = x' M x (ball: M = I, ellipsoid: M SPD); those get the vectorized
// sweep path. User domains supply (g, grad g) callables plus declared growth
// constants and a bounding radius; validation is sampling-based.
struct ConvexDomain {
    enum class Kind { quad, custom };
    Kind kind = Kind::quad;
    std::string name = "ball";
    double r = 1.0;
    int dim = 0;

    Mat M;  // quad gauges

    std::function<double(const Vec&)> g_fn;       // custom
    std::function<Vec(const Vec&)> g_grad_fn;     // custom

    // Hypothesis constants |g| + |g'| <= a + e^{b |x|} and a radius R with
    // {g <= r} contained in the ball of radius R (sampling-checked).
    double growth_a = 1.0;
    double growth_b = 2.0;
    double bounding_radius = 0.0;

    double g(const Vec& x) const;
    Vec g_grad(const Vec& x) const;
    bool contains_closure(const Vec& x) const { return g(x) <= r; }
};

ConvexDomain make_ball_domain(int dim, double r);
ConvexDomain make_ellipsoid_domain(const Mat& M, double r);
ConvexDomain make_custom_domain(int dim, double r,
                                std::function<double(const Vec&)> g,
                                std::function<Vec(const Vec&)> g_grad,
                                double growth_a, double growth_b,
                                double bounding_radius);

// Sampling validation of the Hypothesis-2 structure: g(0) = 0, positivity and
// nonvanishing gradient away from 0, midpoint convexity on random pairs,
// growth bound, boundedness of {g <= r}. Throws ErrorKind::domain on failure.
void validate_domain(const ConvexDomain& domain, std::uint64_t seed = 20240901,
                     int samples = 256);

// Gamma_n: max over j = 0..2^n of g(path_j + shift_j). path excludes t_0; the
// j = 0 term is g(x0_value) with x0_value = h(0) + d(x,0) supplied by the
// caller (for the shifted convolution this is just x).
// path/shift: stacked (t_1..t_{2^n}), d components each.
double gamma_sup(const ConvexDomain& domain, const Vec& path, const Vec& shift,
                 const Vec& x0_value);

// Danskin directional derivative of h -> Gamma_n(h + d(x,.)) in a grid
// direction: g'(k(t_j*)) . direction(t_j*) at the maximizing index j*, first
// index on ties. The j = 0 term does not depend on h, so a maximizer at j = 0
// yields 0.
double gamma_grad_dir(const ConvexDomain& domain, const Vec& path,
                      const Vec& shift, const Vec& x0_value,
                      const Vec& direction);

}  // namespace oulab
