#pragma once

#include <vector>

#include "oulab/domain.hpp"
#include "oulab/estimators.hpp"
#include "oulab/testfunctions.hpp"

namespace oulab {

// Explicit finite-difference solver for the Cauchy-Dirichlet problem of the
// degenerate Kolmogorov operator in 2D:
//   D_t u = (c/2) D^2_{x1} u + (A xi)_1 D_{x1} u + (A xi)_2 D_{x2} u
// on O_r = {g < r}, u = 0 outside, u(0) = phi. Requires the Example-1
// structure: diffusion only in the first coordinate (C = diag(c, 0)).
struct Mesh2D {
    double x1_min = -1.0, x1_max = 1.0;
    double x2_min = -1.0, x2_max = 1.0;
    int n1 = 201, n2 = 201;
    double dt = 0.0;  // 0 => largest stable step (0.9 safety factor)

    double dx1() const { return (x1_max - x1_min) / (n1 - 1); }
    double dx2() const { return (x2_max - x2_min) / (n2 - 1); }
};

struct PdeSolution {
    Mesh2D mesh;
    double T = 0.0;
    double dt = 0.0;
    std::int64_t steps = 0;
    std::vector<double> u;  // row-major [i1 * n2 + i2]; 0 on exterior nodes

    double value_at(const Vec& x) const;     // bilinear interpolation
    Vec gradient_at(const Vec& x) const;     // centered differences
};

// Explicit Euler, second-order centered diffusion, first-order upwind
// transport (direction by drift sign). Monotone under the enforced CFL
// bound; throws ErrorKind::model for non-ex1 structure and
// ErrorKind::invalid_input with a suggested dt on CFL violation.
PdeSolution solve_dirichlet_2d(const OUModel& model, const ConvexDomain& domain,
                               const TestFunction& phi, double T,
                               const Mesh2D& mesh);

struct McPdeComparison {
    Vec x;
    double pde = 0.0;
    double mc = 0.0;
    double mc_se = 0.0;
    double gap = 0.0;
    double gap_in_se = 0.0;
};

std::vector<McPdeComparison> compare_mc_pde(const OUModel& model,
                                            const ConvexDomain& domain,
                                            const TestFunction& phi, double T,
                                            const Mesh2D& mesh,
                                            const std::vector<Vec>& states,
                                            int mc_level, const McOptions& opt);

}  // namespace oulab
