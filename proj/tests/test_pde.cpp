#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "oulab/pde.hpp"
#include "test_helpers.hpp"

using namespace oulab;
using namespace oulab::testing;

namespace {

McOptions opts(std::int64_t m, std::uint64_t seed) {
    McOptions o;
    o.m = m;
    o.seed = seed;
    return o;
}

}  // namespace

TEST_CASE("zero data stays zero; maximum principle") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    Mesh2D mesh;
    mesh.x1_min = mesh.x2_min = -1.05;
    mesh.x1_max = mesh.x2_max = 1.05;
    mesh.n1 = mesh.n2 = 81;

    // phi vanishing on the domain
    Vec nrm(2);
    nrm << 1.0, 0.0;
    const PdeSolution zero =
        solve_dirichlet_2d(m, ball, TestFunction::halfspace(nrm, 100.0), 0.3, mesh);
    for (double v : zero.u) CHECK(v == 0.0);

    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 0.7);
    const PdeSolution sol = solve_dirichlet_2d(m, ball, bump, 0.3, mesh);
    for (double v : sol.u) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("CFL violation raises with a suggested step") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    Mesh2D mesh;
    mesh.n1 = mesh.n2 = 101;
    mesh.dt = 1.0;  // absurd
    bool threw = false;
    try {
        solve_dirichlet_2d(m, ball, TestFunction::gauss_bump(Vec::Zero(2), 1.0), 0.1,
                           mesh);
    } catch (const Error& e) {
        threw = e.kind() == ErrorKind::invalid_input &&
                std::string(e.what()).find("stable dt") != std::string::npos;
    }
    CHECK(threw);

    Mat badC(2, 2);
    badC << 1.0, 0.0, 0.0, 0.5;
    CHECK_THROWS_AS(solve_dirichlet_2d(OUModel::make(m.A, badC), ball,
                                       TestFunction::constant_one(2), 0.1, mesh),
                    Error);
}

TEST_CASE("short horizon, large domain approximates the unstopped semigroup") {
    const OUModel m = ex1_model();
    const ConvexDomain big = make_ball_domain(2, 4.0);
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 0.8);
    Mesh2D mesh;
    mesh.x1_min = mesh.x2_min = -2.1;
    mesh.x1_max = mesh.x2_max = 2.1;
    mesh.n1 = mesh.n2 = 211;
    const double T = 0.1;
    const PdeSolution sol = solve_dirichlet_2d(m, big, bump, T, mesh);
    Vec x(2);
    x << 0.2, 0.1;
    const EstimatorResult mc = unstopped_direct(m, bump, x, T, opts(200000, 5));
    const double gap = std::abs(sol.value_at(x) - mc.mean);
    INFO("pde=", sol.value_at(x), " mc=", mc.mean);
    CHECK(gap < std::max(3.0 * mc.stderr_, 0.02 * mc.mean));
}

TEST_CASE("stopped semigroup cross-check at the acceptance point") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    Mesh2D mesh;
    mesh.x1_min = mesh.x2_min = -1.02;
    mesh.x1_max = mesh.x2_max = 1.02;
    mesh.n1 = mesh.n2 = 201;
    const double T = 0.5;
    const PdeSolution sol = solve_dirichlet_2d(m, ball, bump, T, mesh);
    Vec x(2);
    x << 0.2, 0.1;
    const EstimatorResult mc =
        stopped_direct(m, ball, bump, x, DyadicGrid::make(T, 10), opts(100000, 7));
    const double pde = sol.value_at(x);
    std::printf("[pde] u(T,x)=%.5f mc=%.5f (se %.5f)\n", pde, mc.mean, mc.stderr_);
    CHECK(std::abs(pde - mc.mean) <
          std::max(3.0 * mc.stderr_, 0.05 * std::max(pde, mc.mean)));
}

TEST_CASE("mesh refinement shrinks the gap to the MC reference") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    const double T = 0.5;
    Vec x(2);
    x << 0.2, 0.1;
    const EstimatorResult mc =
        stopped_direct(m, ball, bump, x, DyadicGrid::make(T, 12), opts(200000, 11));
    // start from a genuinely coarse mesh so the upwind error dominates the
    // reference's own discrete-exit bias
    double prev = HUGE_VAL;
    for (int nodes : {11, 21, 41}) {
        Mesh2D mesh;
        mesh.x1_min = mesh.x2_min = -1.02;
        mesh.x1_max = mesh.x2_max = 1.02;
        mesh.n1 = mesh.n2 = nodes;
        const PdeSolution sol = solve_dirichlet_2d(m, ball, bump, T, mesh);
        const double gap = std::abs(sol.value_at(x) - mc.mean);
        std::printf("[pde-refine] nodes=%d gap=%.5f\n", nodes, gap);
        CHECK(gap < prev + 2.0 * mc.stderr_);
        prev = gap;
    }
    CHECK(prev < 0.03);
}

TEST_CASE("compare_mc_pde report") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    Mesh2D mesh;
    mesh.x1_min = mesh.x2_min = -1.02;
    mesh.x1_max = mesh.x2_max = 1.02;
    mesh.n1 = mesh.n2 = 121;
    std::vector<Vec> pts;
    Vec a(2), b(2);
    a << 0.2, 0.1;
    b << -0.3, 0.4;
    pts = {a, b};
    const auto rows = compare_mc_pde(m, ball, bump, 0.5, mesh, pts, 9, opts(50000, 13));
    CHECK(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.mc > 0.0);
        CHECK(row.pde > 0.0);
        CHECK(std::abs(row.gap) < 0.08);
    }
}
