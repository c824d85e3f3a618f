#pragma once

#include <string>

#include "oulab/matrixcalc.hpp"

namespace oulab {

// Bounded Borel test functions phi: H -> R for the semigroup estimators.
struct TestFunction {
    enum class Kind { gauss_bump, bounded_sin, halfspace_indicator, constant_one };
    Kind kind = Kind::constant_one;
    Vec center;      // gauss_bump
    double width = 1.0;
    Vec wavevec;     // bounded_sin / halfspace normal
    double offset = 0.0;

    double operator()(const Vec& xi) const;
    double sup_norm() const;  // recorded bound (phi is in B_b)
    bool smooth() const { return kind != Kind::halfspace_indicator; }

    static TestFunction constant_one(int dim);
    static TestFunction gauss_bump(const Vec& center, double width);
    static TestFunction bounded_sin(const Vec& wavevec, double offset = 0.0);
    static TestFunction halfspace(const Vec& normal, double offset);
    static TestFunction parse(const std::string& name, int dim);
};

}  // namespace oulab
