#include "oulab/testfunctions.hpp"

#include <cmath>

namespace oulab {

double TestFunction::operator()(const Vec& xi) const {
    switch (kind) {
        case Kind::constant_one:
            return 1.0;
        case Kind::gauss_bump: {
            const double q = (xi - center).squaredNorm() / (width * width);
            return std::exp(-q);
        }
        case Kind::bounded_sin:
            return std::sin(wavevec.dot(xi) + offset);
        case Kind::halfspace_indicator:
            return wavevec.dot(xi) >= offset ? 1.0 : 0.0;
    }
    return 0.0;
}

double TestFunction::sup_norm() const { return 1.0; }

TestFunction TestFunction::constant_one(int dim) {
    TestFunction f;
    f.kind = Kind::constant_one;
    f.center = Vec::Zero(dim);
    return f;
}

TestFunction TestFunction::gauss_bump(const Vec& center, double width) {
    TestFunction f;
    f.kind = Kind::gauss_bump;
    f.center = center;
    f.width = width;
    return f;
}

TestFunction TestFunction::bounded_sin(const Vec& wavevec, double offset) {
    TestFunction f;
    f.kind = Kind::bounded_sin;
    f.wavevec = wavevec;
    f.offset = offset;
    f.center = Vec::Zero(wavevec.size());
    return f;
}

TestFunction TestFunction::halfspace(const Vec& normal, double offset) {
    TestFunction f;
    f.kind = Kind::halfspace_indicator;
    f.wavevec = normal;
    f.offset = offset;
    f.center = Vec::Zero(normal.size());
    return f;
}

TestFunction TestFunction::parse(const std::string& name, int dim) {
    if (name == "constant_one" || name == "one") return constant_one(dim);
    if (name == "gauss_bump")
        return gauss_bump(Vec::Zero(dim), 1.0);
    if (name == "bounded_sin")
        return bounded_sin(Vec::Ones(dim), 0.0);
    if (name == "halfspace_indicator" || name == "halfspace")
        return halfspace(Vec::Ones(dim), 0.0);
    throw Error(ErrorKind::config, "unknown test function: " + name);
}

}  // namespace oulab
