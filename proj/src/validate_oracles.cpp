#include <cmath>

#include "oulab/mathutil.hpp"
#include "oulab/validate.hpp"

namespace oulab::oracle {

// Absorbing barriers at 0 and L for Brownian motion started at z in (0, L):
// the transition density by the method of images is
//   p(z, y) = sum_k [ phi_T(y - z + 2kL) - phi_T(y + z + 2kL) ],
// and integrating over y in (0, L) gives the survival probability. The
// two-sided interval (-a, a) maps to L = 2a, z = x + a.
double brownian_two_sided_survival(double x, double a, double T) {
    if (std::abs(x) >= a) return 0.0;
    const double L = 2.0 * a;
    const double z = x + a;
    const double s = std::sqrt(T);
    double acc = 0.0;
    for (int k = -64; k <= 64; ++k) {
        const double shift = 2.0 * k * L;
        acc += norm_cdf((L - z + shift) / s) - norm_cdf((-z + shift) / s);
        acc -= norm_cdf((L + z + shift) / s) - norm_cdf((z + shift) / s);
    }
    return acc;
}

// Same probability through the Dirichlet eigenfunction expansion on (0, L):
//   P_z(tau > T) = sum_{j odd} (4 / (j pi)) sin(j pi z / L) e^{-j^2 pi^2 T / (2 L^2)}.
double brownian_two_sided_survival_spectral(double x, double a, double T) {
    if (std::abs(x) >= a) return 0.0;
    const double L = 2.0 * a;
    const double z = x + a;
    double acc = 0.0;
    for (int j = 1; j <= 399; j += 2) {
        const double lam = j * M_PI / L;
        acc += (4.0 / (j * M_PI)) * std::sin(lam * z) * std::exp(-0.5 * lam * lam * T);
    }
    return acc;
}

}  // namespace oulab::oracle
