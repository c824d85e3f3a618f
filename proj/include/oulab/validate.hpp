#pragma once

#include <functional>
#include <string>
#include <vector>

namespace oulab {

// End-to-end validation suite: each criterion is pinned (tolerances, sample
// sizes, seeds) in code and reports one pass/fail line. The CLI `validate`
// subcommand and the ctest acceptance binary both run through this.
struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double runtime_s = 0.0;
    std::string detail;
};

struct ValidateOptions {
    bool quick = false;       // reduced sample sizes for a smoke run
    int threads = 1;
    std::string out_dir;      // artifacts (CSV tables) written here if set
    std::function<void(const CriterionResult&)> on_result;  // progress hook
};

std::vector<CriterionResult> run_validation(const ValidateOptions& opt);
bool all_passed(const std::vector<CriterionResult>& rs);

namespace oracle {

// Survival probability of scalar Brownian motion in (-a, a) up to time T,
// started at x: method-of-images series. Independent of the Monte Carlo path.
double brownian_two_sided_survival(double x, double a, double T);

// Same quantity through the eigenfunction (spectral) series; the two series
// must agree to ~1e-12, which the tests assert before the value is trusted.
double brownian_two_sided_survival_spectral(double x, double a, double T);

}  // namespace oracle

}  // namespace oulab
