#pragma once

#include <string>
#include <vector>

#include "oulab/estimators.hpp"
#include "oulab/gradient.hpp"

namespace oulab {

// CSV emission following the external-interface column contracts. Shared by
// the CLI and the validation suite (the reproducibility criterion compares
// these files byte for byte, so there is exactly one code path producing
// them). With timing disabled the wall_ms column is written as 0.

struct EstimatorRow {
    std::string estimator;
    Vec x;
    double T = 0.0;
    double r = 0.0;
    int n = 0;
    EstimatorResult result;
};

void write_estimator_csv(const std::string& path, std::uint64_t config_hash,
                         std::uint64_t seed, const std::vector<EstimatorRow>& rows,
                         bool timing);

struct GradientRow {
    std::string method;
    std::string variant;
    std::string sign;
    Vec x;
    Vec y;
    GradResult result;
};

void write_gradient_csv(const std::string& path, std::uint64_t config_hash,
                        std::uint64_t seed, const std::vector<GradientRow>& rows,
                        bool timing);

void write_lambda_csv(const std::string& path, std::uint64_t config_hash,
                      std::uint64_t seed, const std::vector<LambdaPoint>& points);

std::string json_escape(const std::string& s);

}  // namespace oulab
