// End-to-end validation runner: one pass/fail line per criterion, nonzero
// exit when anything fails. Registered with ctest; `oulab validate` runs the
// same suite.
#include <cstdio>
#include <cstring>

#include "oulab/validate.hpp"

int main(int argc, char** argv) {
    oulab::ValidateOptions opt;
    opt.threads = 2;
    opt.out_dir = "/tmp";
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--quick") == 0) opt.quick = true;
    opt.on_result = [](const oulab::CriterionResult& r) {
        std::printf("[%2d] %-48s %s  (%.1fs)\n      %s\n", r.id, r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.runtime_s, r.detail.c_str());
        std::fflush(stdout);
    };
    const auto results = oulab::run_validation(opt);
    const bool ok = oulab::all_passed(results);
    std::printf("%s: %zu criteria\n", ok ? "ALL PASS" : "FAILURES", results.size());
    return ok ? 0 : 1;
}
