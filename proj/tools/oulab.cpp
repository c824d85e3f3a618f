// Experiment runner for the stopped-semigroup laboratory: model checks, path
// sampling, semigroup and gradient estimators, the Kolmogorov PDE
// cross-check, and the bundled validation suite.
//
// Configuration precedence: flags > environment (OULAB_SEED, OULAB_THREADS,
// OULAB_OUT, OULAB_FORMAT) > config file > defaults.
//
// Exit codes: 0 success, 1 validation failure, 2 config error,
// 3 numerical/conditioning error.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "oulab/config.hpp"
#include "oulab/csvio.hpp"
#include "oulab/pde.hpp"
#include "oulab/report.hpp"
#include "oulab/validate.hpp"

using namespace oulab;
using nlohmann::json;

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir;
    std::string format;
    std::string estimator = "stopped_cm";
    std::string method = "main";
    std::string sampler = "ar1";
    std::string x_csv, y_csv;
    std::int64_t seed = -1;
    int threads = 0;
    std::int64_t m = 0;
    int n = 0;
    double T = 0.0;
    double r = 0.0;
    std::string phi;
    bool quick = false;
    int timing = -1;
};

void add_common(CLI::App* app, CliArgs& a) {
    app->add_option("--config", a.config_path, "key=value config file");
    app->add_option("--seed", a.seed, "RNG seed");
    app->add_option("--threads", a.threads, "worker threads");
    app->add_option("--out", a.out_dir, "output directory");
    app->add_option("--format", a.format, "csv or json");
    app->add_option("--m", a.m, "Monte Carlo sample count");
    app->add_option("--n", a.n, "dyadic grid level");
    app->add_option("--T", a.T, "horizon");
    app->add_option("--r", a.r, "domain level");
    app->add_option("--x", a.x_csv, "base state, comma separated");
    app->add_option("--y", a.y_csv, "direction, comma separated");
    app->add_option("--phi", a.phi, "test function name");
    app->add_option("--timing", a.timing, "1: write wall_ms, 0: zero it");
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

RunConfig merged_config(const CliArgs& a) {
    KeyValueConfig kv;
    if (!a.config_path.empty()) kv = KeyValueConfig::from_file(a.config_path);
    // environment layer
    if (const char* v = std::getenv("OULAB_SEED")) kv.set("run.seed", v);
    if (const char* v = std::getenv("OULAB_THREADS")) kv.set("run.threads", v);
    if (const char* v = std::getenv("OULAB_OUT")) kv.set("out.dir", v);
    if (const char* v = std::getenv("OULAB_FORMAT")) kv.set("out.format", v);
    // flag layer
    if (a.seed >= 0) kv.set("run.seed", std::to_string(a.seed));
    if (a.threads > 0) kv.set("run.threads", std::to_string(a.threads));
    if (!a.out_dir.empty()) kv.set("out.dir", a.out_dir);
    if (!a.format.empty()) kv.set("out.format", a.format);
    if (a.m > 0) kv.set("run.m", std::to_string(a.m));
    if (a.n > 0) kv.set("run.n", std::to_string(a.n));
    if (a.T > 0) kv.set("run.T", format_double(a.T));
    if (a.r > 0) kv.set("domain.r", format_double(a.r));
    if (!a.x_csv.empty()) {
        std::string s = a.x_csv;
        for (char& c : s)
            if (c == ',') c = ' ';
        kv.set("run.x", s);
    }
    if (!a.y_csv.empty()) {
        std::string s = a.y_csv;
        for (char& c : s)
            if (c == ',') c = ' ';
        kv.set("run.y", s);
    }
    if (!a.phi.empty()) kv.set("estimator.phi", a.phi);
    if (a.timing >= 0) kv.set("out.timing", std::to_string(a.timing));
    return build_run_config(kv);
}

McOptions mc_options(const RunConfig& rc) {
    McOptions o;
    o.m = rc.m;
    o.seed = rc.seed;
    o.stream = 0;
    o.threads = rc.threads;
    return o;
}

std::string out_path(const RunConfig& rc, const std::string& name) {
    std::filesystem::create_directories(rc.out_dir);
    return rc.out_dir + "/" + name;
}

void emit_json(const RunConfig& rc, const std::string& name, const json& payload) {
    json doc;
    doc["artifact_version"] = kArtifactVersion;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(rc.config_hash));
    doc["config_hash"] = hash;
    doc["seed"] = rc.seed;
    doc["payload"] = payload;
    std::ofstream out(out_path(rc, name));
    out << doc.dump(2) << "\n";
}

int cmd_check(const RunConfig& rc) {
    validate_domain(rc.domain);
    std::vector<double> times = {0.1, 0.5, 1.0};
    if (std::find(times.begin(), times.end(), rc.T) == times.end())
        times.push_back(rc.T);
    const HypothesisReport rep = check_hypothesis1(rc.model, times);
    std::printf("kalman_rank_ok: %s\n", rep.kalman_rank_ok ? "true" : "false");
    std::printf("min_det_Qt:     %.6e\n", rep.min_det_Qt);
    std::printf("consistent:     %s\n", rep.consistent ? "true" : "false");
    for (std::size_t i = 0; i < rep.probed_times.size(); ++i)
        std::printf("  det Q_%g = %.6e\n", rep.probed_times[i], rep.probed_dets[i]);
    if (rc.format == "json") {
        json j;
        j["kalman_rank_ok"] = rep.kalman_rank_ok;
        j["min_det_Qt"] = rep.min_det_Qt;
        j["consistent"] = rep.consistent;
        j["probed_times"] = rep.probed_times;
        j["probed_dets"] = rep.probed_dets;
        emit_json(rc, "check.json", j);
    }
    return 0;
}

int cmd_sample(const RunConfig& rc, const std::string& sampler) {
    const DyadicGrid grid = DyadicGrid::make(rc.T, rc.n);
    const PathBatch batch = sampler == "joint"
                                ? sample_wa_joint(rc.model, grid, rc.seed, 0, rc.m)
                                : sample_wa_ar1(rc.model, grid, rc.seed, 0, rc.m);
    char head[96];
    std::snprintf(head, sizeof head, "oulab v%s config_hash=%016llx seed=%llu",
                  kArtifactVersion, (unsigned long long)rc.config_hash,
                  (unsigned long long)rc.seed);
    write_batch_csv(batch, out_path(rc, "paths.csv"), head);
    write_batch_binary(batch, out_path(rc, "paths.bin"));
    std::printf("wrote %lld paths at level %d to %s/paths.{csv,bin}\n",
                (long long)rc.m, rc.n, rc.out_dir.c_str());
    return 0;
}

int cmd_estimate(const RunConfig& rc, const std::string& which) {
    const DyadicGrid grid = DyadicGrid::make(rc.T, rc.n);
    const McOptions opt = mc_options(rc);
    EstimatorResult res;
    if (which == "unstopped_direct") {
        res = unstopped_direct(rc.model, rc.phi, rc.x, rc.T, opt);
    } else if (which == "unstopped_cm") {
        res = unstopped_cm(rc.model, rc.phi, rc.x, rc.T, opt);
    } else if (which == "stopped_direct") {
        res = stopped_direct(rc.model, rc.domain, rc.phi, rc.x, grid, opt);
    } else if (which == "stopped_cm") {
        const ShiftKernel kernel(rc.model, grid, rc.effective_quad_level());
        res = stopped_cm(kernel, rc.domain, rc.phi, rc.x, opt);
    } else {
        throw Error(ErrorKind::config, "unknown estimator: " + which);
    }
    res.config_hash = rc.config_hash;
    std::printf("%s: mean %.8g stderr %.3g (m=%lld)\n", which.c_str(), res.mean,
                res.stderr_, (long long)res.m);
    if (rc.format == "json") {
        json j;
        j["estimator"] = which;
        j["mean"] = res.mean;
        j["stderr"] = res.stderr_;
        j["m"] = res.m;
        j["wall_ms"] = rc.timing ? res.wall_ms : 0.0;
        emit_json(rc, "estimate.json", j);
    } else {
        write_estimator_csv(out_path(rc, "estimate.csv"), rc.config_hash, rc.seed,
                            {{which, rc.x, rc.T, rc.domain.r, rc.n, res}}, rc.timing);
    }
    return 0;
}

int cmd_lambda(const RunConfig& rc) {
    const DyadicGrid grid = DyadicGrid::make(rc.T, rc.n);
    const ShiftKernel kernel(rc.model, grid, rc.effective_quad_level());
    const McOptions opt = mc_options(rc);
    std::vector<double> svals;
    for (int i = 0; i < 20; ++i)
        svals.push_back(rc.domain.r / 2 + i * (rc.domain.r / 19.0));
    const auto pts = lambda_cdf(kernel, rc.domain, rc.x, opt, svals);
    write_lambda_csv(out_path(rc, "lambda.csv"), rc.config_hash, rc.seed, pts);
    const EstimatorResult dens = lambda_density(kernel, rc.domain, rc.x, opt,
                                                rc.domain.r, rc.domain.r / 50.0);
    const EhrhardReport rep = ehrhard_check(pts);
    std::printf("density at r: %.6g (se %.3g)\n", dens.mean, dens.stderr_);
    std::printf("ehrhard: worst violation %.2f SE, monotone %s\n",
                rep.max_concavity_violation_in_se, rep.monotone ? "yes" : "no");
    if (rc.format == "json") {
        json j;
        j["density_at_r"] = dens.mean;
        j["density_stderr"] = dens.stderr_;
        j["ehrhard_violation_se"] = rep.max_concavity_violation_in_se;
        emit_json(rc, "lambda.json", j);
    }
    return 0;
}

const char* variant_name(GradConfig::WeightVariant v) {
    return v == GradConfig::WeightVariant::cm_weighted ? "cm_weighted" : "unweighted";
}
const char* sign_name(GradConfig::BoundarySign s) {
    return s == GradConfig::BoundarySign::plus ? "plus" : "minus";
}

int cmd_gradient(const RunConfig& rc, const std::string& method) {
    const DyadicGrid grid = DyadicGrid::make(rc.T, rc.n);
    const ShiftKernel kernel(rc.model, grid, rc.effective_quad_level());
    const McOptions opt = mc_options(rc);
    std::vector<GradientRow> rows;
    if (method == "main") {
        const GradResult gr =
            grad_main(kernel, rc.domain, rc.phi, rc.x, rc.y, opt, rc.grad);
        rows.push_back({"main", variant_name(rc.grad.weight_variant),
                        sign_name(rc.grad.boundary_sign), rc.x, rc.y, gr});
    } else if (method == "discrete") {
        const GridGaussian gg = grid_covariance(rc.model, grid);
        const GradResult gr =
            grad_discrete_full(kernel, gg, rc.domain, rc.phi, rc.x, rc.y, opt);
        rows.push_back({"discrete", "exact", "plus", rc.x, rc.y, gr});
    } else if (method == "fd") {
        const FdResult fr = fd_oracle(rc.model, rc.domain, rc.phi, rc.x, rc.y, grid,
                                      opt, rc.grad.fd_step);
        GradResult gr;
        gr.total = fr.est.mean;
        gr.total_stderr = fr.est.stderr_;
        gr.interior = fr.est;
        rows.push_back({"fd", "crn", "central", rc.x, rc.y, gr});
        std::printf("fd bias estimate: %.3g (halved step %.8g)\n", fr.bias_estimate,
                    fr.half_step);
    } else {
        throw Error(ErrorKind::config, "unknown gradient method: " + method);
    }
    for (const auto& row : rows)
        std::printf("%s: total %.8g stderr %.3g (interior %.6g boundary %.6g shell %lld)\n",
                    row.method.c_str(), row.result.total, row.result.total_stderr,
                    row.result.interior.mean, row.result.boundary.mean,
                    (long long)row.result.shell_count);
    write_gradient_csv(out_path(rc, "gradient.csv"), rc.config_hash, rc.seed, rows,
                       rc.timing);
    return 0;
}

int cmd_pde(const RunConfig& rc) {
    Mesh2D mesh;
    const double R = rc.domain.bounding_radius * 1.02;
    mesh.x1_min = mesh.x2_min = -R;
    mesh.x1_max = mesh.x2_max = R;
    mesh.n1 = mesh.n2 = 201;
    const PdeSolution sol = solve_dirichlet_2d(rc.model, rc.domain, rc.phi, rc.T, mesh);
    CsvWriter w(out_path(rc, "pde.csv"), {"x1", "x2", "u"}, rc.config_hash, rc.seed);
    for (int i = 0; i < mesh.n1; ++i)
        for (int j = 0; j < mesh.n2; ++j)
            w.row_values({mesh.x1_min + i * mesh.dx1(), mesh.x2_min + j * mesh.dx2(),
                          sol.u[static_cast<std::size_t>(i) * mesh.n2 + j]});
    std::printf("solved %d x %d mesh, %lld steps, u(T, x) = %.8g\n", mesh.n1, mesh.n2,
                (long long)sol.steps, sol.value_at(rc.x));
    return 0;
}

int cmd_validate(const RunConfig& rc, bool quick) {
    ValidateOptions vo;
    vo.quick = quick;
    vo.threads = rc.threads;
    vo.out_dir = rc.out_dir;
    vo.on_result = [](const CriterionResult& r) {
        std::printf("[%2d] %-48s %s  (%.1fs)\n      %s\n", r.id, r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.runtime_s, r.detail.c_str());
        std::fflush(stdout);
    };
    const auto results = run_validation(vo);
    const bool ok = all_passed(results);
    std::printf("%s\n", ok ? "ALL PASS" : "FAILURES PRESENT");
    if (rc.format == "json") {
        json arr = json::array();
        for (const auto& r : results)
            arr.push_back({{"id", r.id},
                           {"name", r.name},
                           {"pass", r.pass},
                           {"runtime_s", r.runtime_s},
                           {"detail", r.detail}});
        emit_json(rc, "validate.json", arr);
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oulab: stopped OU semigroup laboratory"};
    app.require_subcommand(1);
    CliArgs a;
    a.out_dir = env_or("OULAB_OUT", "");

    CLI::App* c_check = app.add_subcommand("check", "hypothesis checks for the model");
    CLI::App* c_sample = app.add_subcommand("sample", "sample stochastic convolution paths");
    c_sample->add_option("--sampler", a.sampler, "ar1 or joint");
    CLI::App* c_estimate = app.add_subcommand("estimate", "semigroup estimators");
    c_estimate->add_option("--estimator", a.estimator,
                           "unstopped_direct|unstopped_cm|stopped_direct|stopped_cm");
    CLI::App* c_lambda = app.add_subcommand("lambda", "exit-level CDF, density, Ehrhard");
    CLI::App* c_gradient = app.add_subcommand("gradient", "gradient estimators");
    c_gradient->add_option("--method", a.method, "main|discrete|fd");
    CLI::App* c_pde = app.add_subcommand("pde", "Kolmogorov Cauchy-Dirichlet solver");
    CLI::App* c_validate = app.add_subcommand("validate", "run the validation suite");
    c_validate->add_flag("--quick", a.quick, "reduced sample sizes");

    for (CLI::App* sub : {c_check, c_sample, c_estimate, c_lambda, c_gradient, c_pde,
                          c_validate})
        add_common(sub, a);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        RunConfig rc = merged_config(a);
        if (rc.out_dir == ".") rc.out_dir = a.out_dir.empty() ? "." : a.out_dir;
        if (c_check->parsed()) return cmd_check(rc);
        if (c_sample->parsed()) return cmd_sample(rc, a.sampler);
        if (c_estimate->parsed()) return cmd_estimate(rc, a.estimator);
        if (c_lambda->parsed()) return cmd_lambda(rc);
        if (c_gradient->parsed()) return cmd_gradient(rc, a.method);
        if (c_pde->parsed()) return cmd_pde(rc);
        if (c_validate->parsed()) return cmd_validate(rc, a.quick);
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
        return (e.kind() == ErrorKind::config || e.kind() == ErrorKind::invalid_input)
                   ? 2
                   : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
