#include "oulab/report.hpp"

#include "oulab/csvio.hpp"

namespace oulab {

namespace {

void push_vec(std::vector<std::string>& cells, const Vec& v, int want_dim) {
    for (int c = 0; c < want_dim; ++c)
        cells.push_back(c < v.size() ? format_double(v(c)) : "");
}

}  // namespace

void write_estimator_csv(const std::string& path, std::uint64_t config_hash,
                         std::uint64_t seed, const std::vector<EstimatorRow>& rows,
                         bool timing) {
    int dmax = 0;
    for (const auto& r : rows) dmax = std::max<int>(dmax, static_cast<int>(r.x.size()));
    std::vector<std::string> cols = {"estimator"};
    for (int c = 1; c <= dmax; ++c) cols.push_back("x_" + std::to_string(c));
    for (const char* c : {"T", "r", "n", "m", "seed", "mean", "stderr", "wall_ms"})
        cols.push_back(c);
    CsvWriter w(path, cols, config_hash, seed);
    for (const auto& r : rows) {
        std::vector<std::string> cells = {r.estimator};
        push_vec(cells, r.x, dmax);
        cells.push_back(format_double(r.T));
        cells.push_back(format_double(r.r));
        cells.push_back(std::to_string(r.n));
        cells.push_back(std::to_string(r.result.m));
        cells.push_back(std::to_string(r.result.seed));
        cells.push_back(format_double(r.result.mean));
        cells.push_back(format_double(r.result.stderr_));
        cells.push_back(format_double(timing ? r.result.wall_ms : 0.0));
        w.row(cells);
    }
}

void write_gradient_csv(const std::string& path, std::uint64_t config_hash,
                        std::uint64_t seed, const std::vector<GradientRow>& rows,
                        bool timing) {
    int dmax = 0;
    for (const auto& r : rows) dmax = std::max<int>(dmax, static_cast<int>(r.x.size()));
    std::vector<std::string> cols = {"method", "variant", "sign"};
    for (int c = 1; c <= dmax; ++c) cols.push_back("x_" + std::to_string(c));
    for (int c = 1; c <= dmax; ++c) cols.push_back("y_" + std::to_string(c));
    for (const char* c :
         {"interior", "boundary", "total", "stderr", "shell_count", "seed", "wall_ms"})
        cols.push_back(c);
    CsvWriter w(path, cols, config_hash, seed);
    for (const auto& r : rows) {
        std::vector<std::string> cells = {r.method, r.variant, r.sign};
        push_vec(cells, r.x, dmax);
        push_vec(cells, r.y, dmax);
        cells.push_back(format_double(r.result.interior.mean));
        cells.push_back(format_double(r.result.boundary.mean));
        cells.push_back(format_double(r.result.total));
        cells.push_back(format_double(r.result.total_stderr));
        cells.push_back(std::to_string(r.result.shell_count));
        cells.push_back(std::to_string(r.result.interior.seed));
        cells.push_back(format_double(
            timing ? r.result.interior.wall_ms + r.result.boundary.wall_ms : 0.0));
        w.row(cells);
    }
}

void write_lambda_csv(const std::string& path, std::uint64_t config_hash,
                      std::uint64_t seed, const std::vector<LambdaPoint>& points) {
    CsvWriter w(path, {"s", "lambda", "stderr"}, config_hash, seed);
    for (const auto& p : points) w.row_values({p.s, p.value, p.stderr_});
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace oulab
