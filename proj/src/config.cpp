#include "oulab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "oulab/mathutil.hpp"

namespace oulab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
    KeyValueConfig kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::config,
                        "config line " + std::to_string(lineno) + ": expected key = value");
        kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "config file not readable: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

bool KeyValueConfig::has(const std::string& key) const { return map_.count(key) > 0; }

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    const auto it = map_.find(key);
    return it == map_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = map_.find(key);
    if (it == map_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (trim(it->second.substr(pos)).empty()) return v;
    } catch (...) {
    }
    throw Error(ErrorKind::config, "config key '" + key + "': not a number: " + it->second);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = map_.find(key);
    if (it == map_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(it->second, &pos);
        if (trim(it->second.substr(pos)).empty()) return v;
    } catch (...) {
    }
    throw Error(ErrorKind::config, "config key '" + key + "': not an integer: " + it->second);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    const auto it = map_.find(key);
    if (it == map_.end()) return out;
    std::istringstream is(it->second);
    double v;
    while (is >> v) out.push_back(v);
    if (!is.eof())
        throw Error(ErrorKind::config, "config key '" + key + "': not a number list");
    return out;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw Error(ErrorKind::config, "config: empty key");
    map_[key] = value;
}

std::string KeyValueConfig::canonical() const {
    std::string out;
    for (const auto& [k, v] : map_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

std::uint64_t config_hash(const KeyValueConfig& kv) {
    return fnv1a_str(kv.canonical());
}

namespace {

Mat parse_square(const KeyValueConfig& kv, const std::string& key, int d) {
    const std::vector<double> vals = kv.get_doubles(key);
    if (static_cast<int>(vals.size()) != d * d)
        throw Error(ErrorKind::config, "config key '" + key + "': expected " +
                                           std::to_string(d * d) + " row-major entries, got " +
                                           std::to_string(vals.size()));
    Mat M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = vals[i * d + j];
    return M;
}

Vec parse_vec(const KeyValueConfig& kv, const std::string& key, int d, const Vec& fallback) {
    if (!kv.has(key)) return fallback;
    const std::vector<double> vals = kv.get_doubles(key);
    if (static_cast<int>(vals.size()) != d)
        throw Error(ErrorKind::config, "config key '" + key + "': expected " +
                                           std::to_string(d) + " entries");
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = vals[i];
    return v;
}

}  // namespace

RunConfig build_run_config(const KeyValueConfig& kv) {
    RunConfig rc;
    if (kv.has("model.file")) {
        rc.model = load_model_file(kv.get("model.file"));
    } else {
        const int d = static_cast<int>(kv.get_int("model.d", 2));
        if (d < 1 || d > 16)
            throw Error(ErrorKind::config, "config key 'model.d': out of range [1,16]");
        Mat A, C;
        if (kv.has("model.A")) {
            A = parse_square(kv, "model.A", d);
        } else {
            // default: Example-1 nilpotent coupling
            A = Mat::Zero(d, d);
            for (int i = 1; i < d; ++i) A(i, i - 1) = 1.0;
        }
        if (kv.has("model.C")) {
            C = parse_square(kv, "model.C", d);
        } else {
            C = Mat::Zero(d, d);
            C(0, 0) = 1.0;
        }
        try {
            rc.model = OUModel::make(A, C);
        } catch (const Error& e) {
            throw Error(ErrorKind::config, std::string("config key 'model.C': ") + e.what());
        }
    }
    const int d = rc.model.dim;

    const std::string dkind = kv.get("domain.kind", "ball");
    const double r = kv.get_double("domain.r", 1.0);
    if (dkind == "ball") {
        rc.domain = make_ball_domain(d, r);
    } else if (dkind == "ellipsoid") {
        if (!kv.has("domain.M"))
            throw Error(ErrorKind::config, "config key 'domain.M': required for ellipsoid");
        rc.domain = make_ellipsoid_domain(parse_square(kv, "domain.M", d), r);
    } else {
        throw Error(ErrorKind::config, "config key 'domain.kind': unknown '" + dkind + "'");
    }

    rc.T = kv.get_double("run.T", 1.0);
    if (!(rc.T > 0.0)) throw Error(ErrorKind::config, "config key 'run.T': must be > 0");
    rc.n = static_cast<int>(kv.get_int("run.n", 7));
    if (rc.n < 1 || rc.n > 20)
        throw Error(ErrorKind::config, "config key 'run.n': out of range [1,20]");
    rc.m = kv.get_int("run.m", 100000);
    if (rc.m < 2) throw Error(ErrorKind::config, "config key 'run.m': must be >= 2");
    rc.seed = static_cast<std::uint64_t>(kv.get_int("run.seed", 1));
    rc.threads = static_cast<int>(kv.get_int("run.threads", 1));
    rc.quad_level = static_cast<int>(kv.get_int("run.quad_level", 0));

    const std::string phi_name = kv.get("estimator.phi", "gauss_bump");
    rc.phi = TestFunction::parse(phi_name, d);
    if (kv.has("estimator.phi.center")) rc.phi.center = parse_vec(kv, "estimator.phi.center", d, rc.phi.center);
    if (kv.has("estimator.phi.width")) rc.phi.width = kv.get_double("estimator.phi.width", 1.0);
    if (kv.has("estimator.phi.wavevec")) rc.phi.wavevec = parse_vec(kv, "estimator.phi.wavevec", d, rc.phi.wavevec);
    if (kv.has("estimator.phi.offset")) rc.phi.offset = kv.get_double("estimator.phi.offset", 0.0);

    rc.x = parse_vec(kv, "run.x", d, Vec::Zero(d));
    Vec e1 = Vec::Zero(d);
    e1(0) = 1.0;
    rc.y = parse_vec(kv, "run.y", d, e1);

    const std::string bm = kv.get("grad.boundary_method", "shell");
    if (bm == "shell")
        rc.grad.boundary_method = GradConfig::BoundaryMethod::shell;
    else if (bm == "conditional_times_density" || bm == "conditional")
        rc.grad.boundary_method = GradConfig::BoundaryMethod::conditional_times_density;
    else
        throw Error(ErrorKind::config, "config key 'grad.boundary_method': unknown '" + bm + "'");
    const std::string wv = kv.get("grad.weight_variant", "cm_weighted");
    if (wv == "cm_weighted")
        rc.grad.weight_variant = GradConfig::WeightVariant::cm_weighted;
    else if (wv == "unweighted")
        rc.grad.weight_variant = GradConfig::WeightVariant::unweighted;
    else
        throw Error(ErrorKind::config, "config key 'grad.weight_variant': unknown '" + wv + "'");
    const std::string sg = kv.get("grad.boundary_sign", "minus");
    if (sg == "plus")
        rc.grad.boundary_sign = GradConfig::BoundarySign::plus;
    else if (sg == "minus")
        rc.grad.boundary_sign = GradConfig::BoundarySign::minus;
    else
        throw Error(ErrorKind::config, "config key 'grad.boundary_sign': unknown '" + sg + "'");
    rc.grad.shell_eps = kv.get_double("grad.shell_eps", 0.0);
    rc.grad.fd_step = kv.get_double("grad.fd_step", 0.0);

    rc.out_dir = kv.get("out.dir", ".");
    rc.format = kv.get("out.format", "csv");
    if (rc.format != "csv" && rc.format != "json")
        throw Error(ErrorKind::config, "config key 'out.format': must be csv or json");
    rc.timing = kv.get_int("out.timing", 1) != 0;

    rc.canonical_text = kv.canonical();
    rc.config_hash = config_hash(kv);
    return rc;
}

}  // namespace oulab
