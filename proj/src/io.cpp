#include "polyreach/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace polyreach {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path.string() + ": cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(path.string() + ": cannot open for writing");
    }
    out << text;
    if (!out) {
        throw Error(path.string() + ": write failed");
    }
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("$: invalid JSON: ") + e.what());
    }
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError(path + ": " + message);
}

void require_keys(const json& obj, const std::string& path, const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
    if (!obj.is_object()) {
        fail(path, "expected an object");
    }
    for (const auto& key : required) {
        if (!obj.contains(key)) {
            fail(path + "." + key, "missing field");
        }
    }
    for (const auto& [key, _] : obj.items()) {
        if (!required.contains(key) && !optional.contains(key)) {
            fail(path + "." + key, "unknown field");
        }
    }
}

double read_number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        fail(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        fail(path, "non-finite number");
    }
    return v;
}

std::uint64_t read_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && j.get<std::int64_t>() < 0 &&
                                   !j.is_number_unsigned())) {
        fail(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

Vector read_vector(const json& j, const std::string& path) {
    if (!j.is_array()) {
        fail(path, "expected an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = read_number(j[i], path + "[" + std::to_string(i) + "]");
    }
    return v;
}

// Rows of equal length; `cols_if_empty` fixes the width of a 0-row matrix.
Matrix read_matrix(const json& j, const std::string& path, Eigen::Index cols_if_empty = 0) {
    if (!j.is_array()) {
        fail(path, "expected an array of rows");
    }
    if (j.empty()) {
        return Matrix(0, cols_if_empty);
    }
    const std::string row0 = path + "[0]";
    if (!j[0].is_array()) {
        fail(row0, "expected an array of numbers");
    }
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        const Vector row = read_vector(j[r], rp);
        if (row.size() != cols) {
            fail(rp, "row has " + std::to_string(row.size()) + " entries, expected " +
                         std::to_string(cols));
        }
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

json to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.push_back(to_json(Vector(m.row(r).transpose())));
    }
    return out;
}

json config_to_json(const RunConfig& c) {
    json out{{"A", to_json(c.A)},
             {"B", to_json(c.B)},
             {"e", to_json(c.e)},
             {"x0_lower", to_json(c.x0_lower)},
             {"x0_upper", to_json(c.x0_upper)},
             {"weights", c.weights.string()},
             {"horizon", c.horizon},
             {"epsilon", c.epsilon},
             {"lambda", c.lambda},
             {"rank_tol", c.rank_tol},
             {"node_cap", c.node_cap},
             {"seed", c.seed}};
    if (c.generator) {
        out["generator"] = to_json(*c.generator);
    }
    if (c.output) {
        out["output"] = c.output->string();
    }
    return out;
}

std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::validate() const {
    const Eigen::Index n = A.rows();
    if (n == 0 || A.cols() != n) {
        fail("$.A", "must be a non-empty square matrix");
    }
    if (B.rows() != n || B.cols() == 0) {
        fail("$.B", "must have " + std::to_string(n) + " rows and at least one column");
    }
    if (e.size() != n) {
        fail("$.e", "must have length " + std::to_string(n));
    }
    const Eigen::Index p = generator ? generator->cols() : n;
    if (generator && (generator->rows() != n || generator->cols() == 0)) {
        fail("$.generator", "must be " + std::to_string(n) + " x p with p >= 1");
    }
    if (x0_lower.size() != p) {
        fail("$.x0_lower", "must have length " + std::to_string(p));
    }
    if (x0_upper.size() != p) {
        fail("$.x0_upper", "must have length " + std::to_string(p));
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        if (x0_lower(i) > x0_upper(i)) {
            fail("$.x0_lower[" + std::to_string(i) + "]", "exceeds x0_upper");
        }
    }
    if (!(epsilon > 0.0)) {
        fail("$.epsilon", "must be positive");
    }
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        fail("$.lambda", "must lie in (0, 1]");
    }
    if (!(rank_tol > 0.0 && rank_tol < 1.0)) {
        fail("$.rank_tol", "must lie in (0, 1)");
    }
    if (node_cap == 0) {
        fail("$.node_cap", "must be positive");
    }
}

ReachOptions RunConfig::reach_options() const {
    ReachOptions o;
    o.epsilon = epsilon;
    o.lambda = lambda;
    o.rank_tol = rank_tol;
    o.node_cap = node_cap;
    return o;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    const json j = parse_json(text);
    require_keys(j, "$",
                 {"A", "B", "e", "x0_lower", "x0_upper", "weights", "horizon", "epsilon", "lambda"},
                 {"generator", "rank_tol", "node_cap", "seed", "output"});
    RunConfig c;
    c.A = read_matrix(j["A"], "$.A");
    c.B = read_matrix(j["B"], "$.B");
    c.e = read_vector(j["e"], "$.e");
    c.x0_lower = read_vector(j["x0_lower"], "$.x0_lower");
    c.x0_upper = read_vector(j["x0_upper"], "$.x0_upper");
    if (j.contains("generator") && !j["generator"].is_null()) {
        c.generator = read_matrix(j["generator"], "$.generator");
    }
    if (!j["weights"].is_string()) {
        fail("$.weights", "expected a file path string");
    }
    c.weights = j["weights"].get<std::string>();
    if (c.weights.is_relative() && !base_dir.empty()) {
        c.weights = base_dir / c.weights;
    }
    c.horizon = read_count(j["horizon"], "$.horizon");
    c.epsilon = read_number(j["epsilon"], "$.epsilon");
    c.lambda = read_number(j["lambda"], "$.lambda");
    if (j.contains("rank_tol")) {
        c.rank_tol = read_number(j["rank_tol"], "$.rank_tol");
    }
    if (j.contains("node_cap")) {
        c.node_cap = read_count(j["node_cap"], "$.node_cap");
    }
    if (j.contains("seed")) {
        c.seed = read_count(j["seed"], "$.seed");
    }
    if (j.contains("output")) {
        if (!j["output"].is_string()) {
            fail("$.output", "expected a file path string");
        }
        c.output = std::filesystem::path(j["output"].get<std::string>());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    try {
        return parse_config(read_file(path), path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

SequentialReluNetwork parse_weights(const std::string& text) {
    const json j = parse_json(text);
    require_keys(j, "$", {"layers"}, {});
    const json& layers = j["layers"];
    if (!layers.is_array()) {
        fail("$.layers", "expected an array of layers");
    }
    if (layers.empty()) {
        fail("$.layers", "at least one layer is required");
    }
    std::vector<AffineLayer> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string lp = "$.layers[" + std::to_string(i) + "]";
        require_keys(layers[i], lp, {"W", "b"}, {});
        AffineLayer l{read_matrix(layers[i]["W"], lp + ".W"), read_vector(layers[i]["b"], lp + ".b")};
        if (l.W.rows() == 0 || l.W.cols() == 0) {
            fail(lp + ".W", "empty weight matrix");
        }
        if (l.b.size() != l.W.rows()) {
            fail(lp + ".b", "length " + std::to_string(l.b.size()) + " != W rows " +
                                std::to_string(l.W.rows()));
        }
        if (i > 0 && l.W.cols() != out.back().W.rows()) {
            fail(lp + ".W", "has " + std::to_string(l.W.cols()) +
                                " columns but layer " + std::to_string(i - 1) + " outputs " +
                                std::to_string(out.back().W.rows()));
        }
        out.push_back(std::move(l));
    }
    return SequentialReluNetwork(std::move(out));
}

SequentialReluNetwork load_weights(const std::filesystem::path& path) {
    try {
        return parse_weights(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void save_weights(const SequentialReluNetwork& net, const std::filesystem::path& path) {
    json layers = json::array();
    for (const auto& l : net.layers()) {
        layers.push_back(json{{"W", to_json(l.W)}, {"b", to_json(l.b)}});
    }
    write_file(path, json{{"layers", layers}}.dump(1) + "\n");
}

ControlledSystem make_system(const RunConfig& config) {
    config.validate();
    SequentialReluNetwork controller = load_weights(config.weights);
    ControlledSystem sys{config.A,
                         config.B,
                         config.e,
                         std::move(controller),
                         Box(config.x0_lower, config.x0_upper),
                         config.generator,
                         std::nullopt};
    try {
        sys.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("$.weights: ") + e.what());
    }
    return sys;
}

std::string result_to_json(const ReachResult& result, const RunConfig* config) {
    json steps = json::array();
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < result.polytopes.size(); ++k) {
        const Polytope& p = result.polytopes[k];
        json directions = json::array();
        while (cursor < result.per_direction_stats.size() &&
               result.per_direction_stats[cursor].step == k) {
            const BnBResult& r = result.per_direction_stats[cursor].bnb;
            directions.push_back(json{{"lb", r.lower},
                                      {"ub", r.upper},
                                      {"iterations", r.iterations},
                                      {"max_live_nodes", r.max_live_nodes}});
            ++cursor;
        }
        steps.push_back(json{{"k", k},
                             {"dim", p.dim()},
                             {"C", to_json(p.C.directions())},
                             {"d", to_json(p.d)},
                             {"directions", directions}});
    }
    json meta{{"wall_time_s", result.wall_time.count()},
              {"direction_solves", result.direction_solves()}};
    if (config != nullptr) {
        meta["config"] = config_to_json(*config);
    }
    return json{{"format", "polyreach-result"}, {"version", 1}, {"metadata", meta}, {"steps", steps}}
               .dump(1) +
           "\n";
}

void save_result(const ReachResult& result, const std::filesystem::path& path,
                 const RunConfig* config) {
    write_file(path, result_to_json(result, config));
}

ReachResult parse_result(const std::string& text) {
    const json j = parse_json(text);
    require_keys(j, "$", {"format", "version", "metadata", "steps"}, {});
    if (j["format"] != "polyreach-result") {
        fail("$.format", "not a polyreach result file");
    }
    ReachResult out;
    const json& meta = j["metadata"];
    if (meta.contains("wall_time_s")) {
        out.wall_time = std::chrono::duration<double>(read_number(meta["wall_time_s"], "$.metadata.wall_time_s"));
    }
    const json& steps = j["steps"];
    if (!steps.is_array()) {
        fail("$.steps", "expected an array");
    }
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const std::string sp = "$.steps[" + std::to_string(k) + "]";
        require_keys(steps[k], sp, {"k", "dim", "C", "d", "directions"}, {});
        const auto dim = static_cast<Eigen::Index>(read_count(steps[k]["dim"], sp + ".dim"));
        Matrix C = read_matrix(steps[k]["C"], sp + ".C", dim);
        if (C.cols() != dim) {
            fail(sp + ".C", "column count != dim");
        }
        TemplateMatrix T;
        try {
            T = TemplateMatrix(std::move(C));
        } catch (const Error& e) {
            fail(sp + ".C", e.what());
        }
        Polytope p{std::move(T), read_vector(steps[k]["d"], sp + ".d")};
        if (p.C.rows() != p.d.size()) {
            fail(sp + ".d", "length != number of directions");
        }
        out.polytopes.push_back(std::move(p));
        const json& dirs = steps[k]["directions"];
        if (!dirs.is_array()) {
            fail(sp + ".directions", "expected an array");
        }
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            const std::string dp = sp + ".directions[" + std::to_string(i) + "]";
            require_keys(dirs[i], dp, {"lb", "ub", "iterations", "max_live_nodes"}, {});
            out.per_direction_stats.push_back(
                DirectionStats{k, i,
                               BnBResult{read_number(dirs[i]["lb"], dp + ".lb"),
                                         read_number(dirs[i]["ub"], dp + ".ub"),
                                         read_count(dirs[i]["iterations"], dp + ".iterations"),
                                         read_count(dirs[i]["max_live_nodes"],
                                                    dp + ".max_live_nodes")}});
        }
    }
    return out;
}

ReachResult load_result(const std::filesystem::path& path) {
    try {
        return parse_result(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<Point2> project_2d(const Polytope& poly, std::array<Eigen::Index, 2> dims,
                               std::size_t n_angles) {
    poly.validate();
    const Eigen::Index n = poly.dim();
    if (n_angles < 3) {
        throw Error("project_2d: need at least 3 angles");
    }
    if (dims[0] == dims[1] || dims[0] < 0 || dims[1] < 0 || dims[0] >= n || dims[1] >= n) {
        throw DimensionError("project_2d: invalid coordinate pair");
    }

    std::vector<Point2> normals(n_angles);
    std::vector<double> support(n_angles);
    LpProblem lp{Vector::Zero(n), poly.C.directions(), poly.d};
    for (std::size_t j = 0; j < n_angles; ++j) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) /
                             static_cast<double>(n_angles);
        normals[j] = {std::cos(theta), std::sin(theta)};
        lp.objective.setZero();
        lp.objective(dims[0]) = normals[j][0];
        lp.objective(dims[1]) = normals[j][1];
        const LpResult r = lp_maximize(lp);
        if (r.status == LpStatus::Infeasible) {
            throw Error("project_2d: polytope is empty");
        }
        if (r.status == LpStatus::Unbounded) {
            throw Error("project_2d: polytope is unbounded in the projected plane");
        }
        support[j] = r.value;
    }

    double scale = 1.0;
    for (double h : support) {
        scale = std::max(scale, std::abs(h));
    }
    const double tol = 1e-9 * scale;
    std::vector<Point2> vertices;
    for (std::size_t j = 0; j < n_angles; ++j) {
        const std::size_t k = (j + 1) % n_angles;
        const auto& a = normals[j];
        const auto& b = normals[k];
        const double det = a[0] * b[1] - a[1] * b[0];
        const Point2 v{(support[j] * b[1] - support[k] * a[1]) / det,
                       (a[0] * support[k] - b[0] * support[j]) / det};
        bool feasible = true;
        for (std::size_t i = 0; i < n_angles && feasible; ++i) {
            feasible = normals[i][0] * v[0] + normals[i][1] * v[1] <= support[i] + tol;
        }
        if (!feasible) {
            continue;
        }
        if (!vertices.empty() && std::abs(vertices.back()[0] - v[0]) <= tol &&
            std::abs(vertices.back()[1] - v[1]) <= tol) {
            continue;
        }
        vertices.push_back(v);
    }
    while (vertices.size() > 1 && std::abs(vertices.back()[0] - vertices.front()[0]) <= tol &&
           std::abs(vertices.back()[1] - vertices.front()[1]) <= tol) {
        vertices.pop_back();
    }
    return vertices;
}

double polygon_area(const std::vector<Point2>& polygon) {
    double twice = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const auto& p = polygon[i];
        const auto& q = polygon[(i + 1) % polygon.size()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * twice;
}

bool polygon_contains(const std::vector<Point2>& polygon, const Point2& p, double tol) {
    if (polygon.empty()) {
        return false;
    }
    if (polygon.size() == 1) {
        return std::hypot(p[0] - polygon[0][0], p[1] - polygon[0][1]) <= tol;
    }
    if (polygon.size() == 2) {
        const auto& a = polygon[0];
        const auto& b = polygon[1];
        const double dx = b[0] - a[0];
        const double dy = b[1] - a[1];
        const double t = std::clamp(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy),
                                    0.0, 1.0);
        return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy) <= tol;
    }
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const auto& a = polygon[i];
        const auto& b = polygon[(i + 1) % polygon.size()];
        const double ex = b[0] - a[0];
        const double ey = b[1] - a[1];
        // Signed distance of p to the left of edge a->b.
        const double cross = (ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / std::hypot(ex, ey);
        if (cross < -tol) {
            return false;
        }
    }
    return true;
}

void write_polygon_csv(const std::vector<Point2>& polygon, const std::filesystem::path& path) {
    std::string text = "x,y\n";
    for (const auto& v : polygon) {
        text += format_g17(v[0]) + "," + format_g17(v[1]) + "\n";
    }
    write_file(path, text);
}

void write_trajectories_csv(const Trajectories& trajectories, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(path.string() + ": cannot open for writing");
    }
    const auto& pts = trajectories.points;
    const Eigen::Index n = pts.empty() || pts[0].empty() ? 0 : pts[0][0].size();
    out << "sample,k";
    for (Eigen::Index i = 0; i < n; ++i) {
        out << ",x" << i;
    }
    out << "\n";
    for (std::size_t s = 0; s < (pts.empty() ? 0 : pts[0].size()); ++s) {
        for (std::size_t k = 0; k < pts.size(); ++k) {
            out << s << "," << k;
            for (Eigen::Index i = 0; i < n; ++i) {
                out << "," << format_g17(pts[k][s](i));
            }
            out << "\n";
        }
    }
    if (!out) {
        throw Error(path.string() + ": write failed");
    }
}

AuditReport audit_containment(const ReachResult& result, const Trajectories& trajectories,
                              double tol, std::size_t first_step) {
    AuditReport report;
    const std::size_t steps = std::min(result.polytopes.size(), trajectories.points.size());
    for (std::size_t k = first_step; k < steps; ++k) {
        const Polytope& poly = result.polytopes[k];
        for (const Vector& x : trajectories.points[k]) {
            const double excess = (poly.C.directions() * x - poly.d).maxCoeff();
            ++report.checked;
            if (excess > tol) {
                ++report.violations;
            }
            if (report.checked == 1 || excess > report.worst_excess) {
                report.worst_excess = excess;
                report.worst_step = k;
            }
        }
    }
    return report;
}

}  // namespace polyreach
