#pragma once

#include "polyreach/oracle.hpp"
#include "polyreach/reach.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace polyreach {

/// Malformed configuration, weight or result file. The message starts with
/// the JSON path of the offending field, e.g. "$.layers[2].W: ...".
class ConfigError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    Matrix A;
    Matrix B;
    Vector e;
    Vector x0_lower;
    Vector x0_upper;
    std::optional<Matrix> generator;
    /// Resolved against the config file's directory when relative.
    std::filesystem::path weights;
    std::size_t horizon = 0;
    double epsilon = 0.01;
    double lambda = kDefaultLambda;
    double rank_tol = kDefaultRankTol;
    std::size_t node_cap = kDefaultNodeCap;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> output;

    void validate() const;
    ReachOptions reach_options() const;
};

RunConfig load_config(const std::filesystem::path& path);
/// Parses config JSON text; relative weight paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

SequentialReluNetwork load_weights(const std::filesystem::path& path);
SequentialReluNetwork parse_weights(const std::string& text);
void save_weights(const SequentialReluNetwork& net, const std::filesystem::path& path);

/// Config plus its controller, ready to run.
ControlledSystem make_system(const RunConfig& config);

void save_result(const ReachResult& result, const std::filesystem::path& path,
                 const RunConfig* config = nullptr);
std::string result_to_json(const ReachResult& result, const RunConfig* config = nullptr);
ReachResult load_result(const std::filesystem::path& path);
ReachResult parse_result(const std::string& text);

using Point2 = std::array<double, 2>;

/// Outer polygon of the projection of `poly` onto coordinates dims, from LP
/// support values in n_angles uniformly spaced directions. Vertices are
/// counterclockwise.
std::vector<Point2> project_2d(const Polytope& poly, std::array<Eigen::Index, 2> dims,
                               std::size_t n_angles);
double polygon_area(const std::vector<Point2>& polygon);
bool polygon_contains(const std::vector<Point2>& polygon, const Point2& p, double tol);

/// "x,y" rows formatted with %.17g.
void write_polygon_csv(const std::vector<Point2>& polygon, const std::filesystem::path& path);
/// "sample,k,x0,x1,..." rows formatted with %.17g.
void write_trajectories_csv(const Trajectories& trajectories, const std::filesystem::path& path);

struct AuditReport {
    std::size_t checked = 0;
    std::size_t violations = 0;
    /// Largest value of max_i (c_i^T x - d_i) seen.
    double worst_excess = 0.0;
    std::size_t worst_step = 0;
};

/// Checks every simulated state against the polytope of its step, starting
/// at `first_step` (1 for zonotope runs, whose step-0 polytope lives in z).
AuditReport audit_containment(const ReachResult& result, const Trajectories& trajectories,
                              double tol, std::size_t first_step = 0);

}  // namespace polyreach
