#pragma once

// Run artifacts: metrics CSV, mesh JSON, report JSON, run manifest and the
// flat key=value config format.

#include "stair/verify.hpp"

#include <filesystem>
#include <map>

namespace stair {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Doubles with 17 significant digits.
std::string format_double(double v);

inline constexpr const char* kMetricsHeader =
    "j,area_omega,y_j,y_j_times_area,mass_d22_omega,rho_min,det_min,det_max,c1_delta,coverage,residual_area,"
    "cell_count";
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

/// One cell per line, so large meshes can be streamed back.
void write_mesh_json(const std::filesystem::path& path, const IterationState& state);
IterationState read_mesh_json(const std::filesystem::path& path);

void write_report_json(const std::filesystem::path& path, const Report& report);

using KeyValues = std::map<std::string, std::string>;
/// Lines `key = value`; '#' starts a comment.
KeyValues read_config_file(const std::filesystem::path& path);
/// Throws std::invalid_argument on unknown keys or bad values.
void apply_config(RunConfig& cfg, const KeyValues& kv);
KeyValues config_to_kv(const RunConfig& cfg);

/// 64-bit FNV-1a of a file, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

/// Writes mesh_j.json per iterate, metrics.csv and manifest.json.
void save_run(const std::filesystem::path& dir, const Trajectory& tr, const RunConfig& cfg);
/// Reads a directory written by save_run.
std::pair<Trajectory, RunConfig> load_run(const std::filesystem::path& dir);

}  // namespace stair
