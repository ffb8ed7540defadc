#ifndef SMAXDG_EXPERIMENTS_HPP
#define SMAXDG_EXPERIMENTS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "smaxdg/noise.hpp"
#include "smaxdg/spectral.hpp"

namespace smaxdg {

// Plain-text key-value configuration with sections; unknown keys are errors.
struct RunConfig {
  Cuboid domain = pi_cube();
  std::vector<int> mesh_levels;
  double eps = 1.0, mu = 1.0;

  std::string noise_kind = "cavity";  // cavity | class | polynomial | none
  std::vector<std::pair<int, int>> noise_modes;
  std::vector<double> noise_variances;
  int noise_class = 2;
  int noise_count = 16;
  double noise_scale = 1.0;
  std::vector<std::string> noise_names;

  std::string u0_kind = "zero";  // zero | cavity | named
  std::vector<std::array<double, 4>> u0_modes;  // m n a b
  std::string u0_name;

  double T = 1.0;
  std::vector<int> steps;
  int ref_factor = 64;

  int samples = 100;
  std::uint64_t seed = 1;

  std::map<std::string, double> acceptance;

  int vtk_stride = 0;

  std::uint64_t config_hash = 0;
  int workers = 1;  // from the command line; not part of the hash or outputs
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::uint64_t fnv1a64(const std::string& text);

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;
};

// Least squares of log2(error) against log2(scale); needs >= 3 points with
// positive values.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

struct LevelResult {
  double scale = 0;  // tau or h
  double error = 0;
  double std_error = 0;
  int samples = 0;
};

struct RunResult {
  std::string kind;
  std::vector<LevelResult> levels;
  SlopeFit fit;
  bool has_fit = false;
  std::map<std::string, double> diagnostics;
  std::vector<std::pair<std::string, std::string>> tables;  // filename -> CSV text
  std::vector<std::string> notes;
  bool ok = true;
  std::vector<std::string> failures;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string code_version;

  void require(bool cond, const std::string& what);
};

RunResult converge_time(const RunConfig& config);
RunResult converge_space(const RunConfig& config);
RunResult converge_full(const RunConfig& config);
RunResult divergence_check(const RunConfig& config);
RunResult energy_experiment(const RunConfig& config);
RunResult ldp_gap(const RunConfig& config);
RunResult export_vtk_experiment(const RunConfig& config, const std::string& outdir);

// result.json plus the CSV tables; creates the directory if needed.
void write_outputs(const RunResult& result, const std::string& outdir);
std::string result_json(const RunResult& result);
int exit_code(const RunResult& result);  // 0 ok, 2 threshold failure

// Named closed-form fields used by configs and tests.
AnalyticField named_field(const std::string& name);

// Modified Gram-Schmidt in the V inner product of the given mesh.
std::vector<AnalyticField> orthonormalize_modes(const std::vector<AnalyticField>& fields,
                                                const Mesh& mesh, int quad_degree = 6);

// Noise model and block data from the config (cavity construction when
// commuting blocks are requested).
struct SpectralSetup {
  NoiseModel noise;
  std::vector<CavityMode> blocks;
  std::vector<double> omegas;
  std::vector<double> block_q;
};
SpectralSetup make_spectral_setup(const RunConfig& config);
NoiseModel make_noise(const RunConfig& config, const Mesh& mesh);

// Ordered parallel map: fn(i) for i in [0, n), results reduced by the caller
// in index order regardless of the worker count.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace smaxdg

#endif
