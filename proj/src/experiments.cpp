#include "smaxdg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "smaxdg/divergence.hpp"
#include "smaxdg/ldp.hpp"
#include "smaxdg/maxwell_operator.hpp"
#include "smaxdg/quadrature.hpp"
#include "smaxdg/timestepper.hpp"

namespace smaxdg {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::vector<std::string> tokens_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

std::vector<std::string> split_groups(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ';') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

long long to_int(const std::string& s) {
  size_t pos = 0;
  long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
  return v;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"domain", {"lo", "hi"}},
      {"mesh", {"levels"}},
      {"medium", {"eps", "mu"}},
      {"noise", {"kind", "modes", "variances", "class", "count", "scale", "names"}},
      {"initial", {"kind", "modes", "name"}},
      {"scheme", {"T", "steps", "ref_factor"}},
      {"mc", {"samples", "seed"}},
      {"acceptance",
       {"slope_min", "slope_max", "residual_max", "residual_min", "drift_max",
        "energy_rel_tol", "test_functions", "rate_rel_tol", "value_tol"}},
      {"output", {"vtk_stride"}},
  };
  return s;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.config_hash = fnv1a64(text);

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config: malformed section header");
      section = line.substr(1, line.size() - 2);
      if (!schema().count(section))
        throw std::invalid_argument("config: unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    if (section.empty()) throw std::invalid_argument("config: key outside any section");
    if (!schema().at(section).count(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in [" + section + "]");

    auto toks = tokens_of(value);
    auto need = [&](size_t n) {
      if (toks.size() != n)
        throw std::invalid_argument("config: key '" + key + "' expects " + std::to_string(n) +
                                    " values");
    };

    if (section == "domain") {
      need(3);
      Vector3d v(to_double(toks[0]), to_double(toks[1]), to_double(toks[2]));
      (key == "lo" ? cfg.domain.lo : cfg.domain.hi) = v;
    } else if (section == "mesh") {
      cfg.mesh_levels.clear();
      for (const auto& t : toks) cfg.mesh_levels.push_back(static_cast<int>(to_int(t)));
    } else if (section == "medium") {
      need(1);
      (key == "eps" ? cfg.eps : cfg.mu) = to_double(toks[0]);
    } else if (section == "noise") {
      if (key == "kind") {
        need(1);
        cfg.noise_kind = toks[0];
      } else if (key == "modes") {
        cfg.noise_modes.clear();
        for (const auto& g : split_groups(value)) {
          auto mt = tokens_of(g);
          if (mt.empty()) continue;
          if (mt.size() != 2) throw std::invalid_argument("config: noise modes need 'm n' pairs");
          cfg.noise_modes.push_back({static_cast<int>(to_int(mt[0])),
                                     static_cast<int>(to_int(mt[1]))});
        }
      } else if (key == "variances") {
        cfg.noise_variances.clear();
        for (const auto& t : toks) cfg.noise_variances.push_back(to_double(t));
      } else if (key == "class") {
        need(1);
        cfg.noise_class = static_cast<int>(to_int(toks[0]));
      } else if (key == "count") {
        need(1);
        cfg.noise_count = static_cast<int>(to_int(toks[0]));
      } else if (key == "scale") {
        need(1);
        cfg.noise_scale = to_double(toks[0]);
      } else if (key == "names") {
        cfg.noise_names = toks;
      }
    } else if (section == "initial") {
      if (key == "kind") {
        need(1);
        cfg.u0_kind = toks[0];
      } else if (key == "modes") {
        cfg.u0_modes.clear();
        for (const auto& g : split_groups(value)) {
          auto mt = tokens_of(g);
          if (mt.empty()) continue;
          if (mt.size() != 4)
            throw std::invalid_argument("config: initial modes need 'm n a b' entries");
          cfg.u0_modes.push_back({to_double(mt[0]), to_double(mt[1]), to_double(mt[2]),
                                  to_double(mt[3])});
        }
      } else {
        need(1);
        cfg.u0_name = toks[0];
      }
    } else if (section == "scheme") {
      if (key == "T") {
        need(1);
        cfg.T = to_double(toks[0]);
      } else if (key == "steps") {
        cfg.steps.clear();
        for (const auto& t : toks) cfg.steps.push_back(static_cast<int>(to_int(t)));
      } else {
        need(1);
        cfg.ref_factor = static_cast<int>(to_int(toks[0]));
      }
    } else if (section == "mc") {
      need(1);
      if (key == "samples")
        cfg.samples = static_cast<int>(to_int(toks[0]));
      else
        cfg.seed = static_cast<std::uint64_t>(to_int(toks[0]));
    } else if (section == "acceptance") {
      need(1);
      cfg.acceptance[key] = to_double(toks[0]);
    } else if (section == "output") {
      need(1);
      cfg.vtk_stride = static_cast<int>(to_int(toks[0]));
    }
  }

  if (cfg.steps.empty()) cfg.steps = {16};
  if (cfg.mesh_levels.empty()) cfg.mesh_levels = {2};
  if (cfg.samples < 0) throw std::invalid_argument("config: samples must be >= 0");
  for (int d = 0; d < 3; ++d)
    if (!(cfg.domain.lo[d] < cfg.domain.hi[d]))
      throw std::invalid_argument("config: degenerate domain");
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(points.size());
  std::vector<double> xs, ys;
  for (auto [scale, err] : points) {
    if (!(scale > 0) || !(err > 0))
      throw std::invalid_argument("fit_slope: nonpositive value");
    xs.push_back(std::log2(scale));
    ys.push_back(std::log2(err));
  }
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  SlopeFit fit;
  const double den = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

void RunResult::require(bool cond, const std::string& what) {
  if (!cond) {
    ok = false;
    failures.push_back(what);
  }
}

AnalyticField named_field(const std::string& name) {
  AnalyticField f;
  if (name == "zero") return zero_field();
  if (name == "constant_e3") {
    Vector6d c = Vector6d::Zero();
    c[2] = 1.0;
    return constant_field(c);
  }
  if (name == "linear_x") {
    f.value = [](const Vector3d& x) {
      Vector6d v = Vector6d::Zero();
      v[0] = x[0];
      return v;
    };
    f.curl = [](const Vector3d&) { return Vector6d::Zero(); };
    f.div = [](const Vector3d&) { return Eigen::Vector2d(1.0, 0.0); };
    f.jacobian = [](const Vector3d&) {
      Matrix6x3d J = Matrix6x3d::Zero();
      J(0, 0) = 1.0;
      return J;
    };
    return f;
  }
  if (name == "poly_divfree_1") {
    // E = (y^2, z^2, x^2), H = (z^2, x^2, y^2); both divergence free.
    f.value = [](const Vector3d& x) {
      Vector6d v;
      v << x[1] * x[1], x[2] * x[2], x[0] * x[0], x[2] * x[2], x[0] * x[0], x[1] * x[1];
      return v;
    };
    f.curl = [](const Vector3d& x) {
      Vector6d v;
      v << -2 * x[2], -2 * x[0], -2 * x[1], 2 * x[1], 2 * x[2], 2 * x[0];
      return v;
    };
    f.div = [](const Vector3d&) { return Eigen::Vector2d::Zero(); };
    f.jacobian = [](const Vector3d& x) {
      Matrix6x3d J = Matrix6x3d::Zero();
      J(0, 1) = 2 * x[1];
      J(1, 2) = 2 * x[2];
      J(2, 0) = 2 * x[0];
      J(3, 2) = 2 * x[2];
      J(4, 0) = 2 * x[0];
      J(5, 1) = 2 * x[1];
      return J;
    };
    return f;
  }
  if (name == "poly_divfree_2") {
    // E = grad(xyz), H = (y+z, z+x, x+y); curl free and divergence free.
    f.value = [](const Vector3d& x) {
      Vector6d v;
      v << x[1] * x[2], x[2] * x[0], x[0] * x[1], x[1] + x[2], x[2] + x[0], x[0] + x[1];
      return v;
    };
    f.curl = [](const Vector3d&) { return Vector6d::Zero(); };
    f.div = [](const Vector3d&) { return Eigen::Vector2d::Zero(); };
    f.jacobian = [](const Vector3d& x) {
      Matrix6x3d J = Matrix6x3d::Zero();
      J(0, 1) = x[2];
      J(0, 2) = x[1];
      J(1, 0) = x[2];
      J(1, 2) = x[0];
      J(2, 0) = x[1];
      J(2, 1) = x[0];
      J(3, 1) = 1;
      J(3, 2) = 1;
      J(4, 0) = 1;
      J(4, 2) = 1;
      J(5, 0) = 1;
      J(5, 1) = 1;
      return J;
    };
    return f;
  }
  if (name == "poly_divfree_3") {
    f.value = [](const Vector3d& x) {
      Vector6d v;
      v << x[1], x[2], x[0], x[2], x[0], x[1];
      return v;
    };
    f.curl = [](const Vector3d&) {
      Vector6d v;
      v << -1, -1, -1, 1, 1, 1;
      return v;
    };
    f.div = [](const Vector3d&) { return Eigen::Vector2d::Zero(); };
    f.jacobian = [](const Vector3d&) {
      Matrix6x3d J = Matrix6x3d::Zero();
      J(0, 1) = 1;
      J(1, 2) = 1;
      J(2, 0) = 1;
      J(3, 2) = 1;
      J(4, 0) = 1;
      J(5, 1) = 1;
      return J;
    };
    return f;
  }
  throw std::invalid_argument("unknown named field: " + name);
}

namespace {

double analytic_ip_V(const AnalyticField& f, const AnalyticField& g, const Mesh& mesh,
                     int quad_degree) {
  const TetRule& rule = tet_rule(quad_degree);
  double s = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double V = mesh.elements[e].volume;
    for (int q = 0; q < rule.w.size(); ++q) {
      Vector3d x = mesh.point(e, rule.bary.col(q));
      Vector6d a = f.value(x), b = g.value(x);
      s += V * rule.w[q] * (mesh.eps[e] * a.head<3>().dot(b.head<3>()) +
                            mesh.mu[e] * a.tail<3>().dot(b.tail<3>()));
    }
  }
  return s;
}

}  // namespace

std::vector<AnalyticField> orthonormalize_modes(const std::vector<AnalyticField>& fields,
                                                const Mesh& mesh, int quad_degree) {
  std::vector<AnalyticField> out;
  for (const auto& f : fields) {
    std::vector<AnalyticField> terms = {f};
    std::vector<double> coeffs = {1.0};
    for (const auto& g : out) {
      double c = analytic_ip_V(f, g, mesh, quad_degree);
      terms.push_back(g);
      coeffs.push_back(-c);
    }
    AnalyticField w = combine(terms, coeffs);
    double nrm = std::sqrt(analytic_ip_V(w, w, mesh, quad_degree));
    if (nrm < 1e-12)
      throw std::invalid_argument("orthonormalize_modes: linearly dependent fields");
    out.push_back(combine({w}, {1.0 / nrm}));
  }
  return out;
}

SpectralSetup make_spectral_setup(const RunConfig& config) {
  SpectralSetup setup;
  MediumSpec medium = MediumSpec::constant(config.eps, config.mu);
  if (config.noise_kind == "cavity") {
    if (config.noise_modes.empty())
      throw std::invalid_argument("noise kind 'cavity' needs mode indices");
    std::vector<double> q = config.noise_variances;
    if (q.size() != config.noise_modes.size())
      throw std::invalid_argument("noise variances must match the mode list");
    for (auto& v : q) v *= config.noise_scale;
    for (auto [m, n] : config.noise_modes)
      setup.blocks.push_back(tm_mode(config.domain, m, n));
    setup.noise = commuting_noise_from_modes(setup.blocks, q, medium);
  } else if (config.noise_kind == "class") {
    const int k = config.noise_class;
    if (k != 1 && k != 2) throw std::invalid_argument("noise class must be 1 or 2");
    const int J = config.noise_count;
    if (J < 1) throw std::invalid_argument("noise count must be >= 1");
    std::vector<double> w(J);
    double wsum = 0;
    for (int j = 1; j <= J; ++j) {
      w[j - 1] = std::pow(static_cast<double>(j), -(2.0 * k + 1.1));
      wsum += w[j - 1];
    }
    std::vector<double> q(J);
    for (int j = 0; j < J; ++j) q[j] = config.noise_scale * w[j] / (2.0 * wsum);
    for (int j = 1; j <= J; ++j) setup.blocks.push_back(tm_mode(config.domain, j, j));
    setup.noise = commuting_noise_from_modes(setup.blocks, q, medium);
  } else if (config.noise_kind == "none") {
    setup.noise.commuting_with_M = true;
  } else {
    throw std::invalid_argument("spectral experiments need cavity or class noise");
  }
  setup.omegas = setup.noise.block_omegas;
  for (size_t j = 0; j + 1 < setup.noise.modes.size(); j += 2)
    setup.block_q.push_back(setup.noise.modes[j].q);
  return setup;
}

NoiseModel make_noise(const RunConfig& config, const Mesh& mesh) {
  if (config.noise_kind == "none") return NoiseModel{};
  if (config.noise_kind == "polynomial") {
    if (config.noise_names.empty())
      throw std::invalid_argument("polynomial noise needs field names");
    std::vector<AnalyticField> fields;
    for (const auto& name : config.noise_names) fields.push_back(named_field(name));
    auto ortho = orthonormalize_modes(fields, mesh);
    std::vector<double> q = config.noise_variances;
    if (q.empty()) q.assign(ortho.size(), 1.0);
    if (q.size() != ortho.size())
      throw std::invalid_argument("polynomial noise variances mismatch");
    NoiseModel model;
    for (size_t i = 0; i < ortho.size(); ++i)
      model.modes.push_back({ortho[i], q[i] * config.noise_scale});
    return model;
  }
  return make_spectral_setup(config).noise;
}

namespace {

SpectralField spectral_u0(const RunConfig& config, const SpectralSetup& setup) {
  SpectralField u0(static_cast<int>(setup.omegas.size()));
  if (config.u0_kind == "zero") return u0;
  if (config.u0_kind != "cavity")
    throw std::invalid_argument("spectral experiments need zero or cavity initial data");
  for (const auto& e : config.u0_modes) {
    int m = static_cast<int>(e[0]), n = static_cast<int>(e[1]);
    bool found = false;
    for (size_t j = 0; j < setup.blocks.size(); ++j) {
      if (setup.blocks[j].m == m && setup.blocks[j].n == n) {
        u0.a[j] += e[2];
        u0.b[j] += e[3];
        found = true;
        break;
      }
    }
    if (!found)
      throw std::invalid_argument("initial cavity mode not among the noise blocks");
  }
  return u0;
}

AnalyticField u0_field(const RunConfig& config) {
  if (config.u0_kind == "zero") return zero_field();
  if (config.u0_kind == "named") return named_field(config.u0_name);
  if (config.u0_kind == "cavity") {
    std::vector<AnalyticField> fields;
    std::vector<double> coeffs;
    for (const auto& e : config.u0_modes) {
      CavityMode mode = tm_mode(config.domain, static_cast<int>(e[0]),
                                static_cast<int>(e[1]));
      fields.push_back(mode.u1);
      coeffs.push_back(e[2]);
      fields.push_back(mode.u2);
      coeffs.push_back(e[3]);
    }
    return combine(std::move(fields), std::move(coeffs));
  }
  throw std::invalid_argument("unknown initial data kind: " + config.u0_kind);
}

void check_doubling(const std::vector<int>& list, const std::string& what) {
  if (list.empty()) throw std::invalid_argument(what + ": empty refinement list");
  for (size_t i = 1; i < list.size(); ++i)
    if (list[i] != 2 * list[i - 1])
      throw std::invalid_argument(what + ": refinement list must double at each level");
}

RunResult base_result(const std::string& kind, const RunConfig& config) {
  RunResult r;
  r.kind = kind;
  r.config_hash = config.config_hash;
  r.seed = config.seed;
  r.code_version = kCodeVersion;
  return r;
}

std::string levels_csv(const std::vector<LevelResult>& levels, const std::string& scale_name) {
  std::ostringstream out;
  out.precision(17);
  out << scale_name << ",error,std_error,samples\n";
  for (const auto& l : levels)
    out << l.scale << "," << l.error << "," << l.std_error << "," << l.samples << "\n";
  return out.str();
}

// rms of per-sample squared errors plus the delta-method standard error.
std::pair<double, double> rms_and_se(const std::vector<double>& sq) {
  const double n = static_cast<double>(sq.size());
  double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / n;
  double var = 0;
  for (double v : sq) var += (v - mean) * (v - mean);
  var /= std::max(1.0, n - 1.0);
  double rms = std::sqrt(std::max(0.0, mean));
  double se_mean = std::sqrt(var / n);
  double se_rms = rms > 0 ? 0.5 * se_mean / rms : 0.0;
  return {rms, se_rms};
}

// Spatial error against a combination of cavity modes, with mode values and
// quadrature geometry cached per mesh.
class ModeErrorEvaluator {
 public:
  ModeErrorEvaluator(const Mesh& mesh, const std::vector<CavityMode>& blocks,
                     int quad_degree)
      : mesh_(&mesh), rule_(&tet_rule(quad_degree)) {
    const int nq = static_cast<int>(rule_->w.size());
    const int npts = mesh.n_elements() * nq;
    vals_.resize(2 * blocks.size());
    for (auto& v : vals_) v.resize(6, npts);
    wq_.resize(npts);
    lam_ = rule_->bary;
    for (int e = 0; e < mesh.n_elements(); ++e) {
      for (int q = 0; q < nq; ++q) {
        const int p = e * nq + q;
        Vector3d x = mesh.point(e, rule_->bary.col(q));
        wq_[p] = mesh.elements[e].volume * rule_->w[q];
        for (size_t j = 0; j < blocks.size(); ++j) {
          vals_[2 * j].col(p) = blocks[j].u1.value(x);
          vals_[2 * j + 1].col(p) = blocks[j].u2.value(x);
        }
      }
    }
  }

  double error(const Eigen::VectorXd& coeffs, const SpectralField& c) const {
    const Mesh& mesh = *mesh_;
    const int nq = static_cast<int>(rule_->w.size());
    double s = 0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
      for (int q = 0; q < nq; ++q) {
        const int p = e * nq + q;
        Vector6d d = Vector6d::Zero();
        for (int comp = 0; comp < 6; ++comp)
          d[comp] = coeffs.segment<4>(24 * e + 4 * comp).dot(lam_.col(q));
        for (int j = 0; j < c.blocks(); ++j)
          d -= c.a[j] * vals_[2 * j].col(p) + c.b[j] * vals_[2 * j + 1].col(p);
        s += wq_[p] * (mesh.eps[e] * d.head<3>().squaredNorm() +
                       mesh.mu[e] * d.tail<3>().squaredNorm());
      }
    }
    return std::sqrt(std::max(0.0, s));
  }

 private:
  const Mesh* mesh_;
  const TetRule* rule_;
  std::vector<Eigen::MatrixXd> vals_;
  Eigen::VectorXd wq_;
  Eigen::Matrix<double, 4, Eigen::Dynamic> lam_;
};

}  // namespace

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

RunResult converge_time(const RunConfig& config) {
  RunResult res = base_result("converge-time", config);
  check_doubling(config.steps, "converge-time steps");
  if (config.ref_factor < 2)
    throw std::invalid_argument("converge-time: ref_factor must be >= 2");
  SpectralSetup setup = make_spectral_setup(config);
  if (setup.omegas.empty()) throw std::invalid_argument("converge-time: noise required");
  SpectralField u0 = spectral_u0(config, setup);

  const int L = static_cast<int>(config.steps.size());
  const int P = config.samples;
  std::vector<std::vector<double>> sq(L, std::vector<double>(P, 0.0));
  std::vector<double> bias_sq(P, 0.0);

  parallel_for(P, config.workers, [&](int p) {
    NoisePath path = sample_path(setup.noise, config.T, config.steps[0], config.seed, p);
    std::vector<SpectralField> approx(L);
    approx[0] = midpoint_flow(u0, setup.omegas, path);
    for (int l = 1; l < L; ++l) {
      path = refine_path(path, 2);
      approx[l] = midpoint_flow(u0, setup.omegas, path);
    }
    NoisePath fine = refine_path(path, config.ref_factor);
    SpectralField ref = exact_flow(u0, setup.omegas, fine);
    SpectralField ref_half = exact_flow(u0, setup.omegas, aggregate_path(fine, 2));
    for (int l = 0; l < L; ++l) {
      double e2 = (approx[l].a - ref.a).squaredNorm() + (approx[l].b - ref.b).squaredNorm();
      sq[l][p] = e2;
    }
    bias_sq[p] = (ref.a - ref_half.a).squaredNorm() + (ref.b - ref_half.b).squaredNorm();
  });

  std::vector<std::pair<double, double>> pts;
  for (int l = 0; l < L; ++l) {
    auto [rms, se] = rms_and_se(sq[l]);
    double tau = config.T / config.steps[l];
    res.levels.push_back({tau, rms, se, P});
    pts.push_back({tau, rms});
  }
  auto [bias, bias_se] = rms_and_se(bias_sq);
  (void)bias_se;
  double min_error = res.levels.back().error;
  for (const auto& l : res.levels) min_error = std::min(min_error, l.error);
  res.diagnostics["reference_bias"] = bias;
  res.diagnostics["min_error"] = min_error;
  if (bias > 0.1 * min_error)
    throw std::runtime_error(
        "converge-time: reference bias " + std::to_string(bias) + " exceeds 10% of the smallest error " +
        std::to_string(min_error) + "; raise ref_factor");

  res.fit = fit_slope(pts);
  res.has_fit = true;
  res.tables.push_back({"errors.csv", levels_csv(res.levels, "tau")});
  if (config.acceptance.count("slope_min"))
    res.require(res.fit.slope >= config.acceptance.at("slope_min"), "slope below slope_min");
  if (config.acceptance.count("slope_max"))
    res.require(res.fit.slope <= config.acceptance.at("slope_max"), "slope above slope_max");
  return res;
}

RunResult converge_space(const RunConfig& config) {
  RunResult res = base_result("converge-space", config);
  check_doubling(config.mesh_levels, "converge-space mesh levels");
  MediumSpec medium = MediumSpec::constant(config.eps, config.mu);

  const bool deterministic = config.noise_kind == "none" || config.samples == 0;
  const int N = config.steps.back();
  const int P = deterministic ? 1 : config.samples;

  // Blocks carrying the exact solution: noise blocks, plus u0 blocks when
  // running without noise.
  SpectralSetup setup = make_spectral_setup(config);
  std::vector<CavityMode> blocks = setup.blocks;
  if (deterministic && blocks.empty()) {
    for (const auto& e : config.u0_modes)
      blocks.push_back(tm_mode(config.domain, static_cast<int>(e[0]),
                               static_cast<int>(e[1])));
    for (const auto& b : blocks) setup.omegas.push_back(b.omega);
  }
  if (blocks.empty())
    throw std::invalid_argument("converge-space: cavity initial data or noise required");

  SpectralField u0(static_cast<int>(blocks.size()));
  if (config.u0_kind == "cavity") {
    for (const auto& e : config.u0_modes)
      for (size_t j = 0; j < blocks.size(); ++j)
        if (blocks[j].m == static_cast<int>(e[0]) && blocks[j].n == static_cast<int>(e[1])) {
          u0.a[j] += e[2];
          u0.b[j] += e[3];
        }
  } else if (config.u0_kind != "zero") {
    throw std::invalid_argument("converge-space: zero or cavity initial data");
  }
  AnalyticField u0f = u0_field(config);

  struct Level {
    Mesh mesh;
    DiscreteMaxwellOperator op;
    ImplicitMidpoint stepper;
    ProjectedNoise noise;
    Eigen::VectorXd u0c;
    ModeErrorEvaluator eval;
    double proj_error;
  };
  std::vector<Level> lvls;
  for (int n : config.mesh_levels) {
    Mesh mesh = build_structured_mesh(config.domain, {n, n, n}, medium);
    DiscreteMaxwellOperator op = assemble(mesh);
    ImplicitMidpoint stepper(op, config.T / N);
    ProjectedNoise pn = deterministic ? ProjectedNoise{Eigen::MatrixXd::Zero(op.dim(), 0)}
                                      : project_noise(setup.noise, mesh);
    DgField pu0 = project(u0f, mesh, 8);
    double proj_err = error_norm_V(pu0, u0f, 10);
    ModeErrorEvaluator eval(mesh, blocks, 10);
    lvls.push_back({std::move(mesh), std::move(op), std::move(stepper), std::move(pn),
                    pu0.coeffs(), std::move(eval), proj_err});
  }

  const int L = static_cast<int>(lvls.size());
  std::vector<std::vector<double>> sq(L, std::vector<double>(P, 0.0));

  parallel_for(P, config.workers, [&](int p) {
    NoisePath path =
        deterministic
            ? NoisePath(config.T, N, config.seed, p, std::vector<double>(2 * blocks.size(), 0.0))
            : sample_path(setup.noise, config.T, N, config.seed, p);
    SpectralField ref =
        deterministic
            ? exact_flow(u0, setup.omegas, path)  // zero increments: pure rotation
            : exact_flow(u0, setup.omegas, refine_path(path, config.ref_factor));
    for (int l = 0; l < L; ++l) {
      Eigen::VectorXd uh = run_path_final(lvls[l].stepper, lvls[l].noise, path, lvls[l].u0c);
      double e = lvls[l].eval.error(uh, ref);
      sq[l][p] = e * e;
    }
  });

  std::vector<std::pair<double, double>> pts;
  for (int l = 0; l < L; ++l) {
    auto [rms, se] = rms_and_se(sq[l]);
    res.levels.push_back({lvls[l].mesh.h, rms, se, P});
    pts.push_back({lvls[l].mesh.h, rms});
    res.diagnostics["proj_error_" + std::to_string(config.mesh_levels[l])] =
        lvls[l].proj_error;
  }
  res.fit = fit_slope(pts);
  res.has_fit = true;
  res.tables.push_back({"errors.csv", levels_csv(res.levels, "h")});
  if (config.acceptance.count("slope_min"))
    res.require(res.fit.slope >= config.acceptance.at("slope_min"), "slope below slope_min");
  if (config.acceptance.count("slope_max"))
    res.require(res.fit.slope <= config.acceptance.at("slope_max"), "slope above slope_max");
  return res;
}

RunResult converge_full(const RunConfig& config) {
  RunResult res = base_result("converge-full", config);
  check_doubling(config.mesh_levels, "converge-full mesh levels");
  if (config.steps.size() != config.mesh_levels.size())
    throw std::invalid_argument("converge-full: steps list must match mesh levels");
  MediumSpec medium = MediumSpec::constant(config.eps, config.mu);
  SpectralSetup setup = make_spectral_setup(config);
  if (setup.omegas.empty()) throw std::invalid_argument("converge-full: noise required");
  SpectralField u0 = spectral_u0(config, setup);
  AnalyticField u0f = u0_field(config);

  // tau_l ~ h_l^{(2k-1)/k} coupling.
  const double expo = (2.0 * config.noise_class - 1.0) / config.noise_class;
  for (size_t l = 1; l < config.steps.size(); ++l) {
    double ratio = std::log2(double(config.steps[l]) / config.steps[l - 1]);
    if (std::abs(ratio - expo) > 0.35)
      res.notes.push_back("step chain deviates from the tau ~ h^" + std::to_string(expo) +
                          " coupling at level " + std::to_string(l));
  }

  std::int64_t lcm = 1;
  for (int nsteps : config.steps) lcm = std::lcm(lcm, static_cast<std::int64_t>(nsteps));
  std::int64_t ref_target = static_cast<std::int64_t>(config.steps.back()) * config.ref_factor;
  int ref_mult = static_cast<int>(std::max<std::int64_t>(1, (ref_target + lcm - 1) / lcm));

  struct Level {
    Mesh mesh;
    DiscreteMaxwellOperator op;
    ImplicitMidpoint stepper;
    ProjectedNoise noise;
    Eigen::VectorXd u0c;
    ModeErrorEvaluator eval;
  };
  std::vector<Level> lvls;
  for (size_t l = 0; l < config.mesh_levels.size(); ++l) {
    int n = config.mesh_levels[l];
    Mesh mesh = build_structured_mesh(config.domain, {n, n, n}, medium);
    DiscreteMaxwellOperator op = assemble(mesh);
    ImplicitMidpoint stepper(op, config.T / config.steps[l]);
    ProjectedNoise pn = project_noise(setup.noise, mesh);
    DgField pu0 = project(u0f, mesh, 8);
    ModeErrorEvaluator eval(mesh, setup.blocks, 10);
    lvls.push_back({std::move(mesh), std::move(op), std::move(stepper), std::move(pn),
                    pu0.coeffs(), std::move(eval)});
  }

  const int L = static_cast<int>(lvls.size());
  const int P = config.samples;
  std::vector<std::vector<double>> sq(L, std::vector<double>(P, 0.0));

  parallel_for(P, config.workers, [&](int p) {
    NoisePath base = sample_path(setup.noise, config.T, lcm, config.seed, p);
    NoisePath fine = ref_mult >= 2 ? refine_path(base, ref_mult) : base;
    SpectralField ref = exact_flow(u0, setup.omegas, fine);
    for (int l = 0; l < L; ++l) {
      NoisePath path = aggregate_path(base, static_cast<int>(lcm / config.steps[l]));
      Eigen::VectorXd uh = run_path_final(lvls[l].stepper, lvls[l].noise, path, lvls[l].u0c);
      double e = lvls[l].eval.error(uh, ref);
      sq[l][p] = e * e;
    }
  });

  std::vector<std::pair<double, double>> pts;
  for (int l = 0; l < L; ++l) {
    auto [rms, se] = rms_and_se(sq[l]);
    res.levels.push_back({lvls[l].mesh.h, rms, se, P});
    pts.push_back({lvls[l].mesh.h, rms});
  }
  res.fit = fit_slope(pts);
  res.has_fit = true;
  res.tables.push_back({"errors.csv", levels_csv(res.levels, "h")});
  if (config.acceptance.count("slope_min"))
    res.require(res.fit.slope >= config.acceptance.at("slope_min"), "slope below slope_min");
  return res;
}

RunResult divergence_check(const RunConfig& config) {
  RunResult res = base_result("divergence-check", config);
  MediumSpec medium = MediumSpec::constant(config.eps, config.mu);
  Mesh mesh = build_structured_mesh(
      config.domain, {config.mesh_levels[0], config.mesh_levels[0], config.mesh_levels[0]},
      medium);
  DiscreteMaxwellOperator op = assemble(mesh);
  const int N = config.steps[0];
  ImplicitMidpoint stepper(op, config.T / N);
  NoiseModel noise = make_noise(config, mesh);
  ProjectedNoise pn = noise.n_modes() > 0
                          ? project_noise(noise, mesh)
                          : ProjectedNoise{Eigen::MatrixXd::Zero(op.dim(), 0)};
  DgField pu0 = project(u0_field(config), mesh, 8);

  TestSpaceXh Xh(mesh);
  int want = 200;
  if (config.acceptance.count("test_functions"))
    want = static_cast<int>(config.acceptance.at("test_functions"));
  std::vector<int> subset = basis_subset(Xh, want, config.seed);

  const int P = std::max(1, config.samples);
  double max_scaled = 0, max_drift = 0;
  DivergenceReport first_report;
  for (int p = 0; p < P; ++p) {
    NoisePath path = noise.n_modes() > 0
                         ? sample_path(noise, config.T, N, config.seed, p)
                         : NoisePath(config.T, N, config.seed, p, {});
    auto traj = run_path(stepper, pn, path, pu0.coeffs());
    DivergenceReport rep = divergence_report(traj, Xh, subset);
    max_scaled = std::max(max_scaled, rep.max_scaled);
    max_drift = std::max(max_drift, rep.max_step_drift);
    if (p == 0) first_report = std::move(rep);
  }

  std::ostringstream csv;
  csv.precision(17);
  csv << "step,basis,part,residual,scale\n";
  for (const auto& r : first_report.rows)
    csv << r.step << "," << r.basis << "," << r.part << "," << r.residual << ","
        << r.scale << "\n";
  res.tables.push_back({"residuals.csv", csv.str()});

  res.diagnostics["max_scaled_residual"] = max_scaled;
  res.diagnostics["max_step_drift"] = max_drift;
  res.diagnostics["test_functions"] = static_cast<double>(subset.size());
  res.diagnostics["xh_dim"] = static_cast<double>(Xh.dim());
  if (config.acceptance.count("residual_max"))
    res.require(max_scaled <= config.acceptance.at("residual_max"),
                "scaled residual above residual_max");
  if (config.acceptance.count("residual_min"))
    res.require(max_scaled >= config.acceptance.at("residual_min"),
                "scaled residual below residual_min (negative control)");
  if (config.acceptance.count("drift_max"))
    res.require(max_drift <= config.acceptance.at("drift_max"),
                "step drift above drift_max");
  return res;
}

RunResult energy_experiment(const RunConfig& config) {
  RunResult res = base_result("energy", config);
  SpectralSetup setup = make_spectral_setup(config);
  SpectralField u0 = spectral_u0(config, setup);
  const double trace = setup.noise.trace();
  const double exact_energy = u0.norm() * u0.norm() + trace * config.T;
  res.diagnostics["exact_energy"] = exact_energy;
  res.diagnostics["trace_Q"] = trace;

  // Exact-flow MC on the spectral oracle.
  const int P = config.samples;
  const int Nref = config.steps.back() * config.ref_factor;
  std::vector<double> energies(P, 0.0);
  parallel_for(P, config.workers, [&](int p) {
    NoisePath path = sample_path(setup.noise, config.T, Nref, config.seed, p);
    SpectralField u = exact_flow(u0, setup.omegas, path);
    energies[p] = u.norm() * u.norm();
  });
  double mean = std::accumulate(energies.begin(), energies.end(), 0.0) / P;
  double var = 0;
  for (double e : energies) var += (e - mean) * (e - mean);
  var /= std::max(1, P - 1);
  double se = std::sqrt(var / P);
  res.diagnostics["mc_energy"] = mean;
  res.diagnostics["mc_energy_se"] = se;
  res.require(std::abs(mean - exact_energy) <= 3.0 * se,
              "exact-flow MC energy off the identity beyond 3 standard errors");

  // Full scheme approaches the identity from below under refinement.
  if (!config.mesh_levels.empty() && config.steps.size() >= config.mesh_levels.size()) {
    MediumSpec medium = MediumSpec::constant(config.eps, config.mu);
    AnalyticField u0f = u0_field(config);
    double prev = -1;
    for (size_t l = 0; l < config.mesh_levels.size(); ++l) {
      int n = config.mesh_levels[l];
      int N = config.steps[l];
      Mesh mesh = build_structured_mesh(config.domain, {n, n, n}, medium);
      DiscreteMaxwellOperator op = assemble(mesh);
      ImplicitMidpoint stepper(op, config.T / N);
      ProjectedNoise pn = project_noise(setup.noise, mesh);
      DgField pu0 = project(u0f, mesh, 8);
      std::vector<double> e2(P, 0.0);
      parallel_for(P, config.workers, [&](int p) {
        NoisePath path = sample_path(setup.noise, config.T, N, config.seed, p);
        Eigen::VectorXd uh = run_path_final(stepper, pn, path, pu0.coeffs());
        e2[p] = uh.dot(op.mass().apply(uh));
      });
      double m = std::accumulate(e2.begin(), e2.end(), 0.0) / P;
      double v2 = 0;
      for (double e : e2) v2 += (e - m) * (e - m);
      v2 /= std::max(1, P - 1);
      double se2 = std::sqrt(v2 / P);
      res.levels.push_back({mesh.h, m, se2, P});
      res.diagnostics["full_energy_" + std::to_string(n)] = m;
      res.require(m <= exact_energy + 3.0 * se2,
                  "full-scheme energy exceeds the exact identity");
      if (prev >= 0 && m + 3.0 * (se2 + 1e-300) < prev)
        res.notes.push_back("full-scheme energy not increasing under refinement");
      prev = m;
    }
    if (config.acceptance.count("energy_rel_tol") && !res.levels.empty()) {
      double finest = res.levels.back().error;
      res.require(std::abs(finest - exact_energy) <=
                      config.acceptance.at("energy_rel_tol") * exact_energy,
                  "finest full-scheme energy outside the declared tolerance");
    }
    res.tables.push_back({"energy.csv", levels_csv(res.levels, "h")});
  }
  return res;
}

RunResult ldp_gap(const RunConfig& config) {
  RunResult res = base_result("ldp-gap", config);
  SpectralSetup setup = make_spectral_setup(config);
  const int J = static_cast<int>(setup.omegas.size());
  if (J == 0) throw std::invalid_argument("ldp-gap: noise required");
  const int k = config.noise_class;

  // D(M^k)-critical data in the noise span: |x_j|^2/q_j ~ omega^{-2k} j^{-1.1}.
  SpectralField u0(J), v(J);
  for (int j = 0; j < J; ++j) {
    double w = std::sqrt(setup.block_q[j]) * std::pow(setup.omegas[j], -double(k)) *
               std::pow(double(j + 1), -0.55);
    u0.a[j] = w;
    v.a[j] = 0.5 * w;
    v.b[j] = 1.5 * w;
  }

  RateValue exact = rate_exact(v, u0, setup.omegas, setup.block_q, config.T);
  if (!exact.finite) throw std::runtime_error("ldp-gap: exact rate not finite");
  res.diagnostics["rate_exact"] = exact.value;

  std::ostringstream csv;
  csv.precision(17);
  csv << "tau,rate_exact,rate_temporal,gap\n";
  std::vector<std::pair<double, double>> pts;
  for (int N : config.steps) {
    RateValue rn = rate_temporal(v, u0, setup.omegas, setup.block_q, config.T, N);
    if (!rn.finite) throw std::runtime_error("ldp-gap: temporal rate not finite");
    double tau = config.T / N;
    double gap = std::abs(exact.value - rn.value);
    csv << tau << "," << exact.value << "," << rn.value << "," << gap << "\n";
    res.levels.push_back({tau, gap, 0.0, 1});
    pts.push_back({tau, gap});
  }
  res.tables.push_back({"gaps.csv", csv.str()});
  res.fit = fit_slope(pts);
  res.has_fit = true;
  if (config.acceptance.count("slope_min"))
    res.require(res.fit.slope >= config.acceptance.at("slope_min"), "gap slope below slope_min");
  return res;
}

RunResult export_vtk_experiment(const RunConfig& config, const std::string& outdir) {
  RunResult res = base_result("export-vtk", config);
  std::filesystem::create_directories(outdir);
  MediumSpec medium = MediumSpec::constant(config.eps, config.mu);
  int n = config.mesh_levels[0];
  Mesh mesh = build_structured_mesh(config.domain, {n, n, n}, medium);
  write_vtk(mesh, outdir + "/mesh.vtk");
  DgField pu0 = project(u0_field(config), mesh, 8);
  write_vtk(pu0, outdir + "/initial_field.vtk");
  res.notes.push_back("wrote mesh.vtk and initial_field.vtk");
  res.diagnostics["elements"] = static_cast<double>(mesh.n_elements());
  return res;
}

std::string result_json(const RunResult& result) {
  nlohmann::ordered_json j;
  j["kind"] = result.kind;
  j["code_version"] = result.code_version;
  char hashbuf[32];
  std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                static_cast<unsigned long long>(result.config_hash));
  j["config_hash"] = hashbuf;
  j["seed"] = result.seed;
  if (!result.levels.empty()) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& l : result.levels) {
      nlohmann::ordered_json e;
      e["scale"] = l.scale;
      e["error"] = l.error;
      e["std_error"] = l.std_error;
      e["samples"] = l.samples;
      arr.push_back(e);
    }
    j["levels"] = arr;
  }
  if (result.has_fit) {
    j["slope"] = result.fit.slope;
    j["intercept"] = result.fit.intercept;
    j["fit_residual"] = result.fit.residual;
  }
  if (!result.diagnostics.empty()) j["diagnostics"] = result.diagnostics;
  if (!result.notes.empty()) j["notes"] = result.notes;
  j["acceptance_ok"] = result.ok;
  if (!result.failures.empty()) j["failures"] = result.failures;
  return j.dump(2) + "\n";
}

void write_outputs(const RunResult& result, const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  {
    std::ofstream out(outdir + "/result.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write result.json");
    out << result_json(result);
  }
  for (const auto& [name, text] : result.tables) {
    std::ofstream out(outdir + "/" + name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + name);
    out << text;
  }
}

int exit_code(const RunResult& result) { return result.ok ? 0 : 2; }

}  // namespace smaxdg
