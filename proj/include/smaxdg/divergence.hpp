#ifndef SMAXDG_DIVERGENCE_HPP
#define SMAXDG_DIVERGENCE_HPP

#include <string>
#include <vector>

#include "smaxdg/dg_space.hpp"
#include "smaxdg/mesh.hpp"

namespace smaxdg {

// Continuous P2 test space with zero boundary trace: nodes at interior mesh
// vertices and interior edge midpoints.
class TestSpaceXh {
 public:
  explicit TestSpaceXh(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  int dim() const { return static_cast<int>(basis_.size()); }

  struct ElementPart {
    int elem;
    // Gradient of the basis function on this element is linear; columns are
    // its values at the element vertices.
    Eigen::Matrix<double, 3, 4> grad_at_vertex;
  };
  const std::vector<ElementPart>& support(int b) const { return basis_[b].parts; }
  Vector3d node_position(int b) const { return basis_[b].node; }

  // Global evaluation (zero outside the support); locates the element.
  double eval(int b, const Vector3d& x) const;
  // ||grad phi_b||_{L2(D)}.
  double grad_norm(int b) const;

  // The pair (grad psi, grad phi) as a dG field: part 0 puts the gradient in
  // the E slot, part 1 in the H slot.
  DgField gradient_field(int b, int part) const;

 private:
  struct Basis {
    bool is_vertex;
    int a = -1, b = -1;  // vertex id(s)
    Vector3d node;
    std::vector<ElementPart> parts;
  };
  const Mesh* mesh_;
  std::vector<Basis> basis_;
};

// -int (eps E_h) . grad phi_b dx (part 0) or -int (mu H_h) . grad phi_b (part 1);
// exact quadrature for the P1 x P1 integrand.
double weak_divergence(const DgField& u, const TestSpaceXh& Xh, int b, int part);

// || eps E_h ||_{L2} (part 0) or || mu H_h ||_{L2} (part 1), for scaling.
double weighted_part_norm(const DgField& u, int part);

struct DivergenceRow {
  int step;
  int basis;
  int part;
  double residual;
  double scale;  // ||weighted part|| * ||grad phi||
};

struct DivergenceReport {
  std::vector<DivergenceRow> rows;
  double max_scaled = 0;         // max |residual| / scale
  double max_step_drift = 0;     // max |residual_n - residual_0| / scale
  void write_csv(const std::string& path) const;
};

// Residual table over a trajectory for the given basis subset (all when empty).
DivergenceReport divergence_report(const std::vector<Eigen::VectorXd>& trajectory,
                                   const TestSpaceXh& Xh, std::vector<int> subset = {});

// Deterministic basis subset: everything near the domain center plus a seeded
// random draw, at least min_count functions when available.
std::vector<int> basis_subset(const TestSpaceXh& Xh, int min_count, std::uint64_t seed);

}  // namespace smaxdg

#endif
