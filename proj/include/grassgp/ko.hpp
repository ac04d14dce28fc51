#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "grassgp/pipeline.hpp"

namespace grassgp {

/// Three-mode Kraichnan-Orszag system, rotated form.
struct KoState {
  double v1 = 0.0;
  double v2 = 0.0;
  double v3 = 0.0;
};

struct KoConfig {
  double t_final = 30.0;
  double dt = 0.003;
  double v1_initial = 1.0;

  /// Number of RK4 steps; throws unless t_final / dt is an integer.
  Eigen::Index steps() const;
};

/// (v1 v3, -v2 v3, -v1^2 + v2^2).
KoState ko_rhs(const KoState& s);

KoState ko_initial_state(double xi1, double xi2, const KoConfig& config = {});

/// v1 after every classical RK4 step from (v1_initial, 0.1 xi1, xi2).
Vector integrate_ko(double xi1, double xi2, const KoConfig& config = {});

/// Full state after integrating to t_final.
KoState integrate_ko_final(double xi1, double xi2, const KoConfig& config = {});

struct KoDataset {
  /// One (xi1, xi2) per row.
  Matrix params;
  std::vector<Matrix> snapshots;
};

/// xi ~ U(-1, 1)^2 drawn in sample order from PortableRng(seed); each
/// trajectory is matricized column-major to `shape` (0x0 picks the squarest).
KoDataset sample_ko_dataset(int n_samples, std::uint64_t seed, const KoConfig& config = {}, Shape shape = {});

/// The same generator evaluated at given parameter points.
KoDataset ko_dataset_at(const Matrix& params, const KoConfig& config = {}, Shape shape = {});

}  // namespace grassgp
