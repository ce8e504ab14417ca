#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dilute/phase_model.hpp"
#include "dilute/point_process.hpp"

namespace dilute {

/// Two-phase coefficient field on a regular N^d periodic grid. Cells are
/// stored row-major with the last axis fastest; phase 0 carries A₁ and phase
/// 1 carries A₂.
struct GridField {
  TorusSpec torus;
  int N = 0;
  std::vector<std::uint8_t> phase;
  PhaseModel phases;

  int dim() const { return torus.d; }
  std::size_t cells() const { return phase.size(); }
  double h() const { return torus.L / N; }
  double inclusion_fraction() const;

  /// Checks N >= 64, h <= 1/4, payload size and phase values.
  void validate() const;
};

inline constexpr int kMinGridCells = 64;
inline constexpr double kMaxGridStep = 0.25;

/// Cell gets A₂ iff its center lies in the union of unit balls (torus metric).
GridField rasterize(const PointSample& inclusions, const PhaseModel& phases, int N);

/// Two-phase laminate: phase(cell) = 1 iff cell index along `axis` lies in
/// the second half of each period of `period` cells.
GridField laminate(const TorusSpec& torus, int N, const PhaseModel& phases, int axis, int period);

/// Binary dump: "DHGF", u32 version, u32 kind (0 phase bytes, 1 float64
/// vectors), i32 d, i32 N, f64 L, A₁ and A₂ row-major, then for kind 1 an
/// i32 component count; payload follows (kind 0: one byte per cell; kind 1:
/// component-major float64 arrays). Native little-endian.
void save_grid_field(const std::string& path, const GridField& field);
GridField load_grid_field(const std::string& path);

/// Same header as the field, payload = `values` (cells × components).
void save_vector_field(const std::string& path, const GridField& field, const Eigen::MatrixXd& values);
Eigen::MatrixXd load_vector_field(const std::string& path, GridField* header = nullptr);

}  // namespace dilute
