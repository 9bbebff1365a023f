#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srcsel/kmeans.hpp"
#include "srcsel/signature.hpp"

namespace srcsel {

// Dense row-major matrix of non-negative reals; used for both ground costs
// and flows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double row_sum(std::size_t r) const;
  double col_sum(std::size_t c) const;
  double total() const;
  double max() const;
  std::size_t count_positive(double tol = 0.0) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using GroundMatrix = Matrix;
using FlowMatrix = Matrix;

// Euclidean distance in RGB space.
double ground_distance(const Color& a, const Color& b);

GroundMatrix ground_matrix(std::span<const Color> from, std::span<const Color> to);

// Sum over cells of cost * flow.
double transport_cost(const GroundMatrix& cost, const FlowMatrix& flow);

// Russell's approximation for a balanced problem. Every step takes the
// active cell minimizing cost - rowmax - colmax (lowest (row, col) on ties)
// and allocates as much as possible there. Produces a basic feasible flow
// with at most rows + cols - 1 positive entries.
FlowMatrix russell_initial_flow(std::span<const double> supplies, std::span<const double> demands,
                                const GroundMatrix& cost);

struct TransportSolution {
  FlowMatrix flow;
  double initial_cost = 0.0;  // cost of the Russell start
  std::size_t iterations = 0;  // simplex pivots after the start
};

// Optimal transport flow for possibly unequal totals. The smaller side is
// fully shipped; excess on the larger side goes to a zero-cost slack node
// that is stripped from the returned flow.
TransportSolution solve_transport(const GroundMatrix& cost, std::span<const double> supplies,
                                  std::span<const double> demands);

struct EmdResult {
  double distance = 0.0;
  double work = 0.0;
  double total_flow = 0.0;
  FlowMatrix flow;  // rows follow a's centroids, columns b's
  std::size_t iterations = 0;
};

// Weights below this are treated as zero before solving.
inline constexpr double kNegligibleWeight = 1e-12;

EmdResult emd(std::span<const Color> a_centroids, std::span<const double> a_weights,
              std::span<const Color> b_centroids, std::span<const double> b_weights);
EmdResult emd(const DatasetSignature& a, const DatasetSignature& b);
EmdResult emd(const ImageSignature& a, const ImageSignature& b);

}  // namespace srcsel
