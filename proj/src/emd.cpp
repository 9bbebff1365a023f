#include "srcsel/emd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "srcsel/error.hpp"

namespace srcsel {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init)
    : rows_(init.size()), cols_(init.size() ? init.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& row : init) {
    if (row.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

double Matrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c);
  return s;
}

double Matrix::col_sum(std::size_t c) const {
  double s = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) s += (*this)(r, c);
  return s;
}

double Matrix::total() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Matrix::max() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

std::size_t Matrix::count_positive(double tol) const {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(), [tol](double v) { return v > tol; }));
}

double ground_distance(const Color& a, const Color& b) { return std::sqrt(squared_distance(a, b)); }

GroundMatrix ground_matrix(std::span<const Color> from, std::span<const Color> to) {
  GroundMatrix g(from.size(), to.size());
  for (std::size_t u = 0; u < from.size(); ++u)
    for (std::size_t v = 0; v < to.size(); ++v) g(u, v) = ground_distance(from[u], to[v]);
  return g;
}

double transport_cost(const GroundMatrix& cost, const FlowMatrix& flow) {
  if (cost.rows() != flow.rows() || cost.cols() != flow.cols())
    throw std::invalid_argument("transport_cost: shape mismatch");
  double w = 0.0;
  for (std::size_t r = 0; r < cost.rows(); ++r)
    for (std::size_t c = 0; c < cost.cols(); ++c) w += cost(r, c) * flow(r, c);
  return w;
}

namespace {

struct BasicCell {
  std::size_t row;
  std::size_t col;
  double flow;
};

void check_weights(std::span<const double> w, const char* what) {
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0)
      throw std::invalid_argument(std::string(what) + " must be finite and non-negative");
  }
}

void check_costs(const GroundMatrix& cost, std::size_t rows, std::size_t cols) {
  if (cost.rows() != rows || cost.cols() != cols)
    throw std::invalid_argument("ground matrix shape does not match weight vectors");
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (!std::isfinite(cost(r, c)) || cost(r, c) < 0.0)
        throw SolverError("ground costs must be finite and non-negative");
}

// Russell's method on a balanced problem. Returns exactly rows + cols - 1
// basic cells (some possibly carrying zero flow) forming a spanning tree.
std::vector<BasicCell> russell_basis(std::vector<double> supply, std::vector<double> demand,
                                     const GroundMatrix& cost) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  std::vector<char> row_active(m, 1);
  std::vector<char> col_active(n, 1);
  std::size_t rows_left = m;
  std::size_t cols_left = n;
  std::vector<double> row_max(m);
  std::vector<double> col_max(n);
  std::vector<BasicCell> basis;
  basis.reserve(m + n - 1);

  while (rows_left > 0 && cols_left > 0) {
    std::fill(row_max.begin(), row_max.end(), -std::numeric_limits<double>::infinity());
    std::fill(col_max.begin(), col_max.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < m; ++i) {
      if (!row_active[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!col_active[j]) continue;
        row_max[i] = std::max(row_max[i], cost(i, j));
        col_max[j] = std::max(col_max[j], cost(i, j));
      }
    }
    std::size_t bi = m;
    std::size_t bj = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (!row_active[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!col_active[j]) continue;
        const double delta = cost(i, j) - row_max[i] - col_max[j];
        if (delta < best) {
          best = delta;
          bi = i;
          bj = j;
        }
      }
    }

    const bool row_exhausted = supply[bi] <= demand[bj];
    const double x = row_exhausted ? supply[bi] : demand[bj];
    basis.push_back({bi, bj, x});
    supply[bi] -= x;
    demand[bj] -= x;

    if (rows_left == 1 && cols_left == 1) {
      row_active[bi] = col_active[bj] = 0;
      rows_left = cols_left = 0;
    } else if (rows_left == 1 || (cols_left > 1 && !row_exhausted)) {
      col_active[bj] = 0;
      --cols_left;
    } else {
      row_active[bi] = 0;
      --rows_left;
    }
  }
  return basis;
}

// Transportation simplex (u-v potentials) from a spanning-tree basis.
// Entering and leaving variables follow Bland's lowest-index rule over the
// row-major cell index, which rules out cycling on degenerate pivots.
std::size_t optimize_basis(std::vector<BasicCell>& basis, const GroundMatrix& cost) {
  const std::size_t m = cost.rows();
  const std::size_t n = cost.cols();
  const std::size_t nodes = m + n;
  const double tol = 1e-10 * (1.0 + cost.max());
  const std::size_t max_pivots = 10000 + 50 * m * n * (m + n);

  std::vector<char> is_basic(m * n, 0);
  for (const auto& b : basis) is_basic[b.row * n + b.col] = 1;

  std::vector<std::vector<std::size_t>> adj(nodes);  // node -> basis indices
  std::vector<double> potential(nodes);
  std::vector<char> seen(nodes);
  std::vector<std::size_t> parent_edge(nodes);
  std::vector<std::size_t> stack;

  // Roots the basis tree at `root`; parent_edge[v] is the basis index leading to v.
  auto build_tree = [&](std::size_t root) {
    for (auto& a : adj) a.clear();
    for (std::size_t e = 0; e < basis.size(); ++e) {
      adj[basis[e].row].push_back(e);
      adj[m + basis[e].col].push_back(e);
    }
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(1, root);
    seen[root] = 1;
    potential[root] = 0.0;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t e : adj[v]) {
        const std::size_t r = basis[e].row;
        const std::size_t c = m + basis[e].col;
        const std::size_t w = (v == r) ? c : r;
        if (seen[w]) continue;
        seen[w] = 1;
        parent_edge[w] = e;
        // u_row + v_col = cost on basic cells
        potential[w] = cost(basis[e].row, basis[e].col) - potential[v];
        stack.push_back(w);
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw SolverError("transport basis is not a spanning tree");
  };

  std::size_t pivots = 0;
  for (;;) {
    build_tree(0);

    std::size_t enter_row = m;
    std::size_t enter_col = n;
    for (std::size_t i = 0; i < m && enter_row == m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (is_basic[i * n + j]) continue;
        if (cost(i, j) - potential[i] - potential[m + j] < -tol) {
          enter_row = i;
          enter_col = j;
          break;
        }
      }
    }
    if (enter_row == m) return pivots;
    if (++pivots > max_pivots) throw SolverError("transportation simplex failed to converge");

    // Tree path from the entering column back to the entering row closes the
    // cycle. Edges along it alternate -, +, -, ... starting at the column.
    build_tree(enter_row);
    std::vector<std::size_t> minus_edges;
    std::vector<std::size_t> plus_edges;
    std::size_t v = m + enter_col;
    bool minus = true;
    while (v != enter_row) {
      const std::size_t e = parent_edge[v];
      (minus ? minus_edges : plus_edges).push_back(e);
      minus = !minus;
      v = (v == basis[e].row) ? m + basis[e].col : basis[e].row;
    }

    std::size_t leave = basis.size();
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave_index = m * n;
    for (std::size_t e : minus_edges) {
      const std::size_t idx = basis[e].row * n + basis[e].col;
      if (basis[e].flow < theta || (basis[e].flow == theta && idx < leave_index)) {
        theta = basis[e].flow;
        leave = e;
        leave_index = idx;
      }
    }
    for (std::size_t e : minus_edges) basis[e].flow -= theta;
    for (std::size_t e : plus_edges) basis[e].flow += theta;
    basis[leave].flow = 0.0;
    is_basic[leave_index] = 0;
    is_basic[enter_row * n + enter_col] = 1;
    basis[leave] = {enter_row, enter_col, theta};
  }
}

FlowMatrix to_flow(const std::vector<BasicCell>& basis, std::size_t rows, std::size_t cols) {
  FlowMatrix f(rows, cols);
  for (const auto& b : basis)
    if (b.row < rows && b.col < cols) f(b.row, b.col) += std::max(0.0, b.flow);
  return f;
}

double sum(std::span<const double> w) { return std::accumulate(w.begin(), w.end(), 0.0); }

}  // namespace

FlowMatrix russell_initial_flow(std::span<const double> supplies, std::span<const double> demands,
                                const GroundMatrix& cost) {
  check_weights(supplies, "supplies");
  check_weights(demands, "demands");
  if (supplies.empty() || demands.empty()) throw std::invalid_argument("russell: empty problem");
  check_costs(cost, supplies.size(), demands.size());
  const double s = sum(supplies);
  const double d = sum(demands);
  if (std::abs(s - d) > 1e-9 * std::max(1.0, std::max(s, d)))
    throw std::invalid_argument("russell: supplies and demands are unbalanced");
  auto basis = russell_basis({supplies.begin(), supplies.end()}, {demands.begin(), demands.end()}, cost);
  return to_flow(basis, supplies.size(), demands.size());
}

TransportSolution solve_transport(const GroundMatrix& cost, std::span<const double> supplies,
                                  std::span<const double> demands) {
  check_weights(supplies, "supplies");
  check_weights(demands, "demands");
  check_costs(cost, supplies.size(), demands.size());
  const double s = sum(supplies);
  const double d = sum(demands);
  if (!(s > 0.0)) throw std::invalid_argument("solve_transport: all supplies are zero");
  if (!(d > 0.0)) throw std::invalid_argument("solve_transport: all demands are zero");

  const std::size_t m = supplies.size();
  const std::size_t n = demands.size();
  std::vector<double> sup(supplies.begin(), supplies.end());
  std::vector<double> dem(demands.begin(), demands.end());
  const bool balanced = std::abs(s - d) <= 1e-12 * std::max(s, d);
  const bool slack_col = !balanced && s > d;
  const bool slack_row = !balanced && d > s;
  if (slack_col) dem.push_back(s - d);
  if (slack_row) sup.push_back(d - s);

  GroundMatrix full(sup.size(), dem.size(), 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) full(i, j) = cost(i, j);

  auto basis = russell_basis(sup, dem, full);
  TransportSolution out;
  out.initial_cost = transport_cost(cost, to_flow(basis, m, n));
  out.iterations = optimize_basis(basis, full);
  out.flow = to_flow(basis, m, n);
  return out;
}

EmdResult emd(std::span<const Color> a_centroids, std::span<const double> a_weights,
              std::span<const Color> b_centroids, std::span<const double> b_weights) {
  if (a_centroids.size() != a_weights.size() || b_centroids.size() != b_weights.size())
    throw std::invalid_argument("emd: centroid and weight counts differ");

  std::vector<std::size_t> a_keep;
  std::vector<std::size_t> b_keep;
  for (std::size_t i = 0; i < a_weights.size(); ++i)
    if (a_weights[i] >= kNegligibleWeight) a_keep.push_back(i);
  for (std::size_t j = 0; j < b_weights.size(); ++j)
    if (b_weights[j] >= kNegligibleWeight) b_keep.push_back(j);
  if (a_keep.empty() || b_keep.empty()) throw SolverError("emd: signature carries no mass");

  std::vector<Color> ac;
  std::vector<Color> bc;
  std::vector<double> aw;
  std::vector<double> bw;
  for (std::size_t i : a_keep) {
    ac.push_back(a_centroids[i]);
    aw.push_back(a_weights[i]);
  }
  for (std::size_t j : b_keep) {
    bc.push_back(b_centroids[j]);
    bw.push_back(b_weights[j]);
  }
  const GroundMatrix g = ground_matrix(ac, bc);
  TransportSolution sol = solve_transport(g, aw, bw);

  EmdResult res;
  res.flow = FlowMatrix(a_centroids.size(), b_centroids.size());
  for (std::size_t i = 0; i < a_keep.size(); ++i)
    for (std::size_t j = 0; j < b_keep.size(); ++j) res.flow(a_keep[i], b_keep[j]) = sol.flow(i, j);
  res.work = transport_cost(g, sol.flow);
  res.total_flow = sol.flow.total();
  res.distance = res.work / res.total_flow;
  res.iterations = sol.iterations;
  return res;
}

EmdResult emd(const DatasetSignature& a, const DatasetSignature& b) {
  return emd(a.centroids, a.weights, b.centroids, b.weights);
}

EmdResult emd(const ImageSignature& a, const ImageSignature& b) {
  return emd(a.centroids, a.weights, b.centroids, b.weights);
}

}  // namespace srcsel
