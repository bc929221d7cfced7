#include "dmcc/autodiff.hpp"

#include <algorithm>

namespace dmcc::ad {

Eigen::VectorXd ad_gradient(const ScalarDualFn& f, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n);
  std::vector<DualX> in(static_cast<size_t>(n));
  for (int base = 0; base < n; base += kSeedWidth) {
    const int width = std::min(kSeedWidth, n - base);
    for (int i = 0; i < n; ++i) in[i] = DualX(x[i]);
    for (int k = 0; k < width; ++k) in[base + k].d[k] = 1.0;
    const DualX out = f(in);
    for (int k = 0; k < width; ++k) g[base + k] = out.d[k];
  }
  return g;
}

std::vector<int> color_columns(const SparsityPattern& pattern) {
  std::vector<std::vector<int>> row_cols(static_cast<size_t>(pattern.rows));
  std::vector<std::vector<int>> col_rows(static_cast<size_t>(pattern.cols));
  for (const auto& [r, c] : pattern.entries) {
    row_cols[r].push_back(c);
    col_rows[c].push_back(r);
  }
  std::vector<int> color(static_cast<size_t>(pattern.cols), -1);
  std::vector<char> used;
  for (int c = 0; c < pattern.cols; ++c) {
    used.assign(static_cast<size_t>(pattern.cols), 0);
    for (int r : col_rows[c]) {
      for (int other : row_cols[r]) {
        if (color[other] >= 0) used[color[other]] = 1;
      }
    }
    int k = 0;
    while (used[k]) ++k;
    color[c] = k;
  }
  return color;
}

Eigen::SparseMatrix<double> ad_jacobian(const VectorDualFn& F, const Eigen::VectorXd& x,
                                        const SparsityPattern& pattern) {
  const int n = pattern.cols;
  const int m = pattern.rows;
  const std::vector<int> color = color_columns(pattern);
  const int n_colors = color.empty() ? 0 : 1 + *std::max_element(color.begin(), color.end());

  std::vector<DualX> in(static_cast<size_t>(n));
  std::vector<DualX> out(static_cast<size_t>(m));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(pattern.entries.size());

  for (int base = 0; base < std::max(n_colors, 1) && n_colors > 0; base += kSeedWidth) {
    const int width = std::min(kSeedWidth, n_colors - base);
    for (int i = 0; i < n; ++i) {
      in[i] = DualX(x[i]);
      const int k = color[i] - base;
      if (k >= 0 && k < width) in[i].d[k] = 1.0;
    }
    std::fill(out.begin(), out.end(), DualX());
    F(in, out);
    for (const auto& [r, c] : pattern.entries) {
      const int k = color[c] - base;
      if (k >= 0 && k < width) triplets.emplace_back(r, c, out[r].d[k]);
    }
  }

  Eigen::SparseMatrix<double> J(m, n);
  J.setFromTriplets(triplets.begin(), triplets.end());
  return J;
}

}  // namespace dmcc::ad
