#pragma once

#include <string>

#include <Eigen/SparseCore>

#include "varchen/errors.hpp"
#include "varchen/types.hpp"

namespace varchen {

/// Feature matrix (dense or compressed-row sparse) plus integer labels in
/// {-1,+1} or {0..9}.
struct Dataset {
  Matrix<double> dense;                                  // N x n when !is_sparse
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse;   // when is_sparse
  bool is_sparse = false;
  Eigen::VectorXi labels;
  std::string provenance;

  Index rows() const { return is_sparse ? sparse.rows() : dense.rows(); }
  Index cols() const { return is_sparse ? sparse.cols() : dense.cols(); }

  double row_dot(Index i, const Vector<double>& x) const;
  /// out += c * a_i
  void row_axpy(Index i, double c, Vector<double>& out) const;
  /// a_i a_i^T accumulated into `gram` (dense, used by Lipschitz reporting).
  void add_row_outer(Index i, Matrix<double>& gram) const;

  /// Finite features, labels inside the declared set. Throws InvalidInput.
  void validate() const;
};

/// LIBSVM text format: `label idx:val ...` with 1-based, strictly increasing
/// indices. `dim` forces the feature dimension (0 = max index seen).
/// Throws ParseError with 1-based line/column on malformed input.
Dataset load_libsvm(const std::string& path, Index dim = 0);

/// Dense CSV: `label,f1,...,fn`, consistent column count per line.
Dataset load_csv(const std::string& path);

/// One-vs-rest reduction: labels == positive_class map to +1, others to -1.
Dataset binarize(const Dataset& dataset, int positive_class);

}  // namespace varchen
