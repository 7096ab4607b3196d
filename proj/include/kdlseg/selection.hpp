#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace kdlseg {

/// Pearson correlation across the components of two vectors; 0 when either
/// has zero variance. Throws on length mismatch or length < 2.
double pearson(std::span<const double> u, std::span<const double> v);

/// Columns centered across their components and scaled to unit norm, so that
/// pearson(u, v) == standardized(u)·standardized(v). Zero-variance columns
/// become zero vectors.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& vectors);

/// Full correlation matrix between the columns of `a` and `b` (small inputs only).
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// The three score terms and their combination P_T = P_U − P_S − P_O.
struct CandidateScore {
  double representativeness = 0.0;  // P_U: mean correlation to the other unselected own-class vectors
  double redundancy = 0.0;          // P_S: mean correlation to the selected vectors (0 before the first pick)
  double overlap = 0.0;             // P_O: mean correlation to the other class (0 when it is empty)
  double total = 0.0;
};

/// Greedy state for one class. Cached per-candidate sums:
///   own_sum[i]      = Σ_{j≠i} c(i, j) over the whole own class,
///   selected_sum[i] = Σ_{j∈S} c(i, j),
///   other_sum[i]    = Σ_j c(i, j) over the other class.
struct SelectionState {
  std::vector<std::size_t> selected;  // pick order
  std::vector<char> is_selected;      // per own-class index
  std::vector<double> own_sum;
  std::vector<double> selected_sum;
  std::vector<double> other_sum;
  std::size_t other_count = 0;

  std::size_t class_size() const noexcept { return is_selected.size(); }
  std::size_t picked() const noexcept { return selected.size(); }
};

/// Score of unselected candidate `i` from the cached sums.
CandidateScore score_candidate(std::size_t i, const SelectionState& state);

/// Score of candidate `i` recomputed from full correlation matrices:
/// own_corr (n_c × n_c) and cross_corr (n_c × n_other).
CandidateScore score_candidate(std::size_t i, std::span<const std::size_t> selected, const Eigen::MatrixXd& own_corr,
                               const Eigen::MatrixXd& cross_corr);

/// Incremental greedy selector. Construction streams the correlation sums in
/// row blocks of `block_size` against fixed-width column panels, so no full
/// correlation matrix is ever held. Each row sum is accumulated in a fixed
/// column order, so neither block size nor thread count affects any bit of
/// the state.
class GreedySelector {
 public:
  GreedySelector(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other, std::size_t block_size = 64,
                 std::size_t threads = 1);

  /// Picks the best-scoring unselected candidate (ties → lowest index),
  /// updates the cached sums and returns its index.
  std::size_t step();

  bool exhausted() const noexcept { return state_.picked() == state_.class_size(); }
  const SelectionState& state() const noexcept { return state_; }

 private:
  Eigen::MatrixXd own_;        // standardized, dim × n
  Eigen::MatrixXd own_panel_;  // transposed copy, n × dim
  std::size_t threads_;
  SelectionState state_;
  std::vector<double> scores_;
  std::vector<double> update_;
};

/// Indices of the n most useful own-class vectors, in pick order. Inputs are
/// dim × count matrices; `other` may be empty.
std::vector<std::size_t> select_samples(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other, std::size_t n,
                                        std::size_t block_size = 64, std::size_t threads = 1);

/// Reference selector: builds the full correlation matrices and rescores every
/// candidate from scratch at every step. Quadratic memory; small inputs only.
std::vector<std::size_t> select_samples_oracle(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other,
                                               std::size_t n);

}  // namespace kdlseg
