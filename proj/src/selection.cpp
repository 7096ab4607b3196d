#include "kdlseg/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "kdlseg/error.hpp"
#include "kdlseg/parallel.hpp"
#include "kdlseg/simd.hpp"

namespace kdlseg {

double pearson(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch("pearson: lengths " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  if (u.size() < 2) throw InvalidArgument("pearson: at least two components required");
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double cov = 0.0, vu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dv = v[i] - mv;
    cov += du * dv;
    vu += du * du;
    vv += dv * dv;
  }
  if (vu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(vu * vv), -1.0, 1.0);
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& vectors) {
  Eigen::MatrixXd z = vectors;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    auto col = z.col(j);
    col.array() -= col.mean();
    const double norm = col.norm();
    if (norm > 0.0) {
      col /= norm;
    } else {
      col.setZero();
    }
  }
  return z;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() && a.cols() != 0 && b.cols() != 0) {
    throw DimensionMismatch("correlation_matrix: vector dimensions differ");
  }
  const auto dim = static_cast<std::size_t>(a.rows());
  Eigen::MatrixXd c(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      c(i, j) = pearson(std::span(a.col(i).data(), dim), std::span(b.col(j).data(), dim));
  return c;
}

namespace {

CandidateScore combine(double unselected_sum, std::size_t unselected_others, double selected_sum, std::size_t picked,
                       double other_sum, std::size_t other_count) {
  CandidateScore s;
  s.representativeness = unselected_others > 0 ? unselected_sum / static_cast<double>(unselected_others) : 0.0;
  s.redundancy = picked > 0 ? selected_sum / static_cast<double>(picked) : 0.0;
  s.overlap = other_count > 0 ? other_sum / static_cast<double>(other_count) : 0.0;
  s.total = s.representativeness - s.redundancy - s.overlap;
  return s;
}

void check_inputs(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other, std::size_t n) {
  if (other.cols() != 0 && other.rows() != own.rows()) {
    throw DimensionMismatch("select_samples: classes have different feature dimensions");
  }
  if (n < 1 || n > static_cast<std::size_t>(own.cols())) {
    throw InvalidArgument("select_samples: n = " + std::to_string(n) + " outside [1, " + std::to_string(own.cols()) +
                          "]");
  }
  if (own.rows() < 2) throw InvalidArgument("select_samples: vectors need at least two components");
}

// Index-ordered argmax over unselected candidates; strict comparison keeps the lowest index on ties.
std::size_t argmax_unselected(const std::vector<double>& scores, const std::vector<char>& is_selected) {
  std::size_t best = scores.size();
  double best_score = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (is_selected[i]) continue;
    if (best == scores.size() || scores[i] > best_score) {
      best = i;
      best_score = scores[i];
    }
  }
  return best;
}

}  // namespace

CandidateScore score_candidate(std::size_t i, const SelectionState& state) {
  if (i >= state.class_size()) throw InvalidArgument("score_candidate: index out of range");
  if (state.is_selected[i]) throw InvalidArgument("score_candidate: candidate " + std::to_string(i) + " already selected");
  const std::size_t m = state.picked();
  return combine(state.own_sum[i] - state.selected_sum[i], state.class_size() - m - 1, state.selected_sum[i], m,
                 state.other_sum[i], state.other_count);
}

CandidateScore score_candidate(std::size_t i, std::span<const std::size_t> selected, const Eigen::MatrixXd& own_corr,
                               const Eigen::MatrixXd& cross_corr) {
  const auto nc = static_cast<std::size_t>(own_corr.rows());
  if (i >= nc) throw InvalidArgument("score_candidate: index out of range");
  std::vector<char> in_selected(nc, 0);
  for (std::size_t s : selected) in_selected[s] = 1;
  if (in_selected[i]) throw InvalidArgument("score_candidate: candidate " + std::to_string(i) + " already selected");

  const auto row = static_cast<Eigen::Index>(i);
  double unselected = 0.0;
  for (std::size_t j = 0; j < nc; ++j)
    if (j != i && !in_selected[j]) unselected += own_corr(row, static_cast<Eigen::Index>(j));
  double chosen = 0.0;
  for (std::size_t s : selected) chosen += own_corr(row, static_cast<Eigen::Index>(s));
  double other = 0.0;
  for (Eigen::Index j = 0; j < cross_corr.cols(); ++j) other += cross_corr(row, j);
  return combine(unselected, nc - selected.size() - 1, chosen, selected.size(), other,
                 static_cast<std::size_t>(cross_corr.cols()));
}

namespace {

// Columns per panel pass; a multiple of 4 so lane k always holds columns j ≡ k (mod 4).
constexpr std::size_t kPanelChunk = 256;

// Row sums Σ_j z_i·w_j for the rows [r0, r1) of `rows` against every column of
// the transposed `panel` (ld = columns). With `skip_self`, column i is left
// out of row i. Each sum runs over four
// interleaved lanes in ascending j, combined as (l0 + l1) + (l2 + l3), which
// fixes every bit independently of row blocking and threading.
void panel_row_sums(const Eigen::MatrixXd& rows, std::size_t r0, std::size_t r1, const Eigen::MatrixXd& panel,
                    bool skip_self, std::vector<double>& sums, std::vector<double>& buf) {
  const auto dim = static_cast<std::size_t>(rows.rows());
  const auto columns = static_cast<std::size_t>(panel.rows());
  buf.resize(4 * kPanelChunk);
  std::vector<std::array<double, 4>> lanes(r1 - r0, std::array<double, 4>{0.0, 0.0, 0.0, 0.0});
  const auto accumulate = [&](std::size_t i, std::size_t c0, std::size_t cnt, double* vals) {
    if (skip_self && i >= c0 && i < c0 + cnt) vals[i - c0] = 0.0;
    std::array<double, 4>& l = lanes[i - r0];
    std::size_t t = 0;
    for (; t + 4 <= cnt; t += 4) {
      l[0] += vals[t];
      l[1] += vals[t + 1];
      l[2] += vals[t + 2];
      l[3] += vals[t + 3];
    }
    for (; t < cnt; ++t) l[t % 4] += vals[t];
  };
  for (std::size_t c0 = 0; c0 < columns; c0 += kPanelChunk) {
    const std::size_t cnt = std::min(kPanelChunk, columns - c0);
    std::size_t i = r0;
    for (; i + 4 <= r1; i += 4) {
      simd::dot_panel4(rows.col(static_cast<Eigen::Index>(i)).data(), dim, panel.data() + c0, columns, dim, cnt,
                       buf.data(), kPanelChunk);
      for (std::size_t r = 0; r < 4; ++r) accumulate(i + r, c0, cnt, buf.data() + r * kPanelChunk);
    }
    for (; i < r1; ++i) {
      simd::dot_panel(rows.col(static_cast<Eigen::Index>(i)).data(), panel.data() + c0, columns, dim, cnt,
                      buf.data());
      accumulate(i, c0, cnt, buf.data());
    }
  }
  for (std::size_t i = r0; i < r1; ++i) {
    const std::array<double, 4>& l = lanes[i - r0];
    sums[i] = (l[0] + l[1]) + (l[2] + l[3]);
  }
}

}  // namespace

GreedySelector::GreedySelector(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other, std::size_t block_size,
                               std::size_t threads)
    : own_(standardize_columns(own)), threads_(threads) {
  if (other.cols() != 0 && other.rows() != own.rows()) {
    throw DimensionMismatch("GreedySelector: classes have different feature dimensions");
  }
  own_panel_ = own_.transpose();
  const Eigen::MatrixXd other_panel = standardize_columns(other).transpose();
  const auto n = static_cast<std::size_t>(own_.cols());
  const auto n_other = static_cast<std::size_t>(other.cols());
  const std::size_t block = std::max<std::size_t>(1, block_size);

  state_.is_selected.assign(n, 0);
  state_.own_sum.assign(n, 0.0);
  state_.selected_sum.assign(n, 0.0);
  state_.other_sum.assign(n, 0.0);
  state_.other_count = n_other;
  scores_.assign(n, 0.0);

  // Only row blocks of the correlation matrices (block × kPanelChunk) ever exist.
  const std::size_t blocks = (n + block - 1) / block;
  parallel_for(blocks, threads, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> buf;
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t r0 = b * block;
      const std::size_t r1 = std::min(n, r0 + block);
      panel_row_sums(own_, r0, r1, own_panel_, true, state_.own_sum, buf);
      if (n_other > 0) panel_row_sums(own_, r0, r1, other_panel, false, state_.other_sum, buf);
    }
  });
}

std::size_t GreedySelector::step() {
  if (exhausted()) throw InvalidArgument("GreedySelector::step: every candidate is already selected");
  const std::size_t n = state_.class_size();
  parallel_for(n, threads_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      if (!state_.is_selected[i]) scores_[i] = score_candidate(i, state_).total;
  });
  const std::size_t pick = argmax_unselected(scores_, state_.is_selected);

  state_.is_selected[pick] = 1;
  state_.selected.push_back(pick);
  // c(i, pick) for every i in one panel pass; same per-pair arithmetic as the row sums.
  const auto dim = static_cast<std::size_t>(own_.rows());
  update_.resize(n);
  simd::dot_panel(own_.col(static_cast<Eigen::Index>(pick)).data(), own_panel_.data(), n, dim, n, update_.data());
  for (std::size_t i = 0; i < n; ++i) state_.selected_sum[i] += update_[i];
  return pick;
}

std::vector<std::size_t> select_samples(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other, std::size_t n,
                                        std::size_t block_size, std::size_t threads) {
  check_inputs(own, other, n);
  GreedySelector selector(own, other, block_size, threads);
  for (std::size_t s = 0; s < n; ++s) selector.step();
  return selector.state().selected;
}

std::vector<std::size_t> select_samples_oracle(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other,
                                               std::size_t n) {
  check_inputs(own, other, n);
  const Eigen::MatrixXd own_corr = correlation_matrix(own, own);
  const Eigen::MatrixXd cross_corr =
      other.cols() == 0 ? Eigen::MatrixXd(own.cols(), 0) : correlation_matrix(own, other);
  const auto nc = static_cast<std::size_t>(own.cols());
  std::vector<std::size_t> selected;
  std::vector<char> is_selected(nc, 0);
  std::vector<double> scores(nc, 0.0);
  while (selected.size() < n) {
    for (std::size_t i = 0; i < nc; ++i)
      if (!is_selected[i]) scores[i] = score_candidate(i, selected, own_corr, cross_corr).total;
    const std::size_t pick = argmax_unselected(scores, is_selected);
    is_selected[pick] = 1;
    selected.push_back(pick);
  }
  return selected;
}

}  // namespace kdlseg
