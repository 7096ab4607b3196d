#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "kdlseg/error.hpp"
#include "kdlseg/selection.hpp"
#include "oracles.hpp"

using namespace kdlseg;

namespace {

double corr(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
  return pearson(std::span(a.col(i).data(), static_cast<std::size_t>(a.rows())),
                 std::span(b.col(j).data(), static_cast<std::size_t>(b.rows())));
}

// Two loosely separated random classes.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> two_classes(std::mt19937_64& rng, Eigen::Index dim, Eigen::Index n_own,
                                                        Eigen::Index n_other) {
  Eigen::MatrixXd own = oracle::random_matrix(rng, dim, n_own);
  Eigen::MatrixXd other = oracle::random_matrix(rng, dim, n_other);
  const Eigen::VectorXd shift = oracle::random_matrix(rng, dim, 1, -0.6, 0.6);
  own.colwise() += shift;
  other.colwise() -= shift;
  return {own, other};
}

}  // namespace

TEST_CASE("pearson") {
  const std::vector<double> u{1, 2, 3, 4}, neg{-2, -4, -6, -8}, flat{3, 3, 3, 3}, w{1, -1, -1, 1};
  CHECK(pearson(u, u) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(u, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(u, flat) == 0.0);
  CHECK(pearson(u, w) == 0.0);
  CHECK_THROWS_AS(pearson(u, std::vector<double>{1, 2}), DimensionMismatch);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), InvalidArgument);
}

TEST_CASE("standardized dot products equal pearson") {
  std::mt19937_64 rng(31);
  Eigen::MatrixXd v = oracle::random_matrix(rng, 22, 12, -3.0, 5.0);
  v.col(4).setConstant(2.0);
  const Eigen::MatrixXd z = standardize_columns(v);
  CHECK(z.col(4).isZero(0.0));
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 12; ++j)
      CHECK(std::abs(z.col(i).dot(z.col(j)) - oracle::pearson(v.col(i), v.col(j))) <= 1e-14);
}

TEST_CASE("correlation matrix shape") {
  std::mt19937_64 rng(32);
  const Eigen::MatrixXd v = oracle::random_matrix(rng, 22, 15);
  const Eigen::MatrixXd c = correlation_matrix(v, v);
  for (Eigen::Index i = 0; i < 15; ++i) {
    CHECK(c(i, i) == doctest::Approx(1.0).epsilon(1e-14));
    for (Eigen::Index j = 0; j < 15; ++j) {
      CHECK(c(i, j) == c(j, i));
      CHECK(c(i, j) >= -1.0);
      CHECK(c(i, j) <= 1.0);
    }
  }
}

TEST_CASE("score terms in forced configurations") {
  Eigen::MatrixXd own(4, 2), other(4, 1);
  own << 1, 1, 2, 2, 3, 3, 4, 4;
  other << 1, -1, -1, 1;
  const Eigen::MatrixXd oc = correlation_matrix(own, own), xc = correlation_matrix(own, other);

  const CandidateScore first = score_candidate(0, {}, oc, xc);
  CHECK(first.representativeness == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(first.redundancy == 0.0);
  CHECK(first.overlap == 0.0);
  CHECK(first.total == doctest::Approx(1.0).epsilon(1e-15));

  const std::vector<std::size_t> sel{0};
  const CandidateScore second = score_candidate(1, sel, oc, xc);
  CHECK(second.representativeness == 0.0);  // no unselected peers left
  CHECK(second.redundancy == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(second.total == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("matrix scorer matches a from-definition evaluation") {
  std::mt19937_64 rng(33);
  auto [own, other] = two_classes(rng, 22, 6, 6);
  const Eigen::MatrixXd oc = correlation_matrix(own, own), xc = correlation_matrix(own, other);
  const std::vector<std::size_t> sel{4, 1};
  for (std::size_t i : {0u, 2u, 3u, 5u}) {
    double pu = 0, ps = 0, po = 0;
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (static_cast<std::size_t>(j) == i) continue;
      const double c = oracle::pearson(own.col(static_cast<Eigen::Index>(i)), own.col(j));
      (j == 4 || j == 1 ? ps : pu) += c;
    }
    for (Eigen::Index j = 0; j < 6; ++j) po += oracle::pearson(own.col(static_cast<Eigen::Index>(i)), other.col(j));
    const CandidateScore s = score_candidate(i, sel, oc, xc);
    CHECK(s.representativeness == doctest::Approx(pu / 3.0).epsilon(1e-13));
    CHECK(s.redundancy == doctest::Approx(ps / 2.0).epsilon(1e-13));
    CHECK(s.overlap == doctest::Approx(po / 6.0).epsilon(1e-13));
    CHECK(s.total == doctest::Approx(pu / 3.0 - ps / 2.0 - po / 6.0).epsilon(1e-13));
  }
}

TEST_CASE("cached sums equal their definitions at every step") {
  std::mt19937_64 rng(34);
  auto [own, other] = two_classes(rng, 22, 40, 25);
  const Eigen::MatrixXd oc = correlation_matrix(own, own), xc = correlation_matrix(own, other);
  GreedySelector sel(own, other, 7, 2);
  std::set<std::size_t> picked;
  while (!sel.exhausted()) {
    const SelectionState& st = sel.state();
    for (std::size_t i = 0; i < st.class_size(); ++i) {
      double own_sum = 0, sel_sum = 0;
      for (std::size_t j = 0; j < st.class_size(); ++j)
        if (j != i) own_sum += oc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      for (std::size_t s : st.selected) sel_sum += oc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
      CHECK(std::abs(st.own_sum[i] - own_sum) <= 1e-12);
      CHECK(std::abs(st.selected_sum[i] - sel_sum) <= 1e-12);
      CHECK(std::abs(st.other_sum[i] - xc.row(static_cast<Eigen::Index>(i)).sum()) <= 1e-12);
      if (!st.is_selected[i]) {
        const CandidateScore a = score_candidate(i, st);
        const CandidateScore b = score_candidate(i, st.selected, oc, xc);
        CHECK(std::abs(a.total - b.total) <= 1e-12);
      }
    }
    const std::size_t pick = sel.step();
    CHECK(picked.insert(pick).second);  // never picked twice
    CHECK(sel.state().is_selected[pick]);
  }
  CHECK(picked.size() == 40);  // selected ∪ unselected exhausts the class
  CHECK_THROWS_AS(sel.step(), InvalidArgument);
}

TEST_CASE("incremental selection equals both brute-force selectors") {
  std::mt19937_64 rng(35);
  auto [own, other] = two_classes(rng, 22, 200, 200);
  const auto fast = select_samples(own, other, 20);
  CHECK(fast == oracle::greedy_select(own, other, 20));
  CHECK(fast == select_samples_oracle(own, other, 20));
}

TEST_CASE("library oracle selector agrees with the test oracle on small sets") {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 5; ++t) {
    auto [own, other] = two_classes(rng, 22, 30 + t, 20);
    CHECK(select_samples_oracle(own, other, 12) == oracle::greedy_select(own, other, 12));
  }
}

TEST_CASE("boundary behaviour") {
  std::mt19937_64 rng(37);
  auto [own, other] = two_classes(rng, 22, 9, 5);

  SUBCASE("n equal to the class size returns a permutation") {
    auto all = select_samples(own, other, 9);
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> iota(9);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(all == iota);
  }
  SUBCASE("identical vectors tie and the lowest index wins") {
    Eigen::MatrixXd same(22, 3);
    for (Eigen::Index j = 0; j < 3; ++j) same.col(j) = own.col(0);
    CHECK(select_samples(same, other, 1).front() == 0);
  }
  SUBCASE("n = 1 maximizes P_U − P_O") {
    const Eigen::MatrixXd oc = correlation_matrix(own, own), xc = correlation_matrix(own, other);
    std::size_t best = 0;
    double best_v = -1e300;
    for (Eigen::Index i = 0; i < 9; ++i) {
      const double v = (oc.row(i).sum() - oc(i, i)) / 8.0 - xc.row(i).mean();
      if (v > best_v) {
        best_v = v;
        best = static_cast<std::size_t>(i);
      }
    }
    CHECK(select_samples(own, other, 1).front() == best);
  }
  SUBCASE("empty other class contributes nothing") {
    const Eigen::MatrixXd none(22, 0);
    GreedySelector sel(own, none);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(score_candidate(i, sel.state()).overlap == 0.0);
    }
    CHECK(select_samples(own, none, 4) == oracle::greedy_select(own, none, 4));
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(select_samples(own, other, 0), InvalidArgument);
    CHECK_THROWS_AS(select_samples(own, other, 10), InvalidArgument);
    CHECK_THROWS_AS(select_samples(own, Eigen::MatrixXd::Zero(5, 3), 2), DimensionMismatch);
  }
}

TEST_CASE("block size and thread count never change a bit of the state") {
  std::mt19937_64 rng(38);
  auto [own, other] = two_classes(rng, 22, 301, 263);
  GreedySelector ref(own, other, 64, 1);
  for (int s = 0; s < 25; ++s) ref.step();
  for (std::size_t block : {1u, 5u, 64u, 1000u}) {
    for (std::size_t threads : {1u, 3u}) {
      GreedySelector sel(own, other, block, threads);
      for (int s = 0; s < 25; ++s) sel.step();
      CHECK(sel.state().selected == ref.state().selected);
      CHECK(sel.state().own_sum == ref.state().own_sum);
      CHECK(sel.state().selected_sum == ref.state().selected_sum);
      CHECK(sel.state().other_sum == ref.state().other_sum);
    }
  }
}

TEST_CASE("selection does not depend on the order of the other class") {
  std::mt19937_64 rng(39);
  auto [own, other] = two_classes(rng, 22, 80, 60);
  std::vector<Eigen::Index> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd shuffled(22, 60);
  for (Eigen::Index j = 0; j < 60; ++j) shuffled.col(j) = other.col(perm[static_cast<std::size_t>(j)]);
  CHECK(select_samples(own, other, 15) == select_samples(own, shuffled, 15));
}

TEST_CASE("helper correlation agrees with the oracle") {
  std::mt19937_64 rng(40);
  const Eigen::MatrixXd a = oracle::random_matrix(rng, 22, 4);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(corr(a, i, a, j) - oracle::pearson(a.col(i), a.col(j))) <= 1e-15);
}
