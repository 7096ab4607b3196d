#include "oracles.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace oracle {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

OmpResult omp(const Eigen::MatrixXd& D, const Eigen::VectorXd& y, std::size_t sparsity) {
  OmpResult out;
  Eigen::VectorXd residual = y;
  std::vector<char> used(static_cast<std::size_t>(D.cols()), 0);
  Eigen::VectorXd x;
  for (std::size_t s = 0; s < sparsity; ++s) {
    Eigen::Index best = -1;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < D.cols(); ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double c = std::abs(D.col(i).dot(residual));
      if (c > best_abs) {
        best_abs = c;
        best = i;
      }
    }
    if (best < 0 || best_abs < 1e-12) break;
    used[static_cast<std::size_t>(best)] = 1;
    out.support.push_back(static_cast<std::size_t>(best));
    Eigen::MatrixXd sub(D.rows(), static_cast<Eigen::Index>(out.support.size()));
    for (std::size_t t = 0; t < out.support.size(); ++t)
      sub.col(static_cast<Eigen::Index>(t)) = D.col(static_cast<Eigen::Index>(out.support[t]));
    x = sub.colPivHouseholderQr().solve(y);
    residual = y - sub * x;
  }
  out.coefficients.assign(x.data(), x.data() + out.support.size());
  return out;
}

namespace {

Eigen::MatrixXd code_all(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y, std::size_t sparsity) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(D.cols(), Y.cols());
  for (Eigen::Index i = 0; i < Y.cols(); ++i) {
    const OmpResult r = omp(D, Y.col(i), sparsity);
    for (std::size_t t = 0; t < r.support.size(); ++t) X(static_cast<Eigen::Index>(r.support[t]), i) = r.coefficients[t];
  }
  return X;
}

double total_error(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& D, const Eigen::MatrixXd& X) {
  return (Y - D * X).squaredNorm();
}

}  // namespace

KsvdCurve ksvd(const Eigen::MatrixXd& Y, Eigen::MatrixXd D, std::size_t sparsity, std::size_t iterations) {
  KsvdCurve curve;
  const Eigen::Index n = Y.cols();
  for (std::size_t it = 0; it < iterations; ++it) {
    Eigen::MatrixXd X = code_all(D, Y, sparsity);
    curve.coding_error.push_back(total_error(Y, D, X));
    std::vector<char> replaced(static_cast<std::size_t>(n), 0);
    for (Eigen::Index k = 0; k < D.cols(); ++k) {
      std::vector<Eigen::Index> users;
      for (Eigen::Index i = 0; i < n; ++i)
        if (X(k, i) != 0.0) users.push_back(i);
      bool dead = users.empty();
      if (!dead) {
        Eigen::MatrixXd E(Y.rows(), static_cast<Eigen::Index>(users.size()));
        for (std::size_t j = 0; j < users.size(); ++j) {
          const Eigen::Index i = users[j];
          E.col(static_cast<Eigen::Index>(j)) = Y.col(i) - D * X.col(i) + D.col(k) * X(k, i);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double s1 = svd.singularValues()(0);
        if (s1 * s1 < 1e-12) {
          dead = true;
          for (Eigen::Index i : users) X(k, i) = 0.0;
        } else {
          Eigen::VectorXd u = svd.matrixU().col(0);
          Eigen::VectorXd v = svd.matrixV().col(0);
          const double scale = v.cwiseAbs().maxCoeff();
          Eigen::Index anchor = 0;
          while (anchor < v.size() && std::abs(v(anchor)) <= 1e-8 * scale) ++anchor;
          if (anchor < v.size() && v(anchor) < 0.0) {
            u = -u;
            v = -v;
          }
          D.col(k) = u;
          for (std::size_t j = 0; j < users.size(); ++j) X(k, users[j]) = s1 * v(static_cast<Eigen::Index>(j));
        }
      }
      if (dead) {
        Eigen::Index worst = -1;
        double worst_err = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (replaced[static_cast<std::size_t>(i)] || !(Y.col(i).squaredNorm() > 0.0)) continue;
          const double e = (Y.col(i) - D * X.col(i)).squaredNorm();
          if (e > worst_err) {
            worst_err = e;
            worst = i;
          }
        }
        if (worst >= 0) {
          replaced[static_cast<std::size_t>(worst)] = 1;
          D.col(k) = Y.col(worst).normalized();
          X.row(k).setZero();
        }
      }
    }
    curve.updated_error.push_back(total_error(Y, D, X));
  }
  curve.dictionary = D;
  return curve;
}

BruteMoments moments(const Patch& p) {
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= 9.0;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : p) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= 9.0;
  m3 /= 9.0;
  m4 /= 9.0;
  if (m2 == 0.0) return {mean, 0.0, 0.0, 0.0};
  return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

std::vector<double> glcm(const Patch& p, int drow, int dcol, std::size_t levels) {
  const auto level = [&](double v) {
    const double q = std::floor(v * static_cast<double>(levels) / 256.0);
    return static_cast<std::size_t>(std::clamp(q, 0.0, static_cast<double>(levels - 1)));
  };
  std::vector<double> m(levels * levels, 0.0);
  double total = 0.0;
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      const int ra = a / 3, ca = a % 3, rb = b / 3, cb = b % 3;
      if (rb - ra != drow || cb - ca != dcol) continue;
      const std::size_t i = level(p[static_cast<std::size_t>(a)]);
      const std::size_t j = level(p[static_cast<std::size_t>(b)]);
      m[i * levels + j] += 1.0;
      m[j * levels + i] += 1.0;
      total += 2.0;
    }
  }
  for (double& v : m) v /= total;
  return m;
}

BruteGlcmFeatures glcm_features(const std::vector<double>& m, std::size_t levels) {
  BruteGlcmFeatures f{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < levels; ++i) {
    for (std::size_t j = 0; j < levels; ++j) {
      const double p = m[i * levels + j];
      const double d = static_cast<double>(i) - static_cast<double>(j);
      f.homogeneity += p / (1.0 + std::abs(d));
      f.contrast += p * d * d;
      f.energy += p * p;
      if (p > 0.0) f.entropy -= p * std::log2(p);
    }
  }
  return f;
}

std::vector<double> features(const Patch& p, std::size_t levels) {
  const BruteMoments mo = moments(p);
  const double lo = *std::min_element(p.begin(), p.end());
  const double hi = *std::max_element(p.begin(), p.end());
  std::vector<double> v{mo.mean, mo.variance, mo.skewness, mo.kurtosis, p[4], hi - lo};
  const int offsets[4][2] = {{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
  for (const auto& o : offsets) {
    const BruteGlcmFeatures g = glcm_features(glcm(p, o[0], o[1], levels), levels);
    v.insert(v.end(), {g.homogeneity, g.contrast, g.energy, g.entropy});
  }
  return v;
}

double pearson(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double n = static_cast<double>(u.size());
  const double mu = u.sum() / n;
  const double mv = v.sum() / n;
  double suv = 0.0, suu = 0.0, svv = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    suv += (u(i) - mu) * (v(i) - mv);
    suu += (u(i) - mu) * (u(i) - mu);
    svv += (v(i) - mv) * (v(i) - mv);
  }
  if (suu == 0.0 || svv == 0.0) return 0.0;
  return suv / std::sqrt(suu * svv);
}

std::vector<std::size_t> greedy_select(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other, std::size_t n) {
  const Eigen::Index nc = own.cols();
  const Eigen::Index no = other.cols();
  std::vector<std::size_t> picked;
  std::vector<char> in(static_cast<std::size_t>(nc), 0);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t m = picked.size();
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index i = 0; i < nc; ++i) {
      if (in[static_cast<std::size_t>(i)]) continue;
      double pu = 0.0, ps = 0.0, po = 0.0;
      for (Eigen::Index j = 0; j < nc; ++j) {
        if (j == i) continue;
        const double c = pearson(own.col(i), own.col(j));
        if (in[static_cast<std::size_t>(j)])
          ps += c;
        else
          pu += c;
      }
      for (Eigen::Index j = 0; j < no; ++j) po += pearson(own.col(i), other.col(j));
      const auto rest = static_cast<double>(nc) - static_cast<double>(m) - 1.0;
      pu = rest > 0.0 ? pu / rest : 0.0;
      ps = m > 0 ? ps / static_cast<double>(m) : 0.0;
      po = no > 0 ? po / static_cast<double>(no) : 0.0;
      const double score = pu - ps - po;
      if (best < 0 || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    in[static_cast<std::size_t>(best)] = 1;
    picked.push_back(static_cast<std::size_t>(best));
  }
  return picked;
}

Counts confusion(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& truth,
                 const std::vector<std::uint8_t>& eval) {
  Counts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!eval[i]) continue;
    if (pred[i] && truth[i]) ++c.tp;
    if (pred[i] && !truth[i]) ++c.fp;
    if (!pred[i] && truth[i]) ++c.fn;
    if (!pred[i] && !truth[i]) ++c.tn;
  }
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kdlseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
