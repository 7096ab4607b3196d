#include "kdlseg/dictionary.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "kdlseg/binary_io.hpp"
#include "kdlseg/error.hpp"
#include "kdlseg/parallel.hpp"
#include "kdlseg/sparse.hpp"

namespace kdlseg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr double kDeadEigenvalue = 1e-12;

// Index of the first entry whose magnitude is significant relative to the
// largest one; the eigenvector sign is fixed by it.
Eigen::Index sign_anchor(const Eigen::VectorXd& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-8 * scale) return i;
  return 0;
}

// Keeps KA = K·A and G = AᵀKA consistent after column k of A changes, given
// the new K·a_k.
void refresh_atom(Eigen::MatrixXd& ka, Eigen::MatrixXd& g, const Eigen::MatrixXd& a, Eigen::Index k,
                  const Eigen::VectorXd& k_times_atom) {
  ka.col(k) = k_times_atom;
  const Eigen::VectorXd row = a.transpose() * k_times_atom;
  g.col(k) = row;
  g.row(k) = row.transpose();
}

}  // namespace

Eigen::MatrixXd init_dictionary(std::size_t samples, std::size_t atoms, const Eigen::MatrixXd& gram,
                                std::uint64_t seed) {
  if (samples == 0) throw InvalidArgument("init_dictionary: no training samples");
  if (atoms == 0) throw InvalidArgument("init_dictionary: at least one atom required");
  if (static_cast<std::size_t>(gram.rows()) != samples || gram.rows() != gram.cols()) {
    throw DimensionMismatch("init_dictionary: Gram size differs from the sample count");
  }
  std::mt19937_64 rng(seed);
  std::vector<char> taken(samples, 0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(atoms));
  for (std::size_t k = 0; k < atoms; ++k) {
    std::size_t row = rng() % samples;
    if (k < samples) {
      while (taken[row]) row = rng() % samples;
      taken[row] = 1;
    }
    const double self = gram(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(row));
    a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k)) = self > 0.0 ? 1.0 / std::sqrt(self) : 1.0;
  }
  return a;
}

Eigen::VectorXd sample_errors(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients,
                              const Eigen::MatrixXd& codes) {
  const Eigen::MatrixXd ka = gram * coefficients;
  const Eigen::MatrixXd g = coefficients.transpose() * ka;
  const Eigen::MatrixXd gx = g * codes;
  Eigen::VectorXd e(gram.rows());
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    const double v = gram(i, i) - 2.0 * ka.row(i).dot(codes.col(i)) + codes.col(i).dot(gx.col(i));
    e(i) = clamp_error2(v, gram(i, i));
  }
  return e;
}

Eigen::VectorXd atom_norms2(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients) {
  return (coefficients.transpose() * (gram * coefficients)).diagonal();
}

namespace {

CodingResult code_with(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& ka, const Eigen::MatrixXd& g,
                       std::size_t atoms, std::size_t sparsity, std::size_t threads) {
  const Eigen::Index n = gram.rows();
  const KompCoder coder = KompCoder::from_atom_gram(g);
  CodingResult out;
  out.codes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(atoms), n);
  out.sample_errors.resize(n);
  std::vector<char> flagged(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd projection(static_cast<Eigen::Index>(atoms));
    for (std::size_t i = begin; i < end; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      projection = ka.row(col).transpose();
      const SparseCode code = coder.code(projection, sparsity);
      for (std::size_t s = 0; s < code.support.size(); ++s) {
        out.codes(static_cast<Eigen::Index>(code.support[s]), col) = code.coefficients[s];
      }
      out.sample_errors(col) = coder.error2(projection, gram(col, col), code);
      flagged[i] = code.flagged() ? 1 : 0;
    }
  });
  out.total_error = out.sample_errors.sum();
  out.flagged = static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
  return out;
}

}  // namespace

CodingResult code_training_set(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients,
                               std::size_t sparsity, std::size_t threads) {
  if (gram.rows() != coefficients.rows()) throw DimensionMismatch("code_training_set: A rows differ from the Gram size");
  const Eigen::MatrixXd ka = gram * coefficients;
  Eigen::MatrixXd g = coefficients.transpose() * ka;
  g = 0.5 * (g + g.transpose()).eval();
  return code_with(gram, ka, g, static_cast<std::size_t>(coefficients.cols()), sparsity, threads);
}

IterationResult kksvd_iteration(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients,
                                std::size_t sparsity, std::size_t threads) {
  const Eigen::Index n = gram.rows();
  const Eigen::Index atoms = coefficients.cols();
  if (gram.cols() != n || coefficients.rows() != n) throw DimensionMismatch("kksvd_iteration: inconsistent shapes");

  IterationResult res;
  res.coefficients = coefficients;
  Eigen::MatrixXd& a = res.coefficients;
  Eigen::MatrixXd ka = gram * a;
  Eigen::MatrixXd g = a.transpose() * ka;
  g = 0.5 * (g + g.transpose()).eval();

  // Stage 1: sparse coding
  auto t0 = Clock::now();
  CodingResult coded = code_with(gram, ka, g, static_cast<std::size_t>(atoms), sparsity, threads);
  res.codes = std::move(coded.codes);
  res.stats.coding_error = coded.total_error;
  res.stats.coding_ms = ms_since(t0);

  // Stage 2: atom-by-atom update
  t0 = Clock::now();
  Eigen::MatrixXd& x = res.codes;
  std::vector<char> used_as_replacement(static_cast<std::size_t>(n), 0);
  for (Eigen::Index k = 0; k < atoms; ++k) {
    std::vector<Eigen::Index> users;
    for (Eigen::Index i = 0; i < n; ++i)
      if (x(k, i) != 0.0) users.push_back(i);
    bool dead = users.empty();

    if (!dead) {
      const auto r = static_cast<Eigen::Index>(users.size());
      Eigen::MatrixXd x_users(atoms, r);
      Eigen::MatrixXd k_users(n, r);
      for (Eigen::Index j = 0; j < r; ++j) {
        x_users.col(j) = x.col(users[static_cast<std::size_t>(j)]);
        k_users.col(j) = gram.col(users[static_cast<std::size_t>(j)]);
      }
      const Eigen::RowVectorXd xk = x_users.row(k);
      // E = Ω − R with R = Σ_{j≠k} a_j x^j over the users
      const Eigen::MatrixXd rest = a * x_users - a.col(k) * xk;
      const Eigen::MatrixXd k_rest = ka * x_users - ka.col(k) * xk;
      const Eigen::MatrixXd ke = k_users - k_rest;  // K·E
      Eigen::MatrixXd m(r, r);
      for (Eigen::Index j = 0; j < r; ++j) m.row(j) = ke.row(users[static_cast<std::size_t>(j)]);
      m.noalias() -= rest.transpose() * ke;
      m = 0.5 * (m + m.transpose()).eval();

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
      if (eig.info() != Eigen::Success) throw NumericalError("kksvd: eigensolver failed");
      const double lambda = eig.eigenvalues()(r - 1);
      if (!(lambda >= kDeadEigenvalue)) {
        dead = true;
        for (Eigen::Index i : users) x(k, i) = 0.0;
      } else {
        Eigen::VectorXd v = eig.eigenvectors().col(r - 1);
        if (v(sign_anchor(v)) < 0.0) v = -v;
        double sigma = std::sqrt(lambda);

        Eigen::VectorXd atom = -(rest * v);
        for (Eigen::Index j = 0; j < r; ++j) atom(users[static_cast<std::size_t>(j)]) += v(j);
        atom /= sigma;
        Eigen::VectorXd k_atom = ke * v / sigma;
        // σ₁ is only as accurate as the eigensolver; renormalize so the atom
        // stays exactly unit-norm while a_k x^k is unchanged
        const double norm2 = atom.dot(k_atom);
        if (norm2 > 0.0) {
          const double s = std::sqrt(norm2);
          atom /= s;
          k_atom /= s;
          sigma *= s;
        }
        a.col(k) = atom;
        for (Eigen::Index j = 0; j < r; ++j) x(k, users[static_cast<std::size_t>(j)]) = sigma * v(j);
        refresh_atom(ka, g, a, k, k_atom);
      }
    }

    if (dead) {
      // Worst-represented sample under the current A and X.
      const Eigen::MatrixXd gx = g * x;
      Eigen::Index worst = -1;
      double worst_err = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (used_as_replacement[static_cast<std::size_t>(i)] || !(gram(i, i) > 0.0)) continue;
        const double e = gram(i, i) - 2.0 * ka.row(i).dot(x.col(i)) + x.col(i).dot(gx.col(i));
        if (e > worst_err) {
          worst_err = e;
          worst = i;
        }
      }
      if (worst >= 0) {
        used_as_replacement[static_cast<std::size_t>(worst)] = 1;
        const double scale = 1.0 / std::sqrt(gram(worst, worst));
        a.col(k).setZero();
        a(worst, k) = scale;
        x.row(k).setZero();
        refresh_atom(ka, g, a, k, gram.col(worst) * scale);
        ++res.stats.replaced_atoms;
      }
    }
  }

  const Eigen::VectorXd errors = sample_errors(gram, a, x);
  res.stats.updated_error = errors.sum();
  res.stats.max_norm_deviation = (atom_norms2(gram, a).array() - 1.0).abs().maxCoeff();
  res.stats.update_ms = ms_since(t0);
  return res;
}

std::pair<KernelDictionary, TrainReport> train(const Eigen::MatrixXd& samples, const TrainParams& params,
                                               TissueClass tissue, const FeatureScaler& scaler) {
  const auto start = Clock::now();
  if (samples.cols() == 0 || samples.rows() == 0) throw InvalidArgument("train: empty training set");
  if (params.atoms == 0) throw InvalidArgument("train: at least one atom required");
  if (params.sparsity < 1 || params.sparsity > params.atoms) {
    throw InvalidArgument("train: sparsity must lie in [1, atoms]");
  }
  params.kernel.validate();
  if (scaler.dim() != 0 && scaler.dim() != static_cast<std::size_t>(samples.rows())) {
    throw DimensionMismatch("train: scaler dimension differs from the samples");
  }

  const std::size_t n = static_cast<std::size_t>(samples.cols());
  TrainReport report;
  report.atoms = params.atoms;
  report.sparsity = params.sparsity;
  report.samples = n;
  if (params.atoms > n) {
    report.warnings.push_back("more atoms (" + std::to_string(params.atoms) + ") than training samples (" +
                              std::to_string(n) + "); some initial atoms repeat");
  }

  auto t0 = Clock::now();
  const Eigen::MatrixXd k = gram(params.kernel, samples, params.block_size, params.threads);
  report.gram_ms = ms_since(t0);

  Eigen::MatrixXd a = init_dictionary(n, params.atoms, k, params.seed);
  report.initial_error = code_training_set(k, a, params.sparsity, params.threads).total_error;

  double previous = report.initial_error;
  for (std::size_t it = 0; it < params.max_iters; ++it) {
    IterationResult step = kksvd_iteration(k, a, params.sparsity, params.threads);
    a = std::move(step.coefficients);
    report.iterations.push_back(step.stats);
    const double current = step.stats.updated_error;
    if (!(previous > 0.0) || (previous - current) / previous < params.tol) {
      report.converged = true;
      break;
    }
    previous = current;
  }

  KernelDictionary dict;
  dict.tissue = tissue;
  dict.kernel = params.kernel;
  dict.scaler = scaler.dim() != 0 ? scaler : FeatureScaler::identity(static_cast<std::size_t>(samples.rows()));
  dict.sparsity = params.sparsity;
  dict.samples = samples;
  dict.coefficients = std::move(a);
  report.total_ms = ms_since(start);
  return {std::move(dict), std::move(report)};
}

void save_model(const std::filesystem::path& path, const KernelDictionary& dict) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (dict.dim() > kMax || dict.sample_count() > kMax || dict.atom_count() > kMax || dict.sparsity > kMax) {
    throw InvalidArgument("save_model: dimensions exceed the format's 32-bit fields");
  }
  if (dict.scaler.dim() != dict.dim() || static_cast<std::size_t>(dict.coefficients.rows()) != dict.sample_count()) {
    throw InvalidArgument("save_model: inconsistent dictionary shapes");
  }
  if (dict.tissue == TissueClass::unlabeled) throw InvalidArgument("save_model: dictionary has no tissue class");
  io::ByteWriter out;
  out.put_bytes("KDL1");
  out.put_u8(kModelVersion);
  out.put_u8(static_cast<std::uint8_t>(dict.tissue));
  out.put_u8(static_cast<std::uint8_t>(dict.kernel.family));
  out.put_f64(dict.kernel.gamma);
  out.put_u32(static_cast<std::uint32_t>(dict.dim()));
  out.put_u32(static_cast<std::uint32_t>(dict.sample_count()));
  out.put_u32(static_cast<std::uint32_t>(dict.atom_count()));
  out.put_u32(static_cast<std::uint32_t>(dict.sparsity));
  out.put_f64s(std::span(dict.scaler.means.data(), dict.dim()));
  out.put_f64s(std::span(dict.scaler.stds.data(), dict.dim()));
  out.put_f64s(std::span(dict.samples.data(), static_cast<std::size_t>(dict.samples.size())));
  out.put_f64s(std::span(dict.coefficients.data(), static_cast<std::size_t>(dict.coefficients.size())));
  io::write_file_atomic(path, out.bytes());
}

KernelDictionary load_model(const std::filesystem::path& path) {
  const auto data = io::read_file(path);
  const std::string what = "KDL1 '" + path.string() + "'";
  io::ByteReader in(data, what);
  if (in.get_bytes(4) != "KDL1") throw FormatError(what + ": bad magic");
  const auto version = in.get_u8();
  if (version != kModelVersion) {
    throw FormatError(what + ": unsupported model version " + std::to_string(version) + " (expected 1)");
  }
  KernelDictionary dict;
  const auto tissue = in.get_u8();
  if (tissue > 1) throw FormatError(what + ": invalid class byte " + std::to_string(tissue));
  dict.tissue = static_cast<TissueClass>(tissue);
  const auto family = in.get_u8();
  if (family > 1) throw FormatError(what + ": invalid kernel byte " + std::to_string(family));
  dict.kernel.family = static_cast<KernelFamily>(family);
  dict.kernel.gamma = in.get_f64();
  const std::size_t dim = in.get_u32();
  const std::size_t n = in.get_u32();
  const std::size_t atoms = in.get_u32();
  dict.sparsity = in.get_u32();
  const std::size_t expected = 8 * (2 * dim + dim * n + n * atoms);
  if (in.remaining() != expected) {
    throw FormatError(what + ": payload has " + std::to_string(in.remaining()) + " bytes, expected " +
                      std::to_string(expected) + " (truncated or corrupt)");
  }
  try {
    dict.kernel.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(what + ": " + e.what());
  }
  if (dict.sparsity < 1 || dict.sparsity > atoms) throw FormatError(what + ": sparsity outside [1, atoms]");
  dict.scaler.means.resize(static_cast<Eigen::Index>(dim));
  dict.scaler.stds.resize(static_cast<Eigen::Index>(dim));
  in.get_f64s(std::span(dict.scaler.means.data(), dim));
  in.get_f64s(std::span(dict.scaler.stds.data(), dim));
  dict.samples.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
  in.get_f64s(std::span(dict.samples.data(), dim * n));
  dict.coefficients.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(atoms));
  in.get_f64s(std::span(dict.coefficients.data(), n * atoms));
  in.expect_end();
  return dict;
}

}  // namespace kdlseg
