#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "mfcs/sim.hpp"

namespace mfcs {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void standardize(Vector& y) {
  const double mean = y.mean();
  y.array() -= mean;
  const double sd = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
  if (!(sd > 0.0)) throw NumericalError("pool labels are constant; cannot standardize");
  y /= sd;
}

// Visits every k-subset of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
  if (k == 0 || k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t root_seed, std::string_view name) {
  return std::mt19937_64(splitmix64(splitmix64(root_seed) ^ fnv1a(name)));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return n(rng);
}

Pool make_combinatorial_pool(const CombinatorialPoolSpec& spec) {
  if (spec.length < 4 || spec.length > 14) {
    throw ParameterError(fmt::format("make_combinatorial_pool: L = {} outside [4, 14]",
                                     spec.length));
  }
  if (spec.interaction_order < 1 || spec.interaction_order > spec.length) {
    throw ParameterError("make_combinatorial_pool: interaction order outside [1, L]");
  }
  if (spec.noise_scale < 0.0) throw ParameterError("make_combinatorial_pool: negative noise");
  const auto size = Eigen::Index{1} << spec.length;
  const auto L = static_cast<Eigen::Index>(spec.length);

  Pool pool;
  pool.features.resize(size, L);
  for (Eigen::Index r = 0; r < size; ++r) {
    for (Eigen::Index j = 0; j < L; ++j) pool.features(r, j) = ((r >> j) & 1) != 0 ? 1.0 : -1.0;
  }

  std::mt19937_64 rng(spec.seed);
  pool.true_label = Vector::Zero(size);
  double scale = 1.0;
  for (std::size_t k = 1; k <= spec.interaction_order; ++k) {
    for_each_subset(spec.length, k, [&](const std::vector<std::size_t>& subset) {
      const double coef = scale * standard_normal(rng);
      for (Eigen::Index r = 0; r < size; ++r) {
        double prod = 1.0;
        for (std::size_t j : subset) prod *= pool.features(r, static_cast<Eigen::Index>(j));
        pool.true_label[r] += coef * prod;
      }
    });
    scale *= spec.interaction_scale;
  }
  standardize(pool.true_label);
  pool.noise_sd = Vector::Constant(size, spec.noise_scale);
  return pool;
}

Pool make_regression_pool(const RegressionPoolSpec& spec) {
  if (spec.size < 2 || spec.dimension < 1) {
    throw ParameterError("make_regression_pool: need at least two candidates and one feature");
  }
  if (spec.noise_scale < 0.0) throw ParameterError("make_regression_pool: negative noise");
  if (spec.tail_dof < 0.0) throw ParameterError("make_regression_pool: negative tail_dof");
  const auto n = static_cast<Eigen::Index>(spec.size);
  const auto p = static_cast<Eigen::Index>(spec.dimension);
  std::mt19937_64 rng(spec.seed);

  std::student_t_distribution<double> student(spec.tail_dof > 0.0 ? spec.tail_dof : 1.0);
  auto draw = [&] { return spec.tail_dof > 0.0 ? student(rng) : standard_normal(rng); };

  Pool pool;
  pool.features.resize(n, p);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index k = 0; k < p; ++k) {
      pool.features(r, k) = spec.feature_scale / static_cast<double>(1 + k) * draw();
    }
  }
  Vector a(p), c(p);
  for (Eigen::Index k = 0; k < p; ++k) a[k] = standard_normal(rng);
  for (Eigen::Index k = 0; k < p; ++k) c[k] = standard_normal(rng);
  pool.true_label.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto x = pool.features.row(r);
    double curved = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) curved += c[k] * std::sin(2.0 * x[k]);
    pool.true_label[r] = x.dot(a) + spec.nonlinearity * curved;
  }
  standardize(pool.true_label);
  pool.noise_sd = Vector::Constant(n, spec.noise_scale);
  return pool;
}

Vector first_principal_direction(const Matrix& features, double tolerance,
                                 std::size_t max_iterations) {
  if (features.rows() < 2) throw ShapeError("first_principal_direction: need two rows");
  const Matrix centered = features.rowwise() - features.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(features.rows());
  const Eigen::Index p = cov.rows();

  Vector v(p);
  for (Eigen::Index k = 0; k < p; ++k) v[k] = 1.0 + 1.0 / static_cast<double>(k + 2);
  v.normalize();
  auto fix_sign = [](Vector& u) {
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u[arg] < 0.0) u = -u;
  };
  fix_sign(v);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Vector w = cov * v;
    const double norm = w.norm();
    if (!(norm > 0.0)) throw NumericalError("first_principal_direction: zero covariance");
    w /= norm;
    fix_sign(w);
    const double change = (w - v).norm();
    v = std::move(w);
    if (change < tolerance) return v;
  }
  throw NumericalError(fmt::format(
      "first_principal_direction: power iteration did not converge in {} iterations",
      max_iterations));
}

std::vector<std::size_t> biased_iid_init(const Pool& pool, std::size_t n, double gamma,
                                         std::mt19937_64& rng) {
  if (n > pool.size()) {
    throw ParameterError(fmt::format("biased_iid_init: {} points requested from a pool of {}", n,
                                     pool.size()));
  }
  const Vector dir = first_principal_direction(pool.features);
  const Vector proj = pool.features * dir;
  const double lo = proj.minCoeff();
  const double hi = proj.maxCoeff();
  std::vector<double> normed(pool.size(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < normed.size(); ++i) {
      normed[i] = (proj[static_cast<Eigen::Index>(i)] - lo) / (hi - lo);
    }
  }
  // exp(gamma * (v - 1)) keeps the largest weight at 1 for any gamma >= 0.
  std::vector<double> weight(pool.size());
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] = std::exp(gamma * (normed[i] - (gamma >= 0.0 ? 1.0 : 0.0)));
  }

  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  std::vector<bool> taken(pool.size(), false);
  for (std::size_t draw = 0; draw < n; ++draw) {
    CompensatedSum total;
    for (std::size_t i = 0; i < weight.size(); ++i) {
      if (!taken[i]) total.add(weight[i]);
    }
    const double u = uniform01(rng);
    std::size_t pick = pool.size();
    if (total.value() > 0.0) {
      const double target = u * total.value();
      double cum = 0.0;
      for (std::size_t i = 0; i < weight.size(); ++i) {
        if (taken[i] || weight[i] <= 0.0) continue;
        pick = i;
        cum += weight[i];
        if (target < cum) break;
      }
    } else {
      // Every remaining weight underflowed: take the highest-scoring point.
      double best = -1.0;
      for (std::size_t i = 0; i < weight.size(); ++i) {
        if (!taken[i] && normed[i] > best) {
          best = normed[i];
          pick = i;
        }
      }
    }
    taken[pick] = true;
    chosen.push_back(pick);
  }
  return chosen;
}

}  // namespace mfcs
