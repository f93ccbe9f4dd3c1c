#include "mlmcgrad/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mlmc::problems {

namespace {

Vector add_noise(Vector grad, double sigma, bool strict, Rng& rng) {
  if (sigma <= 0.0) return grad;
  std::size_t d = grad.size();
  Vector noise(d);
  double per_coord = sigma / std::sqrt(static_cast<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    noise[j] = per_coord * rng.normal();
  }
  if (strict) {
    double n = l2_norm(noise);
    if (n > sigma) {
      double s = sigma / n;
      for (double& x : noise) x *= s;
    }
  }
  for (std::size_t j = 0; j < d; ++j) grad[j] += noise[j];
  return grad;
}

}  // namespace

QuadraticProblem::QuadraticProblem(Vector eigenvalues,
                                   std::vector<Vector> targets, Vector x_start,
                                   double sigma, bool strict_noise)
    : eigenvalues_(std::move(eigenvalues)),
      targets_(std::move(targets)),
      x_init_(std::move(x_start)),
      sigma_(sigma),
      strict_noise_(strict_noise) {
  if (targets_.empty()) throw std::invalid_argument("quadratic: no workers");
  std::size_t d = eigenvalues_.size();
  x_star_.assign(d, 0.0);
  for (const Vector& b : targets_) {
    if (b.size() != d) throw std::invalid_argument("quadratic: target dim mismatch");
    for (std::size_t j = 0; j < d; ++j) x_star_[j] += b[j];
  }
  for (double& x : x_star_) x /= static_cast<double>(targets_.size());
}

QuadraticProblem::QuadraticProblem(std::size_t dim, std::size_t workers,
                                   double smoothness, double heterogeneity,
                                   std::uint64_t seed,
                                   QuadraticOptions options) {
  if (dim < 1 || workers < 1) {
    throw std::invalid_argument("quadratic: dim and workers must be >= 1");
  }
  if (!(smoothness > 0.0)) {
    throw std::invalid_argument("quadratic: smoothness must be > 0");
  }
  if (heterogeneity < 0.0) {
    throw std::invalid_argument("quadratic: heterogeneity must be >= 0");
  }
  sigma_ = options.sigma;
  strict_noise_ = options.strict_noise;

  eigenvalues_.resize(dim);
  if (options.identity_hessian || dim == 1) {
    eigenvalues_.assign(dim, smoothness);
  } else {
    // log-spaced spectrum from L/cond to L; largest eigenvalue exactly L
    double lo = smoothness / options.cond;
    for (std::size_t j = 0; j < dim; ++j) {
      double f = static_cast<double>(j) / static_cast<double>(dim - 1);
      eigenvalues_[j] = lo * std::pow(options.cond, f);
    }
    eigenvalues_[dim - 1] = smoothness;
  }

  Rng rng(seed, 0, 0, Stream::kProblem);
  Vector center(dim);
  for (double& x : center) x = rng.normal();

  targets_.assign(workers, center);
  if (workers > 1 && heterogeneity > 0.0) {
    std::vector<Vector> offsets(workers, Vector(dim, 0.0));
    Vector mean(dim, 0.0);
    for (Vector& o : offsets) {
      for (std::size_t j = 0; j < dim; ++j) {
        o[j] = rng.normal();
        mean[j] += o[j];
      }
    }
    for (double& x : mean) x /= static_cast<double>(workers);
    double dispersion = 0.0;
    for (Vector& o : offsets) {
      for (std::size_t j = 0; j < dim; ++j) {
        o[j] -= mean[j];
        double g = eigenvalues_[j] * o[j];
        dispersion += g * g;
      }
    }
    dispersion /= static_cast<double>(workers);
    double scaling = heterogeneity / std::sqrt(dispersion);
    for (std::size_t i = 0; i < workers; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        targets_[i][j] = center[j] + scaling * offsets[i][j];
      }
    }
  }

  x_star_ = center;  // offsets are centered, so the mean target is preserved

  if (options.x0_zeros) {
    x_init_.assign(dim, 0.0);
  } else {
    Vector offset(dim);
    if (options.x0_decay_rate > 0.0) {
      for (std::size_t j = 0; j < dim; ++j) {
        offset[j] = std::exp(-0.5 * options.x0_decay_rate *
                             static_cast<double>(j));
      }
    } else {
      for (double& x : offset) x = rng.normal();
    }
    double n = l2_norm(offset);
    x_init_.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x_init_[j] = x_star_[j] + options.x0_radius * offset[j] / n;
    }
  }
}

double QuadraticProblem::smoothness() const {
  return *std::max_element(eigenvalues_.begin(), eigenvalues_.end());
}

double QuadraticProblem::objective(const Vector& x) const {
  double acc = 0.0;
  for (const Vector& b : targets_) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      double e = x[j] - b[j];
      acc += 0.5 * eigenvalues_[j] * e * e;
    }
  }
  return acc / static_cast<double>(targets_.size());
}

double QuadraticProblem::optimal_value() const { return objective(x_star_); }

Vector QuadraticProblem::full_gradient(const Vector& x) const {
  Vector g(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    g[j] = eigenvalues_[j] * (x[j] - x_star_[j]);
  }
  return g;
}

Vector QuadraticProblem::worker_gradient(const Vector& x,
                                         std::size_t worker) const {
  const Vector& b = targets_.at(worker);
  Vector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    g[j] = eigenvalues_[j] * (x[j] - b[j]);
  }
  return g;
}

Vector QuadraticProblem::stochastic_gradient(const Vector& x,
                                             std::size_t worker,
                                             Rng& rng) const {
  return add_noise(worker_gradient(x, worker), sigma_, strict_noise_, rng);
}

double QuadraticProblem::heterogeneity_at(const Vector& x) const {
  Vector g = full_gradient(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    Vector gi = worker_gradient(x, i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      double e = gi[j] - g[j];
      acc += e * e;
    }
  }
  return acc / static_cast<double>(targets_.size());
}

QuadraticProblem make_quadratic(std::size_t dim, std::size_t workers,
                                double smoothness, double heterogeneity,
                                std::uint64_t seed, QuadraticOptions options) {
  return QuadraticProblem(dim, workers, smoothness, heterogeneity, seed,
                          options);
}

QuadraticProblem make_sign_conflict(double beta, double gamma, double sigma) {
  if (!(beta > gamma) || !(gamma > 0.0)) {
    throw std::invalid_argument("sign conflict requires beta > gamma > 0");
  }
  Vector eigenvalues{1.0, 1.0};
  std::vector<Vector> targets{{beta, gamma}, {-beta, gamma}};
  return QuadraticProblem(std::move(eigenvalues), std::move(targets),
                          Vector{0.0, 0.0}, sigma, false);
}

// ---------------------------------------------------------------------------

LogisticProblem::LogisticProblem(std::size_t dim, std::size_t workers,
                                 std::size_t samples_per_worker,
                                 std::uint64_t seed, double sigma)
    : dim_(dim), sigma_(sigma) {
  if (dim < 1 || workers < 1 || samples_per_worker < 1) {
    throw std::invalid_argument("logistic: sizes must be >= 1");
  }
  Rng rng(seed, 0, 1, Stream::kProblem);
  Vector truth(dim);
  for (double& x : truth) x = rng.normal();
  data_.resize(workers);
  double max_row_sq = 0.0;
  for (std::size_t i = 0; i < workers; ++i) {
    data_[i].resize(samples_per_worker);
    for (Sample& s : data_[i]) {
      s.features.resize(dim);
      for (double& x : s.features) x = rng.normal();
      max_row_sq = std::max(max_row_sq, norms(s.features).l2_squared);
      double margin = dot(s.features, truth);
      s.label = (rng.uniform() < 1.0 / (1.0 + std::exp(-margin))) ? 1.0 : -1.0;
    }
  }
  smoothness_ = 0.25 * max_row_sq;

  // optimum found once by plain gradient descent; cached for gap reporting
  Vector x(dim, 0.0);
  double eta = 1.0 / smoothness_;
  for (int it = 0; it < 5000; ++it) {
    Vector g = full_gradient(x);
    for (std::size_t j = 0; j < dim; ++j) x[j] -= eta * g[j];
  }
  optimal_value_ = objective(x);
}

double LogisticProblem::objective(const Vector& x) const {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& shard : data_) {
    for (const Sample& s : shard) {
      double margin = s.label * dot(s.features, x);
      acc += std::log1p(std::exp(-margin));
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

Vector LogisticProblem::full_gradient(const Vector& x) const {
  Vector g(dim_, 0.0);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    Vector gi = worker_gradient(x, i);
    for (std::size_t j = 0; j < dim_; ++j) g[j] += gi[j];
  }
  for (double& v : g) v /= static_cast<double>(data_.size());
  return g;
}

Vector LogisticProblem::worker_gradient(const Vector& x,
                                        std::size_t worker) const {
  const auto& shard = data_.at(worker);
  Vector g(dim_, 0.0);
  for (const Sample& s : shard) {
    double margin = s.label * dot(s.features, x);
    double coeff = -s.label / (1.0 + std::exp(margin));
    for (std::size_t j = 0; j < dim_; ++j) {
      g[j] += coeff * s.features[j];
    }
  }
  for (double& v : g) v /= static_cast<double>(shard.size());
  return g;
}

Vector LogisticProblem::stochastic_gradient(const Vector& x,
                                            std::size_t worker,
                                            Rng& rng) const {
  return add_noise(worker_gradient(x, worker), sigma_, false, rng);
}

// ---------------------------------------------------------------------------

Vector ExpDecayOracle::sample(Rng& rng) const {
  if (!(rate > 0.0) || dim < 1) {
    throw std::invalid_argument("exp-decay oracle requires rate > 0, dim >= 1");
  }
  Vector magnitudes(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    magnitudes[j] = base * std::exp(-0.5 * rate * static_cast<double>(j));
  }
  // random signs, random positions
  std::vector<std::size_t> perm(dim);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = dim; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform() *
                                             static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(perm[i - 1], perm[j]);
  }
  Vector out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    out[perm[j]] = sign * magnitudes[j];
  }
  return out;
}

double ExpDecayOracle::norm_sq_closed_form() const {
  double rd = rate * static_cast<double>(dim);
  return base * base * (1.0 - std::exp(-rd)) / (1.0 - std::exp(-rate));
}

}  // namespace mlmc::problems
