#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mlmcgrad/core.hpp"

// Synthetic optimization problems with controllable smoothness, gradient
// noise, cross-worker heterogeneity, and sorted-entry decay, plus the raw
// exponential-decay gradient oracle used by the variance predictions.

namespace mlmc::problems {

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t workers() const = 0;
  virtual double smoothness() const = 0;
  virtual double objective(const Vector& x) const = 0;
  virtual double optimal_value() const = 0;
  virtual Vector full_gradient(const Vector& x) const = 0;
  virtual Vector worker_gradient(const Vector& x, std::size_t worker) const = 0;
  // Unbiased: mean over noise equals worker_gradient; E||noise||^2 = sigma^2.
  virtual Vector stochastic_gradient(const Vector& x, std::size_t worker,
                                     Rng& rng) const = 0;
  virtual Vector x_init() const = 0;
};

struct QuadraticOptions {
  double sigma = 0.0;          // gradient noise level
  bool strict_noise = false;   // project noise onto the sigma-ball
  double cond = 10.0;          // ratio of largest to smallest eigenvalue
  bool identity_hessian = false;
  double x0_radius = 1.0;      // ||x_init - x*||
  double x0_decay_rate = 0.0;  // >0: init offset has exp-decaying profile
  bool x0_zeros = false;       // start at the origin instead
};

// f_i(x) = 1/2 (x - b_i)^T A (x - b_i) with a shared diagonal PSD A whose
// largest eigenvalue is exactly the target smoothness. Heterogeneity is
// induced by centering the per-worker targets around their mean and scaling
// so that (1/M) sum ||grad f_i(x) - grad f(x)||^2 = xi^2 at every x.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(std::size_t dim, std::size_t workers, double smoothness,
                   double heterogeneity, std::uint64_t seed,
                   QuadraticOptions options);

  // Direct construction from explicit targets (shared identity-scaled A).
  QuadraticProblem(Vector eigenvalues, std::vector<Vector> targets,
                   Vector x_start, double sigma, bool strict_noise);

  std::size_t dim() const override { return eigenvalues_.size(); }
  std::size_t workers() const override { return targets_.size(); }
  double smoothness() const override;
  double objective(const Vector& x) const override;
  double optimal_value() const override;
  Vector full_gradient(const Vector& x) const override;
  Vector worker_gradient(const Vector& x, std::size_t worker) const override;
  Vector stochastic_gradient(const Vector& x, std::size_t worker,
                             Rng& rng) const override;
  Vector x_init() const override { return x_init_; }

  const Vector& optimum() const { return x_star_; }
  double heterogeneity_at(const Vector& x) const;
  double sigma() const { return sigma_; }

 private:
  Vector eigenvalues_;
  std::vector<Vector> targets_;
  Vector x_star_;  // mean target (A shared across workers)
  Vector x_init_;
  double sigma_ = 0.0;
  bool strict_noise_ = false;
};

QuadraticProblem make_quadratic(std::size_t dim, std::size_t workers,
                                double smoothness, double heterogeneity,
                                std::uint64_t seed,
                                QuadraticOptions options = {});

// Two workers whose large-magnitude gradient components conflict in sign, so
// direct top-1 compression cancels them and stalls while the small aligned
// component is never transmitted. x_init = 0; the stall gap is gamma^2 / 2.
QuadraticProblem make_sign_conflict(double beta, double gamma,
                                    double sigma = 0.0);

// Binary logistic regression on synthetic per-worker data; smoothness is the
// standard 0.25 * max row norm^2 bound. Secondary convex testbed.
class LogisticProblem final : public Problem {
 public:
  LogisticProblem(std::size_t dim, std::size_t workers,
                  std::size_t samples_per_worker, std::uint64_t seed,
                  double sigma = 0.0);

  std::size_t dim() const override { return dim_; }
  std::size_t workers() const override { return data_.size(); }
  double smoothness() const override { return smoothness_; }
  double objective(const Vector& x) const override;
  double optimal_value() const override { return optimal_value_; }
  Vector full_gradient(const Vector& x) const override;
  Vector worker_gradient(const Vector& x, std::size_t worker) const override;
  Vector stochastic_gradient(const Vector& x, std::size_t worker,
                             Rng& rng) const override;
  Vector x_init() const override { return Vector(dim_, 0.0); }

 private:
  struct Sample {
    Vector features;
    double label;  // +1 / -1
  };
  std::size_t dim_;
  std::vector<std::vector<Sample>> data_;
  double smoothness_ = 0.0;
  double optimal_value_ = 0.0;
  double sigma_ = 0.0;
};

// Gradient oracle whose sorted magnitudes follow |v(j)| = base * e^{-(r/2) j}
// exactly, with random signs and positions.
struct ExpDecayOracle {
  double rate;
  std::size_t dim;
  double base = 1.0;

  Vector sample(Rng& rng) const;
  // ||v||^2 = base^2 (1 - e^{-r d}) / (1 - e^{-r})
  double norm_sq_closed_form() const;
};

}  // namespace mlmc::problems
