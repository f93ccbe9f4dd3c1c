#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "mlmcgrad/baselines.hpp"
#include "mlmcgrad/compressors.hpp"
#include "mlmcgrad/config.hpp"
#include "mlmcgrad/core.hpp"
#include "mlmcgrad/mlmc.hpp"
#include "mlmcgrad/problems.hpp"
#include "mlmcgrad/runner.hpp"
#include "mlmcgrad/simulator.hpp"
#include "mlmcgrad/verification.hpp"

namespace py = pybind11;
using namespace mlmc;

namespace {

py::dict estimate_to_dict(const MlmcEstimate& est) {
  py::dict d;
  d["estimate"] = est.estimate;
  d["level"] = est.sampled_level;
  d["prob"] = est.prob_used;
  d["bit_cost"] = est.message.bit_cost;
  return d;
}

py::list record_to_rows(const sim::RunRecord& record) {
  py::list rows;
  for (const auto& row : record.rows) {
    py::dict d;
    d["t"] = row.t;
    d["gap"] = row.gap;
    d["grad_norm_sq"] = row.grad_norm_sq;
    d["cum_bits"] = row.cum_bits;
    d["level_hist"] = row.level_hist;
    d["var_probe"] = row.var_probe;
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multilevel Monte Carlo gradient compression";

  py::class_<Rng>(m, "Rng")
      .def(py::init([](std::uint64_t seed, std::uint64_t worker,
                       std::uint64_t iteration) {
             return Rng(seed, worker, iteration, Stream::kLevel);
           }),
           py::arg("seed"), py::arg("worker") = 0, py::arg("iteration") = 0)
      .def("uniform", &Rng::uniform)
      .def("normal", &Rng::normal);

  m.def("dot", &dot);
  m.def("norms", [](const Vector& v) {
    Norms n = norms(v);
    return py::make_tuple(n.l1, n.l2_squared);
  });
  m.def("sample_categorical", [](Rng& rng, const std::vector<double>& probs) {
    return sample_categorical(rng, probs);
  });

  py::class_<MultilevelCompressor, std::shared_ptr<MultilevelCompressor>>(
      m, "MultilevelCompressor")
      .def("name", &MultilevelCompressor::name)
      .def("num_levels", &MultilevelCompressor::num_levels)
      .def("compress", &MultilevelCompressor::compress)
      .def("residual_dense",
           [](const MultilevelCompressor& c, const Vector& v, std::size_t l) {
             return densify(c.residual(v, l));
           })
      .def("residual_norms", &MultilevelCompressor::residual_norms)
      .def("residual_bits",
           [](const MultilevelCompressor& c, const Vector& v, std::size_t l) {
             return c.message_bits(c.residual(v, l), v.size());
           })
      .def("alpha_profile",
           [](const MultilevelCompressor& c, const Vector& v) {
             return alpha_profile(c, v);
           });

  m.def("make_compressor",
        [](const std::string& kind, std::size_t s, double clip,
           std::size_t levels,
           std::optional<double> scale) -> std::shared_ptr<MultilevelCompressor> {
          config::MethodSpec spec;
          spec.compressor = kind;
          spec.s = s;
          spec.clip = clip;
          spec.levels = levels;
          spec.scale = scale;
          return std::const_pointer_cast<MultilevelCompressor>(
              config::build_compressor(spec));
        },
        py::arg("kind"), py::arg("s") = 1, py::arg("clip") = 1.0,
        py::arg("levels") = 8, py::arg("scale") = std::nullopt);

  py::class_<LevelDistribution>(m, "LevelDistribution")
      .def(py::init([](std::vector<double> probs) {
        LevelDistribution d{std::move(probs)};
        d.validate();
        return d;
      }))
      .def_readonly("probs", &LevelDistribution::probs)
      .def("prob", &LevelDistribution::prob);

  m.def("fixed_point_distribution", &fixed_point_distribution);
  m.def("floating_point_distribution", &floating_point_distribution);
  m.def("adaptive_distribution",
        [](const MultilevelCompressor& c, const Vector& v) {
          return adaptive_distribution(c, v);
        });
  m.def("static_distribution",
        [](const MultilevelCompressor& c, std::size_t dim) {
          return static_distribution(c, dim);
        });

  m.def("estimate",
        [](const MultilevelCompressor& c, const Vector& v,
           const LevelDistribution& dist, Rng& rng) {
          return estimate_to_dict(estimate(c, v, dist, rng));
        });
  m.def("estimate_adaptive",
        [](const MultilevelCompressor& c, const Vector& v, Rng& rng) {
          return estimate_to_dict(estimate_adaptive(c, v, rng));
        });
  m.def("estimate_at_level",
        [](const MultilevelCompressor& c, const Vector& v,
           const LevelDistribution& dist, std::size_t level) {
          return estimate_to_dict(estimate_at_level(c, v, dist, level));
        });

  m.def("analytic_variance",
        [](const MultilevelCompressor& c, const Vector& v,
           const LevelDistribution& dist) {
          VarianceReport r = analytic_variance(c, v, dist);
          py::dict d;
          d["second_moment"] = r.analytic_second_moment;
          d["comp_variance"] = r.analytic_comp_variance;
          d["omega_hat"] = r.omega_hat;
          return d;
        });
  m.def("exp_decay_variance_prediction", &exp_decay_variance_prediction);

  m.def("rand_k", [](const Vector& v, std::size_t k, Rng& rng) {
    return baselines::rand_k(v, k, rng);
  });
  m.def("qsgd_quantize", [](const Vector& v, std::size_t levels, Rng& rng) {
    auto r = baselines::qsgd_quantize(v, levels, rng);
    return py::make_tuple(r.values, r.bit_cost);
  });

  m.def("run_experiment",
        [](const std::string& config_json, const std::string& output_root) {
          auto cfg = config::parse_config(config_json);
          auto summary = runner::run_config(cfg, output_root);
          py::list out;
          for (const auto& o : summary.outputs) {
            py::dict d;
            d["method"] = o.method;
            d["seed"] = o.seed;
            d["eta"] = o.eta;
            d["final_gap"] = o.final_gap;
            d["total_bits"] = o.total_bits;
            d["diverged"] = o.diverged;
            d["csv"] = o.csv_path.string();
            out.append(d);
          }
          return out;
        },
        py::arg("config_json"), py::arg("output_root"));

  m.def("run_mlmc_sgd",
        [](const std::string& problem_type, std::size_t d, std::size_t M,
           double sigma, std::uint64_t problem_seed,
           const std::string& compressor, std::size_t s,
           const std::string& distribution, std::size_t T, double eta,
           std::uint64_t seed) {
          config::ProblemSpec ps;
          ps.type = problem_type;
          ps.d = d;
          ps.M = M;
          ps.sigma = sigma;
          ps.seed = problem_seed;
          auto problem = config::build_problem(ps);
          config::MethodSpec ms;
          ms.compressor = compressor;
          ms.s = s;
          sim::LoopOptions opt;
          opt.iterations = T;
          opt.step_size = eta;
          opt.seed = seed;
          opt.warn_step_size = false;
          auto mode = distribution == "adaptive"
                          ? sim::DistributionMode::kAdaptive
                          : sim::DistributionMode::kStatic;
          return record_to_rows(sim::run_mlmc_sgd(
              *problem, config::build_compressor(ms), mode, opt));
        },
        py::arg("problem_type") = "quadratic", py::arg("d") = 16,
        py::arg("M") = 2, py::arg("sigma") = 0.0, py::arg("problem_seed") = 0,
        py::arg("compressor") = "topk", py::arg("s") = 1,
        py::arg("distribution") = "adaptive", py::arg("T") = 100,
        py::arg("eta") = 0.1, py::arg("seed") = 1);

  m.def("verify_suite", [](const std::string& name) {
    auto suite = verify::run_suite(name);
    py::list out;
    for (const auto& c : suite) {
      py::dict d;
      d["name"] = c.name;
      d["pass"] = c.pass;
      d["detail"] = c.detail;
      out.append(d);
    }
    return out;
  });
  m.def("verify_suite_names", &verify::suite_names);
}
