#include "mlmcgrad/runner.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace mlmc::runner {

namespace fs = std::filesystem;

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

}  // namespace

RunSummary run_config(const config::ExperimentConfig& config,
                      const fs::path& output_root) {
  auto problem = config::build_problem(config.problem);
  fs::path dir = output_root.empty() ? fs::path(config.output_dir)
                                     : output_root / config.output_dir;
  fs::create_directories(dir);

  RunSummary summary;
  for (const auto& method_spec : config.methods) {
    for (std::uint64_t seed : config.seeds) {
      // step-size grid: best final gap wins
      sim::RunRecord best;
      double best_eta = 0.0;
      bool have = false;
      for (double eta : config.eta_grid) {
        auto method = config::build_method(method_spec);
        sim::LoopOptions opt;
        opt.iterations = config.T;
        opt.step_size = eta;
        opt.seed = seed;
        opt.divergence_factor = config.divergence_factor;
        opt.parallel_workers = config.parallel_workers;
        // grids intentionally probe beyond 1/(2L); only warn for a fixed eta
        opt.warn_step_size = config.eta_grid.size() == 1;
        sim::RunRecord record = sim::run_loop(*problem, *method, opt);
        double gap = record.rows.back().gap;
        bool better = !have || (!record.diverged &&
                                (best.diverged || gap < best.rows.back().gap));
        if (better) {
          best = std::move(record);
          best_eta = eta;
          have = true;
        }
      }

      RunOutput out;
      out.method = method_spec.name;
      out.seed = seed;
      out.eta = best_eta;
      out.final_gap = best.rows.back().gap;
      out.final_grad_norm_sq = best.rows.back().grad_norm_sq;
      out.total_bits = best.rows.back().cum_bits;
      out.diverged = best.diverged;
      out.csv_path = dir / (config.name + "_" + method_spec.name + "_" +
                            std::to_string(seed) + ".csv");
      write_atomic(out.csv_path, sim::to_csv(best));
      summary.any_diverged = summary.any_diverged || out.diverged;
      summary.outputs.push_back(std::move(out));
    }
  }

  nlohmann::json j;
  j["schema_version"] = 1;
  j["config_name"] = config.name;
  j["runs"] = nlohmann::json::array();
  for (const auto& out : summary.outputs) {
    j["runs"].push_back({{"method", out.method},
                         {"seed", out.seed},
                         {"eta", out.eta},
                         {"final_gap", out.final_gap},
                         {"final_grad_norm_sq", out.final_grad_norm_sq},
                         {"total_bits", out.total_bits},
                         {"diverged", out.diverged},
                         {"csv", out.csv_path.filename().string()}});
  }
  summary.summary_path = dir / (config.name + "_summary.json");
  write_atomic(summary.summary_path, j.dump(2) + "\n");
  return summary;
}

std::string report_directory(const fs::path& dir) {
  struct Entry {
    std::string name;
    std::size_t rows = 0;
    std::uint64_t total_bits = 0;
    double final_gap = 0.0;
  };
  std::vector<Entry> entries;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.path().extension() != ".csv") continue;
    std::ifstream in(item.path());
    std::string line;
    std::getline(in, line);  // header
    Entry e;
    e.name = item.path().stem().string();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++e.rows;
      std::stringstream ss(line);
      std::string field;
      std::getline(ss, field, ',');  // t
      std::getline(ss, field, ',');
      e.final_gap = std::stod(field);
      std::getline(ss, field, ',');  // grad_norm_sq
      std::getline(ss, field, ',');
      e.total_bits = std::stoull(field);
    }
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.name < b.name; });
  std::ostringstream out;
  out << std::left << std::setw(44) << "run" << std::right << std::setw(8)
      << "rows" << std::setw(16) << "total_bits" << std::setw(16) << "final_gap"
      << '\n';
  for (const auto& e : entries) {
    out << std::left << std::setw(44) << e.name << std::right << std::setw(8)
        << e.rows << std::setw(16) << e.total_bits << std::setw(16)
        << std::setprecision(6) << std::scientific << e.final_gap << '\n';
  }
  if (entries.empty()) out << "(no CSV files found)\n";
  return out.str();
}

}  // namespace mlmc::runner
