// Experiment driver: cs4ml <experiment> --config <path> [--seed S] [--out DIR] [--preset desk|paper]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cs4ml/cs4ml.hpp"
#include "cs4ml/harness/config.hpp"
#include "cs4ml/harness/report.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

void summarize(const cs4ml::ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::cout << "wrote " << (out / "stats.csv").string() << ", " << (out / "trace.json").string();
  if (cfg.kind != cs4ml::ExperimentKind::props) std::cout << ", " << (out / "plot.svg").string();
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Christoffel sampling experiments"};
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  std::string preset;
  std::uint64_t seed = 0;
  app.add_option("experiment", experiment, "polyreg | scaling | fourier | cas | props")->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_dir, "output directory (default: config 'out' or out/<experiment>)");
  app.add_option("--preset", preset, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  cs4ml::ExperimentConfig cfg;
  std::filesystem::path out;
  try {
    const auto kind = cs4ml::parse_experiment_kind(experiment);
    const auto j = cs4ml::parse_json_file(config_path);
    cfg = cs4ml::load_config(j, kind, preset);
    if (*seed_opt) cfg.seed = seed;
    if (!out_dir.empty())
      out = out_dir;
    else if (j.contains("out") && j.at("out").is_string())
      out = j.at("out").get<std::string>();
    else
      out = std::filesystem::path("out") / experiment;
    std::filesystem::create_directories(out);
  } catch (const cs4ml::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (cfg.kind) {
      case cs4ml::ExperimentKind::polyreg: {
        const auto r = cs4ml::run_polyreg(cfg);
        cs4ml::write_polyreg(out, cfg, r);
        for (const auto& row : r.rows)
          std::printf("n=%-4ld m=%-5ld %-16s err_gmean=%.3e cond_median=%.3e\n", static_cast<long>(row.n),
                      static_cast<long>(row.m), row.strategy.c_str(), row.err_gmean, row.cond_median);
        break;
      }
      case cs4ml::ExperimentKind::scaling: {
        const auto r = cs4ml::run_scaling(cfg);
        cs4ml::write_scaling(out, cfg, r);
        for (const auto& row : r.rows)
          std::printf("n=%-4ld %-16s m_mean=%.1f m_median=%.1f censored=%d\n", static_cast<long>(row.n),
                      row.strategy.c_str(), row.m_mean, row.m_median, row.censored);
        break;
      }
      case cs4ml::ExperimentKind::fourier: {
        const auto r = cs4ml::run_fourier(cfg);
        cs4ml::write_fourier(out, cfg, r);
        std::printf("C_MCS=%.4g C_CS=%.4g\n", r.empirical_constants.c_mcs, r.empirical_constants.c_cs);
        for (const auto& row : r.rows)
          std::printf("m=%-5ld %-4s psnr_median=%.2f dB\n", static_cast<long>(row.m), row.strategy.c_str(), row.psnr_median);
        break;
      }
      case cs4ml::ExperimentKind::cas: {
        const auto r = cs4ml::run_cas(cfg);
        cs4ml::write_cas(out, cfg, r);
        for (const auto& row : r.rows)
          std::printf("iter=%ld m=%-5ld err_median=%.3e rank_mean=%.1f\n", static_cast<long>(row.iteration),
                      static_cast<long>(row.m), row.err_median, row.rank_mean);
        break;
      }
      case cs4ml::ExperimentKind::props: {
        const auto r = cs4ml::run_props(cfg);
        cs4ml::write_props(out, cfg, r);
        for (const auto& row : r.rows)
          std::printf("n=%-4ld m=%-6ld alpha_hat=%.4f beta_hat=%.4f kappa=%.6f bracket=%.2f\n", static_cast<long>(row.n),
                      static_cast<long>(row.m), row.alpha_hat, row.beta_hat, row.kappa_frame, row.bracket_fraction);
        break;
      }
    }
  } catch (const cs4ml::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const cs4ml::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  summarize(cfg, out);
  std::fprintf(stderr, "elapsed %.1f s\n", secs);
  return 0;
}
