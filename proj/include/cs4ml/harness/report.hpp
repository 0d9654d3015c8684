#pragma once

// Output writers: stats.csv, per-experiment extras, trace.json and a small
// log-scale SVG plot.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "cs4ml/harness/experiments.hpp"

namespace cs4ml {

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

/// JSON has no inf/nan; they become null.
inline nlohmann::json jnum(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace detail

inline void write_stats_csv(const std::filesystem::path& path, const std::vector<StatsRow>& rows) {
  auto os = detail::open_out(path);
  os << "n,m,strategy,err_gmean,err_gstd,cond_mean,cond_std\n";
  for (const auto& r : rows)
    os << r.n << ',' << r.m << ',' << r.strategy << ',' << detail::fmt(r.err_gmean) << ',' << detail::fmt(r.err_gstd)
       << ',' << detail::fmt(r.cond_mean) << ',' << detail::fmt(r.cond_std) << '\n';
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Log-scale y (and optionally x) line plot with shaded bands.
inline void write_svg_plot(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                           const std::string& ylabel, const std::vector<Series>& series, bool logx = false) {
  const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      for (double v : {s.y[i], s.lo.empty() ? s.y[i] : s.lo[i], s.hi.empty() ? s.y[i] : s.hi[i]}) {
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        ymin = std::min(ymin, std::log10(v));
        ymax = std::max(ymax, std::log10(v));
      }
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double v) { return L + (tx(v) - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) {
    const double lv = std::log10(std::max(v, std::pow(10.0, ymin)));
    return H - B - (std::min(lv, ymax) - ymin) / (ymax - ymin) * (H - T - B);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  auto os = detail::open_out(path);
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); ++e) {
    const double y = py(std::pow(10.0, e));
    os << "<line x1=\"" << L - 4 << "\" y1=\"" << y << "\" x2=\"" << W - R << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n<text x=\"" << L - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-size=\"11\">1e" << e << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double x = L + (xv - xmin) / (xmax - xmin) * (W - L - R);
    os << "<text x=\"" << x << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << detail::fmt(std::round((logx ? std::pow(10.0, xv) : xv) * 100) / 100) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = colors[si % 6];
    if (!s.lo.empty() && !s.hi.empty() && !s.x.empty()) {
      os << "<polygon fill=\"" << col << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.hi[i]) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) os << px(s.x[i]) << ',' << py(s.lo[i]) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"/>\n";
    const double ly = T + 20 + 18 * static_cast<double>(si);
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 36 << "\" y2=\"" << ly << "\" stroke=\""
       << col << "\" stroke-width=\"2\"/>\n<text x=\"" << W - R + 42 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
       << s.name << "</text>\n";
  }
  os << "</svg>\n";
}

inline nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = to_string(c.kind);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  std::vector<std::string> st;
  for (auto s : c.strategies) st.push_back(to_string(s));
  j["strategies"] = st;
  j["noise"] = c.noise;
  switch (c.kind) {
    case ExperimentKind::polyreg:
    case ExperimentKind::scaling:
    case ExperimentKind::props:
      j["dim"] = c.dim;
      j["family"] = to_string(c.family);
      j["orders"] = c.orders;
      j["target"] = c.target;
      j["grid_points"] = c.grid_points;
      j["tol"] = c.tol;
      j["m_max"] = c.m_max;
      j["eps"] = c.eps;
      j["delta"] = c.delta;
      break;
    case ExperimentKind::fourier:
      j["side"] = c.side;
      j["image_dim"] = c.image_dim;
      j["latent"] = c.latent;
      j["partition"] = c.partition;
      j["generator"] = c.generator;
      j["bandwidth"] = c.bandwidth;
      j["samples"] = c.samples;
      j["kt_iterations"] = c.kt_iterations;
      break;
    case ExperimentKind::cas:
      j["features"] = c.features;
      j["interior_points"] = c.interior_points;
      j["test_points"] = c.test_points;
      j["cas_iterations"] = c.cas_iterations;
      j["schedule_scale"] = c.schedule_scale;
      j["adapt_steps"] = c.adapt_steps;
      j["step_size"] = c.step_size;
      j["delta_tol"] = c.delta_tol;
      j["layer_slope"] = c.layer_slope;
      j["boundary_lambda"] = c.boundary_lambda;
      break;
  }
  return j;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  auto os = detail::open_out(p);
  os << j.dump(2) << '\n';
}

inline std::vector<Series> error_series(const std::vector<StatsRow>& rows) {
  std::map<std::string, Series> by;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!by.count(r.strategy)) {
      order.push_back(r.strategy);
      by[r.strategy].name = r.strategy;
    }
    auto& s = by[r.strategy];
    s.x.push_back(static_cast<double>(r.n));
    s.y.push_back(r.err_gmean);
    s.lo.push_back(r.err_gmean / r.err_gstd);
    s.hi.push_back(r.err_gmean * r.err_gstd);
  }
  std::vector<Series> out;
  for (const auto& k : order) out.push_back(by[k]);
  return out;
}

inline void write_polyreg(const std::filesystem::path& dir, const ExperimentConfig& cfg, const PolyregResult& r) {
  write_stats_csv(dir / "stats.csv", r.rows);
  nlohmann::json j;
  j["config"] = config_json(cfg);
  auto& recs = j["trials"] = nlohmann::json::array();
  for (const auto& t : r.records)
    recs.push_back({{"trial", t.trial}, {"n", t.n}, {"m", t.m}, {"strategy", t.strategy}, {"error", detail::jnum(t.error)},
                    {"cond", detail::jnum(t.cond)}, {"alpha_prime", detail::jnum(t.alpha_prime)},
                    {"beta_prime", detail::jnum(t.beta_prime)}, {"rank", t.rank}, {"failed", t.failed},
                    {"message", t.message}});
  auto& rows = j["summary"] = nlohmann::json::array();
  for (const auto& s : r.rows)
    rows.push_back({{"n", s.n}, {"m", s.m}, {"strategy", s.strategy}, {"err_gmean", detail::jnum(s.err_gmean)},
                    {"err_gstd", detail::jnum(s.err_gstd)}, {"err_median", detail::jnum(s.err_median)},
                    {"cond_mean", detail::jnum(s.cond_mean)}, {"cond_std", detail::jnum(s.cond_std)},
                    {"cond_median", detail::jnum(s.cond_median)}, {"ok_trials", s.ok_trials}});
  write_json(dir / "trace.json", j);
  write_svg_plot(dir / "plot.svg", "Relative Sobolev error", "n", "E(f*)", error_series(r.rows));
}

inline void write_scaling(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ScalingResult& r) {
  std::vector<StatsRow> rows;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : r.rows) rows.push_back({s.n, static_cast<Index>(std::llround(s.m_median)), s.strategy, nan, nan, nan, nan, nan, nan, 0});
  write_stats_csv(dir / "stats.csv", rows);
  {
    auto os = detail::open_out(dir / "scaling.csv");
    os << "n,strategy,m_mean,m_std,m_median,censored\n";
    for (const auto& s : r.rows)
      os << s.n << ',' << s.strategy << ',' << detail::fmt(s.m_mean) << ',' << detail::fmt(s.m_std) << ','
         << detail::fmt(s.m_median) << ',' << s.censored << '\n';
  }
  nlohmann::json j;
  j["config"] = config_json(cfg);
  auto& recs = j["trials"] = nlohmann::json::array();
  for (const auto& t : r.records)
    recs.push_back({{"trial", t.trial}, {"n", t.n}, {"strategy", t.strategy}, {"m", t.m}, {"censored", t.censored}});
  write_json(dir / "trace.json", j);
  std::map<std::string, Series> by;
  std::vector<std::string> order;
  for (const auto& s : r.rows) {
    if (!by.count(s.strategy)) {
      order.push_back(s.strategy);
      by[s.strategy].name = s.strategy;
    }
    auto& se = by[s.strategy];
    se.x.push_back(static_cast<double>(s.n));
    se.y.push_back(s.m_mean);
    se.lo.push_back(std::max(1.0, s.m_mean - s.m_std));
    se.hi.push_back(s.m_mean + s.m_std);
  }
  std::vector<Series> ser;
  for (const auto& k : order) ser.push_back(by[k]);
  write_svg_plot(dir / "plot.svg", "Minimum m with cond(A) <= " + detail::fmt(cfg.tol), "n", "m", ser);
}

inline void write_fourier(const std::filesystem::path& dir, const ExperimentConfig& cfg, const FourierResult& r) {
  std::vector<StatsRow> rows;
  for (const auto& s : r.rows)
    rows.push_back({cfg.latent, s.m, s.strategy, s.err_gmean, s.err_gstd, s.cond_mean, s.cond_std, 0.0, 0.0, cfg.trials});
  write_stats_csv(dir / "stats.csv", rows);
  {
    auto os = detail::open_out(dir / "psnr.csv");
    os << "m,strategy,psnr_median,psnr_mean\n";
    for (const auto& s : r.rows)
      os << s.m << ',' << s.strategy << ',' << detail::fmt(s.psnr_median) << ',' << detail::fmt(s.psnr_mean) << '\n';
  }
  {
    auto os = detail::open_out(dir / "kt_profile.csv");
    os << "atom,id,K,pmf\n";
    r.kt_profile.write_csv(os);
  }
  nlohmann::json j;
  j["config"] = config_json(cfg);
  j["c_mcs"] = r.empirical_constants.c_mcs;
  j["c_cs"] = r.empirical_constants.c_cs;
  j["c_mcs_exact"] = r.exact_constants.c_mcs;
  j["c_cs_exact"] = r.exact_constants.c_cs;
  j["kt_relative_error"] = r.kt_relative_error;
  auto& recs = j["trials"] = nlohmann::json::array();
  for (const auto& t : r.records)
    recs.push_back({{"trial", t.trial}, {"m", t.m}, {"strategy", t.strategy}, {"psnr", detail::jnum(t.psnr)},
                    {"rel_error", detail::jnum(t.rel_error)}, {"cond", detail::jnum(t.cond)}});
  write_json(dir / "trace.json", j);
  std::map<std::string, Series> by;
  std::vector<std::string> order;
  for (const auto& s : r.rows) {
    if (!by.count(s.strategy)) {
      order.push_back(s.strategy);
      by[s.strategy].name = s.strategy;
    }
    auto& se = by[s.strategy];
    se.x.push_back(static_cast<double>(s.m));
    se.y.push_back(s.err_gmean);
    se.lo.push_back(s.err_gmean / s.err_gstd);
    se.hi.push_back(s.err_gmean * s.err_gstd);
  }
  std::vector<Series> ser;
  for (const auto& k : order) ser.push_back(by[k]);
  write_svg_plot(dir / "plot.svg", "Fourier recovery, relative image error", "m", "error", ser);
}

inline void write_cas(const std::filesystem::path& dir, const ExperimentConfig& cfg, const CasExperimentResult& r) {
  std::vector<StatsRow> rows;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : r.rows) rows.push_back({cfg.features, s.m, "cas", s.err_gmean, s.err_gstd, nan, nan, s.err_median, nan, cfg.trials});
  write_stats_csv(dir / "stats.csv", rows);
  nlohmann::json j;
  j["config"] = config_json(cfg);
  auto& recs = j["trials"] = nlohmann::json::array();
  for (const auto& t : r.records) {
    std::vector<nlohmann::json> errs;
    for (double e : t.errors) errs.push_back(detail::jnum(e));
    recs.push_back({{"trial", t.trial}, {"errors", errs}, {"interior_counts", t.interior_counts}, {"ranks", t.ranks},
                    {"tv_from_first", t.tv_from_first}, {"nested", t.nested}, {"measures_valid", t.measures_valid}});
  }
  auto& it = j["iterations"] = nlohmann::json::array();
  for (const auto& s : r.rows)
    it.push_back({{"iteration", s.iteration}, {"m", s.m}, {"err_gmean", detail::jnum(s.err_gmean)},
                  {"err_gstd", detail::jnum(s.err_gstd)}, {"err_median", detail::jnum(s.err_median)},
                  {"rank_mean", s.rank_mean}});
  write_json(dir / "trace.json", j);
  Series se{"cas", {}, {}, {}, {}};
  for (const auto& s : r.rows) {
    se.x.push_back(static_cast<double>(s.iteration));
    se.y.push_back(s.err_gmean);
    se.lo.push_back(s.err_gmean / s.err_gstd);
    se.hi.push_back(s.err_gmean * s.err_gstd);
  }
  write_svg_plot(dir / "plot.svg", "CAS relative test error", "iteration", "error", {se});
}

inline void write_props(const std::filesystem::path& dir, const ExperimentConfig& cfg, const PropsResult& r) {
  {
    auto os = detail::open_out(dir / "props.csv");
    os << "n,m,alpha_hat,beta_hat,kappa_frame,kappa_exact,bracket_fraction\n";
    for (const auto& p : r.rows)
      os << p.n << ',' << p.m << ',' << detail::fmt(p.alpha_hat) << ',' << detail::fmt(p.beta_hat) << ','
         << detail::fmt(p.kappa_frame) << ',' << detail::fmt(p.kappa_exact) << ',' << detail::fmt(p.bracket_fraction) << '\n';
  }
  std::vector<StatsRow> rows;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : r.rows) rows.push_back({p.n, p.m, "cs", nan, nan, nan, nan, nan, nan, cfg.trials});
  write_stats_csv(dir / "stats.csv", rows);
  nlohmann::json j;
  j["config"] = config_json(cfg);
  auto& a = j["levels"] = nlohmann::json::array();
  for (const auto& p : r.rows)
    a.push_back({{"n", p.n}, {"m", p.m}, {"alpha_hat", p.alpha_hat}, {"beta_hat", p.beta_hat},
                 {"kappa_frame", p.kappa_frame}, {"kappa_exact", p.kappa_exact}, {"bracket_fraction", p.bracket_fraction}});
  write_json(dir / "trace.json", j);
}

}  // namespace cs4ml
