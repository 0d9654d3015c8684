#pragma once

// Synthetic generative models, Fourier-measurement recovery in latent
// coordinates and image metrics.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cs4ml/christoffel.hpp"
#include "cs4ml/dft.hpp"
#include "cs4ml/error.hpp"
#include "cs4ml/lsq.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/operators.hpp"

namespace cs4ml {

class GenerativeModel {
 public:
  enum class Kind { linear, relu_mlp };

  /// G(z) = A z; A must have full column rank.
  static GenerativeModel linear(Eigen::MatrixXd a) {
    detail::require(a.rows() > 0 && a.cols() > 0, "GenerativeModel: empty matrix");
    detail::require(a.allFinite(), "GenerativeModel: non-finite weights");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    detail::require(qr.rank() == a.cols(), "GenerativeModel: linear model needs full column rank");
    GenerativeModel g;
    g.kind_ = Kind::linear;
    g.weights_.push_back(std::move(a));
    g.biases_.push_back(Eigen::VectorXd::Zero(g.weights_.back().rows()));
    return g;
  }

  /// ReLU on every layer except the last, which is affine.
  static GenerativeModel relu_mlp(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases) {
    detail::require(!weights.empty(), "GenerativeModel: need at least one layer");
    detail::require(weights.size() == biases.size(), "GenerativeModel: one bias per layer required");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      detail::require(weights[l].rows() == biases[l].size(), "GenerativeModel: bias size mismatch");
      if (l > 0) detail::require(weights[l].cols() == weights[l - 1].rows(), "GenerativeModel: layer widths do not chain");
    }
    GenerativeModel g;
    g.kind_ = Kind::relu_mlp;
    g.weights_ = std::move(weights);
    g.biases_ = std::move(biases);
    return g;
  }

  /// widths = {p, h_1, ..., N_img}; He-scaled Gaussian weights, small biases.
  static GenerativeModel random_relu_mlp(const std::vector<Index>& widths, const RngSpec& rng) {
    detail::require(widths.size() >= 2, "GenerativeModel: need input and output widths");
    auto eng = rng.engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      detail::require(widths[l] > 0 && widths[l + 1] > 0, "GenerativeModel: widths must be positive");
      Eigen::MatrixXd wl(widths[l + 1], widths[l]);
      const double s = std::sqrt(2.0 / static_cast<double>(widths[l]));
      for (Index i = 0; i < wl.size(); ++i) wl.data()[i] = s * normal(eng);
      Eigen::VectorXd bl(widths[l + 1]);
      for (Index i = 0; i < bl.size(); ++i) bl(i) = 0.1 * normal(eng);
      w.push_back(std::move(wl));
      b.push_back(std::move(bl));
    }
    return relu_mlp(std::move(w), std::move(b));
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] Index latent_dim() const { return weights_.front().cols(); }
  [[nodiscard]] Index output_dim() const { return weights_.back().rows(); }

  [[nodiscard]] const Eigen::MatrixXd& matrix() const {
    detail::require(kind_ == Kind::linear, "GenerativeModel: only linear models expose a matrix");
    return weights_.front();
  }

  [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& z) const {
    detail::require(z.size() == latent_dim(), "GenerativeModel: latent dimension mismatch");
    Eigen::VectorXd h = z;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      h = weights_[l] * h + biases_[l];
      if (l + 1 < weights_.size()) h = h.cwiseMax(0.0);
    }
    return h;
  }

 private:
  GenerativeModel() = default;
  Kind kind_ = Kind::linear;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Signed frequency of index j along one axis of length n.
inline double signed_frequency(Index j, Index n) {
  return static_cast<double>(j <= n / 2 ? j : j - n);
}

/// Linear model with i.i.d. Gaussian columns (unit-variance entries).
inline GenerativeModel gaussian_linear_model(Index n_img, Index p, const RngSpec& rng) {
  auto eng = rng.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n_img, p);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = normal(eng);
  return GenerativeModel::linear(std::move(a));
}

/// Gaussian columns passed through the low-pass filter exp(-|k|^2 / (2 b^2))
/// in frequency space, so spectral energy sits near the origin like natural
/// images. b <= 0 disables the filter.
inline GenerativeModel smooth_gaussian_model(const UnitaryDft& dft, Index p, double bandwidth, const RngSpec& rng) {
  GenerativeModel raw = gaussian_linear_model(dft.length(), p, rng);
  if (bandwidth <= 0.0) return raw;
  const Index n = dft.side();
  Eigen::VectorXd filt(dft.length());
  for (Index j = 0; j < dft.length(); ++j) {
    Index rem = j;
    double k2 = 0.0;
    for (int a = 0; a < dft.dim(); ++a) {
      const double f = signed_frequency(rem % n, n);
      k2 += f * f;
      rem /= n;
    }
    filt(j) = std::exp(-k2 / (2.0 * bandwidth * bandwidth));
  }
  Eigen::MatrixXd a(dft.length(), p);
  for (Index c = 0; c < p; ++c) {
    const Eigen::VectorXcd spec = dft.forward(raw.matrix().col(c).cast<Complex>());
    const Eigen::VectorXcd back = dft.inverse(spec.cwiseProduct(filt.cast<Complex>()));
    a.col(c) = back.real();
  }
  return GenerativeModel::linear(std::move(a));
}

/// 20 log10(max_val / sqrt(MSE)); +inf when the images agree.
inline double psnr(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate, double max_val) {
  detail::require(reference.size() == estimate.size(), "psnr: length mismatch");
  detail::require(reference.size() > 0, "psnr: empty images");
  detail::require(max_val > 0.0, "psnr: max_val must be positive");
  const double mse = (reference - estimate).squaredNorm() / static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(max_val / std::sqrt(mse));
}

/// C_MCS = max_i K(i), C_CS = kappa (the mean for uniform block weights).
struct SamplingConstants {
  double c_mcs = 0.0;
  double c_cs = 0.0;
};

inline SamplingConstants sampling_constants(const ChristoffelProfile& prof) {
  return {prof.K.maxCoeff(), prof.kappa};
}

struct RecoveryResult {
  Eigen::VectorXd truth;
  Eigen::VectorXd estimate;
  FitResult<double> fit;
  double psnr = 0.0;
};

/// Fourier-channel recovery of images in the range of a linear generator.
/// The latent coefficients are the unknowns of a real least-squares fit
/// built from the complex measurements.
class FourierRecovery {
 public:
  FourierRecovery(std::shared_ptr<const UnitaryDft> dft, const GenerativeModel& gen, Partition partition)
      : dft_(std::move(dft)),
        a_(gen.matrix()),
        op_(ChannelOperator::fourier_partition(dft_, std::move(partition))),
        basis_(*dft_, a_.cast<Complex>()) {}

  [[nodiscard]] const ChannelOperator& op() const { return op_; }
  [[nodiscard]] const ImageBasis& basis() const { return basis_; }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return a_; }

  /// Exact Christoffel profile of range(A) under the channel.
  [[nodiscard]] ChristoffelProfile exact_profile() const {
    const auto frame = orthonormalize_on_grid(stack_channels({op_}, basis_), {OrthoMode::qr, 0.0});
    return christoffel_from_frame(frame);
  }

  /// Ground truth G(z*) with z* ~ N(0, I) drawn from `rng`.
  [[nodiscard]] Eigen::VectorXd draw_truth(const RngSpec& rng) const {
    auto eng = rng.engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(a_.cols());
    for (Index j = 0; j < z.size(); ++j) z(j) = normal(eng);
    return a_ * z;
  }

  /// Per-entry noise sigma = eta * ||f*|| * sqrt(M / N_img): eta is the
  /// relative noise level of a typical measurement.
  [[nodiscard]] RecoveryResult recover(const Eigen::VectorXd& truth, const ChannelSamples& samples, double eta,
                                       const RngSpec& noise_rng) const {
    detail::require(samples.m() >= 1, "recover: need at least one sample");
    detail::require(eta >= 0.0, "recover: noise level must be nonnegative");
    detail::require(truth.size() == dft_->length(), "recover: image length mismatch");
    const ImageBasis tb(*dft_, truth.cast<Complex>());
    std::vector<VectorT<Complex>> targets{evaluate_channel(op_, tb).col(0)};
    NoiseSpec noise;
    if (eta > 0.0) {
      noise.sigma = eta * truth.norm() *
                    std::sqrt(static_cast<double>(op_.domain().size()) / static_cast<double>(dft_->length()));
      noise.rng = noise_rng;
    }
    const auto sys = realify(assemble_system(std::vector<ChannelOperator>{op_}, {samples}, basis_, targets, noise));
    RecoveryResult r;
    r.fit = solve_system(sys);
    r.truth = truth;
    r.estimate = a_ * r.fit.coeffs;
    const double peak = truth.cwiseAbs().maxCoeff();
    r.psnr = psnr(truth, r.estimate, peak > 0.0 ? peak : 1.0);
    return r;
  }

  /// Draws m blocks from `mu` and recovers a fresh ground truth.
  [[nodiscard]] RecoveryResult recover_linear_gen(const DiscreteMeasure& mu, Index m, double eta, const RngSpec& rng) const {
    detail::require(m >= 1, "recover_linear_gen: need at least one sample");
    const Eigen::VectorXd truth = draw_truth(rng.child(0));
    return recover(truth, ChannelSamples::draw(mu, m, rng.child(1)), eta, rng.child(2));
  }

 private:
  std::shared_ptr<const UnitaryDft> dft_;
  Eigen::MatrixXd a_;
  ChannelOperator op_;
  ImageBasis basis_;
};

/// Flat little-endian float64 dump plus a JSON sidecar with shape, seed and psnr.
inline void write_image_pair(const std::filesystem::path& stem, const Eigen::VectorXd& truth,
                             const Eigen::VectorXd& estimate, Index side, int dim, std::uint64_t seed, double psnr_db) {
  auto dump = [](const std::filesystem::path& p, const Eigen::VectorXd& v) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("write_image_pair: cannot open " + p.string());
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  dump(stem.string() + "_truth.f64", truth);
  dump(stem.string() + "_estimate.f64", estimate);
  std::ofstream js(stem.string() + ".json");
  js.precision(17);
  js << "{\"shape\": [";
  for (int k = 0; k < dim; ++k) js << (k ? ", " : "") << side;
  js << "], \"seed\": " << seed << ", \"psnr\": ";
  if (std::isfinite(psnr_db))
    js << psnr_db;
  else
    js << "null";
  js << "}\n";
}

}  // namespace cs4ml
