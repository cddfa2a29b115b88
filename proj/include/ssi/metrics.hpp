// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ssi/autoencoder.hpp"
#include "ssi/nn.hpp"
#include "ssi/tensor.hpp"

namespace ssi {

// Proxy metrics over a fixed, seeded feature pyramid. Only the algebra of the
// metrics carries over to published numbers; absolute values do not.

/// Three conv + ReLU + 2x2 average-pool stages on 64x64 RGB images:
/// 3 -> 8 channels at 32x32, 8 -> 16 at 16x16, 16 -> 32 at 8x8.
class FeatureExtractor {
 public:
  static constexpr int kStages = 3;

  explicit FeatureExtractor(std::uint64_t seed) : seed_(seed) {
    Rng rng(seed);
    const std::array<int, kStages + 1> widths = {3, 8, 16, 32};
    for (std::size_t s = 0; s < kStages; ++s) {
      stages_[s] = nn::make_conv3x3(widths[s], widths[s + 1], 1, true, 1.4f, rng);
      stages_[s].bias = random_normal(widths[s + 1], 1, 0.05f, rng);
    }
  }

  std::uint64_t seed() const { return seed_; }

  std::array<FeatureMap, kStages> operator()(const Image& img) const {
    if (img.channels() != 3 || img.height != kImageSize || img.width != kImageSize)
      throw ShapeError("feature extractor: expected a 3x64x64 image");
    std::array<FeatureMap, kStages> out;
    FeatureMap x = img;
    x.data.array() -= 0.5f;
    for (std::size_t s = 0; s < kStages; ++s) {
      FeatureMap h = stages_[s](x);
      nn::relu_inplace(h.data);
      out[s] = nn::avg_pool(h, 2);
      x = out[s];
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  std::array<nn::Conv3x3, kStages> stages_;
};

// ---------------------------------------------------------------------------
// Frechet distance

/// Fewest feature vectors accepted for a Gaussian fit.
inline constexpr int kMinFrechetSamples = 8;

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Mean and unbiased covariance of sample rows (n x d).
inline Gaussian fit_gaussian(const Eigen::MatrixXd& samples) {
  if (samples.rows() < kMinFrechetSamples)
    throw ParameterError("frechet: need at least " + std::to_string(kMinFrechetSamples) + " samples, got " +
                         std::to_string(samples.rows()));
  Gaussian g;
  g.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  return g;
}

namespace detail {

// Symmetric PSD square root; negative eigenvalues beyond rounding raise.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("frechet: eigendecomposition failed");
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-9 * scale) throw NumericalError("frechet: covariance is not PSD");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Adds 1e-6 * trace / dim to the diagonal only when the covariance is
// numerically rank deficient (condition number above 1e12).
inline Eigen::MatrixXd regularized(const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 0.0)) return cov;
  const double eps = 1e-6 * cov.trace() / static_cast<double>(cov.rows());
  return cov + eps * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
}

}  // namespace detail

/// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2)). A near-singular
/// covariance gets 1e-6 * trace / dim on its diagonal. Clamped at zero.
inline double frechet_distance(const Gaussian& a, const Gaussian& b) {
  if (a.mean.size() != b.mean.size()) throw ShapeError("frechet: feature dimensions differ");
  const Eigen::MatrixXd s1 = detail::regularized(a.cov), s2 = detail::regularized(b.cov);
  const Eigen::MatrixXd r1 = detail::psd_sqrt(s1);
  detail::psd_sqrt(s2);  // PSD check only
  const Eigen::MatrixXd cross = detail::psd_sqrt(r1 * s2 * r1);
  const double d = (a.mean - b.mean).squaredNorm() + s1.trace() + s2.trace() - 2.0 * cross.trace();
  if (!std::isfinite(d)) throw NumericalError("frechet: non-finite distance");
  return std::max(0.0, d);
}

inline double frechet_distance(const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b) {
  return frechet_distance(fit_gaussian(samples_a), fit_gaussian(samples_b));
}

/// Per-location feature vectors of the deepest stage for every image (rows).
inline Eigen::MatrixXd style_features(const std::vector<Image>& images, const FeatureExtractor& fx) {
  if (images.empty()) throw ParameterError("style_distance: empty image set");
  std::vector<Matrix> parts;
  Eigen::Index rows = 0;
  for (const auto& img : images) {
    parts.push_back(fx(img)[FeatureExtractor::kStages - 1].data);
    rows += parts.back().cols();
  }
  Eigen::MatrixXd out(rows, parts.front().rows());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.cols()) = p.transpose().cast<double>();
    r += p.cols();
  }
  return out;
}

/// Frechet distance between the location-pooled deep features of two image sets.
inline double style_distance(const std::vector<Image>& stylized, const std::vector<Image>& styles,
                             const FeatureExtractor& fx) {
  return frechet_distance(style_features(stylized, fx), style_features(styles, fx));
}

// ---------------------------------------------------------------------------
// Content and structure distances

namespace detail {

inline void require_same_resolution(const Image& a, const Image& b, const char* where) {
  if (!a.same_shape(b)) throw ShapeError(std::string(where) + ": image resolutions differ");
}

inline Eigen::MatrixXd unit_columns(const Matrix& m) {
  Eigen::MatrixXd d = m.cast<double>();
  for (Eigen::Index c = 0; c < d.cols(); ++c) d.col(c) /= d.col(c).norm() + 1e-10;
  return d;
}

}  // namespace detail

/// Mean over stages of the per-location squared difference of unit-normalized
/// feature vectors.
inline double content_distance(const Image& a, const Image& b, const FeatureExtractor& fx) {
  detail::require_same_resolution(a, b, "content_distance");
  const auto fa = fx(a), fb = fx(b);
  double total = 0.0;
  for (std::size_t s = 0; s < fa.size(); ++s) {
    const Eigen::MatrixXd diff = detail::unit_columns(fa[s].data) - detail::unit_columns(fb[s].data);
    total += diff.colwise().squaredNorm().mean();
  }
  return total / static_cast<double>(fa.size());
}

/// Cosine self-similarity of first-stage features pooled to an 8x8 patch grid.
inline Eigen::MatrixXd patch_correlation(const Image& img, const FeatureExtractor& fx) {
  const FeatureMap patches = nn::avg_pool(fx(img)[0], 4);
  const Eigen::MatrixXd u = detail::unit_columns(patches.data);
  return u.transpose() * u;
}

/// Mean squared difference of the two images' patch self-correlation matrices.
inline double structure_distance(const Image& a, const Image& b, const FeatureExtractor& fx) {
  detail::require_same_resolution(a, b, "structure_distance");
  return (patch_correlation(a, fx) - patch_correlation(b, fx)).array().square().mean();
}

// ---------------------------------------------------------------------------
// Combined metric

inline double combined_metric(double s, double c) {
  if (!(s >= 0.0) || !(c >= 0.0)) throw DomainError("combined_metric: distances must be non-negative");
  return (1.0 + s) * (1.0 + c);
}

struct MetricRecord {
  double style = 0.0;
  double content = 0.0;
  double structure = 0.0;
  double combined = 1.0;

  static MetricRecord make(double s, double c, double structure) {
    return {s, c, structure, combined_metric(s, c)};
  }
};

// ---------------------------------------------------------------------------
// Published-table identity check

struct TableRow {
  std::string source_table;
  std::string column_name;
  double artfid = 0.0;
  double fid = 0.0;
  double lpips = 0.0;
};

struct TableResidual {
  TableRow row;
  double computed = 0.0;
  double residual = 0.0;  // computed - published
  bool pass = false;
};

struct TableReport {
  std::vector<TableResidual> rows;
  double tolerance = 0.05;
  bool all_pass = true;
};

inline constexpr double kTableTolerance = 0.05;

/// Checks |(1 + FID)(1 + LPIPS) - ArtFID| <= tolerance per row.
inline TableReport validate_table_identity(const std::vector<TableRow>& rows, double tolerance = kTableTolerance) {
  TableReport report;
  report.tolerance = tolerance;
  for (const auto& r : rows) {
    TableResidual t{r, (1.0 + r.fid) * (1.0 + r.lpips), 0.0, false};
    t.residual = t.computed - r.artfid;
    t.pass = std::abs(t.residual) <= tolerance;
    report.all_pass = report.all_pass && t.pass;
    report.rows.push_back(std::move(t));
  }
  return report;
}

/// Reads the "source_table,column_name,artfid,fid,lpips" fixture.
inline std::vector<TableRow> load_table_fixture(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("source_table,column_name,artfid,fid,lpips", 0) != 0)
    throw IoError("table fixture: unexpected header in " + path.string());
  std::vector<TableRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 5) throw IoError("table fixture: line " + std::to_string(line_no) + " needs 5 fields");
    try {
      rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
    } catch (const std::exception&) {
      throw IoError("table fixture: bad number on line " + std::to_string(line_no));
    }
  }
  return rows;
}

inline const TableRow& find_table_row(const std::vector<TableRow>& rows, std::string_view table,
                                      std::string_view column) {
  for (const auto& r : rows)
    if (r.source_table == table && r.column_name == column) return r;
  throw IndexError("table fixture: no row " + std::string(table) + "/" + std::string(column));
}

}  // namespace ssi
