#include "uafkit/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace uafkit {

namespace {

Eigen::Index rounded(double fraction, Eigen::Index n) {
  return static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n)));
}

// Independent streams per purpose so that, e.g., the mixing matrix does not
// depend on n_samples.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

enum Purpose : std::uint64_t { kMixing = 1, kConcentrations, kNoise, kCenters, kPoints, kShuffle };

}  // namespace

RowRange Dataset::train_rows() const { return {0, rounded(split.train, size())}; }

RowRange Dataset::validation_rows() const {
  const Eigen::Index begin = train_rows().end;
  return {begin, std::min(size(), begin + rounded(split.validation, size()))};
}

RowRange Dataset::test_rows() const { return {validation_rows().end, size()}; }

void validate(const Dataset& data) {
  if (data.inputs.rows() != data.targets.rows()) {
    throw std::invalid_argument("dataset inputs and targets have different row counts");
  }
  if (data.inputs.rows() == 0 || data.inputs.cols() == 0 || data.targets.cols() == 0) {
    throw std::invalid_argument("dataset is empty");
  }
  if (data.inputs.hasNaN() || data.targets.hasNaN()) {
    throw std::invalid_argument("dataset contains NaN entries");
  }
  const SplitFractions& s = data.split;
  if (s.train <= 0.0 || s.validation < 0.0 || s.test < 0.0 ||
      std::abs(s.train + s.validation + s.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be nonnegative and sum to 1");
  }
  if (data.kind == TaskKind::Classification) {
    for (Eigen::Index i = 0; i < data.targets.rows(); ++i) {
      const auto row = data.targets.row(i);
      const bool binary = (row.array() == 0.0 || row.array() == 1.0).all();
      if (!binary || row.sum() != 1.0) {
        throw std::invalid_argument("classification target row " + std::to_string(i) +
                                    " is not one-hot");
      }
    }
  }
}

Matrix gas_mixing_matrix(std::uint64_t seed, int n_channels, int n_species) {
  if (n_species < 1 || n_channels < n_species) {
    throw std::invalid_argument("need n_channels >= n_species >= 1");
  }
  auto rng = stream(seed, kMixing);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix m(n_channels, n_species);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = uniform(rng);
    }
  }
  return m;
}

Dataset make_gas_analogue(std::uint64_t seed, int n_samples, int n_channels, int n_species,
                          double snr_db) {
  if (n_samples < 1) {
    throw std::invalid_argument("n_samples must be positive");
  }
  if (std::isnan(snr_db) || snr_db == -kNoiseless) {
    throw std::invalid_argument("snr_db must be finite or +inf");
  }
  const Matrix mixing = gas_mixing_matrix(seed, n_channels, n_species);

  Dataset data;
  data.kind = TaskKind::Regression;
  data.targets.resize(n_samples, n_species);
  auto conc_rng = stream(seed, kConcentrations);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < data.targets.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.targets.cols(); ++j) {
      data.targets(i, j) = 1.0 - uniform(conc_rng);  // [0,1) -> (0,1]
    }
  }

  data.inputs = data.targets * mixing.transpose();
  if (std::isfinite(snr_db)) {
    const double signal_power = data.inputs.squaredNorm() / static_cast<double>(data.inputs.size());
    const double noise_std = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
    auto noise_rng = stream(seed, kNoise);
    std::normal_distribution<double> normal(0.0, noise_std);
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
        data.inputs(i, j) += normal(noise_rng);
      }
    }
  }
  return data;
}

Dataset make_blobs(std::uint64_t seed, int n_samples, int n_classes, int n_features,
                   double spread) {
  if (n_classes < 2) {
    throw std::invalid_argument("n_classes must be at least 2");
  }
  if (n_samples < n_classes || n_features < 1 || !(spread >= 0.0)) {
    throw std::invalid_argument(
        "make_blobs needs n_samples >= n_classes, n_features >= 1, spread >= 0");
  }
  auto center_rng = stream(seed, kCenters);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix centers(n_classes, n_features);
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index f = 0; f < centers.cols(); ++f) {
      centers(c, f) = uniform(center_rng);
    }
  }

  std::vector<int> labels(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    labels[i] = i % n_classes;
  }
  auto shuffle_rng = stream(seed, kShuffle);
  std::shuffle(labels.begin(), labels.end(), shuffle_rng);

  auto point_rng = stream(seed, kPoints);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.kind = TaskKind::Classification;
  data.inputs.resize(n_samples, n_features);
  data.targets = Matrix::Zero(n_samples, n_classes);
  for (int i = 0; i < n_samples; ++i) {
    for (Eigen::Index f = 0; f < n_features; ++f) {
      data.inputs(i, f) = centers(labels[i], f) + spread * normal(point_rng);
    }
    data.targets(i, labels[i]) = 1.0;
  }
  return data;
}

double empirical_snr_db(const Matrix& clean, const Matrix& noisy) {
  const double signal = clean.squaredNorm();
  const double noise = (noisy - clean).squaredNorm();
  return 10.0 * std::log10(signal / noise);
}

}  // namespace uafkit
