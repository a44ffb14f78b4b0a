#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace uafkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class TaskKind { Regression, Classification };

struct SplitFractions {
  double train = 0.7;
  double validation = 0.15;
  double test = 0.15;
};

struct RowRange {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;

  Eigen::Index size() const { return end - begin; }
};

/// One sample per row. Rows are already in random order, so the split is a
/// contiguous partition: train first, then validation, then test.
struct Dataset {
  Matrix inputs;
  Matrix targets;
  SplitFractions split;
  TaskKind kind = TaskKind::Regression;

  Eigen::Index size() const { return inputs.rows(); }
  RowRange train_rows() const;
  RowRange validation_rows() const;
  RowRange test_rows() const;
};

/// Throws std::invalid_argument on NaN entries, mismatched row counts, bad
/// split fractions or non-one-hot classification targets.
void validate(const Dataset& data);

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// Nonnegative channels x species mixing matrix drawn from `seed`; the same
/// matrix make_gas_analogue uses for that seed.
Matrix gas_mixing_matrix(std::uint64_t seed, int n_channels, int n_species);

/// Synthetic spectroscopy stand-in: concentrations uniform on (0, 1],
/// inputs = M c + white Gaussian noise at the requested SNR (dB, signal
/// power over noise power). snr_db = +inf disables noise.
Dataset make_gas_analogue(std::uint64_t seed, int n_samples = 2000, int n_channels = 64,
                          int n_species = 9, double snr_db = 30.0);

/// Balanced isotropic Gaussian clusters with one-hot targets. Centers are
/// uniform in [-1, 1]^n_features; `spread` is the per-feature std.
Dataset make_blobs(std::uint64_t seed, int n_samples = 2000, int n_classes = 4, int n_features = 16,
                   double spread = 1.0);

/// 10 log10(signal power / noise power) measured on a generated set.
double empirical_snr_db(const Matrix& clean, const Matrix& noisy);

}  // namespace uafkit
