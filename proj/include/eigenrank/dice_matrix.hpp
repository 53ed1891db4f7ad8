#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "eigenrank/mask.hpp"

namespace eigenrank {

/// Dense real symmetric matrix, row-major storage. `set` writes both (p,q)
/// and (q,p) so symmetry holds by construction.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(std::size_t order);

  /// Requires a square, exactly symmetric row list.
  static SymmetricMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t order() const noexcept { return order_; }
  double at(std::size_t p, std::size_t q) const noexcept {
    return entries_[p * order_ + q];
  }
  void set(std::size_t p, std::size_t q, double value) noexcept {
    entries_[p * order_ + q] = value;
    entries_[q * order_ + p] = value;
  }
  double trace() const noexcept;

  friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

 private:
  std::size_t order_;
  std::vector<double> entries_;
};

/// Pairwise overlap matrix of t >= 2 segmentations of one case: symmetric,
/// unit diagonal, entries in [0,1].
class DiceMatrix {
 public:
  explicit DiceMatrix(SymmetricMatrix entries);

  static DiceMatrix identity(std::size_t order);
  static DiceMatrix all_ones(std::size_t order);
  static DiceMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    return DiceMatrix(SymmetricMatrix::from_rows(rows));
  }

  std::size_t order() const noexcept { return entries_.order(); }
  double at(std::size_t p, std::size_t q) const noexcept { return entries_.at(p, q); }
  const SymmetricMatrix& matrix() const noexcept { return entries_; }

  friend bool operator==(const DiceMatrix&, const DiceMatrix&) = default;

 private:
  SymmetricMatrix entries_;
};

struct EigenDecomposition {
  /// Descending. Equal values keep the solver's output order.
  std::vector<double> values;
  /// Row-major n×n; column j is the unit eigenvector for values[j].
  std::vector<double> vectors;
  int sweeps = 0;
  double off_diagonal_norm = 0.0;
};

struct JacobiOptions {
  /// Converged once the off-diagonal Frobenius norm drops below
  /// relative_tolerance · order.
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Cyclic Jacobi rotations. Throws no_convergence with the final residual
/// when the sweep cap is hit.
EigenDecomposition jacobi_eigen(const SymmetricMatrix& m, JacobiOptions options = {});

std::vector<double> eigenvalues(const SymmetricMatrix& m);
std::vector<double> eigenvalues(const DiceMatrix& m);
double lambda_max(const DiceMatrix& m);

/// Entries in [0,1] are computed with `metric`; the diagonal is exactly 1.
DiceMatrix build_dice_matrix(std::span<const BinaryMask> segmentations,
                             OverlapMetric metric = OverlapMetric::dice);

inline constexpr double kSpectralTolerance = 1e-9;

/// Snaps |λ| <= tolerance to exactly 0. Throws not_psd if any λ < -tolerance.
std::vector<double> clamp_spectrum(std::span<const double> eigs,
                                   double tolerance = kSpectralTolerance);

/// −Σ λ log λ (natural log, 0·log 0 = 0) over the clamped spectrum. With
/// `normalized`, the spectrum is first rescaled to sum to 1.
double von_neumann_entropy(std::span<const double> eigs, bool normalized,
                           double tolerance = kSpectralTolerance);

bool is_psd(const SymmetricMatrix& m, double tolerance);
inline bool is_psd(const DiceMatrix& m, double tolerance) {
  return is_psd(m.matrix(), tolerance);
}

inline constexpr double kTrioTolerance = 1e-9;

/// a² + b² + c² − 1 <= 2abc + tolerance. The 3×3 unit-diagonal matrix with
/// these off-diagonals is PSD exactly when this holds. Scores outside [0,1]
/// throw invalid_argument.
bool trio_feasibility(double d_pq, double d_qr, double d_rp,
                      double tolerance = kTrioTolerance);

/// Every (p,q,r) triple of distinct indices passes trio_feasibility.
bool all_trios_feasible(const DiceMatrix& m, double tolerance = kTrioTolerance);

/// λ₁ log λ₁ / Σ λ_r log λ_r on the clamped spectrum; nullopt when the
/// denominator magnitude is below `degenerate_tolerance`.
std::optional<double> dominance_ratio(std::span<const double> eigs,
                                      double degenerate_tolerance = 1e-12,
                                      double tolerance = kSpectralTolerance);

struct SpectralSummary {
  std::vector<double> eigenvalues;
  double lambda_max = 0.0;
  double entropy_raw = 0.0;
  double entropy_normalized = 0.0;
  bool psd = true;
};

/// Entropies are only defined for PSD matrices; for a non-PSD input both are
/// NaN and `psd` is false.
SpectralSummary summarize(const DiceMatrix& m, double tolerance = kSpectralTolerance);

}  // namespace eigenrank
