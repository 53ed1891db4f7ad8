#include "eigenrank/dice_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "eigenrank/errors.hpp"

namespace eigenrank {

SymmetricMatrix::SymmetricMatrix(std::size_t order)
    : order_(order), entries_(order * order, 0.0) {
  if (order == 0) {
    throw Error(ErrorCode::invalid_argument, "matrix order must be positive");
  }
}

SymmetricMatrix SymmetricMatrix::from_rows(
    const std::vector<std::vector<double>>& rows) {
  SymmetricMatrix m(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (rows[p].size() != rows.size()) {
      throw Error(ErrorCode::dimension_mismatch,
                  "row " + std::to_string(p) + " has " +
                      std::to_string(rows[p].size()) + " entries, expected " +
                      std::to_string(rows.size()));
    }
  }
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (std::size_t q = p; q < rows.size(); ++q) {
      if (rows[p][q] != rows[q][p]) {
        throw Error(ErrorCode::invalid_argument,
                    "matrix is not symmetric at (" + std::to_string(p) + "," +
                        std::to_string(q) + ")");
      }
      m.set(p, q, rows[p][q]);
    }
  }
  return m;
}

double SymmetricMatrix::trace() const noexcept {
  double s = 0.0;
  for (std::size_t p = 0; p < order_; ++p) s += at(p, p);
  return s;
}

DiceMatrix::DiceMatrix(SymmetricMatrix entries) : entries_(std::move(entries)) {
  const std::size_t t = entries_.order();
  if (t < 2) {
    throw Error(ErrorCode::invalid_argument, "a Dice matrix needs order >= 2");
  }
  for (std::size_t p = 0; p < t; ++p) {
    if (entries_.at(p, p) != 1.0) {
      throw Error(ErrorCode::invalid_argument,
                  "diagonal entry " + std::to_string(p) + " is not 1");
    }
    for (std::size_t q = p + 1; q < t; ++q) {
      const double v = entries_.at(p, q);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::invalid_argument,
                    "entry (" + std::to_string(p) + "," + std::to_string(q) +
                        ") is outside [0,1]");
      }
    }
  }
}

DiceMatrix DiceMatrix::identity(std::size_t order) {
  SymmetricMatrix m(order);
  for (std::size_t p = 0; p < order; ++p) m.set(p, p, 1.0);
  return DiceMatrix(std::move(m));
}

DiceMatrix DiceMatrix::all_ones(std::size_t order) {
  SymmetricMatrix m(order);
  for (std::size_t p = 0; p < order; ++p)
    for (std::size_t q = p; q < order; ++q) m.set(p, q, 1.0);
  return DiceMatrix(std::move(m));
}

namespace {

double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a[p * n + q] * a[p * n + q];
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition jacobi_eigen(const SymmetricMatrix& m, JacobiOptions options) {
  const std::size_t n = m.order();
  std::vector<double> a(n * n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) a[p * n + q] = m.at(p, q);
  std::vector<double> v(n * n, 0.0);
  for (std::size_t p = 0; p < n; ++p) v[p * n + p] = 1.0;

  const double tolerance = options.relative_tolerance * static_cast<double>(n);
  double off = off_diagonal_norm(a, n);
  int sweep = 0;
  for (; sweep < options.max_sweeps && off >= tolerance; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        a[p * n + p] -= t * apq;
        a[q * n + q] += t * apq;
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a[r * n + p];
          const double arq = a[r * n + q];
          a[r * n + p] = a[p * n + r] = c * arp - s * arq;
          a[r * n + q] = a[q * n + r] = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v[r * n + p];
          const double vrq = v[r * n + q];
          v[r * n + p] = c * vrp - s * vrq;
          v[r * n + q] = s * vrp + c * vrq;
        }
      }
    }
    off = off_diagonal_norm(a, n);
  }
  if (off >= tolerance) {
    std::ostringstream msg;
    msg << "Jacobi did not converge in " << options.max_sweeps
        << " sweeps; off-diagonal residual " << off;
    throw Error(ErrorCode::no_convergence, msg.str());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a[i * n + i] > a[j * n + j];
  });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a[order[j] * n + order[j]];
    for (std::size_t r = 0; r < n; ++r) out.vectors[r * n + j] = v[r * n + order[j]];
  }
  out.sweeps = sweep;
  out.off_diagonal_norm = off;
  return out;
}

std::vector<double> eigenvalues(const SymmetricMatrix& m) {
  return jacobi_eigen(m).values;
}

std::vector<double> eigenvalues(const DiceMatrix& m) {
  return eigenvalues(m.matrix());
}

double lambda_max(const DiceMatrix& m) { return eigenvalues(m).front(); }

DiceMatrix build_dice_matrix(std::span<const BinaryMask> segmentations,
                             OverlapMetric metric) {
  const std::size_t t = segmentations.size();
  if (t < 2) {
    throw Error(ErrorCode::invalid_argument,
                "need at least 2 segmentations, got " + std::to_string(t));
  }
  SymmetricMatrix m(t);
  for (std::size_t p = 0; p < t; ++p) {
    m.set(p, p, 1.0);
    for (std::size_t q = p + 1; q < t; ++q) {
      m.set(p, q, overlap(metric, segmentations[p], segmentations[q]));
    }
  }
  return DiceMatrix(std::move(m));
}

std::vector<double> clamp_spectrum(std::span<const double> eigs, double tolerance) {
  std::vector<double> out(eigs.begin(), eigs.end());
  for (double& lambda : out) {
    if (lambda < -tolerance) {
      std::ostringstream msg;
      msg << "eigenvalue " << lambda << " is below -" << tolerance;
      throw Error(ErrorCode::not_psd, msg.str());
    }
    if (std::abs(lambda) <= tolerance) lambda = 0.0;
  }
  return out;
}

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

double von_neumann_entropy(std::span<const double> eigs, bool normalized,
                           double tolerance) {
  std::vector<double> spectrum = clamp_spectrum(eigs, tolerance);
  if (normalized) {
    const double total = std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
    if (total <= 0.0) {
      throw Error(ErrorCode::invalid_argument,
                  "cannot normalize a spectrum with zero trace");
    }
    for (double& lambda : spectrum) lambda /= total;
  }
  double h = 0.0;
  for (double lambda : spectrum) h -= xlogx(lambda);
  return h;
}

bool is_psd(const SymmetricMatrix& m, double tolerance) {
  return eigenvalues(m).back() >= -tolerance;
}

bool trio_feasibility(double d_pq, double d_qr, double d_rp, double tolerance) {
  for (double d : {d_pq, d_qr, d_rp}) {
    if (!(d >= 0.0 && d <= 1.0)) {
      std::ostringstream msg;
      msg << "trio score " << d << " is outside [0,1]";
      throw Error(ErrorCode::invalid_argument, msg.str());
    }
  }
  const double lhs = d_pq * d_pq + d_qr * d_qr + d_rp * d_rp - 1.0;
  return lhs <= 2.0 * d_pq * d_qr * d_rp + tolerance;
}

bool all_trios_feasible(const DiceMatrix& m, double tolerance) {
  const std::size_t t = m.order();
  for (std::size_t p = 0; p < t; ++p)
    for (std::size_t q = p + 1; q < t; ++q)
      for (std::size_t r = q + 1; r < t; ++r)
        if (!trio_feasibility(m.at(p, q), m.at(q, r), m.at(r, p), tolerance))
          return false;
  return true;
}

std::optional<double> dominance_ratio(std::span<const double> eigs,
                                      double degenerate_tolerance,
                                      double tolerance) {
  if (eigs.empty()) return std::nullopt;
  const std::vector<double> spectrum = clamp_spectrum(eigs, tolerance);
  const double lead = *std::max_element(spectrum.begin(), spectrum.end());
  double denominator = 0.0;
  for (double lambda : spectrum) denominator += xlogx(lambda);
  if (std::abs(denominator) < degenerate_tolerance) return std::nullopt;
  return xlogx(lead) / denominator;
}

SpectralSummary summarize(const DiceMatrix& m, double tolerance) {
  SpectralSummary s;
  s.eigenvalues = eigenvalues(m);
  s.lambda_max = s.eigenvalues.front();
  s.psd = s.eigenvalues.back() >= -tolerance;
  if (s.psd) {
    s.entropy_raw = von_neumann_entropy(s.eigenvalues, false, tolerance);
    s.entropy_normalized = von_neumann_entropy(s.eigenvalues, true, tolerance);
  } else {
    s.entropy_raw = std::numeric_limits<double>::quiet_NaN();
    s.entropy_normalized = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

}  // namespace eigenrank
