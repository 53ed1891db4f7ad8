#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "eigenrank/engine.hpp"
#include "eigenrank/errors.hpp"
#include "eigenrank/mask.hpp"
#include "eigenrank/random.hpp"

namespace testkit {

namespace fs = std::filesystem;
using namespace eigenrank;

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("eigenrank-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::optional<ErrorCode> error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::string error_message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

inline BinaryMask row_mask(std::vector<std::uint8_t> px) {
  const std::size_t n = px.size();
  return BinaryMask(n, 1, std::move(px));
}

inline BinaryMask random_mask(Stream& rng, std::size_t w, std::size_t h, double p = 0.5) {
  std::vector<std::uint8_t> px(w * h);
  for (auto& v : px) v = rng.bernoulli(p) ? 1 : 0;
  return BinaryMask(w, h, std::move(px));
}

inline std::vector<CaseRecord> plain_records(std::size_t n) {
  std::vector<CaseRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%03zu", i);
    out.push_back(CaseRecord{CaseId{buf}, std::nullopt, std::nullopt, std::nullopt});
  }
  return out;
}

// Backend whose predictions come from a user function of (model index,
// case). Models are numbered in training order; training seeds are ignored.
class ScriptedBackend : public SegmenterBackend {
 public:
  using Predictor = std::function<BinaryMask(std::size_t, const CaseId&)>;

  explicit ScriptedBackend(Predictor p) : predict_(std::move(p)) {}

  std::string name() const override { return "scripted"; }
  ModelHandle train(std::span<const CaseId> subset, std::uint64_t) override {
    trained.emplace_back(subset.begin(), subset.end());
    return ModelHandle{std::to_string(trained.size() - 1)};
  }
  BinaryMask predict(const ModelHandle& m, const CaseId& c) const override {
    return predict_(std::stoul(m.key), c);
  }
  std::optional<BinaryMask> ground_truth(const CaseId& c) const override {
    auto it = truth.find(c);
    if (it == truth.end()) return std::nullopt;
    return it->second;
  }
  nlohmann::json export_model(const ModelHandle& m) const override { return {{"index", m.key}}; }
  ModelHandle import_model(const nlohmann::json& d) override {
    return ModelHandle{d.at("index").get<std::string>()};
  }

  std::vector<std::vector<CaseId>> trained;
  std::map<CaseId, BinaryMask> truth;

 private:
  Predictor predict_;
};

// Characteristic polynomial det(λI − A) by Faddeev–LeVerrier, coefficients
// highest degree first (leading 1).
inline std::vector<long double> characteristic_polynomial(
    const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  using Mat = std::vector<std::vector<long double>>;
  auto mul = [n](const Mat& x, const Mat& y) {
    Mat r(n, std::vector<long double>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) r[i][j] += x[i][k] * y[k][j];
    return r;
  };
  Mat A(n, std::vector<long double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A[i][j] = a[i][j];
  std::vector<long double> c(n + 1, 0);
  c[0] = 1;
  Mat M(n, std::vector<long double>(n, 0));
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t i = 0; i < n; ++i) M[i][i] += c[k - 1];
    M = mul(A, M);
    long double tr = 0;
    for (std::size_t i = 0; i < n; ++i) tr += M[i][i];
    c[k] = -tr / static_cast<long double>(k);
  }
  return c;
}

// All roots by Durand–Kerner, then Newton polish on the real part. The
// oracle is only used on symmetric matrices, whose roots are real.
inline std::vector<double> real_roots(const std::vector<long double>& c) {
  using cx = std::complex<long double>;
  const std::size_t n = c.size() - 1;
  auto eval = [&](cx z) {
    cx v = 0;
    for (long double ci : c) v = v * z + ci;
    return v;
  };
  std::vector<cx> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = std::pow(cx(0.4L, 0.9L), static_cast<int>(i)) * 2.0L;
  for (int it = 0; it < 2000; ++it) {
    long double moved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cx den = 1;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      const cx step = eval(z[i]) / den;
      z[i] -= step;
      moved = std::max(moved, std::abs(step));
    }
    if (moved < 1e-18L) break;
  }
  std::vector<double> roots;
  for (const cx& r : z) {
    long double x = r.real();
    for (int it = 0; it < 8; ++it) {
      long double p = 0, dp = 0;
      for (long double ci : c) {
        dp = dp * x + p;
        p = p * x + ci;
      }
      if (dp == 0) break;
      x -= p / dp;
    }
    roots.push_back(static_cast<double>(x));
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

inline std::vector<std::vector<double>> random_symmetric(Stream& rng, std::size_t n) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a[i][j] = a[j][i] = rng.uniform(-1.0, 1.0);
  return a;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
    i = j + 1;
  }
  return r;
}

// Pearson correlation of average ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace testkit
