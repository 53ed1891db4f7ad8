#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace eigenrank {

/// 2D binary segmentation, row-major. Immutable once constructed; every pixel
/// is exactly 0 or 1.
class BinaryMask {
 public:
  /// All-background mask.
  BinaryMask(std::size_t width, std::size_t height);
  /// Validates dimensions, payload length and pixel values.
  BinaryMask(std::size_t width, std::size_t height,
             std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  std::uint8_t at(std::size_t x, std::size_t y) const noexcept {
    return pixels_[y * width_ + x];
  }

  bool same_shape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
};

enum class OverlapMetric { dice, jaccard };

std::string_view to_string(OverlapMetric metric);
OverlapMetric parse_overlap_metric(std::string_view name);

struct OverlapCounts {
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t intersection = 0;
};

std::size_t foreground_count(const BinaryMask& mask) noexcept;

/// Throws dimension_mismatch when shapes differ.
OverlapCounts overlap_counts(const BinaryMask& a, const BinaryMask& b);

/// 2|a∩b| / (|a|+|b|). Two empty masks score 1.
double dice(const BinaryMask& a, const BinaryMask& b);

/// |a∩b| / |a∪b|. Two empty masks score 1.
double jaccard(const BinaryMask& a, const BinaryMask& b);

double overlap(OverlapMetric metric, const BinaryMask& a, const BinaryMask& b);

}  // namespace eigenrank
