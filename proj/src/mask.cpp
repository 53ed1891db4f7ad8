#include "eigenrank/mask.hpp"

#include <algorithm>
#include <string>

#include "eigenrank/errors.hpp"

namespace eigenrank {

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : BinaryMask(width, height, std::vector<std::uint8_t>(width * height, 0)) {}

BinaryMask::BinaryMask(std::size_t width, std::size_t height,
                       std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ == 0 || height_ == 0) {
    throw Error(ErrorCode::invalid_argument, "mask dimensions must be positive");
  }
  if (pixels_.size() != width_ * height_) {
    throw Error(ErrorCode::dimension_mismatch,
                "mask payload has " + std::to_string(pixels_.size()) +
                    " pixels, expected " + std::to_string(width_ * height_));
  }
  auto bad = std::find_if(pixels_.begin(), pixels_.end(),
                          [](std::uint8_t v) { return v > 1; });
  if (bad != pixels_.end()) {
    throw Error(ErrorCode::bad_pixel,
                "pixel " + std::to_string(bad - pixels_.begin()) +
                    " has value " + std::to_string(*bad));
  }
}

std::string_view to_string(OverlapMetric metric) {
  return metric == OverlapMetric::dice ? "dice" : "jaccard";
}

OverlapMetric parse_overlap_metric(std::string_view name) {
  if (name == "dice") return OverlapMetric::dice;
  if (name == "jaccard") return OverlapMetric::jaccard;
  throw Error(ErrorCode::invalid_argument,
              "unknown overlap metric '" + std::string(name) + "'");
}

std::size_t foreground_count(const BinaryMask& mask) noexcept {
  auto px = mask.pixels();
  return static_cast<std::size_t>(std::count(px.begin(), px.end(), 1));
}

OverlapCounts overlap_counts(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::dimension_mismatch,
                "masks are " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " and " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
  OverlapCounts c;
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    c.first += pa[i];
    c.second += pb[i];
    c.intersection += pa[i] & pb[i];
  }
  return c;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  const OverlapCounts c = overlap_counts(a, b);
  const std::size_t total = c.first + c.second;
  if (total == 0) return 1.0;
  return static_cast<double>(2 * c.intersection) / static_cast<double>(total);
}

double jaccard(const BinaryMask& a, const BinaryMask& b) {
  const OverlapCounts c = overlap_counts(a, b);
  const std::size_t uni = c.first + c.second - c.intersection;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(uni);
}

double overlap(OverlapMetric metric, const BinaryMask& a, const BinaryMask& b) {
  return metric == OverlapMetric::dice ? dice(a, b) : jaccard(a, b);
}

}  // namespace eigenrank
