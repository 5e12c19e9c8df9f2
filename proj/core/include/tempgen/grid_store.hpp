#pragma once

// Gridded hourly 2m temperature storage and its aggregation into labelled
// daily samples. A region is an 8x8 block of 0.125 degree cells (one degree
// square) indexed from the south-west corner; a period is a 4-year span of
// calendar years.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tempgen/calendar.hpp"

namespace tempgen {

inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kRegionCells = 8;
inline constexpr std::size_t kPixelsPerFrame = kRegionCells * kRegionCells;
inline constexpr std::size_t kSampleValues = kHoursPerDay * kPixelsPerFrame;
inline constexpr std::size_t kLabelDim = 15;
inline constexpr int kPeriodYears = 4;
inline constexpr double kCellSizeDeg = 0.125;
inline constexpr double kMinKelvin = 150.0;
inline constexpr double kMaxKelvin = 350.0;

struct GridDataset {
  double origin_lon = 0.0;  // SW corner, degrees
  double origin_lat = 0.0;
  double cell_size = kCellSizeDeg;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  EpochHour start_time = 0;
  std::uint32_t n_hours = 0;
  /// hour-major, then rows south->north, then columns west->east.
  std::vector<float> values;
  /// One flag per cell (row-major); true = no data. Masked cells hold 0.
  std::vector<bool> missing;

  std::size_t cells() const { return std::size_t{width} * height; }
  std::size_t index(std::size_t hour, std::size_t row, std::size_t col) const {
    return (hour * height + row) * width + col;
  }
  float at(std::size_t hour, std::size_t row, std::size_t col) const {
    return values[index(hour, row, col)];
  }
  bool is_missing(std::size_t row, std::size_t col) const { return missing[row * width + col]; }

  /// Throws DataError when any invariant is violated.
  void validate() const;

  bool operator==(const GridDataset&) const = default;
};

struct RegionIndex {
  int x = 1;
  int y = 1;
  auto operator<=>(const RegionIndex&) const = default;
};

struct PeriodIndex {
  int k = 0;
  int first_year(int base_year) const { return base_year + kPeriodYears * k; }
  int last_year(int base_year) const { return first_year(base_year) + kPeriodYears - 1; }
  static PeriodIndex of_year(int year, int base_year);
  auto operator<=>(const PeriodIndex&) const = default;
};

struct ConditionLabel {
  unsigned month = 1;  // 1..12
  RegionIndex region;
  PeriodIndex period;

  /// 12 one-hot month entries, then x, y, then k (unscaled).
  std::array<float, kLabelDim> raw() const;
  /// Inverse of raw(); throws DataError when the one-hot block is invalid.
  static ConditionLabel from_raw(const std::array<float, kLabelDim>& raw);

  auto operator<=>(const ConditionLabel&) const = default;
};

std::string to_string(const ConditionLabel& label);

/// One day of hourly 8x8 frames, hour-major. Units depend on context:
/// Kelvin after aggregation, standard units after standardize().
struct TemperatureSample {
  std::vector<double> values = std::vector<double>(kSampleValues, 0.0);
  ConditionLabel label;

  double at(std::size_t hour, std::size_t row, std::size_t col) const {
    return values[hour * kPixelsPerFrame + row * kRegionCells + col];
  }
  double& at(std::size_t hour, std::size_t row, std::size_t col) {
    return values[hour * kPixelsPerFrame + row * kRegionCells + col];
  }
  bool operator==(const TemperatureSample&) const = default;
};

struct SampleBucket {
  ConditionLabel label;
  std::vector<TemperatureSample> samples;
  bool operator==(const SampleBucket&) const = default;
};

/// Hourly 8x8 stream for one region, hour-major.
struct RegionStream {
  RegionIndex region;
  EpochHour start_time = 0;
  std::size_t n_hours = 0;
  std::vector<double> values;
};

struct SpatialAggregation {
  std::map<RegionIndex, RegionStream> regions;
  /// Blocks that contained at least one missing cell.
  std::vector<RegionIndex> excluded;
  std::size_t dropped_columns = 0;
  std::size_t dropped_rows = 0;
};

struct TemporalAggregation {
  std::vector<SampleBucket> buckets;  // ordered by label
  std::size_t dropped_leading_hours = 0;
  std::size_t dropped_trailing_hours = 0;
  std::size_t complete_days = 0;
};

struct StandardizationStats {
  double mean = 0.0;
  double std = 1.0;  // population convention

  double apply(double kelvin) const { return (kelvin - mean) / std; }
  double invert(double standard) const { return standard * std + mean; }
};

enum class GridFormat { binary, csv };

GridDataset ingest_grid(const std::string& path, GridFormat format);
void export_grid(const GridDataset& ds, const std::string& path);

SampleBucket ingest_bucket(const std::string& path);
/// Zero-sample buckets are allowed on disk (empty sampling requests).
void export_bucket(const SampleBucket& bucket, const std::string& path);
/// Bytes preceding the payload in a TBKT file.
std::size_t bucket_header_bytes();

SpatialAggregation aggregate_spatial(const GridDataset& ds);
TemporalAggregation aggregate_temporal(const RegionStream& stream, int base_year);
TemporalAggregation aggregate_temporal(const SpatialAggregation& regions, int base_year);

/// Computes stats over every value when `stats` is empty, otherwise applies
/// the supplied ones. Throws DataError("degenerate dataset") on zero spread.
std::pair<std::vector<SampleBucket>, StandardizationStats> standardize(
    const std::vector<SampleBucket>& buckets, std::optional<StandardizationStats> stats = std::nullopt);
std::vector<SampleBucket> destandardize(const std::vector<SampleBucket>& buckets,
                                        const StandardizationStats& stats);

/// Canonical file name for a bucket, e.g. "bucket_m01_x1_y1_k0.tbkt".
std::string bucket_file_name(const ConditionLabel& label);

}  // namespace tempgen
