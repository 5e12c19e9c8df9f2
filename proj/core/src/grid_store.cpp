#include "tempgen/grid_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tempgen/binary_io.hpp"
#include "tempgen/error.hpp"

namespace tempgen {

namespace {

constexpr std::string_view kGridMagic = "TGRD";
constexpr std::string_view kBucketMagic = "TBKT";
constexpr std::uint16_t kGridVersion = 1;
constexpr std::uint16_t kBucketVersion = 1;
constexpr std::size_t kGridHeaderBytes = 4 + 2 + 3 * 8 + 3 * 4 + 8;

std::string cell_name(std::size_t row, std::size_t col) {
  return "cell (row " + std::to_string(row) + ", col " + std::to_string(col) + ")";
}

void check_kelvin(double v, std::size_t hour, std::size_t row, std::size_t col) {
  if (!std::isfinite(v) || v < kMinKelvin || v > kMaxKelvin) {
    std::ostringstream os;
    os << "temperature " << v << " K out of range [150, 350] at " << cell_name(row, col) << ", hour " << hour;
    throw DataError(os.str());
  }
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::uintmax_t file_size(const std::string& path) {
  std::error_code ec;
  const auto n = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path + ": " + ec.message());
  return n;
}

GridDataset ingest_grid_binary(const std::string& path) {
  auto in = open_for_read(path);
  io::expect_magic(in, kGridMagic, path);
  const auto version = io::read_u16(in, "grid version");
  if (version != kGridVersion) {
    throw DataError("malformed header: unsupported grid version " + std::to_string(version));
  }
  GridDataset ds;
  ds.origin_lon = io::read_f64(in, "grid header");
  ds.origin_lat = io::read_f64(in, "grid header");
  ds.cell_size = io::read_f64(in, "grid header");
  ds.width = io::read_u32(in, "grid header");
  ds.height = io::read_u32(in, "grid header");
  ds.n_hours = io::read_u32(in, "grid header");
  ds.start_time = static_cast<EpochHour>(io::read_u64(in, "grid header"));
  if (ds.width == 0 || ds.height == 0 || ds.n_hours == 0) {
    throw DataError("malformed header: zero grid dimension");
  }
  const std::uintmax_t cells = ds.cells();
  const std::uintmax_t mask_bytes = (cells + 7) / 8;
  const std::uintmax_t expected = kGridHeaderBytes + mask_bytes + cells * ds.n_hours * sizeof(float);
  if (file_size(path) != expected) {
    throw DataError("payload length mismatch: " + path + " holds " + std::to_string(file_size(path)) +
                    " bytes, header implies " + std::to_string(expected));
  }
  std::vector<char> mask(mask_bytes);
  io::read_bytes(in, mask, "grid mask");
  ds.missing.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) ds.missing[i] = (static_cast<unsigned char>(mask[i / 8]) >> (i % 8)) & 1u;
  ds.values.resize(cells * ds.n_hours);
  for (auto& v : ds.values) v = io::read_f32(in, "grid payload");
  ds.validate();
  return ds;
}

struct CsvRow {
  EpochHour time;
  double lon, lat, kelvin;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::size_t grid_offset(double coord, double origin, double cell, const char* axis) {
  const double pos = (coord - origin) / cell;
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) > 1e-6) {
    throw DataError(std::string("irregular ") + axis + " coordinate " + std::to_string(coord));
  }
  return static_cast<std::size_t>(rounded);
}

GridDataset ingest_grid_csv(const std::string& path) {
  auto in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty csv input " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time_iso8601,lon,lat,kelvin") {
    throw DataError("malformed header: expected 'time_iso8601,lon,lat,kelvin', got '" + line + "'");
  }
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw DataError("line " + std::to_string(line_no) + ": expected 4 fields");
    rows.push_back({parse_iso8601_hour(f[0]), parse_double(f[1], line_no), parse_double(f[2], line_no),
                    parse_double(f[3], line_no)});
  }
  if (rows.empty()) throw DataError("csv input " + path + " has no data rows");

  std::set<double> lon_set, lat_set;
  EpochHour t0 = rows.front().time, t1 = rows.front().time;
  for (const auto& r : rows) {
    lon_set.insert(r.lon);
    lat_set.insert(r.lat);
    t0 = std::min(t0, r.time);
    t1 = std::max(t1, r.time);
  }
  const std::vector<double> lons(lon_set.begin(), lon_set.end());
  const std::vector<double> lats(lat_set.begin(), lat_set.end());
  // Gaps between listed coordinates are absent cells, so the spacing is fixed
  // rather than inferred.
  const double cell = kCellSizeDeg;

  // CSV coordinates are cell centres; the dataset origin is the SW corner.
  GridDataset ds;
  ds.cell_size = cell;
  ds.origin_lon = lons.front() - cell / 2;
  ds.origin_lat = lats.front() - cell / 2;
  ds.width = static_cast<std::uint32_t>(grid_offset(lons.back(), lons.front(), cell, "lon") + 1);
  ds.height = static_cast<std::uint32_t>(grid_offset(lats.back(), lats.front(), cell, "lat") + 1);
  ds.start_time = t0;
  ds.n_hours = static_cast<std::uint32_t>(t1 - t0 + 1);
  ds.values.assign(ds.cells() * ds.n_hours, 0.0f);
  std::vector<std::uint32_t> seen(ds.values.size(), 0);
  for (const auto& r : rows) {
    const std::size_t col = grid_offset(r.lon, lons.front(), cell, "lon");
    const std::size_t row = grid_offset(r.lat, lats.front(), cell, "lat");
    const std::size_t hour = static_cast<std::size_t>(r.time - t0);
    check_kelvin(r.kelvin, hour, row, col);
    const std::size_t idx = ds.index(hour, row, col);
    if (seen[idx]++) {
      throw DataError("duplicate entry for " + cell_name(row, col) + " at " + format_iso8601_hour(r.time));
    }
    ds.values[idx] = static_cast<float>(r.kelvin);
  }
  // A cell absent at every hour is no-data; partial coverage is an error.
  ds.missing.assign(ds.cells(), false);
  for (std::size_t row = 0; row < ds.height; ++row) {
    for (std::size_t col = 0; col < ds.width; ++col) {
      std::size_t present = 0;
      for (std::size_t h = 0; h < ds.n_hours; ++h) present += seen[ds.index(h, row, col)];
      if (present == 0) {
        ds.missing[row * ds.width + col] = true;
      } else if (present != ds.n_hours) {
        throw DataError("missing values for " + cell_name(row, col) + ": " + std::to_string(present) + " of " +
                        std::to_string(ds.n_hours) + " hours present");
      }
    }
  }
  ds.validate();
  return ds;
}

}  // namespace

void GridDataset::validate() const {
  if (width == 0 || height == 0 || n_hours == 0) throw DataError("grid dimensions must be positive");
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw DataError("cell size must be positive");
  if (values.size() != cells() * n_hours) {
    throw DataError("payload length mismatch: " + std::to_string(values.size()) + " values for " +
                    std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(n_hours));
  }
  if (missing.size() != cells()) throw DataError("mask size does not match grid");
  for (std::size_t h = 0; h < n_hours; ++h) {
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const float v = at(h, r, c);
        if (is_missing(r, c)) {
          if (v != 0.0f) throw DataError("masked " + cell_name(r, c) + " must hold 0");
        } else {
          check_kelvin(v, h, r, c);
        }
      }
    }
  }
}

PeriodIndex PeriodIndex::of_year(int year, int base_year) {
  if (year < base_year) {
    throw DataError("year " + std::to_string(year) + " precedes base year " + std::to_string(base_year));
  }
  return PeriodIndex{(year - base_year) / kPeriodYears};
}

std::array<float, kLabelDim> ConditionLabel::raw() const {
  if (month < 1 || month > 12) throw DataError("month " + std::to_string(month) + " outside 1..12");
  std::array<float, kLabelDim> out{};
  out[month - 1] = 1.0f;
  out[12] = static_cast<float>(region.x);
  out[13] = static_cast<float>(region.y);
  out[14] = static_cast<float>(period.k);
  return out;
}

ConditionLabel ConditionLabel::from_raw(const std::array<float, kLabelDim>& raw) {
  ConditionLabel label;
  int hot = 0;
  for (unsigned m = 0; m < 12; ++m) {
    if (raw[m] == 1.0f) {
      ++hot;
      label.month = m + 1;
    } else if (raw[m] != 0.0f) {
      throw DataError("invalid month one-hot: entry " + std::to_string(m) + " is neither 0 nor 1");
    }
  }
  if (hot != 1) throw DataError("invalid month one-hot: " + std::to_string(hot) + " entries set");
  const auto integral = [](float v) { return std::isfinite(v) && v == std::floor(v); };
  if (!integral(raw[12]) || !integral(raw[13]) || raw[12] < 1 || raw[13] < 1) {
    throw DataError("region coordinates must be integers >= 1");
  }
  if (!integral(raw[14]) || raw[14] < 0) throw DataError("period index must be an integer >= 0");
  label.region = {static_cast<int>(raw[12]), static_cast<int>(raw[13])};
  label.period = {static_cast<int>(raw[14])};
  return label;
}

std::string to_string(const ConditionLabel& label) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "month=%u region=(%d,%d) k=%d", label.month, label.region.x, label.region.y,
                label.period.k);
  return buf;
}

GridDataset ingest_grid(const std::string& path, GridFormat format) {
  return format == GridFormat::binary ? ingest_grid_binary(path) : ingest_grid_csv(path);
}

void export_grid(const GridDataset& ds, const std::string& path) {
  ds.validate();
  auto out = open_for_write(path);
  io::write_magic(out, kGridMagic);
  io::write_u16(out, kGridVersion);
  io::write_f64(out, ds.origin_lon);
  io::write_f64(out, ds.origin_lat);
  io::write_f64(out, ds.cell_size);
  io::write_u32(out, ds.width);
  io::write_u32(out, ds.height);
  io::write_u32(out, ds.n_hours);
  io::write_u64(out, static_cast<std::uint64_t>(ds.start_time));
  std::vector<char> mask((ds.cells() + 7) / 8, 0);
  for (std::size_t i = 0; i < ds.cells(); ++i) {
    if (ds.missing[i]) mask[i / 8] = static_cast<char>(mask[i / 8] | (1u << (i % 8)));
  }
  out.write(mask.data(), static_cast<std::streamsize>(mask.size()));
  for (float v : ds.values) io::write_f32(out, v);
  finish_write(out, path);
}

std::size_t bucket_header_bytes() { return 4 + 2 + kLabelDim * 4 + 4; }

SampleBucket ingest_bucket(const std::string& path) {
  auto in = open_for_read(path);
  io::expect_magic(in, kBucketMagic, path);
  const auto version = io::read_u16(in, "bucket version");
  if (version != kBucketVersion) {
    throw DataError("malformed header: unsupported bucket version " + std::to_string(version));
  }
  std::array<float, kLabelDim> raw{};
  for (auto& v : raw) v = io::read_f32(in, "bucket label");
  SampleBucket bucket;
  bucket.label = ConditionLabel::from_raw(raw);
  const std::uint32_t count = io::read_u32(in, "bucket sample count");
  const std::uintmax_t expected = bucket_header_bytes() + std::uintmax_t{count} * kSampleValues * sizeof(float);
  if (file_size(path) != expected) {
    throw DataError("payload length mismatch: " + path + " holds " + std::to_string(file_size(path)) +
                    " bytes, header implies " + std::to_string(expected));
  }
  bucket.samples.resize(count);
  for (auto& s : bucket.samples) {
    s.label = bucket.label;
    for (auto& v : s.values) v = io::read_f32(in, "bucket payload");
  }
  return bucket;
}

void export_bucket(const SampleBucket& bucket, const std::string& path) {
  for (const auto& s : bucket.samples) {
    if (s.label != bucket.label) {
      throw DataError("sample label " + to_string(s.label) + " differs from bucket label " + to_string(bucket.label));
    }
    if (s.values.size() != kSampleValues) throw DataError("sample does not hold 24x8x8 values");
  }
  auto out = open_for_write(path);
  io::write_magic(out, kBucketMagic);
  io::write_u16(out, kBucketVersion);
  for (float v : bucket.label.raw()) io::write_f32(out, v);
  io::write_u32(out, static_cast<std::uint32_t>(bucket.samples.size()));
  for (const auto& s : bucket.samples) {
    for (double v : s.values) io::write_f32(out, static_cast<float>(v));
  }
  finish_write(out, path);
}

SpatialAggregation aggregate_spatial(const GridDataset& ds) {
  if (ds.width < kRegionCells || ds.height < kRegionCells) {
    throw DataError("grid " + std::to_string(ds.width) + "x" + std::to_string(ds.height) +
                    " is smaller than one 8x8 region");
  }
  if (std::abs(ds.cell_size - kCellSizeDeg) > 1e-9) {
    throw DataError("cell size " + std::to_string(ds.cell_size) + " differs from 0.125 degrees");
  }
  SpatialAggregation out;
  const std::size_t nx = ds.width / kRegionCells;
  const std::size_t ny = ds.height / kRegionCells;
  out.dropped_columns = ds.width - nx * kRegionCells;
  out.dropped_rows = ds.height - ny * kRegionCells;
  for (std::size_t by = 0; by < ny; ++by) {
    for (std::size_t bx = 0; bx < nx; ++bx) {
      const RegionIndex region{static_cast<int>(bx + 1), static_cast<int>(by + 1)};
      bool complete = true;
      for (std::size_t r = 0; r < kRegionCells && complete; ++r) {
        for (std::size_t c = 0; c < kRegionCells; ++c) {
          if (ds.is_missing(by * kRegionCells + r, bx * kRegionCells + c)) {
            complete = false;
            break;
          }
        }
      }
      if (!complete) {
        out.excluded.push_back(region);
        continue;
      }
      RegionStream stream;
      stream.region = region;
      stream.start_time = ds.start_time;
      stream.n_hours = ds.n_hours;
      stream.values.reserve(ds.n_hours * kPixelsPerFrame);
      for (std::size_t h = 0; h < ds.n_hours; ++h) {
        for (std::size_t r = 0; r < kRegionCells; ++r) {
          for (std::size_t c = 0; c < kRegionCells; ++c) {
            stream.values.push_back(ds.at(h, by * kRegionCells + r, bx * kRegionCells + c));
          }
        }
      }
      out.regions.emplace(region, std::move(stream));
    }
  }
  return out;
}

TemporalAggregation aggregate_temporal(const RegionStream& stream, int base_year) {
  if (stream.values.size() != stream.n_hours * kPixelsPerFrame) {
    throw DataError("region stream holds " + std::to_string(stream.values.size()) + " values for " +
                    std::to_string(stream.n_hours) + " hours");
  }
  TemporalAggregation out;
  const EpochHour offset = ((stream.start_time % 24) + 24) % 24;
  const std::size_t lead = std::min<std::size_t>(offset == 0 ? 0 : 24 - offset, stream.n_hours);
  out.dropped_leading_hours = lead;
  out.complete_days = (stream.n_hours - lead) / kHoursPerDay;
  out.dropped_trailing_hours = stream.n_hours - lead - out.complete_days * kHoursPerDay;

  std::map<ConditionLabel, SampleBucket> buckets;
  for (std::size_t d = 0; d < out.complete_days; ++d) {
    const std::size_t first_hour = lead + d * kHoursPerDay;
    const CivilHour day = to_civil(stream.start_time + static_cast<EpochHour>(first_hour));
    ConditionLabel label{day.month, stream.region, PeriodIndex::of_year(day.year, base_year)};
    TemperatureSample sample;
    sample.label = label;
    std::copy_n(stream.values.begin() + static_cast<std::ptrdiff_t>(first_hour * kPixelsPerFrame), kSampleValues,
                sample.values.begin());
    auto& bucket = buckets[label];
    bucket.label = label;
    bucket.samples.push_back(std::move(sample));
  }
  for (auto& [label, bucket] : buckets) out.buckets.push_back(std::move(bucket));
  return out;
}

TemporalAggregation aggregate_temporal(const SpatialAggregation& regions, int base_year) {
  TemporalAggregation out;
  bool first = true;
  for (const auto& [index, stream] : regions.regions) {
    auto part = aggregate_temporal(stream, base_year);
    if (first) {
      out.dropped_leading_hours = part.dropped_leading_hours;
      out.dropped_trailing_hours = part.dropped_trailing_hours;
      out.complete_days = part.complete_days;
      first = false;
    }
    for (auto& b : part.buckets) out.buckets.push_back(std::move(b));
  }
  std::sort(out.buckets.begin(), out.buckets.end(),
            [](const SampleBucket& a, const SampleBucket& b) { return a.label < b.label; });
  return out;
}

std::pair<std::vector<SampleBucket>, StandardizationStats> standardize(
    const std::vector<SampleBucket>& buckets, std::optional<StandardizationStats> stats) {
  if (buckets.empty()) throw DataError("standardize: no buckets");
  if (!stats) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& b : buckets) {
      for (const auto& s : b.samples) {
        for (double v : s.values) sum += v;
        n += s.values.size();
      }
    }
    if (n == 0) throw DataError("degenerate dataset: no values");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& b : buckets) {
      for (const auto& s : b.samples) {
        for (double v : s.values) ss += (v - mean) * (v - mean);
      }
    }
    stats = StandardizationStats{mean, std::sqrt(ss / static_cast<double>(n))};
  }
  if (!(stats->std > 0.0) || !std::isfinite(stats->std) || !std::isfinite(stats->mean)) {
    throw DataError("degenerate dataset: standard deviation is zero");
  }
  std::vector<SampleBucket> out = buckets;
  for (auto& b : out) {
    for (auto& s : b.samples) {
      for (auto& v : s.values) v = stats->apply(v);
    }
  }
  return {std::move(out), *stats};
}

std::vector<SampleBucket> destandardize(const std::vector<SampleBucket>& buckets, const StandardizationStats& stats) {
  std::vector<SampleBucket> out = buckets;
  for (auto& b : out) {
    for (auto& s : b.samples) {
      for (auto& v : s.values) v = stats.invert(v);
    }
  }
  return out;
}

std::string bucket_file_name(const ConditionLabel& label) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "bucket_m%02u_x%d_y%d_k%d.tbkt", label.month, label.region.x, label.region.y,
                label.period.k);
  return buf;
}

}  // namespace tempgen
