// SPDX-License-Identifier: Apache-2.0
//
// Bit-accurate functional model of ReRAM crossbars.
//
// A signed integer matrix is stored as a differential pair of nonnegative
// arrays, each split into cell_bits-wide digit planes. The physical columns
// of a programmed matrix interleave (logical column, plane, sign) so that
// one logical column occupies planes * 2 adjacent bit lines; rows and
// physical columns are then tiled onto xbar_size x xbar_size arrays.
//
// Inputs are streamed as dac_bits-wide slices of their two's-complement
// encoding. Every analog column (or row) sum passes through an ideal ADC
// that saturates at 2^adc_bits - 1; shift-and-add and the differential
// subtraction happen digitally.
#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

namespace pimdse::crossbar {

/// Dense row-major integer matrix.
struct IntMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> data;

  IntMatrix() = default;
  IntMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}
  static IntMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  std::int64_t& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::int64_t operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  IntMatrix transposed() const;
  bool operator==(const IntMatrix&) const = default;
};

struct CrossbarSpec {
  int rows = 16;
  int cols = 16;
  int cell_bits = 1;
  bool operator==(const CrossbarSpec&) const = default;
};

enum class Orientation { Normal, TransposedWrite };

/// One physical array of unsigned cells in [0, 2^cell_bits - 1].
struct ProgrammedCrossbar {
  CrossbarSpec spec;
  Orientation orientation = Orientation::Normal;
  std::vector<std::uint8_t> cells;  // rows x cols, row-major

  int cell(int r, int c) const { return cells[static_cast<std::size_t>(r) * spec.cols + c]; }

  /// Word-line drive: per-column analog sums of digit * cell.
  std::vector<std::int64_t> column_sums(std::span<const int> row_digits) const;
  /// Bit-line drive (transposed read): per-row sums of digit * cell.
  std::vector<std::int64_t> row_sums(std::span<const int> col_digits) const;
};

struct ConverterSpec {
  int dac_bits = 1;
  int adc_bits = 8;
  int adcs_per_xbar = 1;  // cost/latency only
};

struct SaturationLog {
  std::int64_t clip_count = 0;
  std::int64_t max_overflow = 0;  // largest (analog_sum - full_scale) seen
  std::int64_t conversions = 0;

  void merge(const SaturationLog& other);
  bool clean() const { return clip_count == 0; }
};

struct AdcReading {
  std::int64_t value = 0;
  bool clipped = false;
};

/// Ideal saturating ADC. Throws std::invalid_argument for negative input.
AdcReading adc_quantize(std::int64_t analog_sum, int adc_bits);

/// Number of slice periods for an a_bits input at dac_bits per slice.
constexpr int num_slices(int a_bits, int dac_bits) {
  return (a_bits + dac_bits - 1) / dac_bits;
}

/// Number of cell planes for a w_bits value at cell_bits per cell.
constexpr int num_planes(int w_bits, int cell_bits) {
  return (w_bits + cell_bits - 1) / cell_bits;
}

/// One drive phase: unsigned per-element digits and their signed place value.
struct InputSlice {
  std::vector<int> digits;
  std::int64_t place = 1;
};

/// Two's-complement slicing of `x` over ceil(a_bits / dac_bits) slices. The
/// low slices are unsigned digits; the most significant slice is a signed
/// digit and is driven as a positive phase and a negative phase (negative
/// place value). Empty most-significant phases are omitted. Throws
/// OutOfRange unless |x_i| < 2^(a_bits - 1).
std::vector<InputSlice> slice_inputs(std::span<const std::int64_t> x, int a_bits,
                                     int dac_bits);

struct TileMeta {
  int rows = 0;  // logical rows (word lines of the normal orientation)
  int cols = 0;  // logical columns
  int w_bits = 0;
  int cell_bits = 1;
  int planes = 0;
  int xbar_size = 16;
  int row_tiles = 0;
  int col_tiles = 0;
  Orientation orientation = Orientation::Normal;

  int physical_cols() const { return cols * planes * 2; }
};

struct ColumnSlot {
  int logical_col = 0;
  int plane = 0;
  bool negative = false;
};

/// A signed matrix programmed onto row_tiles x col_tiles arrays.
class ProgrammedMatrix {
 public:
  ProgrammedMatrix(TileMeta meta, std::vector<ProgrammedCrossbar> tiles);

  const TileMeta& meta() const { return meta_; }
  const std::vector<ProgrammedCrossbar>& tiles() const { return tiles_; }
  const ProgrammedCrossbar& tile(int row_tile, int col_tile) const {
    return tiles_[static_cast<std::size_t>(row_tile) * meta_.col_tiles + col_tile];
  }

  static ColumnSlot slot(int physical_col, int planes);

  /// Logical digit plane k (LSB first) of the positive or negative part.
  IntMatrix plane(bool negative, int k) const;

  /// Sum over planes of 2^(k * cell_bits) * (plane+ - plane-).
  IntMatrix reconstruct() const;

 private:
  TileMeta meta_;
  std::vector<ProgrammedCrossbar> tiles_;
};

/// Programs `m` (rows = word lines, cols = outputs of a normal read) as a
/// differential, bit-sliced, tiled matrix. spec.rows must equal spec.cols.
/// Throws OutOfRange unless |m_ij| < 2^(w_bits - 1) and 2 <= w_bits <= 16.
ProgrammedMatrix program_signed(const IntMatrix& m, int w_bits, const CrossbarSpec& spec,
                                Orientation orientation = Orientation::Normal);

struct MvmResult {
  std::vector<std::int64_t> values;
  SaturationLog log;
};

/// y_c = sum_r x_r * m_rc through the analog path. Throws ShapeMismatch when
/// x.size() != rows.
MvmResult mvm(const ProgrammedMatrix& m, std::span<const std::int64_t> x, int a_bits,
              const ConverterSpec& conv);

/// Transposed read: y_r = sum_c x_c * m_rc, inputs driven on bit lines.
MvmResult mvm_transposed(const ProgrammedMatrix& m, std::span<const std::int64_t> x,
                         int a_bits, const ConverterSpec& conv);

/// Programs vector j into logical column j of a transposed-write array
/// (element i at row i). Throws CapacityExceeded when a vector is longer than
/// spec.rows or there are more vectors than spec.cols, OutOfRange when a
/// value does not fit value_bits.
ProgrammedMatrix transposed_program(const std::vector<std::vector<std::int64_t>>& vectors,
                                    int value_bits, const CrossbarSpec& spec);

/// All-ones drive on the bit lines of a transposed-write array: per-row sums
/// over the programmed vectors.
MvmResult ones_read(const ProgrammedMatrix& m, const ConverterSpec& conv);

/// Bit-serial squaring: the stored operand is ANDed with each input bit and
/// the partial products are shift-accumulated. Throws OutOfRange unless
/// v_i < 2^v_bits.
std::vector<std::uint64_t> mbsa_square(std::span<const std::uint64_t> v, int v_bits);

nlohmann::json dump_json(const ProgrammedMatrix& m);

}  // namespace pimdse::crossbar
