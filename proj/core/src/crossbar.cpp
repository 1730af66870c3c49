// SPDX-License-Identifier: Apache-2.0
#include "pimdse/crossbar.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "pimdse/errors.hpp"

namespace pimdse::crossbar {
namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

std::string orientation_name(Orientation o) {
  return o == Orientation::Normal ? "normal" : "transposed-write";
}

// Accumulates one ADC conversion into the log and returns the digital value.
std::int64_t convert(std::int64_t analog, int adc_bits, SaturationLog& log) {
  const AdcReading r = adc_quantize(analog, adc_bits);
  ++log.conversions;
  if (r.clipped) {
    ++log.clip_count;
    log.max_overflow = std::max(log.max_overflow, analog - r.value);
  }
  return r.value;
}

}  // namespace

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  IntMatrix m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows; ++r) {
    if (static_cast<int>(rows[r].size()) != m.cols) {
      throw ShapeMismatch("IntMatrix::from_rows: ragged rows");
    }
    for (int c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

IntMatrix IntMatrix::transposed() const {
  IntMatrix t(cols, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::vector<std::int64_t> ProgrammedCrossbar::column_sums(std::span<const int> row_digits) const {
  std::vector<std::int64_t> sums(spec.cols, 0);
  const int n = std::min<int>(spec.rows, static_cast<int>(row_digits.size()));
  for (int r = 0; r < n; ++r) {
    const int d = row_digits[r];
    if (d == 0) continue;
    const std::uint8_t* row = &cells[static_cast<std::size_t>(r) * spec.cols];
    for (int c = 0; c < spec.cols; ++c) sums[c] += static_cast<std::int64_t>(d) * row[c];
  }
  return sums;
}

std::vector<std::int64_t> ProgrammedCrossbar::row_sums(std::span<const int> col_digits) const {
  std::vector<std::int64_t> sums(spec.rows, 0);
  const int n = std::min<int>(spec.cols, static_cast<int>(col_digits.size()));
  for (int r = 0; r < spec.rows; ++r) {
    const std::uint8_t* row = &cells[static_cast<std::size_t>(r) * spec.cols];
    std::int64_t s = 0;
    for (int c = 0; c < n; ++c) s += static_cast<std::int64_t>(col_digits[c]) * row[c];
    sums[r] = s;
  }
  return sums;
}

void SaturationLog::merge(const SaturationLog& o) {
  clip_count += o.clip_count;
  max_overflow = std::max(max_overflow, o.max_overflow);
  conversions += o.conversions;
}

AdcReading adc_quantize(std::int64_t analog_sum, int adc_bits) {
  if (analog_sum < 0) throw std::invalid_argument("adc_quantize: negative analog sum");
  const std::int64_t full_scale = (std::int64_t{1} << adc_bits) - 1;
  if (analog_sum > full_scale) return {full_scale, true};
  return {analog_sum, false};
}

std::vector<InputSlice> slice_inputs(std::span<const std::int64_t> x, int a_bits, int dac_bits) {
  if (a_bits < 1 || a_bits > 32 || dac_bits < 1) {
    throw std::invalid_argument("slice_inputs: bad a_bits/dac_bits");
  }
  const std::int64_t bound = std::int64_t{1} << (a_bits - 1);
  for (std::int64_t v : x) {
    if (v <= -bound || v >= bound) {
      throw OutOfRange("input " + std::to_string(v) + " does not fit " +
                       std::to_string(a_bits) + " signed bits");
    }
  }
  const int slices = num_slices(a_bits, dac_bits);
  const int total_bits = slices * dac_bits;
  const std::uint64_t word_mask =
      total_bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << total_bits) - 1;
  const int digit_mask = (1 << dac_bits) - 1;
  const std::size_t n = x.size();

  std::vector<InputSlice> out;
  for (int k = 0; k < slices - 1; ++k) {
    InputSlice s;
    s.place = std::int64_t{1} << (k * dac_bits);
    s.digits.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t u = static_cast<std::uint64_t>(x[i]) & word_mask;
      s.digits[i] = static_cast<int>((u >> (k * dac_bits)) & digit_mask);
    }
    out.push_back(std::move(s));
  }

  // Most significant slice: signed digit in [-2^(d-1), 2^(d-1) - 1].
  const int top_shift = (slices - 1) * dac_bits;
  InputSlice pos, neg;
  pos.place = std::int64_t{1} << top_shift;
  neg.place = -pos.place;
  pos.digits.assign(n, 0);
  neg.digits.assign(n, 0);
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t u = static_cast<std::uint64_t>(x[i]) & word_mask;
    int top = static_cast<int>((u >> top_shift) & digit_mask);
    if (top >= (1 << (dac_bits - 1))) top -= (1 << dac_bits);
    if (top > 0) {
      pos.digits[i] = top;
      any_pos = true;
    } else if (top < 0) {
      neg.digits[i] = -top;
      any_neg = true;
    }
  }
  if (any_pos) out.push_back(std::move(pos));
  if (any_neg) out.push_back(std::move(neg));
  return out;
}

ProgrammedMatrix::ProgrammedMatrix(TileMeta meta, std::vector<ProgrammedCrossbar> tiles)
    : meta_(meta), tiles_(std::move(tiles)) {}

ColumnSlot ProgrammedMatrix::slot(int physical_col, int planes) {
  ColumnSlot s;
  s.negative = (physical_col % 2) == 1;
  const int lane = physical_col / 2;
  s.plane = lane % planes;
  s.logical_col = lane / planes;
  return s;
}

IntMatrix ProgrammedMatrix::plane(bool negative, int k) const {
  IntMatrix out(meta_.rows, meta_.cols);
  const int x = meta_.xbar_size;
  for (int r = 0; r < meta_.rows; ++r) {
    for (int c = 0; c < meta_.cols; ++c) {
      const int p = (c * meta_.planes + k) * 2 + (negative ? 1 : 0);
      out(r, c) = tile(r / x, p / x).cell(r % x, p % x);
    }
  }
  return out;
}

IntMatrix ProgrammedMatrix::reconstruct() const {
  IntMatrix out(meta_.rows, meta_.cols);
  for (int k = 0; k < meta_.planes; ++k) {
    const std::int64_t w = std::int64_t{1} << (k * meta_.cell_bits);
    const IntMatrix pos = plane(false, k);
    const IntMatrix neg = plane(true, k);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] += w * (pos.data[i] - neg.data[i]);
    }
  }
  return out;
}

ProgrammedMatrix program_signed(const IntMatrix& m, int w_bits, const CrossbarSpec& spec,
                                Orientation orientation) {
  if (spec.rows != spec.cols || spec.rows < 1) {
    throw std::invalid_argument("program_signed: crossbars must be square");
  }
  if (spec.cell_bits < 1 || spec.cell_bits > 8) {
    throw std::invalid_argument("program_signed: cell_bits out of range");
  }
  if (w_bits < 2 || w_bits > 16) {
    throw OutOfRange("program_signed: w_bits must be in [2, 16]");
  }
  if (m.rows < 1 || m.cols < 1) throw ShapeMismatch("program_signed: empty matrix");
  const std::int64_t bound = std::int64_t{1} << (w_bits - 1);
  for (std::int64_t v : m.data) {
    if (v <= -bound || v >= bound) {
      throw OutOfRange("weight " + std::to_string(v) + " does not fit " +
                       std::to_string(w_bits) + " signed bits");
    }
  }

  TileMeta meta;
  meta.rows = m.rows;
  meta.cols = m.cols;
  meta.w_bits = w_bits;
  meta.cell_bits = spec.cell_bits;
  meta.planes = num_planes(w_bits, spec.cell_bits);
  meta.xbar_size = spec.rows;
  meta.row_tiles = ceil_div(m.rows, spec.rows);
  meta.col_tiles = ceil_div(meta.physical_cols(), spec.cols);
  meta.orientation = orientation;

  ProgrammedCrossbar blank{spec, orientation,
                           std::vector<std::uint8_t>(static_cast<std::size_t>(spec.rows) * spec.cols, 0)};
  std::vector<ProgrammedCrossbar> tiles(static_cast<std::size_t>(meta.row_tiles) * meta.col_tiles, blank);

  const int x = spec.rows;
  const std::int64_t digit_mask = (std::int64_t{1} << spec.cell_bits) - 1;
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      const std::int64_t v = m(r, c);
      const std::int64_t mag = v < 0 ? -v : v;
      const bool negative = v < 0;
      for (int k = 0; k < meta.planes; ++k) {
        const int digit = static_cast<int>((mag >> (k * spec.cell_bits)) & digit_mask);
        const int p = (c * meta.planes + k) * 2 + (negative ? 1 : 0);
        auto& t = tiles[static_cast<std::size_t>(r / x) * meta.col_tiles + p / x];
        t.cells[static_cast<std::size_t>(r % x) * spec.cols + p % x] = static_cast<std::uint8_t>(digit);
      }
    }
  }
  return ProgrammedMatrix(meta, std::move(tiles));
}

MvmResult mvm(const ProgrammedMatrix& m, std::span<const std::int64_t> x, int a_bits,
              const ConverterSpec& conv) {
  const TileMeta& meta = m.meta();
  if (static_cast<int>(x.size()) != meta.rows) {
    throw ShapeMismatch("mvm: input length " + std::to_string(x.size()) +
                        " != rows " + std::to_string(meta.rows));
  }
  MvmResult res;
  res.values.assign(meta.cols, 0);
  const auto slices = slice_inputs(x, a_bits, conv.dac_bits);
  const int xs = meta.xbar_size;
  const int phys = meta.physical_cols();

  for (int rt = 0; rt < meta.row_tiles; ++rt) {
    const int r0 = rt * xs;
    const int r1 = std::min(meta.rows, r0 + xs);
    for (const InputSlice& s : slices) {
      std::span<const int> digits(s.digits.data() + r0, static_cast<std::size_t>(r1 - r0));
      for (int ct = 0; ct < meta.col_tiles; ++ct) {
        const auto sums = m.tile(rt, ct).column_sums(digits);
        const int p0 = ct * xs;
        const int p1 = std::min(phys, p0 + xs);
        for (int p = p0; p < p1; ++p) {
          const std::int64_t v = convert(sums[p - p0], conv.adc_bits, res.log);
          if (v == 0) continue;
          const ColumnSlot sl = ProgrammedMatrix::slot(p, meta.planes);
          const std::int64_t w = (std::int64_t{1} << (sl.plane * meta.cell_bits)) * s.place;
          res.values[sl.logical_col] += (sl.negative ? -w : w) * v;
        }
      }
    }
  }
  return res;
}

MvmResult mvm_transposed(const ProgrammedMatrix& m, std::span<const std::int64_t> x,
                         int a_bits, const ConverterSpec& conv) {
  const TileMeta& meta = m.meta();
  if (static_cast<int>(x.size()) != meta.cols) {
    throw ShapeMismatch("mvm_transposed: input length " + std::to_string(x.size()) +
                        " != cols " + std::to_string(meta.cols));
  }
  MvmResult res;
  res.values.assign(meta.rows, 0);
  const auto slices = slice_inputs(x, a_bits, conv.dac_bits);
  const int xs = meta.xbar_size;
  const int phys = meta.physical_cols();
  std::vector<int> drive(xs);

  // Bit lines of different planes or signs carry different place values, so
  // each (plane, sign) group is driven in its own phase.
  for (int ct = 0; ct < meta.col_tiles; ++ct) {
    const int p0 = ct * xs;
    const int p1 = std::min(phys, p0 + xs);
    for (int plane = 0; plane < meta.planes; ++plane) {
      for (bool negative : {false, true}) {
        bool group_present = false;
        for (int p = p0; p < p1; ++p) {
          const ColumnSlot sl = ProgrammedMatrix::slot(p, meta.planes);
          group_present |= (sl.plane == plane && sl.negative == negative);
        }
        if (!group_present) continue;
        const std::int64_t w = std::int64_t{1} << (plane * meta.cell_bits);
        for (const InputSlice& s : slices) {
          std::fill(drive.begin(), drive.end(), 0);
          for (int p = p0; p < p1; ++p) {
            const ColumnSlot sl = ProgrammedMatrix::slot(p, meta.planes);
            if (sl.plane == plane && sl.negative == negative) {
              drive[p - p0] = s.digits[sl.logical_col];
            }
          }
          for (int rt = 0; rt < meta.row_tiles; ++rt) {
            const auto sums = m.tile(rt, ct).row_sums(drive);
            const int r0 = rt * xs;
            const int r1 = std::min(meta.rows, r0 + xs);
            for (int r = r0; r < r1; ++r) {
              const std::int64_t v = convert(sums[r - r0], conv.adc_bits, res.log);
              if (v == 0) continue;
              const std::int64_t contrib = w * s.place * v;
              res.values[r] += negative ? -contrib : contrib;
            }
          }
        }
      }
    }
  }
  return res;
}

ProgrammedMatrix transposed_program(const std::vector<std::vector<std::int64_t>>& vectors,
                                    int value_bits, const CrossbarSpec& spec) {
  if (vectors.empty()) throw ShapeMismatch("transposed_program: no vectors");
  if (static_cast<int>(vectors.size()) > spec.cols) {
    throw CapacityExceeded("transposed_program: " + std::to_string(vectors.size()) +
                           " vectors exceed " + std::to_string(spec.cols) + " columns");
  }
  const std::size_t len = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != len) throw ShapeMismatch("transposed_program: vectors differ in length");
  }
  if (static_cast<int>(len) > spec.rows || len == 0) {
    throw CapacityExceeded("transposed_program: vector length " + std::to_string(len) +
                           " does not fit " + std::to_string(spec.rows) + " rows");
  }
  IntMatrix m(static_cast<int>(len), static_cast<int>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j)
    for (std::size_t i = 0; i < len; ++i) m(static_cast<int>(i), static_cast<int>(j)) = vectors[j][i];
  return program_signed(m, value_bits, spec, Orientation::TransposedWrite);
}

MvmResult ones_read(const ProgrammedMatrix& m, const ConverterSpec& conv) {
  const std::vector<std::int64_t> ones(m.meta().cols, 1);
  return mvm_transposed(m, ones, 2, conv);
}

std::vector<std::uint64_t> mbsa_square(std::span<const std::uint64_t> v, int v_bits) {
  if (v_bits < 1 || v_bits > 31) throw OutOfRange("mbsa_square: v_bits must be in [1, 31]");
  const std::uint64_t limit = std::uint64_t{1} << v_bits;
  std::vector<std::uint64_t> out(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint64_t stored = v[i];
    if (stored >= limit) {
      throw OutOfRange("mbsa_square: " + std::to_string(stored) + " does not fit " +
                       std::to_string(v_bits) + " bits");
    }
    std::uint64_t acc = 0;
    for (int b = 0; b < v_bits; ++b) {
      const std::uint64_t gate = ((stored >> b) & 1U) ? ~std::uint64_t{0} : 0;
      acc += (stored & gate) << b;
    }
    out[i] = acc;
  }
  return out;
}

nlohmann::json dump_json(const ProgrammedMatrix& m) {
  const TileMeta& t = m.meta();
  nlohmann::json tiles = nlohmann::json::array();
  for (int rt = 0; rt < t.row_tiles; ++rt) {
    for (int ct = 0; ct < t.col_tiles; ++ct) {
      const ProgrammedCrossbar& x = m.tile(rt, ct);
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < x.spec.rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < x.spec.cols; ++c) row.push_back(x.cell(r, c));
        rows.push_back(std::move(row));
      }
      tiles.push_back({{"row_tile", rt}, {"col_tile", ct}, {"cells", std::move(rows)}});
    }
  }
  return {{"meta",
           {{"rows", t.rows},
            {"cols", t.cols},
            {"w_bits", t.w_bits},
            {"cell_bits", t.cell_bits},
            {"planes", t.planes},
            {"xbar_size", t.xbar_size},
            {"row_tiles", t.row_tiles},
            {"col_tiles", t.col_tiles},
            {"orientation", orientation_name(t.orientation)}}},
          {"tiles", std::move(tiles)}};
}

}  // namespace pimdse::crossbar
