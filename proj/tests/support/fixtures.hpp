// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pimdse/crossbar.hpp"
#include "pimdse/design_space.hpp"

namespace pimdse::testing {

/// Every block FC + EFC (8 bit), chained on the previous block, dims 16,
/// dac=1 cell=1 xbar=16 adc=4.
DesignPoint minimal_point(const SpaceDescriptor& space = default_space());

/// A two-block point with a small workload shape, exercising all five
/// operators. Not valid against the default menus; map it unchecked.
DesignPoint small_mixed_point(const ReRAMConfig& reram);

/// adc_bits that make every single-tile read lossless.
int lossless_adc(int dac_bits, int cell_bits, int rows);

crossbar::IntMatrix random_matrix(int rows, int cols, std::int64_t lo, std::int64_t hi,
                                  std::mt19937_64& rng);
std::vector<std::int64_t> random_vector(int n, std::int64_t lo, std::int64_t hi,
                                        std::mt19937_64& rng);

}  // namespace pimdse::testing
