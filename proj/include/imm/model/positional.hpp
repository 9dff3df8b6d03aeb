#pragma once

#include <cstddef>

#include "imm/autodiff/tensor.hpp"

namespace imm::model {

/// Sinusoidal table with rows i = 0..rows-1:
/// p[i, 2j] = sin(i / 10000^(2j/d)), p[i, 2j+1] = cos(i / 10000^(2j/d)).
ad::Tensor positional_table(std::size_t rows, std::size_t d);

}  // namespace imm::model
