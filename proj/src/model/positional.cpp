#include "imm/model/positional.hpp"

#include <cmath>

namespace imm::model {

ad::Tensor positional_table(std::size_t rows, std::size_t d) {
  ad::Tensor p({rows, d});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; 2 * j < d; ++j) {
      const double angle =
          static_cast<double>(i) / std::pow(10000.0, 2.0 * static_cast<double>(j) / d);
      p(i, 2 * j) = std::sin(angle);
      if (2 * j + 1 < d) p(i, 2 * j + 1) = std::cos(angle);
    }
  }
  return p;
}

}  // namespace imm::model
