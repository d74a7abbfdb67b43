#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace p2lr {

/// Row-major dense matrix; one sample per row throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Index = std::int64_t;
using Labels = std::vector<std::int32_t>;
/// Binary masks and indicator vectors. `std::vector<bool>` is avoided so
/// that per-sample writes from worker threads never share a word.
using Mask = std::vector<std::uint8_t>;

} // namespace p2lr
