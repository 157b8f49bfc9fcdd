#pragma once

#include <span>

#include "hml/types.hpp"

namespace hml {

enum class FftDirection { Forward, Inverse };

/// In-place unnormalized DFT of `howmany` contiguous C-order blocks of shape `dims`.
/// Forward uses exp(-2 pi i k n / N). Plans are created under a global lock,
/// so concurrent calls are safe.
void fft_inplace(std::span<cd> data, std::span<const int> dims, int howmany, FftDirection dir);

}  // namespace hml
