#pragma once

#include <optional>

#include "sobolmat/axis_set.hpp"
#include "sobolmat/tensor.hpp"

namespace sobolmat::testfuncs {

/// Published closed Sobol' matrix of mnu9 for the leading `count` axes,
/// 3 decimals. count = 0 gives zeros; count >= 5 gives the correlation matrix.
Matrix closed_table(std::size_t count);

/// Table value for an arbitrary subset when one applies: mnu9 reads only
/// axes 0..4, so the answer is known whenever the subset restricted to those
/// axes is a leading prefix.
std::optional<Matrix> tabulated_truth(const AxisSet& m);

}  // namespace sobolmat::testfuncs
