#pragma once

#include <array>
#include <cstdint>

namespace flowcurv::detail {

// Corner k of a unit cell sits at (kCorner[k][0], kCorner[k][1], kCorner[k][2]).
inline constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};

inline constexpr std::array<std::array<int, 2>, 12> kEdgeCorners = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

// Bit k of the case index is set when corner k is below the iso value.
extern const std::array<std::uint16_t, 256> kEdgeTable;
extern const std::array<std::array<std::int8_t, 16>, 256> kTriTable;

}  // namespace flowcurv::detail
