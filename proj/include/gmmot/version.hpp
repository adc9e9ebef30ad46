#pragma once

namespace gmmot {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gmmot
