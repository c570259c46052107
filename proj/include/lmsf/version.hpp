#pragma once

#include <string_view>

namespace lmsf {

inline constexpr std::string_view k_version = "0.1.0";

}  // namespace lmsf
