#pragma once

namespace pimhe {

inline constexpr const char* kVersion = "1.0.0";

} // namespace pimhe
