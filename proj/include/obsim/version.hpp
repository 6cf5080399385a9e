#pragma once

namespace obsim {

inline constexpr const char* kVersion = "1.0.0";

}
