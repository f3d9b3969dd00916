// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace ca {
inline constexpr const char* kToolVersion = "ca 0.1.0";
}
