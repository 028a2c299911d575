#pragma once

#include <string_view>

namespace mdr {

/// Project version with a git-describe suffix when built from a checkout.
std::string_view version_string();

}  // namespace mdr
