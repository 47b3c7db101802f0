#pragma once

namespace dlab {

constexpr const char* kAppName = "dlab";
constexpr const char* kAppVersion = "0.1.0";

}  // namespace dlab
