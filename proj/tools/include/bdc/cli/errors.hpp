#pragma once

#include <stdexcept>
#include <string>

namespace bdc::cli {

/// Bad flags or arguments; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data; exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Every error line printed by the tool starts with this.
inline constexpr const char* kErrorPrefix = "bdc: error: ";

}  // namespace bdc::cli
