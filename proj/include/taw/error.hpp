#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taw {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (files, transaction lists, graph dumps).
class DataError : public Error {
 public:
  using Error::Error;
};

// A parameter outside its allowed range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Runs `fn`, prefixing any escaping error with the stage name while keeping
/// its category.
template <class F>
decltype(auto) in_stage(std::string_view stage, F&& fn) {
  const auto prefix = "stage '" + std::string(stage) + "': ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace taw
