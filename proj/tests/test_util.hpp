/*
 * Copyright 2026 The wsloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef WSLOC_TESTS_TEST_UTIL_HPP_
#define WSLOC_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "wsloc/common.hpp"

namespace wsloc::test {

// Error code raised by fn, or kInternal if it returns normally or throws
// something other than wsloc::Error.
template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  } catch (...) {
  }
  return ErrorCode::kInternal;
}

inline std::string TempPath(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "wsloc_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline std::string TempDir(const std::string& name) {
  const std::string path = TempPath(name);
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path;
}

}  // namespace wsloc::test

#endif  // WSLOC_TESTS_TEST_UTIL_HPP_
