/*
Copyright 2026 The Zipper Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef ZIPPER_ERROR_HPP
#define ZIPPER_ERROR_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace zipper {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input (graph files, model text, IR dumps).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Infeasible generator or configuration parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A graph, tile or program does not fit the configured storage.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::int64_t tile_id = -1,
                std::uint64_t required = 0, std::uint64_t available = 0)
      : Error(what), tile_id_(tile_id), required_(required), available_(available) {}
  std::int64_t tile_id() const { return tile_id_; }
  std::uint64_t required() const { return required_; }
  std::uint64_t available() const { return available_; }

 private:
  std::int64_t tile_id_;
  std::uint64_t required_;
  std::uint64_t available_;
};

/// Model construction, validation or domain typing failure.
class ModelError : public Error {
 public:
  using Error::Error;
};

class LoweringError : public Error {
 public:
  using Error::Error;
};

class CodegenError : public Error {
 public:
  using Error::Error;
};

/// Binary program stream is truncated, corrupted or of another version.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes disagree, or a weight/feature binding is missing.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Stream protocol violated (e.g. semaphore underflow).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace zipper

#endif  // ZIPPER_ERROR_HPP
