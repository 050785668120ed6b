// Copyright 2026 The Diverlink Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DIVERLINK_ERROR_HPP
#define DIVERLINK_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diverlink {

// Error categories. The C API maps each one onto a dl_status code.
enum class ErrorKind {
  Argument,
  Parse,
  Validation,
  UnsupportedFormat,
  Io,
  Training,
  Numeric,
  Contract,
  Runtime,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(ErrorKind::Argument, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class UnsupportedFormatError : public Error {
 public:
  explicit UnsupportedFormatError(const std::string& what)
      : Error(ErrorKind::UnsupportedFormat, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(ErrorKind::Training, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorKind::Contract, what) {}
};

class RuntimeError : public Error {
 public:
  explicit RuntimeError(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

}  // namespace diverlink

#endif  // DIVERLINK_ERROR_HPP
