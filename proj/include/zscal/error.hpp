/* Copyright 2026 The zscal Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ZSCAL_ERROR_HPP_
#define ZSCAL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace zscal {

// All toolkit failures derive from Error so callers can catch one type and
// still branch on the specific category when they care.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments or files: bad shapes, bad indices, bad records.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Template placeholder count does not match the supplied arguments.
class ArityError : public Error {
 public:
  using Error::Error;
};

// Input that admits no normalized answer (all -inf row, zero mass).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Posterior tables that should line up do not (K, rows, utt ids).
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Prior matching cannot reach the target (a class with no mass anywhere).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iters, double l1_gap)
      : Error(what), iters_(iters), l1_gap_(l1_gap) {}

  int iters() const { return iters_; }
  double l1_gap() const { return l1_gap_; }

 private:
  int iters_;
  double l1_gap_;
};

class OutOfVocabulary : public Error {
 public:
  OutOfVocabulary(const std::string& what, std::string symbol)
      : Error(what), symbol_(std::move(symbol)) {}

  const std::string& symbol() const { return symbol_; }

 private:
  std::string symbol_;
};

// A brute-force reference was asked for an instance it cannot enumerate.
class Unsupported : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace zscal

#endif  // ZSCAL_ERROR_HPP_
