// Copyright 2026 The ATSC Prompts Authors.
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

#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace atsc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

// The three sentiment classes used for training and evaluation.  The
// enumerator order is also the argmax tie-break order.
enum class Polarity { positive = 0, negative = 1, neutral = 2 };

inline constexpr std::array<Polarity, 3> kPolarities = {
    Polarity::positive, Polarity::negative, Polarity::neutral};

// Raw SemEval labels, which additionally carry "conflict".
enum class RawPolarity { positive, negative, neutral, conflict };

enum class Domain { laptops, restaurants };
enum class AspectKind { term, category };

std::string_view to_string(Polarity p);
std::string_view to_string(RawPolarity p);
std::string_view to_string(Domain d);
std::string_view to_string(AspectKind k);

Polarity parse_polarity(std::string_view s);
RawPolarity parse_raw_polarity(std::string_view s);
Domain parse_domain(std::string_view s);
AspectKind parse_aspect_kind(std::string_view s);

inline constexpr std::size_t index_of(Polarity p) {
  return static_cast<std::size_t>(p);
}

// Probabilities over {positive, negative, neutral}.
// FNV-1a 64 of `canonical`, as 16 lowercase hex digits.
std::string fingerprint(std::string_view canonical);

struct ClassDistribution {
  double positive = 0.0;
  double negative = 0.0;
  double neutral = 0.0;

  double operator[](Polarity p) const;
  double sum() const { return positive + negative + neutral; }

  // Ties resolve positive > negative > neutral.
  Polarity argmax() const;

  // Each entry in [0, 1] and the total within `tol` of one.
  bool is_valid(double tol = 1e-6) const;

  // Divides non-negative scores by their sum.  Throws when the sum is not
  // positive and finite.
  static ClassDistribution normalized(double positive, double negative,
                                      double neutral);
  // Numerically stable softmax over logits given in class order.
  static ClassDistribution softmax(const std::array<double, 3>& logits);
};

}  // namespace atsc
