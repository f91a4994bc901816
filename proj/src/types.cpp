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

#include "atsc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>

namespace atsc {

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::negative: return "negative";
    case Polarity::neutral: return "neutral";
  }
  return "?";
}

std::string_view to_string(RawPolarity p) {
  switch (p) {
    case RawPolarity::positive: return "positive";
    case RawPolarity::negative: return "negative";
    case RawPolarity::neutral: return "neutral";
    case RawPolarity::conflict: return "conflict";
  }
  return "?";
}

std::string_view to_string(Domain d) {
  return d == Domain::laptops ? "laptops" : "restaurants";
}

std::string_view to_string(AspectKind k) {
  return k == AspectKind::term ? "term" : "category";
}

Polarity parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  if (s == "neutral") return Polarity::neutral;
  throw Error("unknown polarity '" + std::string(s) + "'");
}

RawPolarity parse_raw_polarity(std::string_view s) {
  if (s == "positive") return RawPolarity::positive;
  if (s == "negative") return RawPolarity::negative;
  if (s == "neutral") return RawPolarity::neutral;
  if (s == "conflict") return RawPolarity::conflict;
  throw Error("unknown raw polarity '" + std::string(s) + "'");
}

Domain parse_domain(std::string_view s) {
  if (s == "laptops" || s == "laptop") return Domain::laptops;
  if (s == "restaurants" || s == "restaurant") return Domain::restaurants;
  throw Error("unknown domain '" + std::string(s) + "'");
}

AspectKind parse_aspect_kind(std::string_view s) {
  if (s == "term") return AspectKind::term;
  if (s == "category") return AspectKind::category;
  throw Error("unknown aspect kind '" + std::string(s) + "'");
}

double ClassDistribution::operator[](Polarity p) const {
  switch (p) {
    case Polarity::positive: return positive;
    case Polarity::negative: return negative;
    case Polarity::neutral: return neutral;
  }
  return 0.0;
}

Polarity ClassDistribution::argmax() const {
  Polarity best = Polarity::positive;
  if (negative > (*this)[best]) best = Polarity::negative;
  if (neutral > (*this)[best]) best = Polarity::neutral;
  return best;
}

bool ClassDistribution::is_valid(double tol) const {
  for (Polarity p : kPolarities) {
    double v = (*this)[p];
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return std::abs(sum() - 1.0) <= tol;
}

ClassDistribution ClassDistribution::normalized(double positive,
                                                double negative,
                                                double neutral) {
  if (positive < 0 || negative < 0 || neutral < 0)
    throw Error("negative class score");
  double total = positive + negative + neutral;
  if (!(total > 0.0) || !std::isfinite(total))
    throw Error("class scores do not have a positive finite sum");
  return {positive / total, negative / total, neutral / total};
}

ClassDistribution ClassDistribution::softmax(
    const std::array<double, 3>& logits) {
  for (double l : logits)
    if (!std::isfinite(l)) throw Error("non-finite logit");
  double m = std::max({logits[0], logits[1], logits[2]});
  std::array<double, 3> e{};
  double z = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    e[i] = std::exp(logits[i] - m);
    z += e[i];
  }
  return {e[0] / z, e[1] / z, e[2] / z};
}

std::string fingerprint(std::string_view canonical) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace atsc
