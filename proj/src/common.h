// src/common.h

// Copyright 2026  kgdial authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGDIAL_COMMON_H_
#define KGDIAL_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgdial {

// Error taxonomy. The C API maps each type onto a status code; messages must
// name the offending input (line number, field, path) so diagnostics survive
// the language boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (bad JSON, bad record shape).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input violating a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad configuration (out-of-range hyperparameter, impossible dimensions).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem problems.
class IoError : public Error {
 public:
  using Error::Error;
};

// Version/state mismatches (checkpoint refuses to load, wrong call order).
class StateError : public Error {
 public:
  using Error::Error;
};

// Deterministic RNG. All draws in the library go through this wrapper so that
// results do not depend on the standard library's unspecified distribution
// algorithms, and so the complete state round-trips through checkpoints.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Standard normal via Box-Muller, one cached value.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    const int k = static_cast<int>(uniform() * n);
    return k >= n ? n - 1 : k;
  }

  // Draw from an explicit distribution. Probabilities must be nonnegative;
  // they are renormalized by their sum while walking the CDF.
  int categorical(const std::vector<double>& probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    double u = uniform() * total;
    for (size_t i = 0; i + 1 < probs.size(); ++i) {
      u -= probs[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_cached_ ? 1 : 0) << ' ' << cached_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    int flag = 0;
    is >> engine_ >> flag >> cached_;
    if (!is) throw StateError("rng state: malformed serialization");
    has_cached_ = flag != 0;
  }

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// FNV-1a, used for content hashes (corpus, vocabulary, config).
inline uint64_t fnv1a64(const std::string& data, uint64_t seed = 14695981039346656037ull) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

std::vector<std::string> split_whitespace(const std::string& text);

}  // namespace kgdial

#endif  // KGDIAL_COMMON_H_
