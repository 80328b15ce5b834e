// src/metrics.h

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

#ifndef KGDIAL_METRICS_H_
#define KGDIAL_METRICS_H_

#include <Eigen/Core>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgdial {

// Word vectors backing the bag-of-words metrics. Loaded from a plain text
// file, one token per line: token, space, D space-separated floats.
struct EmbeddingTable {
  int dimension = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors;

  static EmbeddingTable load(const std::string& path);
  bool empty() const { return vectors.empty(); }
};

// Lowercases, strips ASCII punctuation, removes the articles a/an/the, and
// collapses whitespace. Bytes outside ASCII pass through untouched.
std::string normalize_text(const std::string& text);

// Harmonic mean of token-multiset precision/recall after normalization.
// Doubles as the similarity function for pseudo labels and the RL reward.
// Returns 0 when either side normalizes to nothing.
double unigram_f1(const std::string& hyp, const std::string& ref);

struct BowScores {
  double average = 0.0;
  double extrema = 0.0;
  double greedy = 0.0;
};

// Embedding Average / Vector Extrema / Greedy Matching. Out-of-vocabulary
// tokens are skipped; if one side has no in-vocabulary token all three are 0.
BowScores bow_metrics(const std::string& hyp, const std::string& ref,
                      const EmbeddingTable& table);

// exp(mean of per-token negative log-likelihoods). Errors on an empty list.
double perplexity(const std::vector<double>& token_nlls);

// Fraction of positions where the first selected index equals the gold index.
double selection_accuracy(const std::vector<int>& predicted_first,
                          const std::vector<int>& gold);

struct MetricsReport {
  double ppl = 0.0;
  double f1 = 0.0;
  std::optional<double> average;
  std::optional<double> extrema;
  std::optional<double> greedy;
  std::optional<double> selection_acc;
  int n_examples = 0;

  std::string to_json_line() const;
  // Aligned two-row table (header + values) for terminal display.
  std::string to_table(const std::string& label) const;
};

}  // namespace kgdial

#endif  // KGDIAL_METRICS_H_
