// src/pseudo.h

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

#ifndef KGDIAL_PSEUDO_H_
#define KGDIAL_PSEUDO_H_

#include <string>
#include <utility>
#include <vector>

#include "corpus.h"

namespace kgdial {

// Similarity-ranked knowledge with the prefix length whose concatenation is
// most similar to the response. ranked_indices covers all m sentences in
// descending-similarity order; the pseudo ground-truth is its m_bar prefix.
struct PseudoLabel {
  std::vector<int> ranked_indices;
  std::vector<double> scores;  // parallel, non-increasing
  int m_bar = 1;               // 1 <= m_bar <= ranked_indices.size()
};

// Indices sorted by descending unigram F1 against the response; ties break
// by ascending original index. Errors on empty knowledge.
std::pair<std::vector<int>, std::vector<double>> rank_by_similarity(
    const std::vector<std::string>& knowledge, const std::string& response);

// m_bar is the smallest prefix length maximizing the F1 of the space-joined
// ranked prefix against the response.
PseudoLabel build_pseudo_label(const std::vector<std::string>& knowledge,
                               const std::string& response);

// Warm-up corpora. One label per example serves both views: the selector
// trains on (context, knowledge, ranked prefix) and the generator on
// (context, ranked prefix, response).
struct WarmupCorpora {
  Corpus corpus;
  std::vector<PseudoLabel> labels;  // parallel to corpus.examples
};

WarmupCorpora build_warmup_corpora(const Corpus& corpus);

// Disk cache. Labels are parameter-free, so they are computed once per
// corpus content hash and reused afterwards.
void save_pseudo_cache(const std::string& path, uint64_t corpus_hash,
                       const std::vector<PseudoLabel>& labels);
// Returns false when the file is absent or carries a different corpus hash.
bool load_pseudo_cache(const std::string& path, uint64_t corpus_hash,
                       std::vector<PseudoLabel>* labels);

// Loads the cache when fresh, otherwise computes and rewrites it.
WarmupCorpora build_warmup_corpora_cached(const Corpus& corpus,
                                          const std::string& cache_path);

}  // namespace kgdial

#endif  // KGDIAL_PSEUDO_H_
