// src/pseudo.cc

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

#include "pseudo.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "common.h"
#include "json.hpp"
#include "metrics.h"

namespace kgdial {

using nlohmann::json;

std::pair<std::vector<int>, std::vector<double>> rank_by_similarity(
    const std::vector<std::string>& knowledge, const std::string& response) {
  if (knowledge.empty()) throw ValidationError("rank_by_similarity: empty knowledge list");
  std::vector<double> sims(knowledge.size());
  for (size_t i = 0; i < knowledge.size(); ++i) {
    sims[i] = unigram_f1(knowledge[i], response);
  }
  std::vector<int> order(knowledge.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sims[a] > sims[b]; });
  std::vector<double> scores(order.size());
  for (size_t i = 0; i < order.size(); ++i) scores[i] = sims[order[i]];
  return {order, scores};
}

PseudoLabel build_pseudo_label(const std::vector<std::string>& knowledge,
                               const std::string& response) {
  PseudoLabel label;
  std::tie(label.ranked_indices, label.scores) =
      rank_by_similarity(knowledge, response);
  std::string prefix;
  double best = -1.0;
  label.m_bar = 1;
  for (size_t t = 0; t < label.ranked_indices.size(); ++t) {
    if (!prefix.empty()) prefix.push_back(' ');
    prefix += knowledge[label.ranked_indices[t]];
    const double sim = unigram_f1(prefix, response);
    if (sim > best) {
      best = sim;
      label.m_bar = static_cast<int>(t) + 1;
    }
  }
  return label;
}

WarmupCorpora build_warmup_corpora(const Corpus& corpus) {
  WarmupCorpora out;
  out.corpus = corpus;
  out.labels.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples) {
    out.labels.push_back(build_pseudo_label(ex.knowledge, ex.response));
  }
  return out;
}

void save_pseudo_cache(const std::string& path, uint64_t corpus_hash,
                       const std::vector<PseudoLabel>& labels) {
  std::ostringstream out;
  json header;
  header["corpus_hash"] = hash_hex(corpus_hash);
  header["count"] = labels.size();
  out << header.dump() << '\n';
  for (size_t i = 0; i < labels.size(); ++i) {
    json j;
    j["example_id"] = i;
    j["ranked_indices"] = labels[i].ranked_indices;
    j["scores"] = labels[i].scores;
    j["m_bar"] = labels[i].m_bar;
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

bool load_pseudo_cache(const std::string& path, uint64_t corpus_hash,
                       std::vector<PseudoLabel>* labels) {
  if (!file_exists(path)) return false;
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  if (!std::getline(in, line)) return false;
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    return false;
  }
  if (header.value("corpus_hash", "") != hash_hex(corpus_hash)) return false;
  std::vector<PseudoLabel> parsed;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      return false;
    }
    PseudoLabel label;
    label.ranked_indices = j.at("ranked_indices").get<std::vector<int>>();
    label.scores = j.at("scores").get<std::vector<double>>();
    label.m_bar = j.at("m_bar").get<int>();
    parsed.push_back(std::move(label));
  }
  if (parsed.size() != header.value("count", size_t{0})) return false;
  *labels = std::move(parsed);
  return true;
}

WarmupCorpora build_warmup_corpora_cached(const Corpus& corpus,
                                          const std::string& cache_path) {
  const uint64_t h = corpus.content_hash();
  WarmupCorpora out;
  out.corpus = corpus;
  if (load_pseudo_cache(cache_path, h, &out.labels)) {
    if (out.labels.size() == corpus.examples.size()) return out;
  }
  out = build_warmup_corpora(corpus);
  save_pseudo_cache(cache_path, h, out.labels);
  return out;
}

}  // namespace kgdial
