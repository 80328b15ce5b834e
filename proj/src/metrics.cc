// src/metrics.cc

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

#include "metrics.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "common.h"
#include "json.hpp"

namespace kgdial {

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  EmbeddingTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> values;
    double x;
    while (ss >> x) values.push_back(x);
    if (values.empty()) {
      throw ParseError("embedding file line " + std::to_string(line_no) +
                       ": no vector components");
    }
    if (table.dimension == 0) {
      table.dimension = static_cast<int>(values.size());
    } else if (static_cast<int>(values.size()) != table.dimension) {
      throw ValidationError("embedding file line " + std::to_string(line_no) +
                            ": dimension " + std::to_string(values.size()) +
                            " != " + std::to_string(table.dimension));
    }
    Eigen::VectorXd v(table.dimension);
    for (int i = 0; i < table.dimension; ++i) {
      if (!std::isfinite(values[i])) {
        throw ValidationError("embedding file line " + std::to_string(line_no) +
                              ": non-finite component");
      }
      v[i] = values[i];
    }
    table.vectors[token] = std::move(v);
  }
  return table;
}

std::string normalize_text(const std::string& text) {
  std::string kept;
  kept.reserve(text.size());
  for (unsigned char c : text) {
    if (c < 128 && std::ispunct(c)) continue;
    kept.push_back(c < 128 ? static_cast<char>(std::tolower(c))
                           : static_cast<char>(c));
  }
  std::string out;
  for (const auto& tok : split_whitespace(kept)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

namespace {

std::map<std::string, int> token_counts(const std::vector<std::string>& toks) {
  std::map<std::string, int> counts;
  for (const auto& t : toks) ++counts[t];
  return counts;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

// In-vocabulary vectors of a sentence, normalization included.
std::vector<const Eigen::VectorXd*> sentence_vectors(
    const std::string& text, const EmbeddingTable& table) {
  std::vector<const Eigen::VectorXd*> out;
  for (const auto& tok : split_whitespace(normalize_text(text))) {
    auto it = table.vectors.find(tok);
    if (it != table.vectors.end()) out.push_back(&it->second);
  }
  return out;
}

double greedy_direction(const std::vector<const Eigen::VectorXd*>& from,
                        const std::vector<const Eigen::VectorXd*>& to) {
  double total = 0.0;
  for (const auto* a : from) {
    double best = -1.0;
    for (const auto* b : to) best = std::max(best, cosine(*a, *b));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

double unigram_f1(const std::string& hyp, const std::string& ref) {
  const auto h = split_whitespace(normalize_text(hyp));
  const auto r = split_whitespace(normalize_text(ref));
  if (h.empty() || r.empty()) return 0.0;
  const auto rc = token_counts(r);
  const auto hc = token_counts(h);
  long overlap = 0;
  for (const auto& p : hc) {
    auto it = rc.find(p.first);
    if (it != rc.end()) overlap += std::min(p.second, it->second);
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / h.size();
  const double recall = static_cast<double>(overlap) / r.size();
  return 2.0 * precision * recall / (precision + recall);
}

BowScores bow_metrics(const std::string& hyp, const std::string& ref,
                      const EmbeddingTable& table) {
  const auto hv = sentence_vectors(hyp, table);
  const auto rv = sentence_vectors(ref, table);
  BowScores scores;
  if (hv.empty() || rv.empty()) return scores;
  const int d = table.dimension;

  Eigen::VectorXd hmean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd rmean = Eigen::VectorXd::Zero(d);
  for (const auto* v : hv) hmean += *v;
  for (const auto* v : rv) rmean += *v;
  hmean /= hv.size();
  rmean /= rv.size();
  scores.average = cosine(hmean, rmean);

  // Extrema composite: per dimension the entry of maximum magnitude, sign
  // kept; magnitude ties resolve to the positive value.
  auto extrema_of = [d](const std::vector<const Eigen::VectorXd*>& vs) {
    Eigen::VectorXd ex = *vs[0];
    for (size_t i = 1; i < vs.size(); ++i) {
      for (int k = 0; k < d; ++k) {
        const double cand = (*vs[i])[k];
        if (std::abs(cand) > std::abs(ex[k]) ||
            (std::abs(cand) == std::abs(ex[k]) && cand > ex[k])) {
          ex[k] = cand;
        }
      }
    }
    return ex;
  };
  scores.extrema = cosine(extrema_of(hv), extrema_of(rv));
  scores.greedy = 0.5 * (greedy_direction(hv, rv) + greedy_direction(rv, hv));
  return scores;
}

double perplexity(const std::vector<double>& token_nlls) {
  if (token_nlls.empty()) throw ValidationError("perplexity: empty NLL list");
  double sum = 0.0;
  for (double x : token_nlls) sum += x;
  return std::exp(sum / static_cast<double>(token_nlls.size()));
}

double selection_accuracy(const std::vector<int>& predicted_first,
                          const std::vector<int>& gold) {
  if (predicted_first.empty() || predicted_first.size() != gold.size()) {
    throw ValidationError("selection_accuracy: lists must have equal positive length (" +
                          std::to_string(predicted_first.size()) + " vs " +
                          std::to_string(gold.size()) + ")");
  }
  long hits = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (predicted_first[i] == gold[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::string MetricsReport::to_json_line() const {
  nlohmann::json j;
  j["ppl"] = ppl;
  j["f1"] = f1;
  j["average"] = average ? nlohmann::json(*average) : nlohmann::json(nullptr);
  j["extrema"] = extrema ? nlohmann::json(*extrema) : nlohmann::json(nullptr);
  j["greedy"] = greedy ? nlohmann::json(*greedy) : nlohmann::json(nullptr);
  j["selection_accuracy"] =
      selection_acc ? nlohmann::json(*selection_acc) : nlohmann::json(nullptr);
  j["n_examples"] = n_examples;
  return j.dump();
}

std::string MetricsReport::to_table(const std::string& label) const {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *v;
    return os.str();
  };
  std::ostringstream os;
  os << std::left << std::setw(16) << "" << std::setw(10) << "PPL"
     << std::setw(10) << "F1" << std::setw(10) << "Average" << std::setw(10)
     << "Extrema" << std::setw(10) << "Greedy" << std::setw(10) << "SelAcc"
     << std::setw(8) << "N" << '\n';
  os << std::left << std::setw(16) << label << std::setw(10) << cell(ppl)
     << std::setw(10) << cell(f1) << std::setw(10) << cell(average)
     << std::setw(10) << cell(extrema) << std::setw(10) << cell(greedy)
     << std::setw(10) << cell(selection_acc) << std::setw(8) << n_examples
     << '\n';
  return os.str();
}

}  // namespace kgdial
