// src/corpus.h

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

#ifndef KGDIAL_CORPUS_H_
#define KGDIAL_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgdial {

enum class Speaker { kA, kB };

struct Utterance {
  Speaker speaker = Speaker::kA;
  std::string text;  // non-empty after trimming
};

// One training/evaluation unit: dialogue context, knowledge sentences, and
// the gold response. gold_knowledge_index is evaluation-only metadata; the
// trainer never reads it.
struct Example {
  std::vector<Utterance> context;       // length >= 1
  std::vector<std::string> knowledge;   // length >= 1, each non-empty
  std::string response;                 // non-empty
  std::optional<int> gold_knowledge_index;
  std::optional<std::string> topic;
};

enum class Split { kTrain, kValid, kTestSeen, kTestUnseen, kTest };

const char* split_name(Split split);
Split split_from_name(const std::string& name);

struct Corpus {
  Split split = Split::kTrain;
  std::vector<Example> examples;

  size_t size() const { return examples.size(); }
  // Content hash over example fields; independent of file layout details.
  uint64_t content_hash() const;
};

// Reads a line-delimited corpus file. Every record is validated; file order
// is preserved. If a sibling manifest exists it must agree on split name and
// record count.
Corpus load_corpus(const std::string& path, Split split);

// Writes a corpus plus its manifest (at manifest_path_for(path)).
void save_corpus(const Corpus& corpus, const std::string& path);

std::string manifest_path_for(const std::string& corpus_path);

// Tokenization seam. The default is whitespace tokenization over a learned
// vocabulary; an external subword tokenizer can be plugged in behind this
// interface when real pre-trained models are attached.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(const std::string& text) const = 0;
};

class WhitespaceTokenizer : public Tokenizer {
 public:
  std::vector<std::string> tokenize(const std::string& text) const override;
};

class Vocabulary {
 public:
  // Reserved ids, contiguous from 0.
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kSep = 4;
  static constexpr int kCls = 5;
  static const std::vector<std::string>& reserved_tokens();

  Vocabulary() = default;

  // Keeps the most frequent tokens up to max_size total entries (reserved
  // included); frequency ties break lexicographically.
  static Vocabulary build(const Corpus& corpus, size_t max_size,
                          const Tokenizer& tokenizer);

  // Vocabulary over an explicit token list (reserved tokens prepended).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int lookup(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  size_t size() const { return tokens_.size(); }

  std::vector<int> encode(const std::string& text) const;
  std::vector<int> encode(const std::string& text, const Tokenizer& tok) const;
  // Space-joined surface forms; reserved ids other than UNK are skipped.
  std::string decode(const std::vector<int>& ids) const;

  uint64_t hash() const;
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  void rebuild_index();
};

std::vector<int> encode_text(const Vocabulary& vocab, const std::string& text);

}  // namespace kgdial

#endif  // KGDIAL_CORPUS_H_
