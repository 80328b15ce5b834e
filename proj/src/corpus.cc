// src/corpus.cc

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

#include "corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "common.h"
#include "json.hpp"

namespace kgdial {

using nlohmann::json;

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTestSeen: return "test_seen";
    case Split::kTestUnseen: return "test_unseen";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test_seen") return Split::kTestSeen;
  if (name == "test_unseen") return Split::kTestUnseen;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split name: " + name);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw ValidationError("record at line " + std::to_string(line_no) + ": " + what);
}

Example parse_example(const json& j, int line_no) {
  Example ex;
  if (!j.is_object()) fail(line_no, "record is not an object");
  if (!j.contains("context") || !j["context"].is_array() || j["context"].empty())
    fail(line_no, "field \"context\" missing or not a non-empty array");
  for (const auto& turn : j["context"]) {
    if (!turn.is_object() || !turn.contains("speaker") || !turn.contains("text"))
      fail(line_no, "field \"context\": turn must carry speaker and text");
    const std::string sp = turn["speaker"].get<std::string>();
    if (sp != "A" && sp != "B")
      fail(line_no, "field \"context\": speaker must be \"A\" or \"B\"");
    const std::string text = turn["text"].get<std::string>();
    if (trim(text).empty())
      fail(line_no, "field \"context\": empty utterance text");
    ex.context.push_back({sp == "A" ? Speaker::kA : Speaker::kB, text});
  }
  if (!j.contains("knowledge") || !j["knowledge"].is_array() || j["knowledge"].empty())
    fail(line_no, "field \"knowledge\" missing or not a non-empty array");
  for (const auto& sent : j["knowledge"]) {
    if (!sent.is_string() || trim(sent.get<std::string>()).empty())
      fail(line_no, "field \"knowledge\": empty knowledge sentence");
    ex.knowledge.push_back(sent.get<std::string>());
  }
  if (!j.contains("response") || !j["response"].is_string())
    fail(line_no, "field \"response\" missing or not a string");
  ex.response = j["response"].get<std::string>();
  if (trim(ex.response).empty()) fail(line_no, "field \"response\" is empty");
  if (j.contains("gold_knowledge_index") && !j["gold_knowledge_index"].is_null()) {
    if (!j["gold_knowledge_index"].is_number_integer())
      fail(line_no, "field \"gold_knowledge_index\" must be an integer or null");
    const int idx = j["gold_knowledge_index"].get<int>();
    if (idx < 0 || idx >= static_cast<int>(ex.knowledge.size()))
      fail(line_no, "field \"gold_knowledge_index\": index out of range");
    ex.gold_knowledge_index = idx;
  }
  if (j.contains("topic") && !j["topic"].is_null()) {
    if (!j["topic"].is_string()) fail(line_no, "field \"topic\" must be a string or null");
    ex.topic = j["topic"].get<std::string>();
  }
  return ex;
}

json example_to_json(const Example& ex) {
  json j;
  json ctx = json::array();
  for (const auto& u : ex.context) {
    ctx.push_back({{"speaker", u.speaker == Speaker::kA ? "A" : "B"},
                   {"text", u.text}});
  }
  j["context"] = std::move(ctx);
  j["knowledge"] = ex.knowledge;
  j["response"] = ex.response;
  j["gold_knowledge_index"] =
      ex.gold_knowledge_index ? json(*ex.gold_knowledge_index) : json(nullptr);
  j["topic"] = ex.topic ? json(*ex.topic) : json(nullptr);
  return j;
}

}  // namespace

uint64_t Corpus::content_hash() const {
  uint64_t h = fnv1a64(split_name(split));
  for (const auto& ex : examples) {
    h = fnv1a64(example_to_json(ex).dump(), h);
  }
  return h;
}

std::string manifest_path_for(const std::string& corpus_path) {
  return corpus_path + ".manifest.json";
}

Corpus load_corpus(const std::string& path, Split split) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  Corpus corpus;
  corpus.split = split;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("parse error at line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    corpus.examples.push_back(parse_example(j, line_no));
  }
  const std::string manifest = manifest_path_for(path);
  if (file_exists(manifest)) {
    json m;
    try {
      m = json::parse(read_file(manifest));
    } catch (const json::exception& e) {
      throw ParseError("manifest " + manifest + ": " + e.what());
    }
    if (m.value("split", "") != split_name(split)) {
      throw ValidationError("manifest " + manifest + ": split \"" +
                            m.value("split", "") + "\" does not match requested \"" +
                            split_name(split) + "\"");
    }
    if (m.value("count", -1) != static_cast<int>(corpus.examples.size())) {
      throw ValidationError("manifest " + manifest + ": count " +
                            std::to_string(m.value("count", -1)) + " != " +
                            std::to_string(corpus.examples.size()) + " records read");
    }
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ostringstream out;
  for (const auto& ex : corpus.examples) out << example_to_json(ex).dump() << '\n';
  write_file(path, out.str());
  json m;
  m["split"] = split_name(corpus.split);
  m["count"] = corpus.examples.size();
  write_file(manifest_path_for(path), m.dump() + "\n");
}

std::vector<std::string> WhitespaceTokenizer::tokenize(const std::string& text) const {
  return split_whitespace(text);
}

const std::vector<std::string>& Vocabulary::reserved_tokens() {
  static const std::vector<std::string> kReserved = {"<pad>", "<unk>", "<bos>",
                                                     "<eos>", "<sep>", "<cls>"};
  return kReserved;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  for (size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<int>(i);
}

Vocabulary Vocabulary::build(const Corpus& corpus, size_t max_size,
                             const Tokenizer& tokenizer) {
  const auto& reserved = reserved_tokens();
  if (max_size < reserved.size()) {
    throw ConfigError("vocabulary max_size " + std::to_string(max_size) +
                      " smaller than " + std::to_string(reserved.size()) +
                      " reserved tokens");
  }
  if (corpus.examples.empty()) throw ValidationError("cannot build vocabulary from empty corpus");
  std::map<std::string, long> counts;
  auto count_text = [&](const std::string& text) {
    for (const auto& tok : tokenizer.tokenize(text)) ++counts[tok];
  };
  for (const auto& ex : corpus.examples) {
    for (const auto& u : ex.context) count_text(u.text);
    for (const auto& k : ex.knowledge) count_text(k);
    count_text(ex.response);
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  vocab.tokens_ = reserved;
  const size_t room = max_size - reserved.size();
  for (size_t i = 0; i < ranked.size() && i < room; ++i) {
    vocab.tokens_.push_back(ranked[i].first);
  }
  vocab.rebuild_index();
  return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary vocab;
  vocab.tokens_ = reserved_tokens();
  for (const auto& t : tokens) vocab.tokens_.push_back(t);
  vocab.rebuild_index();
  return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= static_cast<int>(tokens_.size())) {
    throw ValidationError("token id out of range: " + std::to_string(id));
  }
  return tokens_[id];
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  static const WhitespaceTokenizer kDefault;
  return encode(text, kDefault);
}

std::vector<int> Vocabulary::encode(const std::string& text,
                                    const Tokenizer& tok) const {
  std::vector<int> ids;
  for (const auto& t : tok.tokenize(text)) ids.push_back(lookup(t));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos || id == kSep || id == kCls) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 14695981039346656037ull;
  for (const auto& t : tokens_) h = fnv1a64(t + "\n", h);
  return h;
}

void Vocabulary::save(std::ostream& out) const {
  uint64_t n = tokens_.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const auto& t : tokens_) {
    uint64_t len = t.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(t.data(), static_cast<std::streamsize>(len));
  }
}

Vocabulary Vocabulary::load(std::istream& in) {
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in) throw StateError("vocabulary blob: truncated header");
  Vocabulary vocab;
  vocab.tokens_.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string t(len, '\0');
    in.read(t.data(), static_cast<std::streamsize>(len));
    if (!in) throw StateError("vocabulary blob: truncated token");
    vocab.tokens_.push_back(std::move(t));
  }
  vocab.rebuild_index();
  return vocab;
}

std::vector<int> encode_text(const Vocabulary& vocab, const std::string& text) {
  return vocab.encode(text);
}

}  // namespace kgdial
