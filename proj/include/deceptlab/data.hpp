#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "deceptlab/model.hpp"
#include "deceptlab/tensor.hpp"

namespace deceptlab::data {

enum class Source { paired, open_domain };

struct StatementPair {
  std::string id;
  std::string q1;
  std::string q2;
  int label = 0;  // 0 = truthful, 1 = deceptive
  Source source = Source::paired;
};

// CSV (header required) or JSONL with fields id, q1, q2, label; labels may
// be 0/1 or "truthful"/"deceptive".
std::vector<StatementPair> load_paired(const std::string& path);

// One merged statement per row (fields id, text, label); each statement is
// split at the token midpoint, the first half getting the extra token.
std::vector<StatementPair> load_open_domain(const std::string& path);

// RFC-4180-ish parser: quoted fields, doubled quotes, newlines in quotes.
std::vector<std::vector<std::string>> parse_csv(const std::string& content);

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;

  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;  // index 0 = <pad>, 1 = <unk>

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const;
};

// Built from training-fold texts only; tokens ordered by frequency then
// lexicographically, so construction is deterministic.
Vocabulary build_vocab(const std::vector<std::string>& train_texts, int min_count = 1);

EncodedStatement encode(const std::string& text, const Vocabulary& vocab, int max_len);

// Binary external-embedding file: magic "VEMB", version u32, d u32, then
// per-doc records (id length u32, id bytes, N u32, d*N row-major f32 for
// q1, T u32, d*T f32 for q2); little-endian throughout.
struct EmbeddedPair {
  TensorPtr q1;  // d x N
  TensorPtr q2;  // d x T
};

struct EmbeddingFile {
  std::uint32_t d = 0;
  std::map<std::string, EmbeddedPair> docs;
};

EmbeddingFile import_embeddings(const std::string& path);
void export_embeddings(const std::string& path, std::uint32_t d,
                       const std::map<std::string, EmbeddedPair>& docs);

// Feature CSV: doc_id column plus one column per category.
std::map<std::string, std::map<std::string, double>> load_feature_csv(const std::string& path);

// Paired corpus whose label is a planted Q1/Q2 token co-occurrence: the
// marker "ravine" may appear in Q1 and "lantern" in Q2, independently with
// probability one half each; the label is 1 exactly when both appear. A
// Q1-only classifier therefore tops out at 75% accuracy while the pair is
// fully separable.
std::vector<StatementPair> make_synthetic_pairs(std::size_t n, std::uint64_t seed);
inline constexpr const char* kSyntheticMarkerQ1 = "ravine";
inline constexpr const char* kSyntheticMarkerQ2 = "lantern";

std::string to_csv(const std::vector<StatementPair>& pairs);

}  // namespace deceptlab::data
