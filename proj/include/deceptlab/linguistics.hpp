#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "deceptlab/error.hpp"

namespace deceptlab::linguistics {

// Tokenizer shared by all linguistic operations: lowercase, whitespace
// split, leading/trailing punctuation peeled off into punctuation tokens,
// apostrophes and hyphens kept inside words ("haven't" stays one token).
struct Token {
  std::string text;
  bool is_word = true;
};

std::vector<Token> tokenize(const std::string& text);
std::vector<std::string> word_tokens(const std::string& text);

// %-delimited two-section dictionary: section 1 maps integer ids to category
// names ("1<TAB>future"), section 2 maps patterns to id lists
// ("will<TAB>1"). A trailing '*' makes a pattern a stem wildcard.
struct LexiconDictionary {
  std::map<std::string, std::vector<std::string>> categories;

  static LexiconDictionary parse(const std::string& content);
  static LexiconDictionary load(const std::string& path);
  std::vector<std::string> category_names() const;
};

bool pattern_matches(const std::string& pattern, const std::string& token);

// Category values are percentages of word tokens; the structural
// pseudo-categories word_count, apostrophes, exclamation_marks and
// all_punctuation are computed from the raw text (word_count is a raw
// count, the punctuation ones are percentages).
struct FeatureVector {
  std::string doc_id;
  std::map<std::string, double> values;
  std::size_t token_count = 0;
};

inline constexpr const char* kPseudoCategories[4] = {"word_count", "apostrophes",
                                                     "exclamation_marks", "all_punctuation"};

FeatureVector extract_features(const std::string& text, const LexiconDictionary& dict);

struct TextStats {
  long syllable_count = 0;
  long lexicon_count = 0;
  long sentence_count = 0;
  long difficult_words = 0;
};

// Vowel-group syllable heuristic with silent-e correction, minimum one per
// word; difficult words have >= 2 syllables and miss the easy-word list.
TextStats text_stats(const std::string& text, const std::set<std::string>* easy_words = nullptr);
long count_syllables(const std::string& word);
const std::set<std::string>& default_easy_words();

struct TTestResult {
  double t = 0;
  double p = 1;
};

// Welch's unequal-variance t-test, two-sided p.
TTestResult ttest_independent(const std::vector<double>& group_a,
                              const std::vector<double>& group_b);

double jaccard(const std::set<std::string>& set_p, const std::set<std::string>& set_c);

struct CorrelationResult {
  double r = 0;
  double p = 1;
};

// r = (M1 - M0)/s_n * sqrt(p*q); equals Pearson with 0/1 label coding.
CorrelationResult point_biserial(const std::vector<double>& values,
                                 const std::vector<int>& labels);

struct BhResult {
  std::vector<bool> significant;   // in input order
  std::vector<double> p_adjusted;  // in input order
};

BhResult benjamini_hochberg(const std::vector<double>& p_values, double alpha = 0.05);

struct CorrelationRow {
  std::string feature;
  double r_pb = 0;
  double p_value = 1;
  double p_adjusted = 1;
  bool significant = false;
  std::string associated_class;  // "truthful" (r < 0) or "deceptive" (r > 0)
};

struct CorrelationReport {
  std::vector<CorrelationRow> truthful;   // significant, sorted by |r| desc
  std::vector<CorrelationRow> deceptive;  // significant, sorted by |r| desc
  std::vector<CorrelationRow> all_rows;
  std::vector<std::string> skipped;  // degenerate features, with reason
};

CorrelationReport correlation_report(const std::vector<FeatureVector>& features,
                                     const std::vector<int>& labels, double alpha = 0.05);

}  // namespace deceptlab::linguistics
