#include "deceptlab/linguistics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "deceptlab/special.hpp"

namespace deceptlab::linguistics {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool is_punct_char(unsigned char c) { return c < 0x80 && std::ispunct(c); }

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::istringstream in(text);
  std::string chunk;
  while (in >> chunk) {
    std::size_t begin = 0, end = chunk.size();
    while (begin < end && is_punct_char(chunk[begin])) ++begin;
    while (end > begin && is_punct_char(chunk[end - 1])) --end;
    for (std::size_t i = 0; i < begin; ++i) out.push_back({std::string(1, chunk[i]), false});
    if (end > begin) {
      bool has_word_char = false;
      for (std::size_t i = begin; i < end; ++i)
        has_word_char = has_word_char || is_word_char(chunk[i]);
      out.push_back({to_lower(chunk.substr(begin, end - begin)), has_word_char});
    }
    for (std::size_t i = end; i < chunk.size(); ++i)
      out.push_back({std::string(1, chunk[i]), false});
  }
  return out;
}

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(text))
    if (tok.is_word) out.push_back(std::move(tok.text));
  return out;
}

bool pattern_matches(const std::string& pattern, const std::string& token) {
  if (!pattern.empty() && pattern.back() == '*') {
    const std::size_t stem = pattern.size() - 1;
    return token.size() >= stem && token.compare(0, stem, pattern, 0, stem) == 0;
  }
  return token == pattern;
}

LexiconDictionary LexiconDictionary::parse(const std::string& content) {
  LexiconDictionary dict;
  std::map<int, std::string> id_to_name;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  int delimiters_seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty()) continue;
    if (row == "%") {
      ++delimiters_seen;
      if (delimiters_seen > 2)
        throw ParseError("lexicon line " + std::to_string(line_no) + ": stray '%' delimiter");
      continue;
    }
    if (delimiters_seen == 0)
      throw ParseError("lexicon line " + std::to_string(line_no) +
                       ": content before the '%' header delimiter");
    std::istringstream fields(row);
    if (delimiters_seen == 1) {
      int id;
      std::string name;
      if (!(fields >> id >> name))
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": expected '<id> <category-name>'");
      name = to_lower(name);
      if (id_to_name.count(id))
        throw ParseError("lexicon line " + std::to_string(line_no) + ": duplicate id " +
                         std::to_string(id));
      if (dict.categories.count(name))
        throw ParseError("lexicon line " + std::to_string(line_no) + ": duplicate category '" +
                         name + "'");
      id_to_name[id] = name;
      dict.categories[name] = {};
    } else {
      std::string pattern;
      fields >> pattern;
      pattern = to_lower(pattern);
      if (pattern.empty())
        throw ParseError("lexicon line " + std::to_string(line_no) + ": empty pattern");
      const auto star = pattern.find('*');
      if (star != std::string::npos && star != pattern.size() - 1)
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": '*' is only valid at the end of a pattern");
      int id;
      bool any = false;
      while (fields >> id) {
        any = true;
        auto it = id_to_name.find(id);
        if (it == id_to_name.end())
          throw ParseError("lexicon line " + std::to_string(line_no) + ": unknown category id " +
                           std::to_string(id));
        dict.categories[it->second].push_back(pattern);
      }
      if (!any)
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": pattern lists no category ids");
    }
  }
  if (delimiters_seen < 2)
    throw ParseError("lexicon: missing '%' section delimiters");
  if (dict.categories.empty()) throw ParseError("lexicon: no categories defined");
  return dict;
}

LexiconDictionary LexiconDictionary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon dictionary: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<std::string> LexiconDictionary::category_names() const {
  std::vector<std::string> names;
  names.reserve(categories.size());
  for (const auto& [name, patterns] : categories) names.push_back(name);
  return names;
}

FeatureVector extract_features(const std::string& text, const LexiconDictionary& dict) {
  if (dict.categories.empty()) throw ConfigError("extract_features: empty dictionary");

  // Invert the dictionary once per call: exact patterns hash, stems scanned.
  std::unordered_map<std::string, std::vector<const std::string*>> exact;
  std::vector<std::pair<std::string, const std::string*>> stems;
  for (const auto& [name, patterns] : dict.categories) {
    for (const auto& pattern : patterns) {
      if (!pattern.empty() && pattern.back() == '*')
        stems.emplace_back(pattern.substr(0, pattern.size() - 1), &name);
      else
        exact[pattern].push_back(&name);
    }
  }

  FeatureVector fv;
  std::map<std::string, long> counts;
  for (const auto& [name, patterns] : dict.categories) counts[name] = 0;

  const auto words = word_tokens(text);
  fv.token_count = words.size();
  for (const auto& word : words) {
    std::set<const std::string*> hit;  // a token counts once per category
    if (auto it = exact.find(word); it != exact.end())
      for (const std::string* cat : it->second) hit.insert(cat);
    for (const auto& [stem, cat] : stems)
      if (word.size() >= stem.size() && word.compare(0, stem.size(), stem) == 0)
        hit.insert(cat);
    for (const std::string* cat : hit) ++counts[*cat];
  }

  const double denom = fv.token_count > 0 ? static_cast<double>(fv.token_count) : 1.0;
  for (const auto& [name, count] : counts)
    fv.values[name] = fv.token_count > 0 ? 100.0 * static_cast<double>(count) / denom : 0.0;

  long apostrophes = 0, exclamations = 0, punct = 0;
  for (unsigned char c : text) {
    if (c == '\'') ++apostrophes;
    if (c == '!') ++exclamations;
    if (is_punct_char(c)) ++punct;
  }
  fv.values["word_count"] = static_cast<double>(fv.token_count);
  fv.values["apostrophes"] = fv.token_count > 0 ? 100.0 * apostrophes / denom : 0.0;
  fv.values["exclamation_marks"] = fv.token_count > 0 ? 100.0 * exclamations / denom : 0.0;
  fv.values["all_punctuation"] = fv.token_count > 0 ? 100.0 * punct / denom : 0.0;
  return fv;
}

long count_syllables(const std::string& word) {
  std::string letters;
  for (unsigned char c : word)
    if (std::isalpha(c)) letters.push_back(static_cast<char>(std::tolower(c)));
  if (letters.empty()) return 1;
  const auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  long groups = 0;
  bool in_group = false;
  for (char c : letters) {
    if (is_vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  if (letters.size() >= 2 && letters.back() == 'e' && letters[letters.size() - 2] != 'l')
    --groups;
  return std::max<long>(1, groups);
}

TextStats text_stats(const std::string& text, const std::set<std::string>* easy_words) {
  const std::set<std::string>& easy = easy_words ? *easy_words : default_easy_words();
  TextStats stats;
  for (const auto& word : word_tokens(text)) {
    ++stats.lexicon_count;
    const long syllables = count_syllables(word);
    stats.syllable_count += syllables;
    if (syllables >= 2 && !easy.count(word)) ++stats.difficult_words;
  }
  bool content_pending = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      while (i < text.size() && (text[i] == '.' || text[i] == '!' || text[i] == '?')) ++i;
      ++stats.sentence_count;
      content_pending = false;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) content_pending = true;
    ++i;
  }
  if (content_pending) ++stats.sentence_count;
  return stats;
}

TTestResult ttest_independent(const std::vector<double>& group_a,
                              const std::vector<double>& group_b) {
  const std::size_t na = group_a.size(), nb = group_b.size();
  if (na < 2 || nb < 2)
    throw DomainError("ttest_independent: each group needs at least 2 values");
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto var = [](const std::vector<double>& v, double m) {
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  const double ma = mean(group_a), mb = mean(group_b);
  const double va = var(group_a, ma), vb = var(group_b, mb);
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) throw DomainError("ttest_independent: combined variance is zero");
  TTestResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1) +
                                 (vb / nb) * (vb / nb) / (nb - 1));
  r.p = student_t_two_sided_p(r.t, df);
  return r;
}

double jaccard(const std::set<std::string>& set_p, const std::set<std::string>& set_c) {
  if (set_p.empty() && set_c.empty())
    throw DomainError("jaccard: both sets are empty");
  std::size_t inter = 0;
  for (const auto& w : set_p) inter += set_c.count(w);
  const std::size_t uni = set_p.size() + set_c.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

CorrelationResult point_biserial(const std::vector<double>& values,
                                 const std::vector<int>& labels) {
  if (values.size() != labels.size())
    throw ContractError("point_biserial: values and labels differ in length");
  const std::size_t n = values.size();
  double m1 = 0, m0 = 0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      m1 += values[i];
      ++n1;
    } else if (labels[i] == 0) {
      m0 += values[i];
      ++n0;
    } else {
      throw ContractError("point_biserial: labels must be binary");
    }
  }
  if (n1 == 0 || n0 == 0) throw DomainError("point_biserial: both classes must be present");
  if (n < 3) throw DomainError("point_biserial: need at least 3 observations");
  m1 /= static_cast<double>(n1);
  m0 /= static_cast<double>(n0);
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (sd == 0.0) throw DomainError("point_biserial: feature has zero variance");
  const double p1 = static_cast<double>(n1) / static_cast<double>(n);
  const double p0 = static_cast<double>(n0) / static_cast<double>(n);
  CorrelationResult r;
  r.r = (m1 - m0) / sd * std::sqrt(p1 * p0);
  const double denom = 1.0 - r.r * r.r;
  if (denom <= 0.0) {
    r.p = 0.0;
  } else {
    const double df = static_cast<double>(n - 2);
    const double t = r.r * std::sqrt(df / denom);
    r.p = student_t_two_sided_p(t, df);
  }
  return r;
}

BhResult benjamini_hochberg(const std::vector<double>& p_values, double alpha) {
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw ContractError("benjamini_hochberg: p-value outside [0, 1]");
  BhResult result;
  result.significant.assign(m, false);
  result.p_adjusted.assign(m, 1.0);
  if (m == 0) return result;

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] != p_values[b] ? p_values[a] < p_values[b] : a < b;
  });

  // Step-up: find the largest i with p(i) <= (i/m) alpha, reject 1..i.
  std::size_t cutoff = 0;  // number of rejections
  for (std::size_t i = 0; i < m; ++i) {
    const double bound = static_cast<double>(i + 1) / static_cast<double>(m) * alpha;
    if (p_values[order[i]] <= bound) cutoff = i + 1;
  }
  for (std::size_t i = 0; i < cutoff; ++i) result.significant[order[i]] = true;

  // adjusted p(i) = min over j >= i of (m/j) p(j), clipped to 1.
  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    const double scaled =
        p_values[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running = std::min(running, scaled);
    result.p_adjusted[order[i]] = std::min(1.0, running);
  }
  return result;
}

CorrelationReport correlation_report(const std::vector<FeatureVector>& features,
                                     const std::vector<int>& labels, double alpha) {
  if (features.empty()) throw ContractError("correlation_report: no documents");
  if (features.size() != labels.size())
    throw ContractError("correlation_report: features and labels differ in length");
  for (const auto& fv : features)
    if (fv.values.size() != features[0].values.size() ||
        !std::equal(fv.values.begin(), fv.values.end(), features[0].values.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }))
      throw ContractError("correlation_report: inconsistent feature sets across documents");

  CorrelationReport report;
  std::vector<double> p_raw;
  std::vector<std::size_t> row_of;  // index into report.all_rows per p value
  for (const auto& [name, unused] : features[0].values) {
    std::vector<double> column;
    column.reserve(features.size());
    for (const auto& fv : features) column.push_back(fv.values.at(name));
    try {
      const auto corr = point_biserial(column, labels);
      CorrelationRow row;
      row.feature = name;
      row.r_pb = corr.r;
      row.p_value = corr.p;
      row.associated_class = corr.r > 0 ? "deceptive" : (corr.r < 0 ? "truthful" : "none");
      row_of.push_back(report.all_rows.size());
      report.all_rows.push_back(row);
      p_raw.push_back(corr.p);
    } catch (const DomainError& e) {
      report.skipped.push_back(name + ": " + e.what());
    }
  }

  const auto bh = benjamini_hochberg(p_raw, alpha);
  for (std::size_t i = 0; i < p_raw.size(); ++i) {
    auto& row = report.all_rows[row_of[i]];
    row.p_adjusted = bh.p_adjusted[i];
    row.significant = bh.significant[i];
    if (!row.significant) continue;
    if (row.r_pb > 0)
      report.deceptive.push_back(row);
    else if (row.r_pb < 0)
      report.truthful.push_back(row);
  }
  auto by_magnitude = [](const CorrelationRow& a, const CorrelationRow& b) {
    const double ma = std::abs(a.r_pb), mb = std::abs(b.r_pb);
    return ma != mb ? ma > mb : a.feature < b.feature;
  };
  std::sort(report.truthful.begin(), report.truthful.end(), by_magnitude);
  std::sort(report.deceptive.begin(), report.deceptive.end(), by_magnitude);
  return report;
}

const std::set<std::string>& default_easy_words() {
  static const std::set<std::string> words = {
      "a",       "about",  "after",   "again",  "all",    "also",   "always", "am",
      "an",      "and",    "any",     "are",    "around", "as",     "ask",    "at",
      "away",    "baby",   "back",    "bad",    "be",     "because","been",   "before",
      "begin",   "being",  "best",    "better", "big",    "book",   "both",   "boy",
      "bring",   "brother","busy",    "but",    "buy",    "by",     "call",   "came",
      "can",     "car",    "carry",   "city",   "close",  "cold",   "come",   "could",
      "day",     "did",    "dinner",  "do",     "does",   "done",   "down",   "each",
      "early",   "eat",    "end",     "enjoy",  "even",   "ever",   "every",  "family",
      "far",     "fast",   "father",  "feel",   "few",    "find",   "first",  "follow",
      "food",    "for",    "friend",  "from",   "fun",    "funny",  "game",   "get",
      "girl",    "give",   "go",      "going",  "good",   "got",    "great",  "had",
      "happy",   "hard",   "has",     "have",   "he",     "hello",  "help",   "her",
      "here",    "him",    "his",     "home",   "house",  "how",    "i",      "if",
      "in",      "into",   "is",      "it",     "its",    "just",   "keep",   "kind",
      "know",    "last",   "late",    "later",  "learn",  "leave",  "let",    "like",
      "little",  "live",   "long",    "look",   "love",   "made",   "make",   "man",
      "many",    "may",    "me",      "money",  "more",   "morning","most",   "mother",
      "much",    "must",   "my",      "name",   "near",   "never",  "new",    "next",
      "nice",    "night",  "no",      "not",    "now",    "of",     "off",    "old",
      "on",      "once",   "one",     "only",   "open",   "or",     "other",  "our",
      "out",     "over",   "own",     "park",   "party",  "people", "place",  "plan",
      "play",    "please", "put",     "ready",  "right",  "run",    "said",   "same",
      "saw",     "say",    "school",  "see",    "seven",  "she",    "shop",   "should",
      "show",    "sister", "sit",     "sleep",  "small",  "so",     "some",   "soon",
      "start",   "stay",   "still",   "stop",   "story",  "sunday", "take",   "talk",
      "tell",    "than",   "that",    "the",    "their",  "them",   "then",   "there",
      "they",    "thing",  "think",   "this",   "time",   "to",     "today",  "together",
      "too",     "try",    "turn",    "two",    "under",  "until",  "up",     "us",
      "use",     "very",   "visit",   "walk",   "want",   "was",    "watch",  "water",
      "way",     "we",     "week",    "weekend","well",   "went",   "were",   "what",
      "when",    "where",  "which",   "while",  "who",    "why",    "will",   "with",
      "work",    "would",  "year",    "yes",    "you",    "your"};
  return words;
}

}  // namespace deceptlab::linguistics
