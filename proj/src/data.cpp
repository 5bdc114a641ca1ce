#include "deceptlab/data.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "deceptlab/linguistics.hpp"
#include "deceptlab/rng.hpp"

namespace deceptlab::data {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

int parse_label(const std::string& raw, std::size_t row) {
  const std::string v = lower(raw);
  if (v == "0" || v == "truthful") return 0;
  if (v == "1" || v == "deceptive") return 1;
  throw ParseError("row " + std::to_string(row) + ": label '" + raw +
                   "' is not one of 0, 1, truthful, deceptive");
}

bool looks_like_jsonl(const std::string& path, const std::string& content) {
  if (path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0) return true;
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) return true;
  for (char c : content) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{';
  }
  return false;
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name,
                      const char* alt = nullptr) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    if (h == name || (alt && h == alt)) return i;
  }
  throw ParseError("missing required column '" + name + "' in header");
}

std::vector<StatementPair> load_rows(
    const std::string& path, bool open_domain,
    const std::function<StatementPair(const std::map<std::string, std::string>&, std::size_t)>&
        make) {
  const std::string content = read_file(path);
  std::vector<StatementPair> out;
  if (looks_like_jsonl(path, content)) {
    std::istringstream in(content);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("row " + std::to_string(row) + ": invalid JSON: " + e.what());
      }
      std::map<std::string, std::string> fields;
      for (auto it = j.begin(); it != j.end(); ++it)
        fields[lower(it.key())] =
            it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
      out.push_back(make(fields, row));
    }
  } else {
    auto rows = parse_csv(content);
    if (rows.empty()) throw ParseError("empty dataset file: " + path);
    const auto& header = rows[0];
    std::vector<std::string> names;
    for (const auto& h : header) names.push_back(lower(h));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() == 1 && rows[r][0].empty()) continue;  // trailing blank line
      if (rows[r].size() != header.size())
        throw ParseError("row " + std::to_string(r) + ": expected " +
                         std::to_string(header.size()) + " fields, got " +
                         std::to_string(rows[r].size()));
      std::map<std::string, std::string> fields;
      for (std::size_t i = 0; i < header.size(); ++i) fields[names[i]] = rows[r][i];
      out.push_back(make(fields, r));
    }
  }
  (void)open_domain;
  return out;
}

std::string require_field(const std::map<std::string, std::string>& fields,
                          const std::string& key, std::size_t row, const char* alt = nullptr) {
  if (auto it = fields.find(key); it != fields.end()) return it->second;
  if (alt)
    if (auto it = fields.find(alt); it != fields.end()) return it->second;
  throw ParseError("row " + std::to_string(row) + ": missing field '" + key + "'");
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  const std::size_t n = content.size();
  std::size_t line = 1;
  while (i < n) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && content[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
        ++i;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty())
          throw ParseError("csv line " + std::to_string(line) +
                           ": quote inside an unquoted field");
        quoted = true;
        ++i;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        ++i;
        break;
      case '\r':
        ++i;
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        ++line;
        ++i;
        break;
      default:
        field.push_back(c);
        ++i;
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field at end of input");
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<StatementPair> load_paired(const std::string& path) {
  return load_rows(path, false, [](const std::map<std::string, std::string>& f, std::size_t row) {
    StatementPair p;
    p.id = require_field(f, "id", row);
    p.q1 = require_field(f, "q1", row);
    p.q2 = require_field(f, "q2", row);
    p.label = parse_label(require_field(f, "label", row), row);
    p.source = Source::paired;
    if (p.q1.empty()) throw ParseError("row " + std::to_string(row) + ": q1 is empty");
    return p;
  });
}

std::vector<StatementPair> load_open_domain(const std::string& path) {
  return load_rows(path, true, [](const std::map<std::string, std::string>& f, std::size_t row) {
    StatementPair p;
    p.id = require_field(f, "id", row);
    const std::string text = require_field(f, "text", row, "statement");
    p.label = parse_label(require_field(f, "label", row), row);
    p.source = Source::open_domain;
    std::istringstream in(text);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    if (tokens.empty()) throw ParseError("row " + std::to_string(row) + ": statement is empty");
    const std::size_t half = (tokens.size() + 1) / 2;  // odd lengths: q1 takes the extra token
    std::ostringstream q1, q2;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto& os = i < half ? q1 : q2;
      if (i != 0 && i != half) os << ' ';
      os << tokens[i];
    }
    p.q1 = q1.str();
    p.q2 = q2.str();
    return p;
  });
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnknown : it->second;
}

Vocabulary build_vocab(const std::vector<std::string>& train_texts, int min_count) {
  if (train_texts.empty()) throw ConfigError("build_vocab: empty training corpus");
  std::map<std::string, long> counts;
  for (const auto& text : train_texts)
    for (const auto& tok : linguistics::tokenize(text)) ++counts[tok.text];
  std::vector<std::pair<std::string, long>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  vocab.id_to_token = {"<pad>", "<unk>"};
  vocab.token_to_id = {{"<pad>", Vocabulary::kPad}, {"<unk>", Vocabulary::kUnknown}};
  for (const auto& [token, count] : entries) {
    if (count < min_count) continue;
    vocab.token_to_id.emplace(token, vocab.size());
    vocab.id_to_token.push_back(token);
  }
  return vocab;
}

EncodedStatement encode(const std::string& text, const Vocabulary& vocab, int max_len) {
  if (max_len <= 0) throw ConfigError("encode: max_len must be positive");
  EncodedStatement enc;
  enc.ids.assign(max_len, Vocabulary::kPad);
  enc.mask.assign(max_len, 0);
  int pos = 0;
  for (const auto& tok : linguistics::tokenize(text)) {
    if (pos >= max_len) break;
    enc.ids[pos] = vocab.id_of(tok.text);
    enc.mask[pos] = 1;
    ++pos;
  }
  return enc;
}

namespace {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError("embedding file: truncated while reading " + what);
  return v;
}

void write_matrix(std::ostream& os, const TensorPtr& t) {
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(t->cols()));
  for (double v : t->data) write_raw<float>(os, static_cast<float>(v));
}

TensorPtr read_matrix(std::istream& is, std::uint32_t d, const std::string& doc) {
  const auto n = read_raw<std::uint32_t>(is, "token count of " + doc);
  if (n == 0) throw ParseError("embedding file: empty matrix for doc " + doc);
  auto t = Tensor::zeros(d, n);
  for (std::size_t i = 0; i < t->size(); ++i)
    t->data[i] = static_cast<double>(read_raw<float>(is, "matrix data of " + doc));
  return t;
}

}  // namespace

EmbeddingFile import_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "VEMB", 4) != 0)
    throw ParseError("embedding file: bad magic, expected VEMB");
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != 1)
    throw ParseError("embedding file: unsupported version " + std::to_string(version));
  EmbeddingFile file;
  file.d = read_raw<std::uint32_t>(in, "hidden size");
  if (file.d == 0) throw ParseError("embedding file: hidden size is zero");
  const auto count = read_raw<std::uint32_t>(in, "document count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto id_len = read_raw<std::uint32_t>(in, "id length");
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    if (!in) throw ParseError("embedding file: truncated while reading doc id");
    EmbeddedPair pair;
    pair.q1 = read_matrix(in, file.d, id);
    pair.q2 = read_matrix(in, file.d, id);
    file.docs.emplace(std::move(id), std::move(pair));
  }
  return file;
}

void export_embeddings(const std::string& path, std::uint32_t d,
                       const std::map<std::string, EmbeddedPair>& docs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write embedding file: " + path);
  os.write("VEMB", 4);
  write_raw<std::uint32_t>(os, 1);
  write_raw<std::uint32_t>(os, d);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(docs.size()));
  for (const auto& [id, pair] : docs) {
    if (pair.q1->rows() != d || pair.q2->rows() != d)
      throw ConfigError("export_embeddings: doc " + id + " does not have hidden size " +
                        std::to_string(d));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
    write_matrix(os, pair.q1);
    write_matrix(os, pair.q2);
  }
}

std::map<std::string, std::map<std::string, double>> load_feature_csv(
    const std::string& path) {
  const auto rows = parse_csv(read_file(path));
  if (rows.size() < 2) throw ParseError("feature csv: need a header and at least one row");
  const auto& header = rows[0];
  const std::size_t id_col = column_of(header, "doc_id", "id");
  std::map<std::string, std::map<std::string, double>> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    if (rows[r].size() != header.size())
      throw ParseError("feature csv row " + std::to_string(r) + ": field count mismatch");
    std::map<std::string, double> values;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == id_col) continue;
      try {
        values[header[c]] = std::stod(rows[r][c]);
      } catch (const std::exception&) {
        throw ParseError("feature csv row " + std::to_string(r) + ": '" + rows[r][c] +
                         "' in column " + header[c] + " is not numeric");
      }
    }
    out[rows[r][id_col]] = std::move(values);
  }
  return out;
}

std::vector<StatementPair> make_synthetic_pairs(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> q1_pool = {
      "i",    "plan",    "to",    "visit", "the",    "market", "on",     "saturday",
      "with", "my",      "friend", "we",   "will",   "walk",   "around", "town",
      "and",  "have",    "lunch", "near",  "old",    "bridge", "before", "heading",
      "home", "morning", "train", "quiet", "street", "corner"};
  static const std::vector<std::string> q2_pool = {
      "you",   "can",    "check",  "my",     "calendar", "tickets", "booked", "already",
      "last",  "week",   "i",      "told",   "everyone", "about",   "it",     "there",
      "are",   "photos", "from",   "before", "plus",     "receipts", "saved", "at",
      "home",  "desk",   "drawer", "since",  "monday",   "evening"};

  Rng rng(seed);
  std::vector<StatementPair> out;
  out.reserve(n);
  auto make_statement = [&rng](const std::vector<std::string>& pool, const char* marker,
                               bool planted) {
    const std::size_t len = 8 + rng.uniform_int(7);
    std::vector<std::string> tokens;
    tokens.reserve(len + 1);
    for (std::size_t i = 0; i < len; ++i) tokens.push_back(pool[rng.uniform_int(pool.size())]);
    if (planted) {
      const std::size_t pos = rng.uniform_int(tokens.size() + 1);
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos), marker);
    }
    std::string text;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) text.push_back(' ');
      text += tokens[i];
    }
    return text;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const bool a = rng.uniform01() < 0.5;
    const bool b = rng.uniform01() < 0.5;
    StatementPair p;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth-%04zu", i);
    p.id = buf;
    p.q1 = make_statement(q1_pool, kSyntheticMarkerQ1, a);
    p.q2 = make_statement(q2_pool, kSyntheticMarkerQ2, b);
    p.label = (a && b) ? 1 : 0;
    p.source = Source::paired;
    out.push_back(std::move(p));
  }
  return out;
}

std::string to_csv(const std::vector<StatementPair>& pairs) {
  std::ostringstream os;
  os << "id,q1,q2,label\n";
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted.push_back('"');
      quoted.push_back(c);
    }
    quoted.push_back('"');
    return quoted;
  };
  for (const auto& p : pairs)
    os << field(p.id) << "," << field(p.q1) << "," << field(p.q2) << "," << p.label << "\n";
  return os.str();
}

}  // namespace deceptlab::data
