#include "deceptlab/analysis.hpp"

#include <cmath>
#include <set>

namespace deceptlab::analysis {

using nlohmann::json;

std::vector<linguistics::FeatureVector> corpus_features(
    const std::vector<data::StatementPair>& pairs,
    const linguistics::LexiconDictionary& dict) {
  std::vector<linguistics::FeatureVector> out(pairs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (long long i = 0; i < static_cast<long long>(pairs.size()); ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    auto fv = linguistics::extract_features(
        p.q2.empty() ? p.q1 : p.q1 + " " + p.q2, dict);
    fv.doc_id = p.id;
    out[static_cast<std::size_t>(i)] = std::move(fv);
  }
  return out;
}

namespace {

struct StatColumn {
  std::vector<double> truthful, deceptive;
  void push(int label, double v) { (label == 1 ? deceptive : truthful).push_back(v); }
};

json mean_std(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.empty() ? 1.0 : static_cast<double>(v.size());
  double sq = 0;
  for (double x : v) sq += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
  return json{{"mean", mean}, {"std", sd}};
}

json textstats_section(const std::vector<data::StatementPair>& pairs, double alpha) {
  const char* segments[3] = {"q1", "q2", "q1_and_q2"};
  const char* metrics[4] = {"syllable_count", "lexicon_count", "sentence_count",
                            "difficult_words"};
  std::map<std::string, StatColumn> columns;  // "segment/metric"
  for (const auto& p : pairs) {
    const std::string texts[3] = {p.q1, p.q2, p.q2.empty() ? p.q1 : p.q1 + " " + p.q2};
    for (int s = 0; s < 3; ++s) {
      const auto st = linguistics::text_stats(texts[s]);
      const double values[4] = {
          static_cast<double>(st.syllable_count), static_cast<double>(st.lexicon_count),
          static_cast<double>(st.sentence_count), static_cast<double>(st.difficult_words)};
      for (int m = 0; m < 4; ++m)
        columns[std::string(segments[s]) + "/" + metrics[m]].push(p.label, values[m]);
    }
  }

  std::vector<std::string> keys;
  std::vector<double> p_values;
  json section;
  for (auto& [key, col] : columns) {
    const auto slash = key.find('/');
    json cell;
    cell["truthful"] = mean_std(col.truthful);
    cell["deceptive"] = mean_std(col.deceptive);
    try {
      const auto tt = linguistics::ttest_independent(col.truthful, col.deceptive);
      cell["t"] = tt.t;
      cell["p"] = tt.p;
      keys.push_back(key);
      p_values.push_back(tt.p);
    } catch (const DomainError& e) {
      cell["degenerate"] = e.what();
    }
    section[key.substr(0, slash)][key.substr(slash + 1)] = cell;
  }
  const auto bh = linguistics::benjamini_hochberg(p_values, alpha);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto slash = keys[i].find('/');
    auto& cell = section[keys[i].substr(0, slash)][keys[i].substr(slash + 1)];
    cell["p_adjusted"] = bh.p_adjusted[i];
    cell["significant"] = static_cast<bool>(bh.significant[i]);
  }
  return section;
}

json jaccard_section(const std::vector<data::StatementPair>& pairs) {
  // Vocabulary sets: unique lowercase word tokens, punctuation excluded.
  std::set<std::string> t_q1, t_q2, t_all, d_q1, d_q2, d_all;
  for (const auto& p : pairs) {
    auto& q1 = p.label == 1 ? d_q1 : t_q1;
    auto& q2 = p.label == 1 ? d_q2 : t_q2;
    auto& all = p.label == 1 ? d_all : t_all;
    for (auto& w : linguistics::word_tokens(p.q1)) {
      q1.insert(w);
      all.insert(w);
    }
    for (auto& w : linguistics::word_tokens(p.q2)) {
      q2.insert(w);
      all.insert(w);
    }
  }
  json out;
  out["q1_and_q2"] = linguistics::jaccard(t_all, d_all);
  out["q1"] = linguistics::jaccard(t_q1, d_q1);
  out["q2"] = (t_q2.empty() && d_q2.empty()) ? json() : json(linguistics::jaccard(t_q2, d_q2));
  return out;
}

json correlation_section(const std::vector<data::StatementPair>& pairs,
                         const linguistics::LexiconDictionary* dict,
                         const std::map<std::string, std::map<std::string, double>>* imported,
                         double alpha) {
  std::vector<linguistics::FeatureVector> features;
  json out;
  if (imported) {
    out["features_source"] = "imported";
    features.reserve(pairs.size());
    for (const auto& p : pairs) {
      auto it = imported->find(p.id);
      if (it == imported->end())
        throw LookupError("feature csv is missing doc '" + p.id + "'");
      linguistics::FeatureVector fv;
      fv.doc_id = p.id;
      fv.values = it->second;
      features.push_back(std::move(fv));
    }
  } else {
    out["features_source"] = "dictionary";
    features = corpus_features(pairs, *dict);
  }
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const auto& p : pairs) labels.push_back(p.label);

  const auto report = linguistics::correlation_report(features, labels, alpha);
  auto rows = [](const std::vector<linguistics::CorrelationRow>& table) {
    json arr = json::array();
    for (const auto& row : table)
      arr.push_back({{"feature", row.feature},
                     {"r", row.r_pb},
                     {"p", row.p_value},
                     {"p_adjusted", row.p_adjusted}});
    return arr;
  };
  out["truthful"] = rows(report.truthful);
  out["deceptive"] = rows(report.deceptive);
  out["skipped"] = report.skipped;
  return out;
}

}  // namespace

json analyze_corpus(const std::vector<data::StatementPair>& pairs,
                    const linguistics::LexiconDictionary* dict,
                    const std::map<std::string, std::map<std::string, double>>* imported,
                    double alpha) {
  if (pairs.empty()) throw ContractError("analyze: empty corpus");
  if (!dict && !imported)
    throw ConfigError("analyze: need a lexicon dictionary or an imported feature csv");
  json report;
  report["alpha"] = alpha;
  report["n_documents"] = pairs.size();
  report["textstats"] = textstats_section(pairs, alpha);
  report["jaccard"] = jaccard_section(pairs);
  report["correlations"] = correlation_section(pairs, dict, imported, alpha);
  return report;
}

}  // namespace deceptlab::analysis
