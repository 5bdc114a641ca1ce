#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deceptlab/data.hpp"
#include "deceptlab/linguistics.hpp"

namespace deceptlab::analysis {

// Per-document lexicon features for the whole corpus: either extracted from
// a dictionary over q1 + q2, or imported (pass-through, e.g. for composite
// categories no dictionary can produce).
std::vector<linguistics::FeatureVector> corpus_features(
    const std::vector<data::StatementPair>& pairs, const linguistics::LexiconDictionary& dict);

// Full report: summary text statistics with Welch t-tests (BH-corrected),
// the Jaccard vocabulary-overlap triplet, and the two correlation tables.
nlohmann::json analyze_corpus(
    const std::vector<data::StatementPair>& pairs,
    const linguistics::LexiconDictionary* dict,
    const std::map<std::string, std::map<std::string, double>>* imported_features,
    double alpha = 0.05);

}  // namespace deceptlab::analysis
