#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "deceptlab/data.hpp"
#include "deceptlab/train.hpp"

using namespace deceptlab;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream os(path, std::ios::binary);
  os << content;
  return path;
}

}  // namespace

TEST_CASE("csv parser handles quoting, embedded separators and CRLF") {
  const auto rows = data::parse_csv("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\"two\nlines\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1] == std::vector<std::string>{"x,1", "say \"hi\"", "two\nlines"});
  CHECK_THROWS_AS(data::parse_csv("a,\"unterminated\n"), ParseError);
}

TEST_CASE("load_paired accepts csv and jsonl") {
  const auto csv = write_temp("pairs.csv",
                              "id,q1,q2,label\n"
                              "a,\"I will go, truly\",proof here,deceptive\n"
                              "b,second text,more,truthful\n"
                              "c,third,stuff,1\n"
                              "d,fourth,thing,0\n");
  auto pairs = data::load_paired(csv.string());
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].id == "a");
  CHECK(pairs[0].q1 == "I will go, truly");
  CHECK(pairs[0].label == 1);
  CHECK(pairs[1].label == 0);
  CHECK(pairs[2].label == 1);

  const auto jsonl = write_temp(
      "pairs.jsonl",
      R"({"id":"x","q1":"hello there","q2":"ok","label":"deceptive"})" "\n"
      R"({"id":"y","q1":"more text","q2":"fine","label":0})" "\n");
  auto jl = data::load_paired(jsonl.string());
  REQUIRE(jl.size() == 2);
  CHECK(jl[0].label == 1);
  CHECK(jl[1].label == 0);
}

TEST_CASE("loader failures name the row") {
  const auto bad_label = write_temp("bad_label.csv", "id,q1,q2,label\na,text,other,maybe\n");
  CHECK_THROWS_WITH_AS(data::load_paired(bad_label.string()), doctest::Contains("row 1"),
                       ParseError);

  const auto empty_q1 = write_temp("empty_q1.csv", "id,q1,q2,label\na,,other,1\n");
  CHECK_THROWS_AS(data::load_paired(empty_q1.string()), ParseError);

  const auto missing_col = write_temp("missing.csv", "id,q1,label\na,text,1\n");
  CHECK_THROWS_AS(data::load_paired(missing_col.string()), ParseError);

  CHECK_THROWS_AS(data::load_paired("/nonexistent/nowhere.csv"), IoError);
}

TEST_CASE("open-domain statements split at the token midpoint") {
  const auto f = write_temp("open.csv",
                            "id,text,label\n"
                            "a,t1 t2 t3 t4 t5 t6 t7 t8 t9 t10,1\n"
                            "b,u1 u2 u3 u4 u5 u6 u7 u8 u9 u10 u11,0\n");
  auto pairs = data::load_open_domain(f.string());
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].q1 == "t1 t2 t3 t4 t5");
  CHECK(pairs[0].q2 == "t6 t7 t8 t9 t10");
  CHECK(pairs[1].q1 == "u1 u2 u3 u4 u5 u6");  // odd length: q1 takes the extra token
  CHECK(pairs[1].q2 == "u7 u8 u9 u10 u11");
  CHECK(pairs[0].source == data::Source::open_domain);
}

TEST_CASE("vocabulary reserves pad and unknown, encodes with padding") {
  auto vocab = data::build_vocab({"the cat sat", "the dog sat down"});
  CHECK(vocab.token_to_id.at("<pad>") == 0);
  CHECK(vocab.token_to_id.at("<unk>") == 1);
  CHECK(vocab.id_of("zebra") == data::Vocabulary::kUnknown);

  auto enc = data::encode("the cat naps", vocab, 5);
  CHECK(enc.ids.size() == 5);
  CHECK(enc.mask == ops::Mask{1, 1, 1, 0, 0});
  CHECK(enc.ids[0] == vocab.token_to_id.at("the"));
  CHECK(enc.ids[2] == data::Vocabulary::kUnknown);  // naps unseen
  CHECK(enc.ids[3] == data::Vocabulary::kPad);

  auto truncated = data::encode("the dog sat down the cat", vocab, 3);
  CHECK(truncated.mask == ops::Mask{1, 1, 1});

  CHECK_THROWS_AS(data::build_vocab({}), ConfigError);

  // Determinism: same corpus, same vocabulary.
  auto again = data::build_vocab({"the cat sat", "the dog sat down"});
  CHECK(vocab.id_to_token == again.id_to_token);
}

TEST_CASE("no test-fold token ever enters a training vocabulary") {
  // Plant a token that exists in exactly one document; whenever that
  // document lands in the test fold, the training vocabulary must miss it.
  std::vector<std::string> texts;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    texts.push_back(i == 17 ? "common words plus plantedxyzzy"
                            : "common words number " + std::to_string(i));
    labels.push_back(i % 2);
  }
  Rng rng(5);
  auto folds = train::stratified_folds(labels, 5, rng);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const bool planted_in_test =
        std::find(folds[f].begin(), folds[f].end(), 17) != folds[f].end();
    if (!planted_in_test) continue;
    std::vector<std::string> train_texts;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f)
        for (std::size_t idx : folds[g]) train_texts.push_back(texts[idx]);
    auto vocab = data::build_vocab(train_texts);
    CHECK(vocab.token_to_id.find("plantedxyzzy") == vocab.token_to_id.end());
  }
}

TEST_CASE("embedding file round-trip is bit-identical") {
  std::map<std::string, data::EmbeddedPair> docs;
  Rng rng(8);
  for (const char* id : {"doc-a", "doc-b"}) {
    data::EmbeddedPair pair;
    pair.q1 = Tensor::zeros(6, 4);
    pair.q2 = Tensor::zeros(6, 3);
    // float-representable values so the f32 disk format is lossless
    for (double& v : pair.q1->data) v = static_cast<float>(rng.uniform(-1, 1));
    for (double& v : pair.q2->data) v = static_cast<float>(rng.uniform(-1, 1));
    docs[id] = std::move(pair);
  }
  const auto path = (fs::temp_directory_path() / "emb.vemb").string();
  data::export_embeddings(path, 6, docs);
  auto loaded = data::import_embeddings(path);
  CHECK(loaded.d == 6);
  REQUIRE(loaded.docs.size() == 2);
  for (const auto& [id, pair] : docs) {
    CHECK(loaded.docs.at(id).q1->data == pair.q1->data);
    CHECK(loaded.docs.at(id).q2->data == pair.q2->data);
    CHECK(loaded.docs.at(id).q1->cols() == 4);
  }

  const auto garbage = write_temp("bad.vemb", "NOPE....");
  CHECK_THROWS_AS(data::import_embeddings(garbage.string()), ParseError);
}

TEST_CASE("synthetic corpus encodes the planted co-occurrence rule") {
  auto pairs = data::make_synthetic_pairs(500, 99);
  REQUIRE(pairs.size() == 500);
  std::size_t positives = 0;
  for (const auto& p : pairs) {
    const bool a = p.q1.find(data::kSyntheticMarkerQ1) != std::string::npos;
    const bool b = p.q2.find(data::kSyntheticMarkerQ2) != std::string::npos;
    CHECK(p.label == ((a && b) ? 1 : 0));
    positives += p.label;
  }
  // Bernoulli(1/4) of 500
  CHECK(positives > 80);
  CHECK(positives < 170);

  auto again = data::make_synthetic_pairs(500, 99);
  CHECK(again[123].q1 == pairs[123].q1);

  // Round-trips through the CSV writer and loader.
  const auto path = write_temp("synth.csv", data::to_csv(pairs));
  auto loaded = data::load_paired(path.string());
  REQUIRE(loaded.size() == pairs.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].q1 == pairs[i].q1);
    CHECK(loaded[i].label == pairs[i].label);
  }
}

TEST_CASE("feature csv import") {
  const auto f = write_temp("features.csv",
                            "doc_id,ingestion,reward\n"
                            "a,1.25,0\n"
                            "b,0.5,2.75\n");
  auto features = data::load_feature_csv(f.string());
  REQUIRE(features.size() == 2);
  CHECK(features.at("a").at("ingestion") == 1.25);
  CHECK(features.at("b").at("reward") == 2.75);

  const auto bad = write_temp("features_bad.csv", "doc_id,x\na,notanumber\n");
  CHECK_THROWS_AS(data::load_feature_csv(bad.string()), ParseError);
}
