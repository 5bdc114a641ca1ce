#include "deceptlab/explain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace deceptlab::explain {

namespace {

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join_kept(const std::vector<std::string>& tokens,
                      const std::vector<std::uint8_t>& mask, std::size_t offset) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!mask[offset + i]) continue;
    if (!text.empty()) text.push_back(' ');
    text += tokens[i];
  }
  return text;
}

// Solve A x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-300)
      throw DomainError("fit_surrogate: singular design matrix");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

// Weighted Gram accumulation so selection and solving never re-touch the
// sample matrix.
struct GramSystem {
  std::size_t n_features = 0;
  double sw = 0, swy = 0, swyy = 0;
  std::vector<double> colw;             // sum w x_f
  std::vector<double> xy;               // sum w x_f y
  std::vector<std::vector<double>> xx;  // sum w x_f x_g

  struct Fit {
    std::vector<double> beta;  // beta[0] = intercept
    double sse = 0;
  };

  Fit solve(const std::vector<std::size_t>& sel, double lambda) const {
    const std::size_t s = sel.size();
    std::vector<std::vector<double>> a(s + 1, std::vector<double>(s + 1, 0.0));
    std::vector<double> b(s + 1, 0.0);
    a[0][0] = sw;
    b[0] = swy;
    for (std::size_t i = 0; i < s; ++i) {
      a[0][i + 1] = a[i + 1][0] = colw[sel[i]];
      b[i + 1] = xy[sel[i]];
      for (std::size_t j = 0; j < s; ++j) a[i + 1][j + 1] = xx[sel[i]][sel[j]];
      a[i + 1][i + 1] += lambda;
    }
    Fit fit;
    fit.beta = solve_linear(a, b);
    // SSE = y'Wy - 2 b'beta + beta' A0 beta with the un-ridged Gram.
    double quad = sw * fit.beta[0] * fit.beta[0];
    for (std::size_t i = 0; i < s; ++i) {
      quad += 2.0 * colw[sel[i]] * fit.beta[0] * fit.beta[i + 1];
      for (std::size_t j = 0; j < s; ++j)
        quad += fit.beta[i + 1] * fit.beta[j + 1] * xx[sel[i]][sel[j]];
    }
    double lin = swy * fit.beta[0];
    for (std::size_t i = 0; i < s; ++i) lin += xy[sel[i]] * fit.beta[i + 1];
    fit.sse = swyy - 2.0 * lin + quad;
    return fit;
  }
};

}  // namespace

std::vector<std::vector<std::uint8_t>> perturb(std::size_t n_tokens, std::size_t n_samples,
                                               Rng& rng) {
  if (n_tokens == 0) throw DomainError("perturb: no tokens to perturb");
  if (n_samples == 0) throw DomainError("perturb: n_samples must be >= 1");
  std::vector<std::vector<std::uint8_t>> masks;
  masks.reserve(n_samples);
  masks.emplace_back(n_tokens, 1);  // identity first
  std::vector<std::size_t> positions(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) positions[i] = i;
  for (std::size_t s = 1; s < n_samples; ++s) {
    const std::size_t drop = 1 + rng.uniform_int(n_tokens);
    rng.shuffle(positions);
    std::vector<std::uint8_t> mask(n_tokens, 1);
    for (std::size_t i = 0; i < drop; ++i) mask[positions[i]] = 0;
    masks.push_back(std::move(mask));
  }
  return masks;
}

double proximity(const std::vector<std::uint8_t>& mask, double sigma) {
  const double n = static_cast<double>(mask.size());
  double kept = 0;
  for (auto b : mask) kept += b ? 1.0 : 0.0;
  const double cos_sim = kept > 0 ? std::sqrt(kept / n) : 0.0;
  const double dist = 1.0 - cos_sim;
  return std::exp(-dist * dist / (sigma * sigma));
}

Explanation fit_surrogate(const std::vector<PerturbationSample>& samples,
                          const std::vector<std::string>& tokens, std::size_t max_features,
                          double ridge_lambda) {
  const std::size_t n_features = tokens.size();
  if (samples.size() < max_features + 1)
    throw ContractError("fit_surrogate: need at least max_features + 1 samples");
  bool any_differs = false;
  for (const auto& s : samples) {
    if (s.mask.size() != n_features)
      throw ContractError("fit_surrogate: mask width does not match token count");
    any_differs = any_differs || s.mask != samples[0].mask;
  }
  if (!any_differs) throw DomainError("fit_surrogate: all perturbation masks are identical");

  GramSystem gram;
  gram.n_features = n_features;
  gram.colw.assign(n_features, 0.0);
  gram.xy.assign(n_features, 0.0);
  gram.xx.assign(n_features, std::vector<double>(n_features, 0.0));
  for (const auto& s : samples) {
    const double w = s.proximity_weight;
    const double y = s.model_prob;
    gram.sw += w;
    gram.swy += w * y;
    gram.swyy += w * y * y;
    for (std::size_t f = 0; f < n_features; ++f) {
      if (!s.mask[f]) continue;
      gram.colw[f] += w;
      gram.xy[f] += w * y;
      auto& row = gram.xx[f];
      for (std::size_t g = 0; g < n_features; ++g)
        if (s.mask[g]) row[g] += w;
    }
  }

  // Greedy forward selection on weighted SSE.
  std::vector<std::size_t> selected;
  std::vector<bool> used(n_features, false);
  const std::size_t budget = std::min(max_features, n_features);
  while (selected.size() < budget) {
    double best_sse = 0;
    std::size_t best_f = n_features;
    for (std::size_t f = 0; f < n_features; ++f) {
      if (used[f]) continue;
      auto trial = selected;
      trial.push_back(f);
      const double sse = gram.solve(trial, ridge_lambda).sse;
      if (best_f == n_features || sse < best_sse) {
        best_sse = sse;
        best_f = f;
      }
    }
    selected.push_back(best_f);
    used[best_f] = true;
  }
  std::sort(selected.begin(), selected.end());

  const auto fit = gram.solve(selected, ridge_lambda);
  Explanation e;
  e.intercept = fit.beta[0];
  const double sst = gram.swyy - gram.swy * gram.swy / gram.sw;
  e.local_fidelity_r2 = sst > 0 ? 1.0 - fit.sse / sst : 1.0;
  e.predicted_prob = samples[0].model_prob;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    TokenWeight tw;
    tw.token = tokens[selected[i]];
    tw.weight = fit.beta[i + 1];
    tw.index = selected[i];
    e.token_weights.push_back(std::move(tw));
  }
  std::sort(e.token_weights.begin(), e.token_weights.end(),
            [](const TokenWeight& a, const TokenWeight& b) {
              return std::abs(a.weight) != std::abs(b.weight)
                         ? std::abs(a.weight) > std::abs(b.weight)
                         : a.index < b.index;
            });
  return e;
}

Target target_from_string(const std::string& name) {
  if (name == "q1") return Target::q1;
  if (name == "q2") return Target::q2;
  if (name == "both") return Target::both;
  throw ConfigError("unknown explain target: " + name);
}

std::string to_string(Target t) {
  switch (t) {
    case Target::q1: return "q1";
    case Target::q2: return "q2";
    case Target::both: return "both";
  }
  return "?";
}

Explanation explain_pair(const Model& model, const data::Vocabulary& vocab,
                         const data::StatementPair& pair, const ExplainOptions& options) {
  const auto& cfg = model.config();
  const bool paired = cfg.paired();
  if (!paired && options.target != Target::q1)
    throw ContractError("explain: single-statement architectures only support --target q1");
  if (cfg.architecture == Architecture::coatt_liwc && !options.lexicon_features)
    throw ContractError("explain: coatt_liwc needs a lexicon feature extractor");

  const auto q1_tokens = whitespace_tokens(pair.q1);
  const auto q2_tokens = whitespace_tokens(pair.q2);
  const bool perturb_q1 = options.target != Target::q2;
  const bool perturb_q2 = paired && options.target != Target::q1;

  std::vector<std::string> joint;
  if (perturb_q1) joint.insert(joint.end(), q1_tokens.begin(), q1_tokens.end());
  if (perturb_q2) joint.insert(joint.end(), q2_tokens.begin(), q2_tokens.end());
  if (joint.empty()) throw DomainError("explain: no tokens in the perturbation target");
  const std::size_t q1_span = perturb_q1 ? q1_tokens.size() : 0;

  Rng rng(options.seed);
  auto masks = perturb(joint.size(), options.n_samples, rng);

  std::vector<double> probs(masks.size());
  std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
  for (long long i = 0; i < static_cast<long long>(masks.size()); ++i) {
    try {
      const auto& mask = masks[static_cast<std::size_t>(i)];
      const std::string q1_text =
          perturb_q1 ? join_kept(q1_tokens, mask, 0) : pair.q1;
      const std::string q2_text =
          perturb_q2 ? join_kept(q2_tokens, mask, q1_span) : pair.q2;
      const auto q1_enc = data::encode(q1_text, vocab, cfg.max_len_q1);
      const auto q2_enc = data::encode(q2_text, vocab, cfg.max_len_q2);
      std::vector<double> lex;
      if (cfg.architecture == Architecture::coatt_liwc) lex = options.lexicon_features(q1_text);
      const auto out = model.forward(q1_enc, paired ? &q2_enc : nullptr,
                                     cfg.architecture == Architecture::coatt_liwc ? &lex
                                                                                  : nullptr);
      probs[static_cast<std::size_t>(i)] = out.probability;
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(deceptlab_explain_error)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<PerturbationSample> samples;
  samples.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    PerturbationSample s;
    s.mask = std::move(masks[i]);
    s.model_prob = probs[i];
    s.proximity_weight = proximity(s.mask, options.kernel_sigma);
    samples.push_back(std::move(s));
  }

  auto e = fit_surrogate(samples, joint, options.max_features, options.ridge_lambda);
  for (auto& tw : e.token_weights) tw.statement = (perturb_q1 && tw.index < q1_span) ? 0 : 1;
  return e;
}

nlohmann::json explanation_to_json(const Explanation& e, const data::StatementPair& pair,
                                   const ExplainOptions& options) {
  nlohmann::json j;
  j["doc_id"] = pair.id;
  j["class_names"] = {kClassNames[0], kClassNames[1]};
  j["predicted_prob"] = e.predicted_prob;
  j["intercept"] = e.intercept;
  j["local_fidelity_r2"] = e.local_fidelity_r2;
  j["n_samples"] = options.n_samples;
  j["seed"] = options.seed;
  j["target"] = to_string(options.target);
  j["tokens"] = nlohmann::json::array();
  for (const auto& tw : e.token_weights)
    j["tokens"].push_back({{"token", tw.token},
                           {"weight", tw.weight},
                           {"statement", tw.statement == 0 ? "q1" : "q2"},
                           {"index", tw.index}});
  return j;
}

namespace {

std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void render_statement(std::ostringstream& os, const std::string& title,
                      const std::vector<std::string>& tokens,
                      const std::vector<double>& weights, double max_abs) {
  os << "  <h3>" << html_escape(title) << "</h3>\n  <p class=\"stmt\">";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) {
      os << html_escape(tokens[i]) << " ";
      continue;
    }
    const double alpha = max_abs > 0 ? std::min(1.0, std::abs(w) / max_abs) : 0.0;
    const char* rgb = w > 0 ? "255,140,0" : "30,100,255";  // orange deceptive, blue truthful
    os << "<span style=\"background: rgba(" << rgb << "," << 0.15 + 0.7 * alpha
       << ")\" title=\"" << w << "\">" << html_escape(tokens[i]) << "</span> ";
  }
  os << "</p>\n";
}

}  // namespace

std::string explanation_to_html(const Explanation& e, const data::StatementPair& pair,
                                const ExplainOptions& options) {
  const auto q1_tokens = whitespace_tokens(pair.q1);
  const auto q2_tokens = whitespace_tokens(pair.q2);
  const bool perturb_q1 = options.target != Target::q2;
  const std::size_t q1_span = perturb_q1 ? q1_tokens.size() : 0;

  std::vector<double> w1(q1_tokens.size(), 0.0), w2(q2_tokens.size(), 0.0);
  double max_abs = 0;
  for (const auto& tw : e.token_weights) max_abs = std::max(max_abs, std::abs(tw.weight));
  for (const auto& tw : e.token_weights) {
    if (tw.statement == 0) {
      if (tw.index < w1.size()) w1[tw.index] = tw.weight;
    } else {
      const std::size_t local = tw.index >= q1_span ? tw.index - q1_span : tw.index;
      if (local < w2.size()) w2[local] = tw.weight;
    }
  }

  std::ostringstream os;
  os << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Explanation "
     << html_escape(pair.id) << "</title>\n"
     << "<style>body{font-family:sans-serif;max-width:48em;margin:2em auto;}"
     << ".stmt{line-height:1.8;}.legend span{padding:0 .5em;}</style>\n</head>\n<body>\n"
     << "  <h2>Local explanation for " << html_escape(pair.id) << "</h2>\n"
     << "  <p>P(deceptive) = " << e.predicted_prob
     << ", local fit R&sup2; = " << e.local_fidelity_r2 << "</p>\n"
     << "  <p class=\"legend\"><span style=\"background: rgba(255,140,0,0.6)\">deceptive</span>"
     << "<span style=\"background: rgba(30,100,255,0.6)\">truthful</span></p>\n";
  render_statement(os, "Q1", q1_tokens, w1, max_abs);
  if (!q2_tokens.empty()) render_statement(os, "Q2", q2_tokens, w2, max_abs);
  os << "</body>\n</html>\n";
  return os.str();
}

}  // namespace deceptlab::explain
