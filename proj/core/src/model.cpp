#include "figa/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "figa/error.hpp"

namespace figa {
namespace {

struct Forward {
  std::vector<double> input;   // [E(prev1); E(prev2)]
  std::vector<double> hidden;  // tanh activations
  std::vector<double> logp;
};

int context_token(std::span<const int> seq, std::size_t pos, std::size_t back) {
  return pos >= back ? seq[pos - back] : Vocabulary::kBos;
}

void forward(const ModelParams& params, std::span<const int> seq, std::size_t pos, Forward& f) {
  const ModelDims& d = params.dims();
  const std::size_t in_w = params.input_width();
  f.input.resize(in_w);
  f.hidden.resize(d.hidden);
  f.logp.resize(d.vocab);

  const auto emb = params.embedding();
  for (std::size_t k = 0; k < d.context; ++k) {
    const auto tok = static_cast<std::size_t>(context_token(seq, pos, k + 1));
    std::copy_n(emb.begin() + static_cast<std::ptrdiff_t>(tok * d.embed), d.embed,
                f.input.begin() + static_cast<std::ptrdiff_t>(k * d.embed));
  }

  const auto w1 = params.w1();
  const auto b1 = params.b1();
  for (std::size_t r = 0; r < d.hidden; ++r) {
    double a = b1[r];
    const double* row = w1.data() + r * in_w;
    for (std::size_t c = 0; c < in_w; ++c) a += row[c] * f.input[c];
    f.hidden[r] = std::tanh(a);
  }

  const auto w2 = params.w2();
  const auto b2 = params.b2();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < d.vocab; ++v) {
    double l = b2[v];
    const double* row = w2.data() + v * d.hidden;
    for (std::size_t c = 0; c < d.hidden; ++c) l += row[c] * f.hidden[c];
    f.logp[v] = l;
    mx = std::max(mx, l);
  }
  double sum = 0.0;
  for (double l : f.logp) sum += std::exp(l - mx);
  const double lse = mx + std::log(sum);
  for (double& l : f.logp) l -= lse;
}

// Adds coef · ∂ log π(target | ·) / ∂θ into g.
void backward(const ModelParams& params, std::span<const int> seq, std::size_t pos, int target,
              double coef, const Forward& f, Gradient& g, std::vector<double>& scratch) {
  const ModelDims& d = params.dims();
  const std::size_t in_w = params.input_width();

  auto gw2 = g.w2();
  auto gb2 = g.b2();
  auto dhidden = std::vector<double>(d.hidden, 0.0);
  const auto w2 = params.w2();
  for (std::size_t v = 0; v < d.vocab; ++v) {
    const double dl = coef * ((static_cast<int>(v) == target ? 1.0 : 0.0) - std::exp(f.logp[v]));
    gb2[v] += dl;
    double* grow = gw2.data() + v * d.hidden;
    const double* row = w2.data() + v * d.hidden;
    for (std::size_t c = 0; c < d.hidden; ++c) {
      grow[c] += dl * f.hidden[c];
      dhidden[c] += dl * row[c];
    }
  }

  auto gw1 = g.w1();
  auto gb1 = g.b1();
  scratch.assign(in_w, 0.0);
  const auto w1 = params.w1();
  for (std::size_t r = 0; r < d.hidden; ++r) {
    const double da = dhidden[r] * (1.0 - f.hidden[r] * f.hidden[r]);
    gb1[r] += da;
    double* grow = gw1.data() + r * in_w;
    const double* row = w1.data() + r * in_w;
    for (std::size_t c = 0; c < in_w; ++c) {
      grow[c] += da * f.input[c];
      scratch[c] += da * row[c];
    }
  }

  auto gemb = g.embedding();
  for (std::size_t k = 0; k < d.context; ++k) {
    const auto tok = static_cast<std::size_t>(context_token(seq, pos, k + 1));
    for (std::size_t e = 0; e < d.embed; ++e) gemb[tok * d.embed + e] += scratch[k * d.embed + e];
  }
}

void check_ids(const ModelParams& params, std::span<const int> seq) {
  for (int id : seq)
    if (id < 0 || static_cast<std::size_t>(id) >= params.dims().vocab)
      throw VocabularyError("#" + std::to_string(id));
}

LossReport evaluate(const ModelParams& params, const EncodedRecord& rec, Gradient* g) {
  if (rec.revised.size() != rec.response_start + rec.revised_weights.size() ||
      rec.initial.size() != rec.response_start + rec.initial_weights.size())
    throw StructuralError("record " + rec.id + ": weights do not match response lengths");
  check_ids(params, rec.revised);
  check_ids(params, rec.initial);

  LossReport report;
  Forward f;
  std::vector<double> scratch;
  for (std::size_t t = 0; t < rec.revised_weights.size(); ++t) {
    const double w = rec.revised_weights[t];
    if (w == 0.0) {
      ++report.ignored_tokens;
      continue;
    }
    ++report.encouraged_tokens;
    const std::size_t pos = rec.response_start + t;
    forward(params, rec.revised, pos, f);
    report.encourage_term -= w * f.logp[static_cast<std::size_t>(rec.revised[pos])];
    if (g) backward(params, rec.revised, pos, rec.revised[pos], -w, f, *g, scratch);
  }
  for (std::size_t t = 0; t < rec.initial_weights.size(); ++t) {
    const double w = rec.initial_weights[t];
    if (w == 0.0) {
      ++report.ignored_tokens;
      continue;
    }
    ++report.penalized_tokens;
    const std::size_t pos = rec.response_start + t;
    forward(params, rec.initial, pos, f);
    report.penalty_term += w * f.logp[static_cast<std::size_t>(rec.initial[pos])];
    if (g) backward(params, rec.initial, pos, rec.initial[pos], w, f, *g, scratch);
  }
  report.total = report.encourage_term + report.penalty_term;
  return report;
}

}  // namespace

Vocabulary::Vocabulary() {
  add(kBosToken);
  add(kSepToken);
}

Vocabulary Vocabulary::from_tokens(std::span<const Token> tokens) {
  Vocabulary v;
  for (const auto& t : std::set<Token>(tokens.begin(), tokens.end())) v.add(t);
  return v;
}

int Vocabulary::add(const Token& token) {
  if (const auto it = index_.find(token); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(const Token& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) throw VocabularyError(token);
  return it->second;
}

std::vector<int> Vocabulary::encode(std::span<const Token> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::size_t ModelDims::param_count() const {
  return vocab * embed + hidden * context * embed + hidden + vocab * hidden + vocab;
}

ModelParams::ModelParams(ModelDims dims) : dims_(dims), data_(dims.param_count(), 0.0) {
  if (dims.context != 2) throw ConfigError("the reference model uses a context window of 2");
  if (dims.vocab < 3 || dims.embed == 0 || dims.hidden == 0)
    throw ConfigError("model dimensions must be positive and the vocabulary must hold content");
}

ModelParams ModelParams::random(ModelDims dims, std::uint64_t seed, double scale) {
  ModelParams p(dims);
  std::mt19937_64 rng(seed);
  for (double& x : p.data_) {
    // 53-bit mantissa draw; avoids the implementation-defined real distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = (2.0 * u - 1.0) * scale;
  }
  return p;
}

bool ModelParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::vector<int> conditioned_sequence(std::span<const Token> query, std::span<const Token> response,
                                      const Vocabulary& vocab) {
  std::vector<int> seq = vocab.encode(query);
  seq.push_back(Vocabulary::kSep);
  for (const auto& t : response) seq.push_back(vocab.id(t));
  return seq;
}

EncodedRecord encode(const WeightedRecord& r, const Vocabulary& vocab) {
  if (r.weights.revised_weights.size() != r.revised_tokens.size() ||
      r.weights.initial_weights.size() != r.initial_tokens.size())
    throw StructuralError("record " + r.id + ": weights do not match token counts");
  EncodedRecord e;
  e.id = r.id;
  e.revised = conditioned_sequence(r.query_tokens, r.revised_tokens, vocab);
  e.initial = conditioned_sequence(r.query_tokens, r.initial_tokens, vocab);
  e.response_start = r.query_tokens.size() + 1;
  e.revised_weights = r.weights.revised_weights;
  e.initial_weights = r.weights.initial_weights;
  return e;
}

std::vector<std::vector<double>> log_probs(const ModelParams& params, std::span<const int> sequence,
                                           std::size_t first, std::size_t last) {
  if (first > last || last > sequence.size() + 1)
    throw StructuralError("position range out of bounds");
  check_ids(params, sequence);
  std::vector<std::vector<double>> out;
  out.reserve(last - first);
  Forward f;
  for (std::size_t p = first; p < last; ++p) {
    forward(params, sequence, p, f);
    out.push_back(f.logp);
  }
  return out;
}

LossReport& LossReport::operator+=(const LossReport& o) {
  encourage_term += o.encourage_term;
  penalty_term += o.penalty_term;
  total = encourage_term + penalty_term;
  encouraged_tokens += o.encouraged_tokens;
  penalized_tokens += o.penalized_tokens;
  ignored_tokens += o.ignored_tokens;
  return *this;
}

LossReport figa_loss(const ModelParams& params, const EncodedRecord& record) {
  return evaluate(params, record, nullptr);
}

LossReport figa_loss(const ModelParams& params, const WeightedRecord& record,
                     const Vocabulary& vocab) {
  return evaluate(params, encode(record, vocab), nullptr);
}

double sft_loss(const ModelParams& params, std::span<const int> query, std::span<const int> target) {
  std::vector<int> seq(query.begin(), query.end());
  seq.push_back(Vocabulary::kSep);
  seq.insert(seq.end(), target.begin(), target.end());
  check_ids(params, seq);
  const std::size_t start = query.size() + 1;
  double loss = 0.0;
  Forward f;
  for (std::size_t pos = start; pos < seq.size(); ++pos) {
    forward(params, seq, pos, f);
    loss -= f.logp[static_cast<std::size_t>(seq[pos])];
  }
  return loss;
}

double sft_loss(const ModelParams& params, std::span<const Token> query,
                std::span<const Token> target, const Vocabulary& vocab) {
  return sft_loss(params, vocab.encode(query), vocab.encode(target));
}

Gradient grad(const ModelParams& params, const EncodedRecord& record, LossReport* report) {
  Gradient g(params.dims());
  const LossReport r = evaluate(params, record, &g);
  if (report) *report = r;
  return g;
}

}  // namespace figa
