#include "figa/train.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "figa/error.hpp"

namespace figa {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  const T le = to_little(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof le);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw StructuralError("checkpoint is truncated");
  return to_little(v);
}

double global_norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

LossReport dataset_loss(const ModelParams& params, const std::vector<EncodedRecord>& data) {
  LossReport sum;
  for (const auto& r : data) sum += figa_loss(params, r);
  return sum;
}

}  // namespace

void seeded_shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

TrainResult train(ModelParams params, const std::vector<EncodedRecord>& dataset,
                  const TrainOptions& options) {
  if (dataset.empty()) throw ConfigError("training needs a nonempty dataset");
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(options.lr >= 0.0) || !std::isfinite(options.lr)) throw ConfigError("lr must be >= 0");

  TrainResult result;
  std::vector<std::size_t> order(dataset.size());
  Gradient batch_grad(params.dims());

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    seeded_shuffle(order, options.seed + epoch);

    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      auto acc = batch_grad.flat();
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const EncodedRecord& rec = dataset[order[k]];
        LossReport loss;
        const Gradient g = grad(params, rec, &loss);
        if (!std::isfinite(loss.total))
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                                ", record " + rec.id);
        const auto gf = g.flat();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gf[i];
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (double& x : acc) x *= inv;

      double scale = options.lr;
      if (options.clip > 0.0) {
        const double norm = global_norm(acc);
        if (norm > options.clip) scale *= options.clip / norm;
      }
      auto p = params.flat();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * acc[i];
      if (!params.all_finite())
        throw DivergenceError("non-finite parameters at epoch " + std::to_string(epoch) +
                              ", record " + dataset[order[start]].id);
    }
    result.trace.push_back({epoch, dataset_loss(params, dataset)});
  }
  result.params = std::move(params);
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot write checkpoint " + path.string());
  const ModelDims& d = params.dims();
  for (std::uint64_t v : {d.vocab, d.embed, d.hidden, d.context}) put<std::uint64_t>(out, v);
  for (double x : params.flat()) put<double>(out, x);
  if (!out) throw StructuralError("failed writing checkpoint " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot read checkpoint " + path.string());
  ModelDims d;
  d.vocab = get<std::uint64_t>(in);
  d.embed = get<std::uint64_t>(in);
  d.hidden = get<std::uint64_t>(in);
  d.context = get<std::uint64_t>(in);
  constexpr std::uint64_t kSane = 1u << 24;
  if (d.vocab > kSane || d.embed > kSane || d.hidden > kSane)
    throw StructuralError("checkpoint header has implausible dimensions");
  ModelParams p(d);
  for (double& x : p.flat()) x = get<double>(in);
  if (in.peek() != std::char_traits<char>::eof())
    throw StructuralError("checkpoint has trailing bytes");
  return p;
}

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
  return checkpoint.string() + ".manifest";
}

void save_manifest(const std::filesystem::path& path, const CheckpointManifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot write manifest " + path.string());
  out << "format=figa-checkpoint-v1\n"
      << "seed=" << m.seed << '\n'
      << "config_hash=" << m.config_hash << '\n'
      << "baseline=" << m.baseline << '\n'
      << "vocab_size=" << m.vocabulary.size() << '\n'
      << "[vocabulary]\n";
  for (const auto& t : m.vocabulary) out << t << '\n';
}

CheckpointManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot read manifest " + path.string());
  CheckpointManifest m;
  std::string line;
  bool in_vocab = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (in_vocab) {
      m.vocabulary.push_back(line);
      continue;
    }
    if (line == "[vocabulary]") {
      in_vocab = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "seed") m.seed = std::stoull(value);
    else if (key == "config_hash") m.config_hash = value;
    else if (key == "baseline") m.baseline = value;
    else if (key == "vocab_size") expected = std::stoull(value);
  }
  if (m.vocabulary.size() != expected)
    throw StructuralError("manifest vocabulary has " + std::to_string(m.vocabulary.size()) +
                          " entries, header says " + std::to_string(expected));
  return m;
}

void write_weighted_records(const std::filesystem::path& path,
                            const std::vector<WeightedRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["query_tokens"] = r.query_tokens;
    j["revised_tokens"] = r.revised_tokens;
    j["initial_tokens"] = r.initial_tokens;
    j["revised_weights"] = r.weights.revised_weights;
    j["initial_weights"] = r.weights.initial_weights;
    out << j.dump() << '\n';
  }
}

std::vector<WeightedRecord> read_weighted_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string(), 0);
  std::vector<WeightedRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      WeightedRecord r;
      r.id = j.at("id").get<std::string>();
      r.query_tokens = j.at("query_tokens").get<TokenSeq>();
      r.revised_tokens = j.at("revised_tokens").get<TokenSeq>();
      r.initial_tokens = j.at("initial_tokens").get<TokenSeq>();
      r.weights.revised_weights = j.at("revised_weights").get<std::vector<double>>();
      r.weights.initial_weights = j.at("initial_weights").get<std::vector<double>>();
      if (r.weights.revised_weights.size() != r.revised_tokens.size() ||
          r.weights.initial_weights.size() != r.initial_tokens.size())
        throw IngestionError("weight count does not match token count", lineno);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(e.what(), lineno);
    }
  }
  return out;
}

Vocabulary vocabulary_for(const std::vector<WeightedRecord>& records) {
  TokenSeq all;
  for (const auto& r : records) {
    all.insert(all.end(), r.query_tokens.begin(), r.query_tokens.end());
    all.insert(all.end(), r.revised_tokens.begin(), r.revised_tokens.end());
    all.insert(all.end(), r.initial_tokens.begin(), r.initial_tokens.end());
  }
  return Vocabulary::from_tokens(all);
}

}  // namespace figa
